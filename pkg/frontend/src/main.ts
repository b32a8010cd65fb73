// Page wiring: a hash-routed single page with a home view (job form,
// class table, density panels) and a per-job view (state, slider,
// gallery). All state is rebuilt from the latest responses.

import { Api, ApiError, ClassList, JobView, createApi } from "./api.js";
import { renderClassRow, uploadAnchor } from "./anchors.js";
import { renderCalibratePrompt, renderDensity } from "./density.js";
import { renderGallery } from "./gallery.js";
import { bindJobForm } from "./jobForm.js";
import { JobPoller } from "./poller.js";
import { bindLevelSlider, setSliderState, sliderEnabled } from "./slider.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

async function refreshDensity(api: Api, panel: HTMLElement, className: string, level?: number) {
  try {
    renderDensity(panel, await api.density(className, 20, level));
  } catch (exc) {
    if (exc instanceof ApiError && (exc.status === 404 || exc.status === 409)) {
      renderCalibratePrompt(panel, className, () => {
        void api.calibrate(className).then(() => refreshDensity(api, panel, className, level));
      });
    } else {
      panel.replaceChildren(el("p", "panel-error", "density unavailable"));
    }
  }
}

function renderHome(root: HTMLElement, api: Api): void {
  root.replaceChildren();
  const page = el("div", "page home");
  const form = el("form", "job-form") as HTMLFormElement;
  form.innerHTML = `
    <h2>Start a curation job</h2>
    <label>keyword <input name="keyword" type="text" autocomplete="off"></label>
    <label>count <input name="count" type="number" value="10" min="1"></label>
    <label>level <input name="level" type="range" min="1" max="5" step="1" value="3">
      <output name="level-echo">3</output></label>
    <button type="submit">submit</button>
    <p class="form-error" role="alert"></p>`;
  const levelInput = form.elements.namedItem("level") as HTMLInputElement;
  const levelEcho = form.querySelector("output")!;
  levelInput.addEventListener("input", () => { levelEcho.textContent = levelInput.value; });
  bindJobForm(form, api, (jobId) => { window.location.hash = `#/jobs/${jobId}`; });
  page.appendChild(form);

  const classesSection = el("section", "classes");
  classesSection.appendChild(el("h2", "", "Classes"));
  const table = el("table", "class-table");
  table.innerHTML = "<thead><tr><th>class</th><th>anchor</th><th>profile</th></tr></thead>";
  const tbody = document.createElement("tbody");
  table.appendChild(tbody);
  classesSection.appendChild(table);
  const panels = el("div", "density-panels");
  classesSection.appendChild(panels);
  page.appendChild(classesSection);
  root.appendChild(page);

  void api.listClasses().then((list: ClassList) => {
    tbody.replaceChildren();
    panels.replaceChildren();
    for (const row of list.classes) {
      const tr = renderClassRow(row);
      const upload = document.createElement("td");
      const picker = document.createElement("input");
      picker.type = "file";
      picker.accept = "image/*";
      picker.addEventListener("change", async () => {
        const file = picker.files && picker.files[0];
        if (!file) return;
        const outcome = await uploadAnchor(api, row.class, file);
        const note = el("span", outcome.ok ? "upload-note" : "upload-error", outcome.message);
        upload.appendChild(note);
        if (outcome.ok) renderHome(root, api);
      });
      upload.appendChild(picker);
      tr.appendChild(upload);
      tbody.appendChild(tr);

      if (row.profile || row.anchor) {
        const panel = el("div", "density-panel");
        panel.dataset.class = row.class;
        panel.appendChild(el("h3", "", row.class));
        const plot = el("div", "density-plot-host");
        panel.appendChild(plot);
        panels.appendChild(panel);
        void refreshDensity(api, plot, row.class);
      }
    }
  }).catch(() => {
    tbody.replaceChildren();
    classesSection.appendChild(el("p", "panel-error", "class list unavailable"));
  });
}

function describeProgress(job: JobView): string {
  const parts = Object.entries(job.progress).map(([k, v]) => `${k}=${v}`);
  return parts.length ? parts.join("  ") : "…";
}

function renderJob(root: HTMLElement, api: Api, jobId: string): () => void {
  root.replaceChildren();
  const page = el("div", "page job");
  page.appendChild(el("h2", "", `Job ${jobId}`));
  const status = el("p", "job-status", "loading…");
  const progress = el("p", "job-progress");
  const errorLine = el("p", "job-error");
  const sliderBlock = el("label", "level-slider-block", "reality level ");
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "1";
  slider.max = "5";
  slider.step = "1";
  slider.disabled = true;
  const sliderEcho = el("output", "", "");
  sliderBlock.append(slider, sliderEcho);
  const gallery = el("div", "gallery");
  const densityHost = el("div", "density-plot-host");
  page.append(status, progress, errorLine, sliderBlock, gallery, densityHost);
  root.appendChild(page);

  let keyword = "";
  let sliderInitialized = false;

  const showResults = async (level?: number) => {
    try {
      const results = await api.getResults(jobId, { level, limit: 500 });
      renderGallery(gallery, results);
      sliderEcho.textContent = String(results.level);
      if (keyword) void refreshDensity(api, densityHost, keyword, results.level);
    } catch (exc) {
      gallery.replaceChildren(
        el("p", "panel-error",
           exc instanceof ApiError ? exc.message : "results unavailable"));
    }
  };

  bindLevelSlider(slider, (level) => void showResults(level));

  const poller = new JobPoller(
    api,
    jobId,
    (job) => {
      keyword = job.keyword;
      status.textContent = `${job.keyword}: ${job.state}`;
      status.dataset.state = job.state;
      progress.textContent = describeProgress(job);
      errorLine.textContent = job.error ?? "";
      setSliderState(slider, job.state);
      if (sliderEnabled(job.state) && !sliderInitialized) {
        sliderInitialized = true;
        slider.value = String(job.level);
        sliderEcho.textContent = String(job.level);
        void showResults();
      }
    },
    (exc) => {
      status.textContent = "job lookup failed";
      errorLine.textContent = exc instanceof ApiError ? exc.message : String(exc);
    },
  );
  poller.start();
  return () => poller.stop();
}

export function mountApp(root: HTMLElement, api: Api = createApi()): void {
  let cleanup: () => void = () => {};
  const route = () => {
    cleanup();
    cleanup = () => {};
    const match = window.location.hash.match(/^#\/jobs\/([0-9a-f]+)$/);
    if (match) {
      cleanup = renderJob(root, api, match[1]);
    } else {
      renderHome(root, api);
    }
  };
  window.addEventListener("hashchange", route);
  route();
}
