// Job submission form. Client-side validation mirrors the server's
// rules so obviously bad input never becomes a request.

import { Api, ApiError } from "./api.js";

export interface JobFormValues {
  keyword: string;
  count: number;
  level: number;
}

export function validateJobForm(values: JobFormValues): string | null {
  if (!values.keyword.trim()) {
    return "keyword must not be empty";
  }
  if (!Number.isInteger(values.count) || values.count < 1) {
    return "count must be a positive integer";
  }
  if (!Number.isInteger(values.level) || values.level < 1 || values.level > 5) {
    return "level must be between 1 and 5";
  }
  return null;
}

export function readJobForm(form: HTMLFormElement): JobFormValues {
  const field = (name: string) => form.elements.namedItem(name) as HTMLInputElement;
  return {
    keyword: field("keyword").value,
    count: Number(field("count").value),
    level: Number(field("level").value),
  };
}

export function bindJobForm(
  form: HTMLFormElement,
  api: Api,
  onSubmitted: (jobId: string) => void,
): void {
  const errorBox = form.querySelector<HTMLElement>(".form-error");
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const values = readJobForm(form);
    const problem = validateJobForm(values);
    if (problem) {
      if (errorBox) errorBox.textContent = problem;
      return;
    }
    if (errorBox) errorBox.textContent = "";
    try {
      const { job_id } = await api.submitJob(values.keyword.trim(), values.count, values.level);
      onSubmitted(job_id);
    } catch (exc) {
      if (errorBox) {
        errorBox.textContent = exc instanceof ApiError ? exc.message : "request failed";
      }
    }
  });
}
