// Gallery model: a verbatim projection of the results payload. The
// only client-side operation is filtering on the server's final label.

import { ResultItem, ResultsPage } from "./api.js";

export interface GalleryItem {
  cropId: string;
  thumbnailUrl: string;
  distance: number;
  prior: string;
  final: string;
  changed: boolean;
}

export function toGalleryItem(item: ResultItem, base = ""): GalleryItem {
  return {
    cropId: item.crop_id,
    thumbnailUrl: base + item.image_url,
    distance: item.distance,
    prior: item.prior,
    final: item.final,
    changed: item.changed,
  };
}

export function toGalleryItems(page: ResultsPage, base = ""): GalleryItem[] {
  return page.items.map((item) => toGalleryItem(item, base));
}

/** The gallery shows crops the service currently calls keyword. */
export function keywordGallery(items: GalleryItem[]): GalleryItem[] {
  return items.filter((item) => item.final === "keyword");
}

/** Crops the reclassifier moved get a distinct border for auditing. */
export function itemCssClass(item: GalleryItem): string {
  return item.changed ? "gallery-item changed" : "gallery-item";
}

export function renderGallery(container: HTMLElement, page: ResultsPage, base = ""): void {
  const kept = keywordGallery(toGalleryItems(page, base));
  container.replaceChildren();
  const counter = document.createElement("p");
  counter.className = "gallery-count";
  counter.textContent = `${kept.length} of ${page.total} crops at level ${page.level} ` +
    `(threshold ${page.threshold.toFixed(3)})`;
  container.appendChild(counter);
  const grid = document.createElement("div");
  grid.className = "gallery-grid";
  for (const item of kept) {
    const card = document.createElement("figure");
    card.className = itemCssClass(item);
    card.dataset.cropId = item.cropId;
    const img = document.createElement("img");
    img.src = item.thumbnailUrl;
    img.alt = item.cropId;
    const caption = document.createElement("figcaption");
    caption.textContent = `d=${item.distance.toFixed(3)} ${item.prior} → ${item.final}`;
    card.append(img, caption);
    grid.appendChild(card);
  }
  container.appendChild(grid);
}
