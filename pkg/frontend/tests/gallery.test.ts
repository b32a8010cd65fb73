import { describe, expect, it } from "vitest";

import { itemCssClass, keywordGallery, renderGallery, toGalleryItems } from "../src/gallery.js";
import { SAMPLE_RESULTS } from "./helpers.js";

describe("gallery model", () => {
  it("maps result items verbatim", () => {
    const items = toGalleryItems(SAMPLE_RESULTS, "http://svc");
    expect(items).toHaveLength(4);
    expect(items[0]).toEqual({
      cropId: "c1",
      thumbnailUrl: "http://svc/images/c1",
      distance: 0.2,
      prior: "keyword",
      final: "keyword",
      changed: false,
    });
    expect(items[1].final).toBe("non-keyword");
    expect(items[1].changed).toBe(true);
  });

  it("keeps only crops whose final space is the keyword", () => {
    const items = toGalleryItems(SAMPLE_RESULTS);
    const kept = keywordGallery(items);
    expect(kept.map((i) => i.cropId)).toEqual(["c1", "c3"]);
  });

  it("marks reclassified crops with a distinct css class", () => {
    const items = toGalleryItems(SAMPLE_RESULTS);
    expect(itemCssClass(items[0])).toBe("gallery-item");
    expect(itemCssClass(items[2])).toBe("gallery-item changed");
  });

  it("renders only keyword crops and flags the changed ones", () => {
    const host = document.createElement("div");
    renderGallery(host, SAMPLE_RESULTS);
    const figures = host.querySelectorAll("figure");
    expect(figures).toHaveLength(2);
    const ids = Array.from(figures).map((f) => (f as HTMLElement).dataset.cropId);
    expect(ids).toEqual(["c1", "c3"]);
    expect(figures[0].className).toBe("gallery-item");
    expect(figures[1].className).toBe("gallery-item changed");
    expect(host.querySelector(".gallery-count")!.textContent).toContain("2 of 4");
    expect(host.querySelector(".gallery-count")!.textContent).toContain("level 2");
  });
});
