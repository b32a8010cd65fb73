import { describe, expect, it } from "vitest";

import { bindLevelSlider, setSliderState, sliderEnabled } from "../src/slider.js";

function makeSlider(): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "range";
  input.min = "1";
  input.max = "5";
  input.value = "3";
  return input;
}

describe("level slider", () => {
  it("is usable only once results exist", () => {
    expect(sliderEnabled("queued")).toBe(false);
    expect(sliderEnabled("crawling")).toBe(false);
    expect(sliderEnabled("detecting")).toBe(false);
    expect(sliderEnabled("scoring")).toBe(false);
    expect(sliderEnabled("reclassifying")).toBe(true);
    expect(sliderEnabled("done")).toBe(true);
    expect(sliderEnabled("failed")).toBe(false);
  });

  it("is disabled while the job is still crawling", () => {
    const input = makeSlider();
    setSliderState(input, "crawling");
    expect(input.disabled).toBe(true);
    setSliderState(input, "done");
    expect(input.disabled).toBe(false);
  });

  it("fires only when the value actually changes", () => {
    const input = makeSlider();
    const seen: number[] = [];
    bindLevelSlider(input, (level) => seen.push(level));
    input.value = "4";
    input.dispatchEvent(new Event("change"));
    input.dispatchEvent(new Event("change"));
    input.value = "2";
    input.dispatchEvent(new Event("change"));
    expect(seen).toEqual([4, 2]);
  });
});
