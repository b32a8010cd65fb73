// Reality-level slider: gated on job state, fires only on real changes.

export const RESULT_STATES = ["reclassifying", "done"];

/** Results exist once scoring finished; before that the control is inert. */
export function sliderEnabled(state: string): boolean {
  return RESULT_STATES.includes(state);
}

export function bindLevelSlider(
  input: HTMLInputElement,
  onLevelChange: (level: number) => void,
): void {
  let current = Number(input.value);
  input.addEventListener("change", () => {
    const level = Number(input.value);
    if (level === current) return;
    current = level;
    onLevelChange(level);
  });
}

export function setSliderState(input: HTMLInputElement, jobState: string): void {
  input.disabled = !sliderEnabled(jobState);
}
