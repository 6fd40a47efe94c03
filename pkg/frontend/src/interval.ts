/**
 * State logic for one dual-handle interval control.
 *
 * Invariants enforced here, not in the DOM: positions snap to integer
 * scale units, stay inside [min, max], and the handles can never
 * cross (lower <= upper at every intermediate state, so dragging one
 * handle past the other collapses the interval to a point instead of
 * swapping the bounds).
 */

export interface IntervalState {
  lower: number;
  upper: number;
  touched: boolean;
}

/** Round to the nearest integer scale unit and clamp into range. */
export function snap(value: number, min: number, max: number): number {
  const rounded = Math.round(value);
  if (Number.isNaN(rounded)) return min;
  return Math.min(max, Math.max(min, rounded));
}

/** Initial handle positions before the expert touches the control. */
export function untouched(min: number, max: number): IntervalState {
  const quarter = (max - min) / 4;
  return {
    lower: snap(min + quarter, min, max),
    upper: snap(max - quarter, min, max),
    touched: false,
  };
}

export function moveLower(state: IntervalState, value: number,
                          min: number, max: number): IntervalState {
  const lower = Math.min(snap(value, min, max), state.upper);
  return { lower, upper: state.upper, touched: true };
}

export function moveUpper(state: IntervalState, value: number,
                          min: number, max: number): IntervalState {
  const upper = Math.max(snap(value, min, max), state.lower);
  return { lower: state.lower, upper, touched: true };
}

/** Keyboard nudge: arrow keys move a handle by whole scale units. */
export function nudge(state: IntervalState, handle: "lower" | "upper",
                      delta: number, min: number, max: number): IntervalState {
  return handle === "lower"
    ? moveLower(state, state.lower + delta, min, max)
    : moveUpper(state, state.upper + delta, min, max);
}

export function width(state: IntervalState): number {
  return state.upper - state.lower;
}
