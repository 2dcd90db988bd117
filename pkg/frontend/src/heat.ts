import { SessionView } from "./types.js";

export interface UnitHeat {
  text: string;
  /** Max alignment mass this unit carries over all premises; null when the
   * session has no premises yet (neutral tint). */
  tint: number | null;
  attention: number;
}

export function unitHeat(view: SessionView): UnitHeat[] {
  return view.hypotheses.map((text, i) => {
    const row = view.alignment[i] ?? [];
    return {
      text,
      tint: row.length > 0 ? Math.max(...row) : null,
      attention: view.attention[i] ?? 0,
    };
  });
}

/** CSS background for a tint value; neutral grey when absent. */
export function tintColor(tint: number | null): string {
  if (tint === null) {
    return "rgba(128, 128, 128, 0.08)";
  }
  const alpha = 0.08 + 0.72 * Math.min(Math.max(tint, 0), 1);
  return `rgba(72, 120, 168, ${alpha.toFixed(3)})`;
}
