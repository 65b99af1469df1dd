/** Attribution heatmap colors: red boosts, blue suppresses, intensity by |phi|. */

export interface TokenColor {
  red: number;
  green: number;
  blue: number;
}

/**
 * Monotone color for one token's contribution. `maxAbs` is the scale anchor
 * (largest |phi| in the sentence); intensity grows strictly with |phi|.
 */
export function phiColor(phi: number, maxAbs: number): TokenColor {
  const scale = maxAbs > 0 ? maxAbs : 1;
  const intensity = Math.min(Math.abs(phi) / scale, 1);
  const fade = Math.round(255 - 170 * intensity);
  if (phi >= 0) {
    return { red: 255, green: fade, blue: fade };
  }
  return { red: fade, green: fade, blue: 255 };
}

export function cssColor(color: TokenColor): string {
  return `rgb(${color.red}, ${color.green}, ${color.blue})`;
}

/** Pre-scaled colors for a whole sentence's phi vector. */
export function heatmapColors(phi: number[]): string[] {
  const maxAbs = phi.reduce((acc, value) => Math.max(acc, Math.abs(value)), 0);
  return phi.map((value) => cssColor(phiColor(value, maxAbs)));
}
