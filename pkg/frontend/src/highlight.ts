/**
 * Label highlighting: a pure function from a predicted label set to
 * stacked color bands, one band per label, in the fixed canonical order.
 */

import { MOVE_LABELS, isMoveLabel, type MoveLabel } from './types.js';

export const LABEL_COLORS: Record<MoveLabel, string> = {
  BACKGROUND: '#8d99ae',
  PURPOSE: '#1b9e77',
  METHOD: '#d95f02',
  RESULTS: '#7570b3',
  CONCLUSION: '#e7298a',
};

export interface LabelBand {
  label: MoveLabel;
  color: string;
}

/** Unknown label names are dropped: only the five-label vocabulary renders. */
export function labelBands(predicted: readonly string[]): LabelBand[] {
  const present = new Set(predicted.filter(isMoveLabel));
  return MOVE_LABELS.filter((label) => present.has(label)).map((label) => ({
    label,
    color: LABEL_COLORS[label],
  }));
}

/** CSS background for a sentence card: stacked equal-height bands. */
export function bandGradient(predicted: readonly string[]): string {
  const bands = labelBands(predicted);
  if (bands.length === 0) return 'transparent';
  if (bands.length === 1) return bands[0].color;
  const step = 100 / bands.length;
  const stops = bands.map(
    (band, i) => `${band.color} ${i * step}%, ${band.color} ${(i + 1) * step}%`,
  );
  return `linear-gradient(to bottom, ${stops.join(', ')})`;
}
