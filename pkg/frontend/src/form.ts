/**
 * Verdict form state and validation.
 *
 * Mirrors the server-side judgment invariants: an incorrect verdict must
 * carry a non-empty corrected label set drawn from the five-label
 * vocabulary. Submission stays disabled until the form validates.
 */

import { isMoveLabel, MOVE_LABELS, type MoveLabel, type Verdict, type VerdictPayload } from './types.js';

export interface VerdictFormState {
  verdict: Verdict | null;
  corrected: MoveLabel[];
  note: string;
}

export function emptyForm(): VerdictFormState {
  return { verdict: null, corrected: [], note: '' };
}

export function setVerdict(form: VerdictFormState, verdict: Verdict): VerdictFormState {
  // switching back to "correct" discards the correction set
  const corrected = verdict === 'incorrect' ? form.corrected : [];
  return { ...form, verdict, corrected };
}

export function toggleLabel(form: VerdictFormState, label: string): VerdictFormState {
  if (!isMoveLabel(label)) return form;
  const corrected = form.corrected.includes(label)
    ? form.corrected.filter((l) => l !== label)
    : [...MOVE_LABELS.filter((l) => form.corrected.includes(l) || l === label)];
  return { ...form, corrected };
}

export function validate(form: VerdictFormState): string | null {
  if (form.verdict === null) return 'choose correct or incorrect';
  if (form.verdict === 'incorrect' && form.corrected.length === 0) {
    return 'an incorrect verdict needs a corrected label set';
  }
  if (form.corrected.some((label) => !isMoveLabel(label))) {
    return 'corrected labels must come from the five-label vocabulary';
  }
  return null;
}

export function canSubmit(form: VerdictFormState): boolean {
  return validate(form) === null;
}

export function toPayload(
  form: VerdictFormState,
  evaluator: string,
  abstractId: string,
  sentenceIndex: number,
): VerdictPayload {
  const error = validate(form);
  if (error !== null) throw new Error(`form invalid: ${error}`);
  const payload: VerdictPayload = {
    evaluator,
    abstract_id: abstractId,
    sentence_index: sentenceIndex,
    verdict: form.verdict as Verdict,
  };
  if (form.verdict === 'incorrect') payload.corrected_labels = [...form.corrected];
  if (form.note.trim()) payload.note = form.note.trim();
  return payload;
}
