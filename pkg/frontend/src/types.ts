/**
 * Shared types mirroring the adjudication API payloads.
 */

export const MOVE_LABELS = [
  'BACKGROUND',
  'PURPOSE',
  'METHOD',
  'RESULTS',
  'CONCLUSION',
] as const;

export type MoveLabel = (typeof MOVE_LABELS)[number];

export function isMoveLabel(value: string): value is MoveLabel {
  return (MOVE_LABELS as readonly string[]).includes(value);
}

export type Verdict = 'correct' | 'incorrect';

export type Role = 'evaluator' | 'adjudicator';

export interface ItemJudgment {
  evaluator: string;
  verdict: Verdict;
  corrected_labels: string[] | null;
}

export interface ReviewItem {
  abstract_id: string;
  sentence_index: number;
  sentence: string;
  predicted: string[];
  context: { before: string; after: string };
  judgments: ItemJudgment[];
  disputed: boolean;
  resolved: boolean;
  finalized: boolean;
}

export type QueueFilter = 'disputed' | 'all';

export interface QueueResponse {
  filter: QueueFilter;
  total: number;
  items: ReviewItem[];
}

export interface StatusResponse {
  run_id: string;
  items: number;
  judged_by: Record<string, number>;
  fully_judged: number;
  disputed: number;
  resolved: number;
  final_verdicts: number;
  complete: boolean;
}

export interface VerdictPayload {
  evaluator: string;
  abstract_id: string;
  sentence_index: number;
  verdict: Verdict;
  corrected_labels?: string[];
  note?: string;
}

export type SubmitOutcome = 'recorded' | 'duplicate';

/** Per-label metric cells straight from /api/report; never recomputed here. */
export interface ReportResponse {
  run_ids: string[];
  reference_mode: string;
  per_label: Record<
    string,
    {
      tp: number;
      fp: number;
      fn: number;
      precision: number | null;
      recall: number | null;
      f1: number | null;
    }
  >;
  accuracy_mean: number | null;
  errors: Record<string, unknown>;
}

export function itemKey(item: Pick<ReviewItem, 'abstract_id' | 'sentence_index'>): string {
  return `${item.abstract_id}:${item.sentence_index}`;
}
