/**
 * Review queue state: items in server order, a cursor, pagination, and
 * optimistic submission with rollback.
 *
 * The queue never invents or reorders data; a reload always rebuilds the
 * same state from the server.
 */

import { itemKey, type QueueFilter, type ReviewItem } from './types.js';

export const PAGE_SIZE = 50;

export interface QueueState {
  filter: QueueFilter;
  items: ReviewItem[];
  cursor: number;
  page: number;
  /** keys of items optimistically submitted, awaiting server acknowledgement */
  pending: string[];
  /** keys acknowledged by the server this session */
  submitted: string[];
  error: string | null;
}

export function emptyQueue(filter: QueueFilter = 'disputed'): QueueState {
  return { filter, items: [], cursor: 0, page: 0, pending: [], submitted: [], error: null };
}

export function loadItems(state: QueueState, items: ReviewItem[]): QueueState {
  const cursor = Math.min(state.cursor, Math.max(items.length - 1, 0));
  return { ...state, items: [...items], cursor, page: Math.floor(cursor / PAGE_SIZE), error: null };
}

export function loadFailed(state: QueueState, message: string): QueueState {
  // keep whatever is already loaded; the banner offers a retry
  return { ...state, error: message };
}

export function currentItem(state: QueueState): ReviewItem | null {
  return state.items[state.cursor] ?? null;
}

export function pageItems(state: QueueState): ReviewItem[] {
  const start = state.page * PAGE_SIZE;
  return state.items.slice(start, start + PAGE_SIZE);
}

export function pageCount(state: QueueState): number {
  return Math.max(1, Math.ceil(state.items.length / PAGE_SIZE));
}

export function moveCursor(state: QueueState, delta: number): QueueState {
  if (state.items.length === 0) return state;
  const cursor = Math.min(Math.max(state.cursor + delta, 0), state.items.length - 1);
  return { ...state, cursor, page: Math.floor(cursor / PAGE_SIZE) };
}

export function setPage(state: QueueState, page: number): QueueState {
  const clamped = Math.min(Math.max(page, 0), pageCount(state) - 1);
  return { ...state, page: clamped, cursor: clamped * PAGE_SIZE };
}

export function markPending(state: QueueState, item: ReviewItem): QueueState {
  const key = itemKey(item);
  if (state.pending.includes(key)) return state;
  return { ...state, pending: [...state.pending, key] };
}

/** Server acknowledged: pending becomes submitted; the item stays until
 * the next server fetch decides whether it leaves the queue. */
export function acknowledge(state: QueueState, item: ReviewItem): QueueState {
  const key = itemKey(item);
  return {
    ...state,
    pending: state.pending.filter((k) => k !== key),
    submitted: state.submitted.includes(key) ? state.submitted : [...state.submitted, key],
  };
}

/** Server rejected: roll the optimistic mark back and surface the error
 * text verbatim. */
export function rollback(state: QueueState, item: ReviewItem, message: string): QueueState {
  const key = itemKey(item);
  return {
    ...state,
    pending: state.pending.filter((k) => k !== key),
    error: message,
  };
}

export function isPending(state: QueueState, item: ReviewItem): boolean {
  return state.pending.includes(itemKey(item));
}

export function isSubmitted(state: QueueState, item: ReviewItem): boolean {
  return state.submitted.includes(itemKey(item));
}
