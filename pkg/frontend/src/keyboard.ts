/**
 * Keyboard-first review bindings.
 *
 * j/k or arrows move through the queue, c/x verdict the current item,
 * digits 1-5 toggle corrected labels, Enter submits, r reloads.
 */

import { MOVE_LABELS, type MoveLabel } from './types.js';

export type KeyAction =
  | { kind: 'next' }
  | { kind: 'previous' }
  | { kind: 'verdict-correct' }
  | { kind: 'verdict-incorrect' }
  | { kind: 'toggle-label'; label: MoveLabel }
  | { kind: 'submit' }
  | { kind: 'reload' };

export function actionForKey(key: string): KeyAction | null {
  switch (key) {
    case 'j':
    case 'ArrowDown':
      return { kind: 'next' };
    case 'k':
    case 'ArrowUp':
      return { kind: 'previous' };
    case 'c':
      return { kind: 'verdict-correct' };
    case 'x':
      return { kind: 'verdict-incorrect' };
    case 'Enter':
      return { kind: 'submit' };
    case 'r':
      return { kind: 'reload' };
    default: {
      const digit = Number.parseInt(key, 10);
      if (digit >= 1 && digit <= MOVE_LABELS.length) {
        return { kind: 'toggle-label', label: MOVE_LABELS[digit - 1] };
      }
      return null;
    }
  }
}

export function isTypingTarget(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    (target instanceof HTMLElement && target.isContentEditable)
  );
}
