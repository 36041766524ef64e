/** Pure review-session state: a queue, a cursor, and score bookkeeping.
 *
 * The cursor only moves forward, so an item submitted (or skipped as a
 * duplicate) in this session is never shown again.
 */

import { CRITERIA, Criterion, PendingItem, Scores } from "./api.js";

export interface ReviewSession {
  readonly workerId: string;
  readonly queue: readonly PendingItem[];
  readonly cursor: number;
  readonly submitted: number;
  readonly skipped: number;
}

export type PartialScores = Partial<Record<Criterion, number>>;

export function newSession(
  workerId: string,
  items: PendingItem[],
): ReviewSession {
  return { workerId, queue: items, cursor: 0, submitted: 0, skipped: 0 };
}

export function currentItem(session: ReviewSession): PendingItem | null {
  return session.cursor < session.queue.length
    ? session.queue[session.cursor]
    : null;
}

export function isComplete(session: ReviewSession): boolean {
  return session.cursor >= session.queue.length;
}

export function progressLabel(session: ReviewSession): string {
  const position = Math.min(session.cursor + 1, session.queue.length);
  return `${position} / ${session.queue.length}`;
}

export function advance(
  session: ReviewSession,
  outcome: "submitted" | "skipped",
): ReviewSession {
  if (isComplete(session)) return session;
  return {
    ...session,
    cursor: session.cursor + 1,
    submitted: session.submitted + (outcome === "submitted" ? 1 : 0),
    skipped: session.skipped + (outcome === "skipped" ? 1 : 0),
  };
}

export function allScoresSet(scores: PartialScores): scores is Scores {
  return CRITERIA.every((criterion) => {
    const value = scores[criterion];
    return typeof value === "number" && value >= 1 && value <= 5;
  });
}

export function setScore(
  scores: PartialScores,
  criterion: Criterion,
  value: number,
): PartialScores {
  if (!Number.isInteger(value) || value < 1 || value > 5) return scores;
  return { ...scores, [criterion]: value };
}

/** Keyboard keys "1".."5" score the focused criterion. */
export function scoreFromKey(key: string): number | null {
  if (key.length === 1 && key >= "1" && key <= "5") return Number(key);
  return null;
}

export function nextCriterion(current: Criterion): Criterion {
  const index = CRITERIA.indexOf(current);
  return CRITERIA[(index + 1) % CRITERIA.length];
}
