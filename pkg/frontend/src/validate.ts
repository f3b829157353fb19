import type { Rule } from "./types.js";

export const WORDLE_MARKS = ["G", "Y", "-"] as const;
export type Mark = (typeof WORDLE_MARKS)[number];

/** Validate a wordle mark string before it is sent; returns null if ok. */
export function validateMarks(marks: string, length: number): string | null {
  const text = marks.trim().toUpperCase();
  if (text.length !== length) return `need exactly ${length} marks`;
  for (const ch of text) {
    if (!WORDLE_MARKS.includes(ch as Mark)) return `marks must be G, Y, or - (got '${ch}')`;
  }
  return null;
}

/** Validate mastermind peg counts before they are sent; returns null if ok. */
export function validatePegCounts(black: number, white: number, length: number): string | null {
  if (!Number.isInteger(black) || !Number.isInteger(white)) return "peg counts must be integers";
  if (black < 0 || white < 0) return "peg counts cannot be negative";
  if (black + white > length) return `black + white cannot exceed ${length}`;
  return null;
}

/** Validate a guess string against the session's code shape. */
export function validateGuess(guess: string, length: number): string | null {
  const text = guess.trim().toUpperCase();
  if (text.length !== length) return `guess must have ${length} symbols`;
  if (!/^[0-9A-Z]+$/.test(text)) return "guess must be alphanumeric";
  return null;
}

/** Wire encoding of feedback for the service. */
export function encodeFeedback(rule: Rule, marks: string, black: number, white: number): string {
  return rule === "wordle" ? marks.trim().toUpperCase() : `${black},${white}`;
}

/** Cycle a wordle position toggle: - -> Y -> G -> -. */
export function nextMark(current: Mark): Mark {
  const order: Mark[] = ["-", "Y", "G"];
  return order[(order.indexOf(current) + 1) % order.length];
}
