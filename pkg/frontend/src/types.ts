// Mirrors of the service payloads. The client never derives any of these
// fields itself: every displayed number comes from the server.

export type Rule = "mastermind" | "wordle";

export interface Suggestion {
  guess: string;
  q_value: number;
}

export interface HistoryEntry {
  guess: string;
  feedback: string;
}

export interface SessionView {
  id: string;
  rule: Rule;
  length: number;
  guess_mode: string;
  heuristic: string;
  list_size: number;
  mystery: string[];
  belief_weights: number[];
  history: HistoryEntry[];
  solved: boolean;
  solved_with: string | null;
  suggestion: string | null;
  suggestions: Suggestion[];
}

export interface CreateSessionBody {
  rule: Rule;
  codes?: string[];
  alphabet?: string;
  length?: number;
  heuristic?: string;
  prune_limit?: number;
  top_k?: number;
  guess_mode?: string;
}
