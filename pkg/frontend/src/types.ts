/** Documents exchanged with the statescope HTTP API. */

export interface ScatterPoint {
  window_id: number;
  x: number;
  y: number;
  cluster: number | null;
  annotation: string | null;
}

export interface EmbeddingDoc {
  points: ScatterPoint[];
}

export interface CorrelationDoc {
  rows: string[];
  cols: number[];
  cells: number[][];
}

export interface FsmStateDoc {
  name: string;
  origin: "human" | "merged" | "collaged" | "ground_truth";
}

export interface FsmTransitionDoc {
  from: string;
  event: string;
  to: string;
}

export interface FsmDoc {
  schema: number;
  states: FsmStateDoc[];
  transitions: FsmTransitionDoc[];
  initial: string | null;
}

export interface VerificationStepDoc {
  window_id: number;
  predicted: string; // state name or "UNKNOWN"
  distance: number;
  transition_valid: boolean | null;
  event_kind: string | null;
}

export interface SessionWindowDoc {
  window_id: number;
  t_start_ms: number;
  t_end_ms: number;
  annotation: string | null;
}

export interface SessionEventDoc {
  event_id: number;
  kind: string;
  t_ms: number;
  from_window: number;
  to_window: number;
}

export interface SessionDoc {
  session_id: string;
  windows: SessionWindowDoc[];
  events: SessionEventDoc[];
  labels: { name: string; origin: string }[];
}

export interface ApiError {
  code: string;
  stage: string;
  detail: string;
}

/** Named partition of the state set, as posted to /collage. */
export type CollageGroups = Record<string, string[]>;

export const UNKNOWN_STATE = "UNKNOWN";
