// Wire types for the study service JSON API, plus the client-side view
// model built from them. Nothing in here carries provenance or any other
// ground-truth field; the server never sends those and the client never
// stores them.

export type TaskKind = "turing" | "ranking" | "progression";

export type Familiarity =
  | "expert"
  | "very familiar"
  | "somewhat familiar"
  | "not familiar";

export const FAMILIARITY_OPTIONS: Familiarity[] = [
  "expert",
  "very familiar",
  "somewhat familiar",
  "not familiar",
];

export interface RaterProfile {
  user_id: string;
  years_experience: number;
  wce_familiarity: Familiarity;
  institution?: string;
}

export interface SessionCreated {
  token: string;
  task: TaskKind;
  target: number;
  n_scheduled: number;
}

export interface StimulusPayload {
  id: string;
  task: TaskKind;
  payload: {
    image?: string;
    images?: string[];
    sequence?: string;
  };
}

export interface Progress {
  task: TaskKind;
  answered: number;
  target: number;
  done: boolean;
}

export type NextResult = Progress & {
  done: boolean;
  stimulus?: StimulusPayload;
};

export interface SubmitAck {
  status: string;
  stimulus: string;
  answered: number;
  target: number;
  done: boolean;
}

// 1..5, shown to the rater as "very difficult" .. "very easy"
export const DIFFICULTY_LABELS = [
  "very difficult",
  "difficult",
  "neutral",
  "easy",
  "very easy",
] as const;

// 1..4 per image in a progression
export const SEVERITY_LABELS = ["normal", "mild", "moderate", "severe"] as const;

export const PLAUSIBILITY_QUESTION =
  "Could this progression scenario be realistic?";

export interface TuringAnswer {
  verdict: "real" | "generated" | null;
  difficulty: number | null; // 1..5
}

export interface RankingAnswer {
  // slot k holds the image placed at rank k, best first; null = empty slot
  slots: Array<string | null>;
}

export interface ProgressionAnswer {
  severities: Array<number | null>; // 1..4 per image, left to right
  plausibility: number | null; // 1..5
}

export type Answer = TuringAnswer | RankingAnswer | ProgressionAnswer;

export interface TaskView {
  task: TaskKind;
  stimulusId: string;
  imageUrls: string[]; // one for turing, four for ranking, five for progression
  answered: number;
  target: number;
}

export interface SurveyForm {
  years_experience: number | null;
  wce_familiarity: Familiarity | null;
  comments: string;
}
