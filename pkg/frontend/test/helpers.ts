import type { SessionFlow, KeyValueStore, SubmitOutcome } from "../src/state.js";
import type { Answer, RaterProfile, TaskView } from "../src/types.js";

export const PROFILE: RaterProfile = {
  user_id: "rater-1",
  years_experience: 4,
  wce_familiarity: "very familiar",
  institution: "test clinic",
};

export class MemoryStore implements KeyValueStore {
  map = new Map<string, string>();
  get(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  set(key: string, value: string): void {
    this.map.set(key, value);
  }
  remove(key: string): void {
    this.map.delete(key);
  }
}

/** A valid answer for whatever the view shows. */
export function answerFor(view: TaskView): Answer {
  if (view.task === "turing") return { verdict: "real", difficulty: 3 };
  if (view.task === "ranking") return { slots: view.imageUrls.slice() };
  return {
    severities: view.imageUrls.map((_, i) => (i % 4) + 1),
    plausibility: 4,
  };
}

export async function driveToCompletion(flow: SessionFlow): Promise<SubmitOutcome[]> {
  const outcomes: SubmitOutcome[] = [];
  for (;;) {
    const view = await flow.nextView();
    if (!view) return outcomes;
    outcomes.push(await flow.submit(view, answerFor(view), 1200));
  }
}
