// View-model logic shared by the DOM layer and the tests: building a
// TaskView from a stimulus, tracking partial input, and deciding when the
// submit button may be enabled. The rules here are the task invariants:
// nothing submits until every required input is set, and a ranking only
// submits a full permutation of the four shown images.

import type { SubmitBody } from "./api.js";
import type {
  Answer,
  ProgressionAnswer,
  RankingAnswer,
  StimulusPayload,
  TaskView,
  TuringAnswer,
  SurveyForm,
} from "./types.js";

export function buildView(
  stimulus: StimulusPayload,
  imageUrl: (alias: string) => string,
  answered: number,
  target: number,
): TaskView {
  const aliases =
    stimulus.task === "turing"
      ? [stimulus.payload.image ?? ""]
      : stimulus.payload.images ?? [];
  if (aliases.some((a) => !a)) {
    throw new Error(`stimulus ${stimulus.id} is missing image references`);
  }
  return {
    task: stimulus.task,
    stimulusId: stimulus.id,
    imageUrls: aliases.map(imageUrl),
    answered,
    target,
  };
}

export function emptyAnswer(view: TaskView): Answer {
  switch (view.task) {
    case "turing":
      return { verdict: null, difficulty: null } satisfies TuringAnswer;
    case "ranking":
      return { slots: view.imageUrls.map(() => null) } satisfies RankingAnswer;
    case "progression":
      return {
        severities: view.imageUrls.map(() => null),
        plausibility: null,
      } satisfies ProgressionAnswer;
  }
}

export function isComplete(view: TaskView, answer: Answer): boolean {
  if (view.task === "turing") {
    const a = answer as TuringAnswer;
    return (
      (a.verdict === "real" || a.verdict === "generated") &&
      a.difficulty !== null &&
      a.difficulty >= 1 &&
      a.difficulty <= 5
    );
  }
  if (view.task === "ranking") {
    const a = answer as RankingAnswer;
    const filled = a.slots.filter((s): s is string => s !== null);
    if (filled.length !== view.imageUrls.length) return false;
    // full permutation: every shown image placed exactly once
    return new Set(filled).size === filled.length;
  }
  const a = answer as ProgressionAnswer;
  return (
    a.severities.every((s) => s !== null && s >= 1 && s <= 4) &&
    a.plausibility !== null &&
    a.plausibility >= 1 &&
    a.plausibility <= 5
  );
}

/** Translate a completed answer into the POST body. Slots and URLs are
 * mapped back to the aliases the server named, never anything else. */
export function buildSubmitBody(
  view: TaskView,
  answer: Answer,
  aliasOfUrl: (url: string) => string,
  elapsedMs?: number,
): SubmitBody {
  if (!isComplete(view, answer)) {
    throw new Error("refusing to build a submission from incomplete input");
  }
  const body: SubmitBody = { stimulus: view.stimulusId };
  if (elapsedMs !== undefined) body.elapsed_ms = Math.max(0, Math.round(elapsedMs));
  if (view.task === "turing") {
    const a = answer as TuringAnswer;
    body.verdict = a.verdict!;
    body.difficulty = a.difficulty!;
  } else if (view.task === "ranking") {
    const a = answer as RankingAnswer;
    body.order = a.slots.map((s) => aliasOfUrl(s!));
  } else {
    const a = answer as ProgressionAnswer;
    body.severities = (a.severities as number[]).slice();
    body.plausibility = (answer as ProgressionAnswer).plausibility!;
  }
  return body;
}

// Ranking interaction: clicking an image places it in the first free slot,
// clicking a filled slot clears it. Both return a new answer.

export function placeInFirstFreeSlot(answer: RankingAnswer, url: string): RankingAnswer {
  if (answer.slots.includes(url)) return answer;
  const idx = answer.slots.indexOf(null);
  if (idx === -1) return answer;
  const slots = answer.slots.slice();
  slots[idx] = url;
  return { slots };
}

export function clearSlot(answer: RankingAnswer, slotIndex: number): RankingAnswer {
  const slots = answer.slots.slice();
  slots[slotIndex] = null;
  return { slots };
}

export function surveyComplete(form: SurveyForm): boolean {
  return (
    form.years_experience !== null &&
    form.years_experience >= 0 &&
    form.wce_familiarity !== null
  );
}
