// Rendering. Everything paints into one root element; each screen is a
// plain function of state with change callbacks. No framework, no virtual
// DOM, just small rebuilds on input.

import {
  DIFFICULTY_LABELS,
  FAMILIARITY_OPTIONS,
  PLAUSIBILITY_QUESTION,
  SEVERITY_LABELS,
} from "./types.js";
import type {
  Answer,
  Familiarity,
  ProgressionAnswer,
  RankingAnswer,
  RaterProfile,
  SurveyForm,
  TaskKind,
  TaskView,
  TuringAnswer,
} from "./types.js";
import { clearSlot, isComplete, placeInFirstFreeSlot, surveyComplete } from "./views.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void, className = "btn"): HTMLButtonElement {
  const b = el("button", className, label);
  b.type = "button";
  b.addEventListener("click", onClick);
  return b;
}

export function clear(root: HTMLElement): void {
  root.replaceChildren();
}

/** Small screens make subtle texture invisible; say so once at the top. */
export function advisoryBanner(): HTMLElement {
  const banner = el("div", "advisory");
  banner.textContent =
    "Please use the largest screen available to you; judgments depend on fine image detail.";
  if (window.innerWidth < 900) {
    banner.classList.add("advisory-strong");
  }
  return banner;
}

function progressLine(view: TaskView): HTMLElement {
  return el("div", "progress", `Image set ${view.answered + 1} of ${view.target}`);
}

// ---------------------------------------------------------------------------
// profile form

export function renderProfileForm(
  root: HTMLElement,
  tasks: TaskKind[],
  onSubmit: (profile: RaterProfile, task: TaskKind) => void,
): void {
  clear(root);
  root.append(advisoryBanner());
  const form = el("div", "card");
  form.append(el("h2", undefined, "Before you start"));

  const nameInput = el("input");
  nameInput.placeholder = "your rater id";
  const yearsInput = el("input");
  yearsInput.type = "number";
  yearsInput.min = "0";
  yearsInput.placeholder = "years of experience";
  const famSelect = el("select");
  famSelect.append(new Option("familiarity with capsule endoscopy...", "", true, true));
  (famSelect.firstChild as HTMLOptionElement).disabled = true;
  for (const f of FAMILIARITY_OPTIONS) famSelect.append(new Option(f, f));
  const institutionInput = el("input");
  institutionInput.placeholder = "institution (optional)";
  const taskSelect = el("select");
  for (const t of tasks) taskSelect.append(new Option(t, t));

  const startBtn = button("Start", () => {
    const years = Number(yearsInput.value);
    if (!nameInput.value.trim() || !famSelect.value || !Number.isFinite(years) || years < 0) {
      status.textContent = "fill in rater id, experience and familiarity first";
      return;
    }
    const profile: RaterProfile = {
      user_id: nameInput.value.trim(),
      years_experience: Math.floor(years),
      wce_familiarity: famSelect.value as Familiarity,
    };
    if (institutionInput.value.trim()) profile.institution = institutionInput.value.trim();
    onSubmit(profile, taskSelect.value as TaskKind);
  });
  const status = el("div", "status");

  for (const field of [nameInput, yearsInput, famSelect, institutionInput, taskSelect]) {
    const row = el("div", "row");
    row.append(field);
    form.append(row);
  }
  form.append(startBtn, status);
  root.append(form);
}

// ---------------------------------------------------------------------------
// task screens

export interface TaskScreenCallbacks {
  onChange: (answer: Answer) => void;
  onSubmit: () => void;
}

export function renderTask(
  root: HTMLElement,
  view: TaskView,
  answer: Answer,
  cb: TaskScreenCallbacks,
): void {
  clear(root);
  root.append(advisoryBanner(), progressLine(view));
  if (view.task === "turing") {
    renderTuring(root, view, answer as TuringAnswer, cb);
  } else if (view.task === "ranking") {
    renderRanking(root, view, answer as RankingAnswer, cb);
  } else {
    renderProgression(root, view, answer as ProgressionAnswer, cb);
  }
  const submit = button("Submit", cb.onSubmit, "btn submit");
  submit.disabled = !isComplete(view, answer);
  root.append(submit);
}

function image(url: string, className = "stimulus"): HTMLImageElement {
  const img = el("img", className);
  img.src = url;
  img.draggable = false;
  return img;
}

function renderTuring(
  root: HTMLElement,
  view: TaskView,
  answer: TuringAnswer,
  cb: TaskScreenCallbacks,
): void {
  root.append(el("p", "prompt", "Is this image real or generated?"));
  root.append(image(view.imageUrls[0], "stimulus single"));

  const verdictRow = el("div", "row verdicts");
  for (const v of ["real", "generated"] as const) {
    const b = button(v === "real" ? "Real" : "Generated", () =>
      cb.onChange({ ...answer, verdict: v }),
    );
    if (answer.verdict === v) b.classList.add("selected");
    verdictRow.append(b);
  }
  root.append(verdictRow);

  root.append(el("p", "prompt", "How difficult was this decision?"));
  const diffRow = el("div", "row difficulty");
  DIFFICULTY_LABELS.forEach((label, idx) => {
    const value = idx + 1;
    const b = button(`${value} ${label}`, () => cb.onChange({ ...answer, difficulty: value }));
    if (answer.difficulty === value) b.classList.add("selected");
    diffRow.append(b);
  });
  root.append(diffRow);
}

function renderRanking(
  root: HTMLElement,
  view: TaskView,
  answer: RankingAnswer,
  cb: TaskScreenCallbacks,
): void {
  // deliberately no mention of how many images are real
  root.append(
    el("p", "prompt", "Order these four images from most realistic to least realistic."),
  );
  const pool = el("div", "row pool");
  for (const url of view.imageUrls) {
    const img = image(url, "stimulus pick");
    if (answer.slots.includes(url)) img.classList.add("placed");
    img.addEventListener("click", () => cb.onChange(placeInFirstFreeSlot(answer, url)));
    pool.append(img);
  }
  root.append(pool);

  const slotRow = el("div", "row slots");
  answer.slots.forEach((url, idx) => {
    const slot = el("div", "slot");
    slot.append(el("div", "slot-label", `#${idx + 1}`));
    if (url) {
      const img = image(url, "stimulus placed");
      img.addEventListener("click", () => cb.onChange(clearSlot(answer, idx)));
      slot.append(img);
    } else {
      slot.append(el("div", "slot-empty", "click an image above"));
    }
    slotRow.append(slot);
  });
  root.append(slotRow);
}

function renderProgression(
  root: HTMLElement,
  view: TaskView,
  answer: ProgressionAnswer,
  cb: TaskScreenCallbacks,
): void {
  root.append(el("p", "prompt", "Rate the severity shown in each image."));
  const strip = el("div", "row strip");
  view.imageUrls.forEach((url, idx) => {
    const cell = el("div", "cell");
    cell.append(image(url, "stimulus seq"));
    SEVERITY_LABELS.forEach((label, sIdx) => {
      const value = sIdx + 1;
      const b = button(label, () => {
        const severities = answer.severities.slice();
        severities[idx] = value;
        cb.onChange({ ...answer, severities });
      }, "btn small");
      if (answer.severities[idx] === value) b.classList.add("selected");
      cell.append(b);
    });
    strip.append(cell);
  });
  root.append(strip);

  root.append(el("p", "prompt", PLAUSIBILITY_QUESTION));
  const row = el("div", "row plausibility");
  for (let value = 1; value <= 5; value += 1) {
    const b = button(String(value), () => cb.onChange({ ...answer, plausibility: value }));
    if (answer.plausibility === value) b.classList.add("selected");
    row.append(b);
  }
  root.append(row);
}

// ---------------------------------------------------------------------------
// completion + survey

export function renderCompletion(
  root: HTMLElement,
  answered: number,
  onSurvey: (form: SurveyForm) => void,
): void {
  clear(root);
  const card = el("div", "card");
  card.append(el("h2", undefined, "All done"));
  card.append(
    el("p", undefined, `You rated ${answered} image sets. Thank you. One last short survey:`),
  );

  const yearsInput = el("input");
  yearsInput.type = "number";
  yearsInput.min = "0";
  yearsInput.placeholder = "years of experience";
  const famSelect = el("select");
  famSelect.append(new Option("familiarity with capsule endoscopy...", "", true, true));
  (famSelect.firstChild as HTMLOptionElement).disabled = true;
  for (const f of FAMILIARITY_OPTIONS) famSelect.append(new Option(f, f));
  const comments = el("textarea");
  comments.placeholder = "anything that stood out? (optional)";

  const status = el("div", "status");
  const save = button("Save survey", () => {
    const form: SurveyForm = {
      years_experience: yearsInput.value === "" ? null : Math.floor(Number(yearsInput.value)),
      wce_familiarity: (famSelect.value || null) as SurveyForm["wce_familiarity"],
      comments: comments.value,
    };
    if (!surveyComplete(form)) {
      status.textContent = "experience and familiarity are required";
      return;
    }
    onSurvey(form);
    status.textContent = "saved, thanks";
    save.disabled = true;
  });

  for (const field of [yearsInput, famSelect, comments]) {
    const row = el("div", "row");
    row.append(field);
    card.append(row);
  }
  card.append(save, status);
  root.append(card);
}

export function renderError(root: HTMLElement, message: string, onRetry?: () => void): void {
  clear(root);
  const card = el("div", "card error");
  card.append(el("h2", undefined, "Something went wrong"));
  card.append(el("p", undefined, message));
  if (onRetry) card.append(button("Try again", onRetry));
  root.append(card);
}
