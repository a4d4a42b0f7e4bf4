// Entry point: wire config, API client, session flow, and the screens
// together. The loop is strictly sequential; a submit must be acknowledged
// before the next stimulus is fetched.

import { StudyApi } from "./api.js";
import { loadConfig } from "./config.js";
import { SessionFlow } from "./state.js";
import {
  renderCompletion,
  renderError,
  renderProfileForm,
  renderTask,
} from "./dom.js";
import { emptyAnswer } from "./views.js";
import type { KeyValueStore } from "./state.js";
import type { Answer, RaterProfile, TaskKind, TaskView } from "./types.js";

const TASKS: TaskKind[] = ["turing", "ranking", "progression"];

function browserStore(storage: Storage): KeyValueStore {
  return {
    get: (key) => storage.getItem(key),
    set: (key, value) => storage.setItem(key, value),
    remove: (key) => storage.removeItem(key),
  };
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  let config;
  try {
    config = await loadConfig();
  } catch (err) {
    renderError(root, String(err));
    return;
  }
  const api = new StudyApi(config.base_url);
  const flow = new SessionFlow(api, config.experiment_id, browserStore(window.localStorage));

  renderProfileForm(root, TASKS, (profile, task) => {
    runSession(root, flow, profile, task).catch((err) =>
      renderError(root, String(err), () => boot()),
    );
  });
}

async function runSession(
  root: HTMLElement,
  flow: SessionFlow,
  profile: RaterProfile,
  task: TaskKind,
): Promise<void> {
  await flow.start(profile, task);

  for (;;) {
    const view = await flow.nextView();
    if (view === null) break;
    const answer = await collectAnswer(root, flow, view);
    await flow.submit(view, answer.value, answer.elapsedMs);
  }

  const progress = await flow.progress();
  flow.finish(profile.user_id);
  renderCompletion(root, progress.answered, (form) => flow.saveSurvey(profile.user_id, form));
}

/** Show one task screen and resolve when the rater presses a live submit
 * button. Re-renders on every input change; the button only enables once
 * the view-model says the answer is complete. */
function collectAnswer(
  root: HTMLElement,
  flow: SessionFlow,
  view: TaskView,
): Promise<{ value: Answer; elapsedMs: number }> {
  const startedAt = performance.now();
  return new Promise((resolve) => {
    let answer = emptyAnswer(view);
    const paint = (): void => {
      renderTask(root, view, answer, {
        onChange: (next) => {
          answer = next;
          paint();
        },
        onSubmit: () => resolve({ value: answer, elapsedMs: performance.now() - startedAt }),
      });
    };
    paint();
  });
}

boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) renderError(root, String(err));
});
