// Session flow: profile form -> task loop -> completion. The flow owns the
// session token and the retry rules; it never holds anything about a
// stimulus beyond its id and aliased image URLs.
//
// Submission is strictly sequential: submit() resolves only after the
// service acknowledged the response, so the next stimulus cannot load
// before the previous answer is durable. A transport failure resubmits the
// identical body (the server treats duplicates as conflicts, so this is
// safe); a conflict means the response already exists and the flow skips
// forward.

import { ConflictError, NetworkError, StudyApi } from "./api.js";
import type { SubmitBody } from "./api.js";
import { buildSubmitBody, buildView, isComplete } from "./views.js";
import type {
  Answer,
  Progress,
  RaterProfile,
  SurveyForm,
  TaskKind,
  TaskView,
} from "./types.js";

export interface KeyValueStore {
  get(key: string): string | null;
  set(key: string, value: string): void;
  remove(key: string): void;
}

export interface FlowOptions {
  maxRetries?: number; // transport-failure resubmissions per response
  retryDelayMs?: number;
}

export type SubmitOutcome =
  | { kind: "recorded"; answered: number; target: number; done: boolean }
  | { kind: "skipped"; reason: string };

const DEFAULT_RETRIES = 3;

export class SessionFlow {
  readonly api: StudyApi;
  private store: KeyValueStore;
  private opts: Required<FlowOptions>;
  private experimentId: string;
  private aliasByUrl = new Map<string, string>();

  token: string | null = null;
  task: TaskKind | null = null;
  resumed = false;

  constructor(api: StudyApi, experimentId: string, store: KeyValueStore, opts?: FlowOptions) {
    this.api = api;
    this.experimentId = experimentId;
    this.store = store;
    this.opts = {
      maxRetries: opts?.maxRetries ?? DEFAULT_RETRIES,
      retryDelayMs: opts?.retryDelayMs ?? 400,
    };
  }

  private tokenKey(task: TaskKind, userId: string): string {
    return `styleatlas-rater:${this.experimentId}:${task}:${userId}`;
  }

  /** Open a session, or resume the one a previous page load recorded.
   * A stale stored token (e.g. the server restarted with a new log) is
   * discarded and a fresh session opened. */
  async start(profile: RaterProfile, task: TaskKind, requestedImages?: number): Promise<Progress> {
    const key = this.tokenKey(task, profile.user_id);
    const stored = this.store.get(key);
    if (stored) {
      try {
        const progress = await this.api.progress(stored);
        this.token = stored;
        this.task = task;
        this.resumed = true;
        return progress;
      } catch (err) {
        if (err instanceof NetworkError) throw err;
        this.store.remove(key); // token unknown to the server; start over
      }
    }
    const created = await this.api.createSession(profile, this.experimentId, task, requestedImages);
    this.token = created.token;
    this.task = task;
    this.resumed = false;
    this.store.set(key, created.token);
    return { task, answered: 0, target: created.target, done: created.target === 0 };
  }

  /** The pending stimulus as a renderable view, or null when the session
   * target has been reached. */
  async nextView(): Promise<TaskView | null> {
    const next = await this.api.next(this.requireToken());
    if (next.done || !next.stimulus) return null;
    const view = buildView(
      next.stimulus,
      (alias) => {
        const url = this.api.imageUrl(alias);
        this.aliasByUrl.set(url, alias);
        return url;
      },
      next.answered,
      next.target,
    );
    return view;
  }

  async submit(view: TaskView, answer: Answer, elapsedMs?: number): Promise<SubmitOutcome> {
    if (!isComplete(view, answer)) {
      throw new Error("submit called with incomplete input");
    }
    const body = buildSubmitBody(view, answer, (url) => this.aliasOf(url), elapsedMs);
    return this.submitBody(body);
  }

  private async submitBody(body: SubmitBody): Promise<SubmitOutcome> {
    const token = this.requireToken();
    let attempt = 0;
    for (;;) {
      try {
        const ack = await this.api.submit(token, body);
        return { kind: "recorded", answered: ack.answered, target: ack.target, done: ack.done };
      } catch (err) {
        if (err instanceof ConflictError) {
          // already recorded (double click, parallel tab, resumed retry)
          return { kind: "skipped", reason: err.message };
        }
        if (err instanceof NetworkError && attempt < this.opts.maxRetries) {
          attempt += 1;
          await sleep(this.opts.retryDelayMs);
          continue;
        }
        throw err;
      }
    }
  }

  async progress(): Promise<Progress> {
    return this.api.progress(this.requireToken());
  }

  /** Forget the stored token once the rater finishes, so the next visit
   * starts a fresh session instead of resuming a completed one. */
  finish(userId: string): void {
    if (this.task) this.store.remove(this.tokenKey(this.task, userId));
    this.token = null;
  }

  saveSurvey(userId: string, form: SurveyForm): void {
    // no service endpoint exists for the survey; keep it locally so the
    // coordinator can collect it out of band
    this.store.set(
      `styleatlas-survey:${this.experimentId}:${userId}`,
      JSON.stringify({ ...form, saved_at: new Date().toISOString() }),
    );
  }

  private aliasOf(url: string): string {
    const alias = this.aliasByUrl.get(url);
    if (!alias) throw new Error(`unknown image URL ${url}`);
    return alias;
  }

  private requireToken(): string {
    if (!this.token) throw new Error("session not started");
    return this.token;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
