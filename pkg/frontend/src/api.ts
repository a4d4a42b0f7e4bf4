// Typed client for the study service. Every call goes through request(),
// which separates transport failures (NetworkError, safe to retry) from
// rejections the server actually made (ApiError with the status code).

import type {
  NextResult,
  Progress,
  RaterProfile,
  SessionCreated,
  SubmitAck,
  TaskKind,
} from "./types.js";

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${cause instanceof Error ? cause.message : String(cause)}`);
    this.name = "NetworkError";
  }
}

export class ApiError extends Error {
  status: number;
  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = "ConflictError";
  }
}

export interface SubmitBody {
  stimulus: string;
  verdict?: string;
  difficulty?: number;
  order?: string[];
  severities?: number[];
  plausibility?: number;
  elapsed_ms?: number;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Called with every decoded response body; used by tests to audit
 * everything the server ever hands the client. */
export type PayloadInspector = (path: string, body: unknown) => void;

export class StudyApi {
  private base: string;
  private fetchFn: FetchLike;
  private inspector?: PayloadInspector;

  constructor(baseUrl: string, fetchFn?: FetchLike, inspector?: PayloadInspector) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    this.inspector = inspector;
  }

  imageUrl(alias: string): string {
    return `${this.base}/api/images/${encodeURIComponent(alias)}`;
  }

  createSession(
    profile: RaterProfile,
    experimentId: string,
    task: TaskKind,
    requestedImages?: number,
  ): Promise<SessionCreated> {
    const body: Record<string, unknown> = {
      profile,
      experiment_id: experimentId,
      task,
    };
    if (requestedImages !== undefined) body.requested_images = requestedImages;
    return this.request<SessionCreated>("POST", "/api/sessions", body);
  }

  next(token: string): Promise<NextResult> {
    return this.request<NextResult>("GET", `/api/sessions/${token}/next`);
  }

  progress(token: string): Promise<Progress> {
    return this.request<Progress>("GET", `/api/sessions/${token}`);
  }

  submit(token: string, body: SubmitBody): Promise<SubmitAck> {
    return this.request<SubmitAck>("POST", `/api/sessions/${token}/responses`, body);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new NetworkError(err);
    }
    let decoded: unknown = null;
    try {
      decoded = await response.json();
    } catch {
      // non-JSON body; fall through with the status alone
    }
    this.inspector?.(path, decoded);
    if (!response.ok) {
      const message =
        decoded && typeof decoded === "object" && "error" in decoded
          ? String((decoded as { error: unknown }).error)
          : `${method} ${path} failed with ${response.status}`;
      if (response.status === 409) throw new ConflictError(message);
      throw new ApiError(response.status, message);
    }
    return decoded as T;
  }
}
