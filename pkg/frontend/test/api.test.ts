import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, ConflictError, NetworkError, StudyApi } from "../src/api.js";
import { MockStudyServer } from "./mock_server.js";
import { PROFILE } from "./helpers.js";

let server: MockStudyServer;
let base: string;
let api: StudyApi;

beforeAll(async () => {
  server = new MockStudyServer();
  base = await server.start();
  api = new StudyApi(base);
});

afterAll(async () => {
  await server.stop();
});

describe("session creation", () => {
  it("returns the session shape", async () => {
    const created = await api.createSession(PROFILE, server.experimentId, "turing");
    expect(created.token).toBeTypeOf("string");
    expect(created.token.length).toBeGreaterThan(0);
    expect(created.task).toBe("turing");
    expect(created.target).toBe(3);
    expect(created.n_scheduled).toBe(8);
  });

  it("honours requested_images", async () => {
    const created = await api.createSession(PROFILE, server.experimentId, "turing", 5);
    expect(created.target).toBe(5);
  });

  it("rejects an out-of-range request with the server's message", async () => {
    const err = await api
      .createSession(PROFILE, server.experimentId, "turing", 99)
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).message).toContain("requested_images");
  });

  it("rejects an unknown experiment with 404", async () => {
    const err = await api
      .createSession(PROFILE, "no-such-exp", "turing")
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
  });
});

describe("authentication and conflicts", () => {
  it("maps an unknown token to a 401 ApiError with the server message", async () => {
    const err = await api
      .progress("tok-does-not-exist")
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err).not.toBeInstanceOf(ConflictError);
    expect((err as ApiError).status).toBe(401);
    expect((err as ApiError).message).toBe("unknown session token");
  });

  it("acknowledges a submission and raises ConflictError on the duplicate", async () => {
    const { token } = await api.createSession(PROFILE, server.experimentId, "turing");
    const next = await api.next(token);
    expect(next.done).toBe(false);
    const stimulus = next.stimulus!;
    expect(stimulus.task).toBe("turing");
    expect(stimulus.payload.image).toBeTypeOf("string");

    const ack = await api.submit(token, {
      stimulus: stimulus.id,
      verdict: "generated",
      difficulty: 2,
    });
    expect(ack.status).toBe("recorded");
    expect(ack.stimulus).toBe(stimulus.id);
    expect(ack.answered).toBe(1);
    expect(ack.target).toBe(3);
    expect(ack.done).toBe(false);

    const dup = await api
      .submit(token, { stimulus: stimulus.id, verdict: "generated", difficulty: 2 })
      .then(() => null)
      .catch((e: unknown) => e);
    expect(dup).toBeInstanceOf(ConflictError);
    expect((dup as ConflictError).status).toBe(409);
  });

  it("surfaces validation failures as 422", async () => {
    const { token } = await api.createSession(PROFILE, server.experimentId, "turing");
    const next = await api.next(token);
    const err = await api
      .submit(token, { stimulus: next.stimulus!.id, verdict: "real", difficulty: 9 })
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).message).toContain("difficulty");
  });
});

describe("transport", () => {
  it("wraps a refused connection in NetworkError", async () => {
    const dead = new MockStudyServer();
    const deadBase = await dead.start();
    await dead.stop();
    const deadApi = new StudyApi(deadBase);
    const err = await deadApi
      .progress("tok-1")
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(NetworkError);
  });

  it("builds image URLs with the alias escaped", () => {
    expect(api.imageUrl("a/b c")).toBe(`${base}/api/images/a%2Fb%20c`);
  });

  it("serves PNG bytes for a scheduled image", async () => {
    const { token } = await api.createSession(PROFILE, server.experimentId, "turing");
    const next = await api.next(token);
    const alias = next.stimulus!.payload.image!;
    const res = await fetch(api.imageUrl(alias));
    expect(res.status).toBe(200);
    expect(res.headers.get("content-type")).toBe("image/png");
    const bytes = new Uint8Array(await res.arrayBuffer());
    expect(Array.from(bytes.slice(0, 4))).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });
});
