import { afterEach, describe, expect, it, vi } from "vitest";

import {
  buildBatch,
  createSession,
  getState,
  hopComplete,
  incompleteQuestions,
  restoreDraftResponses,
  sessionComplete,
  setState,
  submitAll,
  toDraftResponses,
} from "../src/session.js";
import { moveLower, moveUpper, untouched } from "../src/interval.js";
import { makeStudy } from "./helpers.js";

function touchEverything(session: ReturnType<typeof createSession>) {
  for (const hop of session.study.hops) {
    for (const [key, state] of session.drafts) {
      if (key.startsWith(`${hop.hop_id}:`)) {
        session.drafts.set(key, { ...state, touched: true });
      }
    }
  }
}

afterEach(() => vi.unstubAllGlobals());

describe("completeness rules", () => {
  it("a fresh session has every question untouched", () => {
    const session = createSession(makeStudy());
    const [attack, evade] = session.study.hops;
    expect(incompleteQuestions(session, attack!)).toEqual(
      ["c", "t", "f", "a", "d", "r", "g", "o"]);
    expect(incompleteQuestions(session, evade!)).toEqual(
      ["c", "a", "r", "o"]);
    expect(sessionComplete(session)).toBe(false);
  });

  it("touching every question completes a hop page", () => {
    const session = createSession(makeStudy());
    const attack = session.study.hops[0]!;
    for (const attr of ["c", "t", "f", "a", "d", "r", "g", "o"]) {
      setState(session, "A01", attr,
               moveLower(getState(session, "A01", attr), 30, 0, 100));
    }
    expect(hopComplete(session, attack)).toBe(true);
  });

  it("needs an expert identifier even when all pages are complete", () => {
    const session = createSession(makeStudy());
    touchEverything(session);
    expect(sessionComplete(session)).toBe(false);
    session.expertId = "  ";
    expect(sessionComplete(session)).toBe(false);
    session.expertId = "expert-1";
    expect(sessionComplete(session)).toBe(true);
  });
});

describe("batch building", () => {
  it("posts exactly what is displayed, in question order", () => {
    const session = createSession(makeStudy());
    session.expertId = "expert-1";
    setState(session, "V01", "c",
             moveUpper(moveLower(untouched(0, 100), 10, 0, 100),
                       40, 0, 100));
    const batch = buildBatch(session, session.study.hops[1]!);
    expect(batch.expert_id).toBe("expert-1");
    expect(batch.records.map((r) => r.attribute)).toEqual(
      ["c", "a", "r", "o"]);
    expect(batch.records[0]).toEqual(
      { hop_id: "V01", attribute: "c", lower: 10, upper: 40 });
  });

  it("draft responses round-trip through persistence form", () => {
    const session = createSession(makeStudy());
    setState(session, "A01", "d",
             { lower: 12, upper: 34, touched: true });
    const restored = createSession(makeStudy());
    restoreDraftResponses(restored, toDraftResponses(session));
    expect(getState(restored, "A01", "d")).toEqual(
      { lower: 12, upper: 34, touched: true });
  });

  it("ignores draft entries for unknown questions", () => {
    const session = createSession(makeStudy());
    restoreDraftResponses(session, [
      { hop_id: "Z99", attribute: "c", lower: 1, upper: 2, touched: true },
      { hop_id: "A01", attribute: "x", lower: 1, upper: 2, touched: true },
    ]);
    expect(session.drafts.size).toBe(12);
  });
});

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("submit-all flow", () => {
  it("posts one batch per hop and reports acceptances", async () => {
    const session = createSession(makeStudy());
    session.expertId = "expert-1";
    touchEverything(session);

    const fetchMock = vi.fn(async () =>
      jsonResponse(201, { accepted: 8, submitted_at: "t0" }));
    vi.stubGlobal("fetch", fetchMock);

    const outcomes = await submitAll(session, { baseUrl: "" });
    expect(outcomes.map((o) => o.status)).toEqual(["accepted", "accepted"]);
    expect(fetchMock).toHaveBeenCalledTimes(2);
    const firstBody = JSON.parse(
      (fetchMock.mock.calls[0]![1] as RequestInit).body as string);
    expect(firstBody.records).toHaveLength(8);
  });

  it("maps a 422 to the offending question keys", async () => {
    const session = createSession(makeStudy());
    session.expertId = "expert-1";
    touchEverything(session);

    vi.stubGlobal("fetch", vi.fn(async (url: string, init?: RequestInit) => {
      const body = JSON.parse(init?.body as string);
      if (body.records[0].hop_id === "A01") {
        return jsonResponse(422, { detail: { errors: [
          { index: 4, hop_id: "A01", attribute: "d",
            error: "MalformedInterval", detail: "lower > upper" },
        ] } });
      }
      return jsonResponse(201, { accepted: 4, submitted_at: "t0" });
    }));

    const outcomes = await submitAll(session, { baseUrl: "" });
    expect(outcomes[0]).toEqual(
      { hop_id: "A01", status: "rejected", invalid: ["A01:d"] });
    expect(outcomes[1]!.status).toBe("accepted");
  });

  it("retries only the hops that were not acknowledged", async () => {
    const session = createSession(makeStudy());
    session.expertId = "expert-1";
    touchEverything(session);

    let attackCalls = 0;
    vi.stubGlobal("fetch", vi.fn(async (url: string, init?: RequestInit) => {
      const body = JSON.parse(init?.body as string);
      if (body.records[0].hop_id === "A01") {
        attackCalls += 1;
        if (attackCalls === 1) throw new TypeError("network down");
        return jsonResponse(201, { accepted: 8, submitted_at: "t1" });
      }
      return jsonResponse(201, { accepted: 4, submitted_at: "t0" });
    }));

    const first = await submitAll(session, { baseUrl: "" });
    expect(first[0]!.status).toBe("failed");
    expect(first[1]!.status).toBe("accepted");
    const draftsBefore = toDraftResponses(session);

    const second = await submitAll(session, { baseUrl: "" });
    expect(second.map((o) => o.status)).toEqual(["accepted", "accepted"]);
    // The evade hop was not re-posted: one attack retry, nothing else.
    expect(attackCalls).toBe(2);
    expect(toDraftResponses(session)).toEqual(draftsBefore);
  });
});
