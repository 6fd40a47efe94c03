// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { clearDraft, loadDraft, saveDraft } from "../src/drafts.js";
import type { DraftResponse } from "../src/model.js";

const RESPONSES: DraftResponse[] = [
  { hop_id: "A01", attribute: "c", lower: 10, upper: 60, touched: true },
  { hop_id: "A01", attribute: "o", lower: 25, upper: 75, touched: false },
];

describe("draft persistence", () => {
  beforeEach(() => localStorage.clear());

  it("round-trips a session draft", () => {
    saveDraft("study-1", "expert-9", RESPONSES);
    const draft = loadDraft("study-1");
    expect(draft?.expert_id).toBe("expert-9");
    expect(draft?.responses).toEqual(RESPONSES);
    expect(typeof draft?.saved_at).toBe("string");
  });

  it("is keyed per study", () => {
    saveDraft("study-1", "expert-9", RESPONSES);
    expect(loadDraft("study-2")).toBeNull();
  });

  it("returns null when nothing is stored", () => {
    expect(loadDraft("study-1")).toBeNull();
  });

  it("survives corrupted storage contents", () => {
    localStorage.setItem("elicit_draft_v1:study-1", "{not json");
    expect(loadDraft("study-1")).toBeNull();
    localStorage.setItem("elicit_draft_v1:study-1", '{"responses": 7}');
    expect(loadDraft("study-1")).toBeNull();
  });

  it("clears", () => {
    saveDraft("study-1", "expert-9", RESPONSES);
    clearDraft("study-1");
    expect(loadDraft("study-1")).toBeNull();
  });
});
