/**
 * Local draft persistence: every change is autosaved so a crashed tab,
 * a reload, or a server outage never costs the expert their answers.
 */

import type { DraftResponse } from "./model.js";

export interface SessionDraft {
  expert_id: string;
  responses: DraftResponse[];
  saved_at: string;
}

const DRAFT_PREFIX = "elicit_draft_v1:";

function key(studyId: string): string {
  return DRAFT_PREFIX + studyId;
}

export function saveDraft(studyId: string, expertId: string,
                          responses: DraftResponse[]): void {
  try {
    const draft: SessionDraft = {
      expert_id: expertId,
      responses,
      saved_at: new Date().toISOString(),
    };
    localStorage.setItem(key(studyId), JSON.stringify(draft));
  } catch {
    // Storage may be full or disabled; drafts are best-effort.
  }
}

export function loadDraft(studyId: string): SessionDraft | null {
  try {
    const raw = localStorage.getItem(key(studyId));
    if (!raw) return null;
    const parsed = JSON.parse(raw) as SessionDraft;
    if (!parsed || !Array.isArray(parsed.responses)) return null;
    return parsed;
  } catch {
    return null;
  }
}

export function clearDraft(studyId: string): void {
  try {
    localStorage.removeItem(key(studyId));
  } catch {
    // ignore storage errors
  }
}
