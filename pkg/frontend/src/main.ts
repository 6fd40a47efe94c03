/**
 * Bootstrap: fetch the study document (with a retry screen on
 * failure), restore any local draft, and keep autosaving on change.
 */

import { fetchStudy } from "./api.js";
import { clearDraft, loadDraft, saveDraft } from "./drafts.js";
import {
  createSession,
  restoreDraftResponses,
  toDraftResponses,
} from "./session.js";
import { renderApp } from "./ui.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? "";
}

function renderRetry(root: HTMLElement, message: string,
                     retry: () => void): void {
  root.replaceChildren();
  const box = document.createElement("div");
  box.className = "retry-screen";
  const text = document.createElement("p");
  text.textContent = `Could not load the study: ${message}`;
  const button = document.createElement("button");
  button.textContent = "Try again";
  button.addEventListener("click", retry);
  box.append(text, button);
  root.append(box);
}

export async function start(root: HTMLElement): Promise<void> {
  const baseUrl = apiBase();
  let study;
  try {
    study = await fetchStudy(baseUrl);
  } catch (error) {
    renderRetry(root,
                error instanceof Error ? error.message : String(error),
                () => void start(root));
    return;
  }

  const session = createSession(study);
  const draft = loadDraft(study.study_id);
  if (draft) {
    session.expertId = draft.expert_id;
    restoreDraftResponses(session, draft.responses);
  }

  renderApp(root, session, {
    baseUrl,
    onChange: () => saveDraft(study.study_id, session.expertId,
                              toDraftResponses(session)),
  });
}

const root = document.getElementById("app");
if (root) {
  void start(root);
}

export { clearDraft };
