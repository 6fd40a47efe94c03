/**
 * DOM layer: a paged questionnaire, one page per hop, one dual-handle
 * interval control per attribute question. No framework — the state
 * lives in session.ts and this module only reflects it.
 */

import { moveLower, moveUpper } from "./interval.js";
import {
  draftKey,
  questionText,
  questionsFor,
  type HopDocument,
  type StudyDocument,
} from "./model.js";
import {
  buildBatch,
  getState,
  hopComplete,
  incompleteQuestions,
  sessionComplete,
  setState,
  submitAll,
  type HopOutcome,
  type Session,
} from "./session.js";

export interface UiOptions {
  baseUrl: string;
  token?: string;
  /** Called after every accepted state change (drives draft autosave). */
  onChange?: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderQuestion(session: Session, hop: HopDocument,
                        attribute: string, options: UiOptions): HTMLElement {
  const { scale_min: min, scale_max: max } = session.study;
  const container = el("div", "question incomplete");
  container.dataset.key = draftKey(hop.hop_id, attribute);

  const prompt = el("label", "prompt",
                    questionText(session.study, hop, attribute));
  const readout = el("span", "readout");
  const sliders = el("div", "sliders");

  const lowerInput = el("input", "handle handle-lower");
  const upperInput = el("input", "handle handle-upper");
  for (const [input, name] of [[lowerInput, "lower bound"],
                               [upperInput, "upper bound"]] as const) {
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.step = "1";
    input.setAttribute("aria-label",
                       `${attribute} ${name} for ${hop.name}`);
  }

  const reflect = () => {
    const state = getState(session, hop.hop_id, attribute);
    lowerInput.value = String(state.lower);
    upperInput.value = String(state.upper);
    readout.textContent = `${state.lower} – ${state.upper}`;
    container.classList.toggle("incomplete", !state.touched);
    container.classList.remove("invalid");
  };

  const onInput = (which: "lower" | "upper") => () => {
    const state = getState(session, hop.hop_id, attribute);
    const value = Number(which === "lower" ? lowerInput.value
                                           : upperInput.value);
    const next = which === "lower"
      ? moveLower(state, value, min, max)
      : moveUpper(state, value, min, max);
    setState(session, hop.hop_id, attribute, next);
    reflect();
    options.onChange?.();
  };
  lowerInput.addEventListener("input", onInput("lower"));
  upperInput.addEventListener("input", onInput("upper"));

  sliders.append(lowerInput, upperInput);
  container.append(prompt, readout, sliders);
  reflect();
  return container;
}

function renderHopPage(session: Session, hop: HopDocument,
                       options: UiOptions): HTMLElement {
  const page = el("section", "hop-page");
  page.dataset.hop = hop.hop_id;
  page.append(el("h2", "hop-name", hop.name),
              el("p", "hop-kind", `${hop.kind} hop`));
  for (const attribute of questionsFor(hop)) {
    page.append(renderQuestion(session, hop, attribute, options));
  }
  const status = el("p", "page-status");
  page.append(status);
  return page;
}

function renderSubmitPage(session: Session, options: UiOptions,
                          refreshStatuses: () => void): HTMLElement {
  const page = el("section", "hop-page submit-page");
  page.append(el("h2", undefined, "Review and submit"));

  const identity = el("div", "identity");
  const label = el("label", undefined, "Your participant identifier");
  const input = el("input", "expert-id");
  input.type = "text";
  input.value = session.expertId;
  input.addEventListener("input", () => {
    session.expertId = input.value;
    refreshStatuses();
    options.onChange?.();
  });
  label.append(input);
  identity.append(label);

  const button = el("button", "submit-all", "Submit all responses");
  const results = el("ul", "outcomes");

  const showOutcomes = (outcomes: HopOutcome[]) => {
    results.replaceChildren();
    for (const outcome of outcomes) {
      const item = el("li", `outcome outcome-${outcome.status}`);
      if (outcome.status === "accepted") {
        item.textContent =
          `${outcome.hop_id}: accepted (${outcome.receipt.accepted} answers)`;
      } else if (outcome.status === "rejected") {
        item.textContent = `${outcome.hop_id}: rejected — fix the ` +
          "highlighted questions";
        for (const key of outcome.invalid) {
          document.querySelector(`.question[data-key="${key}"]`)
            ?.classList.add("invalid");
        }
      } else {
        item.textContent =
          `${outcome.hop_id}: not sent (${outcome.reason}) — your answers ` +
          "are saved locally; submit again to retry";
      }
      results.append(item);
    }
    button.textContent = outcomes.every((o) => o.status === "accepted")
      ? "All submitted"
      : "Retry failed submissions";
  };

  button.addEventListener("click", () => {
    if (!sessionComplete(session)) return;
    button.disabled = true;
    void submitAll(session, options).then((outcomes) => {
      button.disabled = false;
      showOutcomes(outcomes);
    });
  });

  page.append(identity, button, results);
  return page;
}

/** Build the whole questionnaire inside root and return a controller. */
export function renderApp(root: HTMLElement, session: Session,
                          options: UiOptions) {
  root.replaceChildren();
  const header = el("header");
  header.append(el("h1", undefined,
                   `Expert judgement study: ${session.study.study_id}`));
  root.append(header);

  const pages: HTMLElement[] = session.study.hops.map(
    (hop) => renderHopPage(session, hop, options));

  const refreshStatuses = () => {
    session.study.hops.forEach((hop, i) => {
      const page = pages[i];
      if (!page) return;
      const status = page.querySelector(".page-status");
      if (!status) return;
      const missing = incompleteQuestions(session, hop);
      status.textContent = hopComplete(session, hop)
        ? "Page complete"
        : `${missing.length} question(s) still untouched`;
    });
    const submitButton =
      root.querySelector<HTMLButtonElement>("button.submit-all");
    if (submitButton) submitButton.disabled = !sessionComplete(session);
  };

  const wrapped: UiOptions = {
    ...options,
    onChange: () => {
      refreshStatuses();
      options.onChange?.();
    },
  };

  // Rebuild pages with the wrapped change hook so completeness and the
  // submit gate refresh on every input.
  pages.length = 0;
  for (const hop of session.study.hops) {
    pages.push(renderHopPage(session, hop, wrapped));
  }
  const submitPage = renderSubmitPage(session, wrapped, refreshStatuses);
  const allPages = [...pages, submitPage];

  const nav = el("nav", "pager");
  const prev = el("button", "prev", "Previous");
  const next = el("button", "next", "Next");
  const where = el("span", "where");
  nav.append(prev, where, next);

  let current = 0;
  const show = (index: number) => {
    current = Math.min(allPages.length - 1, Math.max(0, index));
    allPages.forEach((page, i) => {
      page.style.display = i === current ? "" : "none";
    });
    where.textContent = `${current + 1} / ${allPages.length}`;
    prev.disabled = current === 0;
    next.disabled = current === allPages.length - 1;
  };
  prev.addEventListener("click", () => show(current - 1));
  next.addEventListener("click", () => show(current + 1));

  root.append(nav, ...allPages);
  refreshStatuses();
  show(0);

  return { show, refreshStatuses, buildBatch: (hop: HopDocument) =>
    buildBatch(session, hop) };
}
