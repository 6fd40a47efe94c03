/**
 * Session state: one expert's drafts across every hop page, the
 * completeness rules that gate submission, and the submit-all flow
 * (one batch per hop, each independently retryable).
 */

import { postBatch, ValidationFailure } from "./api.js";
import type { SubmissionReceipt } from "./api.js";
import { untouched } from "./interval.js";
import type { IntervalState } from "./interval.js";
import {
  draftKey,
  questionsFor,
  type DraftResponse,
  type HopDocument,
  type StudyDocument,
  type SubmissionBatch,
} from "./model.js";

export interface Session {
  study: StudyDocument;
  expertId: string;
  /** draftKey(hop, attribute) -> control state */
  drafts: Map<string, IntervalState>;
  /** hop_id -> receipt for batches the server has already accepted */
  acknowledged: Map<string, SubmissionReceipt>;
}

export type HopOutcome =
  | { hop_id: string; status: "accepted"; receipt: SubmissionReceipt }
  | { hop_id: string; status: "rejected"; invalid: string[] }
  | { hop_id: string; status: "failed"; reason: string };

export function createSession(study: StudyDocument): Session {
  const drafts = new Map<string, IntervalState>();
  for (const hop of study.hops) {
    for (const attribute of questionsFor(hop)) {
      drafts.set(draftKey(hop.hop_id, attribute),
                 untouched(study.scale_min, study.scale_max));
    }
  }
  return { study, expertId: "", drafts, acknowledged: new Map() };
}

export function getState(session: Session, hopId: string,
                         attribute: string): IntervalState {
  const state = session.drafts.get(draftKey(hopId, attribute));
  if (!state) throw new Error(`unknown question ${hopId}:${attribute}`);
  return state;
}

export function setState(session: Session, hopId: string,
                         attribute: string, state: IntervalState): void {
  session.drafts.set(draftKey(hopId, attribute), state);
}

/** Questions on this hop's page the expert has not touched yet. */
export function incompleteQuestions(session: Session,
                                    hop: HopDocument): string[] {
  return questionsFor(hop)
    .filter((attr) => !getState(session, hop.hop_id, attr).touched);
}

export function hopComplete(session: Session, hop: HopDocument): boolean {
  return incompleteQuestions(session, hop).length === 0;
}

/** Every question on every page answered and an identifier entered. */
export function sessionComplete(session: Session): boolean {
  return session.expertId.trim().length > 0
    && session.study.hops.every((hop) => hopComplete(session, hop));
}

export function buildBatch(session: Session,
                           hop: HopDocument): SubmissionBatch {
  return {
    expert_id: session.expertId.trim(),
    records: questionsFor(hop).map((attribute) => {
      const state = getState(session, hop.hop_id, attribute);
      return {
        hop_id: hop.hop_id,
        attribute,
        lower: state.lower,
        upper: state.upper,
      };
    }),
  };
}

/** Flatten the drafts for local persistence. */
export function toDraftResponses(session: Session): DraftResponse[] {
  const responses: DraftResponse[] = [];
  for (const hop of session.study.hops) {
    for (const attribute of questionsFor(hop)) {
      const state = getState(session, hop.hop_id, attribute);
      responses.push({ hop_id: hop.hop_id, attribute, ...state });
    }
  }
  return responses;
}

export function restoreDraftResponses(session: Session,
                                      responses: DraftResponse[]): void {
  for (const r of responses) {
    if (session.drafts.has(draftKey(r.hop_id, r.attribute))) {
      setState(session, r.hop_id, r.attribute,
               { lower: r.lower, upper: r.upper, touched: r.touched });
    }
  }
}

/**
 * Post one batch per hop. Hops already acknowledged in an earlier
 * attempt are skipped, so retrying after a failure never re-submits or
 * re-enters anything. A 422 reports the offending question keys.
 */
export async function submitAll(
  session: Session,
  options: { baseUrl: string; token?: string },
): Promise<HopOutcome[]> {
  const outcomes: HopOutcome[] = [];
  for (const hop of session.study.hops) {
    const already = session.acknowledged.get(hop.hop_id);
    if (already) {
      outcomes.push({ hop_id: hop.hop_id, status: "accepted",
                      receipt: already });
      continue;
    }
    try {
      const receipt = await postBatch(options.baseUrl,
                                      buildBatch(session, hop),
                                      options.token);
      session.acknowledged.set(hop.hop_id, receipt);
      outcomes.push({ hop_id: hop.hop_id, status: "accepted", receipt });
    } catch (error) {
      if (error instanceof ValidationFailure) {
        outcomes.push({
          hop_id: hop.hop_id,
          status: "rejected",
          invalid: error.errors.map((e) => draftKey(e.hop_id, e.attribute)),
        });
      } else {
        outcomes.push({
          hop_id: hop.hop_id,
          status: "failed",
          reason: error instanceof Error ? error.message : String(error),
        });
      }
    }
  }
  return outcomes;
}
