/**
 * Shared types for the questionnaire, mirroring the collection
 * service's HTTP contract.
 */

export type HopKind = "attack" | "evade";

export interface HopDocument {
  hop_id: string;
  name: string;
  kind: HopKind;
}

export interface StudyDocument {
  study_id: string;
  scale_min: number;
  scale_max: number;
  hops: HopDocument[];
  questions: Record<HopKind, Record<string, string>>;
}

/** One question's interval answer while it is being edited. */
export interface DraftResponse {
  hop_id: string;
  attribute: string;
  lower: number;
  upper: number;
  touched: boolean;
}

export interface SubmissionRecord {
  hop_id: string;
  attribute: string;
  lower: number;
  upper: number;
}

export interface SubmissionBatch {
  expert_id: string;
  records: SubmissionRecord[];
}

export interface RecordError {
  index: number;
  hop_id: string;
  attribute: string;
  error: string;
  detail: string;
}

/**
 * Question order per hop kind: the rated attributes in their published
 * order, with the overall-difficulty question always last.
 */
export const ATTRIBUTE_ORDER: Record<HopKind, readonly string[]> = {
  attack: ["c", "t", "f", "a", "d", "r", "g", "o"],
  evade: ["c", "a", "r", "o"],
};

export function questionsFor(hop: HopDocument): readonly string[] {
  return ATTRIBUTE_ORDER[hop.kind];
}

export function questionText(study: StudyDocument, hop: HopDocument,
                             attribute: string): string {
  return study.questions[hop.kind]?.[attribute] ?? attribute;
}

export function draftKey(hopId: string, attribute: string): string {
  return `${hopId}:${attribute}`;
}
