/**
 * Thin typed client for the collection service. What is displayed is
 * what is posted — no transformation happens on the way out.
 */

import type {
  RecordError,
  StudyDocument,
  SubmissionBatch,
} from "./model.js";

export interface SubmissionReceipt {
  accepted: number;
  submitted_at: string;
}

/** 422 from the service: the batch was rejected record by record. */
export class ValidationFailure extends Error {
  readonly errors: RecordError[];

  constructor(errors: RecordError[]) {
    super(`batch rejected: ${errors.length} invalid record(s)`);
    this.name = "ValidationFailure";
    this.errors = errors;
  }
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

export async function fetchStudy(baseUrl: string): Promise<StudyDocument> {
  const response = await fetch(`${baseUrl}/api/study`);
  if (!response.ok) {
    throw new ApiError(response.status,
                       `study fetch failed (${response.status})`);
  }
  return (await response.json()) as StudyDocument;
}

export async function postBatch(
  baseUrl: string,
  batch: SubmissionBatch,
  token?: string,
): Promise<SubmissionReceipt> {
  const headers: Record<string, string> = {
    "Content-Type": "application/json",
  };
  if (token) headers["Authorization"] = `Bearer ${token}`;
  const response = await fetch(`${baseUrl}/api/responses`, {
    method: "POST",
    headers,
    body: JSON.stringify(batch),
  });
  if (response.status === 422) {
    const body = (await response.json()) as {
      detail?: { errors?: RecordError[] };
    };
    throw new ValidationFailure(body.detail?.errors ?? []);
  }
  if (!response.ok) {
    throw new ApiError(response.status,
                       `submission failed (${response.status})`);
  }
  return (await response.json()) as SubmissionReceipt;
}
