/** Thin typed client over the extraction service's HTTP API. */

import type { DocumentJson, ExtractionJson, FieldName } from "./types.js";

export class ApiError extends Error {
  status: number | null;
  /** Per-field diagnostics from a 422 feedback rejection. */
  fieldErrors: Partial<Record<FieldName, string>>;
  /** Transport failures and 5xx are worth retrying; validation is not. */
  retryable: boolean;

  constructor(
    message: string,
    status: number | null,
    fieldErrors: Partial<Record<FieldName, string>> = {},
  ) {
    super(message);
    this.status = status;
    this.fieldErrors = fieldErrors;
    this.retryable = status === null || status >= 500;
  }
}

async function request(base: string, path: string, init?: RequestInit): Promise<Response> {
  let response: Response;
  try {
    response = await fetch(base + path, init);
  } catch (err) {
    throw new ApiError(`network failure: ${String(err)}`, null);
  }
  return response;
}

async function errorBody(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (body && typeof body.error === "string") return body.error;
  } catch {
    /* non-JSON error body */
  }
  return `request failed with status ${response.status}`;
}

export async function fetchDocument(base: string, docId: string): Promise<DocumentJson> {
  const response = await request(base, `/documents/${encodeURIComponent(docId)}`);
  if (!response.ok) throw new ApiError(await errorBody(response), response.status);
  return (await response.json()) as DocumentJson;
}

export async function fetchExtraction(base: string, docId: string): Promise<ExtractionJson> {
  const response = await request(base, `/documents/${encodeURIComponent(docId)}/extraction`);
  if (!response.ok) throw new ApiError(await errorBody(response), response.status);
  return (await response.json()) as ExtractionJson;
}

export async function submitFeedback(
  base: string,
  docId: string,
  invoice: Record<string, string>,
): Promise<void> {
  const response = await request(base, `/documents/${encodeURIComponent(docId)}/feedback`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ correctedInvoice: invoice, source: "ui" }),
  });
  if (response.status === 204) return;
  if (response.status === 422) {
    let errors: Partial<Record<FieldName, string>> = {};
    try {
      const body = (await response.json()) as { errors?: Partial<Record<FieldName, string>> };
      errors = body.errors ?? {};
    } catch {
      /* fall through with empty field map */
    }
    throw new ApiError("some fields were rejected", 422, errors);
  }
  throw new ApiError(await errorBody(response), response.status);
}
