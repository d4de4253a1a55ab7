/** Review session state and its pure transitions.
 *
 * Edit buffers start as the extracted values, so submitting an untouched
 * form sends back exactly what the model produced (the accept-as-is path).
 * Typing and word-clicking both write the buffer; typing clears the click
 * selection so the two input styles never fight over one field.
 */

import { fieldError } from "./canonical.js";
import { FIELDS, type ExtractionJson, type FieldName, type PositionedWord } from "./types.js";

export interface FieldState {
  buffer: string;
  dirty: boolean;
  /** Word indices the buffer was built from, empty when typed. */
  selection: number[];
}

export type SubmissionStatus = "editing" | "submitting" | "accepted" | "failed";

export interface ReviewState {
  docId: string;
  modelId: string;
  fields: Record<FieldName, FieldState>;
  status: SubmissionStatus;
  fieldErrors: Partial<Record<FieldName, string>>;
  /** Transport-level failure message; a retry keeps all edits. */
  submitError: string | null;
}

export function initReview(docId: string, extraction: ExtractionJson): ReviewState {
  const fields = {} as Record<FieldName, FieldState>;
  for (const f of FIELDS) {
    const per = extraction.perField[f];
    fields[f] = {
      buffer: per?.present && per.value !== undefined ? per.value : "",
      dirty: false,
      selection: per?.sourceWordIndices ? [...per.sourceWordIndices] : [],
    };
  }
  return {
    docId,
    modelId: extraction.modelId,
    fields,
    status: "editing",
    fieldErrors: {},
    submitError: null,
  };
}

function withField(state: ReviewState, field: FieldName, next: FieldState): ReviewState {
  return { ...state, fields: { ...state.fields, [field]: next } };
}

/** Typing into a field; replaces any click selection. */
export function setBuffer(state: ReviewState, field: FieldName, text: string): ReviewState {
  return withField(state, field, { buffer: text, dirty: true, selection: [] });
}

/** Clicking a word while a field is focused. A click adjacent to the
 * current selection extends the span; anywhere else starts a new one. */
export function clickToFill(
  state: ReviewState,
  field: FieldName,
  wordIndex: number,
  words: PositionedWord[],
): ReviewState {
  const prev = state.fields[field];
  const last = prev.dirty ? prev.selection[prev.selection.length - 1] : undefined;
  const selection = last !== undefined && wordIndex === last + 1
    ? [...prev.selection, wordIndex]
    : [wordIndex];
  const buffer = selection.map((i) => words[i]?.text ?? "").join(" ");
  return withField(state, field, { buffer, dirty: true, selection });
}

/** Current validation verdict, one message per failing field. */
export function validate(state: ReviewState): Partial<Record<FieldName, string>> {
  const errors: Partial<Record<FieldName, string>> = {};
  for (const f of FIELDS) {
    const err = fieldError(f, state.fields[f].buffer);
    if (err !== null) errors[f] = err;
  }
  return errors;
}

export function canSubmit(state: ReviewState): boolean {
  return state.status !== "submitting" && Object.keys(validate(state)).length === 0;
}

/** The feedback body: every field's buffer, blanks meaning absent. */
export function feedbackPayload(state: ReviewState): Record<FieldName, string> {
  const out = {} as Record<FieldName, string>;
  for (const f of FIELDS) out[f] = state.fields[f].buffer;
  return out;
}

export function markSubmitting(state: ReviewState): ReviewState {
  return { ...state, status: "submitting", fieldErrors: {}, submitError: null };
}

export function markAccepted(state: ReviewState): ReviewState {
  return { ...state, status: "accepted", fieldErrors: {}, submitError: null };
}

/** Server-side per-field diagnostics from a 422. */
export function markRejected(
  state: ReviewState,
  errors: Partial<Record<FieldName, string>>,
): ReviewState {
  return { ...state, status: "editing", fieldErrors: errors, submitError: null };
}

/** Transport failure; edits survive for a retry. */
export function markFailed(state: ReviewState, message: string): ReviewState {
  return { ...state, status: "failed", submitError: message };
}
