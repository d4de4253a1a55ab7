/** Wires the document view, the field form, and the submit flow together.
 *
 * mountApp owns a single ReviewState and re-renders the form from it after
 * every transition; the word spans are built once and only restyled.
 */

import { ApiError, fetchDocument, fetchExtraction, submitFeedback } from "./api.js";
import { fieldError } from "./canonical.js";
import {
  canSubmit,
  clickToFill,
  feedbackPayload,
  initReview,
  markAccepted,
  markFailed,
  markRejected,
  markSubmitting,
  setBuffer,
  type ReviewState,
} from "./state.js";
import { applyHighlights, outlineField, renderDocument, FIELD_COLORS } from "./render.js";
import {
  FIELDS,
  flattenWords,
  type DocumentJson,
  type ExtractionJson,
  type FieldName,
} from "./types.js";

export interface MountOptions {
  base: string;
  docId: string;
}

export async function mountApp(root: HTMLElement, options: MountOptions): Promise<void> {
  const doc = root.ownerDocument;
  root.textContent = "";

  const docView = doc.createElement("div");
  docView.className = "doc-view";
  const form = doc.createElement("form");
  form.className = "field-form";
  root.append(docView, form);

  let layout: DocumentJson;
  let extraction: ExtractionJson;
  try {
    layout = await fetchDocument(options.base, options.docId);
    extraction = await fetchExtraction(options.base, options.docId);
  } catch (err) {
    const note = doc.createElement("p");
    note.className = "load-error";
    note.textContent = err instanceof ApiError ? err.message : String(err);
    root.append(note);
    return;
  }

  const words = flattenWords(layout);
  let state: ReviewState = initReview(options.docId, extraction);
  let focusedField: FieldName | null = null;

  const spans = renderDocument(docView, layout, words, (index) => {
    if (focusedField !== null && state.status !== "submitting") {
      state = clickToFill(state, focusedField, index, words);
      renderForm();
    }
  });
  applyHighlights(spans, extraction);

  const inputs = {} as Record<FieldName, HTMLInputElement>;
  const errorSlots = {} as Record<FieldName, HTMLElement>;

  for (const field of FIELDS) {
    const row = doc.createElement("label");
    row.className = "field-row";
    row.dataset.field = field;

    const swatch = doc.createElement("span");
    swatch.className = "swatch";
    swatch.style.backgroundColor = FIELD_COLORS[field];

    const name = doc.createElement("span");
    name.className = "field-name";
    name.textContent = field;

    const input = doc.createElement("input");
    input.name = field;
    input.addEventListener("input", () => {
      state = setBuffer(state, field, input.value);
      renderForm();
    });
    input.addEventListener("focus", () => {
      focusedField = field;
    });

    const probability = doc.createElement("span");
    probability.className = "probability";
    const per = extraction.perField[field];
    if (per?.present && per.probability !== undefined) {
      probability.textContent = per.probability.toFixed(2);
    }

    const error = doc.createElement("span");
    error.className = "field-error";

    row.addEventListener("mouseenter", () => outlineField(spans, extraction, field));
    row.addEventListener("mouseleave", () => outlineField(spans, extraction, null));

    row.append(swatch, name, input, probability, error);
    form.append(row);
    inputs[field] = input;
    errorSlots[field] = error;
  }

  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = "Accept invoice";
  const banner = doc.createElement("p");
  banner.className = "banner";
  const retry = doc.createElement("button");
  retry.type = "button";
  retry.className = "retry";
  retry.textContent = "Retry";
  retry.hidden = true;
  form.append(submit, banner, retry);

  async function doSubmit(): Promise<void> {
    state = markSubmitting(state);
    renderForm();
    try {
      await submitFeedback(options.base, options.docId, feedbackPayload(state));
      state = markAccepted(state);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        state = markRejected(state, err.fieldErrors);
      } else {
        state = markFailed(state, err instanceof ApiError ? err.message : String(err));
      }
    }
    renderForm();
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (canSubmit(state)) void doSubmit();
  });
  retry.addEventListener("click", () => {
    void doSubmit();
  });

  function renderForm(): void {
    for (const field of FIELDS) {
      const input = inputs[field];
      if (input.value !== state.fields[field].buffer) {
        input.value = state.fields[field].buffer;
      }
      const clientError = fieldError(field, state.fields[field].buffer);
      const serverError = state.fieldErrors[field];
      errorSlots[field].textContent = clientError ?? serverError ?? "";
    }
    submit.disabled = !canSubmit(state);
    retry.hidden = state.status !== "failed";
    banner.textContent =
      state.status === "accepted"
        ? "Invoice accepted."
        : state.status === "submitting"
          ? "Submitting..."
          : state.status === "failed"
            ? (state.submitError ?? "submission failed")
            : "";
    banner.dataset.status = state.status;
  }

  renderForm();
}

/** Entry point for index.html: ?doc=<id>&api=<service base>. */
export function bootFromLocation(root: HTMLElement, location: Location): Promise<void> | null {
  const params = new URLSearchParams(location.search);
  const docId = params.get("doc");
  if (!docId) {
    root.textContent = "missing ?doc=<document id>";
    return null;
  }
  const base = params.get("api") ?? "";
  return mountApp(root, { base, docId });
}
