/** DOM construction for the positioned document view.
 *
 * Words are absolutely positioned inside per-page boxes using the
 * document's normalized coordinates as percentages, so the layout scales
 * with the viewport without recomputation. The document payload itself is
 * never modified; everything here reads it and writes DOM.
 */

import { FIELDS, type DocumentJson, type ExtractionJson, type FieldName, type PositionedWord } from "./types.js";

export const FIELD_COLORS: Record<FieldName, string> = {
  Number: "#4c78a8",
  Date: "#f58518",
  Currency: "#54a24b",
  OrderId: "#b279a2",
  Total: "#e45756",
  LineTotal: "#72b7b2",
  TaxTotal: "#eeca3b",
  TaxPercent: "#9d755d",
};

const pct = (v: number) => `${(v * 100).toFixed(3)}%`;

/** Build the page boxes and one span per word, returned in reading order. */
export function renderDocument(
  container: HTMLElement,
  doc: DocumentJson,
  words: PositionedWord[],
  onWordClick: (index: number) => void,
): HTMLElement[] {
  container.textContent = "";
  const pageBoxes: HTMLElement[] = [];
  doc.pages.forEach((page, p) => {
    const box = container.ownerDocument.createElement("div");
    box.className = "page";
    box.dataset.page = String(p);
    // Reserve the page's shape before any word lands.
    box.style.aspectRatio = `${page.width} / ${page.height}`;
    container.appendChild(box);
    pageBoxes.push(box);
  });
  const spans: HTMLElement[] = [];
  for (const word of words) {
    const span = container.ownerDocument.createElement("span");
    span.className = "word";
    span.textContent = word.text;
    span.dataset.index = String(word.index);
    span.style.left = pct(word.x);
    span.style.top = pct(word.y);
    span.style.width = pct(word.w);
    span.style.height = pct(word.h);
    span.addEventListener("click", () => onWordClick(word.index));
    pageBoxes[word.page]?.appendChild(span);
    spans.push(span);
  }
  return spans;
}

/** Tint every word that some field's extraction points at. */
export function applyHighlights(spans: HTMLElement[], extraction: ExtractionJson): void {
  for (const span of spans) {
    span.style.removeProperty("background-color");
    delete span.dataset.field;
  }
  for (const field of FIELDS) {
    const per = extraction.perField[field];
    if (!per?.present || !per.sourceWordIndices) continue;
    for (const index of per.sourceWordIndices) {
      const span = spans[index];
      if (span) {
        span.style.backgroundColor = FIELD_COLORS[field] + "55";
        span.dataset.field = field;
      }
    }
  }
}

/** Outline one field's source words (hovering its form row), or clear. */
export function outlineField(
  spans: HTMLElement[],
  extraction: ExtractionJson,
  field: FieldName | null,
): void {
  for (const span of spans) span.classList.remove("outlined");
  if (field === null) return;
  const per = extraction.perField[field];
  if (!per?.present || !per.sourceWordIndices) return;
  for (const index of per.sourceWordIndices) {
    spans[index]?.classList.add("outlined");
  }
}
