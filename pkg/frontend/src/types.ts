/** Shapes of the service's JSON payloads, plus the client's own view model. */

export const FIELDS = [
  "Number",
  "Date",
  "Currency",
  "OrderId",
  "Total",
  "LineTotal",
  "TaxTotal",
  "TaxPercent",
] as const;

export type FieldName = (typeof FIELDS)[number];

export interface WordJson {
  text: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface LineJson {
  words: WordJson[];
}

export interface PageJson {
  width: number;
  height: number;
  lines: LineJson[];
}

export interface DocumentJson {
  docId: string;
  senderId: string;
  pages: PageJson[];
}

/** One word with its position in the document's global reading order. */
export interface PositionedWord extends WordJson {
  index: number;
  page: number;
}

export interface FieldExtraction {
  present: boolean;
  value?: string;
  probability?: number;
  sourceWordIndices?: number[];
}

export interface ExtractionJson {
  modelId: string;
  invoice: Partial<Record<FieldName, string>>;
  perField: Record<FieldName, FieldExtraction>;
}

/** Words flattened into reading order; index is the server's word index. */
export function flattenWords(doc: DocumentJson): PositionedWord[] {
  const out: PositionedWord[] = [];
  doc.pages.forEach((page, p) => {
    for (const line of page.lines) {
      for (const w of line.words) {
        out.push({ ...w, index: out.length, page: p });
      }
    }
  });
  return out;
}
