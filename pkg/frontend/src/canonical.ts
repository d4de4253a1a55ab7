/** Client-side mirror of the service's canonical field formats.
 *
 * These gates catch format garbage before a request goes out; the service
 * re-parses everything and stays authoritative (a value passing here can
 * still come back as a 422, for example an unknown currency code). Empty
 * input is always valid and means "field absent".
 */

import type { FieldName } from "./types.js";

const CONFUSION: Record<string, string> = {
  o: "0", O: "0", l: "1", I: "1", S: "5", B: "8",
};

/** Substitute confusable letters with digits inside digit-bearing runs. */
export function repairDigits(text: string): string {
  return text.replace(/[0-9oOlISB.,:/-]+/g, (run) =>
    /\d/.test(run) ? run.replace(/[oOlISB]/g, (c) => CONFUSION[c] ?? c) : run,
  );
}

/** Integer value of a possibly group-separated digit string, or null. */
function parseIntPart(text: string): { value: number; sep: string | null } | null {
  if (/^\d+$/.test(text)) {
    return { value: parseInt(text, 10), sep: null };
  }
  const m = /^\d{1,3}(([., ])\d{3})+$/.exec(text);
  if (m) {
    const sep = m[2]!;
    const nonDigits = text.length - text.replace(new RegExp(`\\${sep}`, "g"), "").length;
    if (nonDigits === (text.match(/[^0-9]/g) ?? []).length) {
      return { value: parseInt(text.split(sep).join(""), 10), sep };
    }
  }
  return null;
}

function amountCents(text: string): number | null {
  const m = /^(.+?)([.,])(\d{1,2})$/.exec(text);
  if (m) {
    const intPart = parseIntPart(m[1]!);
    if (intPart !== null && intPart.sep !== m[2]) {
      const frac = m[3]!;
      return intPart.value * 100 + parseInt(frac, 10) * (frac.length === 1 ? 10 : 1);
    }
  }
  const plain = parseIntPart(text);
  return plain === null ? null : plain.value * 100;
}

export function parseAmount(text: string): string | null {
  const repaired = repairDigits(text.trim());
  if (!repaired) return null;
  const cents = amountCents(repaired);
  if (cents === null) return null;
  return `${Math.floor(cents / 100)}.${String(cents % 100).padStart(2, "0")}`;
}

export function parsePercent(text: string): string | null {
  let t = text.trim();
  if (t.endsWith("%")) t = t.slice(0, -1).trimEnd();
  const value = parseAmount(t);
  if (value === null || parseFloat(value) > 100.0) return null;
  return value;
}

const MONTHS: Record<string, number> = {
  january: 1, february: 2, march: 3, april: 4, may: 5, june: 6, july: 7,
  august: 8, september: 9, october: 10, november: 11, december: 12,
  januar: 1, februar: 2, marts: 3, märz: 3, maj: 5, mai: 5, juni: 6,
  juli: 7, oktober: 10, dezember: 12,
};

function makeDate(year: number, month: number, day: number): string | null {
  if (year < 1900 || year > 2100 || month < 1 || month > 12 || day < 1) return null;
  const date = new Date(Date.UTC(year, month - 1, day));
  if (date.getUTCMonth() !== month - 1 || date.getUTCDate() !== day) return null;
  const mm = String(month).padStart(2, "0");
  const dd = String(day).padStart(2, "0");
  return `${year}-${mm}-${dd}`;
}

export function parseDate(text: string): string | null {
  const t = repairDigits(text.trim().replace(/\s+/g, " "));
  let m = /^(\d{4})-(\d{1,2})-(\d{1,2})$/.exec(t);
  if (m) return makeDate(+m[1]!, +m[2]!, +m[3]!);
  m = /^(\d{1,2})\.(\d{1,2})\.(\d{4})$/.exec(t);
  if (m) return makeDate(+m[3]!, +m[2]!, +m[1]!);
  // Slash dates read as month/day/year.
  m = /^(\d{1,2})\/(\d{1,2})\/(\d{4})$/.exec(t);
  if (m) return makeDate(+m[3]!, +m[1]!, +m[2]!);
  m = /^(\d{1,2})\.? (\S+) (\d{4})$/.exec(t);
  if (m) {
    const month = MONTHS[m[2]!.toLowerCase()];
    if (month !== undefined) return makeDate(+m[3]!, month, +m[1]!);
  }
  return null;
}

const SYMBOLS: Record<string, string> = { $: "USD", "€": "EUR", "£": "GBP" };

export function parseCurrency(text: string): string | null {
  const t = text.trim();
  if (t in SYMBOLS) return SYMBOLS[t]!;
  // Codes must be uppercase; the service owns the actual code list.
  if (/^[A-Z]{3}$/.test(t)) return t;
  return null;
}

export function parseId(text: string): string | null {
  const t = text.trim();
  return t ? t : null;
}

export const FIELD_KINDS: Record<FieldName, (text: string) => string | null> = {
  Number: parseId,
  Date: parseDate,
  Currency: parseCurrency,
  OrderId: parseId,
  Total: parseAmount,
  LineTotal: parseAmount,
  TaxTotal: parseAmount,
  TaxPercent: parsePercent,
};

/** Null when the buffer is acceptable (empty or parseable), else a message. */
export function fieldError(field: FieldName, buffer: string): string | null {
  if (buffer.trim() === "") return null;
  if (FIELD_KINDS[field](buffer) === null) {
    return `not a valid ${field} value`;
  }
  return null;
}
