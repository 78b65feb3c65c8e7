/**
 * Pure console state logic, kept free of DOM and network so it is unit
 * testable.  Highlighting works off the server-reported OVC construct
 * names (ParseRecord.ovc_pred / ovc_gold) — never client-side matching —
 * so the console can't diverge from the harness's definition of a hit.
 */

import type {
  KbDto,
  LexiconEntryDto,
  ParseRecordDto,
  PeekDto,
  ReportDto,
} from "./api.js";

export interface LexiconForm {
  key: string;
  value: string;
}

export interface ConsoleState {
  sessionId: string | null;
  status: string;
  streamSize: number;
  stepsDone: number;
  peek: PeekDto | null;
  lastRecord: ParseRecordDto | null;
  kb: KbDto | null;
  kbFilter: string;
  report: ReportDto | null;
  form: LexiconForm;
  notice: string;
  formError: string;
  goldVisible: boolean;
}

export function initialState(): ConsoleState {
  return {
    sessionId: null,
    status: "NONE",
    streamSize: 0,
    stepsDone: 0,
    peek: null,
    lastRecord: null,
    kb: null,
    kbFilter: "",
    report: null,
    form: { key: "", value: "" },
    notice: "",
    formError: "",
    goldVisible: false,
  };
}

export interface Span {
  text: string;
  highlight: boolean;
}

function escapeRegExp(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/**
 * Split a formal string into spans, highlighting occurrences of the given
 * construct names at word boundaries.  Constructs come from the server's
 * extraction results.
 */
export function highlightSpans(text: string, constructs: string[]): Span[] {
  const names = constructs.filter((c) => c.length > 0);
  if (names.length === 0 || text.length === 0) {
    return text ? [{ text, highlight: false }] : [];
  }
  const pattern = new RegExp(
    `(?<![\\w])(${names.map(escapeRegExp).join("|")})(?![\\w])`,
    "g",
  );
  const spans: Span[] = [];
  let last = 0;
  for (const m of text.matchAll(pattern)) {
    const start = m.index ?? 0;
    if (start > last) spans.push({ text: text.slice(last, start), highlight: false });
    spans.push({ text: m[0], highlight: true });
    last = start + m[0].length;
  }
  if (last < text.length) spans.push({ text: text.slice(last), highlight: false });
  return spans;
}

/** Constructs the expert should look at: gold ones the parse missed. */
export function missedConstructs(record: ParseRecordDto): string[] {
  const pred = new Set(record.ovc_pred);
  return record.ovc_gold.filter((c) => !pred.has(c));
}

/** Human-readable outcome of a lexicon submission; dedup is surfaced, not hidden. */
export function submissionNotice(added: number, submitted: number): string {
  if (submitted === 0) return "";
  if (added === 0) return "already known — knowledge base unchanged";
  if (added < submitted) return `added ${added} of ${submitted} (rest already known)`;
  return added === 1 ? "entry added to the knowledge base" : `${added} entries added`;
}

export function validateForm(form: LexiconForm): string {
  if (!form.key.trim()) return "key phrase must not be empty";
  if (!form.value.trim()) return "construct value must not be empty";
  return "";
}

export function filterEntries(
  entries: LexiconEntryDto[],
  query: string,
): LexiconEntryDto[] {
  const q = query.trim().toLowerCase();
  if (!q) return entries;
  return entries.filter(
    (e) => e.key.toLowerCase().includes(q) || e.value.toLowerCase().includes(q),
  );
}

export function canParse(state: ConsoleState): boolean {
  return state.sessionId !== null && state.status === "ACTIVE";
}

export interface MetricsView {
  bleu: string;
  precision: string;
  recall: string;
  f1: string;
  cost: string;
}

export function metricsView(report: ReportDto | null): MetricsView {
  if (!report) {
    return { bleu: "–", precision: "–", recall: "–", f1: "–", cost: "–" };
  }
  return {
    bleu: report.corpus_bleu.toFixed(2),
    precision: report.ovc_precision.toFixed(3),
    recall: report.ovc_recall.toFixed(3),
    f1: report.ovc_f1.toFixed(3),
    cost: `${report.total_cost} (read ${report.reading_cost} + err ${report.error_cost})`,
  };
}
