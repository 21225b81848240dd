/**
 * Pure session state for one annotator's browser tab.
 *
 * Invariants kept here rather than in the DOM layer: pending marks may
 * only reference sentences that are currently displayed (changing the
 * snippet list drops stale marks), and the unsaved-mark count is always
 * derivable for the header badge.
 */

import type {
  AnnotationRecord,
  AnnotationRound,
  ModelChoice,
  RankedSentence,
} from "./api.js";

export interface QueryChoice {
  categoryId?: string;
  text?: string;
  label: string;
}

export interface PendingMark {
  fingerprint: string;
  reportId: string | null;
  query: string;
  relevant: boolean;
}

export interface SessionState {
  annotator: string;
  patientId: string | null;
  timePoint: number | null;
  model: ModelChoice;
  round: AnnotationRound;
  query: QueryChoice | null;
  snippets: RankedSentence[];
  pendingMarks: PendingMark[];
  savedMarks: AnnotationRecord[];
}

export function initialState(annotator: string): SessionState {
  return {
    annotator,
    patientId: null,
    timePoint: null,
    model: "description",
    round: "reference",
    query: null,
    snippets: [],
    pendingMarks: [],
    savedMarks: [],
  };
}

export function setInstance(
  state: SessionState,
  patientId: string,
  timePoint: number,
): SessionState {
  return {
    ...state,
    patientId,
    timePoint,
    query: null,
    snippets: [],
    pendingMarks: [],
  };
}

export function setModel(state: SessionState, model: ModelChoice): SessionState {
  return { ...state, model };
}

export function setRound(state: SessionState, round: AnnotationRound): SessionState {
  return { ...state, round, pendingMarks: [] };
}

export function setQuery(state: SessionState, query: QueryChoice): SessionState {
  return { ...state, query };
}

export function queryKey(query: QueryChoice): string {
  if (query.categoryId) return query.categoryId;
  if (query.text) return `text:${query.text}`;
  throw new Error("query has neither a category nor text");
}

/** Replace the displayed snippets; marks referencing vanished sentences drop. */
export function showSnippets(
  state: SessionState,
  snippets: RankedSentence[],
): SessionState {
  const visible = new Set(snippets.map((s) => s.fingerprint));
  return {
    ...state,
    snippets,
    pendingMarks: state.pendingMarks.filter((m) => visible.has(m.fingerprint)),
  };
}

export function toggleMark(
  state: SessionState,
  fingerprint: string,
  relevant: boolean,
): SessionState {
  const snippet = state.snippets.find((s) => s.fingerprint === fingerprint);
  if (!snippet) {
    throw new Error(`mark references a sentence that is not displayed: ${fingerprint}`);
  }
  if (!state.query) {
    throw new Error("no active query to annotate against");
  }
  const query = queryKey(state.query);
  const rest = state.pendingMarks.filter(
    (m) => !(m.fingerprint === fingerprint && m.query === query),
  );
  return {
    ...state,
    pendingMarks: [
      ...rest,
      { fingerprint, reportId: snippet.report_id, query, relevant },
    ],
  };
}

export function clearMark(state: SessionState, fingerprint: string): SessionState {
  const query = state.query ? queryKey(state.query) : null;
  return {
    ...state,
    pendingMarks: state.pendingMarks.filter(
      (m) => !(m.fingerprint === fingerprint && m.query === query),
    ),
  };
}

export function unsavedCount(state: SessionState): number {
  return state.pendingMarks.length;
}

export function marksToRecords(state: SessionState): AnnotationRecord[] {
  if (state.patientId === null || state.timePoint === null) {
    throw new Error("no instance selected");
  }
  return state.pendingMarks.map((m) => ({
    annotator: state.annotator,
    patient_id: state.patientId as string,
    time_point: state.timePoint as number,
    query: m.query,
    fingerprint: m.fingerprint,
    report_id: m.reportId,
    relevant: m.relevant,
    round: state.round,
  }));
}

export function markSaved(
  state: SessionState,
  saved: AnnotationRecord[],
): SessionState {
  return { ...state, pendingMarks: [], savedMarks: [...state.savedMarks, ...saved] };
}

/** Fraction of reviewed sentences marked relevant across a record set. */
export function sessionValidatedPrecision(records: AnnotationRecord[]): number {
  if (records.length === 0) return 0;
  const relevant = records.filter((r) => r.relevant).length;
  return relevant / records.length;
}

/** Document order for reference-round display: report time, report, position. */
export function documentOrder(snippets: RankedSentence[]): RankedSentence[] {
  return [...snippets].sort(
    (a, b) =>
      a.report_timestamp - b.report_timestamp ||
      a.report_id.localeCompare(b.report_id) ||
      a.sentence_index - b.sentence_index,
  );
}
