import { describe, expect, it } from "vitest";

import type { RankedSentence } from "../src/api.js";
import {
  documentOrder,
  initialState,
  marksToRecords,
  markSaved,
  sessionValidatedPrecision,
  setInstance,
  setQuery,
  setRound,
  showSnippets,
  toggleMark,
  unsavedCount,
} from "../src/state.js";

function snippet(fp: string, overrides: Partial<RankedSentence> = {}): RankedSentence {
  return {
    sentence: fp,
    fingerprint: fp,
    report_id: "r1",
    report_timestamp: 10,
    sentence_index: 0,
    score: 0.5,
    percentile: 0.0,
    ...overrides,
  };
}

function sessionWithSnippets(fps: string[]) {
  let state = initialState("a1");
  state = setInstance(state, "p1", 100);
  state = setQuery(state, { categoryId: "stroke", label: "Stroke" });
  return showSnippets(state, fps.map((fp) => snippet(fp)));
}

describe("session state", () => {
  it("starts with nothing selected and no marks", () => {
    const state = initialState("a1");
    expect(state.patientId).toBeNull();
    expect(unsavedCount(state)).toBe(0);
  });

  it("changing instance clears query, snippets and pending marks", () => {
    let state = sessionWithSnippets(["s1"]);
    state = toggleMark(state, "s1", true);
    state = setInstance(state, "p2", 50);
    expect(state.query).toBeNull();
    expect(state.snippets).toEqual([]);
    expect(unsavedCount(state)).toBe(0);
  });

  it("marks reference only displayed sentences", () => {
    const state = sessionWithSnippets(["s1", "s2"]);
    expect(() => toggleMark(state, "ghost", true)).toThrow(/not displayed/);
  });

  it("replacing snippets drops marks on vanished sentences", () => {
    let state = sessionWithSnippets(["s1", "s2"]);
    state = toggleMark(state, "s1", true);
    state = toggleMark(state, "s2", false);
    state = showSnippets(state, [snippet("s2"), snippet("s3")]);
    expect(state.pendingMarks.map((m) => m.fingerprint)).toEqual(["s2"]);
  });

  it("re-marking the same sentence updates rather than duplicates", () => {
    let state = sessionWithSnippets(["s1"]);
    state = toggleMark(state, "s1", true);
    state = toggleMark(state, "s1", false);
    expect(state.pendingMarks).toHaveLength(1);
    expect(state.pendingMarks[0].relevant).toBe(false);
  });

  it("unsaved count is visible and clears on save", () => {
    let state = sessionWithSnippets(["s1", "s2"]);
    state = toggleMark(state, "s1", true);
    state = toggleMark(state, "s2", false);
    expect(unsavedCount(state)).toBe(2);
    const records = marksToRecords(state);
    expect(records).toHaveLength(2);
    expect(records[0]).toMatchObject({
      annotator: "a1",
      patient_id: "p1",
      time_point: 100,
      query: "stroke",
      round: "reference",
    });
    state = markSaved(state, records);
    expect(unsavedCount(state)).toBe(0);
    expect(state.savedMarks).toHaveLength(2);
  });

  it("switching rounds clears pending marks", () => {
    let state = sessionWithSnippets(["s1"]);
    state = toggleMark(state, "s1", true);
    state = setRound(state, "validation");
    expect(unsavedCount(state)).toBe(0);
    expect(state.round).toBe("validation");
  });

  it("validated precision is the relevant fraction", () => {
    const record = (relevant: boolean) => ({
      annotator: "a1", patient_id: "p1", time_point: 1, query: "q",
      fingerprint: "f", relevant, round: "validation" as const,
    });
    expect(sessionValidatedPrecision([])).toBe(0);
    expect(
      sessionValidatedPrecision([record(true), record(true), record(false)]),
    ).toBeCloseTo(2 / 3, 12);
  });

  it("document order sorts by report time, report id, sentence index", () => {
    const shuffled = [
      snippet("c", { report_id: "r2", report_timestamp: 20, sentence_index: 0 }),
      snippet("b", { report_id: "r1", report_timestamp: 10, sentence_index: 1 }),
      snippet("a", { report_id: "r1", report_timestamp: 10, sentence_index: 0 }),
    ];
    expect(documentOrder(shuffled).map((s) => s.fingerprint)).toEqual([
      "a", "b", "c",
    ]);
  });
});
