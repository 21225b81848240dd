/**
 * End-to-end session against the in-memory service double: create a custom
 * category, query with it, annotate twenty snippets in the blind validation
 * round, reload, and check persistence and the session's validated
 * precision against a hand count.
 */

import { describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import {
  initialState,
  marksToRecords,
  markSaved,
  queryKey,
  sessionValidatedPrecision,
  setInstance,
  setQuery,
  setRound,
  showSnippets,
  toggleMark,
} from "../src/state.js";
import { renderSnippets } from "../src/views.js";
import { FakeService, makeSentences } from "./fake_service.js";

const MODEL_NAMES = ["tfidf", "contextual", "indicator", "description",
                     "hierarchy"];

describe("annotation session flow", () => {
  it("custom category -> query -> annotate 20 -> reload -> persisted", async () => {
    const service = new FakeService(makeSentences(30));
    const client = new Client("", service.fetch);

    // Create a custom category and use it as the active query.
    const custom = await client.addCustomCategory(
      "Dizziness", "spinning sensation");
    expect(custom.id).toBe("custom:1");
    expect((await client.getHierarchy()).custom).toHaveLength(1);

    let state = initialState("rad-1");
    state = setInstance(state, "p1", 100);
    state = setRound(state, "validation");
    state = setQuery(state, { categoryId: custom.id, label: custom.name });

    // Validation round ranks blind with top_k = 20.
    const response = await client.rank({
      patient_id: "p1",
      time_point: 100,
      query: { category_id: custom.id },
      model: "hierarchy",
      top_k: 20,
      blind: true,
    });
    expect(response.sentences).toHaveLength(20);
    state = showSnippets(state, response.sentences);

    // Blind payload leak check: the raw payload and the rendered HTML must
    // not contain any model selector string.
    const payload = JSON.stringify(response);
    const html = renderSnippets(state.snippets, {
      markable: true, marks: state.pendingMarks, query: queryKey(state.query!),
    });
    for (const name of MODEL_NAMES) {
      expect(payload).not.toContain(name);
      expect(html).not.toContain(name);
    }
    expect(html.match(/class="snippet"/g)).toHaveLength(20);

    // Mark 13 relevant, 7 irrelevant (the hand count).
    state.snippets.forEach((snippet, i) => {
      state = toggleMark(state, snippet.fingerprint, i < 13);
    });
    expect(state.pendingMarks).toHaveLength(20);
    const records = marksToRecords(state);
    for (const record of records) {
      await client.postAnnotation(record);
    }
    state = markSaved(state, records);
    expect(state.pendingMarks).toHaveLength(0);

    // "Reload": a fresh tab pulls the stored validation annotations.
    const reloadedClient = new Client("", service.fetch);
    const stored = await reloadedClient.getAnnotations("validation");
    expect(stored).toHaveLength(20);
    expect(new Set(stored.map((r) => r.fingerprint))).toEqual(
      new Set(state.savedMarks.map((r) => r.fingerprint)));
    expect(stored.every((r) => r.query === "custom:1")).toBe(true);

    // Validated precision over the session matches the hand count 13/20.
    expect(sessionValidatedPrecision(stored)).toBeCloseTo(13 / 20, 12);

    // Re-posting one mark with a new flag updates in place (idempotent id).
    const flipped = { ...records[0], relevant: false };
    await client.postAnnotation(flipped);
    const after = await reloadedClient.getAnnotations("validation");
    expect(after).toHaveLength(20);
    expect(sessionValidatedPrecision(after)).toBeCloseTo(12 / 20, 12);
  });

  it("reference round keeps the model visible and the probability shown", async () => {
    const service = new FakeService(makeSentences(8));
    const client = new Client("", service.fetch);
    const response = await client.rank({
      patient_id: "p1", time_point: 100, query: { category_id: "stroke" },
      model: "description", top_k: 8,
    });
    expect(response.model).toBe("description");
    expect(response.probability).toBeDefined();
  });

  it("zero prior reports disables querying", async () => {
    const service = new FakeService(makeSentences(3));
    const client = new Client("", service.fetch);
    const before = await client.getReports("p1", { before: 5 });
    expect(before).toHaveLength(0);
  });
});
