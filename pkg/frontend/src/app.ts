/**
 * Browser console shell: wires the API client, session state, and string
 * renderers into the page.  All data flows through the HTTP service; the
 * client never derives sentences or scores on its own.
 */

import { ApiError, Client } from "./api.js";
import type { HierarchyResponse, RankResponse } from "./api.js";
import {
  SessionState,
  initialState,
  marksToRecords,
  markSaved,
  queryKey,
  sessionValidatedPrecision,
  setInstance,
  setModel,
  setQuery,
  setRound,
  showSnippets,
  toggleMark,
  unsavedCount,
} from "./state.js";
import {
  renderEmptyInstance,
  renderHierarchyTree,
  renderReferenceView,
  renderReports,
  renderSessionSummary,
  renderSnippets,
  renderUnsavedBadge,
} from "./views.js";

const client = new Client("");
let state: SessionState = initialState("annotator-1");
let hierarchy: HierarchyResponse | null = null;
let lastRank: RankResponse | null = null;

const el = (id: string) => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
};

const main = () => el("main-view");
const statusBar = () => el("status");

function showError(err: unknown) {
  const message =
    err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
  statusBar().textContent = message;
  statusBar().className = "error";
}

function clearStatus() {
  statusBar().textContent = "";
  statusBar().className = "";
}

function refreshBadge() {
  el("unsaved").innerHTML = renderUnsavedBadge(unsavedCount(state));
}

async function refreshHierarchy(filter = "") {
  hierarchy = await client.getHierarchy();
  el("hierarchy").innerHTML = renderHierarchyTree(hierarchy, filter);
}

async function loadInstance() {
  const patient = (el("patient-input") as HTMLInputElement).value.trim();
  const timePoint = Number((el("time-input") as HTMLInputElement).value);
  if (!patient || !Number.isFinite(timePoint)) {
    showError("enter a patient id and a time point");
    return;
  }
  state = setInstance(state, patient, timePoint);
  lastRank = null;
  try {
    const before = await client.getReports(patient, { before: timePoint });
    if (before.length === 0) {
      main().innerHTML = renderEmptyInstance();
      (el("run-query") as HTMLButtonElement).disabled = true;
    } else {
      main().innerHTML = renderReports(before, `History before day ${timePoint}`);
      (el("run-query") as HTMLButtonElement).disabled = false;
    }
    clearStatus();
  } catch (err) {
    showError(err);
  }
  refreshBadge();
}

async function browseFuture() {
  if (state.patientId === null || state.timePoint === null) {
    showError("load an instance first");
    return;
  }
  try {
    const future = await client.getReports(state.patientId, {
      after: state.timePoint,
    });
    main().innerHTML = renderReports(
      future,
      `Future reports after day ${state.timePoint}`,
    );
    clearStatus();
  } catch (err) {
    showError(err);
  }
}

async function runQuery() {
  if (state.patientId === null || state.timePoint === null) {
    showError("load an instance first");
    return;
  }
  if (!state.query) {
    showError("pick a category or enter free text first");
    return;
  }
  const blind = state.round === "validation";
  const topK = blind ? 20 : 200;
  try {
    const response = await client.rank({
      patient_id: state.patientId,
      time_point: state.timePoint,
      query: state.query.categoryId
        ? { category_id: state.query.categoryId }
        : { text: state.query.text },
      model: state.model,
      top_k: topK,
      blind,
    });
    lastRank = response;
    state = showSnippets(state, response.sentences);
    renderCurrentView();
    clearStatus();
  } catch (err) {
    showError(err);
  }
}

function renderCurrentView() {
  if (!state.query || lastRank === null) return;
  const key = queryKey(state.query);
  if (state.round === "validation") {
    main().innerHTML =
      renderSnippets(state.snippets, {
        markable: true,
        marks: state.pendingMarks,
        query: key,
      }) + `<button id="save-marks">save marks</button>`;
  } else {
    main().innerHTML =
      `<h2>Tag sentences for: ${key}</h2>` +
      renderReferenceView(state.snippets, state.pendingMarks, key) +
      `<button id="save-marks">save marks</button>` +
      renderSnippets(state.snippets, {
        markable: false,
        probability: lastRank.probability,
      });
  }
  refreshBadge();
}

async function saveMarks() {
  const records = marksToRecords(state);
  try {
    for (const record of records) {
      await client.postAnnotation(record);
    }
    state = markSaved(state, records);
    refreshBadge();
    await refreshSummary();
    clearStatus();
  } catch (err) {
    showError(err);
  }
}

async function refreshSummary() {
  const stored = await client.getAnnotations("validation");
  const mine = stored.filter((r) => r.annotator === state.annotator);
  el("summary").innerHTML = renderSessionSummary(
    mine.length,
    mine.filter((r) => r.relevant).length,
  );
  return sessionValidatedPrecision(mine);
}

async function addCustomCategory() {
  const name = (el("custom-name") as HTMLInputElement).value.trim();
  const description = (el("custom-desc") as HTMLInputElement).value.trim();
  if (!name || !description) {
    showError("custom categories need a name and a description");
    return;
  }
  try {
    const created = await client.addCustomCategory(name, description);
    await refreshHierarchy();
    state = setQuery(state, { categoryId: created.id, label: created.name });
    el("active-query").textContent = created.name;
    clearStatus();
  } catch (err) {
    showError(err);
  }
}

function wireEvents() {
  el("load-instance").addEventListener("click", () => void loadInstance());
  el("browse-future").addEventListener("click", () => void browseFuture());
  el("run-query").addEventListener("click", () => void runQuery());
  el("add-custom").addEventListener("click", () => void addCustomCategory());

  el("annotator-input").addEventListener("change", (event) => {
    state = { ...state, annotator: (event.target as HTMLInputElement).value };
  });
  el("model-select").addEventListener("change", (event) => {
    state = setModel(
      state,
      (event.target as HTMLSelectElement).value as SessionState["model"],
    );
  });
  el("round-select").addEventListener("change", (event) => {
    state = setRound(
      state,
      (event.target as HTMLSelectElement).value as SessionState["round"],
    );
    refreshBadge();
  });
  el("query-text").addEventListener("change", (event) => {
    const text = (event.target as HTMLInputElement).value.trim();
    if (text) {
      state = setQuery(state, { text, label: text });
      el("active-query").textContent = text;
    }
  });
  el("hierarchy-filter").addEventListener("input", (event) => {
    if (hierarchy) {
      el("hierarchy").innerHTML = renderHierarchyTree(
        hierarchy,
        (event.target as HTMLInputElement).value,
      );
    }
  });

  el("hierarchy").addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest(".category");
    if (target instanceof HTMLElement && target.dataset.categoryId) {
      state = setQuery(state, {
        categoryId: target.dataset.categoryId,
        label: target.textContent ?? target.dataset.categoryId,
      });
      el("active-query").textContent = state.query?.label ?? "";
    }
  });

  main().addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.id === "save-marks") {
      void saveMarks();
      return;
    }
    const fp = target.dataset.fp;
    if (!fp) return;
    try {
      if (target.classList.contains("mark-relevant")) {
        state = toggleMark(state, fp, true);
      } else if (target.classList.contains("mark-irrelevant")) {
        state = toggleMark(state, fp, false);
      } else if (target.classList.contains("taggable")) {
        // Reference round: clicking a sentence tags it with the active query.
        state = toggleMark(state, fp, true);
      } else {
        return;
      }
      renderCurrentView();
    } catch (err) {
      showError(err);
    }
  });
}

async function init() {
  wireEvents();
  try {
    await refreshHierarchy();
    await refreshSummary();
  } catch (err) {
    showError(err);
  }
}

void init();
