/**
 * HTML renderers: pure string builders so they stay testable without a DOM.
 *
 * Scores are rendered exactly as the service reported them (no client-side
 * renormalization), and the validation view never receives a model name to
 * render in the first place.
 */

import type {
  CustomCategory,
  HierarchyNode,
  HierarchyResponse,
  RankedSentence,
  Report,
} from "./api.js";
import type { PendingMark } from "./state.js";
import { documentOrder } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderScore(score: number): string {
  return String(score);
}

function matches(node: HierarchyNode, needle: string): boolean {
  const hay = `${node.id} ${node.name} ${node.description}`.toLowerCase();
  return hay.includes(needle.toLowerCase());
}

export function renderHierarchyTree(
  hierarchy: HierarchyResponse,
  filter = "",
): string {
  const byId = new Map(hierarchy.nodes.map((n) => [n.id, n]));

  const keep = (node: HierarchyNode): boolean =>
    !filter ||
    matches(node, filter) ||
    node.children.some((c) => {
      const child = byId.get(c);
      return child !== undefined && keep(child);
    });

  const renderNode = (node: HierarchyNode): string => {
    if (!keep(node)) return "";
    const children = node.children
      .map((c) => byId.get(c))
      .filter((c): c is HierarchyNode => c !== undefined)
      .map(renderNode)
      .join("");
    return (
      `<li><button class="category" data-category-id="${escapeHtml(node.id)}">` +
      `${escapeHtml(node.name)}</button>` +
      (children ? `<ul>${children}</ul>` : "") +
      `</li>`
    );
  };

  const roots = hierarchy.top_level
    .map((id) => byId.get(id))
    .filter((n): n is HierarchyNode => n !== undefined)
    .map(renderNode)
    .join("");
  const custom = hierarchy.custom
    .map(
      (c: CustomCategory) =>
        `<li><button class="category custom" data-category-id="${escapeHtml(c.id)}">` +
        `${escapeHtml(c.name)}</button></li>`,
    )
    .join("");
  return (
    `<ul class="hierarchy">${roots}</ul>` +
    (custom ? `<h3>Custom</h3><ul class="hierarchy">${custom}</ul>` : "")
  );
}

export function renderReports(reports: Report[], heading: string): string {
  if (reports.length === 0) {
    return `<h2>${escapeHtml(heading)}</h2><p class="empty">No reports.</p>`;
  }
  const cards = reports
    .map(
      (r) =>
        `<article class="report"><header>` +
        `<span class="kind">${escapeHtml(r.kind)}</span>` +
        `<span class="day">day ${r.timestamp}</span>` +
        `<span class="report-id">${escapeHtml(r.id)}</span></header>` +
        `<p>${escapeHtml(r.text)}</p></article>`,
    )
    .join("");
  return `<h2>${escapeHtml(heading)}</h2>${cards}`;
}

export function renderEmptyInstance(): string {
  return (
    `<p class="empty">This patient has no reports before the chosen ` +
    `time point, so there is nothing to query.</p>`
  );
}

function markState(
  marks: PendingMark[],
  fingerprint: string,
  query: string,
): "relevant" | "irrelevant" | "unmarked" {
  const mark = marks.find(
    (m) => m.fingerprint === fingerprint && m.query === query,
  );
  if (!mark) return "unmarked";
  return mark.relevant ? "relevant" : "irrelevant";
}

/**
 * Ranked snippets for query-and-inspect and for the validation round.
 * The validation variant adds relevant/irrelevant buttons per row and is
 * rendered purely from a blind payload: no model identity exists here.
 */
export function renderSnippets(
  snippets: RankedSentence[],
  opts: {
    markable: boolean;
    marks?: PendingMark[];
    query?: string;
    probability?: number;
  },
): string {
  if (snippets.length === 0) {
    return `<p class="empty">No sentences ranked.</p>`;
  }
  const rows = snippets
    .map((s, i) => {
      const buttons = opts.markable
        ? `<span class="mark-buttons" data-state="${markState(
            opts.marks ?? [],
            s.fingerprint,
            opts.query ?? "",
          )}">` +
          `<button class="mark-relevant" data-fp="${escapeHtml(s.fingerprint)}">relevant</button>` +
          `<button class="mark-irrelevant" data-fp="${escapeHtml(s.fingerprint)}">irrelevant</button>` +
          `</span>`
        : "";
      return (
        `<tr class="snippet" data-fp="${escapeHtml(s.fingerprint)}">` +
        `<td class="rank">${i + 1}</td>` +
        `<td class="score">${renderScore(s.score)}</td>` +
        `<td class="sentence">${escapeHtml(s.sentence)}` +
        `<span class="source">[${escapeHtml(s.report_id)} @ day ${s.report_timestamp}]</span></td>` +
        `<td>${buttons}</td></tr>`
      );
    })
    .join("");
  const probability =
    opts.probability !== undefined
      ? `<p class="probability">P(future code) = ${renderScore(opts.probability)}</p>`
      : "";
  return (
    probability +
    `<table class="snippets"><thead><tr>` +
    `<th>#</th><th>score</th><th>sentence</th><th></th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

/**
 * Reference-round view: the instance's sentences in document order, each
 * taggable with the active query.  Sentence identity comes entirely from
 * service-provided fingerprints; the client never re-splits text.
 */
export function renderReferenceView(
  snippets: RankedSentence[],
  marks: PendingMark[],
  query: string,
): string {
  const ordered = documentOrder(snippets);
  let currentReport = "";
  const parts: string[] = [];
  for (const s of ordered) {
    if (s.report_id !== currentReport) {
      if (currentReport) parts.push("</p></section>");
      currentReport = s.report_id;
      parts.push(
        `<section class="report"><header>${escapeHtml(s.report_id)} ` +
        `(day ${s.report_timestamp})</header><p>`,
      );
    }
    const state = markState(marks, s.fingerprint, query);
    parts.push(
      `<span class="taggable" data-fp="${escapeHtml(s.fingerprint)}" ` +
      `data-state="${state}">${escapeHtml(s.sentence)}</span> `,
    );
  }
  if (currentReport) parts.push("</p></section>");
  return parts.join("");
}

export function renderUnsavedBadge(count: number): string {
  return count === 0
    ? `<span class="badge saved">all marks saved</span>`
    : `<span class="badge unsaved">${count} unsaved mark${count === 1 ? "" : "s"}</span>`;
}

export function renderSessionSummary(
  reviewed: number,
  relevant: number,
): string {
  const precision = reviewed === 0 ? "n/a" : String(relevant / reviewed);
  return (
    `<dl class="summary"><dt>sentences reviewed</dt><dd>${reviewed}</dd>` +
    `<dt>marked relevant</dt><dd>${relevant}</dd>` +
    `<dt>validated precision</dt><dd>${precision}</dd></dl>`
  );
}
