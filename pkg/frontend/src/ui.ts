// HTML renderers, all pure string builders so they are testable without a
// browser. Numbers are printed as received; formatNumber only trims display
// width.

import type { HistoryEntry, ScoreRow, ViewModel } from "./state.js";
import type { ForestSummary, PromptPayload } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatNumber(value: number): string {
  const rounded = Math.round(value * 10000) / 10000;
  return String(rounded);
}

export function renderStaleBanner(vm: ViewModel): string {
  if (!vm.stale) return "";
  return `<div class="banner stale">another client changed the forest` +
    ` (revision moved past ${vm.revision}); reload to catch up</div>`;
}

export function renderForestPanel(forest: ForestSummary): string {
  const cards = forest.trees.map((tree) => {
    const links = relationLinks(forest, tree.index);
    const linkText = links.length > 0
      ? `related to ${links.map(escapeHtml).join(", ")}`
      : "no tree-level relations";
    return `<div class="card" data-tree="${escapeHtml(tree.tree_id)}">` +
      `<h3>${escapeHtml(tree.tree_id)}</h3>` +
      `<p>${escapeHtml(tree.root_name)}</p>` +
      `<p>${tree.size} concepts</p>` +
      `<p class="links">${linkText}</p>` +
      `</div>`;
  });
  const trained = forest.trained ? "" :
    `<p class="banner">no embeddings yet; train before querying</p>`;
  return `<div class="cards">${cards.join("")}</div>${trained}`;
}

function relationLinks(forest: ForestSummary, index: number): string[] {
  if (forest.matrix === null) return [];
  const row = forest.matrix[index];
  return forest.trees
    .filter((tree) => tree.index !== index && row[tree.index] === 1)
    .map((tree) => tree.tree_id);
}

export function renderMatrix(forest: ForestSummary): string {
  if (forest.matrix === null) {
    return `<p class="banner">relation matrix unavailable</p>`;
  }
  const header = forest.trees.map((t) => `<th>${escapeHtml(t.tree_id)}</th>`);
  const rows = forest.matrix.map((row, i) => {
    const cells = row.map((v) => `<td class="m${v}">${v}</td>`).join("");
    return `<tr><th>${escapeHtml(forest.trees[i].tree_id)}</th>${cells}</tr>`;
  });
  return `<table class="matrix"><tr><th></th>${header.join("")}</tr>` +
    `${rows.join("")}</table>`;
}

export function renderMasteryPanel(vm: ViewModel): string {
  const forest = vm.forest;
  if (forest === null || vm.userId === null) {
    return `<p>pick a learner to edit mastery</p>`;
  }
  const sliders = forest.trees.map((tree) => {
    const value = vm.mastery[tree.index] ?? 0;
    return `<label class="slider">${escapeHtml(tree.tree_id)}` +
      `<input type="range" min="0" max="1" step="0.01"` +
      ` value="${value}" data-tree="${tree.index}">` +
      `<span>${formatNumber(value)}</span></label>`;
  });
  return sliders.join("");
}

export function renderScoreTable(rows: ScoreRow[]): string {
  const body = rows.map((row) => {
    const marker = row.chosen ? " &rarr;" : "";
    const relatedness = row.relatedness === null
      ? "&mdash;" : formatNumber(row.relatedness);
    const state = row.eligible ? formatNumber(row.score) : "mastered";
    return `<tr class="${row.chosen ? "chosen" : ""}">` +
      `<td>${row.index}${marker}</td>` +
      `<td>${escapeHtml(row.treeId)}</td>` +
      `<td>${relatedness}</td>` +
      `<td>${formatNumber(row.headroom)}</td>` +
      `<td>${state}</td></tr>`;
  });
  return `<table class="scores"><tr><th>tree</th><th>id</th>` +
    `<th>&Sigma; r&middot;s</th><th>1&minus;s</th><th>score</th></tr>` +
    `${body.join("")}</table>`;
}

export function renderRecommendation(vm: ViewModel, rows: ScoreRow[]): string {
  const payload = vm.recommendation;
  if (payload === null) {
    return `<p>no recommendation requested yet</p>`;
  }
  const headline = payload.next === null
    ? `<p class="headline">all trees mastered</p>`
    : `<p class="headline">next: tree ${payload.next}` +
      ` (${escapeHtml(payload.tree_id ?? "")})</p>`;
  return headline + renderScoreTable(rows);
}

export function renderHistory(history: HistoryEntry[]): string {
  if (history.length === 0) {
    return `<p>no steps taken</p>`;
  }
  const chips = history.map((entry) =>
    `<span class="chip">#${entry.step} ${escapeHtml(entry.treeId ?? String(entry.chosen))}` +
    ` [${entry.mastery.map(formatNumber).join(", ")}]</span>`);
  return `<div class="strip">${chips.join("")}</div>`;
}

export function renderPrompt(prompt: PromptPayload | null): string {
  if (prompt === null) {
    return `<p>no prompt rendered yet</p>`;
  }
  const slots = Object.entries(prompt.slot_values).map(([name, value]) =>
    `<li>${escapeHtml(name)} = ${escapeHtml(value)}` +
    ` <em>(${escapeHtml(prompt.provenance[name] ?? "")})</em></li>`);
  return `<p class="headline">template ${escapeHtml(prompt.template_id)}` +
    ` (score ${formatNumber(prompt.score)})</p>` +
    `<section><h4>goal</h4><p>${escapeHtml(prompt.goal)}</p>` +
    `<h4>explanation</h4><p>${escapeHtml(prompt.explanation)}</p>` +
    `<h4>feedback</h4><p>${escapeHtml(prompt.feedback)}</p></section>` +
    `<ul class="slots">${slots.join("")}</ul>`;
}

export function renderError(error: unknown): string {
  if (error instanceof Error && error.name === "ServiceError") {
    const code = (error as Error & { code: string }).code;
    return `<div class="banner error">[${escapeHtml(code)}]` +
      ` ${escapeHtml(error.message)}</div>`;
  }
  return `<div class="banner error">${escapeHtml(String(error))}</div>`;
}
