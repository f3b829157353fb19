import type { SessionView } from "./types.js";

// Pure HTML-string renderers. The suggestion table is emitted in the exact
// order the server sent it (the server already sorts ascending by averaged
// Q-factor with canonical ties); the client never re-ranks anything.

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderSuggestionTable(view: SessionView): string {
  const rows = view.suggestions
    .map(
      (s, i) =>
        `<tr class="${i === 0 ? "best" : ""}"><td>${i + 1}</td>` +
        `<td class="code">${escapeHtml(s.guess)}</td>` +
        `<td class="num">${s.q_value.toFixed(4)}</td></tr>`,
    )
    .join("");
  return (
    `<table class="qtable"><thead><tr><th>#</th><th>guess</th>` +
    `<th>avg Q (expected guesses)</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderStatus(view: SessionView): string {
  if (view.solved) {
    return `<div class="banner solved">Solved: <span class="code">${escapeHtml(
      view.solved_with ?? "",
    )}</span> in ${view.history.length} guesses</div>`;
  }
  const weight = view.belief_weights.length ? view.belief_weights[0] : 1 / view.list_size;
  return (
    `<div class="banner">` +
    `<span>${view.list_size} candidate${view.list_size === 1 ? "" : "s"} remain</span>` +
    `<span>uniform belief weight ${weight.toExponential(3)}</span>` +
    `<span>suggested: <span class="code">${escapeHtml(view.suggestion ?? "")}</span></span>` +
    `</div>`
  );
}

export function renderHistory(view: SessionView): string {
  if (view.history.length === 0) return `<p class="muted">no guesses yet</p>`;
  const rows = view.history
    .map(
      (h, i) =>
        `<tr><td>${i + 1}</td><td class="code">${escapeHtml(h.guess)}</td>` +
        `<td class="code">${escapeHtml(h.feedback)}</td></tr>`,
    )
    .join("");
  return (
    `<table class="history"><thead><tr><th>#</th><th>guess</th><th>feedback</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderMysteryList(view: SessionView): string {
  if (view.mystery.length === 0) {
    return `<p class="muted">list too large to display</p>`;
  }
  const items = view.mystery.map((c) => `<span class="code chip">${escapeHtml(c)}</span>`);
  return `<div class="mystery">${items.join(" ")}</div>`;
}

export function renderContradiction(detail: string): string {
  return (
    `<div class="error contradiction">Impossible feedback: ${escapeHtml(detail)}<br>` +
    `The entry was not applied; check the marks and try again.</div>`
  );
}

export function renderError(detail: string): string {
  return `<div class="error">${escapeHtml(detail)}</div>`;
}
