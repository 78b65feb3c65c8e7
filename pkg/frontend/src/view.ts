/** DOM rendering for the console; all data arrives via ConsoleState. */

import type { ConsoleState } from "./state.js";
import {
  filterEntries,
  highlightSpans,
  metricsView,
  missedConstructs,
} from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderHighlighted(
  target: HTMLElement,
  text: string,
  constructs: string[],
  cls: string,
): void {
  target.textContent = "";
  for (const span of highlightSpans(text, constructs)) {
    if (span.highlight) {
      target.appendChild(el("mark", cls, span.text));
    } else {
      target.appendChild(document.createTextNode(span.text));
    }
  }
}

export function render(state: ConsoleState): void {
  const $ = (id: string) => document.getElementById(id)!;

  $("session-status").textContent = state.sessionId
    ? `session ${state.sessionId} · ${state.status} · step ${state.stepsDone}/${state.streamSize}`
    : "no session";

  // current step
  const stepBox = $("step");
  if (state.peek) {
    $("step-x").textContent = state.peek.x;
    const list = $("retrieved");
    list.textContent = "";
    for (const { entry, score } of state.peek.retrieved.ranked) {
      const li = el("li");
      li.appendChild(el("span", "key", entry.key));
      li.appendChild(el("span", "arrow", " => "));
      li.appendChild(el("code", "value", entry.value));
      li.appendChild(el("span", "score", ` (${score.toFixed(3)})`));
      list.appendChild(li);
    }
    stepBox.hidden = false;
  } else {
    stepBox.hidden = true;
  }

  // last parse
  const parseBox = $("last-parse");
  if (state.lastRecord) {
    const rec = state.lastRecord;
    renderHighlighted($("y-hat"), rec.y_hat, rec.ovc_pred, "hit");
    const goldRow = $("gold-row");
    goldRow.hidden = !state.goldVisible;
    if (state.goldVisible) {
      renderHighlighted($("y-gold"), rec.y, missedConstructs(rec), "miss");
    }
    $("missed").textContent = missedConstructs(rec).join(", ") || "none";
    parseBox.hidden = false;
  } else {
    parseBox.hidden = true;
  }

  // KB browser
  const kbList = $("kb-entries");
  kbList.textContent = "";
  const entries = state.kb ? filterEntries(state.kb.entries, state.kbFilter) : [];
  for (const entry of entries) {
    const li = el("li");
    li.appendChild(el("span", "badge " + entry.source.toLowerCase(), entry.source));
    li.appendChild(el("span", "key", ` ${entry.key} `));
    li.appendChild(el("code", "value", entry.value));
    kbList.appendChild(li);
  }
  $("kb-count").textContent = String(state.kb?.entries.length ?? 0);

  // metrics
  const m = metricsView(state.report);
  $("m-bleu").textContent = m.bleu;
  $("m-p").textContent = m.precision;
  $("m-r").textContent = m.recall;
  $("m-f1").textContent = m.f1;
  $("m-cost").textContent = m.cost;

  // form + notices
  ($("form-key") as HTMLInputElement).value = state.form.key;
  ($("form-value") as HTMLInputElement).value = state.form.value;
  $("form-error").textContent = state.formError;
  $("notice").textContent = state.notice;
  ($("btn-parse") as HTMLButtonElement).disabled =
    !state.sessionId || state.status !== "ACTIVE";
}
