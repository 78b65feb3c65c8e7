/** Console entry point: wires DOM events to the API client and re-renders. */

import { ApiClient, ApiError } from "./api.js";
import { initialState, validateForm } from "./state.js";
import type { ConsoleState } from "./state.js";
import { render } from "./view.js";

const api = new ApiClient("");
const state: ConsoleState = initialState();

async function refreshShared(): Promise<void> {
  if (!state.sessionId) return;
  state.kb = await api.kb(state.sessionId);
  if (state.stepsDone > 0) {
    state.report = await api.report(state.sessionId);
  }
}

async function refreshPeek(): Promise<void> {
  if (!state.sessionId || state.status !== "ACTIVE") {
    state.peek = null;
    return;
  }
  try {
    state.peek = await api.next(state.sessionId);
  } catch (e) {
    if (e instanceof ApiError && e.status === 409) {
      state.peek = null;
    } else {
      throw e;
    }
  }
}

async function startSession(): Promise<void> {
  const info = await api.createSession();
  state.sessionId = info.id;
  state.status = info.status;
  state.streamSize = info.stream_size;
  state.stepsDone = info.t;
  state.lastRecord = null;
  state.report = null;
  state.notice = "";
  await refreshShared();
  await refreshPeek();
  render(state);
}

async function parseNext(): Promise<void> {
  if (!state.sessionId) return;
  const resp = await api.parse(state.sessionId);
  state.lastRecord = resp.record;
  state.status = resp.status;
  state.stepsDone = resp.record.t;
  await refreshShared();
  await refreshPeek();
  render(state);
}

async function submitEntry(): Promise<void> {
  if (!state.sessionId) return;
  state.formError = validateForm(state.form);
  if (state.formError) {
    render(state);
    return;
  }
  try {
    const resp = await api.submitLexicon(state.sessionId, [
      { key: state.form.key, value: state.form.value },
    ]);
    state.notice =
      resp.added === 0
        ? "already known — knowledge base unchanged"
        : "entry added to the knowledge base";
    if (resp.added > 0) {
      state.form = { key: "", value: "" };
    }
    // retrieval for the pending step must reflect the new entry
    await refreshShared();
    await refreshPeek();
  } catch (e) {
    // rejected submissions keep the form state for correction
    state.formError = e instanceof ApiError ? e.detail : String(e);
  }
  render(state);
}

function bind(): void {
  const $ = (id: string) => document.getElementById(id)!;
  $("btn-start").addEventListener("click", () => void startSession());
  $("btn-parse").addEventListener("click", () => void parseNext());
  $("btn-submit").addEventListener("click", () => void submitEntry());
  $("form-key").addEventListener("input", (e) => {
    state.form.key = (e.target as HTMLInputElement).value;
  });
  $("form-value").addEventListener("input", (e) => {
    state.form.value = (e.target as HTMLInputElement).value;
  });
  $("kb-filter").addEventListener("input", (e) => {
    state.kbFilter = (e.target as HTMLInputElement).value;
    render(state);
  });
  $("toggle-gold").addEventListener("change", (e) => {
    state.goldVisible = (e.target as HTMLInputElement).checked;
    render(state);
  });
  render(state);
}

document.addEventListener("DOMContentLoaded", bind);
