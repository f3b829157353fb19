import { ApiClient, ApiError } from "./api.js";
import {
  renderContradiction,
  renderError,
  renderHistory,
  renderMysteryList,
  renderStatus,
  renderSuggestionTable,
} from "./render.js";
import type { Mark } from "./validate.js";
import {
  encodeFeedback,
  nextMark,
  validateGuess,
  validateMarks,
  validatePegCounts,
} from "./validate.js";
import type { CreateSessionBody, Rule, SessionView } from "./types.js";

const api = new ApiClient("");

let view: SessionView | null = null;
let inFlight = false; // single in-flight mutation; submit stays disabled
let marks: Mark[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setError(html: string): void {
  el("error-area").innerHTML = html;
}

function showScreen(name: "start" | "session"): void {
  el("start-screen").hidden = name !== "start";
  el("session-screen").hidden = name !== "session";
}

function renderToggles(): void {
  const host = el("wordle-toggles");
  host.innerHTML = "";
  marks.forEach((mark, i) => {
    const button = document.createElement("button");
    button.type = "button";
    button.className = `toggle mark-${mark === "-" ? "gray" : mark}`;
    button.textContent = mark;
    button.addEventListener("click", () => {
      marks[i] = nextMark(marks[i]);
      renderToggles();
      (el<HTMLInputElement>("marks-input")).value = marks.join("");
    });
    host.appendChild(button);
  });
}

function renderSession(): void {
  if (!view) return;
  el("status").innerHTML = renderStatus(view);
  el("qfactors").innerHTML = renderSuggestionTable(view);
  el("history").innerHTML = renderHistory(view);
  el("mystery").innerHTML = renderMysteryList(view);
  const guessInput = el<HTMLInputElement>("guess-input");
  if (view.suggestion && !guessInput.value) guessInput.value = view.suggestion;
  el("wordle-entry").hidden = view.rule !== "wordle";
  el("mastermind-entry").hidden = view.rule !== "mastermind";
  el<HTMLButtonElement>("submit-feedback").disabled = inFlight || view.solved;
  if (view.rule === "wordle" && marks.length !== view.length) {
    marks = Array.from({ length: view.length }, () => "-" as Mark);
    renderToggles();
  }
}

function applyView(next: SessionView): void {
  view = next;
  el<HTMLInputElement>("guess-input").value = next.suggestion ?? "";
  renderSession();
}

async function startSession(): Promise<void> {
  setError("");
  const rule = el<HTMLSelectElement>("rule-select").value as Rule;
  const body: CreateSessionBody = {
    rule,
    heuristic: el<HTMLSelectElement>("heuristic-select").value,
    prune_limit: Number(el<HTMLInputElement>("prune-input").value) || 16,
  };
  const words = el<HTMLTextAreaElement>("words-input").value.trim();
  if (words) {
    body.codes = words.split(/\s+/).map((w) => w.toUpperCase());
  } else {
    body.alphabet = el<HTMLInputElement>("alphabet-input").value.trim();
    body.length = Number(el<HTMLInputElement>("length-input").value);
  }
  const button = el<HTMLButtonElement>("start-button");
  button.disabled = true;
  try {
    applyView(await api.createSession(body));
    showScreen("session");
  } catch (e) {
    // surfaced verbatim, with the start screen left intact for retry
    setError(renderError(e instanceof ApiError ? e.detail : String(e)));
  } finally {
    button.disabled = false;
  }
}

async function submitFeedback(): Promise<void> {
  if (!view || inFlight) return;
  setError("");
  const guess = el<HTMLInputElement>("guess-input").value.trim().toUpperCase();
  const guessProblem = validateGuess(guess, view.length);
  if (guessProblem) {
    setError(renderError(guessProblem));
    return;
  }
  let feedback: string;
  if (view.rule === "wordle") {
    const text = el<HTMLInputElement>("marks-input").value || marks.join("");
    const marksProblem = validateMarks(text, view.length);
    if (marksProblem) {
      setError(renderError(marksProblem));
      return;
    }
    feedback = encodeFeedback("wordle", text, 0, 0);
  } else {
    const black = Number(el<HTMLInputElement>("black-input").value);
    const white = Number(el<HTMLInputElement>("white-input").value);
    const pegProblem = validatePegCounts(black, white, view.length);
    if (pegProblem) {
      setError(renderError(pegProblem));
      return;
    }
    feedback = encodeFeedback("mastermind", "", black, white);
  }
  inFlight = true;
  renderSession();
  try {
    const next = await api.postFeedback(view.id, guess, feedback);
    marks = [];
    el<HTMLInputElement>("marks-input").value = "";
    applyView(next);
  } catch (e) {
    if (e instanceof ApiError && e.status === 409) {
      setError(renderContradiction(e.detail)); // state and history untouched
    } else {
      setError(renderError(e instanceof ApiError ? e.detail : String(e)));
    }
  } finally {
    inFlight = false;
    renderSession();
  }
}

function wire(): void {
  el("start-button").addEventListener("click", () => void startSession());
  el("submit-feedback").addEventListener("click", () => void submitFeedback());
  el("new-session").addEventListener("click", () => {
    view = null;
    showScreen("start");
  });
  el<HTMLInputElement>("marks-input").addEventListener("input", (event) => {
    const text = (event.target as HTMLInputElement).value.toUpperCase();
    marks = marks.map((m, i) => (["G", "Y", "-"].includes(text[i]) ? (text[i] as Mark) : m));
    renderToggles();
  });
  showScreen("start");
}

document.addEventListener("DOMContentLoaded", wire);
