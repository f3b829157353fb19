import { ApiClient, ApiError } from "./api.js";
import { renderContradiction, renderError, renderHistory, renderMysteryList, renderStatus, renderSuggestionTable, } from "./render.js";
import { encodeFeedback, nextMark, validateGuess, validateMarks, validatePegCounts, } from "./validate.js";
const api = new ApiClient("");
let view = null;
let inFlight = false; // single in-flight mutation; submit stays disabled
let marks = [];
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function setError(html) {
    el("error-area").innerHTML = html;
}
function showScreen(name) {
    el("start-screen").hidden = name !== "start";
    el("session-screen").hidden = name !== "session";
}
function renderToggles() {
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
            (el("marks-input")).value = marks.join("");
        });
        host.appendChild(button);
    });
}
function renderSession() {
    if (!view)
        return;
    el("status").innerHTML = renderStatus(view);
    el("qfactors").innerHTML = renderSuggestionTable(view);
    el("history").innerHTML = renderHistory(view);
    el("mystery").innerHTML = renderMysteryList(view);
    const guessInput = el("guess-input");
    if (view.suggestion && !guessInput.value)
        guessInput.value = view.suggestion;
    el("wordle-entry").hidden = view.rule !== "wordle";
    el("mastermind-entry").hidden = view.rule !== "mastermind";
    el("submit-feedback").disabled = inFlight || view.solved;
    if (view.rule === "wordle" && marks.length !== view.length) {
        marks = Array.from({ length: view.length }, () => "-");
        renderToggles();
    }
}
function applyView(next) {
    view = next;
    el("guess-input").value = next.suggestion ?? "";
    renderSession();
}
async function startSession() {
    setError("");
    const rule = el("rule-select").value;
    const body = {
        rule,
        heuristic: el("heuristic-select").value,
        prune_limit: Number(el("prune-input").value) || 16,
    };
    const words = el("words-input").value.trim();
    if (words) {
        body.codes = words.split(/\s+/).map((w) => w.toUpperCase());
    }
    else {
        body.alphabet = el("alphabet-input").value.trim();
        body.length = Number(el("length-input").value);
    }
    const button = el("start-button");
    button.disabled = true;
    try {
        applyView(await api.createSession(body));
        showScreen("session");
    }
    catch (e) {
        // surfaced verbatim, with the start screen left intact for retry
        setError(renderError(e instanceof ApiError ? e.detail : String(e)));
    }
    finally {
        button.disabled = false;
    }
}
async function submitFeedback() {
    if (!view || inFlight)
        return;
    setError("");
    const guess = el("guess-input").value.trim().toUpperCase();
    const guessProblem = validateGuess(guess, view.length);
    if (guessProblem) {
        setError(renderError(guessProblem));
        return;
    }
    let feedback;
    if (view.rule === "wordle") {
        const text = el("marks-input").value || marks.join("");
        const marksProblem = validateMarks(text, view.length);
        if (marksProblem) {
            setError(renderError(marksProblem));
            return;
        }
        feedback = encodeFeedback("wordle", text, 0, 0);
    }
    else {
        const black = Number(el("black-input").value);
        const white = Number(el("white-input").value);
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
        el("marks-input").value = "";
        applyView(next);
    }
    catch (e) {
        if (e instanceof ApiError && e.status === 409) {
            setError(renderContradiction(e.detail)); // state and history untouched
        }
        else {
            setError(renderError(e instanceof ApiError ? e.detail : String(e)));
        }
    }
    finally {
        inFlight = false;
        renderSession();
    }
}
function wire() {
    el("start-button").addEventListener("click", () => void startSession());
    el("submit-feedback").addEventListener("click", () => void submitFeedback());
    el("new-session").addEventListener("click", () => {
        view = null;
        showScreen("start");
    });
    el("marks-input").addEventListener("input", (event) => {
        const text = event.target.value.toUpperCase();
        marks = marks.map((m, i) => (["G", "Y", "-"].includes(text[i]) ? text[i] : m));
        renderToggles();
    });
    showScreen("start");
}
document.addEventListener("DOMContentLoaded", wire);
