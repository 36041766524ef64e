/** Single-page rater flow: worker id -> queue -> one item at a time -> done.
 *
 * One in-flight submission at most; the cursor advances only after the
 * server answers (201 advances, 409 skips with a notice, 422 shows inline).
 */

import { ApiClient, CRITERIA, Criterion, Scores } from "./api.js";
import { renderPreview } from "./preview.js";
import {
  PartialScores,
  ReviewSession,
  advance,
  allScoresSet,
  currentItem,
  isComplete,
  newSession,
  progressLabel,
  scoreFromKey,
  setScore,
} from "./session.js";

const api = new ApiClient("");

let session: ReviewSession | null = null;
let scores: PartialScores = {};
let focused: Criterion = CRITERIA[0];
let inFlight = false;

const app = document.getElementById("app") as HTMLElement;

function el(html: string): HTMLElement {
  const template = document.createElement("template");
  template.innerHTML = html.trim();
  return template.content.firstElementChild as HTMLElement;
}

function showBanner(message: string, retry?: () => void): void {
  const banner = el(
    `<div class="banner error"><span></span>${
      retry ? '<button class="retry">Retry</button>' : ""
    }</div>`,
  );
  (banner.querySelector("span") as HTMLElement).textContent = message;
  if (retry) {
    (banner.querySelector(".retry") as HTMLElement).addEventListener("click", () => {
      banner.remove();
      retry();
    });
  }
  app.prepend(banner);
}

function showNotice(message: string): void {
  const notice = el(`<div class="banner notice"></div>`);
  notice.textContent = message;
  app.prepend(notice);
  setTimeout(() => notice.remove(), 4000);
}

// --- screens -----------------------------------------------------------------

function renderEntry(): void {
  app.innerHTML = "";
  const screen = el(`
    <div class="screen entry">
      <h1>Caption review</h1>
      <p>Rate each chart's caption pair on four criteria (1&ndash;5).</p>
      <form>
        <label for="worker">Worker id</label>
        <input id="worker" name="worker" autocomplete="off" required
               placeholder="e.g. worker-042"/>
        <button type="submit">Start</button>
      </form>
    </div>`);
  screen.querySelector("form")!.addEventListener("submit", (event) => {
    event.preventDefault();
    const workerId = (screen.querySelector("#worker") as HTMLInputElement).value.trim();
    if (workerId) void loadQueue(workerId);
  });
  app.append(screen);
}

async function loadQueue(workerId: string): Promise<void> {
  app.innerHTML = `<div class="screen"><p>Loading queue&hellip;</p></div>`;
  try {
    const items = await api.loadPending(workerId, 50);
    session = newSession(workerId, items);
    scores = {};
    renderCurrent();
  } catch (error) {
    app.innerHTML = "";
    renderEntry();
    showBanner(
      `Could not reach the review server (${String(error)}).`,
      () => void loadQueue(workerId),
    );
  }
}

function renderEmptyQueue(): void {
  app.innerHTML = "";
  app.append(el(`
    <div class="screen empty">
      <h1>Queue empty</h1>
      <p>No pending captions for this worker &mdash; everything is rated.</p>
    </div>`));
}

function renderComplete(current: ReviewSession): void {
  app.innerHTML = "";
  const screen = el(`
    <div class="screen complete">
      <h1>All done</h1>
      <p class="count"></p>
    </div>`);
  (screen.querySelector(".count") as HTMLElement).textContent =
    `${current.submitted} rating(s) submitted` +
    (current.skipped ? `, ${current.skipped} skipped` : "") + ".";
  app.append(screen);
}

function renderCurrent(): void {
  if (!session) return renderEntry();
  if (session.queue.length === 0) return renderEmptyQueue();
  if (isComplete(session)) return renderComplete(session);
  const item = currentItem(session)!;
  scores = {};
  focused = CRITERIA[0];

  app.innerHTML = "";
  const screen = el(`
    <div class="screen item">
      <header>
        <span class="progress"></span>
        <span class="summary"></span>
      </header>
      <div class="preview"></div>
      <section class="captions">
        <div><h2>Overview caption</h2><p class="overview"></p></div>
        <div><h2>Analysis caption</h2><p class="analysis"></p></div>
      </section>
      <section class="scoring"></section>
      <p class="hint">Keys 1&ndash;5 score the highlighted criterion;
         Tab moves to the next one.</p>
      <div class="inline-error" hidden></div>
      <button class="submit" disabled>Submit rating</button>
    </div>`);
  (screen.querySelector(".progress") as HTMLElement).textContent =
    progressLabel(session);
  (screen.querySelector(".summary") as HTMLElement).textContent =
    item.spec_summary;
  (screen.querySelector(".preview") as HTMLElement).innerHTML =
    renderPreview(item.declarative_code);
  (screen.querySelector(".overview") as HTMLElement).textContent =
    item.captions.overview;
  (screen.querySelector(".analysis") as HTMLElement).textContent =
    item.captions.analysis;

  const scoring = screen.querySelector(".scoring") as HTMLElement;
  for (const criterion of CRITERIA) {
    const row = el(`
      <div class="criterion" data-criterion="${criterion}">
        <span class="name">${criterion}</span>
        <span class="buttons"></span>
      </div>`);
    const buttons = row.querySelector(".buttons") as HTMLElement;
    for (let value = 1; value <= 5; value += 1) {
      const button = el(
        `<button type="button" data-value="${value}">${value}</button>`,
      );
      button.addEventListener("click", () => {
        focused = criterion;
        applyScore(criterion, value);
      });
      buttons.append(button);
    }
    row.addEventListener("click", () => {
      focused = criterion;
      refreshScoring();
    });
    scoring.append(row);
  }

  (screen.querySelector(".submit") as HTMLButtonElement).addEventListener(
    "click",
    () => void submitCurrent(),
  );
  app.append(screen);
  refreshScoring();
}

function applyScore(criterion: Criterion, value: number): void {
  scores = setScore(scores, criterion, value);
  refreshScoring();
}

function refreshScoring(): void {
  for (const row of app.querySelectorAll<HTMLElement>(".criterion")) {
    const criterion = row.dataset.criterion as Criterion;
    row.classList.toggle("focused", criterion === focused);
    for (const button of row.querySelectorAll<HTMLButtonElement>("button")) {
      button.classList.toggle(
        "chosen",
        scores[criterion] === Number(button.dataset.value),
      );
    }
  }
  const submit = app.querySelector<HTMLButtonElement>(".submit");
  if (submit) submit.disabled = !allScoresSet(scores) || inFlight;
}

async function submitCurrent(): Promise<void> {
  if (!session || inFlight) return;
  const item = currentItem(session);
  if (!item || !allScoresSet(scores)) return;
  inFlight = true;
  refreshScoring();
  try {
    const outcome = await api.submitRating(
      item.card_id,
      session.workerId,
      scores as Scores,
    );
    if (outcome.kind === "accepted") {
      session = advance(session, "submitted");
      renderCurrent();
    } else if (outcome.kind === "duplicate") {
      session = advance(session, "skipped");
      renderCurrent();
      showNotice("Already rated by you; item skipped.");
    } else if (outcome.kind === "invalid") {
      const box = app.querySelector<HTMLElement>(".inline-error");
      if (box) {
        box.hidden = false;
        box.textContent = `Rating rejected: ${outcome.message}`;
      }
    } else {
      showBanner(`Submission failed: ${outcome.message}`, () => void submitCurrent());
    }
  } catch (error) {
    showBanner(`Network failure: ${String(error)}`, () => void submitCurrent());
  } finally {
    inFlight = false;
    refreshScoring();
  }
}

document.addEventListener("keydown", (event) => {
  if (!session || isComplete(session)) return;
  if ((event.target as HTMLElement | null)?.tagName === "INPUT") return;
  const value = scoreFromKey(event.key);
  if (value !== null) {
    applyScore(focused, value);
    event.preventDefault();
  }
});

renderEntry();
