/** Two-level relevance assessment workflow.
 *
 * Loads the assessor's frozen plan, restores earlier judgments from the
 * server's feedback export, and walks the assigned queries one at a time.
 * Every result shows two toggle pairs, term match and phrase match, each an
 * explicit relevant / not relevant choice. A click updates the UI
 * optimistically and posts the judgment immediately; a rejected post reverts
 * the toggle and shows a notice, so the display never drifts more than one
 * in-flight request away from the server.
 *
 * Results render in plan order, never re-sorted or filtered, and no score of
 * any kind appears in this view.
 */

import {
  ApiClient,
  ApiHttpError,
  LEVELS,
  type Level,
  type PlanQuery,
} from "./api.js";
import { clear, el } from "./dom.js";
import { AssessmentState, toViewModel } from "./state.js";

const LEVEL_LABELS: Record<Level, string> = {
  term: "term match",
  phrase: "phrase match",
};

export class AssessView {
  private state: AssessmentState | null = null;
  private queryIndex = 0;
  private readonly notice: HTMLElement;
  private readonly position: HTMLElement;
  private readonly queryBlock: HTMLElement;
  private readonly inflight = new Set<Promise<void>>();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly assessorId: string,
  ) {
    this.notice = el("div", { class: "notice" });
    this.notice.hidden = true;
    this.position = el("span", { class: "assess-position" });
    this.queryBlock = el("section", { class: "query-block" });
  }

  /** Fetch plan and judgment history, then render the first assigned query. */
  async init(): Promise<void> {
    let plan;
    try {
      plan = await this.api.plan(this.assessorId);
    } catch (error) {
      const message =
        error instanceof ApiHttpError
          ? error.message
          : "assessment plan could not be loaded, server unreachable";
      this.root.append(el("div", { class: "banner" }, [message]));
      return;
    }
    this.state = AssessmentState.fromPlan(plan);
    try {
      this.state.applyEvents(await this.api.exportFeedback());
    } catch {
      this.showNotice("previous judgments could not be restored");
    }

    const prev = el("button", { class: "prev", type: "button" }, ["Previous"]);
    const next = el("button", { class: "next", type: "button" }, ["Next"]);
    prev.addEventListener("click", () => this.step(-1));
    next.addEventListener("click", () => this.step(1));
    this.root.append(
      el("header", { class: "assess-head" }, [
        el("h2", {}, [`Assessment: ${this.assessorId}`]),
        el("div", { class: "assess-nav" }, [prev, this.position, next]),
      ]),
      this.notice,
      this.queryBlock,
    );
    this.renderQuery();
  }

  /** Resolves once every judgment posted so far has been acknowledged. */
  async idle(): Promise<void> {
    while (this.inflight.size > 0) {
      await Promise.allSettled([...this.inflight]);
    }
  }

  currentQueryId(): string | null {
    const query = this.currentQuery();
    return query ? query.query_id : null;
  }

  private currentQuery(): PlanQuery | undefined {
    return this.state?.queries[this.queryIndex];
  }

  private step(delta: number): void {
    if (!this.state) return;
    const bounded = Math.min(
      Math.max(this.queryIndex + delta, 0),
      this.state.queries.length - 1,
    );
    if (bounded !== this.queryIndex) {
      this.queryIndex = bounded;
      this.renderQuery();
    }
  }

  private renderQuery(): void {
    const state = this.state;
    const query = this.currentQuery();
    clear(this.queryBlock);
    if (!state || !query) {
      this.queryBlock.append(el("p", {}, ["no queries assigned"]));
      return;
    }
    this.position.textContent = `query ${this.queryIndex + 1} of ${state.queries.length}`;

    const progress = el("span", { class: "progress-count" });
    const completeNote = el("div", { class: "complete-note" }, [
      "All results judged for this query.",
    ]);
    this.queryBlock.append(
      el("h3", { class: "query-text" }, [query.text]),
      el("div", { class: "progress" }, ["judged ", progress]),
      completeNote,
    );

    const list = el("ol", { class: "assess-list" });
    query.records.forEach((record, index) => {
      const model = toViewModel(record, index);
      const item = el("li", {
        class: "assess-item",
        "data-record-id": model.recordId,
      }, [
        el("div", { class: "result-head" }, [
          el("span", { class: "rank" }, [String(model.rank)]),
          el("span", { class: "title" }, [model.title]),
          el("time", { class: "stamp" }, [model.timestampLabel]),
        ]),
        el("p", { class: "snippet" }, [model.snippet]),
      ]);
      const toggles = el("div", { class: "toggles" });
      for (const level of LEVELS) {
        const group = el("div", { class: "toggle-group", "data-level": level }, [
          el("span", { class: "level-label" }, [LEVEL_LABELS[level]]),
        ]);
        for (const relevant of [true, false]) {
          const button = el("button", {
            type: "button",
            class: "toggle",
            "data-choice": relevant ? "relevant" : "not",
          }, [relevant ? "relevant" : "not relevant"]);
          button.addEventListener("click", () =>
            this.judge(query.query_id, model.recordId, level, relevant),
          );
          group.append(button);
        }
        toggles.append(group);
      }
      item.append(toggles);
      list.append(item);
    });
    this.queryBlock.append(list);
    // paint after the list is attached so the lookups find the buttons
    for (const record of query.records) {
      this.paintToggles(query.query_id, record.record_id);
    }
    this.paintProgress(query.query_id);
  }

  private judge(queryId: string, recordId: string, level: Level, relevant: boolean): void {
    const state = this.state;
    if (!state) return;
    const previous = state.get(queryId, recordId, level);
    state.set(queryId, recordId, level, relevant);
    this.paintToggles(queryId, recordId);
    this.paintProgress(queryId);
    const work = this.api
      .sendFeedback({
        assessor_id: this.assessorId,
        query_id: queryId,
        record_id: recordId,
        level,
        relevant,
      })
      .then(() => {
        // acknowledged, the optimistic state is now the stored state
      })
      .catch(() => {
        state.revert(queryId, recordId, level, previous);
        this.paintToggles(queryId, recordId);
        this.paintProgress(queryId);
        this.showNotice("saving failed, judgment reverted");
      });
    this.track(work);
  }

  private paintToggles(queryId: string, recordId: string): void {
    const state = this.state;
    if (!state) return;
    const item = this.queryBlock.querySelector(
      `.assess-item[data-record-id="${recordId}"]`,
    );
    if (!item) return;
    for (const level of LEVELS) {
      const judgment = state.get(queryId, recordId, level);
      const group = item.querySelector(`.toggle-group[data-level="${level}"]`);
      if (!group) continue;
      for (const button of group.querySelectorAll("button.toggle")) {
        const wantsRelevant = button.getAttribute("data-choice") === "relevant";
        button.classList.toggle("active", judgment === wantsRelevant);
      }
    }
  }

  private paintProgress(queryId: string): void {
    const state = this.state;
    if (!state) return;
    const progress = this.queryBlock.querySelector(".progress-count");
    if (progress) progress.textContent = state.progressLabel(queryId);
    const note = this.queryBlock.querySelector(".complete-note");
    if (note instanceof HTMLElement) note.hidden = !state.isComplete(queryId);
  }

  private showNotice(message: string): void {
    this.notice.textContent = message;
    this.notice.hidden = false;
  }

  private track(work: Promise<void>): void {
    this.inflight.add(work);
    void work.finally(() => this.inflight.delete(work));
  }
}
