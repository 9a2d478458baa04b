/** Free-search view: query form, method and sort selectors, result list, and
 * a detail panel for a clicked record.
 *
 * Results render strictly in API order. Relevance scores stay hidden unless
 * the view was created with showScores (routed via #/search?scores=on); the
 * assessment workflow never sets it.
 */

import {
  ApiClient,
  ApiHttpError,
  type RecordPayload,
  type SearchResponse,
} from "./api.js";
import { clear, el } from "./dom.js";
import { formatTimestamp, toViewModel } from "./state.js";

export interface SearchViewOptions {
  showScores?: boolean;
}

const METHODS = ["semantic", "bm25", "keyword"];
const SORTS = ["relevance", "time"];

export class SearchView {
  private readonly input: HTMLInputElement;
  private readonly methodSelect: HTMLSelectElement;
  private readonly sortSelect: HTMLSelectElement;
  private readonly expansionBox: HTMLInputElement;
  private readonly hint: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly bannerText: HTMLElement;
  private readonly summary: HTMLElement;
  private readonly list: HTMLOListElement;
  private readonly detail: HTMLElement;
  private readonly inflight = new Set<Promise<void>>();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: SearchViewOptions = {},
  ) {
    this.input = el("input", {
      class: "query-input",
      type: "search",
      placeholder: "search records, e.g. R105.12 Leckage",
    });
    this.methodSelect = el("select", { class: "method-select" });
    for (const method of METHODS) {
      this.methodSelect.append(el("option", { value: method }, [method]));
    }
    this.sortSelect = el("select", { class: "sort-select" });
    for (const sort of SORTS) {
      this.sortSelect.append(el("option", { value: sort }, [sort]));
    }
    this.expansionBox = el("input", { class: "expansion-box", type: "checkbox" });
    this.expansionBox.checked = true;

    const form = el("form", { class: "search-form" }, [
      this.input,
      this.methodSelect,
      this.sortSelect,
      el("label", { class: "expansion-label" }, [this.expansionBox, "expansion"]),
      el("button", { type: "submit" }, ["Search"]),
    ]);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.track(this.runSearch());
    });
    // sort or method change re-requests with the new parameters
    const rerun = () => {
      if (this.input.value.trim() !== "") this.track(this.runSearch());
    };
    this.sortSelect.addEventListener("change", rerun);
    this.methodSelect.addEventListener("change", rerun);
    this.expansionBox.addEventListener("change", rerun);

    this.hint = el("div", { class: "hint" });
    this.hint.hidden = true;
    this.bannerText = el("span", { class: "banner-text" });
    const retry = el("button", { class: "retry", type: "button" }, ["Retry"]);
    retry.addEventListener("click", () => this.track(this.runSearch()));
    this.banner = el("div", { class: "banner" }, [this.bannerText, retry]);
    this.banner.hidden = true;
    this.summary = el("div", { class: "result-summary" });
    this.list = el("ol", { class: "results" });
    this.detail = el("div", { class: "detail" });
    this.detail.hidden = true;

    this.root.append(form, this.hint, this.banner, this.summary, this.list, this.detail);
  }

  /** Resolves once every request started so far has settled. */
  async idle(): Promise<void> {
    while (this.inflight.size > 0) {
      await Promise.allSettled([...this.inflight]);
    }
  }

  private track(work: Promise<void>): void {
    this.inflight.add(work);
    void work.finally(() => this.inflight.delete(work));
  }

  private async runSearch(): Promise<void> {
    this.hint.hidden = true;
    this.banner.hidden = true;
    let response: SearchResponse;
    try {
      response = await this.api.search(this.input.value, {
        method: this.methodSelect.value,
        sort: this.sortSelect.value,
        expansion: this.expansionBox.checked,
      });
    } catch (error) {
      if (error instanceof ApiHttpError) {
        this.hint.textContent = error.message;
        this.hint.hidden = false;
      } else {
        this.bannerText.textContent = "search request failed, server unreachable";
        this.banner.hidden = false;
      }
      return;
    }
    this.renderResults(response);
  }

  private renderResults(response: SearchResponse): void {
    clear(this.summary);
    this.summary.append(
      `${response.count} results for "${response.query}" ` +
        `(${response.method}, sorted by ${response.sort})`,
    );
    clear(this.list);
    response.results.forEach((result, position) => {
      const model = toViewModel(result, position);
      const item = el("li", { class: "result-item", "data-record-id": model.recordId }, [
        el("div", { class: "result-head" }, [
          el("span", { class: "rank" }, [String(model.rank)]),
          el("span", { class: "title" }, [model.title]),
          el("time", { class: "stamp" }, [model.timestampLabel]),
        ]),
        el("p", { class: "snippet" }, [model.snippet]),
      ]);
      if (this.options.showScores && model.score !== null) {
        item.append(el("span", { class: "score" }, [`score ${model.score.toFixed(4)}`]));
      }
      item.addEventListener("click", () => this.track(this.showDetail(model.recordId)));
      this.list.append(item);
    });
  }

  private async showDetail(recordId: string): Promise<void> {
    let record: RecordPayload;
    try {
      record = await this.api.record(recordId);
    } catch {
      this.bannerText.textContent = `could not load record ${recordId}`;
      this.banner.hidden = false;
      return;
    }
    clear(this.detail);
    const close = el("button", { class: "close", type: "button" }, ["Close"]);
    close.addEventListener("click", () => {
      this.detail.hidden = true;
    });
    this.detail.append(
      el("div", { class: "detail-head" }, [
        el("h3", {}, [record.title]),
        el("time", {}, [formatTimestamp(record.timestamp)]),
        close,
      ]),
    );
    for (const [name, text] of record.body) {
      this.detail.append(
        el("section", { class: "body-section" }, [
          el("h4", {}, [name]),
          el("p", {}, [text]),
        ]),
      );
    }
    if (record.attributes.length > 0) {
      this.detail.append(
        el("ul", { class: "attributes" },
          record.attributes.map((attr) => el("li", {}, [attr]))),
      );
    }
    this.detail.hidden = false;
  }
}
