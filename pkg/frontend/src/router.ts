/** Hash routing between the two views.
 *
 *   #/search             free search, scores hidden
 *   #/search?scores=on   free search with the score column enabled
 *   #/assess/<assessor>  assessment workflow for one assessor
 */

import { ApiClient } from "./api.js";
import { AssessView } from "./assess.js";
import { clear } from "./dom.js";
import { SearchView } from "./search.js";

export interface Route {
  view: "search" | "assess";
  assessorId?: string;
  showScores?: boolean;
}

export function parseHash(hash: string): Route {
  const trimmed = hash.replace(/^#\/?/, "");
  const [pathPart, queryPart] = trimmed.split("?", 2);
  const segments = (pathPart ?? "").split("/").filter((s) => s !== "");
  if (segments[0] === "assess" && segments[1]) {
    return { view: "assess", assessorId: decodeURIComponent(segments[1]) };
  }
  const params = new URLSearchParams(queryPart ?? "");
  return { view: "search", showScores: params.get("scores") === "on" };
}

export function startRouter(outlet: HTMLElement, api: ApiClient): void {
  const apply = () => {
    const route = parseHash(window.location.hash);
    clear(outlet);
    if (route.view === "assess" && route.assessorId) {
      const view = new AssessView(outlet, api, route.assessorId);
      void view.init();
    } else {
      new SearchView(outlet, api, { showScores: route.showScores });
    }
  };
  window.addEventListener("hashchange", apply);
  apply();
}
