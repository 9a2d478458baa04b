import { ApiClient } from "./api.js";
import { el } from "./dom.js";
import { startRouter } from "./router.js";

function buildNav(): HTMLElement {
  const input = el("input", {
    class: "nav-assessor",
    placeholder: "assessor id",
  });
  const go = el("button", { type: "button" }, ["Assess"]);
  go.addEventListener("click", () => {
    const id = input.value.trim();
    if (id !== "") {
      window.location.hash = `#/assess/${encodeURIComponent(id)}`;
    }
  });
  return el("nav", { class: "top-nav" }, [
    el("span", { class: "brand" }, ["shiftsearch"]),
    el("a", { href: "#/search" }, ["Search"]),
    input,
    go,
  ]);
}

document.addEventListener("DOMContentLoaded", () => {
  const app = document.getElementById("app");
  if (!app) return;
  // served by the search service itself, so same-origin relative URLs
  const api = new ApiClient("");
  app.append(buildNav());
  const outlet = el("main", { class: "view" });
  app.append(outlet);
  startRouter(outlet, api);
});
