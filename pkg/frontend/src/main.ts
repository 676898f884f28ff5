import { ApiClient } from "./api.js";
import { initApp } from "./app.js";

const rootEl = document.getElementById("app");
if (rootEl) {
    // same-origin API; `meshsearch serve --ui-dir` hosts both
    initApp(rootEl, new ApiClient(""));
}
