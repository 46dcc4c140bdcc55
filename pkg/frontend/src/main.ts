import { ApiClient } from "./api.js";
import { DashboardStore } from "./state.js";
import { DashboardUI } from "./ui.js";

const POLL_MS = 3000;

const root = document.getElementById("app");
if (root) {
  const store = new DashboardStore(new ApiClient(""));
  const ui = new DashboardUI(store, root);
  void store.refresh().then(() => {
    const sel = ui.sliceSelection();
    if (sel) void store.loadSlice(sel.x, sel.y, sel.pins);
  });
  setInterval(() => {
    // reads only; never overlaps the single in-flight mutation
    if (!store.mutationInFlight) void store.refresh();
  }, POLL_MS);
}
