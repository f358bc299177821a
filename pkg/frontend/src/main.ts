// Page wiring: fetches from the engine service mounted on the same origin
// and re-renders the panels after every response.

import { HttpApi, ServiceError } from "./api.js";
import {
  acceptOnce,
  applyForest,
  applyRecommendation,
  emptyViewModel,
  scoreRows,
} from "./state.js";
import {
  renderError,
  renderForestPanel,
  renderHistory,
  renderMasteryPanel,
  renderMatrix,
  renderPrompt,
  renderRecommendation,
  renderStaleBanner,
} from "./ui.js";

const api = new HttpApi("");
const vm = emptyViewModel();
const DELTA = 0.34;

function panel(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node;
}

function redraw(): void {
  panel("banner").innerHTML = renderStaleBanner(vm);
  if (vm.forest !== null) {
    panel("forest").innerHTML = renderForestPanel(vm.forest);
    panel("matrix").innerHTML = renderMatrix(vm.forest);
  }
  panel("mastery").innerHTML = renderMasteryPanel(vm);
  const rows = vm.recommendation !== null && vm.forest !== null
    ? scoreRows(vm.recommendation, vm.forest)
    : [];
  panel("recommendation").innerHTML = renderRecommendation(vm, rows);
  panel("history").innerHTML = renderHistory(vm.history);
  panel("prompt").innerHTML = renderPrompt(vm.prompt);
  wireSliders();
}

function showError(error: unknown): void {
  panel("banner").innerHTML = renderError(error);
  if (!(error instanceof ServiceError)) throw error;
}

async function reload(): Promise<void> {
  applyForest(vm, await api.getForest());
  const picker = panel("user") as HTMLSelectElement;
  const current = picker.value;
  picker.innerHTML = vm.forest!.users
    .map((u) => `<option value="${u}">${u}</option>`)
    .join("");
  if (vm.forest!.users.includes(current)) picker.value = current;
  vm.userId = picker.value || null;
  redraw();
}

async function refreshRecommendation(): Promise<void> {
  if (vm.userId === null) return;
  applyRecommendation(vm, await api.recommend(vm.userId));
  redraw();
}

function wireSliders(): void {
  panel("mastery").querySelectorAll("input[type=range]").forEach((node) => {
    node.addEventListener("change", async (event) => {
      const input = event.target as HTMLInputElement;
      const tree = Number(input.dataset.tree);
      const target = Number(input.value);
      const current = vm.mastery[tree] ?? 0;
      // the endpoint only accepts forward progress
      if (target <= current || vm.userId === null) {
        input.value = String(current);
        return;
      }
      try {
        await api.updateMastery(vm.userId, tree, target - current);
        await refreshRecommendation();
      } catch (error) {
        showError(error);
      }
    });
  });
}

function wire(): void {
  panel("user").addEventListener("change", () => {
    const picker = panel("user") as HTMLSelectElement;
    vm.userId = picker.value || null;
    vm.history = [];
    vm.recommendation = null;
    refreshRecommendation().catch(showError);
  });
  panel("recommend-button").addEventListener("click", () => {
    refreshRecommendation().catch(showError);
  });
  panel("accept-button").addEventListener("click", async () => {
    try {
      if (await acceptOnce(api, vm, DELTA)) redraw();
    } catch (error) {
      showError(error);
    }
  });
  panel("reload-button").addEventListener("click", () => {
    reload().catch(showError);
  });
  panel("prompt-button").addEventListener("click", async () => {
    const focus = (panel("prompt-focus") as HTMLInputElement).value.trim();
    if (focus === "") return;
    try {
      vm.prompt = await api.buildPrompt({
        task: {
          task_id: "ui-task",
          focus_concepts: focus.split(/\s*,\s*/),
          problem_type: (panel("prompt-type") as HTMLInputElement).value,
          hop_radius: 1,
        },
        user_id: vm.userId ?? undefined,
      });
      redraw();
    } catch (error) {
      showError(error);
    }
  });
}

wire();
reload().then(refreshRecommendation).catch(showError);
