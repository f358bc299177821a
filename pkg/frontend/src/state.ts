// View model and the decision-loop plumbing. The server is the only
// calculator: scores, recommendations, and mastery all arrive in payloads,
// and this module only rearranges them for display. The one derived figure,
// the relatedness factor of the score breakdown, is recovered from the
// server's own score and mastery numbers (score = relatedness * headroom).

import type { Api } from "./api.js";
import type {
  ForestSummary,
  PromptPayload,
  RecommendPayload,
  SimStepPayload,
} from "./types.js";

export interface ScoreRow {
  index: number;
  treeId: string;
  mastery: number;
  score: number;
  // sum_i r[i][k] * s_i, undefined for mastered trees where headroom is 0
  relatedness: number | null;
  headroom: number;
  eligible: boolean;
  chosen: boolean;
}

export interface HistoryEntry {
  step: number;
  chosen: number;
  treeId: string | null;
  mastery: number[];
}

export interface ViewModel {
  revision: number;
  stale: boolean;
  forest: ForestSummary | null;
  userId: string | null;
  mastery: number[];
  recommendation: RecommendPayload | null;
  prompt: PromptPayload | null;
  history: HistoryEntry[];
}

export function emptyViewModel(): ViewModel {
  return {
    revision: -1,
    stale: false,
    forest: null,
    userId: null,
    mastery: [],
    recommendation: null,
    prompt: null,
    history: [],
  };
}

// A read that reports a revision we have not seen means another client
// mutated the forest; flag the view until it is reloaded.
export function noteRevision(vm: ViewModel, revision: number): void {
  if (vm.revision >= 0 && revision !== vm.revision) {
    vm.stale = true;
  }
}

// Our own mutations move the revision forward; the view stays fresh.
export function adoptRevision(vm: ViewModel, revision: number): void {
  vm.revision = revision;
  vm.stale = false;
}

export function applyForest(vm: ViewModel, forest: ForestSummary): void {
  vm.forest = forest;
  adoptRevision(vm, forest.revision);
}

export function applyRecommendation(vm: ViewModel, payload: RecommendPayload): void {
  noteRevision(vm, payload.revision);
  vm.recommendation = payload;
  vm.mastery = payload.mastery.slice();
}

export function scoreRows(payload: RecommendPayload, forest: ForestSummary): ScoreRow[] {
  return forest.trees.map((tree) => {
    const mastery = payload.mastery[tree.index];
    const score = payload.scores[tree.index];
    const headroom = 1 - mastery;
    return {
      index: tree.index,
      treeId: tree.tree_id,
      mastery,
      score,
      relatedness: headroom > 0 ? score / headroom : null,
      headroom,
      eligible: mastery < 1,
      chosen: payload.next === tree.index,
    };
  });
}

// The index the table itself points at: highest displayed score among
// eligible rows, first on ties. Tests hold this equal to the server's pick.
export function displayedArgmax(rows: ScoreRow[]): number | null {
  let best: ScoreRow | null = null;
  for (const row of rows) {
    if (!row.eligible) continue;
    if (best === null || row.score > best.score) {
      best = row;
    }
  }
  return best === null ? null : best.index;
}

// One click of "accept": apply the increment to the recommended tree and
// fetch the next recommendation.
export async function acceptOnce(api: Api, vm: ViewModel, delta: number): Promise<boolean> {
  const current = vm.recommendation;
  if (current === null || current.next === null || vm.userId === null) {
    return false;
  }
  const update = await api.updateMastery(vm.userId, current.next, delta);
  adoptRevision(vm, update.revision);
  vm.history.push({
    step: vm.history.length,
    chosen: current.next,
    treeId: current.tree_id,
    mastery: update.mastery.slice(),
  });
  applyRecommendation(vm, await api.recommend(vm.userId));
  return true;
}

// The full step-through loop; mirrors the server-side simulator step for
// step, so its output is comparable with a /simulate trajectory.
export async function acceptLoop(api: Api, userId: string, delta: number,
                                 maxSteps: number): Promise<SimStepPayload[]> {
  const steps: SimStepPayload[] = [];
  for (let step = 0; step < maxSteps; step += 1) {
    const recommendation = await api.recommend(userId);
    if (recommendation.next === null) {
      break;
    }
    const update = await api.updateMastery(userId, recommendation.next, delta);
    steps.push({ step, chosen: recommendation.next, mastery: update.mastery });
  }
  return steps;
}
