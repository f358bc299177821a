// Wire types for the engine's JSON API. Field names match the server
// payloads verbatim; everything numeric is produced server-side.

export interface TreeCard {
  index: number;
  tree_id: string;
  root: string;
  root_name: string;
  size: number;
}

export interface ForestSummary {
  revision: number;
  trained: boolean;
  trees: TreeCard[];
  matrix: number[][] | null;
  users: string[];
  templates: string[];
}

export interface RecommendPayload {
  revision: number;
  user_id: string;
  next: number | null;
  tree_id: string | null;
  scores: number[];
  mastery: number[];
}

export interface MasteryPayload {
  revision: number;
  user_id: string;
  mastery: number[];
}

export interface PromptPayload {
  revision: number;
  template_id: string;
  goal: string;
  explanation: string;
  feedback: string;
  slot_values: Record<string, string>;
  provenance: Record<string, string>;
  score: number;
}

export interface SimStepPayload {
  step: number;
  chosen: number | null;
  mastery: number[];
}

export interface SimulatePayload {
  revision: number;
  start: number[];
  trajectory: SimStepPayload[];
}

export interface TaskRequest {
  task_id: string;
  focus_concepts: string[];
  problem_type?: string;
  hop_radius?: number;
}

export interface PromptRequest {
  task: TaskRequest;
  user_id?: string;
  template_ids?: string[];
  overrides?: Record<string, unknown>;
}

export interface SimulateRequest {
  user_id?: string;
  delta?: number;
  max_steps?: number;
  mastery_goal?: number;
  seed?: number;
}

export interface ErrorBody {
  code: string;
  message: string;
  detail: unknown;
}
