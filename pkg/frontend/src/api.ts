// Thin fetch wrapper over the engine service. Non-2xx responses carry a
// {code, message, detail} body; they surface as ServiceError so panels can
// show the code verbatim.

import type {
  ErrorBody,
  ForestSummary,
  MasteryPayload,
  PromptPayload,
  PromptRequest,
  RecommendPayload,
  SimulatePayload,
  SimulateRequest,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  readonly code: string;
  readonly detail: unknown;

  constructor(body: ErrorBody) {
    super(body.message);
    this.name = "ServiceError";
    this.code = body.code;
    this.detail = body.detail;
  }
}

export interface Api {
  getForest(): Promise<ForestSummary>;
  recommend(userId: string): Promise<RecommendPayload>;
  updateMastery(userId: string, tree: number, delta: number): Promise<MasteryPayload>;
  buildPrompt(request: PromptRequest): Promise<PromptPayload>;
  simulate(request: SimulateRequest): Promise<SimulatePayload>;
}

export class HttpApi implements Api {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl: FetchLike = (input, init) => fetch(input, init)) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  getForest(): Promise<ForestSummary> {
    return this.send<ForestSummary>("GET", "/forest");
  }

  recommend(userId: string): Promise<RecommendPayload> {
    return this.send<RecommendPayload>("POST", "/recommend", { user_id: userId });
  }

  updateMastery(userId: string, tree: number, delta: number): Promise<MasteryPayload> {
    return this.send<MasteryPayload>("POST", "/mastery",
      { user_id: userId, tree, delta });
  }

  buildPrompt(request: PromptRequest): Promise<PromptPayload> {
    return this.send<PromptPayload>("POST", "/prompt", request);
  }

  simulate(request: SimulateRequest): Promise<SimulatePayload> {
    return this.send<SimulatePayload>("POST", "/simulate", request);
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ServiceError(payload as ErrorBody);
    }
    return payload as T;
  }
}
