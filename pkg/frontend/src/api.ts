/**
 * Typed client for the workbench /v1 API. The console talks to the server
 * exclusively through this module; the role is asserted via the X-Role
 * header (desk mode).
 */

export interface QueryTaskView {
  task_id: string;
  sample_id: string;
  strategy_name: string;
  info_score: number;
  hints: string[];
  state: string;
  sample_payload?: ImagePayload;
  reference_payload?: ImagePayload;
  reference_label?: string;
  label_choices?: string[];
}

export interface ImagePayload {
  width: number;
  height: number;
  pixels: number[];
}

export interface LabelRecord {
  record_id: string;
  task_id: string;
  sample_id: string;
  label: string;
  annotator: string;
  elapsed_ms: number;
  hint_shown: string | null;
}

export interface Explanation {
  id: string;
  prediction_ref: string;
  kind: string;
  payload: Record<string, unknown>;
  redaction: string;
  warnings: string[];
}

export interface DecisionOption {
  id: string;
  action_text: string;
  score: number;
  base_score: number;
  condition: string;
}

export interface ForecastResult {
  product_id: string;
  method: string;
  forecast: number;
  occurrence_probability?: number;
  expected_size?: number;
}

export interface WhatIfAdjustment {
  period_start: number;
  period_end: number;
  multiplier?: number;
  delta?: number;
}

export interface WhatIfResult {
  product_id: string;
  label: string;
  base_forecast: number;
  scenario_forecast: number;
  delta: number;
  base_quantities: number[];
  scenario_quantities: number[];
}

export interface StreamMetrics {
  real_items: number;
  real_defects: number;
  real_defect_rate: number;
  emitted_items: number;
  injected_items: number;
  window_ratio: number;
  model_version: number;
  labels: number;
  samples: number;
  queue: Record<string, number>;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private role: string,
    private actor: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(): Record<string, string> {
    return {
      "Content-Type": "application/json",
      "X-Role": this.role,
      "X-Actor": this.actor,
    };
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T | null> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) {
      return null;
    }
    const data = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, data.code ?? "error", data.message ?? "request failed");
    }
    return data as T;
  }

  queueNext(): Promise<QueryTaskView | null> {
    return this.request<QueryTaskView>("GET", "/queue/next");
  }

  submitLabel(body: {
    task_id: string;
    label: string;
    elapsed_ms: number;
    hint_shown: string | null;
  }): Promise<LabelRecord | null> {
    return this.request<LabelRecord>("POST", "/labels", body);
  }

  getExplanation(id: string): Promise<Explanation | null> {
    return this.request<Explanation>("GET", `/explanations/${encodeURIComponent(id)}`);
  }

  getForecast(productId: string, method = "croston"): Promise<ForecastResult | null> {
    return this.request<ForecastResult>(
      "GET",
      `/forecasts/${encodeURIComponent(productId)}?method=${method}`,
    );
  }

  whatIf(body: {
    product_id: string;
    label: string;
    adjustments: WhatIfAdjustment[];
    method?: string;
  }): Promise<WhatIfResult | null> {
    return this.request<WhatIfResult>("POST", "/whatif", body);
  }

  getOptions(context: Record<string, number>): Promise<{ options: DecisionOption[] } | null> {
    const encoded = encodeURIComponent(JSON.stringify(context));
    return this.request<{ options: DecisionOption[] }>("GET", `/options?context=${encoded}`);
  }

  sendFeedback(body: {
    subject_kind: "prediction" | "explanation" | "option";
    subject_ref: string;
    signal: string;
    rating?: number;
    free_text?: string;
  }): Promise<Record<string, unknown> | null> {
    return this.request("POST", "/feedback", body);
  }

  addKnowledge(body: { subject: string; relation: string; object: string }): Promise<
    Record<string, unknown> | null
  > {
    return this.request("POST", "/knowledge", body);
  }

  streamMetrics(): Promise<StreamMetrics | null> {
    return this.request<StreamMetrics>("GET", "/stream/metrics");
  }

  eventsUrl(topics: string[]): string {
    return `${this.baseUrl}/events?topics=${topics.join(",")}`;
  }
}
