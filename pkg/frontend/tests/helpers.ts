/** In-memory stand-in for the workbench API, used by the console tests. */

import type { FetchLike, ImagePayload, QueryTaskView } from "../src/api.js";

export interface RecordedRequest {
  method: string;
  path: string;
  body: any;
}

function tinyImage(value: number): ImagePayload {
  return { width: 8, height: 8, pixels: new Array(64).fill(value) };
}

export function makeTask(i: number, hintKind: string | null): QueryTaskView {
  return {
    task_id: `task-${i}`,
    sample_id: `sample-${i}`,
    strategy_name: "entropy",
    info_score: 0.5,
    hints: hintKind ? [`hint-${i}`] : [],
    state: "leased",
    sample_payload: tinyImage(0.2),
    reference_payload: tinyImage(0.8),
    reference_label: "good",
    label_choices: ["good", "double_print", "interrupted_print"],
  };
}

export function hintExplanation(id: string, kind: string) {
  const payload: Record<string, unknown> =
    kind === "nearest_neighbor"
      ? {
          neighbor_ref: "sample-x",
          neighbor_label: "double_print",
          ssim: 0.93,
          neighbor_payload: tinyImage(0.5),
        }
      : { width: 8, height: 8, map: new Array(64).fill(0.1) };
  return {
    id,
    prediction_ref: "p",
    kind,
    payload,
    redaction: "concept_only",
    warnings: [],
  };
}

export class FakeServer {
  requests: RecordedRequest[] = [];
  tasks: QueryTaskView[] = [];
  hintKinds = new Map<string, string>();
  options = [
    { id: "increase_order", action_text: "Increase order", score: 0.8, base_score: 0.8, condition: "" },
    { id: "review_stock", action_text: "Review stock", score: 0.5, base_score: 0.5, condition: "" },
  ];
  private cursor = 0;

  addTasks(n: number, kinds: Array<string | null>): void {
    for (let i = 0; i < n; i += 1) {
      const kind = kinds[i % kinds.length];
      const task = makeTask(this.tasks.length, kind);
      this.tasks.push(task);
      if (kind) {
        this.hintKinds.set(`hint-${this.tasks.length - 1}`, kind);
      }
    }
  }

  posts(path: string): RecordedRequest[] {
    return this.requests.filter((r) => r.method === "POST" && r.path.startsWith(path));
  }

  fetch: FetchLike = async (input, init) => {
    const url = new URL(input, "http://test.local");
    const path = url.pathname.replace(/^\/v1/, "");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    this.requests.push({ method, path, body });

    const json = (data: unknown, status = 200) =>
      new Response(JSON.stringify(data), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    if (method === "GET" && path === "/queue/next") {
      if (this.cursor >= this.tasks.length) {
        return new Response(null, { status: 204 });
      }
      const task = this.tasks[this.cursor];
      this.cursor += 1;
      return json(task);
    }
    if (method === "GET" && path.startsWith("/explanations/")) {
      const id = path.split("/").pop()!;
      const kind = this.hintKinds.get(id) ?? "saliency_map";
      return json(hintExplanation(id, kind));
    }
    if (method === "POST" && path === "/labels") {
      return json({ record_id: `rec-${body.task_id}`, ...body, annotator: "t" }, 201);
    }
    if (method === "POST" && path === "/whatif") {
      const base = [0, 0, 6, 0, 0, 6];
      const factor = body.adjustments.length ? body.adjustments[0].multiplier ?? 1 : 1;
      return json({
        product_id: body.product_id,
        label: body.label,
        base_forecast: 2.0,
        scenario_forecast: 2.0 * factor,
        delta: 2.0 * factor - 2.0,
        base_quantities: base,
        scenario_quantities: base.map((v) => v * factor),
      });
    }
    if (method === "GET" && path === "/options") {
      return json({ options: this.options });
    }
    if (method === "POST" && path === "/feedback") {
      return json({ id: "fb", ...body }, 201);
    }
    if (method === "GET" && path === "/stream/metrics") {
      return json({
        real_items: 10, real_defects: 1, real_defect_rate: 0.1,
        emitted_items: 12, injected_items: 2, window_ratio: 0.3,
        model_version: 1, labels: 5, samples: 20,
        queue: { queued: 3, leased: 1, answered: 5 },
      });
    }
    return json({ code: "not_found", message: `no route ${method} ${path}`, details: {} }, 404);
  };
}

/** Deterministic clock advancing a fixed step per call. */
export function steppingClock(stepMs = 37): () => number {
  let now = 0;
  return () => {
    now += stepMs;
    return now;
  };
}
