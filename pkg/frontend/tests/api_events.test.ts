import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { grayToBmpBytes, toDataUrl } from "../src/bmp.js";
import { BusEvent, EventStream } from "../src/events.js";
import { QueueMonitor } from "../src/monitor.js";
import { FakeServer } from "./helpers.js";

describe("api client", () => {
  it("sends role and actor headers and parses bodies", async () => {
    let captured: RequestInit | undefined;
    const fetchFn = async (input: string, init?: RequestInit) => {
      captured = init;
      return new Response(JSON.stringify({ options: [] }), { status: 200 });
    };
    const api = new ApiClient("/v1", "planner", "p-7", fetchFn);
    await api.getOptions({ stock_cover_days: 3 });
    const headers = captured?.headers as Record<string, string>;
    expect(headers["X-Role"]).toBe("planner");
    expect(headers["X-Actor"]).toBe("p-7");
  });

  it("maps 204 to null", async () => {
    const api = new ApiClient("/v1", "annotator", "a", async () =>
      new Response(null, { status: 204 }),
    );
    expect(await api.queueNext()).toBeNull();
  });

  it("raises ApiError with the server error code", async () => {
    const api = new ApiClient("/v1", "ghost", "g", async () =>
      new Response(JSON.stringify({ code: "forbidden", message: "no", details: {} }), {
        status: 403,
      }),
    );
    await expect(api.queueNext()).rejects.toMatchObject({ status: 403, code: "forbidden" });
    await expect(api.queueNext()).rejects.toBeInstanceOf(ApiError);
  });
});

describe("bmp encoding", () => {
  it("produces a well-formed grayscale bmp", () => {
    const bytes = grayToBmpBytes({ width: 3, height: 2, pixels: [0, 0.5, 1, 1, 0.5, 0] });
    expect(bytes[0]).toBe(0x42);
    expect(bytes[1]).toBe(0x4d);
    const view = new DataView(bytes.buffer);
    expect(view.getUint32(18, true)).toBe(3); // width
    expect(view.getUint32(22, true)).toBe(2); // height
    expect(view.getUint16(28, true)).toBe(8); // bits per pixel
    const offset = view.getUint32(10, true);
    // bottom row first: pixels (1, 0.5, 0) -> 255, 128, 0
    expect(bytes[offset]).toBe(255);
    expect(bytes[offset + 1]).toBe(128);
    expect(bytes[offset + 2]).toBe(0);
  });

  it("rejects mismatched pixel counts and emits a data url", () => {
    expect(() => grayToBmpBytes({ width: 2, height: 2, pixels: [0] })).toThrow();
    const url = toDataUrl({ width: 2, height: 2, pixels: [0, 1, 1, 0] });
    expect(url.startsWith("data:image/bmp;base64,")).toBe(true);
  });
});

class FakeEventSource {
  static instances: FakeEventSource[] = [];
  listeners = new Map<string, Array<(event: MessageEvent) => void>>();
  closed = false;

  constructor(public url: string) {
    FakeEventSource.instances.push(this);
  }

  addEventListener(type: string, listener: (event: MessageEvent) => void): void {
    const list = this.listeners.get(type) ?? [];
    list.push(listener);
    this.listeners.set(type, list);
  }

  emit(type: string, data: unknown): void {
    for (const listener of this.listeners.get(type) ?? []) {
      listener({ data: JSON.stringify(data) } as MessageEvent);
    }
  }

  close(): void {
    this.closed = true;
  }
}

describe("event stream", () => {
  it("dispatches parsed events to topic handlers", () => {
    const seen: BusEvent[] = [];
    const stream = new EventStream("/v1/events?topics=queries", (url) => new FakeEventSource(url));
    stream.on("queries", (event) => seen.push(event)).start();
    const source = FakeEventSource.instances.at(-1)!;
    source.emit("queries", {
      topic: "queries",
      seq: 4,
      actor: "al",
      ts: 1,
      payload: { event: "task_enqueued", task: { task_id: "t1", info_score: 0.9 } },
    });
    expect(seen).toHaveLength(1);
    expect(seen[0].seq).toBe(4);
    stream.close();
    expect(source.closed).toBe(true);
  });

  it("feeds the queue monitor", async () => {
    const server = new FakeServer();
    const root = document.createElement("div");
    document.body.appendChild(root);
    const api = new (await import("../src/api.js")).ApiClient("/v1", "planner", "p", server.fetch);
    const monitor = new QueueMonitor(root, api, (url) => new FakeEventSource(url));
    await monitor.start();
    expect(root.querySelector(".queue-counts")!.textContent).toContain("queued");

    const source = FakeEventSource.instances.at(-1)!;
    source.emit("queries", {
      topic: "queries",
      seq: 1,
      actor: "al",
      ts: 0,
      payload: { event: "task_enqueued", task: { task_id: "t9", info_score: 0.42 } },
    });
    source.emit("intent", {
      topic: "intent",
      seq: 1,
      actor: "intention",
      ts: 0,
      payload: { command: "slow", activity: "walk" },
    });
    const feed = root.querySelector(".event-feed")!;
    expect(feed.children).toHaveLength(2);
    expect(feed.textContent).toContain("t9");
    expect(feed.textContent).toContain("slow");
    monitor.stop();
  });
});
