/** Queue monitor: live counts plus a feed of enqueued tasks and intent
 * commands from the event stream. */

import { ApiClient } from "./api.js";
import { BusEvent, EventStream, EventSourceFactory } from "./events.js";

export class QueueMonitor {
  private stream: EventStream | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private eventSourceFactory?: EventSourceFactory,
  ) {}

  async start(): Promise<void> {
    this.root.innerHTML = `
      <h2>Queue monitor</h2>
      <dl class="queue-counts"></dl>
      <ul class="event-feed"></ul>
    `;
    await this.refreshCounts();
    const url = this.api.eventsUrl(["queries", "intent"]);
    this.stream = new EventStream(url, this.eventSourceFactory)
      .on("queries", (event) => this.onEvent(event))
      .on("intent", (event) => this.onEvent(event))
      .start();
  }

  stop(): void {
    this.stream?.close();
  }

  async refreshCounts(): Promise<void> {
    const metrics = await this.api.streamMetrics();
    const dl = this.root.querySelector<HTMLElement>(".queue-counts");
    if (!dl || !metrics) {
      return;
    }
    dl.innerHTML = "";
    const rows: Array<[string, string]> = [
      ["queued", String(metrics.queue.queued ?? 0)],
      ["leased", String(metrics.queue.leased ?? 0)],
      ["answered", String(metrics.queue.answered ?? 0)],
      ["labels", String(metrics.labels)],
      ["model version", String(metrics.model_version)],
      ["presented defect ratio", metrics.window_ratio.toFixed(3)],
    ];
    for (const [k, v] of rows) {
      const dt = document.createElement("dt");
      dt.textContent = k;
      const dd = document.createElement("dd");
      dd.textContent = v;
      dl.append(dt, dd);
    }
  }

  private onEvent(event: BusEvent): void {
    const feed = this.root.querySelector<HTMLElement>(".event-feed");
    if (!feed) {
      return;
    }
    const item = document.createElement("li");
    item.className = `event-${event.topic}`;
    if (event.topic === "queries") {
      const task = (event.payload.task ?? {}) as { task_id?: string; info_score?: number };
      item.textContent = `task ${task.task_id} enqueued (score ${task.info_score?.toFixed(3)})`;
    } else {
      item.textContent = `robot: ${String(event.payload.command)} ` +
        `(worker ${String(event.payload.activity)})`;
    }
    feed.prepend(item);
    while (feed.childElementCount > 50) {
      feed.lastElementChild?.remove();
    }
  }
}
