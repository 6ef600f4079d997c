/**
 * Server-sent-events consumer for the queue and intent topics. The
 * EventSource constructor is injectable so tests can drive the stream.
 */

export interface BusEvent {
  topic: string;
  seq: number;
  actor: string;
  ts: number;
  payload: Record<string, unknown>;
}

export type EventHandler = (event: BusEvent) => void;

interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export class EventStream {
  private source: EventSourceLike | null = null;
  private handlers = new Map<string, EventHandler[]>();

  constructor(
    private url: string,
    private factory: EventSourceFactory = (u) =>
      new (globalThis as { EventSource: new (url: string) => EventSourceLike }).EventSource(u),
  ) {}

  on(topic: string, handler: EventHandler): this {
    const list = this.handlers.get(topic) ?? [];
    list.push(handler);
    this.handlers.set(topic, list);
    return this;
  }

  start(): this {
    this.source = this.factory(this.url);
    for (const topic of this.handlers.keys()) {
      this.source.addEventListener(topic, (event) => {
        const parsed = JSON.parse(event.data) as BusEvent;
        for (const handler of this.handlers.get(topic) ?? []) {
          handler(parsed);
        }
      });
    }
    return this;
  }

  close(): void {
    this.source?.close();
    this.source = null;
  }
}
