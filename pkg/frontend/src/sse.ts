// Server-sent events over fetch. The native EventSource cannot set the
// Last-Event-ID header on a fresh connection, which is exactly what resuming
// after a reconnect needs, so the stream is read by hand.

export interface SseEvent {
  id: string | null;
  event: string;
  data: string;
}

/**
 * Incremental parser for the text/event-stream format. Feed it decoded text
 * in arbitrary chunks; it returns completed events as they close. Comment
 * lines (leading ':') are heartbeats and produce no event, but do count as
 * activity for the caller's staleness tracking.
 */
export class SseParser {
  private buffer = "";
  private dataLines: string[] = [];
  private eventType = "";
  private eventId: string | null = null;
  /** Last event id seen on the stream, for resuming. */
  lastEventId: string | null = null;

  feed(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const events: SseEvent[] = [];
    let nl: number;
    while ((nl = this.buffer.indexOf("\n")) >= 0) {
      let line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line === "") {
        const ev = this.closeEvent();
        if (ev) events.push(ev);
        continue;
      }
      if (line.startsWith(":")) continue; // comment / heartbeat
      this.field(line);
    }
    return events;
  }

  private field(line: string) {
    const colon = line.indexOf(":");
    const name = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (name === "data") this.dataLines.push(value);
    else if (name === "event") this.eventType = value;
    else if (name === "id" && !value.includes("\0")) {
      this.eventId = value;
      this.lastEventId = value;
    }
    // other fields (retry, unknown) are ignored
  }

  private closeEvent(): SseEvent | null {
    if (this.dataLines.length === 0 && this.eventType === "" && this.eventId === null) {
      return null; // blank line with nothing pending
    }
    const ev: SseEvent = {
      id: this.eventId,
      event: this.eventType || "message",
      data: this.dataLines.join("\n"),
    };
    this.dataLines = [];
    this.eventType = "";
    this.eventId = null;
    return ev.data === "" && ev.event === "message" ? null : ev;
  }
}

export interface StreamHandlers {
  onEvent: (ev: SseEvent) => void;
  /** Any bytes arrived (heartbeats included); used for staleness tracking. */
  onActivity?: () => void;
  onConnectionChange?: (connected: boolean) => void;
}

export interface StreamOptions {
  /** Resume point: only records with seq > sinceSeq are replayed. */
  sinceSeq?: number;
  retryDelayMs?: number;
  fetchFn?: typeof fetch;
}

/**
 * One long-lived subscription to the gateway event feed. Reconnects by
 * itself, resuming from the last event id so the feed has no gaps and no
 * duplicates across drops.
 */
export class EventStream {
  private parser = new SseParser();
  private stopped = false;
  private controller: AbortController | null = null;
  private retryDelayMs: number;
  private fetchFn: typeof fetch;
  private sinceSeq: number;

  constructor(
    private baseUrl: string,
    private handlers: StreamHandlers,
    options: StreamOptions = {},
  ) {
    this.sinceSeq = options.sinceSeq ?? 0;
    this.retryDelayMs = options.retryDelayMs ?? 1000;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  /** Drop the current connection; the loop reconnects and resumes. */
  forceReconnect(): void {
    this.controller?.abort();
  }

  get lastEventId(): string | null {
    return this.parser.lastEventId;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.controller = new AbortController();
      try {
        await this.readOnce(this.controller.signal);
      } catch {
        // aborted or network error; fall through to retry
      }
      this.handlers.onConnectionChange?.(false);
      if (this.stopped) return;
      await sleep(this.retryDelayMs);
    }
  }

  private async readOnce(signal: AbortSignal): Promise<void> {
    const resume = this.parser.lastEventId ?? String(this.sinceSeq);
    const url = `${this.baseUrl}/v1/events?since=${encodeURIComponent(resume)}`;
    const headers: Record<string, string> = {};
    if (this.parser.lastEventId !== null) {
      headers["Last-Event-ID"] = this.parser.lastEventId;
    }
    const response = await this.fetchFn(url, { headers, signal });
    if (!response.ok || !response.body) {
      throw new Error(`event stream: http ${response.status}`);
    }
    this.handlers.onConnectionChange?.(true);
    this.handlers.onActivity?.();
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      this.handlers.onActivity?.();
      for (const ev of this.parser.feed(decoder.decode(value, { stream: true }))) {
        this.handlers.onEvent(ev);
      }
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
