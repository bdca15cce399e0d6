/**
 * Virtual handset core: one phone number's message thread against the
 * gateway's wire API. Keeps no game logic at all — it sends raw text and
 * renders whatever comes back, in delivery order.
 *
 * Incoming messages are reconstructed from sequence number 0 on every
 * start, so a reload rebuilds the identical thread; outgoing messages are
 * kept in sessionStorage (page-session scope only) to survive the reload.
 */

export type Direction = "in" | "out" | "error";

export interface ThreadMessage {
  direction: Direction;
  text: string;
  ts: number; // epoch milliseconds
  seq?: number; // gateway sequence, incoming only
}

interface WireOutbound {
  to: string;
  text: string;
  seq: number;
  ts: number;
}

export interface HandsetOptions {
  baseUrl: string;
  phone: string;
  pollIntervalMs?: number;
  fetchFn?: typeof fetch;
  storage?: Pick<Storage, "getItem" | "setItem">;
  now?: () => number;
}

const orderKey = (m: ThreadMessage): [number, number, number] => [
  m.ts,
  m.direction === "in" ? 1 : 0, // a reply sorts after the send that caused it
  m.seq ?? 0,
];

function compareMessages(a: ThreadMessage, b: ThreadMessage): number {
  const ka = orderKey(a);
  const kb = orderKey(b);
  for (let i = 0; i < ka.length; i++) {
    if (ka[i] !== kb[i]) return ka[i] - kb[i];
  }
  return 0;
}

export class Handset {
  readonly phone: string;
  baseUrl: string;
  pollIntervalMs: number;
  thread: ThreadMessage[] = [];
  lastSeenSeq = 0;
  onChange: (() => void) | null = null;

  private fetchFn: typeof fetch;
  private storage: Pick<Storage, "getItem" | "setItem"> | null;
  private now: () => number;
  private timer: ReturnType<typeof setInterval> | null = null;
  private polling = false;

  constructor(options: HandsetOptions) {
    this.phone = options.phone;
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
    this.storage = options.storage ?? null;
    this.now = options.now ?? Date.now;
    this.restoreOutgoing();
  }

  /** POST the text to the gateway; the thread shows it immediately. */
  async send(text: string): Promise<void> {
    if (!text) return;
    this.append({ direction: "out", text, ts: this.now() });
    this.persistOutgoing();
    try {
      const response = await this.fetchFn(`${this.baseUrl}/sms`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ from: this.phone, text }),
      });
      if (!response.ok) {
        const body = await response.json().catch(() => ({ error: response.statusText }));
        this.append({
          direction: "error",
          text: `send failed: ${body.error ?? response.status}`,
          ts: this.now(),
        });
      }
    } catch (err) {
      this.append({ direction: "error", text: `send failed: ${err}`, ts: this.now() });
    }
  }

  /** Fetch everything delivered after the last seen sequence number. */
  async poll(): Promise<number> {
    if (this.polling) return 0;
    this.polling = true;
    try {
      const url =
        `${this.baseUrl}/sms?to=${encodeURIComponent(this.phone)}` +
        `&after=${this.lastSeenSeq}`;
      const response = await this.fetchFn(url);
      if (!response.ok) return 0;
      const body = (await response.json()) as { messages: WireOutbound[] };
      let added = 0;
      for (const msg of body.messages) {
        if (msg.seq <= this.lastSeenSeq) continue; // duplicate guard
        this.append({ direction: "in", text: msg.text, ts: msg.ts, seq: msg.seq });
        this.lastSeenSeq = msg.seq;
        added++;
      }
      return added;
    } catch {
      return 0; // transient; the next tick retries
    } finally {
      this.polling = false;
    }
  }

  startPolling(): void {
    this.stopPolling();
    void this.poll();
    this.timer = setInterval(() => void this.poll(), this.pollIntervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private append(message: ThreadMessage): void {
    this.thread.push(message);
    this.thread.sort(compareMessages);
    this.onChange?.();
  }

  private storageKey(): string {
    return `smsquiz-handset:outgoing:${this.phone}`;
  }

  private persistOutgoing(): void {
    if (!this.storage) return;
    const outgoing = this.thread.filter((m) => m.direction === "out");
    this.storage.setItem(this.storageKey(), JSON.stringify(outgoing));
  }

  private restoreOutgoing(): void {
    if (!this.storage) return;
    const raw = this.storage.getItem(this.storageKey());
    if (!raw) return;
    try {
      for (const message of JSON.parse(raw) as ThreadMessage[]) {
        this.thread.push(message);
      }
      this.thread.sort(compareMessages);
    } catch {
      // corrupt storage entry; start with an empty thread
    }
  }
}
