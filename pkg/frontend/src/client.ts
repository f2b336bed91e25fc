/**
 * Service client: JSON POST/GET plus the SSE event stream.
 *
 * The stream reader is a hand-rolled fetch-based parser (works in browsers
 * and node 20 alike) that tracks the last seen sequence number and
 * reconnects with ?after=<seq>, so a resumed timeline has no gaps and no
 * duplicates.
 */

import type { ActionRecord, EventRecord, StateSnapshot } from "./protocol.js";

export interface ErrorReply {
  kind: "error";
  v: number;
  code: string;
  message: string;
  diagnostics?: string[];
}

export class ServiceError extends Error {
  constructor(
    public code: string,
    message: string,
    public diagnostics: string[] = [],
  ) {
    super(message);
  }
}

async function readJson(response: Response): Promise<any> {
  const body = await response.json();
  if (body.kind === "error") {
    throw new ServiceError(body.code, body.message, body.diagnostics ?? []);
  }
  return body;
}

export class ServiceClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async fixtureScore(): Promise<string> {
    const reply = await readJson(await fetch(`${this.baseUrl}/fixture`));
    return reply.score;
  }

  async listSessions(): Promise<{ session: string; title: string; status: string; seq: number }[]> {
    const reply = await readJson(await fetch(`${this.baseUrl}/sessions`));
    return reply.sessions;
  }

  async createSession(
    score: string,
    seed?: number,
  ): Promise<{ session: string; seed: number; state: StateSnapshot }> {
    const body: any = { kind: "create", score };
    if (seed !== undefined) body.seed = seed;
    const reply = await readJson(
      await fetch(`${this.baseUrl}/sessions`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
    return reply;
  }

  async state(sessionId: string): Promise<StateSnapshot> {
    const reply = await readJson(
      await fetch(`${this.baseUrl}/sessions/${sessionId}/state`),
    );
    return reply.state;
  }

  async submit(sessionId: string, action: ActionRecord): Promise<EventRecord[]> {
    const reply = await readJson(
      await fetch(`${this.baseUrl}/sessions/${sessionId}/actions`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ kind: "action", action }),
      }),
    );
    return reply.events;
  }

  /**
   * Subscribe to the event stream from `after`. Reconnects with backoff and
   * resume; returns a stop function. `onStatus` reports the connection state.
   */
  subscribe(
    sessionId: string,
    after: number,
    onEvent: (event: EventRecord) => void,
    onStatus: (status: "connected" | "reconnecting") => void = () => {},
  ): () => void {
    let stopped = false;
    let lastSeq = after;
    let backoffMs = 500;
    const controllerRef: { current: AbortController | null } = { current: null };

    const loop = async () => {
      while (!stopped) {
        const controller = new AbortController();
        controllerRef.current = controller;
        try {
          const response = await fetch(
            `${this.baseUrl}/sessions/${sessionId}/events?after=${lastSeq}`,
            { signal: controller.signal, headers: { Accept: "text/event-stream" } },
          );
          if (!response.ok || !response.body) throw new Error(`stream ${response.status}`);
          onStatus("connected");
          backoffMs = 500;
          for await (const event of parseSse(response.body)) {
            if (stopped) return;
            if (event.seq > lastSeq) {
              lastSeq = event.seq;
              onEvent(event);
            }
          }
        } catch {
          // fall through to reconnect
        }
        if (stopped) return;
        onStatus("reconnecting");
        await new Promise((resolve) => setTimeout(resolve, backoffMs));
        backoffMs = Math.min(backoffMs * 2, 10_000);
      }
    };
    void loop();
    return () => {
      stopped = true;
      controllerRef.current?.abort();
    };
  }
}

/** Incremental SSE parser: yields the JSON payload of every data: frame. */
export async function* parseSse(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<EventRecord> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    while (true) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).replace(/\r$/, "");
        buffer = buffer.slice(newline + 1);
        if (line.startsWith("data: ")) {
          yield JSON.parse(line.slice(6)) as EventRecord;
        }
        // id: lines are redundant (records carry seq); comments are ignored
      }
    }
  } finally {
    reader.releaseLock();
  }
}
