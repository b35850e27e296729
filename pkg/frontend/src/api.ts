/** Thin typed client for the session service JSON protocol. */

export interface MenuEvent {
  index: number;
  channel: string;
  payload_text: string;
  payload?: unknown;
}

export type MenuKind = "choices" | "terminated" | "stuck" | "tau_budget";

export interface MenuPayload {
  kind: MenuKind;
  events: MenuEvent[];
  history_len: number;
}

export interface HistoryEntry {
  channel: string;
  payload_text: string;
  text: string;
}

export interface CreateResponse {
  session_id: string;
  model: string;
  menu: MenuPayload;
}

export interface SessionApi {
  listModels(): Promise<string[]>;
  create(model: string): Promise<CreateResponse>;
  choose(sessionId: string, index: number): Promise<MenuPayload>;
  history(sessionId: string): Promise<HistoryEntry[]>;
  reset(sessionId: string): Promise<MenuPayload>;
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      /* keep statusText */
    }
    throw new Error(`${res.status}: ${detail}`);
  }
  return res.json() as Promise<T>;
}

export class HttpSessionApi implements SessionApi {
  constructor(private base: string = "") {}

  async listModels(): Promise<string[]> {
    const doc = await asJson<{ models: string[] }>(await fetch(`${this.base}/models`));
    return doc.models;
  }

  create(model: string): Promise<CreateResponse> {
    return fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model }),
    }).then((r) => asJson<CreateResponse>(r));
  }

  choose(sessionId: string, index: number): Promise<MenuPayload> {
    return fetch(`${this.base}/sessions/${sessionId}/choice`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ index }),
    }).then((r) => asJson<MenuPayload>(r));
  }

  history(sessionId: string): Promise<HistoryEntry[]> {
    return fetch(`${this.base}/sessions/${sessionId}/history`)
      .then((r) => asJson<{ history: HistoryEntry[] }>(r))
      .then((d) => d.history);
  }

  reset(sessionId: string): Promise<MenuPayload> {
    return fetch(`${this.base}/sessions/${sessionId}/reset`, { method: "POST" }).then((r) =>
      asJson<MenuPayload>(r),
    );
  }
}
