/**
 * Session controller: the UI's whole state lives here, and every field of
 * it comes verbatim from server payloads.  The controller never invents,
 * filters or reorders menu entries; the menu is rendered exactly in the
 * order the server sent it, and the history is the list of events the
 * user actually clicked.
 */

import type { MenuEvent, MenuKind, MenuPayload, SessionApi } from "./api.js";

export type Status = "idle" | "running" | "terminated" | "stuck" | "tau-budget" | "error";

export interface ClickedEvent {
  channel: string;
  payload_text: string;
}

export interface UiSessionState {
  sessionId: string | null;
  model: string | null;
  menu: MenuPayload | null;
  history: ClickedEvent[];
  status: Status;
  error: string | null;
}

function statusOf(kind: MenuKind): Status {
  switch (kind) {
    case "choices":
      return "running";
    case "terminated":
      return "terminated";
    case "stuck":
      return "stuck";
    case "tau_budget":
      return "tau-budget";
  }
}

export class SessionController {
  state: UiSessionState = {
    sessionId: null,
    model: null,
    menu: null,
    history: [],
    status: "idle",
    error: null,
  };
  models: string[] = [];
  onChange: (state: UiSessionState) => void = () => {};

  constructor(private api: SessionApi) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private fail(err: unknown): void {
    this.state = { ...this.state, status: "error", error: String(err) };
    this.emit();
  }

  async loadModels(): Promise<string[]> {
    this.models = await this.api.listModels();
    this.emit();
    return this.models;
  }

  async newSession(model: string): Promise<void> {
    try {
      const doc = await this.api.create(model);
      this.state = {
        sessionId: doc.session_id,
        model: doc.model,
        menu: doc.menu,
        history: [],
        status: statusOf(doc.menu.kind),
        error: null,
      };
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Click the menu entry with the given 1-based server index. */
  async clickEvent(index: number): Promise<void> {
    const { sessionId, menu } = this.state;
    if (!sessionId || !menu || menu.kind !== "choices") return;
    const clicked = menu.events.find((e: MenuEvent) => e.index === index);
    if (!clicked) return; // not an entry the server offered
    try {
      const next = await this.api.choose(sessionId, index);
      this.state = {
        ...this.state,
        menu: next,
        history: [
          ...this.state.history,
          { channel: clicked.channel, payload_text: clicked.payload_text },
        ],
        status: statusOf(next.kind),
        error: null,
      };
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  async resetSession(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId) return;
    try {
      const menu = await this.api.reset(sessionId);
      this.state = {
        ...this.state,
        menu,
        history: [],
        status: statusOf(menu.kind),
        error: null,
      };
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Server-side history, for cross-checking the local click log. */
  serverHistory(): Promise<{ channel: string; payload_text: string; text: string }[]> {
    if (!this.state.sessionId) return Promise.resolve([]);
    return this.api.history(this.state.sessionId);
  }
}

export function eventLabel(e: ClickedEvent): string {
  return `${e.channel} ${e.payload_text}`;
}
