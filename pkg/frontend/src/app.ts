/** DOM wiring: model picker, clickable event menu, history panel, banners. */

import { HttpSessionApi } from "./api.js";
import { SessionController, eventLabel, type UiSessionState } from "./controller.js";

const api = new HttpSessionApi("");
const controller = new SessionController(api);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function render(state: UiSessionState): void {
  const modelSelect = document.getElementById("model-select") as HTMLSelectElement;
  if (modelSelect.options.length !== controller.models.length) {
    modelSelect.replaceChildren(
      ...controller.models.map((m) => new Option(m, m)),
    );
  }

  const banner = document.getElementById("banner")!;
  banner.className = `banner ${state.status}`;
  switch (state.status) {
    case "idle":
      banner.textContent = "Pick a model and start a session.";
      break;
    case "running":
      banner.textContent = `${state.model}: choose one of ${state.menu?.events.length ?? 0} enabled events`;
      break;
    case "terminated":
      banner.textContent = "Terminated ()";
      break;
    case "stuck":
      banner.textContent = "Deadlock: no event is enabled.";
      break;
    case "tau-budget":
      banner.textContent = "Internal-step budget exceeded (possible livelock).";
      break;
    case "error":
      banner.textContent = state.error ?? "error";
      break;
  }

  const menuBox = document.getElementById("menu")!;
  menuBox.replaceChildren();
  if (state.menu && state.menu.kind === "choices") {
    for (const ev of state.menu.events) {
      const btn = el("button", "event", `(${ev.index}) ${ev.channel} ${ev.payload_text}`);
      btn.addEventListener("click", () => void controller.clickEvent(ev.index));
      menuBox.appendChild(btn);
    }
  } else if (state.menu) {
    const note = el("div", "menu-closed", "menu closed");
    menuBox.appendChild(note);
  }

  const historyBox = document.getElementById("history")!;
  historyBox.replaceChildren();
  state.history.forEach((h, i) => {
    const li = el("li", "step");
    li.textContent = `${i + 1}. ${eventLabel(h)}`;
    historyBox.appendChild(li);
  });

  (document.getElementById("reset") as HTMLButtonElement).disabled = !state.sessionId;
}

function wire(): void {
  controller.onChange = render;
  document.getElementById("new-session")!.addEventListener("click", () => {
    const select = document.getElementById("model-select") as HTMLSelectElement;
    if (select.value) void controller.newSession(select.value);
  });
  document.getElementById("reset")!.addEventListener("click", () => {
    void controller.resetSession();
  });
  void controller.loadModels().then(() => render(controller.state));
}

document.addEventListener("DOMContentLoaded", wire);
