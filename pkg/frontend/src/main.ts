/** Console bootstrap: wires the controller to the static page. */

import { ApiClient } from "./api.js";
import { ConsoleController } from "./state.js";
import { render } from "./view.js";

function requireElement<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node as T;
}

export function bootstrap(client?: ApiClient): ConsoleController {
  const baseUrl =
    typeof localStorage !== "undefined"
      ? localStorage.getItem("sidsearch.baseUrl") ?? "http://127.0.0.1:8080"
      : "http://127.0.0.1:8080";

  const controller = new ConsoleController(client ?? new ApiClient(baseUrl));
  const container = requireElement<HTMLDivElement>("console");
  const input = requireElement<HTMLInputElement>("query-input");
  const send = requireElement<HTMLButtonElement>("send-button");
  const toggle = requireElement<HTMLButtonElement>("ttr-toggle");
  const restart = requireElement<HTMLButtonElement>("new-session");

  controller.onChange((state) => {
    render(container, state, {
      onSelectReference: (productId) => controller.selectReference(productId),
      onDismissBanner: () => controller.dismissBanner(),
    });
    send.disabled = state.pending || !state.sessionId;
    toggle.disabled = !controller.canCompare;
    toggle.textContent = state.ttrEnabled ? "compare: TTR off" : "compare: TTR on";
  });

  send.addEventListener("click", async () => {
    const text = input.value;
    input.value = "";
    await controller.submitTurn(text);
  });
  input.addEventListener("keydown", async (event) => {
    if (event.key === "Enter" && !send.disabled) {
      const text = input.value;
      input.value = "";
      await controller.submitTurn(text);
    }
  });
  toggle.addEventListener("click", () => void controller.toggleTtr());
  restart.addEventListener("click", () => void controller.start());

  void controller.start();
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("console")) {
  bootstrap();
}
