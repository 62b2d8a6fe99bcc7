// Browser bootstrap: wires DOM events to the pure state/render modules.
// Everything interesting is testable elsewhere; this file stays thin.

import { ApiClient } from "./api.js";
import {
  editChips,
  moveThreshold,
  runFitAndOverlay,
  submitAndRefetch,
  viewFromSession,
} from "./state.js";
import type { ElicitationView } from "./state.js";
import { renderView } from "./render.js";

interface AppOptions {
  baseUrl?: string;
  sessionId?: string;
}

export function mount(root: HTMLElement, options: AppOptions = {}): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = options.baseUrl ?? params.get("api") ?? "http://127.0.0.1:8714";
  const sessionId = options.sessionId ?? params.get("session");
  const client = new ApiClient(baseUrl);
  let view: ElicitationView | null = null;

  const redraw = () => {
    if (!view) return;
    root.innerHTML =
      renderView(view) +
      `<footer>
         <button id="submit">submit judgements</button>
         <button id="fit">fit &amp; overlay</button>
       </footer>`;
  };

  const actions: Record<string, () => Promise<void>> = {
    submit: async () => {
      if (view) view = await submitAndRefetch(client, view);
      redraw();
    },
    fit: async () => {
      if (view) {
        view = { ...view, fitting: true };
        redraw();
        view = await runFitAndOverlay(client, view);
      }
      redraw();
    },
  };

  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    if (el.id && actions[el.id]) void actions[el.id]();
    const bar = el.closest<HTMLElement>(".bar.judged");
    if (bar && view) {
      const section = bar.closest<HTMLElement>(".overlay");
      const label = section?.dataset.covariate;
      const covariate = view.covariates.findIndex((c) => c.label === label);
      const bin = Number(bar.dataset.bin);
      // left click adds a chip, shift-click removes one
      const delta = (ev as MouseEvent).shiftKey ? -1 : 1;
      const result = editChips(view, covariate, bin, delta);
      if (!result.blocked) {
        view = result.view;
        redraw();
      }
    }
  });

  root.addEventListener("input", (ev) => {
    const el = ev.target as HTMLInputElement;
    if (el.matches("input.threshold") && view) {
      const covariate = Number(el.dataset.covariate);
      const index = Number(el.dataset.index);
      const result = moveThreshold(view, covariate, index, Number(el.value));
      if (result.blocked) {
        el.setCustomValidity(result.message ?? "blocked");
        el.reportValidity();
      } else {
        el.setCustomValidity("");
        view = result.view;
        redraw();
      }
    }
  });

  if (sessionId) {
    void client.getSession(sessionId).then((doc) => {
      view = viewFromSession(doc);
      redraw();
    });
  } else {
    root.innerHTML = `<p>Open with ?session=&lt;id&gt;&amp;api=&lt;service url&gt;</p>`;
  }
}

declare global {
  interface Window {
    priorForgeMount: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.priorForgeMount = mount;
}
