// Pure renderers: view state in, HTML strings out. Keeping these free
// of DOM access makes the whole display layer unit-testable.

import { previewProbabilities } from "./state.js";
import type { CovariateView, ElicitationView } from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function pct(v: number): string {
  return `${(100 * v).toFixed(1)}%`;
}

/** Probability bars; heights are percentages of the tallest bin. */
export function renderBars(p: number[], cls = "judged"): string {
  const peak = Math.max(...p, 1e-12);
  const bars = p
    .map(
      (v, i) =>
        `<div class="bar ${cls}" data-bin="${i}" data-p="${v.toFixed(6)}"` +
        ` style="height:${pct(v / peak)}" title="${v.toFixed(3)}"></div>`,
    )
    .join("");
  return `<div class="bars">${bars}</div>`;
}

/** Fitted predictive curve as an SVG polyline over the expert's bars. */
export function renderOverlay(cov: CovariateView): string {
  const preview = previewProbabilities(cov.editor);
  const p = cov.submittedP ?? preview;
  const pieces: string[] = [`<div class="overlay" data-covariate="${esc(cov.label)}">`];
  if (p) pieces.push(renderBars(p, "judged"));
  const overlay = cov.overlay;
  if (overlay?.grid && overlay.density) {
    const xs = overlay.grid;
    const ys = overlay.density;
    const xMin = xs[0];
    const xMax = xs[xs.length - 1];
    const yMax = Math.max(...ys, 1e-12);
    const points = xs
      .map((x, i) => {
        const px = (100 * (x - xMin)) / (xMax - xMin);
        const py = 100 - (100 * ys[i]) / yMax;
        return `${px.toFixed(2)},${py.toFixed(2)}`;
      })
      .join(" ");
    pieces.push(
      `<svg class="curve" viewBox="0 0 100 100" preserveAspectRatio="none">` +
        `<polyline fill="none" points="${points}"/></svg>`,
    );
  } else if (overlay?.atoms) {
    pieces.push(renderBars(overlay.bin_probabilities, "fitted"));
  }
  if (overlay?.bin_probabilities && !overlay.atoms) {
    pieces.push(renderBars(overlay.bin_probabilities, "fitted"));
  }
  pieces.push("</div>");
  return pieces.join("");
}

/** α̂ quality badge; greys out while edits make the fit stale. */
export function renderAlphaBadge(view: ElicitationView): string {
  if (view.alphaHat === null) {
    return `<span class="badge badge-empty">no fit yet</span>`;
  }
  const cls = view.stale ? "badge-stale" : `badge-${view.alphaBand ?? "moderate"}`;
  const label = view.stale ? "stale — refit" : (view.alphaBand ?? "");
  return (
    `<span class="badge ${cls}" data-alpha="${view.alphaHat.toFixed(3)}">` +
    `&alpha;&#770; = ${view.alphaHat.toFixed(1)} (${esc(label)})</span>`
  );
}

export function renderErrorBanner(view: ElicitationView): string {
  if (!view.error) return "";
  const retry = view.error.retryable
    ? `<button class="retry">retry</button>`
    : "";
  return `<div class="banner error">${esc(view.error.message)}${retry}</div>`;
}

export function renderView(view: ElicitationView): string {
  const covs = view.covariates
    .map(
      (c) =>
        `<section class="covariate"><h3>${esc(c.label)}</h3>` +
        `${renderOverlay(c)}</section>`,
    )
    .join("");
  return (
    `<div class="elicitation">` +
    renderErrorBanner(view) +
    `<header>${renderAlphaBadge(view)}</header>` +
    covs +
    `</div>`
  );
}
