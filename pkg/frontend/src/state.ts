// Client-side elicitation state: per-covariate bin editors, overlays,
// and the α̂ badge. The only arithmetic performed here is live
// renormalization of the editor preview; every fitted number comes from
// the service.

import type { ApiClient } from "./api.js";
import { ApiError, ConnectionError } from "./api.js";
import type {
  JudgementSubmission,
  PredictiveDoc,
  SessionDoc,
} from "./types.js";

export interface ChipEditor {
  kind: "chips";
  chips: number[];
}

export interface ThresholdEditor {
  kind: "thresholds";
  thresholds: number[];
  levels: number[];
  min: number; // handles stay inside (min, max) and may not cross
  max: number;
}

export type BinEditor = ChipEditor | ThresholdEditor;

export interface CovariateView {
  label: string;
  editor: BinEditor;
  /** last p accepted by the server, aligned with its partition */
  submittedP: number[] | null;
  overlay: PredictiveDoc | null;
}

export interface ElicitationView {
  sessionId: string | null;
  covariates: CovariateView[];
  alphaHat: number | null;
  alphaBand: string | null;
  stale: boolean;
  fitting: boolean;
  /** user-facing error banner; `retryable` marks connection problems */
  error: { message: string; retryable: boolean } | null;
}

export interface EditResult {
  view: ElicitationView;
  blocked: boolean;
  message?: string;
}

export const QUANTILE_LEVELS = [0.1, 0.25, 0.5, 0.75, 0.9];

export function emptyView(): ElicitationView {
  return {
    sessionId: null,
    covariates: [],
    alphaHat: null,
    alphaBand: null,
    stale: false,
    fitting: false,
    error: null,
  };
}

export function chipEditor(nBins: number): ChipEditor {
  return { kind: "chips", chips: new Array(nBins).fill(0) };
}

export function thresholdEditor(
  thresholds: number[],
  min = 0,
  max = Number.POSITIVE_INFINITY,
): ThresholdEditor {
  return { kind: "thresholds", thresholds: [...thresholds], levels: [...QUANTILE_LEVELS], min, max };
}

/**
 * Editor preview probabilities; always sums to 1 when any input exists.
 * Chips normalize by their total; thresholds map to the fixed-level bin
 * masses of the quantile protocol.
 */
export function previewProbabilities(editor: BinEditor): number[] | null {
  if (editor.kind === "chips") {
    const total = editor.chips.reduce((a, b) => a + b, 0);
    if (total <= 0) return null;
    return editor.chips.map((c) => c / total);
  }
  const levels = [0, ...editor.levels, 1];
  const out: number[] = [];
  for (let i = 1; i < levels.length; i += 1) out.push(levels[i] - levels[i - 1]);
  return out;
}

/** Add `delta` chips to one bin. Negative totals are blocked inline. */
export function editChips(
  view: ElicitationView,
  covariate: number,
  bin: number,
  delta: number,
): EditResult {
  const cov = view.covariates[covariate];
  if (!cov || cov.editor.kind !== "chips") {
    return { view, blocked: true, message: "no chip editor here" };
  }
  const next = cov.editor.chips[bin] + delta;
  if (next < 0) {
    return { view, blocked: true, message: "chip counts cannot go negative" };
  }
  const chips = [...cov.editor.chips];
  chips[bin] = next;
  return { view: replaceEditor(view, covariate, { kind: "chips", chips }), blocked: false };
}

/** Drag one threshold handle. Handles cannot cross their neighbours. */
export function moveThreshold(
  view: ElicitationView,
  covariate: number,
  index: number,
  value: number,
): EditResult {
  const cov = view.covariates[covariate];
  if (!cov || cov.editor.kind !== "thresholds") {
    return { view, blocked: true, message: "no threshold editor here" };
  }
  const t = cov.editor.thresholds;
  const lo = index > 0 ? t[index - 1] : cov.editor.min;
  const hi = index < t.length - 1 ? t[index + 1] : cov.editor.max;
  if (value <= lo || value >= hi) {
    return {
      view,
      blocked: true,
      message: `threshold ${index + 1} must stay between ${lo} and ${hi}`,
    };
  }
  const thresholds = [...t];
  thresholds[index] = value;
  return {
    view: replaceEditor(view, covariate, { ...cov.editor, thresholds }),
    blocked: false,
  };
}

function replaceEditor(
  view: ElicitationView,
  covariate: number,
  editor: BinEditor,
): ElicitationView {
  const covariates = view.covariates.map((c, i) =>
    i === covariate ? { ...c, editor } : c,
  );
  // Any local edit makes the last fit stale until refit.
  const stale = view.alphaHat !== null ? true : view.stale;
  return { ...view, covariates, error: null, stale };
}

/** Initialize the view from a server session document. */
export function viewFromSession(doc: SessionDoc): ElicitationView {
  const byLabel = new Map<string, number[]>();
  for (const j of doc.judgements?.judgements ?? []) {
    byLabel.set(j.covariate.label, j.p);
  }
  const covariates: CovariateView[] = doc.covariates.map((c, i) => {
    const part = doc.partitions[i];
    const nBins = part.bins ? part.bins.length : (part.atoms ?? []).length;
    return {
      label: c.label,
      editor: chipEditor(nBins),
      submittedP: byLabel.get(c.label) ?? null,
      overlay: null,
    };
  });
  return {
    sessionId: doc.id,
    covariates,
    alphaHat: doc.fit?.alpha.alpha_hat ?? null,
    alphaBand: doc.alpha_band ?? null,
    stale: doc.status === "stale",
    fitting: false,
    error: null,
  };
}

function submissionFor(cov: CovariateView): JudgementSubmission | null {
  if (cov.editor.kind === "chips") {
    if (cov.editor.chips.reduce((a, b) => a + b, 0) <= 0) return null;
    return { covariate: cov.label, chips: cov.editor.chips };
  }
  return { covariate: cov.label, thresholds: cov.editor.thresholds };
}

/** Submit every non-empty editor, then refetch and mirror server state. */
export async function submitAndRefetch(
  client: ApiClient,
  view: ElicitationView,
): Promise<ElicitationView> {
  if (!view.sessionId) return withError(view, "no session open", false);
  const payload = view.covariates
    .map(submissionFor)
    .filter((s): s is JudgementSubmission => s !== null);
  if (payload.length === 0) {
    return withError(view, "enter at least one judgement first", false);
  }
  try {
    await client.submitJudgements(view.sessionId, payload);
    const doc = await client.getSession(view.sessionId);
    const fresh = viewFromSession(doc);
    return {
      ...fresh,
      covariates: fresh.covariates.map((c, i) => ({
        ...c,
        editor: view.covariates[i]?.editor ?? c.editor,
      })),
    };
  } catch (err) {
    return absorbError(view, err);
  }
}

/** Trigger a fit, poll to completion, then pull overlays per covariate. */
export async function runFitAndOverlay(
  client: ApiClient,
  view: ElicitationView,
  options?: {
    config?: Record<string, unknown>;
    pollMs?: number;
    sleep?: (ms: number) => Promise<void>;
    maxPolls?: number;
  },
): Promise<ElicitationView> {
  if (!view.sessionId) return withError(view, "no session open", false);
  const sleep =
    options?.sleep ?? ((ms: number) => new Promise((r) => setTimeout(r, ms)));
  const maxPolls = options?.maxPolls ?? 600;
  try {
    await client.startFit(view.sessionId, options?.config);
    let state = "running";
    for (let i = 0; i < maxPolls && state === "running"; i += 1) {
      const status = await client.fitStatus(view.sessionId);
      state = status.state;
      if (state === "failed") {
        return withError(view, status.error ?? "fit failed", false);
      }
      if (state === "running") await sleep(options?.pollMs ?? 250);
    }
    if (state !== "done") return withError(view, "fit timed out", true);

    const doc = await client.getSession(view.sessionId);
    const overlays = new Map<string, PredictiveDoc>();
    for (const cov of doc.covariates) {
      overlays.set(
        cov.label,
        await client.predictive(doc.id, { covariate: cov.label }),
      );
    }
    const fresh = viewFromSession(doc);
    return {
      ...fresh,
      stale: false,
      covariates: fresh.covariates.map((c, i) => ({
        ...c,
        editor: view.covariates[i]?.editor ?? c.editor,
        overlay: overlays.get(c.label) ?? null,
      })),
    };
  } catch (err) {
    return absorbError(view, err);
  }
}

function withError(
  view: ElicitationView,
  message: string,
  retryable: boolean,
): ElicitationView {
  return { ...view, fitting: false, error: { message, retryable } };
}

function absorbError(view: ElicitationView, err: unknown): ElicitationView {
  if (err instanceof ConnectionError) {
    return withError(view, "server unreachable — check the service and retry", true);
  }
  if (err instanceof ApiError) {
    return withError(view, err.message, false);
  }
  return withError(view, String(err), false);
}
