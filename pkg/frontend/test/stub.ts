// Recorded stub of the elicitation service. Response shapes were
// captured from a live server session (gaussian-mixture, six bins) and
// trimmed to the fields the client consumes; the stub replays them and
// records what the client sent.

import type { FetchLike } from "../src/api.js";
import type {
  JudgementSubmission,
  PartitionDoc,
  SessionDoc,
} from "../src/types.js";

export const SESSION_ID = "4fa3cf9376db4602bd250e89f180f429";

const PARTITION: PartitionDoc = {
  bins: [
    { lower: ["-inf"], upper: [-2.0] },
    { lower: [-2.0], upper: [-1.0] },
    { lower: [-1.0], upper: [0.0] },
    { lower: [0.0], upper: [1.0] },
    { lower: [1.0], upper: [2.0] },
    { lower: [2.0], upper: ["inf"] },
  ],
};

// 11-point predictive slice recorded from GET /sessions/{id}/predictive.
const PREDICTIVE_GRID = [-8, -6.4, -4.8, -3.2, -1.6, 0, 1.6, 3.2, 4.8, 6.4, 8];
const PREDICTIVE_DENSITY = [
  0.000103, 0.001868, 0.015999, 0.0648, 0.124163, 0.112521, 0.124163, 0.0648,
  0.015999, 0.001868, 0.000103,
];

export interface StubState {
  session: SessionDoc;
  submissions: JudgementSubmission[][];
  fitRequests: number;
  statusPollsUntilDone: number;
  failFitWith?: string;
  down: boolean;
}

export function freshStub(): StubState {
  return {
    session: {
      id: SESSION_ID,
      model: "gaussian-mixture",
      status: "draft",
      partitions: [PARTITION],
      covariates: [{ x: [], label: "all" }],
      judgements: null,
      fit: null,
      judgement_hash: null,
      config_hash: null,
    },
    submissions: [],
    fitRequests: 0,
    statusPollsUntilDone: 2,
    down: false,
  };
}

function normalize(sub: JudgementSubmission): number[] {
  if (sub.p) return sub.p;
  if (sub.chips) {
    const total = sub.chips.reduce((a, b) => a + b, 0);
    return sub.chips.map((c) => c / total);
  }
  throw new Error("stub only replays p/chips submissions");
}

function applyJudgements(state: StubState, subs: JudgementSubmission[]): void {
  state.submissions.push(subs);
  state.session = {
    ...state.session,
    status: state.session.fit ? "stale" : "draft",
    judgement_hash: `hash-${state.submissions.length}`,
    judgements: {
      expert: SESSION_ID,
      judgements: subs.map((s) => ({
        p: normalize(s),
        partition: PARTITION,
        covariate: { x: [], label: String(s.covariate) },
      })),
    },
  };
}

function applyFit(state: StubState): void {
  state.session = {
    ...state.session,
    status: "fitted",
    config_hash: "cfg-1",
    alpha_band: "moderate",
    fit: {
      model: "gaussian-mixture",
      alpha: { alpha_hat: 27.4, kl_total: 0.165, capped: false },
      converged: true,
      iterations: 42,
      loglik: 12.75,
      fitted_probabilities: [
        {
          covariate: "all",
          values: [0.052, 0.148, 0.297, 0.301, 0.149, 0.053],
        },
      ],
    },
  };
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function stubFetch(state: StubState): FetchLike {
  let polls = 0;
  return async (url: string, init?: RequestInit) => {
    if (state.down) throw new TypeError("fetch failed: connection refused");
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (path === "/models") {
      return json({ models: [{ model: "gaussian-mixture", names: [] }] });
    }
    if (path === `/sessions/${SESSION_ID}` && method === "GET") {
      return json(state.session);
    }
    if (path === `/sessions/${SESSION_ID}/judgements` && method === "POST") {
      const body = JSON.parse(String(init?.body));
      applyJudgements(state, body.judgements);
      return json(state.session);
    }
    if (path === `/sessions/${SESSION_ID}/fit` && method === "POST") {
      state.fitRequests += 1;
      polls = 0;
      return json({ session: SESSION_ID, job: { state: "running" } }, 202);
    }
    if (path === `/sessions/${SESSION_ID}/fit/status`) {
      if (state.failFitWith) {
        return json({
          session: SESSION_ID,
          state: "failed",
          status: state.session.status,
          error: state.failFitWith,
        });
      }
      polls += 1;
      if (polls >= state.statusPollsUntilDone) {
        applyFit(state);
        return json({
          session: SESSION_ID,
          state: "done",
          status: "fitted",
          error: null,
          alpha_hat: 27.4,
          alpha_band: "moderate",
        });
      }
      return json({
        session: SESSION_ID,
        state: "running",
        status: state.session.status,
        error: null,
      });
    }
    if (path.startsWith(`/sessions/${SESSION_ID}/predictive`)) {
      return json({
        covariate: "all",
        bin_probabilities:
          state.session.fit?.fitted_probabilities[0].values ?? [],
        expert_p: state.session.judgements?.judgements[0]?.p ?? null,
        grid: PREDICTIVE_GRID,
        density: PREDICTIVE_DENSITY,
        cdf: PREDICTIVE_DENSITY.map((_, i) => (i + 1) / PREDICTIVE_DENSITY.length),
        judgement_hash: state.session.judgement_hash,
        config_hash: state.session.config_hash,
      });
    }
    if (path.startsWith("/sessions/") && method === "GET") {
      return json({ error: "SessionNotFound", message: `no session` }, 404);
    }
    return json({ error: "HttpError", message: `unmatched ${method} ${path}` }, 500);
  };
}
