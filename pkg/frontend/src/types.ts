// Wire types for the prior-forge HTTP API (mirrors the service JSON).

export type Edge = number | "inf" | "-inf";

export interface BinDoc {
  lower: Edge[];
  upper: Edge[];
}

export interface PartitionDoc {
  bins?: BinDoc[];
  atoms?: number[];
}

export interface CovariateDoc {
  x: number[];
  label: string;
}

export interface JudgementDoc {
  p: number[];
  partition: PartitionDoc;
  covariate: CovariateDoc;
  floored?: boolean;
}

export interface JudgementSetDoc {
  expert: string;
  timestamp?: string;
  judgements: JudgementDoc[];
}

export interface AlphaDoc {
  alpha_hat: number;
  kl_total: number;
  capped: boolean;
}

export interface FitDoc {
  model: string;
  alpha: AlphaDoc;
  converged: boolean;
  iterations: number;
  loglik: number;
  fitted_probabilities: { covariate: string; values: number[] }[];
}

export type SessionStatus = "draft" | "fitted" | "stale";

export interface SessionDoc {
  id: string;
  model: string;
  status: SessionStatus;
  partitions: PartitionDoc[];
  covariates: CovariateDoc[];
  judgements: JudgementSetDoc | null;
  fit: FitDoc | null;
  alpha_band?: string;
  judgement_hash: string | null;
  config_hash: string | null;
}

export interface FitStatusDoc {
  session: string;
  state: "idle" | "running" | "done" | "failed";
  status: SessionStatus;
  error: string | null;
  alpha_hat?: number;
  alpha_band?: string;
}

export interface PredictiveDoc {
  covariate: string;
  bin_probabilities: number[];
  expert_p: number[] | null;
  grid?: number[];
  density?: number[];
  cdf?: number[];
  cdf_se?: number[];
  atoms?: number[];
  judgement_hash: string | null;
  config_hash: string | null;
}

// Judgement submissions: exactly one of p / chips / thresholds.
export interface JudgementSubmission {
  covariate: string | number;
  p?: number[];
  chips?: number[];
  thresholds?: number[];
}
