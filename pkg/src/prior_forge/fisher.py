"""Fisher information of the judgement likelihood.

In the Dirichlet's standard parametrization the Fisher information is
known in closed form,

    H_P = α² (diag(ψ′(α P)) − ψ′(α) 𝟙𝟙ᵀ),

and a change of variables sends it to hyperparameter space through the
bin-probability jacobian, H_λ = (dP/dλ)ᵀ H_P (dP/dλ).  With covariates
the likelihood factorizes over covariate sets, so the information is
the sum of per-set quadratic forms.  Everything here is expressed in
unconstrained coordinates (chained through the transform jacobian) so
optimizers see a full-rank metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import polygamma

from .errors import NonInteriorP, NonPositiveAlpha, SingularFisher
from .judgements import JudgementSet, predictive_per_judgement
from .predictive import BinProbabilities
from .transforms import HyperParams

SYMMETRY_TOL = 1e-10
EIGEN_FLOOR = -1e-8          # PSD check before jitter
JITTER_MAX = 1e-2


def dirichlet_fisher(alpha: float, P) -> np.ndarray:
    """Fisher information of D(α, P) with respect to the bin probabilities."""
    if alpha <= 0 or not np.isfinite(alpha):
        raise NonPositiveAlpha(f"alpha must be positive and finite, got {alpha}")
    Pv = P.floored() if isinstance(P, BinProbabilities) else np.asarray(P, dtype=float)
    if np.any(Pv <= 0) or np.any(Pv >= 1):
        raise NonInteriorP("P must lie strictly inside the simplex")
    tri = polygamma(1, alpha * Pv)
    return alpha ** 2 * (np.diag(tri) - polygamma(1, alpha) * np.ones((Pv.size, Pv.size)))


@dataclass(frozen=True)
class FisherMatrix:
    """Hyperparameter Fisher matrix in unconstrained coordinates."""

    matrix: np.ndarray
    source: str                   # closed-form | stochastic

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))

    def check(self) -> None:
        H = self.matrix
        if not np.allclose(H, H.T, atol=SYMMETRY_TOL * max(1.0, np.abs(H).max())):
            raise SingularFisher("Fisher matrix is not symmetric")
        eig = np.linalg.eigvalsh(0.5 * (H + H.T))
        if eig.min() < EIGEN_FLOOR * max(1.0, abs(eig.max())):
            raise SingularFisher(f"Fisher matrix has eigenvalue {eig.min()}")

    def solve(self, rhs: np.ndarray, jitter: float = 1e-8) -> np.ndarray:
        """SPD solve H x = rhs with jitter escalation; no explicit inverse."""
        H = 0.5 * (self.matrix + self.matrix.T)
        scale = max(1.0, float(np.trace(H)) / max(1, H.shape[0]))
        delta = jitter
        while delta <= JITTER_MAX:
            try:
                L = np.linalg.cholesky(H + delta * scale * np.eye(H.shape[0]))
                y = np.linalg.solve(L, rhs)
                return np.linalg.solve(L.T, y)
            except np.linalg.LinAlgError:
                delta *= 10.0
        raise SingularFisher(
            f"Cholesky failed up to jitter {JITTER_MAX} (scale {scale})")


def hyper_fisher(alpha: float, lam: HyperParams, model,
                 judgements: JudgementSet, seed: int = 0, draws: int = 4096,
                 probabilities: list[BinProbabilities] | None = None) -> FisherMatrix:
    """H_u = Σ_j G_jᵀ H_{P_j} G_j with G_j = (dP_j/dλ)(dλ/du)."""
    probs = probabilities if probabilities is not None else \
        predictive_per_judgement(judgements, lam, model, want_jacobian=True,
                                 seed=seed, draws=draws)
    T = lam.constrain_jacobian()
    Mu = T.shape[1]
    H = np.zeros((Mu, Mu))
    for P in probs:
        G = P.jacobian @ T
        H += G.T @ dirichlet_fisher(alpha, P) @ G
    H = 0.5 * (H + H.T)
    return FisherMatrix(H, "stochastic" if model.stochastic else "closed-form")
