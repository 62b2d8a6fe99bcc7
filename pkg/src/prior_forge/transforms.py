"""Constrained/unconstrained hyperparameter handling.

All optimizers run in an unconstrained vector space; each hyperparameter
block declares how it maps there:

* ``identity``  — free reals (means, log-scale locations).
* ``log``       — positive scalars (variances, shapes, scales).
* ``simplex``   — K probabilities summing to 1, stored as the first K-1
  centered log-ratios; inverse is a softmax.
* ``corr_cholesky`` — the strict lower triangle of a correlation matrix,
  stored as the off-diagonal/diagonal ratios of its row-normalized
  Cholesky factor.  This is a bijection between R^{D(D-1)/2} and the
  positive-definite unit-diagonal matrices, so the unconstrained space
  has exactly the matrix's degrees of freedom.

The constrained vector keeps the redundant representation (all K weights,
all correlations) because that is what model formulas consume; the
unconstrained vector drops redundancy so Fisher matrices stay full rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, PriorForgeError


@dataclass(frozen=True)
class TransformBlock:
    kind: str                  # identity | log | simplex | corr_cholesky
    names: tuple[str, ...]     # constrained entry names

    def __post_init__(self):
        if self.kind not in ("identity", "log", "simplex", "corr_cholesky"):
            raise PriorForgeError(f"unknown transform kind {self.kind!r}")
        object.__setattr__(self, "names", tuple(self.names))
        if self.kind == "simplex" and len(self.names) < 2:
            raise PriorForgeError("simplex block needs at least 2 entries")
        if self.kind == "corr_cholesky":
            d = _corr_dim(len(self.names))
            if d * (d - 1) // 2 != len(self.names):
                raise PriorForgeError(
                    f"corr_cholesky block size {len(self.names)} is not D(D-1)/2")

    @property
    def constrained_size(self) -> int:
        return len(self.names)

    @property
    def unconstrained_size(self) -> int:
        if self.kind == "simplex":
            return len(self.names) - 1
        return len(self.names)


def _corr_dim(packed: int) -> int:
    # D from packed strict-lower-triangle length D(D-1)/2.
    d = int(round((1 + np.sqrt(1 + 8 * packed)) / 2))
    return d


@dataclass(frozen=True)
class TransformSpec:
    blocks: tuple[TransformBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for b in self.blocks for n in b.names)

    @property
    def constrained_size(self) -> int:
        return sum(b.constrained_size for b in self.blocks)

    @property
    def unconstrained_size(self) -> int:
        return sum(b.unconstrained_size for b in self.blocks)

    @property
    def unconstrained_names(self) -> tuple[str, ...]:
        out = []
        for b in self.blocks:
            if b.kind == "simplex":
                out.extend(f"clr({n})" for n in b.names[:-1])
            elif b.kind == "log":
                out.extend(f"log({n})" for n in b.names)
            elif b.kind == "corr_cholesky":
                out.extend(f"chol({n})" for n in b.names)
            else:
                out.extend(b.names)
        return tuple(out)

    def to_json(self) -> list[dict]:
        return [{"kind": b.kind, "names": list(b.names)} for b in self.blocks]


# ---------------------------------------------------------------------------
# Per-block maps.  Each returns (vector, jacobian d constrained/d unconstrained).


def _simplex_forward(w: np.ndarray) -> np.ndarray:
    logw = np.log(w)
    clr = logw - logw.mean()
    return clr[:-1]


def _simplex_inverse(u: np.ndarray) -> np.ndarray:
    c = np.append(u, -u.sum())
    e = np.exp(c - c.max())
    return e / e.sum()


def _simplex_jacobian(u: np.ndarray) -> np.ndarray:
    w = _simplex_inverse(u)
    K = w.size
    jac = np.empty((K, K - 1))
    for m in range(K - 1):
        em = np.zeros(K)
        em[m] = 1.0
        em[K - 1] = -1.0
        jac[:, m] = w * (em - w @ em)
    return jac


def _corr_inverse(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """z (packed strict lower) -> (R, L) with R = L Lᵀ, unit diagonal."""
    d = _corr_dim(z.size)
    L = np.zeros((d, d))
    L[0, 0] = 1.0
    k = 0
    for i in range(1, d):
        row = np.append(z[k:k + i], 1.0)
        k += i
        L[i, :i + 1] = row / np.linalg.norm(row)
    return L @ L.T, L


def _corr_forward(R: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(R)
    z = []
    for i in range(1, R.shape[0]):
        z.extend(L[i, :i] / L[i, i])
    return np.asarray(z)


def _corr_packed(R: np.ndarray) -> np.ndarray:
    idx = np.tril_indices(R.shape[0], k=-1)
    return R[idx]


def _corr_unpack(packed: np.ndarray) -> np.ndarray:
    d = _corr_dim(packed.size)
    R = np.eye(d)
    idx = np.tril_indices(d, k=-1)
    R[idx] = packed
    R.T[idx] = packed
    return R


def _corr_jacobian(z: np.ndarray) -> np.ndarray:
    """d packed(R) / d z, both in strict-lower row-major order."""
    d = _corr_dim(z.size)
    R, L = _corr_inverse(z)
    P = z.size
    # dL[i]/dz_{i,m}: row i depends only on its own z entries.
    dL = {}  # (i, m) -> vector dL[i,:]/dz_m  (length d)
    k = 0
    for i in range(1, d):
        zi = z[k:k + i]
        v = np.append(zi, 1.0)
        nrm = np.linalg.norm(v)
        for m in range(i):
            e = np.zeros(d)
            grad = np.zeros(d)
            grad[:i + 1] = -v * v[m] / nrm**3
            grad[m] += 1.0 / nrm
            dL[(i, k + m)] = grad
        k += i
    jac = np.zeros((P, P))
    rows = [(a, b) for a in range(1, d) for b in range(a)]
    for r, (a, b) in enumerate(rows):
        for m in range(P):
            g = np.zeros(d)
            if (a, m) in dL:
                g += dL[(a, m)] * L[b]
            if (b, m) in dL:
                g += L[a] * dL[(b, m)]
            jac[r, m] = g.sum()
    return jac


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperParams:
    """Hyperparameter vector with its transform layout.

    ``constrained`` is the model-facing representation (length M);
    :meth:`unconstrained` is the optimizer-facing one.  Round trips are
    exact to floating-point precision.
    """

    spec: TransformSpec
    constrained: np.ndarray

    def __post_init__(self):
        vec = np.array(self.constrained, dtype=float)
        object.__setattr__(self, "constrained", vec)
        if vec.size != self.spec.constrained_size:
            raise DimensionMismatch(
                f"expected {self.spec.constrained_size} values, got {vec.size}")
        vec.setflags(write=False)

    # -- block access -------------------------------------------------------

    def _split(self) -> list[np.ndarray]:
        out, k = [], 0
        for b in self.spec.blocks:
            out.append(self.constrained[k:k + b.constrained_size])
            k += b.constrained_size
        return out

    def __getitem__(self, name: str) -> float:
        return float(self.constrained[self.spec.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.spec.names, self.constrained)}

    # -- transforms ----------------------------------------------------------

    def unconstrained(self) -> np.ndarray:
        parts = []
        for block, vals in zip(self.spec.blocks, self._split()):
            if block.kind == "identity":
                parts.append(vals)
            elif block.kind == "log":
                if np.any(vals <= 0):
                    raise PriorForgeError(
                        f"log-block entries must be positive: {dict(zip(block.names, vals))}")
                parts.append(np.log(vals))
            elif block.kind == "simplex":
                parts.append(_simplex_forward(vals))
            else:
                parts.append(_corr_forward(_corr_unpack(vals)))
        return np.concatenate(parts)

    @classmethod
    def from_unconstrained(cls, spec: TransformSpec, u: Sequence[float]) -> "HyperParams":
        u = np.asarray(u, dtype=float)
        if u.size != spec.unconstrained_size:
            raise DimensionMismatch(
                f"expected {spec.unconstrained_size} unconstrained values, got {u.size}")
        parts, k = [], 0
        for block in spec.blocks:
            chunk = u[k:k + block.unconstrained_size]
            k += block.unconstrained_size
            if block.kind == "identity":
                parts.append(chunk)
            elif block.kind == "log":
                parts.append(np.exp(chunk))
            elif block.kind == "simplex":
                parts.append(_simplex_inverse(chunk))
            else:
                R, _ = _corr_inverse(chunk)
                parts.append(_corr_packed(R))
        return cls(spec, np.concatenate(parts))

    def constrain_jacobian(self) -> np.ndarray:
        """d constrained / d unconstrained, evaluated at this point (M × M_u)."""
        u = self.unconstrained()
        M, Mu = self.spec.constrained_size, self.spec.unconstrained_size
        jac = np.zeros((M, Mu))
        r = c = ku = 0
        for block in self.spec.blocks:
            m, mu = block.constrained_size, block.unconstrained_size
            chunk = u[ku:ku + mu]
            if block.kind == "identity":
                jac[r:r + m, c:c + mu] = np.eye(m)
            elif block.kind == "log":
                jac[r:r + m, c:c + mu] = np.diag(np.exp(chunk))
            elif block.kind == "simplex":
                jac[r:r + m, c:c + mu] = _simplex_jacobian(chunk)
            else:
                jac[r:r + m, c:c + mu] = _corr_jacobian(chunk)
            r += m
            c += mu
            ku += mu
        return jac

    def replace(self, **updates: float) -> "HyperParams":
        vec = self.constrained.copy()
        for name, val in updates.items():
            vec[self.spec.names.index(name)] = val
        return HyperParams(self.spec, vec)

    def to_json(self) -> dict:
        return {"names": list(self.spec.names),
                "constrained": [float(v) for v in self.constrained],
                "unconstrained": [float(v) for v in self.unconstrained()]}
