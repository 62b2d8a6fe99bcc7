"""Partitions of the sample space.

A partition is an exhaustive, mutually exclusive collection of bins over
the sample space on which probability judgements are elicited.  Bins are
axis-aligned rectangles with half-open coordinate intervals (a, b], so
adjacent bins share an edge without double counting; discrete outcomes
are represented as singleton atoms instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CoverageGap, DimensionMismatch, OverlappingBins, PartitionError

INF = math.inf


@dataclass(frozen=True)
class Bin:
    """Axis-aligned rectangle ⨉_s (lower_s, upper_s]; ±inf edges allowed."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise DimensionMismatch(f"lower has length {len(lo)}, upper {len(hi)}")
        if not lo:
            raise PartitionError("bin must have at least one coordinate")
        for a, b in zip(lo, hi):
            if math.isnan(a) or math.isnan(b):
                raise PartitionError("bin edges must not be NaN")
            if not a < b:
                raise PartitionError(f"bin requires lower < upper, got ({a}, {b}]")

    @property
    def ndim(self) -> int:
        return len(self.lower)

    def contains(self, point: Sequence[float]) -> bool:
        return all(a < x <= b for a, x, b in zip(self.lower, point, self.upper))

    def overlaps(self, other: "Bin") -> bool:
        # Half-open intervals (a1,b1], (a2,b2] intersect iff max(a)<min(b).
        return all(max(a1, a2) < min(b1, b2)
                   for a1, b1, a2, b2 in zip(self.lower, self.upper,
                                             other.lower, other.upper))

    def to_json(self) -> dict:
        return {"lower": [_edge_out(v) for v in self.lower],
                "upper": [_edge_out(v) for v in self.upper]}

    @classmethod
    def from_json(cls, doc: dict) -> "Bin":
        return cls(tuple(_edge_in(v) for v in doc["lower"]),
                   tuple(_edge_in(v) for v in doc["upper"]))


def interval_bin(lower: float, upper: float) -> Bin:
    """1-D convenience constructor for (lower, upper]."""
    return Bin((lower,), (upper,))


@dataclass(frozen=True)
class SampleSpace:
    """Rectangle sample space, or a finite set of atoms for discrete outcomes."""

    lower: tuple[float, ...] = (-INF,)
    upper: tuple[float, ...] = (INF,)
    atoms: tuple[float, ...] | None = None

    @classmethod
    def real_line(cls) -> "SampleSpace":
        return cls((-INF,), (INF,))

    @classmethod
    def positive_line(cls) -> "SampleSpace":
        return cls((0.0,), (INF,))

    @classmethod
    def discrete(cls, atoms: Iterable[float]) -> "SampleSpace":
        return cls(atoms=tuple(float(a) for a in atoms))

    @property
    def ndim(self) -> int:
        return 1 if self.atoms is not None else len(self.lower)


@dataclass(frozen=True)
class Partition:
    """Ordered bins (or atoms) forming one judgement frame.

    Exactly one of ``bins`` / ``atoms`` is populated.  Atom partitions
    carry one singleton event per listed outcome value.
    """

    bins: tuple[Bin, ...] = ()
    atoms: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(self.bins))
        object.__setattr__(self, "atoms", tuple(float(a) for a in self.atoms))
        if bool(self.bins) == bool(self.atoms):
            raise PartitionError("partition needs either bins or atoms, not both")
        if self.bins:
            ndim = self.bins[0].ndim
            for b in self.bins:
                if b.ndim != ndim:
                    raise DimensionMismatch("bins with mixed dimensionality")

    @property
    def discrete_support(self) -> bool:
        return bool(self.atoms)

    @property
    def size(self) -> int:
        return len(self.atoms) if self.discrete_support else len(self.bins)

    @property
    def ndim(self) -> int:
        return 1 if self.discrete_support else self.bins[0].ndim

    def to_json(self) -> dict:
        if self.discrete_support:
            return {"atoms": list(self.atoms)}
        return {"bins": [b.to_json() for b in self.bins]}

    @classmethod
    def from_json(cls, doc: dict) -> "Partition":
        if "atoms" in doc and doc["atoms"] is not None:
            return cls(atoms=tuple(doc["atoms"]))
        return cls(bins=tuple(Bin.from_json(b) for b in doc.get("bins", ())))


@dataclass(frozen=True)
class CovariateSet:
    """One covariate configuration the expert judges outcomes for."""

    x: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        xs = tuple(float(v) for v in self.x)
        object.__setattr__(self, "x", xs)
        for v in xs:
            if not math.isfinite(v):
                raise PartitionError(f"covariate entries must be finite, got {v}")

    def to_json(self) -> dict:
        return {"x": list(self.x), "label": self.label}

    @classmethod
    def from_json(cls, doc: dict) -> "CovariateSet":
        return cls(tuple(doc.get("x", ())), doc.get("label", ""))


# ---------------------------------------------------------------------------
# Validation


def validate_partition(partition: Partition, space: SampleSpace) -> Partition:
    """Check disjointness and coverage; return the canonically ordered partition.

    Rectangle partitions are checked on the lattice induced by all bin
    edges: every elementary cell of the sample-space rectangle must lie
    in exactly one bin.  Atom partitions must enumerate the space's atoms.
    """
    if partition.discrete_support:
        return _validate_atoms(partition, space)
    return _validate_rectangles(partition, space)


def _validate_atoms(partition: Partition, space: SampleSpace) -> Partition:
    atoms = partition.atoms
    seen: dict[float, int] = {}
    for i, a in enumerate(atoms):
        if a in seen:
            raise OverlappingBins(seen[a], i, f"atom {a} listed twice")
        seen[a] = i
    if space.atoms is not None:
        missing = sorted(set(space.atoms) - set(atoms))
        if missing:
            raise CoverageGap(missing, f"atoms {missing} not covered")
        extra = sorted(set(atoms) - set(space.atoms))
        if extra:
            raise PartitionError(f"atoms {extra} outside the sample space")
    return Partition(atoms=tuple(sorted(atoms)))


def _validate_rectangles(partition: Partition, space: SampleSpace) -> Partition:
    bins = partition.bins
    ndim = partition.ndim
    if space.atoms is not None:
        raise PartitionError("rectangle bins over a discrete sample space")
    if len(space.lower) != ndim:
        raise DimensionMismatch(
            f"partition is {ndim}-D but sample space is {len(space.lower)}-D")

    for i in range(len(bins)):
        for j in range(i + 1, len(bins)):
            if bins[i].overlaps(bins[j]):
                raise OverlappingBins(i, j)

    # Lattice refinement: breakpoints per coordinate from all edges.
    grids = []
    for s in range(ndim):
        pts = {space.lower[s], space.upper[s]}
        for b in bins:
            pts.add(max(b.lower[s], space.lower[s]))
            pts.add(min(b.upper[s], space.upper[s]))
        grids.append(sorted(pts))

    for cell in _cells(grids):
        rep = tuple(_representative(lo, hi) for lo, hi in cell)
        if not any(b.contains(rep) for b in bins):
            gap = Bin(tuple(lo for lo, _ in cell), tuple(hi for _, hi in cell))
            raise CoverageGap(gap)

    order = sorted(range(len(bins)), key=lambda k: bins[k].lower)
    return Partition(bins=tuple(bins[k] for k in order))


def _cells(grids):
    def rec(s, prefix):
        if s == len(grids):
            yield tuple(prefix)
            return
        g = grids[s]
        for lo, hi in zip(g[:-1], g[1:]):
            yield from rec(s + 1, prefix + [(lo, hi)])
    yield from rec(0, [])


def _representative(lo: float, hi: float) -> float:
    # A point strictly inside (lo, hi); infinite edges replaced by a
    # finite probe one unit in from the finite side.
    if lo == -INF and hi == INF:
        return 0.0
    if lo == -INF:
        return hi - 1.0
    if hi == INF:
        return lo + 1.0
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# JSON edge sentinels: "-inf"/"inf" strings mark unbounded edges.


def _edge_out(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


def _edge_in(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf"):
            return INF
        if s == "-inf":
            return -INF
        raise PartitionError(f"unrecognized edge sentinel {v!r}")
    return float(v)
