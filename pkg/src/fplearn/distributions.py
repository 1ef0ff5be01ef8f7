"""Initial distributions of prior vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

UNIFORM_BOX = "uniform_box"
POINT_MASS = "point_mass"
LATTICE = "lattice"
KINDS = (UNIFORM_BOX, POINT_MASS, LATTICE)


@dataclass(frozen=True)
class InitialDistribution:
    """Where agents (or particles) start in priors-space.

    ``uniform_box`` samples i.i.d. in ``[lo, hi]``; ``point_mass`` places every
    sample at ``x``; ``lattice`` puts cell-centred points on a regular grid of
    ``counts`` cells per axis inside ``[lo, hi]``.
    """

    kind: str
    lo: Optional[tuple] = None
    hi: Optional[tuple] = None
    x: Optional[tuple] = None
    counts: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial distribution kind {self.kind!r}")
        if self.kind == POINT_MASS:
            if self.x is None:
                raise ValueError("point_mass needs 'x'")
            x = np.asarray(self.x, dtype=float)
            if np.any(x < 0) or not x.sum() > 0:
                raise ValueError("point_mass 'x' must be nonnegative with positive sum")
            object.__setattr__(self, "x", tuple(float(v) for v in x))
            return
        if self.lo is None or self.hi is None:
            raise ValueError(f"{self.kind} needs 'lo' and 'hi'")
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("'lo' and 'hi' must be vectors of equal length")
        if np.any(lo >= hi):
            raise ValueError("'lo' must be strictly below 'hi' in every coordinate")
        if np.any(lo < 0):
            raise ValueError("box must lie in the nonnegative orthant")
        if not np.any(lo > 0):
            # the lower corner is the origin's only reachable point with zero total
            raise ValueError("box support touches the zero-total point (all lo = 0)")
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))
        if self.kind == LATTICE:
            if self.counts is None:
                raise ValueError("lattice needs 'counts'")
            counts = tuple(int(c) for c in self.counts)
            if len(counts) != len(lo) or min(counts) < 1:
                raise ValueError("'counts' must give a positive cell count per axis")
            object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return len(self.x) if self.kind == POINT_MASS else len(self.lo)

    @classmethod
    def uniform_box(cls, lo: Sequence[float], hi: Sequence[float]) -> "InitialDistribution":
        return cls(UNIFORM_BOX, lo=tuple(lo), hi=tuple(hi))

    @classmethod
    def point_mass(cls, x: Sequence[float]) -> "InitialDistribution":
        return cls(POINT_MASS, x=tuple(x))

    @classmethod
    def lattice(cls, lo, hi, counts) -> "InitialDistribution":
        return cls(LATTICE, lo=tuple(lo), hi=tuple(hi), counts=tuple(counts))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == POINT_MASS:
            return np.tile(np.asarray(self.x), (size, 1))
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if self.kind == LATTICE:
            pts = self.grid()
            if size != len(pts):
                raise ValueError(f"lattice has {len(pts)} points, {size} requested")
            return pts
        return lo + (hi - lo) * rng.random((size, len(lo)))

    def grid(self, counts: Optional[Sequence[int]] = None) -> np.ndarray:
        """Cell-centred lattice inside the box (first axis varies slowest)."""
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        counts = tuple(counts or self.counts)
        axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(c) + 0.5) / c for i, c in enumerate(counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def as_dict(self) -> dict:
        d = {"kind": self.kind}
        for key in ("lo", "hi", "x", "counts"):
            v = getattr(self, key)
            if v is not None:
                d[key] = list(v)
        return d
