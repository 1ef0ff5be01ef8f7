"""Symmetric games, beliefs and best responses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SIMPLEX_TOL = 1e-12
CONCAVITY_THRESHOLD = -1e-10

LOWEST = "lowest"
UNIFORM = "uniform"


@dataclass(frozen=True, eq=False)
class Game:
    """Symmetric n-action game; ``payoff[i, j]`` is the row payoff of i against j."""

    payoff: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        A = np.array(self.payoff, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"payoff must be a square matrix, got shape {A.shape}")
        if A.shape[0] < 2:
            raise ValueError("a game needs at least 2 actions")
        if not np.all(np.isfinite(A)):
            raise ValueError("payoff entries must be finite")
        A.setflags(write=False)
        object.__setattr__(self, "payoff", A)
        labels = tuple(self.labels) or tuple(f"s{i + 1}" for i in range(A.shape[0]))
        if len(labels) != A.shape[0]:
            raise ValueError(f"expected {A.shape[0]} labels, got {len(labels)}")
        object.__setattr__(self, "labels", labels)

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.payoff, other.payoff)

    def __hash__(self):
        return hash((self.labels, self.payoff.tobytes()))

    @property
    def n(self) -> int:
        return self.payoff.shape[0]

    @classmethod
    def from_2x2(cls, a: float, b: float, c: float, d: float,
                 labels: Sequence[str] = ("L", "R")) -> "Game":
        """Game with outcomes (L,L)=a, (R,L)=c, (L,R)=d, (R,R)=b for the row player."""
        return cls(np.array([[a, d], [c, b]], dtype=float), tuple(labels))


def miscoordination_game() -> Game:
    """The persistent miscoordination game: zero payoff on matching actions."""
    return Game(np.array([[0.0, 1.0], [1.0, 0.0]]), ("L", "R"))


def belief(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate ``p`` as a point of the simplex and renormalize it."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("belief must be a vector")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > max(tol, 1e-9):
        raise ValueError(f"not a simplex vector: {p}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def belief_from_priors(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    s = x.sum()
    if not s > 0:
        raise ValueError("prior vector must have positive total count")
    return x / s


@dataclass
class TieRule:
    """How an agent picks among equally good actions.

    ``lowest`` takes the smallest index; ``uniform`` draws from the argmax set
    with its own generator.
    """

    variant: str = LOWEST
    seed: Optional[int] = None
    rng: Optional[np.random.Generator] = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in (LOWEST, UNIFORM):
            raise ValueError(f"unknown tie rule {self.variant!r}")
        if self.variant == UNIFORM and self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @classmethod
    def lowest(cls) -> "TieRule":
        return cls(LOWEST)

    @classmethod
    def uniform(cls, seed: Optional[int] = None) -> "TieRule":
        return cls(UNIFORM, seed)

    @property
    def code(self) -> int:
        return 0 if self.variant == LOWEST else 1

    def pick(self, candidates: np.ndarray) -> int:
        if len(candidates) == 1 or self.variant == LOWEST:
            return int(candidates[0])
        return int(candidates[int(self.rng.random() * len(candidates))])


def expected_payoffs(game: Game, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (game.n,):
        raise ValueError(f"belief of length {p.shape} does not match a {game.n}-action game")
    return game.payoff @ p


def best_response(game: Game, p, tie: Optional[TieRule] = None) -> int:
    """Zero-based index of a best response to belief ``p``."""
    v = expected_payoffs(game, p)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite expected payoffs")
    candidates = np.flatnonzero(v == v.max())
    return (tie or TieRule()).pick(candidates)


def best_response_vertex(game: Game, p, tie: Optional[TieRule] = None) -> np.ndarray:
    e = np.zeros(game.n)
    e[best_response(game, p, tie)] = 1.0
    return e


def best_response_rows(game: Game, P: np.ndarray, tie: Optional[TieRule] = None) -> np.ndarray:
    """Best-response indices for every row of a belief matrix ``P``."""
    V = P @ game.payoff.T
    # column sweep: strict '>' keeps the lowest index among equal payoffs
    best = V[:, 0].copy()
    idx = np.zeros(len(V), dtype=np.intp)
    for m in range(1, game.n):
        better = V[:, m] > best
        idx[better] = m
        np.maximum(best, V[:, m], out=best)
    if tie is not None and tie.variant == UNIFORM:
        ties = np.flatnonzero((V == best[:, None]).sum(axis=1) > 1)
        for r in ties:
            idx[r] = tie.pick(np.flatnonzero(V[r] == best[r]))
    return idx


def mixed_ne_2x2(game: Game) -> np.ndarray:
    """Interior mixed equilibrium of a 2x2 anti-coordination game (a<c, b<d)."""
    if game.n != 2:
        raise ValueError("mixed_ne_2x2 needs a 2-action game")
    (a, d), (c, b) = game.payoff
    if not (a < c and b < d):
        raise ValueError(f"no interior mixed equilibrium guaranteed: need a<c and b<d, "
                         f"got a={a}, c={c}, b={b}, d={d}")
    p1 = (d - b) / ((d - b) + (c - a))
    return np.array([p1, 1.0 - p1])


def tangent_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of {v : sum(v) = 0}."""
    # QR of the centering matrix: first n-1 columns span the sum-zero plane
    C = np.eye(n) - np.full((n, n), 1.0 / n)
    q, _ = np.linalg.qr(C)
    return q[:, : n - 1]


def is_strictly_concave_payoff(game: Game) -> bool:
    """True iff x.Ax is strictly concave on the simplex."""
    A = game.payoff
    Q = tangent_basis(game.n)
    S = Q.T @ (A + A.T) @ Q
    return bool(np.linalg.eigvalsh(S).max() < CONCAVITY_THRESHOLD)
