"""Agent-based fictitious play: random pairs, private prior updates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from . import rng as rngmod
from .distributions import InitialDistribution
from .game import Game, TieRule, best_response_rows
from .series import ObservableSeries, SeriesRecorder, sample_times, write_csv

PAIR_BLOCK = 1 << 16


@dataclass(frozen=True)
class LearningParams:
    """Learning increment ``h`` and memory rate ``mu`` (decay ``1 - mu*h`` per play)."""

    h: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"learning increment h must be positive, got {self.h}")
        if self.mu < 0:
            raise ValueError(f"memory rate mu must be nonnegative, got {self.mu}")
        if self.mu * self.h > 1:
            raise ValueError(f"memory factor mu*h = {self.mu * self.h} exceeds 1")

    @property
    def decay(self) -> float:
        return 1.0 - self.mu * self.h


class PairStream:
    """Deterministic sequence of matches drawn from the 'pairing' stream.

    Matches are generated in fixed blocks, so the sequence does not depend on
    how callers slice it. Each match carries two uniforms used only when ties
    are broken at random.
    """

    def __init__(self, N: int, seed: int):
        self.N = N
        self._rng = rngmod.stream(seed, "pairing")
        self._block = None
        self._pos = 0

    def _refill(self):
        g = self._rng
        i = g.integers(0, self.N, PAIR_BLOCK)
        j = g.integers(0, self.N - 1, PAIR_BLOCK)
        j += j >= i
        u = g.random((PAIR_BLOCK, 2))
        self._block = (i, j, u)
        self._pos = 0

    def take(self, k: int):
        parts = []
        while k > 0:
            if self._block is None or self._pos == PAIR_BLOCK:
                self._refill()
            m = min(k, PAIR_BLOCK - self._pos)
            sl = slice(self._pos, self._pos + m)
            parts.append(tuple(a[sl] for a in self._block))
            self._pos += m
            k -= m
        if not parts:
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros((0, 2))
        if len(parts) == 1:
            return parts[0]
        return tuple(np.concatenate(c) for c in zip(*parts))


@dataclass
class Population:
    """Priors of N agents, one row per agent."""

    x: np.ndarray
    seed: int
    play_count: int = 0
    pairs: Optional[PairStream] = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        if self.x.ndim != 2 or self.x.shape[0] < 2:
            raise ValueError("a population needs at least 2 agents")
        if np.any(self.x < 0) or np.any(self.x.sum(axis=1) <= 0):
            raise ValueError("prior vectors must be nonnegative with positive total")
        if self.pairs is None:
            self.pairs = PairStream(self.N, self.seed)

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def time(self, h: float) -> float:
        return self.play_count * 2.0 * h / self.N

    def to_csv(self, path) -> None:
        ids = np.arange(self.N, dtype=float)[:, None]
        write_csv(path, ["agent_id"] + [f"x_{i + 1}" for i in range(self.n)],
                  np.hstack([ids, self.x]))


def init_population(N: int, n: int, sampler: InitialDistribution, seed: int) -> Population:
    if N < 2:
        raise ValueError("N must be at least 2")
    if sampler.n != n:
        raise ValueError(f"sampler is {sampler.n}-dimensional, game has {n} actions")
    x = sampler.sample(N, rngmod.stream(seed, "init"))
    return Population(x, seed)


def update_prior(x, opponent_action: int, params: LearningParams) -> np.ndarray:
    out = np.asarray(x, dtype=float) * params.decay
    out[opponent_action] += params.h
    return out


@njit(cache=True)
def _best(X, a, A, tie_code, u):
    n = X.shape[1]
    s = 0.0
    for k in range(n):
        s += X[a, k]
    best = -np.inf
    count = 0
    choice = 0
    for m in range(n):
        v = 0.0
        for k in range(n):
            v += A[m, k] * (X[a, k] / s)
        if v > best:
            best = v
            choice = m
            count = 1
        elif v == best:
            count += 1
    if tie_code == 1 and count > 1:
        pick = int(u * count)
        for m in range(n):
            v = 0.0
            for k in range(n):
                v += A[m, k] * (X[a, k] / s)
            if v == best:
                if pick == 0:
                    return m
                pick -= 1
    return choice


@njit(cache=True)
def _play_rounds(X, A, I, J, U, decay, h, tie_code):
    n = X.shape[1]
    for r in range(I.shape[0]):
        i = I[r]
        j = J[r]
        ai = _best(X, i, A, tie_code, U[r, 0])
        aj = _best(X, j, A, tie_code, U[r, 1])
        for k in range(n):
            X[i, k] *= decay
            X[j, k] *= decay
        X[i, aj] += h
        X[j, ai] += h


def _advance(pop: Population, game: Game, params: LearningParams, tie: TieRule, k: int):
    if k <= 0:
        return
    I, J, U = pop.pairs.take(k)
    _play_rounds(pop.x, game.payoff, I, J, U, params.decay, params.h, tie.code)
    pop.play_count += k


def play_round(pop: Population, game: Game, params: LearningParams,
               tie: Optional[TieRule] = None) -> Population:
    """Play one match in place and return ``pop``."""
    if pop.N < 2:
        raise ValueError("need at least 2 agents")
    _advance(pop, game, params, tie or TieRule(), 1)
    return pop


def plays_for_time(t: float, N: int, h: float) -> int:
    """Number of matches covering model time ``t`` (one match lasts 2h/N)."""
    if h <= 0:
        raise ValueError("h must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return int(round(t * N / (2.0 * h)))


def observables(pop: Population, game: Game, tie: Optional[TieRule] = None):
    """Return ``(lambda, mean_br, mean_prior, (lo, hi))`` for the population."""
    x = pop.x
    P = x / x.sum(axis=1, keepdims=True)
    lam = P.mean(axis=0)
    idx = best_response_rows(game, P, tie)
    mean_br = np.bincount(idx, minlength=game.n) / pop.N
    return lam, mean_br, x.mean(axis=0), (x.min(axis=0), x.max(axis=0))


def run_abm(pop: Population, game: Game, params: LearningParams, horizon_t: float,
            sample_every: float, tie: Optional[TieRule] = None) -> ObservableSeries:
    """Advance ``pop`` in place over ``horizon_t`` units of model time.

    Observables are taken at the first match boundary at or after each
    multiple of ``sample_every``; recorded times are those boundaries.
    """
    if horizon_t <= 0 or sample_every <= 0:
        raise ValueError("horizon_t and sample_every must be positive")
    if game.n != pop.n:
        raise ValueError(f"population has {pop.n} actions, game has {game.n}")
    tie = tie or TieRule()
    obs_tie = TieRule.uniform(rngmod.stream(pop.seed, "tie").integers(2**63)) \
        if tie.variant == "uniform" else tie
    delta = 2.0 * params.h / pop.N
    start = pop.play_count
    total = plays_for_time(horizon_t, pop.N, params.h)
    targets = [min(math.ceil(t / delta - 1e-9), total) for t in sample_times(horizon_t, sample_every)]

    rec = SeriesRecorder()
    done = 0
    for r in sorted(set(targets)):
        _advance(pop, game, params, tie, r - done)
        done = r
        lam, br, mp, (lo, hi) = observables(pop, game, obs_tie)
        rec.add((start + r) * delta, lam, br, mp, lo, hi)
    _advance(pop, game, params, tie, total - done)
    return rec.build(game.n, engine="abm", rounds=total, delta=delta)
