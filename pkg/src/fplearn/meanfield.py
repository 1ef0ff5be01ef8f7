"""Particle approximation of the mean-field density of priors.

The drift ``u(x) = BR_bar - mu*x`` is affine in x, so between updates of the
mean best response every particle follows a closed-form characteristic. The
second-order correction is realized as an Euler-Maruyama step of the SDE whose
Fokker-Planck equation has diffusion ``h * D(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from . import rng as rngmod
from .distributions import LATTICE, POINT_MASS, InitialDistribution
from .game import Game, TieRule, best_response_rows
from .series import ObservableSeries, SeriesRecorder, sample_times, write_csv

WEIGHT_TOL = 1e-12
PSD_TOL = 1e-10
EXACT_DIAMETER_MAX = 2000


@dataclass
class Ensemble:
    particles: np.ndarray
    weights: np.ndarray
    time: float = 0.0
    clip_events: int = 0

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.particles.ndim != 2 or len(self.particles) != len(self.weights):
            raise ValueError("particles must be (M, n) with one weight per particle")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(self.particles < 0):
            raise ValueError("particles must lie in the nonnegative orthant")

    @property
    def M(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return self.particles.shape[1]

    def beliefs(self) -> np.ndarray:
        s = self.particles @ np.ones(self.n)
        if not s.min() > 0:
            raise ValueError("particle with zero prior total")
        return self.particles / s[:, None]

    def moved(self, particles: np.ndarray, dt: float, clips: int = 0) -> "Ensemble":
        """Same weights at new positions, skipping re-validation."""
        new = object.__new__(Ensemble)
        new.particles, new.weights = particles, self.weights
        new.time, new.clip_events = self.time + dt, self.clip_events + clips
        return new

    def to_csv(self, path) -> None:
        ids = np.arange(self.M, dtype=float)[:, None]
        write_csv(path, ["particle_id", "weight"] + [f"x_{i + 1}" for i in range(self.n)],
                  np.hstack([ids, self.weights[:, None], self.particles]))


def init_ensemble(sampler: InitialDistribution, M: int, seed: int = 0,
                  mode: str = "sample") -> Ensemble:
    """Equal-weight ensemble drawn from ``sampler``.

    ``mode="lattice"`` on a box places a cell-centred grid with ``M**(1/n)``
    cells per axis instead of random draws.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if sampler.kind == LATTICE:
        pts = sampler.sample(M, None)
    elif mode == "lattice":
        if sampler.kind == POINT_MASS:
            raise ValueError("lattice mode needs a box sampler")
        side = round(M ** (1.0 / sampler.n))
        if side ** sampler.n != M:
            raise ValueError(f"M={M} is not a perfect {sampler.n}-th power")
        pts = sampler.grid((side,) * sampler.n)
    elif mode == "sample":
        pts = sampler.sample(M, rngmod.stream(seed, "init"))
    else:
        raise ValueError(f"unknown ensemble mode {mode!r}")
    return Ensemble(pts, np.full(M, 1.0 / M))


def mean_br(ens: Ensemble, game: Game, tie: Optional[TieRule] = None) -> np.ndarray:
    idx = best_response_rows(game, ens.beliefs(), tie)
    return np.bincount(idx, weights=ens.weights, minlength=game.n)


def transport_step(ens: Ensemble, br, mu: float, dt: float) -> Ensemble:
    """Move particles along the exact flow of ``dx/dt = br - mu*x`` over ``dt``.

    Weights are untouched; the flow's Jacobian ``exp(-n*mu*dt)`` is carried
    implicitly by the particles' spacing.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    br = np.asarray(br, dtype=float)
    if mu == 0:
        x = ens.particles + dt * br
    else:
        shrink = math.exp(-mu * dt)
        x = shrink * ens.particles + (-math.expm1(-mu * dt) / mu) * br
    return ens.moved(x, dt)


def diffusion_matrix(x, br, mu: float) -> np.ndarray:
    """``sum_i br_i (mu*x - e_i) (mu*x - e_i)^T`` for one point or a stack of points."""
    x = np.asarray(x, dtype=float)
    br = np.asarray(br, dtype=float)
    n = x.shape[-1]
    y = mu * x[..., None, :] - np.eye(n)           # (..., i, a)
    D = np.einsum("i,...ia,...ib->...ab", br, y, y)
    # summation order can break symmetry by an ulp
    return (D + np.swapaxes(D, -1, -2)) / 2


def _psd_sqrt(D: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(D)
    scale = np.maximum(1.0, np.abs(w).max(axis=-1, keepdims=True))
    if np.any(w < -PSD_TOL * scale):
        raise FloatingPointError(f"diffusion matrix not PSD (min eigenvalue {w.min()})")
    return (V * np.sqrt(np.clip(w, 0.0, None))[..., None, :]) @ np.swapaxes(V, -1, -2)


def sde_step(ens: Ensemble, br, mu: float, h: float, dt: float,
             rng: Optional[np.random.Generator]) -> Ensemble:
    """Euler-Maruyama step for drift ``br - mu*x`` and covariance ``2h*D(x)*dt``.

    Noise is drawn as one (M, n) block in particle order, then positions are
    clipped to the orthant; clipped coordinates are counted in ``clip_events``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if h < 0:
        raise ValueError("h must be nonnegative")
    br = np.asarray(br, dtype=float)
    x = ens.particles
    new = x + (br - mu * x) * dt
    clips = 0
    if h > 0:
        B = _psd_sqrt(2.0 * h * diffusion_matrix(x, br, mu))
        xi = rng.standard_normal(x.shape)
        new = new + math.sqrt(dt) * np.einsum("mab,mb->ma", B, xi)
        neg = new < 0
        clips = int(neg.sum())
        if clips:
            new = np.where(neg, 0.0, new)
    return ens.moved(new, dt, clips)


def diameter(points: np.ndarray) -> tuple[float, str]:
    """Largest pairwise distance and the method used to get it."""
    M = len(points)
    if M < 2:
        return 0.0, "exact"
    if M <= EXACT_DIAMETER_MAX:
        return float(pdist(points).max()), "exact"
    try:
        hull = ConvexHull(points)
        return float(pdist(points[hull.vertices]).max()), "hull"
    except QhullError:
        # flat or repeated point sets: chunked exact scan
        best = 0.0
        for start in range(0, M, 1024):
            blk = points[start:start + 1024]
            d = np.sqrt(((blk[:, None, :] - points[None, :, :]) ** 2).sum(-1)).max()
            best = max(best, float(d))
        return best, "exact-chunked"


def support_metrics(ens: Ensemble) -> dict:
    x = ens.particles
    diam, method = diameter(x)
    return {
        "bbox": (x.min(axis=0), x.max(axis=0)),
        "diameter": diam,
        "diameter_method": method,
        "mean": ens.weights @ x,
        "lambda": ens.weights @ ens.beliefs(),
    }


def run_meanfield(ens: Ensemble, game: Game, mu: float, h: float, dt: float,
                  horizon_t: float, diffusion: bool = False, tie: Optional[TieRule] = None,
                  sample_every: Optional[float] = None, seed: int = 0) -> ObservableSeries:
    """Integrate the coupled particle system, advancing ``ens`` in place.

    The mean best response is evaluated at the start of each step and frozen
    for its duration.
    """
    if dt <= 0 or horizon_t <= 0:
        raise ValueError("dt and horizon_t must be positive")
    if ens.n != game.n:
        raise ValueError(f"ensemble is {ens.n}-dimensional, game has {game.n} actions")
    tie = tie or TieRule()
    noise = rngmod.stream(seed, "diffusion") if diffusion else None
    steps = int(round(horizon_t / dt))
    sample_every = sample_every or dt
    targets = {int(round(t / dt)) for t in sample_times(horizon_t, sample_every)}
    t0 = ens.time

    rec = SeriesRecorder()
    cur = ens
    for k in range(steps + 1):
        br = mean_br(cur, game, tie)
        if k in targets:
            x = cur.particles
            rec.add(t0 + k * dt, cur.weights @ cur.beliefs(), br, cur.weights @ x,
                    x.min(axis=0), x.max(axis=0))
        if k == steps:
            break
        if diffusion:
            cur = sde_step(cur, br, mu, h, dt, noise)
        else:
            cur = transport_step(cur, br, mu, dt)
    ens.particles, ens.time, ens.clip_events = cur.particles, t0 + steps * dt, cur.clip_events
    return rec.build(game.n, engine="meanfield", steps=steps, dt=dt,
                     clip_events=cur.clip_events, diffusion=bool(diffusion))
