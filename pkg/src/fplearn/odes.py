"""Reduced deterministic models: translating box, BRD, and the 2x2 mean-BR system."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .game import Game, TieRule, best_response_vertex, mixed_ne_2x2
from .series import write_csv

EULER = "euler"
RK4 = "rk4"
METHODS = (EULER, RK4)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Box:
    """Axis-aligned cube with the given center and side length."""

    center: tuple
    side: float = 1.0

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("box side must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center) - self.side / 2

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center) + self.side / 2

    @classmethod
    def from_bounds(cls, lo, hi) -> "Box":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        sides = hi - lo
        if not np.allclose(sides, sides[0], rtol=1e-12, atol=1e-12):
            raise ValueError(f"bounds {lo}..{hi} do not describe a cube")
        return cls(tuple((lo + hi) / 2), float(sides[0]))


@dataclass
class OdeSolution:
    times: np.ndarray
    states: np.ndarray
    method: str
    dt: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path, names: Optional[list[str]] = None) -> None:
        dim = self.states.shape[1]
        names = names or [f"y_{i + 1}" for i in range(dim)]
        write_csv(path, ["t"] + list(names), np.column_stack([self.times, self.states]))


def integrate_generic(rhs: Callable[[float, np.ndarray], np.ndarray], y0, dt: float,
                      horizon_t: float, method: str = EULER) -> OdeSolution:
    """Fixed-step explicit integration of ``y' = rhs(t, y)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; use one of {METHODS}")
    steps = int(round(horizon_t / dt))
    y = np.array(y0, dtype=float)
    out = np.empty((steps + 1, y.size))
    out[0] = y
    for k in range(steps):
        t = k * dt
        if method == EULER:
            y = y + dt * np.asarray(rhs(t, y))
        else:
            k1 = np.asarray(rhs(t, y))
            k2 = np.asarray(rhs(t + dt / 2, y + dt / 2 * k1))
            k3 = np.asarray(rhs(t + dt / 2, y + dt / 2 * k2))
            k4 = np.asarray(rhs(t + dt, y + dt * k3))
            y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state {y} at step {k + 1} (t={t + dt:g})")
        out[k + 1] = y
    return OdeSolution(np.arange(steps + 1) * dt, out, method, dt)


def _clip_halfplane(poly: list, a: np.ndarray, b: float) -> list:
    """Sutherland-Hodgman clip of a convex polygon to {x : a.x <= b}."""
    out = []
    for k in range(len(poly)):
        p, q = poly[k], poly[(k + 1) % len(poly)]
        fp, fq = a @ p - b, a @ q - b
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            out.append(p + (fp / (fp - fq)) * (q - p))
    return out


def _area(poly: list) -> float:
    if len(poly) < 3:
        return 0.0
    P = np.asarray(poly)
    x, y = P[:, 0], P[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def box_mean_br_2x2(box: Box, game: Game) -> np.ndarray:
    """Fraction of a uniform square on each side of the indifference ray.

    Below the ray (``x1/(x1+x2) < p*``) the first action is the best response.
    """
    if len(box.center) != 2:
        raise ValueError("box_mean_br_2x2 needs a 2-D box")
    lo, hi = box.lo, box.hi
    if lo[0] <= 0 and lo[1] <= 0:
        raise ValueError(f"box {lo}..{hi} touches the origin")
    p = mixed_ne_2x2(game)[0]
    square = [np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]),
              np.array([hi[0], hi[1]]), np.array([lo[0], hi[1]])]
    first = _area(_clip_halfplane(square, np.array([1.0 - p, -p]), 0.0)) / box.side ** 2
    first = min(max(first, 0.0), 1.0)
    return np.array([first, 1.0 - first])


def box_lambda(box: Box, order: int = 12) -> np.ndarray:
    """Mean belief over a uniform square, by tensor Gauss-Legendre quadrature."""
    nodes, w = np.polynomial.legendre.leggauss(order)
    u = box.center[0] + box.side / 2 * nodes
    v = box.center[1] + box.side / 2 * nodes
    X1, X2 = np.meshgrid(u, v, indexing="ij")
    W = np.outer(w, w) / 4.0
    p1 = float((W * X1 / (X1 + X2)).sum())
    return np.array([p1, 1.0 - p1])


def integrate_box_center(box0: Box, game: Game, dt: float, horizon_t: float,
                         method: str = EULER) -> OdeSolution:
    """Center of a uniformly populated square carried by its own mean best response.

    Only meaningful without memory decay, where transport preserves the shape.
    """
    side = box0.side

    def rhs(t, c):
        lo = c - side / 2
        if np.any(lo < -1e-12):
            raise ValueError(f"box left the positive quadrant at t={t:g} (center {c})")
        return box_mean_br_2x2(Box(tuple(c), side), game)

    return integrate_generic(rhs, box0.center, dt, horizon_t, method)


def brd_rhs(lam, sum_priors: float, game: Game, tie: Optional[TieRule] = None) -> np.ndarray:
    if not sum_priors > 0:
        raise ValueError("sum_priors must be positive")
    lam = np.asarray(lam, dtype=float)
    return (best_response_vertex(game, lam, tie) - lam) / sum_priors


def integrate_brd(lam0, sum0: float, game: Game, mu: float, dt: float, horizon_t: float,
                  method: str = EULER, tie: Optional[TieRule] = None) -> OdeSolution:
    """Point-mass population: belief follows BRD while the prior total obeys S' = 1 - mu*S.

    State columns are ``lambda_1..n`` followed by the prior total.
    """
    n = game.n

    def rhs(t, y):
        return np.append(brd_rhs(y[:n], y[n], game, tie), 1.0 - mu * y[n])

    return integrate_generic(rhs, np.append(np.asarray(lam0, float), sum0), dt, horizon_t, method)


def lambda_rhs_ensemble(ens, br) -> np.ndarray:
    """Ensemble average of ``(br - x/S) / S`` with ``S`` the particle's prior total."""
    x = ens.particles
    s = x @ np.ones(x.shape[1])
    if not s.min() > 0:
        raise ValueError("particle with zero prior total")
    integrand = (np.asarray(br, float) - x / s[:, None]) / s[:, None]
    return ens.weights @ integrand


def overlap_length(box: Box) -> float:
    """Length of the square's intersection with the diagonal x1 = x2."""
    if len(box.center) != 2:
        raise ValueError("overlap_length needs a 2-D box")
    gap = abs(box.center[0] - box.center[1])
    return SQRT2 * (box.side - gap) if gap < box.side else 0.0


def overlap_series(sol: OdeSolution, side: float) -> np.ndarray:
    return np.array([overlap_length(Box(tuple(c), side)) for c in sol.states])


def first_time_above(times, values, threshold: float) -> Optional[float]:
    """First time after which ``values`` stays above ``threshold``; None if never."""
    above = np.asarray(values) > threshold
    if not above[-1]:
        return None
    below = np.flatnonzero(~above)
    return float(times[0] if len(below) == 0 else times[below[-1] + 1])


_SWAP = np.array([[-1.0, 1.0], [1.0, -1.0]])


def meanbr_ode_rhs_2x2(br, l: float) -> np.ndarray:
    if l < 0:
        raise ValueError("overlap length must be nonnegative")
    return l * (_SWAP @ np.asarray(br, dtype=float))


def integrate_meanbr_2x2(br0, l_schedule: Union[float, Callable[[float], float]], dt: float,
                         horizon_t: float, method: str = RK4) -> OdeSolution:
    sched = l_schedule if callable(l_schedule) else (lambda t, c=float(l_schedule): c)
    return integrate_generic(lambda t, y: meanbr_ode_rhs_2x2(y, sched(t)), br0, dt,
                             horizon_t, method)
