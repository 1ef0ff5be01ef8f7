"""Time series of population observables and their CSV form."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


@dataclass
class ObservableSeries:
    """Observables sampled over model time.

    Rows of ``lam`` and ``mean_br`` are simplex vectors; ``mean_prior`` and the
    bounding box ``bbox_lo``/``bbox_hi`` live in priors-space.
    """

    times: np.ndarray
    lam: np.ndarray
    mean_br: np.ndarray
    mean_prior: np.ndarray
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.lam.shape[1]

    def __len__(self) -> int:
        return len(self.times)

    def metric(self, name: str) -> np.ndarray:
        try:
            return {"lambda": self.lam, "mean_br": self.mean_br, "mean_prior": self.mean_prior}[name]
        except KeyError:
            raise ValueError(f"unknown metric {name!r}") from None

    def columns(self) -> list[str]:
        return observable_columns(self.n)

    def to_array(self) -> np.ndarray:
        return np.column_stack([self.times, self.lam, self.mean_br, self.mean_prior,
                                self.bbox_lo, self.bbox_hi])

    def to_csv(self, path) -> Path:
        path = Path(path)
        write_csv(path, self.columns(), self.to_array())
        return path

    @classmethod
    def from_csv(cls, path) -> "ObservableSeries":
        header, data = read_csv(path)
        n = (len(header) - 1) // 5
        if header != observable_columns(n):
            raise ValueError(f"{path}: not an observables file (header {header[:3]}...)")
        blocks = [data[:, 1 + k * n: 1 + (k + 1) * n] for k in range(5)]
        return cls(data[:, 0], *blocks)


class SeriesRecorder:
    """Accumulates observable rows before packing them into a series."""

    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, t, lam, mean_br, mean_prior, lo, hi):
        self.rows.append((float(t), np.array(lam, float), np.array(mean_br, float),
                          np.array(mean_prior, float), np.array(lo, float), np.array(hi, float)))

    def build(self, n: int, **meta) -> ObservableSeries:
        if not self.rows:
            empty = np.zeros((0, n))
            return ObservableSeries(np.zeros(0), empty, empty, empty, empty, empty, meta)
        cols = list(zip(*self.rows))
        return ObservableSeries(np.array(cols[0]), *(np.vstack(c) for c in cols[1:]), meta=meta)


def observable_columns(n: int) -> list[str]:
    cols = ["t"]
    for prefix in ("lambda", "brbar", "mean_prior", "bbox_lo", "bbox_hi"):
        cols += [f"{prefix}_{i + 1}" for i in range(n)]
    return cols


def write_csv(path, header, data) -> None:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        if data.size:
            np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return header, data


def sample_times(horizon_t: float, sample_every: float) -> np.ndarray:
    """Requested sample times ``k * sample_every`` up to the horizon (inclusive)."""
    if sample_every <= 0:
        raise ValueError("sample_every must be positive")
    k = int(np.floor(horizon_t / sample_every * (1 + 1e-12) + 1e-9))
    return np.arange(k + 1) * sample_every
