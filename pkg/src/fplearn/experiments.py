"""Run configured experiments, write artifacts, compare runs."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import abm, meanfield, odes
from .config import ExperimentConfig
from .game import TieRule, best_response_vertex, mixed_ne_2x2
from .rng import stream
from .plotting import write_svg_scatter, write_svg_series
from .series import ObservableSeries, SeriesRecorder, sample_times

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
OBSERVABLES = "observables.csv"


class RunError(RuntimeError):
    """An engine failed while running a valid configuration."""


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _floats(a) -> list:
    return [float(v) for v in np.ravel(a)]


def _subsample(sol: odes.OdeSolution, horizon_t: float, sample_every: float) -> np.ndarray:
    idx = sorted({min(int(round(t / sol.dt)), len(sol.times) - 1)
                  for t in sample_times(horizon_t, sample_every)})
    return np.array(idx, dtype=int)


def predicted_box(cfg: ExperimentConfig) -> Optional[odes.OdeSolution]:
    """Box-model trajectory for runs where it applies (2x2, no memory, square box start)."""
    init, p = cfg.init, cfg.params
    if init is None or init.kind != "uniform_box" or cfg.game.n != 2 or p.get("mu", 0) != 0:
        return None
    try:
        mixed_ne_2x2(cfg.game)
        box0 = odes.Box.from_bounds(init.lo, init.hi)
    except ValueError:
        return None
    horizon = p["horizon_t"]
    dt = p.get("dt", 1e-3) if cfg.engine == "box" else max(1e-3, horizon / 4000)
    return odes.integrate_box_center(box0, cfg.game, dt, horizon, p.get("method", "euler"))


def _tie(cfg: ExperimentConfig) -> TieRule:
    if cfg.params.get("tie", "lowest") == "uniform":
        return TieRule("uniform", rng=stream(cfg.seed, "tie"))
    return TieRule()


def _run_abm(cfg, out: Path, files: list, summary: dict):
    p = cfg.params
    pop = abm.init_population(p["N"], cfg.game.n, cfg.init, cfg.seed)
    series = abm.run_abm(pop, cfg.game, abm.LearningParams(p["h"], p["mu"]), p["horizon_t"],
                         p["sample_every"], _tie(cfg))
    summary["rounds"] = series.meta["rounds"]
    if "final" in cfg.formats:
        pop.to_csv(out / "final_population.csv")
        files.append("final_population.csv")
    return series, pop.x


def _run_meanfield(cfg, out: Path, files: list, summary: dict):
    p = cfg.params
    ens = meanfield.init_ensemble(cfg.init, p["M"], cfg.seed, p["ensemble"])
    series = meanfield.run_meanfield(ens, cfg.game, p["mu"], p["h"], p["dt"], p["horizon_t"],
                                     p["diffusion"], _tie(cfg), p["sample_every"], cfg.seed)
    sm = meanfield.support_metrics(ens)
    summary.update(diameter=sm["diameter"], diameter_method=sm["diameter_method"],
                   clip_events=int(ens.clip_events))
    if "final" in cfg.formats:
        ens.to_csv(out / "final_ensemble.csv")
        files.append("final_ensemble.csv")
    return series, ens.particles


def _run_box(cfg, out: Path, files: list, summary: dict):
    p = cfg.params
    box0 = odes.Box.from_bounds(cfg.init.lo, cfg.init.hi)
    sol = odes.integrate_box_center(box0, cfg.game, p["dt"], p["horizon_t"], p["method"])
    if "csv" in cfg.formats:
        sol.to_csv(out / "trajectory.csv", ["center_1", "center_2"])
        files.append("trajectory.csv")
    rec = SeriesRecorder()
    half = box0.side / 2
    for k in _subsample(sol, p["horizon_t"], p["sample_every"]):
        box = odes.Box(tuple(sol.states[k]), box0.side)
        rec.add(sol.times[k], odes.box_lambda(box), odes.box_mean_br_2x2(box, cfg.game),
                sol.states[k], sol.states[k] - half, sol.states[k] + half)
    summary["final_center"] = _floats(sol.final)
    summary["predicted_box_center"] = _floats(sol.final)
    return rec.build(2, engine="box"), np.zeros((0, 2))


def _run_brd(cfg, out: Path, files: list, summary: dict):
    p = cfg.params
    init = cfg.init
    x0 = np.asarray(init.x) if init.kind == "point_mass" else (np.asarray(init.lo) + init.hi) / 2
    tie = _tie(cfg)
    sol = odes.integrate_brd(x0 / x0.sum(), x0.sum(), cfg.game, p["mu"], p["dt"], p["horizon_t"],
                             p["method"], tie)
    n = cfg.game.n
    if "csv" in cfg.formats:
        sol.to_csv(out / "trajectory.csv", [f"lambda_{i + 1}" for i in range(n)] + ["sum_priors"])
        files.append("trajectory.csv")
    rec = SeriesRecorder()
    for k in _subsample(sol, p["horizon_t"], p["sample_every"]):
        lam, s = sol.states[k, :n], sol.states[k, n]
        x = lam * s
        rec.add(sol.times[k], lam, best_response_vertex(cfg.game, lam, tie), x, x, x)
    return rec.build(n, engine="brd"), np.zeros((0, n))


def _run_meanbr(cfg, out: Path, files: list, summary: dict):
    p = cfg.params
    sol = odes.integrate_meanbr_2x2(p["br0"], p["l"], p["dt"], p["horizon_t"], p["method"])
    idx = _subsample(sol, p["horizon_t"], p["sample_every"])
    if "csv" in cfg.formats:
        odes.OdeSolution(sol.times[idx], sol.states[idx], sol.method, sol.dt).to_csv(
            out / "trajectory.csv", ["brbar_1", "brbar_2"])
        files.append("trajectory.csv")
    if "svg" in cfg.formats:
        write_svg_series(sol.times[idx], {"mean BR": sol.states[idx]}, out / "trajectory.svg",
                         cfg.game.labels)
        files.append("trajectory.svg")
    summary["final_mean_br"] = _floats(sol.final)
    return None, None


ENGINES = {"abm": _run_abm, "meanfield": _run_meanfield, "box": _run_box, "brd": _run_brd,
           "meanbr2x2": _run_meanbr}


def _write_outputs(cfg: ExperimentConfig, out: Path) -> dict:
    files: list[str] = []
    summary: dict = {}
    try:
        series, points = ENGINES[cfg.engine](cfg, out, files, summary)
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        raise RunError(f"engine {cfg.engine!r} failed on {cfg.name!r}: {exc}") from exc

    if series is not None:
        summary.update(final_lambda=_floats(series.lam[-1]), final_mean_br=_floats(series.mean_br[-1]),
                       final_mean_prior=_floats(series.mean_prior[-1]),
                       final_bbox=[_floats(series.bbox_lo[-1]), _floats(series.bbox_hi[-1])])
        if "csv" in cfg.formats:
            series.to_csv(out / OBSERVABLES)
            files.append(OBSERVABLES)
        if "svg" in cfg.formats:
            write_svg_series(series.times, {"Lambda": series.lam, "mean BR": series.mean_br},
                             out / "observables.svg", cfg.game.labels)
            files.append("observables.svg")
    if "svg" in cfg.formats and points is not None and cfg.game.n == 2:
        boxes = []
        if "predicted_box_center" not in summary:
            pred = predicted_box(cfg)
            if pred is not None:
                summary["predicted_box_center"] = _floats(pred.final)
        if "predicted_box_center" in summary:
            center = np.asarray(summary["predicted_box_center"])
            half = np.subtract(cfg.init.hi, cfg.init.lo)[0] / 2
            boxes.append((center - half, center + half))
        write_svg_scatter(points, out / "final.svg", boxes=boxes, labels=cfg.game.labels,
                          title=f"{cfg.name}, t = {cfg.params['horizon_t']:g}")
        files.append("final.svg")

    return {
        "schema": 1,
        "name": cfg.name,
        "engine": cfg.engine,
        "seed": cfg.seed,
        "config": cfg.as_dict(),
        "observables": OBSERVABLES if OBSERVABLES in files else None,
        "summary": summary,
        "files": [{"path": f, "sha256": _sha256(out / f), "bytes": (out / f).stat().st_size}
                  for f in files],
    }


def _install(tmp: Path, out: Path):
    if out.exists():
        if (out / MANIFEST).exists():
            shutil.rmtree(out)
        elif out.is_dir() and not any(out.iterdir()):
            out.rmdir()
        else:
            raise RunError(f"output directory {out} exists and is not a previous run")
    os.replace(tmp, out)


def run_experiment(cfg: ExperimentConfig, out_dir: Union[str, Path, None] = None) -> dict:
    """Run ``cfg`` and write its artifacts into ``out_dir``.

    Files are produced in a scratch directory next to ``out_dir`` and moved in
    place only on success. The returned manifest carries an extra ``dir`` key
    with the absolute output path; the written ``manifest.json`` does not.
    """
    out = Path(out_dir or cfg.output_dir or Path("runs") / cfg.name).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        manifest = _write_outputs(cfg, tmp)
        (tmp / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        _install(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    log.info("wrote %d files to %s", len(manifest["files"]) + 1, out)
    return {**manifest, "dir": str(out)}


def _replicate(args):
    cfg, out = args
    return run_experiment(cfg, out)


def run_replicates(cfg: ExperimentConfig, k: int, out_dir: Union[str, Path, None] = None,
                   workers: Optional[int] = None) -> list[dict]:
    """Run ``k`` copies with seeds ``seed, seed+1, ...`` into ``out_dir/rep-000`` etc."""
    if k < 1:
        raise ValueError("replicate count must be at least 1")
    base = Path(out_dir or cfg.output_dir or Path("runs") / cfg.name)
    jobs = [(cfg.with_seed(cfg.seed + r), base / f"rep-{r:03d}") for r in range(k)]
    workers = workers or min(k, os.cpu_count() or 1)
    if workers == 1:
        return [_replicate(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate, jobs))


def load_manifest(ref: Union[str, Path, dict]) -> tuple[dict, Path]:
    if isinstance(ref, dict):
        if "dir" not in ref:
            raise ValueError("manifest dict has no 'dir' entry")
        return ref, Path(ref["dir"])
    path = Path(ref)
    if path.is_dir():
        path = path / MANIFEST
    return json.loads(path.read_text()), path.parent


def load_observables(ref) -> ObservableSeries:
    manifest, root = load_manifest(ref)
    if not manifest.get("observables"):
        raise ValueError(f"run {manifest.get('name')!r} has no observables")
    return ObservableSeries.from_csv(root / manifest["observables"])


def compare_series(a: ObservableSeries, b: ObservableSeries, metric: str,
                   t_min: Optional[float] = None, t_max: Optional[float] = None) -> dict:
    """Sup and RMS differences of ``metric`` on a's sample times, b interpolated linearly."""
    ya, yb = a.metric(metric), b.metric(metric)
    if ya.shape[1] != yb.shape[1]:
        raise ValueError(f"metric {metric!r} has dimension {ya.shape[1]} vs {yb.shape[1]}")
    lo = max(a.times[0], b.times[0], -np.inf if t_min is None else t_min)
    hi = min(a.times[-1], b.times[-1], np.inf if t_max is None else t_max)
    eps = 1e-9 * max(1.0, abs(hi))
    mask = (a.times >= lo - eps) & (a.times <= hi + eps)
    if hi < lo or not mask.any():
        raise ValueError(f"time ranges do not overlap for metric {metric!r}")
    t = a.times[mask]
    diff = ya[mask] - np.column_stack([np.interp(t, b.times, yb[:, i]) for i in range(yb.shape[1])])
    sup = np.abs(diff).max(axis=0)
    return {
        "metric": metric,
        "t_min": float(t[0]),
        "t_max": float(t[-1]),
        "samples": int(len(t)),
        "sup": _floats(sup),
        "rms": _floats(np.sqrt((diff ** 2).mean(axis=0))),
        "sup_max": float(sup.max()),
    }


def compare_runs(manifest_a, manifest_b, metric: str, t_min: Optional[float] = None,
                 t_max: Optional[float] = None, out: Union[str, Path, None] = None) -> dict:
    report = compare_series(load_observables(manifest_a), load_observables(manifest_b), metric,
                            t_min, t_max)
    if out is not None:
        Path(out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
