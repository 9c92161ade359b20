"""Trial execution, CSV output and summaries."""

from __future__ import annotations

import csv
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.stats import ortho_group

from ..control.controller import constants_for, run_controller
from ..control.system import LtvSystem, lqr_gain, stability_margins
from .config import ExperimentConfig
from .noise import NoiseProcess
from .schedules import cost_from_schedule

__all__ = ["CSV_HEADER", "TrialResult", "make_plant", "plant_gain", "run_trial",
           "run_experiment", "write_csv", "read_csv", "summarize", "sweep_dims", "SWEEP_DIMS"]

CSV_HEADER = ("algorithm", "seed", "dx", "du", "T", "H", "noise", "schedule", "cum_loss",
              "regret", "VT", "DT", "CT", "switch_cost", "wall_ms", "per_step_us")
SWEEP_DIMS = tuple((2 * k, k) for k in range(1, 8))


@dataclass
class TrialResult:
    algorithm: str
    seed: int
    dx: int
    du: int
    T: int
    H: int
    noise: str
    schedule: str
    cum_loss: float = math.nan
    regret: float = math.nan
    VT: float = math.nan
    DT: float = math.nan
    CT: float = math.nan
    switch_cost: float = math.nan
    wall_ms: float = math.nan
    per_step_us: float = math.nan
    losses: Optional[np.ndarray] = field(default=None, repr=False)
    step_seconds: Optional[np.ndarray] = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def row(self, include_timing: bool = True) -> list:
        vals = [getattr(self, k) for k in CSV_HEADER]
        if not include_timing:
            vals[-2:] = ["", ""]
        return [repr(v) if isinstance(v, float) else v for v in vals]


def make_plant(dx: int, du: int, rho: float, seed: int):
    """Nominal ``(A, B)``: ``A`` a scaled random orthogonal matrix (normal, so its
    eigenvector witness is well conditioned), ``B`` Gaussian scaled to unit norm."""
    rng = np.random.default_rng(seed)
    Q = ortho_group.rvs(dx, random_state=rng) if dx > 1 else np.eye(1)
    B = rng.standard_normal((dx, du))
    return rho * Q, B / np.linalg.norm(B, 2)


def plant_gain(A, B, H: int, rule: str = "auto"):
    """Stabilizing gain and the rule that produced it.

    ``lqr`` solves the Riccati equation with identity weights; ``zero`` keeps
    the open loop (stable by construction); ``auto`` takes the LQR gain when its
    certified ``(kappa, gamma)`` satisfy ``kappa^2 (1 - gamma)^(H + 1) < 1``
    and falls back to the zero gain otherwise.
    """
    zero = np.zeros((B.shape[1], A.shape[0]))
    if rule == "zero":
        return zero, "zero"
    K = lqr_gain(A, B)
    if rule == "lqr":
        return K, "lqr"
    kappa, gamma = stability_margins(A, B, K)
    kappa = max(kappa, 1.0)
    if gamma > 0 and kappa**2 * (1.0 - gamma) ** (H + 1) < 1.0:
        return K, "lqr"
    return zero, "zero"


def run_trial(config: ExperimentConfig, algorithm: str, seed: int) -> TrialResult:
    """One (algorithm, seed) cell; failures are captured in ``error``."""
    res = TrialResult(algorithm, seed, config.dx, config.du, config.T, config.H,
                      config.noise.distribution, config.schedule.kind)
    try:
        T, H = config.T, config.H
        A, B = make_plant(config.dx, config.du, config.plant.rho, config.plant.seed)
        K, rule = plant_gain(A, B, H, config.plant.gain)
        sys = LtvSystem.time_invariant(A, B, T, config.noise.W)
        gains = np.broadcast_to(K, (T + 1,) + K.shape)
        cost = cost_from_schedule(config.schedule, T)
        cc = constants_for(sys, cost, gains, H, config.kappa, config.gamma)
        # The raw noise stream depends on the seed only, so every algorithm
        # faces the same draws.
        noise = NoiseProcess(config.noise, config.dx, config.du, seed)
        run = run_controller(algorithm, sys, cost, gains, H, T, noise=noise, constants=cc)
        if not (np.all(np.isfinite(run.losses)) and all(map(math.isfinite, run.metrics.values()))):
            raise FloatingPointError("non-finite losses or metrics")
        m = run.metrics
        res.cum_loss, res.regret = run.cum_loss, m["regret"]
        res.VT, res.DT, res.CT, res.switch_cost = m["V_T"], m["D_T"], m["C_T"], m["switching"]
        res.wall_ms = 1e3 * run.wall_seconds
        res.per_step_us = 1e6 * float(run.step_seconds.mean())
        res.losses, res.step_seconds = run.losses, run.step_seconds
        res.metadata = {
            "gain_rule": rule, "kappa": cc.kappa, "gamma": cc.gamma, "D_bar": cc.D_bar,
            "N": run.pool.N, "epsilon": run.epsilon, "noise_params": dict(config.noise.params),
            "noise_mean_removed": config.noise.mean, "delta_A": config.noise.delta_A,
            "delta_B": config.noise.delta_B, "W": config.noise.W, "clip_rate": noise.clip_rate,
            "max_noise_norm": noise.max_norm, "plant_rho": config.plant.rho,
            "plant_seed": config.plant.seed,
        }
    except Exception as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def _cell(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> List[TrialResult]:
    """Every (algorithm x seed) cell, sorted by (algorithm, seed)."""
    cells = [(config, a, s) for a in config.algorithms for s in config.seeds]
    workers = config.workers if workers is None else workers
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    return sorted(results, key=lambda r: (r.algorithm, r.seed))


def write_csv(results, path, include_timing: bool = True) -> None:
    """Successful cells only. ``include_timing=False`` blanks the clock columns,
    making the file byte-reproducible."""
    rows = [r for r in results if r.ok]
    if not rows:
        raise ValueError("no successful results to write")
    rows = sorted(rows, key=lambda r: (r.algorithm, r.seed, r.dx, r.du))
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise OSError(f"output directory {parent} does not exist")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.row(include_timing))


def read_csv(path) -> List[dict]:
    ints = {"seed", "dx", "du", "T", "H"}
    strs = {"algorithm", "noise", "schedule"}
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append({k: (v if k in strs else int(v) if k in ints
                            else float(v) if v != "" else math.nan) for k, v in rec.items()})
    return out


def summarize(results) -> str:
    """Per-algorithm medians plus the Meta-OFW / Scream-style timing ratio."""
    ok = [r for r in results if r.ok]
    lines = [f"{'algorithm':<10} {'dims':>7} {'n':>3} {'median cum_loss':>16} "
             f"{'median regret':>14} {'median us/step':>15}"]
    groups = {}
    for r in ok:
        groups.setdefault((r.algorithm, r.dx, r.du), []).append(r)
    for (alg, dx, du), rs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        lines.append(f"{alg:<10} {f'{dx}x{du}':>7} {len(rs):>3} "
                     f"{statistics.median(r.cum_loss for r in rs):>16.4f} "
                     f"{statistics.median(r.regret for r in rs):>14.4f} "
                     f"{statistics.median(r.per_step_us for r in rs):>15.1f}")
    for dx, du in sorted({(r.dx, r.du) for r in ok}):
        meta = groups.get(("meta_ofw", dx, du))
        scream = groups.get(("scream", dx, du))
        if meta and scream:
            ratio = (statistics.median(r.per_step_us for r in scream)
                     / statistics.median(r.per_step_us for r in meta))
            lines.append(f"timing ratio scream/meta_ofw at {dx}x{du}: {ratio:.3f}")
    failed = [r for r in results if not r.ok]
    for r in failed:
        lines.append(f"FAILED {r.algorithm} seed={r.seed} {r.dx}x{r.du}: {r.error}")
    return "\n".join(lines)


def sweep_dims(config: ExperimentConfig, dims=SWEEP_DIMS, workers=None) -> List[TrialResult]:
    out = []
    for dxu in dims:
        out.extend(run_experiment(replace(config, dx=dxu[0], du=dxu[1]), workers))
    return out
