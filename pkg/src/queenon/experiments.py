"""End-to-end runs, the alpha window, and small-n structure statistics."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .absorb import complete
from .board import BoardPartition, from_columns, is_valid_configuration
from .construct import (
    PhaseParams,
    Trajectory,
    build_delta,
    cell_histogram_check,
    random_phase,
    trajectory_report,
    trial_rng,
)
from .enumeration import EnumerationError, all_configurations
from .optimize import Certificate, CertificateError, maximize_primal, verify_certificate
from .queenon import (
    StepQueenon,
    cell_geometry,
    cell_masses,
    dist_cell_bound,
    empirical,
)

__all__ = [
    "build_id",
    "resolve_jobs",
    "pipeline_run",
    "alpha_report",
    "AlphaWindow",
    "StructureReport",
    "structure_experiment",
    "axis_masses",
    "best_known_queenon",
]


@lru_cache(maxsize=1)
def build_id() -> str:
    """Short content hash of the package sources."""
    h = hashlib.sha1()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


def resolve_jobs(jobs: int | None) -> int:
    """``QUEENON_JOBS`` overrides the requested worker count."""
    env = os.environ.get("QUEENON_JOBS")
    if env:
        jobs = int(env)
    return max(1, int(jobs or 1))


# ---------------------------------------------------------------------------
# construction pipeline


def _pipeline_trial(args) -> dict:
    params, seed, trial, policy, trace = args
    n, N = params.n, params.big_n
    delta = build_delta(params.base, params.rho)
    part = BoardPartition(n, params.big_m)
    state, stats = random_phase(params, seed=seed, trial=trial, trace=trace, partition=part)
    row = {
        "trial": trial,
        "placed": stats.placed,
        "abort_step": stats.abort_step,
        "completed": False,
        "valid": False,
        "absorbed": 0,
    }
    if trace:
        traj = Trajectory(delta, n, params.big_m, params.k_exponent, part)
        row["trajectory_deviation"] = trajectory_report(stats.trace, traj)
    if stats.abort_step is not None:
        return row
    res = complete(state, policy=policy, rng=trial_rng(seed, trial, stream=2))
    row["completed"] = res.success
    row["absorbed"] = len(res.steps)
    if not res.success:
        row["absorb_abort_index"] = res.abort_index
        return row
    row["valid"] = is_valid_configuration(res.config, n)
    counts = empirical(res.config, n, N).cell_counts
    hist = cell_histogram_check(counts, delta, n, N=N)
    row["cell_deviation"] = hist.max_deviation
    row["distance_bound"] = dist_cell_bound(counts, cell_masses(delta, N) * n, N, n=n)
    return row


def pipeline_run(n: int, base: StepQueenon, rho: float = 0.05, trials=100, seed: int = 0,
                 k_exponent: int = 10, big_m: int | None = None, horizon: int | None = None,
                 policy: str = "guided", trace: bool = True, jobs: int = 1,
                 cell_threshold: float = 0.05) -> dict:
    """Random phase, completion and checks for a batch of trials.

    ``trials`` is a count or an iterable of trial indices; trial ``i`` uses
    the stream ``trial_rng(seed, i)``.  The report is independent of
    ``jobs``.
    """
    params = PhaseParams(n, base, rho, k_exponent, big_m, horizon)
    ids = list(range(trials)) if isinstance(trials, int) else [int(t) for t in trials]
    tasks = [(params, seed, t, policy, trace) for t in ids]
    jobs = resolve_jobs(jobs)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_pipeline_trial, tasks))
    else:
        rows = [_pipeline_trial(t) for t in tasks]
    rows.sort(key=lambda r: r["trial"])
    k = max(len(rows), 1)
    succ = [r for r in rows if r["completed"] and r["valid"]]
    traced = [r["trajectory_deviation"] for r in rows if "trajectory_deviation" in r]
    cell_ok = [r["cell_deviation"] <= cell_threshold for r in succ]
    report = {
        "build": build_id(),
        "params": {**params.describe(), "seed": seed, "trials": ids, "policy": policy},
        "success_rate": len(succ) / k,
        "abort_rate": sum(r["abort_step"] is not None for r in rows) / k,
        "all_successes_valid": all(r["valid"] for r in rows if r["completed"]),
        "mean_queens_placed": float(np.mean([r["placed"] for r in rows])) if rows else 0.0,
        "mean_distance_bound": float(np.mean([r["distance_bound"] for r in succ])) if succ else None,
        "cell_threshold": cell_threshold,
        "cell_pass_rate": float(np.mean(cell_ok)) if cell_ok else None,
        "trajectory_pass_rate": float(np.mean([d < 1.0 for d in traced])) if traced else None,
        "runs": rows,
    }
    return report


# ---------------------------------------------------------------------------
# alpha window


@dataclass(frozen=True)
class AlphaWindow:
    low: float | None  # from the upper certificate
    high: float  # from the lower certificate
    lower_resolution: int
    upper_resolution: int | None

    def contained_in(self, a: float, b: float) -> bool:
        return self.low is not None and a <= self.low and self.high <= b

    def to_json(self) -> dict:
        return {
            "alpha_low": self.low,
            "alpha_high": self.high,
            "lower_resolution": self.lower_resolution,
            "upper_resolution": self.upper_resolution,
            "verified": True,
        }

    def __str__(self) -> str:
        hi = f"alpha <= {self.high:.10f}  (primal witness, N={self.lower_resolution})"
        if self.low is None:
            return hi
        lo = f"alpha >= {self.low:.10f}  (dual witness, N={self.upper_resolution})"
        return f"{lo}\n{hi}\n{self.low:.10f} <= alpha <= {self.high:.10f}"


def alpha_report(lower: Certificate, upper: Certificate | None = None) -> AlphaWindow:
    """Window for ``alpha = -max H_q`` from verified certificates.

    A lower certificate ``H_q(gamma) = v`` gives ``alpha <= -v``; a dual
    certificate with value ``u`` gives ``alpha >= -u``.  Raises
    :class:`CertificateError` if either fails verification or if they do
    not sandwich.
    """
    if lower.kind != "lower":
        raise CertificateError("first certificate must be a primal (lower) certificate")
    lv = verify_certificate(lower)
    if upper is None:
        return AlphaWindow(None, -lv, lower.n_steps, None)
    if upper.kind != "upper":
        raise CertificateError("second certificate must be a dual (upper) certificate")
    uv = verify_certificate(upper)
    if lv > uv:
        raise CertificateError(f"certificates do not sandwich: lower {lv} > upper {uv}")
    return AlphaWindow(-uv, -lv, lower.n_steps, upper.n_steps)


# ---------------------------------------------------------------------------
# small-n structure


def axis_masses(config, n: int, N: int) -> np.ndarray:
    """Mass of ``gamma_q`` in each square of the ``N x N`` axis grid."""
    edges_n = np.arange(n + 1) / n
    edges_N = np.arange(N + 1) / N
    lo = np.maximum(edges_n[:-1, None], edges_N[None, :-1])
    hi = np.minimum(edges_n[1:, None], edges_N[None, 1:])
    W = np.clip(hi - lo, 0.0, None) * n  # fraction of board column a in grid column i
    q = np.asarray(config, dtype=np.int64).reshape(-1, 2)
    out = np.zeros((N, N))
    for x, y in q:
        out += np.outer(W[x - 1], W[y - 1])
    return out / n


@lru_cache(maxsize=4)
def best_known_queenon(N: int = 12, budget: int = 300) -> StepQueenon:
    from .queenon import from_matrix

    cert = maximize_primal(N, budget=budget)
    return from_matrix(cert.witness)


@dataclass
class StructureReport:
    n: int
    n_steps: int
    samples: int
    seed: int
    frequencies: np.ndarray  # averaged I_N cell frequencies
    density: np.ndarray  # averaged axis-grid density, N x N
    reference: np.ndarray  # I_N masses of the reference queenon
    distance_bound: float

    def to_json(self) -> dict:
        geo = cell_geometry(self.n_steps)
        return {
            "build": build_id(),
            "n": self.n,
            "N": self.n_steps,
            "samples": self.samples,
            "seed": self.seed,
            "distance_bound": self.distance_bound,
            "max_cell_gap": float(np.max(np.abs(self.frequencies - self.reference))),
            "cells": [
                {"p": int(p), "m": int(m), "frequency": float(f), "reference": float(r)}
                for (p, m), f, r in zip(geo.cells, self.frequencies, self.reference)
            ],
        }


def structure_experiment(n: int, N: int = 3, samples: int = 1000, seed: int = 0,
                         reference: StepQueenon | None = None) -> StructureReport:
    """Average ``I_N`` statistics of uniformly random small configurations.

    The reference defaults to the best primal queenon found at resolution 12,
    so ``N`` must divide 12 or be a multiple of it.
    """
    sols = all_configurations(n)
    if not sols:
        raise EnumerationError(f"no configurations exist for n={n}")
    ref = reference if reference is not None else best_known_queenon()
    rng = trial_rng(seed, 0)
    picks = rng.integers(len(sols), size=samples)
    geo = cell_geometry(N)
    freq = np.zeros(geo.n_cells)
    grid = np.zeros((N, N))
    # identical configurations share their statistics
    for idx, mult in zip(*np.unique(picks, return_counts=True)):
        cfg = from_columns(sols[idx])
        freq += mult * empirical(cfg, n, N).frequencies
        grid += mult * axis_masses(cfg, n, N)
    freq /= samples
    grid /= samples
    refm = cell_masses(ref, N)
    bound = dist_cell_bound(freq, refm, N)
    return StructureReport(n, N, samples, seed, freq, grid * N * N, refm, bound)
