"""Queenon-guided random placement.

A target step queenon is mixed with ``kappa`` to get ``delta``.  Cells of
``I_M`` are drawn i.i.d. from ``delta`` and each draw places a queen
uniformly at random among the available squares of that cell.  Tracked
safe-position counts can be compared with their predicted trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .board import BoardPartition, BoardState
from .queenon import (
    QueenonError,
    StepQueenon,
    band_masses,
    cell_geometry,
    cell_masses,
    kappa,
    mix,
)

__all__ = [
    "PhaseParams",
    "RunStats",
    "Trace",
    "Trajectory",
    "HistogramReport",
    "trial_rng",
    "build_delta",
    "random_phase",
    "cell_histogram_check",
    "trajectory_report",
]

TRACE_POINTS = 64
TRACE_PAIRS = 50
LINE_KINDS = ("row", "col", "plus", "minus")


def trial_rng(seed: int, trial: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent stream for one trial, split from a root seed by counter."""
    ss = np.random.SeedSequence(seed, spawn_key=(trial, stream))
    return np.random.Generator(np.random.Philox(ss))


def build_delta(base: StepQueenon, rho: float) -> StepQueenon:
    """``delta = (1 - rho) * base + rho * kappa``."""
    if not 0.0 < rho <= 1.0:
        raise QueenonError(f"rho must lie in (0, 1], got {rho}")
    return mix(base, kappa(), rho)


@dataclass(frozen=True)
class PhaseParams:
    """Parameters of one random phase.

    ``big_n`` is the resolution of ``delta``.  Left as ``None``, ``big_m``
    defaults to ``floor(n^0.1) * big_n`` and ``horizon`` to
    ``n - floor(n^(1 - 1/K^2))``.
    """

    n: int
    base: StepQueenon
    rho: float = 0.05
    k_exponent: int = 10
    big_m: int | None = None
    horizon: int | None = None

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.k_exponent < 1:
            raise ValueError("K must be a positive integer")
        N = self.big_n
        if self.big_m is None:
            object.__setattr__(self, "big_m", int(math.floor(self.n**0.1 + 1e-12)) * N)
        if self.horizon is None:
            K = self.k_exponent
            object.__setattr__(self, "horizon", self.n - int(math.floor(self.n ** (1.0 - 1.0 / K**2))))
        if self.big_m % N:
            raise ValueError(f"M={self.big_m} must be a multiple of N={N}")
        if not 0 <= self.horizon < self.n:
            raise ValueError(f"horizon T={self.horizon} must satisfy 0 <= T < n={self.n}")

    @property
    def big_n(self) -> int:
        return math.lcm(self.base.n_steps, 3)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "N": self.big_n,
            "M": self.big_m,
            "T": self.horizon,
            "K": self.k_exponent,
            "rho": self.rho,
            "base_n_steps": self.base.n_steps,
        }


@dataclass
class Trace:
    """Safe-position counts recorded at checkpoints of one run."""

    checkpoints: list = field(default_factory=list)
    pairs: list = field(default_factory=list)  # (kind, line, cell)
    values: list = field(default_factory=list)  # one row of pair counts per checkpoint
    z_values: list = field(default_factory=list)  # one row of Z_alpha per checkpoint

    def to_json(self) -> dict:
        return {
            "checkpoints": list(self.checkpoints),
            "pairs": [list(p) for p in self.pairs],
            "values": [list(map(int, v)) for v in self.values],
            "z_values": [list(map(int, v)) for v in self.z_values],
        }


@dataclass
class RunStats:
    """Record of one random phase (and, when run, its completion)."""

    seed: int
    trial: int
    params: dict
    placed: int
    abort_step: int | None
    draw_counts: np.ndarray
    cell_counts: np.ndarray
    queens: list
    order: list = field(default_factory=list)  # placements in time order
    trace: Trace | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "seed": self.seed,
            "trial": self.trial,
            "params": self.params,
            "placed": self.placed,
            "abort_step": self.abort_step,
            "draw_counts": self.draw_counts.tolist(),
            "cell_counts": self.cell_counts.tolist(),
            "queens": [list(q) for q in self.queens],
            "order": [list(q) for q in self.order],
        }
        if self.trace is not None:
            out["trace"] = self.trace.to_json()
        out.update(self.extra)
        return out


class Trajectory:
    """Predicted safe-position counts for a given ``delta`` and board.

    ``L`` counts come from the ``I_M`` partition of the board; ``delta^+``
    and ``delta^-`` of a cell are the masses of its ``J_M`` bands.
    """

    def __init__(self, delta: StepQueenon, n: int, M: int, K: int, partition: BoardPartition | None = None):
        self.n, self.M, self.K = n, M, K
        self.partition = partition or BoardPartition(n, M)
        geo = cell_geometry(M)
        plus, minus = band_masses(delta, M)
        self.delta_plus = plus[geo.cells[:, 0] - 1]
        self.delta_minus = minus[geo.cells[:, 1] - 1]
        amap = self.partition.cell_of
        x, y = np.indices((n, n)) + 1
        ids = amap.ravel()
        # key arrays per line kind; offsets make every index nonnegative
        self._keys = {
            "row": y.ravel(),
            "col": x.ravel(),
            "plus": (x + y).ravel(),
            "minus": (y - x + n).ravel(),
        }
        self._ids = ids
        self._count = {}
        for kind, key in self._keys.items():
            size = 2 * n + 1
            self._count[kind] = np.bincount(key * geo.n_cells + ids, minlength=size * geo.n_cells).reshape(
                size, geo.n_cells
            )

    def initial(self, kind: str, line: int, cell: int) -> int:
        """``L`` count: squares of ``cell`` on the given line."""
        key = line + self.n if kind == "minus" else line
        return int(self._count[kind][key, cell])

    def E(self, t):
        t = np.asarray(t, dtype=float)
        return self.n / (self.M**1.25 * (1.0 - t / self.n) ** self.K)

    def _factors(self, cell, t):
        u = np.asarray(t, dtype=float) / self.n
        a = 1.0 - u
        bp = 1.0 - self.M * self.delta_plus[cell] * u
        bm = 1.0 - self.M * self.delta_minus[cell] * u
        return a, bp, bm

    def r(self, y: int, cell: int, t):
        a, bp, bm = self._factors(cell, t)
        return self.initial("row", y, cell) * a * bp * bm

    def c(self, x: int, cell: int, t):
        a, bp, bm = self._factors(cell, t)
        return self.initial("col", x, cell) * a * bp * bm

    def d_plus(self, s: int, cell: int, t):
        a, bp, bm = self._factors(cell, t)
        return self.initial("plus", s, cell) * a * a * bm

    def d_minus(self, d: int, cell: int, t):
        a, bp, bm = self._factors(cell, t)
        return self.initial("minus", d, cell) * a * a * bp

    def z(self, cell, t):
        u = np.asarray(t, dtype=float) / self.n
        return self.n / self.M * (1.0 - self.M * self.delta_plus[cell] * u)

    def expected(self, kind: str, line: int, cell: int, t):
        fn = {"row": self.r, "col": self.c, "plus": self.d_plus, "minus": self.d_minus}[kind]
        return fn(line, cell, t)


class _Tracker:
    """Counts safe positions for sampled (line, cell) pairs and all ``Z_alpha``."""

    def __init__(self, traj: Trajectory, rng: np.random.Generator, n_pairs: int):
        n = traj.n
        part = traj.partition
        self.n = n
        pairs = []
        self._pos = []
        amap = part.cell_of
        for _ in range(n_pairs):
            kind = LINE_KINDS[int(rng.integers(4))]
            x, y = (int(v) for v in rng.integers(1, n + 1, size=2))
            cell = int(amap[x - 1, y - 1])
            line = {"row": y, "col": x, "plus": x + y, "minus": y - x}[kind]
            pairs.append((kind, line, cell))
            xs, ys = np.nonzero(amap == cell)
            xs, ys = xs + 1, ys + 1
            on = {"row": ys == line, "col": xs == line, "plus": xs + ys == line, "minus": ys - xs == line}[kind]
            self._pos.append((kind, xs[on], ys[on]))
        self.pairs = pairs
        # distinct (cell, plus-diagonal) incidences for Z
        ids = part.cell_of.ravel()
        X, Y = np.indices((n, n)) + 1
        inc = np.unique(np.stack([ids, (X + Y).ravel()], axis=1), axis=0)
        self._z_cell = inc[:, 0]
        self._z_diag = inc[:, 1]
        self._n_cells = part.n_cells

    def snapshot(self, state: BoardState):
        n = self.n
        row = np.frombuffer(state.row_occ, dtype=np.uint8)
        col = np.frombuffer(state.col_occ, dtype=np.uint8)
        plus = np.frombuffer(state.plus_occ, dtype=np.uint8)
        minus = np.frombuffer(state.minus_occ, dtype=np.uint8)
        vals = []
        for kind, xs, ys in self._pos:
            free_r = row[ys] == 0
            free_c = col[xs] == 0
            free_p = plus[xs + ys] == 0
            free_m = minus[ys - xs + n] == 0
            if kind == "row":
                ok = free_c & free_p & free_m
            elif kind == "col":
                ok = free_r & free_p & free_m
            elif kind == "plus":
                ok = free_r & free_c & free_m
            else:
                ok = free_r & free_c & free_p
            vals.append(int(ok.sum()))
        z = np.bincount(self._z_cell, weights=(plus[self._z_diag] == 0), minlength=self._n_cells)
        return vals, z.astype(int).tolist()


def _checkpoints(T: int, k: int = TRACE_POINTS) -> list[int]:
    return sorted(set(int(round(v)) for v in np.linspace(0, T, k)))


def random_phase(params: PhaseParams, seed: int = 0, trial: int = 0, trace: bool = False,
                 partition: BoardPartition | None = None,
                 rng: np.random.Generator | None = None) -> tuple[BoardState, RunStats]:
    """Run the random placement phase for ``params.horizon`` steps.

    Returns the final board and its :class:`RunStats`.  When a drawn cell has
    no available square the run stops and ``abort_step`` records the
    (1-based) step; this is data, not an error.
    """
    n, M, T = params.n, params.big_m, params.horizon
    delta = build_delta(params.base, params.rho)
    part = partition if partition is not None else BoardPartition(n, M)
    if part.n != n or part.n_steps != M:
        raise ValueError("partition does not match the parameters")
    if np.any(part.sizes == 0):
        raise ValueError(f"n={n} is too small: some I_{M} cells contain no board square")
    probs = cell_masses(delta, M)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    if rng is None:
        rng = trial_rng(seed, trial)
    draws = rng.choice(part.n_cells, size=T, p=probs)
    draw_counts = np.bincount(draws, minlength=part.n_cells)

    tracker = traj = None
    tr = None
    if trace:
        traj = Trajectory(delta, n, M, params.k_exponent, part)
        tracker = _Tracker(traj, trial_rng(seed, trial, stream=1), TRACE_PAIRS)
        tr = Trace(pairs=tracker.pairs)
        marks = set(_checkpoints(T))

    state = BoardState(n)
    row, col, plus, minus = state.row_occ, state.col_occ, state.plus_occ, state.minus_occ
    cell_counts = np.zeros(part.n_cells, dtype=np.int64)
    abort_step = None
    order = []

    def record(t):
        vals, z = tracker.snapshot(state)
        tr.checkpoints.append(t)
        tr.values.append(vals)
        tr.z_values.append(z)

    if trace and 0 in marks:
        record(0)
    for t in range(1, T + 1):
        cell = int(draws[t - 1])
        xs, ys = part.positions(cell)
        size = len(xs)
        choice = None
        for _ in range(4 * size):
            i = int(rng.integers(size))
            x, y = int(xs[i]), int(ys[i])
            if not (row[y] or col[x] or plus[x + y] or minus[y - x + n]):
                choice = (x, y)
                break
        if choice is None:
            avail = state.available_in_region(cell, part)
            if not avail:
                abort_step = t
                break
            choice = tuple(avail[int(rng.integers(len(avail)))])
        state.place(*choice)
        order.append(choice)
        cell_counts[cell] += 1
        if trace and t in marks:
            record(t)

    stats = RunStats(
        seed=seed,
        trial=trial,
        params=params.describe(),
        placed=len(state),
        abort_step=abort_step,
        draw_counts=draw_counts,
        cell_counts=cell_counts,
        queens=state.config(),
        order=order,
        trace=tr,
    )
    return state, stats


@dataclass(frozen=True)
class HistogramReport:
    deviations: np.ndarray
    max_deviation: float
    threshold: float
    passed: bool


def cell_histogram_check(counts, delta: StepQueenon, n: int, threshold: float = 0.05,
                         N: int | None = None) -> HistogramReport:
    """Per-cell deviation ``|count - delta(alpha) n| / n`` on ``I_N``.

    ``counts`` are queen counts per ``I_N`` cell (``N`` defaults to the
    resolution of ``delta``).  The pass flag compares the largest deviation
    with ``threshold``.
    """
    N = delta.n_steps if N is None else N
    expected = cell_masses(delta, N) * n
    counts = np.asarray(counts, dtype=float)
    if counts.shape != expected.shape:
        raise ValueError(f"expected {expected.size} cell counts for N={N}")
    dev = np.abs(counts - expected) / n
    worst = float(dev.max())
    return HistogramReport(dev, worst, threshold, worst <= threshold)


def trajectory_report(trace: Trace | None, traj: Trajectory) -> float:
    """Largest ``|X(t) - x(t)| / E(t)`` over checkpoints and tracked counts."""
    if trace is None:
        raise ValueError("run was executed without tracing")
    worst = 0.0
    cells = np.arange(len(traj.delta_plus))
    for t, vals, z in zip(trace.checkpoints, trace.values, trace.z_values):
        E = float(traj.E(t))
        for (kind, line, cell), v in zip(trace.pairs, vals):
            worst = max(worst, abs(v - float(traj.expected(kind, line, cell, t))) / E)
        zdev = np.abs(np.asarray(z, dtype=float) - traj.z(cells, t)) / E
        worst = max(worst, float(zdev.max()))
    return worst
