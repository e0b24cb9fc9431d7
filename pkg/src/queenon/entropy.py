"""Entropy functionals of step queenons.

All logarithms are natural.  ``0 log 0`` is taken as 0 and values below
``ZERO`` are treated as exact zeros.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .queenon import (
    DiagMarginal,
    QueenonError,
    StepQueenon,
    band_masses,
    cell_geometry,
    cell_index_map,
    cell_masses,
    diag_marginals,
)

__all__ = [
    "EntropyReport",
    "MAX_ENTROPY",
    "xlogx",
    "discrete_kl",
    "kl_square",
    "kl_diag",
    "kl_diag_quad",
    "q_entropy",
    "q_entropy_quad",
    "q_entropy_discrete",
    "bw_entropy",
    "log_sum_identity",
    "line_sum_diagnostics",
]

ZERO = 1e-15
MAX_ENTROPY = 2.0 * math.log(2.0) - 3.0


def xlogx(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > ZERO, x, 1.0)
    return np.where(x > ZERO, x * np.log(safe), 0.0)


def discrete_kl(p) -> float:
    """``D({p_i}) = sum p_i log(k p_i)`` for a distribution on ``k`` atoms."""
    p = np.asarray(p, dtype=float)
    return float(np.sum(xlogx(p)) + p.sum() * math.log(p.size))


def kl_square(gamma: StepQueenon) -> float:
    """KL divergence of a step queenon from the uniform measure."""
    G = gamma.density
    return float(np.sum(xlogx(G))) / G.size


def _linear_piece(h0, h1, w: float) -> np.ndarray:
    """``int h log(2h)`` over a width-``w`` interval on which ``h`` is linear.

    Uses the antiderivative ``u^2 log(2u)/2 - u^2/4`` of ``u log(2u)``.  When
    the endpoint values are relatively close the difference quotient loses
    precision, so the mean is taken from a Taylor series at the midpoint.
    """
    h0 = np.asarray(h0, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    d = h1 - h0
    c = 0.5 * (h0 + h1)
    close = np.abs(d) <= 1e-3 * c
    const = 0.5 * math.log(2.0) - 0.25

    def F(u):
        return 0.5 * u * xlogx(u) + const * u * u

    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (F(h1) - F(h0)) / np.where(close, 1.0, d)
    safe = np.where(c > ZERO, c, 1.0)
    series = safe * np.log(2.0 * safe) + d * d / (24.0 * safe) + d**4 / (960.0 * safe**3)
    series = np.where(c > ZERO, series, 0.0)
    return w * np.where(close, series, exact)


def kl_diag(m: DiagMarginal) -> float:
    """KL divergence of the complement of a diagonal marginal from uniform
    on ``[-1, 1]``, evaluated exactly piece by piece."""
    h = m.complement_knots
    if np.any(h < -1e-9):
        k = int(np.argmin(h))
        raise QueenonError(f"{m.direction} complement density is negative near knot {k}")
    h = np.clip(h, 0.0, None)
    return float(np.sum(_linear_piece(h[:-1], h[1:], 1.0 / m.n_steps)))


def kl_diag_quad(m: DiagMarginal, epsabs: float = 1e-13) -> float:
    """Adaptive-quadrature value of :func:`kl_diag` (independent check)."""
    bp = m.breakpoints
    h = np.clip(m.complement_knots, 0.0, None)
    total = 0.0
    for a, b, ha, hb in zip(bp[:-1], bp[1:], h[:-1], h[1:]):
        def f(s, a=a, b=b, ha=ha, hb=hb):
            u = ha + (hb - ha) * (s - a) / (b - a)
            return u * math.log(2.0 * u) if u > ZERO else 0.0

        val, _ = integrate.quad(f, a, b, epsabs=epsabs, epsrel=1e-13, limit=200)
        total += val
    return total


@dataclass(frozen=True)
class EntropyReport:
    n_steps: int
    kl_square: float
    kl_plus: float
    kl_minus: float
    h_q: float
    discrete_n: int | None = None

    def to_json(self) -> dict:
        return asdict(self)


def q_entropy(gamma: StepQueenon) -> EntropyReport:
    """Exact Q-entropy of a step queenon."""
    plus, minus = diag_marginals(gamma)
    ks = kl_square(gamma)
    kp = kl_diag(plus)
    km = kl_diag(minus)
    return EntropyReport(gamma.n_steps, ks, kp, km, -ks - kp - km + MAX_ENTROPY)


def q_entropy_quad(gamma: StepQueenon) -> float:
    """Q-entropy with the diagonal terms by quadrature."""
    plus, minus = diag_marginals(gamma)
    return -kl_square(gamma) - kl_diag_quad(plus) - kl_diag_quad(minus) + MAX_ENTROPY


def q_entropy_discrete(gamma: StepQueenon, N: int) -> float:
    """Discrete Q-entropy ``H_q^N`` from ``I_N`` cell and ``J_N`` band masses."""
    geo = cell_geometry(N)
    cm = cell_masses(gamma, N)
    dn = float(np.sum(xlogx(cm) - cm * np.log(geo.area)))
    plus, minus = band_masses(gamma, N)
    dp = discrete_kl(1.0 / N - plus)
    dm = discrete_kl(1.0 / N - minus)
    return -dn - dp - dm + MAX_ENTROPY


def _bands_of_cells(masses: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    geo = cell_geometry(N)
    plus = np.bincount(geo.cells[:, 0] - 1, weights=masses, minlength=2 * N)
    minus = np.bincount(geo.cells[:, 1] - 1, weights=masses, minlength=2 * N)
    return plus, minus


def bw_entropy(mass_b, mass_w, N: int, tol: float = 1e-12) -> float:
    """``G^N`` of a black/white split given by two ``I_N`` cell-mass vectors.

    Every plus- and minus-band of each colour may carry at most ``1/(2N)``.
    """
    geo = cell_geometry(N)
    mb = np.asarray(mass_b, dtype=float)
    mw = np.asarray(mass_w, dtype=float)
    if mb.shape != (geo.n_cells,) or mw.shape != (geo.n_cells,):
        raise QueenonError(f"expected {geo.n_cells} cell masses for N={N}")
    if np.any(mb < -tol) or np.any(mw < -tol):
        raise QueenonError("negative colour mass")
    if abs(mb.sum() + mw.sum() - 1.0) > 1e-9:
        raise QueenonError("colour masses must sum to 1")
    half = 0.5 / N
    comp_plus, comp_minus = [], []
    for name, mass in (("black", mb), ("white", mw)):
        plus, minus = _bands_of_cells(mass, N)
        if np.any(plus > half + tol) or np.any(minus > half + tol):
            raise QueenonError(f"{name} band above half capacity 1/(2N)")
        comp_plus.append(half - plus)
        comp_minus.append(half - minus)
    d = 0.0
    for mass in (mb, mw):
        d += float(np.sum(xlogx(mass) + mass * np.log(2.0 / geo.area)))
    dp = discrete_kl(np.clip(np.concatenate(comp_plus), 0.0, None))
    dm = discrete_kl(np.clip(np.concatenate(comp_minus), 0.0, None))
    return -d - dp - dm + MAX_ENTROPY


def log_sum_identity(b: float, n: int, T: int) -> tuple[float, float, float]:
    """Compare ``sum_{t<T} b log(1 - b t / n)`` with its integral approximation.

    Returns ``(exact_sum, closed_form, bound)``; the gap between the first
    two never exceeds ``bound`` when ``(1 - 1/e) n <= T < n``.
    """
    if not 0.0 < b <= 1.0:
        raise ValueError(f"b must lie in (0, 1], got {b}")
    if not ((1.0 - 1.0 / math.e) * n <= T < n):
        raise ValueError(f"T={T} outside [(1-1/e) n, n) for n={n}")
    t = np.arange(T, dtype=float)
    exact = float(b * np.sum(np.log1p(-b * t / n)))
    closed = n * (-float(xlogx(1.0 - b)) - b)
    bound = 2.0 * (n - T) * abs(math.log(1.0 - T / n))
    return exact, closed, bound


@dataclass(frozen=True)
class LineSumReport:
    n: int
    n_steps: int
    row_dev: float
    col_dev: float
    plus_dev: float
    minus_dev: float
    row_totals_ok: bool


def line_sum_diagnostics(gamma: StepQueenon, n: int) -> LineSumReport:
    """Weighted line sums over the ``alpha_n`` partition of an ``n`` board.

    Reports the largest deviation of the row and column sums from ``1/n``
    and of the diagonal sums from ``N gamma^{+/-}(beta)/n`` where ``beta``
    is the band containing the diagonal's center line.
    """
    N = gamma.n_steps
    if n < N * N:
        raise ValueError(f"need n >= N^2 = {N * N}, got {n}")
    geo = cell_geometry(N)
    amap = cell_index_map(n, N)
    size = np.bincount(amap.ravel(), minlength=geo.n_cells).astype(float)
    w = np.divide(cell_masses(gamma, N), size, out=np.zeros(geo.n_cells), where=size > 0)
    W = w[amap]  # weight gamma(alpha)/|alpha_n| at every board square
    x, y = np.indices((n, n)) + 1
    rows = W.sum(axis=0)  # sum over x for each y
    cols = W.sum(axis=1)
    plus_sum = np.bincount((x + y - 2).ravel(), weights=W.ravel(), minlength=2 * n - 1)
    minus_sum = np.bincount((y - x + n - 1).ravel(), weights=W.ravel(), minlength=2 * n - 1)
    plus_b, minus_b = band_masses(gamma)
    c = np.arange(2, 2 * n + 1)
    s = (c - 1) / n - 1.0  # plus coordinate of the diagonal's center line
    band = np.clip(np.floor((s + 1.0) * N).astype(int), 0, 2 * N - 1)
    plus_dev = np.max(np.abs(plus_sum - N * plus_b[band] / n))
    dvals = np.arange(-(n - 1), n)
    dcoord = dvals / n
    band = np.clip(np.floor((dcoord + 1.0) * N).astype(int), 0, 2 * N - 1)
    minus_dev = np.max(np.abs(minus_sum - N * minus_b[band] / n))
    # each row is split exactly among the cells it meets
    counts = np.zeros((n, geo.n_cells))
    np.add.at(counts, (y.ravel() - 1, amap.ravel()), 1.0)
    totals_ok = bool(np.all(counts.sum(axis=1) == n))
    return LineSumReport(
        n, N,
        float(np.max(np.abs(rows - 1.0 / n))),
        float(np.max(np.abs(cols - 1.0 / n))),
        float(plus_dev),
        float(minus_dev),
        totals_ok,
    )
