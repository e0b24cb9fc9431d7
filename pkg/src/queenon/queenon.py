"""Step queenons, the diamond cell geometry, diagonal marginals and the
diamond-rectangle distance.

Coordinates
-----------
The unit square is ``[-1/2, 1/2]^2``.  A step queenon of resolution ``N`` is
stored as an ``N x N`` density matrix ``G`` where ``G[i, j]`` is the density on
the axis square with x-index ``i`` and y-index ``j`` (both 0-based here).

Diamond cells of ``I_N`` are labelled by a pair ``(p, m)`` with
``p, m in 1..2N``: ``p`` is the plus-band (``x + y``) and ``m`` the minus-band
(``y - x``) of ``J_N``.  Only pairs whose cell has positive area are kept.
Each axis square is cut by its two diagonals into four triangles; the triangle
list ``K_N`` has ``4 N^2`` entries ordered ``(i, j, side)`` with side in
bottom, right, top, left.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "QueenonError",
    "StepQueenon",
    "CellGeometry",
    "DiagMarginal",
    "EmpiricalMeasure",
    "cell_geometry",
    "from_matrix",
    "uniform",
    "kappa",
    "refine",
    "mix",
    "triangle_masses",
    "cell_masses",
    "band_masses",
    "diag_marginals",
    "cell_index_map",
    "empirical",
    "config_queenon",
    "dist_step",
    "dist_cell_bound",
    "load_queenon",
    "save_queenon",
    "density_csv",
]

DEFAULT_TOL = 1e-9

# side order inside an axis square: bottom, right, top, left
_SIDE_DP = np.array([0, 1, 1, 0])
_SIDE_DM = np.array([0, 0, 1, 1])


class QueenonError(ValueError):
    """Raised for invalid queenon data or incompatible resolutions."""


@dataclass(frozen=True, eq=False)
class StepQueenon:
    """An ``N``-step queenon given by its density matrix.

    Use :func:`from_matrix` to build a validated instance.
    """

    density: np.ndarray
    clamped: bool = False

    @property
    def n_steps(self) -> int:
        return self.density.shape[0]

    def __eq__(self, other):
        if not isinstance(other, StepQueenon):
            return NotImplemented
        return self.density.shape == other.density.shape and np.array_equal(
            self.density, other.density
        )

    def __hash__(self):
        return hash((self.density.shape, self.density.tobytes()))

    def to_json(self) -> dict:
        return {"n_steps": self.n_steps, "density": self.density.tolist()}


@dataclass(frozen=True)
class CellGeometry:
    """Index tables for ``I_N`` and ``K_N`` at one resolution.

    Attributes
    ----------
    n_steps : int
    cells : ndarray, shape (C, 2)
        ``(p, m)`` band labels of every cell with positive area.
    is_square : ndarray of bool, shape (C,)
        True for full squares, False for boundary half-squares.
    area : ndarray, shape (C,)
        ``1/(2N^2)`` for squares, ``1/(4N^2)`` for half-squares.
    cell_id : ndarray, shape (2N+1, 2N+1)
        Lookup from ``(p, m)`` to cell index, ``-1`` where no cell exists.
    tri_plus, tri_minus, tri_cell : ndarray, shape (4N^2,)
        Plus band, minus band and cell index of every triangle.
    tri_x, tri_y : ndarray, shape (4N^2,)
        0-based axis-square indices of every triangle.
    """

    n_steps: int
    cells: np.ndarray
    is_square: np.ndarray
    area: np.ndarray
    cell_id: np.ndarray
    tri_plus: np.ndarray
    tri_minus: np.ndarray
    tri_cell: np.ndarray
    tri_x: np.ndarray
    tri_y: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_bands(self) -> int:
        return 2 * self.n_steps

    def center(self, cell: int) -> tuple[float, float]:
        """Center point ``(x, y)`` of a cell."""
        p, m = self.cells[cell]
        N = self.n_steps
        return (p - m) / (2 * N), (p + m - 1) / (2 * N) - 1.0

    def cell_plus(self) -> np.ndarray:
        return self.cells[:, 0]

    def cell_minus(self) -> np.ndarray:
        return self.cells[:, 1]


@lru_cache(maxsize=64)
def cell_geometry(N: int) -> CellGeometry:
    """Build (and cache) the ``I_N`` / ``K_N`` tables for resolution ``N``."""
    if N < 1:
        raise QueenonError("resolution must be positive")
    p, m = np.meshgrid(np.arange(1, 2 * N + 1), np.arange(1, 2 * N + 1), indexing="ij")
    a = p - m
    b = p + m - 1 - 2 * N
    keep = (np.abs(a) <= N) & (np.abs(b) <= N)
    cells = np.stack([p[keep], m[keep]], axis=1)
    # lexicographic order of centers: by x ~ p - m, then y ~ p + m
    order = np.lexsort((cells[:, 0] + cells[:, 1], cells[:, 0] - cells[:, 1]))
    cells = cells[order]
    ca = cells[:, 0] - cells[:, 1]
    cb = cells[:, 0] + cells[:, 1] - 1 - 2 * N
    is_square = (np.abs(ca) < N) & (np.abs(cb) < N)
    area = np.where(is_square, 1.0 / (2 * N * N), 1.0 / (4 * N * N))
    cell_id = -np.ones((2 * N + 2, 2 * N + 2), dtype=np.int64)
    cell_id[cells[:, 0], cells[:, 1]] = np.arange(len(cells))

    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    i = np.repeat(i.ravel(), 4)
    j = np.repeat(j.ravel(), 4)
    side = np.tile(np.arange(4), N * N)
    # with 1-based square indices (I, J): p = I + J - 1 + dp, m = J - I + N + dm
    tri_plus = (i + 1) + (j + 1) - 1 + _SIDE_DP[side]
    tri_minus = (j + 1) - (i + 1) + N + _SIDE_DM[side]
    tri_cell = cell_id[tri_plus, tri_minus]
    if np.any(tri_cell < 0):
        raise AssertionError("triangle outside the cell lattice")
    geo = CellGeometry(
        n_steps=N,
        cells=cells,
        is_square=is_square,
        area=area,
        cell_id=cell_id,
        tri_plus=tri_plus,
        tri_minus=tri_minus,
        tri_cell=tri_cell,
        tri_x=i,
        tri_y=j,
    )
    for arr in (cells, is_square, area, cell_id, tri_plus, tri_minus, tri_cell, i, j):
        arr.setflags(write=False)
    return geo


# ---------------------------------------------------------------------------
# construction and validation


def _knot_sums(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Anti-diagonal and diagonal sums of ``G`` indexed by knot ``k = 0..2N``.

    The plus-marginal density at ``s = -1 + k/N`` is ``plus[k] / N`` and the
    minus-marginal density at ``d = -1 + k/N`` is ``minus[k] / N``.
    """
    N = G.shape[0]
    i, j = np.indices(G.shape)
    plus = np.zeros(2 * N + 1)
    minus = np.zeros(2 * N + 1)
    # 0-based (i, j): plus knot i + j + 1, minus knot j - i + N
    np.add.at(plus, (i + j + 1).ravel(), G.ravel())
    np.add.at(minus, (j - i + N).ravel(), G.ravel())
    return plus, minus


def from_matrix(G, tol: float = DEFAULT_TOL) -> StepQueenon:
    """Validate a density matrix and wrap it as a :class:`StepQueenon`.

    Row and column sums must be ``N`` within ``tol``.  Both diagonal
    marginal densities must be at most 1 within ``tol`` (this is the
    sub-uniformity condition for strips of every width, and implies that each
    ``J_N`` band carries mass at most ``1/N``).  Overshoots inside ``tol`` are
    not altered; they are recorded in the ``clamped`` flag.
    """
    G = np.array(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
        raise QueenonError(f"density must be a non-empty square matrix, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise QueenonError("density has non-finite entries")
    if np.any(G < 0):
        i, j = np.argwhere(G < 0)[0]
        raise QueenonError(f"negative density at ({i}, {j})")
    N = G.shape[0]
    rows = G.sum(axis=1)
    cols = G.sum(axis=0)
    bad = np.flatnonzero(np.abs(rows - N) > tol * N)
    if bad.size:
        raise QueenonError(f"x-strip {bad[0]} has sum {float(rows[bad[0]])!r}, expected {N}")
    bad = np.flatnonzero(np.abs(cols - N) > tol * N)
    if bad.size:
        raise QueenonError(f"y-strip {bad[0]} has sum {float(cols[bad[0]])!r}, expected {N}")
    plus, minus = _knot_sums(G)
    for name, knots in (("plus", plus), ("minus", minus)):
        bad = np.flatnonzero(knots > N * (1 + tol))
        if bad.size:
            k = bad[0]
            raise QueenonError(
                f"{name}-diagonal marginal exceeds uniform at knot {k}: "
                f"density {float(knots[k] / N)!r} > 1"
            )
    clamped = bool(np.any(plus > N) or np.any(minus > N))
    G.setflags(write=False)
    return StepQueenon(G, clamped=clamped)


def uniform(N: int = 1) -> StepQueenon:
    return from_matrix(np.ones((N, N)))


def kappa() -> StepQueenon:
    """The 3-step queenon with density 0.6 in the middle and 1.2 on edges."""
    return from_matrix(
        [[0.9, 1.2, 0.9], [1.2, 0.6, 1.2], [0.9, 1.2, 0.9]]
    )


def refine(gamma: StepQueenon, N: int) -> StepQueenon:
    """Return the same measure written at resolution ``N`` (a multiple)."""
    if N % gamma.n_steps:
        raise QueenonError(f"cannot refine resolution {gamma.n_steps} to {N}")
    k = N // gamma.n_steps
    if k == 1:
        return gamma
    G = np.kron(gamma.density, np.ones((k, k)))
    G.setflags(write=False)
    return StepQueenon(G, clamped=gamma.clamped)


def mix(gamma1: StepQueenon, gamma2: StepQueenon, rho: float) -> StepQueenon:
    """Convex combination ``(1 - rho) * gamma1 + rho * gamma2`` on the LCM grid."""
    if not 0.0 <= rho <= 1.0:
        raise QueenonError(f"mixing weight must lie in [0, 1], got {rho}")
    N = math.lcm(gamma1.n_steps, gamma2.n_steps)
    G1 = refine(gamma1, N).density
    G2 = refine(gamma2, N).density
    return from_matrix((1.0 - rho) * G1 + rho * G2)


def _at_resolution(gamma: StepQueenon, N: int) -> StepQueenon:
    """Bring ``gamma`` to a resolution where ``I_N`` masses are exact."""
    if gamma.n_steps % N == 0:
        return gamma
    if N % gamma.n_steps == 0:
        return refine(gamma, N)
    raise QueenonError(
        f"resolution {N} is not compatible with a {gamma.n_steps}-step queenon "
        "(one must divide the other)"
    )


# ---------------------------------------------------------------------------
# derived masses


def triangle_masses(gamma: StepQueenon) -> np.ndarray:
    """Masses of the ``4 N^2`` triangles of ``K_N`` (see module docstring)."""
    N = gamma.n_steps
    return np.repeat(gamma.density.ravel(), 4) / (4.0 * N * N)


def cell_masses(gamma: StepQueenon, N: int | None = None) -> np.ndarray:
    """Exact masses of the cells of ``I_N``, ordered as in ``cell_geometry(N)``.

    ``N`` must divide the resolution of ``gamma`` or be a multiple of it (in
    which case ``gamma`` is refined first, which is exact).
    """
    if N is None:
        N = gamma.n_steps
    g = _at_resolution(gamma, N)
    fine = cell_geometry(g.n_steps)
    k = g.n_steps // N
    geo = cell_geometry(N)
    tm = triangle_masses(g)
    p = (fine.tri_plus + k - 1) // k
    m = (fine.tri_minus + k - 1) // k
    ids = geo.cell_id[p, m]
    return np.bincount(ids, weights=tm, minlength=geo.n_cells)


def band_masses(gamma: StepQueenon, N: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Plus and minus masses of the ``2N`` bands of ``J_N``."""
    if N is None:
        N = gamma.n_steps
    g = _at_resolution(gamma, N)
    fine = cell_geometry(g.n_steps)
    k = g.n_steps // N
    tm = triangle_masses(g)
    p = (fine.tri_plus + k - 1) // k
    m = (fine.tri_minus + k - 1) // k
    plus = np.bincount(p - 1, weights=tm, minlength=2 * N)
    minus = np.bincount(m - 1, weights=tm, minlength=2 * N)
    return plus, minus


@dataclass(frozen=True)
class DiagMarginal:
    """One diagonal marginal of a step queenon.

    ``knots`` holds the marginal density at ``-1 + k/N`` for ``k = 0..2N``;
    between knots the density is linear.  The complement measure has density
    ``1 - knots``.
    """

    direction: str
    band_mass: np.ndarray
    knots: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.band_mass) // 2

    @property
    def complement_mass(self) -> np.ndarray:
        return 1.0 / self.n_steps - self.band_mass

    @property
    def complement_knots(self) -> np.ndarray:
        return 1.0 - self.knots

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, 2 * self.n_steps + 1)

    def density(self, s):
        """Marginal density at ``s`` (vectorised)."""
        return np.interp(s, self.breakpoints, self.knots)

    def complement_density(self, s):
        return 1.0 - self.density(s)


def diag_marginals(gamma: StepQueenon) -> tuple[DiagMarginal, DiagMarginal]:
    N = gamma.n_steps
    plus_k, minus_k = _knot_sums(gamma.density)
    plus_b, minus_b = band_masses(gamma)
    return (
        DiagMarginal("plus", plus_b, plus_k / N),
        DiagMarginal("minus", minus_b, minus_k / N),
    )


# ---------------------------------------------------------------------------
# configurations


@lru_cache(maxsize=32)
def cell_index_map(n: int, N: int) -> np.ndarray:
    """The assignment ``(x, y) -> alpha^N(x, y)`` as an ``n x n`` array.

    Entry ``[x - 1, y - 1]`` is the index (in ``cell_geometry(N)`` order) of the
    cell that meets the closed board square ``(x, y)`` and has the
    lexicographically smallest center.  Cells are ordered by center already,
    so this is the smallest meeting index.
    """
    geo = cell_geometry(N)
    # work in units of 1/(nN) in the coordinates u + v and v - u + 1 where
    # u = x + 1/2, v = y + 1/2 range over [0, 1]
    x, y = np.indices((n, n)) + 1
    s0 = (x + y - 1) * N  # diamond center of the board square, plus coordinate
    d0 = (y - x + n) * N  # minus coordinate, shifted by +1
    best = np.full((n, n), np.iinfo(np.int64).max, dtype=np.int64)
    span = 2 * N // n + 3
    p_lo = np.maximum(1, (s0 - N) // n)
    m_lo = np.maximum(1, (d0 - N) // n)
    for dp in range(span):
        p = p_lo + dp
        lo_s, hi_s = (p - 1) * n, p * n
        ds = np.maximum(0, np.maximum(lo_s - s0, s0 - hi_s))
        for dm in range(span):
            m = m_lo + dm
            lo_d, hi_d = (m - 1) * n, m * n
            dd = np.maximum(0, np.maximum(lo_d - d0, d0 - hi_d))
            valid = (p <= 2 * N) & (m <= 2 * N) & (ds + dd <= N)
            ids = np.where(valid, geo.cell_id[np.minimum(p, 2 * N + 1), np.minimum(m, 2 * N + 1)], -1)
            ok = valid & (ids >= 0)
            best = np.where(ok & (ids < best), ids, best)
    if np.any(best == np.iinfo(np.int64).max):
        raise AssertionError("board square without a cell")
    best.setflags(write=False)
    return best


@dataclass(frozen=True)
class EmpiricalMeasure:
    n: int
    n_steps: int
    config: tuple
    cell_counts: np.ndarray = field(repr=False)

    @property
    def frequencies(self) -> np.ndarray:
        return self.cell_counts / self.n


def _check_config(config, n: int, partial: bool = False) -> np.ndarray:
    q = np.asarray(list(config), dtype=np.int64).reshape(-1, 2)
    if len(q) != n and not (partial and len(q) <= n):
        raise QueenonError(f"expected {n} queens, got {len(q)}")
    if np.any(q < 1) or np.any(q > n):
        raise QueenonError("queen outside the board")
    for key in (q[:, 0], q[:, 1], q[:, 0] + q[:, 1], q[:, 1] - q[:, 0]):
        if len(np.unique(key)) != len(key):
            raise QueenonError("queens attack each other")
    return q


def empirical(config, n: int, N: int, partial: bool = False) -> EmpiricalMeasure:
    """Cell counts ``|alpha_n cap q|`` of an n-queens configuration on ``I_N``.

    ``partial=True`` also accepts partial configurations.
    """
    q = _check_config(config, n, partial)
    amap = cell_index_map(n, N)
    counts = np.bincount(amap[q[:, 0] - 1, q[:, 1] - 1], minlength=cell_geometry(N).n_cells)
    return EmpiricalMeasure(n, N, tuple(map(tuple, q.tolist())), counts)


def config_queenon(config, n: int) -> StepQueenon:
    """The measure ``gamma_q``: density ``n`` on each queen's board square."""
    q = _check_config(config, n)
    G = np.zeros((n, n))
    G[q[:, 0] - 1, q[:, 1] - 1] = n
    return from_matrix(G)


# ---------------------------------------------------------------------------
# distance


def _rotated_masses(gamma: StepQueenon, L: int) -> np.ndarray:
    """``2L x 2L`` array of cell masses indexed by ``(p - 1, m - 1)``."""
    geo = cell_geometry(L)
    out = np.zeros((2 * L, 2 * L))
    out[geo.cells[:, 0] - 1, geo.cells[:, 1] - 1] = cell_masses(gamma, L)
    return out


def _max_abs_rectangle(A: np.ndarray) -> float:
    """Largest ``|sum|`` over contiguous index rectangles of ``A``."""
    P = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
    P[1:, 1:] = A.cumsum(0).cumsum(1)
    best = 0.0
    for i1 in range(A.shape[0]):
        # strip sums over rows i1..i2, prefix-summed along columns
        strips = P[i1 + 1 :] - P[i1]
        best = max(best, float(np.max(strips.max(axis=1) - strips.min(axis=1))))
    return best


def dist_step(gamma1: StepQueenon, gamma2: StepQueenon, L: int | None = None):
    """Bracket ``(lower, upper)`` on the diamond-rectangle distance.

    ``lower`` is the exact maximum of ``|gamma1(R) - gamma2(R)|`` over all
    rectangles ``R`` in ``(x + y, y - x)`` coordinates whose sides lie on the
    ``1/L`` grid; ``upper = lower + 4/L``.  ``L`` must be a common multiple of
    both resolutions (default: their LCM).
    """
    base = math.lcm(gamma1.n_steps, gamma2.n_steps)
    if L is None:
        L = base
    if L % base:
        raise QueenonError(f"grid L={L} must be a multiple of both resolutions ({base})")
    diff = _rotated_masses(gamma1, L) - _rotated_masses(gamma2, L)
    lower = _max_abs_rectangle(diff)
    return lower, lower + 4.0 / L


def dist_cell_bound(counts1, counts2, N: int, n: int | None = None) -> float:
    """Certified upper bound on the distance from per-cell discrepancies.

    With ``n=None`` the inputs are ``I_N`` masses of two queenons and the
    bound is ``8/N + 4 N^2 eps`` with ``eps`` the largest cell gap.  With a
    board size ``n`` the inputs are cell counts of a configuration and the
    expected counts ``gamma(alpha) n`` of a queenon, ``eps`` is the largest
    gap divided by ``n`` and the bound is ``4 N^2 (eps + 8/n) + 8/N``.
    """
    c1 = np.asarray(counts1, dtype=float)
    c2 = np.asarray(counts2, dtype=float)
    n_cells = cell_geometry(N).n_cells
    if c1.shape != (n_cells,) or c2.shape != (n_cells,):
        raise QueenonError(f"expected {n_cells} cell values for N={N}")
    gap = float(np.max(np.abs(c1 - c2))) if n_cells else 0.0
    if n is None:
        return 8.0 / N + 4.0 * N * N * gap
    return 4.0 * N * N * (gap / n + 8.0 / n) + 8.0 / N


# ---------------------------------------------------------------------------
# I/O


def save_queenon(gamma: StepQueenon, path) -> None:
    Path(path).write_text(json.dumps(gamma.to_json()))


def load_queenon(path, tol: float = DEFAULT_TOL) -> StepQueenon:
    data = json.loads(Path(path).read_text())
    gamma = from_matrix(data["density"], tol=tol)
    if data.get("n_steps", gamma.n_steps) != gamma.n_steps:
        raise QueenonError("n_steps does not match the density shape")
    return gamma


def density_csv(G) -> str:
    """CSV text of an ``N x N`` density grid, one line per x-index."""
    G = np.asarray(G, dtype=float)
    return "\n".join(",".join(repr(float(v)) for v in row) for row in G) + "\n"
