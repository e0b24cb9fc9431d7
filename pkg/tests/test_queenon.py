import json

import numpy as np
import pytest
import shapely
from shapely.geometry import Polygon, box

from conftest import random_queenon
from queenon.optimize import a12_matrix
from queenon.queenon import (
    QueenonError,
    band_masses,
    cell_geometry,
    cell_index_map,
    cell_masses,
    config_queenon,
    density_csv,
    diag_marginals,
    dist_cell_bound,
    dist_step,
    empirical,
    from_matrix,
    kappa,
    load_queenon,
    mix,
    refine,
    save_queenon,
    triangle_masses,
    uniform,
)

KAPPA = np.array([[0.9, 1.2, 0.9], [1.2, 0.6, 1.2], [0.9, 1.2, 0.9]])


def _rotated(a, b, c, d):
    """Polygon {a <= x + y <= b, c <= y - x <= d}."""
    pts = [((s - t) / 2, (s + t) / 2) for s, t in ((a, c), (b, c), (b, d), (a, d))]
    return Polygon(pts)


def _cell_polygon(geo, k):
    N = geo.n_steps
    p, m = geo.cells[k]
    R = _rotated(-1 + (p - 1) / N, -1 + p / N, -1 + (m - 1) / N, -1 + m / N)
    return R.intersection(box(-0.5, -0.5, 0.5, 0.5))


def _triangle_polygon(N, i, j, side):
    x0, y0 = -0.5 + i / N, -0.5 + j / N
    x1, y1 = x0 + 1 / N, y0 + 1 / N
    c = ((x0 + x1) / 2, (y0 + y1) / 2)
    edge = [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))][side]
    return Polygon([edge[0], edge[1], c])


def _exact_mass(G, polys):
    """Exact masses of shapely polygons under a step density (oracle)."""
    N = G.shape[0]
    total = np.zeros(len(polys))
    for i in range(N):
        for j in range(N):
            sq = box(-0.5 + i / N, -0.5 + j / N, -0.5 + (i + 1) / N, -0.5 + (j + 1) / N)
            total += G[i, j] * shapely.area(shapely.intersection(polys, sq))
    return total


# ---------------------------------------------------------------------------
# geometry


@pytest.mark.parametrize("N", [1, 2, 3, 5, 12])
def test_geometry_counts(N):
    geo = cell_geometry(N)
    assert geo.n_cells == 2 * N * N + 2 * N
    assert int((~geo.is_square).sum()) == 4 * N
    assert len(geo.tri_cell) == 4 * N * N
    assert geo.area.sum() == pytest.approx(1.0, abs=1e-14)
    # a square holds 2 triangles and a half-square 1 (area 1/(4N^2) each)
    per_cell = np.bincount(geo.tri_cell, minlength=geo.n_cells)
    assert np.allclose(per_cell / (4.0 * N * N), geo.area)


@pytest.mark.parametrize("N", [2, 3])
def test_geometry_against_shapely(N):
    geo = cell_geometry(N)
    polys = [_cell_polygon(geo, k) for k in range(geo.n_cells)]
    assert np.allclose([p.area for p in polys], geo.area)
    for t in range(4 * N * N):
        tri = _triangle_polygon(N, geo.tri_x[t], geo.tri_y[t], t % 4)
        assert tri.area == pytest.approx(1 / (4 * N * N))
        cell = polys[geo.tri_cell[t]]
        assert cell.buffer(1e-12).contains(tri)
        cx, cy = tri.centroid.x, tri.centroid.y
        assert -1 + (geo.tri_plus[t] - 1) / N < cx + cy < -1 + geo.tri_plus[t] / N
        assert -1 + (geo.tri_minus[t] - 1) / N < cy - cx < -1 + geo.tri_minus[t] / N
    for k in range(geo.n_cells):
        x, y = geo.center(k)
        assert polys[k].centroid.x == pytest.approx(x) or not geo.is_square[k]


# ---------------------------------------------------------------------------
# construction


def test_from_matrix_examples(a12):
    assert from_matrix(np.ones((4, 4))) == uniform(4)
    k = from_matrix(KAPPA)
    assert k == kappa() and not k.clamped
    raw = np.round(a12.density * 100).astype(int)
    assert np.all(raw.sum(axis=0) == 1200) and np.all(raw.sum(axis=1) == 1200)


def test_from_matrix_rejections():
    with pytest.raises(QueenonError, match="x-strip 0"):
        from_matrix([[1.5, 0.6], [0.5, 1.4]])
    with pytest.raises(QueenonError, match="negative"):
        from_matrix([[-1, 3], [3, -1]])
    # a permutation matrix concentrates the diagonal marginal
    with pytest.raises(QueenonError, match="minus-diagonal"):
        from_matrix(2 * np.eye(2))
    with pytest.raises(QueenonError):
        from_matrix(np.ones((2, 3)))


def test_from_matrix_tolerance_flags_clamp():
    e = 1e-11
    g = from_matrix([[1 + e, 1 - e], [1 - e, 1 + e]], tol=1e-9)
    assert g.clamped
    assert not from_matrix(np.ones((2, 2))).clamped
    with pytest.raises(QueenonError):
        from_matrix([[1 + 1e-6, 1 - 1e-6], [1 - 1e-6, 1 + 1e-6]], tol=1e-9)


def test_mix_examples(rng):
    g = random_queenon(rng, 4)
    assert np.allclose(mix(g, g, 0.3).density, g.density)
    assert mix(uniform(3), kappa(), 0.0) == uniform(3)
    expect = [[0.95, 1.1, 0.95], [1.1, 0.8, 1.1], [0.95, 1.1, 0.95]]
    assert np.allclose(mix(uniform(3), kappa(), 0.5).density, expect)
    assert mix(a12_matrix(), kappa(), 0.05).n_steps == 12
    assert mix(uniform(2), kappa(), 0.5).n_steps == 6
    with pytest.raises(QueenonError):
        mix(uniform(2), kappa(), 1.5)


def test_refine_preserves_masses(kap):
    r = refine(kap, 6)
    assert r.n_steps == 6
    assert np.allclose(cell_masses(r, 3), cell_masses(kap, 3))
    with pytest.raises(QueenonError):
        refine(kap, 4)


# ---------------------------------------------------------------------------
# masses


def test_triangle_masses_examples(kap, rng):
    assert np.allclose(triangle_masses(uniform(3)), 1 / 36)
    tm = triangle_masses(kap).reshape(3, 3, 4)
    assert np.allclose(tm[0, 0], 0.9 / 36) and np.allclose(tm[2, 2], 0.9 / 36)
    g = random_queenon(rng, 5)
    per_square = triangle_masses(g).reshape(5, 5, 4).sum(axis=2)
    assert np.allclose(per_square, g.density / 25)
    assert triangle_masses(g).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("N", [1, 2, 3, 6, 9])
def test_cell_masses_uniform(N):
    geo = cell_geometry(N)
    assert np.allclose(cell_masses(uniform(18), N), geo.area)


def test_cell_masses_kappa(kap):
    geo = cell_geometry(3)
    cm = cell_masses(kap, 3)
    # the board center is a common vertex of four square cells
    near = [c for c in range(geo.n_cells) if np.isclose(np.abs(geo.center(c)).sum(), 1 / 6)]
    assert len(near) == 4 and all(geo.is_square[near])
    assert np.allclose(cm[near], (1.2 + 0.6) / 36)
    corner = [c for c in range(geo.n_cells) if np.allclose(geo.center(c), (-1 / 3, -1 / 6))]
    assert cm[corner[0]] == pytest.approx((0.9 + 1.2) / 36)
    assert cm.sum() == pytest.approx(1.0)
    with pytest.raises(QueenonError, match="compatible"):
        cell_masses(kap, 2)


def test_cell_masses_against_shapely(rng):
    g = random_queenon(rng, 4)
    for N in (2, 4):
        geo = cell_geometry(N)
        polys = np.array([_cell_polygon(geo, k) for k in range(geo.n_cells)])
        assert np.allclose(cell_masses(g, N), _exact_mass(g.density, polys), atol=1e-12)


def test_cell_masses_sum_to_one(rng):
    for N in (2, 3, 6):
        assert cell_masses(random_queenon(rng, 6), N).sum() == pytest.approx(1.0)


def test_diag_marginals_uniform():
    plus, minus = diag_marginals(uniform(4))
    s = np.linspace(-1, 1, 41)
    assert np.allclose(plus.density(s), 1 - np.abs(s))
    assert np.allclose(plus.complement_density(s), np.abs(s))
    assert np.allclose(minus.density(s), 1 - np.abs(s))


def test_diag_marginal_invariants(rng, kap):
    g = random_queenon(rng, 5)
    for m in diag_marginals(g):
        assert np.all(m.band_mass <= 1 / 5 + 1e-12) and np.all(m.band_mass >= 0)
        assert m.band_mass.sum() == pytest.approx(1.0)
        assert m.complement_mass.sum() == pytest.approx(1.0)
        assert np.allclose(m.band_mass + m.complement_mass, 1 / 5)
        # linear density integrates to the band masses
        k = m.knots
        assert np.allclose((k[:-1] + k[1:]) / 10, m.band_mass)
    plus, minus = diag_marginals(kap)
    assert np.allclose(plus.band_mass, plus.band_mass[::-1])
    assert np.allclose(minus.band_mass, minus.band_mass[::-1])


def test_band_masses_against_shapely(rng):
    g = random_queenon(rng, 3)
    N = 3
    plus = np.array([_rotated(-1 + (p - 1) / N, -1 + p / N, -1, 1) for p in range(1, 2 * N + 1)])
    minus = np.array([_rotated(-1, 1, -1 + (m - 1) / N, -1 + m / N) for m in range(1, 2 * N + 1)])
    bp, bm = band_masses(g)
    assert np.allclose(bp, _exact_mass(g.density, plus))
    assert np.allclose(bm, _exact_mass(g.density, minus))


# ---------------------------------------------------------------------------
# configurations


def _oracle_index_map(n, N):
    # integer coordinates (scale 2nN, origin at the corner) keep touching exact
    geo = cell_geometry(N)
    S = 2 * n * N
    polys = []
    for p, m in geo.cells:
        a, b, c, d = (p - 1) * 2 * n, p * 2 * n, (m - 1) * 2 * n - S, m * 2 * n - S
        pts = [((s - t) // 2, (s + t) // 2) for s, t in ((a, c), (b, c), (b, d), (a, d))]
        polys.append(Polygon(pts).intersection(box(0, 0, S, S)))
    out = np.zeros((n, n), dtype=int)
    for x in range(1, n + 1):
        for y in range(1, n + 1):
            sq = box((x - 1) * 2 * N, (y - 1) * 2 * N, x * 2 * N, y * 2 * N)
            meets = [k for k in range(geo.n_cells) if polys[k].intersects(sq)]
            out[x - 1, y - 1] = min(meets, key=lambda k: geo.center(k))
    return out


@pytest.mark.parametrize("n,N", [(4, 1), (6, 2), (7, 3), (9, 3), (10, 4)])
def test_cell_index_map_against_shapely(n, N):
    assert np.array_equal(cell_index_map(n, N), _oracle_index_map(n, N))


def test_empirical_examples():
    e = empirical([(2, 1), (4, 2), (1, 3), (3, 4)], 4, 1)
    assert e.cell_counts.sum() == 4 and len(e.cell_counts) == 4
    fig2 = [(1, 4), (2, 7), (3, 1), (7, 3), (8, 8)]
    a = empirical(fig2, 8, 2, partial=True)
    b = empirical(fig2, 8, 2, partial=True)
    assert np.array_equal(a.cell_counts, b.cell_counts) and a.cell_counts.sum() == 5
    with pytest.raises(QueenonError):
        empirical(fig2, 8, 2)
    with pytest.raises(QueenonError, match="attack"):
        empirical([(1, 1), (2, 2)], 2, 1)


def test_config_queenon_is_valid():
    q = config_queenon([(2, 1), (4, 2), (1, 3), (3, 4)], 4)
    assert q.n_steps == 4 and q.density.sum() == 16


# ---------------------------------------------------------------------------
# distance


def test_dist_step_examples(kap, rng):
    assert dist_step(kap, kap, 6) == (0.0, 4 / 6)
    g1, g2 = random_queenon(rng, 4), random_queenon(rng, 4)
    assert dist_step(g1, g2, 8) == dist_step(g2, g1, 8)
    with pytest.raises(QueenonError):
        dist_step(kap, uniform(2), 4)


def _all_grid_rectangles(L):
    edges = np.linspace(-1, 1, 2 * L + 1)
    spans = [(a, b) for i, a in enumerate(edges) for b in edges[i + 1 :]]
    return np.array([_rotated(a, b, c, d) for a, b in spans for c, d in spans])


def test_dist_step_bruteforce_small_grid(rng):
    for g1, g2 in [(uniform(3), kappa()), (random_queenon(rng, 2), random_queenon(rng, 2))]:
        L = 6 if g1.n_steps == 3 else 4
        R = _all_grid_rectangles(L)
        G1 = refine(g1, L).density
        G2 = refine(g2, L).density
        brute = np.max(np.abs(_exact_mass(G1, R) - _exact_mass(G2, R)))
        lo, hi = dist_step(g1, g2, L)
        assert lo == pytest.approx(brute, abs=1e-12)
        assert hi == pytest.approx(lo + 4 / L)


def test_dist_step_monte_carlo_sup(kap):
    rng = np.random.default_rng(2024)
    u = uniform(3)
    lo, hi = dist_step(u, kap, 48)
    k = 100_000
    a, b = np.sort(rng.uniform(-1, 1, (2, k)), axis=0)
    c, d = np.sort(rng.uniform(-1, 1, (2, k)), axis=0)
    R = shapely.polygons(np.stack([
        np.stack([(a - c) / 2, (a + c) / 2], 1), np.stack([(b - c) / 2, (b + c) / 2], 1),
        np.stack([(b - d) / 2, (b + d) / 2], 1), np.stack([(a - d) / 2, (a + d) / 2], 1),
    ], axis=1))
    mc = np.max(np.abs(_exact_mass(u.density, R) - _exact_mass(kap.density, R)))
    assert mc <= hi
    assert mc >= lo - 4 / 48  # the grid optimum is within the bracket of the sampled sup


def test_dist_triangle_inequality(rng):
    for _ in range(10):
        a, b, c = (random_queenon(rng, 3) for _ in range(3))
        ab, bc, ac = (dist_step(p, q, 6)[0] for p, q in ((a, b), (b, c), (a, c)))
        assert ac <= ab + bc + 1e-12


def test_dist_cell_bound_examples():
    n10 = cell_geometry(10).n_cells
    z = np.zeros(n10)
    assert dist_cell_bound(z, z, 10, 1000) == pytest.approx(4.0)
    m1 = cell_masses(uniform(5))
    m2 = m1.copy()
    m2[0] += 0.01
    assert dist_cell_bound(m1, m2, 5) == pytest.approx(2.6)
    with pytest.raises(QueenonError):
        dist_cell_bound(z, z[:-1], 10, 1000)


def test_dist_cell_bound_covers_config_distance():
    from queenon.enumeration import sample_uniform
    from queenon.board import from_columns

    for seed in range(100):
        cfg = from_columns(sample_uniform(13, seed=seed))
        gq = config_queenon(cfg, 13)
        for N in (1, 13):
            counts = empirical(cfg, 13, N).cell_counts
            bound = dist_cell_bound(counts, cell_masses(gq, N) * 13, N, 13)
            assert bound >= dist_step(gq, gq, 13)[0]
        # against a different queenon the bound still covers the bracket
        counts = empirical(cfg, 13, 1).cell_counts
        assert dist_cell_bound(counts, cell_masses(uniform(1)) * 13, 1, 13) >= dist_step(gq, uniform(1), 13)[0]


# ---------------------------------------------------------------------------
# I/O


def test_json_roundtrip(tmp_path, a12):
    path = tmp_path / "a12.json"
    save_queenon(a12, path)
    data = json.loads(path.read_text())
    assert data["n_steps"] == 12 and len(data["density"]) == 12
    assert load_queenon(path) == a12
    path.write_text(json.dumps({"n_steps": 3, "density": [[1, 1], [1, 1]]}))
    with pytest.raises(QueenonError):
        load_queenon(path)


def test_density_csv(kap):
    rows = density_csv(kap.density).strip().split("\n")
    assert len(rows) == 3 and rows[1].split(",") == ["1.2", "0.6", "1.2"]
