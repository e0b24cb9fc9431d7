"""Certified bounds on the maximum Q-entropy.

Upper bounds come from the Lagrangian dual of a finite entropy-maximization
problem over the triangle refinement ``K_N``; lower bounds come from explicit
step queenons, whose exact Q-entropy is a valid lower bound by feasibility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .entropy import MAX_ENTROPY, q_entropy, xlogx
from .queenon import (
    QueenonError,
    StepQueenon,
    band_masses,
    cell_geometry,
    diag_marginals,
    from_matrix,
    triangle_masses,
    uniform,
)

__all__ = [
    "ConstraintSystem",
    "Certificate",
    "CertificateError",
    "InadmissibleDual",
    "build_constraints",
    "primal_feasible_from",
    "objective_f",
    "dual_value",
    "is_admissible",
    "minimize_dual",
    "maximize_primal",
    "a12_matrix",
    "verify_certificate",
    "lower_certificate",
    "load_certificate",
    "save_certificate",
]

VERIFY_TOL = 1e-9

_A12_HALF = [
    [59, 76, 95, 113, 125, 132, 132, 125, 113, 95, 76, 59],
    [76, 87, 99, 108, 114, 116, 116, 114, 108, 99, 87, 76],
    [95, 99, 100, 102, 102, 102, 102, 102, 102, 100, 99, 95],
    [113, 108, 102, 94, 92, 91, 91, 92, 94, 102, 108, 113],
    [125, 114, 102, 92, 85, 82, 82, 85, 92, 102, 114, 125],
    [132, 116, 102, 91, 82, 77, 77, 82, 91, 102, 116, 132],
]


def a12_matrix() -> StepQueenon:
    """The explicit 12-step queenon with Q-entropy just above -1.9449."""
    A = np.array(_A12_HALF + _A12_HALF[::-1], dtype=float) / 100.0
    return from_matrix(A)


class CertificateError(ValueError):
    pass


class InadmissibleDual(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSystem:
    """Linear system ``A x = b`` over ``Omega = K_N + J_N^1 + J_N^2``.

    Rows: ``N`` x-strips, ``N`` y-strips, ``2N`` plus-bands, ``2N``
    minus-bands.  Columns: the ``4N^2`` triangles in ``cell_geometry`` order,
    then ``2N`` plus-complement and ``2N`` minus-complement variables.
    """

    n_steps: int
    a_matrix: sp.csr_matrix
    b_vector: np.ndarray

    @property
    def omega_size(self) -> int:
        return self.a_matrix.shape[1]

    @property
    def n_triangles(self) -> int:
        return 4 * self.n_steps**2

    @property
    def constant(self) -> float:
        return -4.0 * math.log(2 * self.n_steps) + MAX_ENTROPY


def build_constraints(N: int) -> ConstraintSystem:
    if N < 2:
        raise ValueError("N must be at least 2")
    geo = cell_geometry(N)
    nK, nJ = 4 * N * N, 2 * N
    k = np.arange(nK)
    j = np.arange(nJ)
    rows = np.concatenate([
        geo.tri_x,
        N + geo.tri_y,
        2 * N + geo.tri_plus - 1,
        4 * N + geo.tri_minus - 1,
        2 * N + j,
        4 * N + j,
    ])
    cols = np.concatenate([k, k, k, k, nK + j, nK + nJ + j])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(6 * N, nK + 2 * nJ))
    sys = ConstraintSystem(N, A, np.full(6 * N, 1.0 / N))
    xu = primal_feasible_from(uniform(N))
    if np.max(np.abs(A @ xu - sys.b_vector)) > 1e-12:
        raise AssertionError("uniform point violates the constraint system")
    return sys


def primal_feasible_from(gamma: StepQueenon, tol: float = VERIFY_TOL) -> np.ndarray:
    """The point ``(triangle masses, plus complements, minus complements)``."""
    N = gamma.n_steps
    plus, minus = band_masses(gamma)
    x = np.concatenate([triangle_masses(gamma), 1.0 / N - plus, 1.0 / N - minus])
    if np.any(x < -tol) or np.any(x > 1.0 / N + tol):
        raise QueenonError("point leaves the closed box [0, 1/N]")
    return x


def objective_f(x, N: int) -> float:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("objective is defined for nonnegative points only")
    return float(-np.sum(xlogx(x))) - 4.0 * math.log(2 * N) + MAX_ENTROPY


def is_admissible(y, sys: ConstraintSystem) -> bool:
    z = sys.a_matrix.T @ np.asarray(y, dtype=float)
    return bool(np.all(z - 1.0 <= -math.log(sys.n_steps)))


def dual_value(y, sys: ConstraintSystem, check: bool = True):
    """Lagrangian dual ``L(y)`` and its gradient ``A x~ - b``.

    ``x~ = exp(A^T y - 1)`` maximizes the Lagrangian; the closed form is the
    supremum over ``(0, 1/N)^Omega`` only when every coordinate of ``x~`` is
    below ``1/N``, which is checked unless ``check`` is False.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (6 * sys.n_steps,):
        raise ValueError(f"dual vector must have length {6 * sys.n_steps}")
    z = sys.a_matrix.T @ y
    if check:
        worst = float(np.max(z - 1.0))
        if worst > -math.log(sys.n_steps):
            raise InadmissibleDual(
                f"max (y^T A)_a - 1 = {worst:.6g} exceeds -log N = {-math.log(sys.n_steps):.6g}"
            )
    x = np.exp(z - 1.0)
    grad = sys.a_matrix @ x - sys.b_vector
    value = objective_f(x, sys.n_steps) + float(y @ grad)
    return value, grad


@dataclass
class Certificate:
    kind: str
    n_steps: int
    value: float
    witness: np.ndarray

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n_steps": self.n_steps,
            "value": self.value,
            "witness": np.asarray(self.witness).tolist(),
        }


def lower_certificate(gamma: StepQueenon) -> Certificate:
    """Primal certificate: the entropy of an explicit step queenon."""
    return Certificate("lower", gamma.n_steps, q_entropy(gamma).h_q, np.array(gamma.density))


def verify_certificate(cert: Certificate, tol: float = VERIFY_TOL) -> float:
    """Recompute a certificate's value from its witness; return the value."""
    if cert.kind == "lower":
        gamma = from_matrix(cert.witness)
        if gamma.n_steps != cert.n_steps:
            raise CertificateError("witness resolution does not match n_steps")
        value = q_entropy(gamma).h_q
    elif cert.kind == "upper":
        sys = build_constraints(cert.n_steps)
        try:
            value, _ = dual_value(cert.witness, sys)
        except (InadmissibleDual, ValueError) as exc:
            raise CertificateError(str(exc)) from exc
    else:
        raise CertificateError(f"unknown certificate kind {cert.kind!r}")
    if not abs(value - cert.value) <= tol:
        raise CertificateError(
            f"stored value {cert.value!r} differs from recomputed {value!r}"
        )
    return value


def save_certificate(cert: Certificate, path) -> None:
    Path(path).write_text(json.dumps(cert.to_json()))


def load_certificate(path) -> Certificate:
    data = json.loads(Path(path).read_text())
    cert = Certificate(
        data["kind"], int(data["n_steps"]), float(data["value"]), np.asarray(data["witness"], dtype=float)
    )
    verify_certificate(cert)
    return cert


# ---------------------------------------------------------------------------
# dual descent


def minimize_dual(N: int, init=None, budget: int = 100_000, gtol: float = 1e-12,
                  history: list | None = None) -> Certificate:
    """Gradient descent with Armijo backtracking on the dual function.

    Every accepted iterate is admissible: a trial step that leaves the
    admissible half-spaces is halved like one that fails the Armijo test.
    ``budget`` bounds the number of dual evaluations.  Appends accepted
    values to ``history`` when given.
    """
    sys = build_constraints(N)
    y = np.full(6 * N, -math.log(N)) if init is None else np.array(init, dtype=float)
    value, grad = dual_value(y, sys)
    evals = 1
    step = 1.0
    if history is not None:
        history.append(value)
    while evals < budget:
        g2 = float(grad @ grad)
        if g2 <= gtol**2:
            break
        s = 2.0 * step
        accepted = False
        while evals < budget and s > 1e-14:
            trial = y - s * grad
            evals += 1
            if is_admissible(trial, sys):
                tv, tg = dual_value(trial, sys, check=False)
                if tv <= value - 0.5 * s * g2:
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            break
        y, value, grad, step = trial, tv, tg, s
        if history is not None:
            history.append(value)
    value, _ = dual_value(y, sys)
    return Certificate("upper", N, value, y)


# ---------------------------------------------------------------------------
# primal ascent

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def _diag_knot_gradient(h: np.ndarray, N: int) -> np.ndarray:
    """Gradient of ``int hbar log(2 hbar)`` w.r.t. the complement knot values."""
    w = 1.0 / N
    h0, h1 = h[:-1, None], h[1:, None]
    u = h0 + (h1 - h0) * _GL_U
    dphi = np.log(2.0 * np.maximum(u, 1e-300)) + 1.0
    g0 = w * np.sum(_GL_W * (1.0 - _GL_U) * dphi, axis=1)
    g1 = w * np.sum(_GL_W * _GL_U * dphi, axis=1)
    out = np.zeros(len(h))
    out[:-1] += g0
    out[1:] += g1
    return out


def _entropy_gradient(G: np.ndarray) -> np.ndarray:
    """Gradient of the Q-entropy with respect to the density matrix."""
    N = G.shape[0]
    grad = -(np.log(np.maximum(G, 1e-300)) + 1.0) / (N * N)
    gamma = StepQueenon(G)
    i, j = np.indices(G.shape)
    for m, knot in zip(diag_marginals(gamma), (i + j + 1, j - i + N)):
        dk = _diag_knot_gradient(m.complement_knots, N)
        # complement knot k is 1 - (sum of G on that diagonal) / N
        grad += dk[knot] / N
    return grad


def _project_sums(D: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto matrices with zero row and column sums."""
    return D - D.mean(axis=1, keepdims=True) - D.mean(axis=0, keepdims=True) + D.mean()


def _sinkhorn(G: np.ndarray, iters: int = 50) -> np.ndarray:
    N = G.shape[0]
    for _ in range(iters):
        G = G * (N / G.sum(axis=1, keepdims=True))
        G = G * (N / G.sum(axis=0, keepdims=True))
    return G


def maximize_primal(N: int = 12, budget: int = 200, seed: int = 0, init=None) -> Certificate:
    """Projected gradient ascent on the Q-entropy over ``N``-step queenons.

    Starts from ``init`` (a :class:`StepQueenon`, default uniform, or the
    explicit 12-step queenon when ``N == 12``).  Each step moves along the
    gradient projected to preserve the uniform marginals, rebalances with
    Sinkhorn scaling, and is accepted only if the result passes
    :func:`from_matrix` and strictly improves the entropy; otherwise the
    step length is halved.  ``budget`` counts entropy evaluations.  ``seed``
    only perturbs the initial step length, so equal arguments give equal
    output.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if init is None:
        init = a12_matrix() if N == 12 else uniform(N)
    best = init if init.n_steps == N else from_matrix(np.kron(init.density, np.ones((N // init.n_steps,) * 2)))
    best_val = q_entropy(best).h_q
    rng = np.random.default_rng(seed)
    step = float(N * N * (0.5 + 0.5 * rng.random()))
    evals = 0
    while evals < budget and step > 1e-12:
        G = np.array(best.density)
        d = _project_sums(_entropy_gradient(G))
        trial = G + step * d
        evals += 1
        if np.all(trial > 0):
            trial = _sinkhorn(trial)
            try:
                cand = from_matrix(trial)
            except QueenonError:
                cand = None
            if cand is not None and not cand.clamped:
                val = q_entropy(cand).h_q
                if val > best_val:
                    best, best_val = cand, val
                    step *= 1.5
                    continue
        step *= 0.5
    return Certificate("lower", N, best_val, np.array(best.density))
