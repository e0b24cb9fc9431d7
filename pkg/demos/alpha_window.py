"""
Certified window for the n-queens constant
==========================================

The number of n-queens configurations behaves like ``(n e^{-alpha})^n``.
An explicit queenon gives an upper bound on ``alpha`` and a dual vector of
the finite entropy program gives a lower bound.  Both certificates are
written to disk and re-verified when they are read back.

Runs in about ten seconds.
"""

import tempfile
from pathlib import Path

from queenon.experiments import alpha_report
from queenon.optimize import (
    a12_matrix,
    load_certificate,
    lower_certificate,
    minimize_dual,
    save_certificate,
)

# primal side: the entropy of an explicit 12-step queenon
lower = lower_certificate(a12_matrix())

# dual side: gradient descent from the constant start at N = 17
history = []
upper = minimize_dual(17, history=history)
print(f"dual descent: {len(history)} accepted steps, L = {upper.value:.10f}")

with tempfile.TemporaryDirectory() as d:
    lo_path, up_path = Path(d) / "lower.json", Path(d) / "upper.json"
    save_certificate(lower, lo_path)
    save_certificate(upper, up_path)
    window = alpha_report(load_certificate(lo_path), load_certificate(up_path))

print(window)
print("inside [1.94, 1.9449]:", window.contained_in(1.94, 1.9449))
