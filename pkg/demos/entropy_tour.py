"""
Q-entropy of a few step queenons
================================

The uniform queenon has Q-entropy exactly -2.  The 12-step matrix shipped
with the package does better, and its discrete entropies on finer diamond
grids approach the exact value from above.
"""

import numpy as np

from queenon.entropy import q_entropy, q_entropy_discrete, q_entropy_quad
from queenon.optimize import a12_matrix
from queenon.queenon import diag_marginals, kappa, uniform

# the uniform measure: no square term, two equal diagonal terms
rep = q_entropy(uniform())
print(f"uniform   H_q = {rep.h_q:+.12f}  (diagonal terms {rep.kl_plus:.6f} each)")

# kappa dips in the middle and bulges at the edge midpoints
k = kappa()
print(f"kappa     H_q = {q_entropy(k).h_q:+.12f}")

# the explicit 12-step queenon; quadrature is an independent check
A = a12_matrix()
print(f"A12       H_q = {q_entropy(A).h_q:+.12f}  quadrature {q_entropy_quad(A):+.12f}")

# its diagonal marginals stay below the uniform density 1
plus, minus = diag_marginals(A)
print("max diagonal densities:", float(plus.knots.max()), float(minus.knots.max()))

# discrete entropies on a doubling ladder of diamond grids
H = q_entropy(A).h_q
for N in 12 * 2 ** np.arange(6):
    gap = q_entropy_discrete(A, int(N)) - H
    print(f"N = {int(N):4d}  H_q^N - H_q = {gap:.3e}")
