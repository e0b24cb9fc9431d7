"""
Random placement followed by absorption
=======================================

Queens are dropped one at a time into diamond cells drawn from a target
queenon.  The few rows and columns left uncovered are then filled by
absorption: a queen ``(x, y)`` is swapped for ``(c, y)`` and ``(x, r)``.
"""

import numpy as np

from queenon.absorb import absorbing_number, complete, uncovered
from queenon.board import BoardPartition, is_valid_configuration
from queenon.construct import (
    PhaseParams,
    Trajectory,
    build_delta,
    random_phase,
    trajectory_report,
)
from queenon.optimize import a12_matrix
from queenon.queenon import cell_masses, empirical

n = 256
params = PhaseParams(n, a12_matrix())
print("parameters:", params.describe())

part = BoardPartition(n, params.big_m)
state, stats = random_phase(params, seed=0, trace=True, partition=part)
print(f"random phase placed {stats.placed} queens, abort step {stats.abort_step}")

# how far the tracked safe-position counts drift from their trajectories
delta = build_delta(params.base, params.rho)
traj = Trajectory(delta, n, params.big_m, params.k_exponent, part)
print(f"trajectory deviation / E(t): {trajectory_report(stats.trace, traj):.3f}")

rows, cols = uncovered(state)
print(f"{len(rows)} uncovered rows, absorbing number {absorbing_number(state)}")

for policy in ("first", "guided"):
    res = complete(state, policy=policy, rng=np.random.default_rng(0))
    if res.success:
        ok = is_valid_configuration(res.config, n)
        print(f"{policy:6s}: completed after {len(res.steps)} absorptions, valid {ok}")
    else:
        print(f"{policy:6s}: stuck at pair {res.abort_index}, target {res.failed_target}")

# compare the completed configuration with delta cell by cell
res = complete(state, policy="guided")
counts = empirical(res.config, n, params.big_n).cell_counts
dev = np.abs(counts - cell_masses(delta, params.big_n) * n) / n
print(f"largest cell deviation from delta: {dev.max():.4f}")
