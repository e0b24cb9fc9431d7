"""Command-line interface.

Exit codes: 0 success or verified, 1 verification failure (or an aborted
construction), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .absorb import complete
from .board import BoardError, BoardState, dumps_config, from_columns
from .construct import PhaseParams, Trajectory, build_delta, random_phase, trajectory_report
from .entropy import q_entropy, q_entropy_discrete, q_entropy_quad
from .enumeration import (
    EnumerationError,
    count_configurations,
    enumerate_configurations,
    sample_uniform,
)
from .experiments import alpha_report, build_id, pipeline_run, resolve_jobs, structure_experiment
from .optimize import (
    CertificateError,
    a12_matrix,
    load_certificate,
    maximize_primal,
    minimize_dual,
    save_certificate,
)
from .queenon import QueenonError, density_csv, dist_step, kappa, load_queenon, uniform

OK, FAILED, USAGE = 0, 1, 2

BUILTIN = {"uniform": uniform, "kappa": kappa, "a12": a12_matrix}


class UsageError(Exception):
    pass


def _queenon(spec: str):
    if spec in BUILTIN:
        return BUILTIN[spec]()
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"no such queenon file: {spec} (built-ins: {', '.join(BUILTIN)})")
    return load_queenon(path)


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _read_partial(path: str, n: int | None):
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        queens = data.get("queens", [])
        n = n or data.get("n") or data.get("params", {}).get("n")
    else:
        queens = data
    if not n:
        raise UsageError("board size unknown: pass --n or use a JSON object with an 'n' field")
    return BoardState.from_queens(int(n), [tuple(q) for q in queens])


# ---------------------------------------------------------------------------
# subcommands


def cmd_count(a):
    print(count_configurations(a.n, jobs=resolve_jobs(a.jobs)))
    return OK


def cmd_enumerate(a):
    fh = open(a.out, "w") if a.out else sys.stdout
    try:
        for cols in enumerate_configurations(a.n):
            fh.write(dumps_config(from_columns(cols)) + "\n")
    finally:
        if a.out:
            fh.close()
    return OK


def cmd_sample(a):
    cfg = from_columns(sample_uniform(a.n, seed=a.seed))
    print(dumps_config(cfg))
    return OK


def cmd_entropy(a):
    g = _queenon(a.queenon)
    rep = q_entropy(g).to_json()
    if a.quad:
        rep["h_q_quad"] = q_entropy_quad(g)
    if a.discrete:
        rep["discrete_n"] = a.discrete
        rep["h_q_discrete"] = q_entropy_discrete(g, a.discrete)
    _emit(rep, a.out)
    return OK


def cmd_distance(a):
    lo, hi = dist_step(_queenon(a.a), _queenon(a.b), a.L)
    _emit({"lower": lo, "upper": hi}, a.out)
    return OK


def cmd_optimize(a):
    if a.kind == "primal":
        init = None if a.init is None else _queenon(a.init)
        cert = maximize_primal(a.n_steps or 12, budget=a.budget or 300, seed=a.seed, init=init)
    else:
        cert = minimize_dual(a.n_steps or 17, budget=a.budget or 100_000)
    if a.out:
        save_certificate(cert, a.out)
    print(json.dumps({"kind": cert.kind, "n_steps": cert.n_steps, "value": cert.value}))
    return OK


def _params(a) -> PhaseParams:
    return PhaseParams(a.n, _queenon(a.queenon), a.rho, a.K, a.M, a.horizon)


def cmd_construct(a):
    p = _params(a)
    state, stats = random_phase(p, seed=a.seed, trial=a.trial, trace=a.trace)
    out = stats.to_json()
    out["n"] = p.n
    out["build"] = build_id()
    if a.trace:
        traj = Trajectory(build_delta(p.base, p.rho), p.n, p.big_m, p.k_exponent)
        out["trajectory_deviation"] = trajectory_report(stats.trace, traj)
    _emit(out, a.out)
    return OK if stats.abort_step is None else FAILED


def cmd_absorb(a):
    state = _read_partial(a.input, a.n)
    res = complete(state, order_seed=a.order_seed, policy=a.policy)
    if res.success and a.out:
        Path(a.out).write_text(dumps_config(res.config) + "\n")
        print(json.dumps({"success": True, "absorbed": len(res.steps)}))
    else:
        _emit(res.to_json(), None if res.success else a.out)
    return OK if res.success else FAILED


def cmd_pipeline(a):
    base = _queenon(a.queenon)
    rep = pipeline_run(a.n, base, a.rho, trials=a.trials, seed=a.seed, k_exponent=a.K,
                       big_m=a.M, horizon=a.horizon, policy=a.policy, trace=not a.no_trace,
                       jobs=a.jobs)
    _emit(rep, a.out)
    return OK if rep["all_successes_valid"] else FAILED


def cmd_alpha(a):
    try:
        lower = load_certificate(a.lower)
        upper = load_certificate(a.upper) if a.upper else None
        win = alpha_report(lower, upper)
    except CertificateError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return FAILED
    print(win)
    if a.out:
        _emit(win.to_json(), a.out)
    return OK


def cmd_structure(a):
    rep = structure_experiment(a.n, a.N, a.samples, a.seed)
    if a.csv:
        Path(a.csv).write_text(density_csv(rep.density))
    _emit(rep.to_json(), a.out)
    return OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="queenon", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=fn)
        return p

    p = add("count", cmd_count, "count n-queens configurations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = add("enumerate", cmd_enumerate, "stream all configurations as JSON lines")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")

    p = add("sample", cmd_sample, "uniformly random configuration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("entropy", cmd_entropy, "Q-entropy of a step queenon")
    p.add_argument("--queenon", required=True, help="JSON file or uniform|kappa|a12")
    p.add_argument("--discrete", type=int, metavar="N", help="also report the I_N discretisation")
    p.add_argument("--quad", action="store_true", help="also report the quadrature value")
    p.add_argument("--out")

    p = add("distance", cmd_distance, "distance bracket between two step queenons")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--L", type=int)
    p.add_argument("--out")

    p = add("optimize", cmd_optimize, "primal or dual certificate search")
    p.add_argument("kind", choices=["primal", "dual"])
    p.add_argument("--n-steps", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", help="starting queenon for the primal search")
    p.add_argument("--out")

    def phase_flags(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--queenon", default="a12")
        p.add_argument("--rho", type=float, default=0.05)
        p.add_argument("--K", type=int, default=10)
        p.add_argument("--M", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")

    p = add("construct", cmd_construct, "random placement phase")
    phase_flags(p)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--trace", action="store_true")

    p = add("absorb", cmd_absorb, "complete a partial configuration")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--policy", choices=["first", "random", "guided"], default="first")
    p.add_argument("--order-seed", type=int)
    p.add_argument("--out")

    p = add("pipeline", cmd_pipeline, "construction plus completion over many trials")
    phase_flags(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--policy", choices=["first", "random", "guided"], default="guided")
    p.add_argument("--no-trace", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    p = add("alpha-report", cmd_alpha, "alpha window from certificates")
    p.add_argument("--lower", required=True)
    p.add_argument("--upper")
    p.add_argument("--out")

    p = add("structure", cmd_structure, "averaged statistics of random small configurations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.add_argument("--out")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, QueenonError, EnumerationError, BoardError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
