"""Command-line front end: single runs, benchmark grids, and probes.

Subcommands
-----------
``run``    one optimizer on one problem; writes the trajectory as CSV
           (header ``step,theta_0,...,theta_{d-1},f,grad_norm,update_norm``)
           or JSON.  CSV floats use 17 significant digits so files
           round-trip exactly.
``bench``  a (problems x optimizers) grid; writes a JSON report with each
           cell's first-hit step, final objective and distance, plus the
           fastest optimizer per problem.
``probe``  one of the diagnostics (table1, ema, sign, regret, nonconvex,
           gradcheck); writes a JSON report with a top-level ``pass``.

Exit codes: 0 success (and probe pass), 1 usage error or failed probe,
2 divergence.  Identical invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .core import InvalidConfig, OptimizerConfig, RngStream
from .diagnostics import (
    alternating_abs_stream,
    alternating_drive,
    ema_steady_state,
    finite_diff_grad,
    nonconvex_probe,
    regret_probe,
    sign_descent_angle,
    table1_report,
)
from .optim import OPTIMIZER_KINDS
from .problems import BUILTIN_PROBLEMS, builtin_problem
from .runner import BENCH_STARTS, RunSpec, bench_config, run

__all__ = ["main", "entrypoint", "format_float", "write_csv"]

PROBE_KINDS = ("table1", "ema", "sign", "regret", "nonconvex", "gradcheck")

# --- pinned probe protocols (changing any constant changes golden files) ---

EMA_PROBE = dict(burn_in=9000, window=1000)
EMA_BANDS = dict(v_lo=0.95, v_hi=1.05, s_x_max=0.01, s_y_lo=0.9, s_y_hi=1.1)

SIGN_BANDS = dict(adam_lo=0.9, adam_hi=1.1, adabelief_lo=0.05, adabelief_hi=0.2,
                  sgd_exact=0.1)

REGRET_PROTOCOL = dict(steps=10_000, early=100, alpha=0.1, start=2.0,
                       box_lo=-2.0, box_hi=2.0)
# Empirical ceiling for regret / sqrt(t) over t in [100, 10000] on the
# pinned alternating stream (measured max 1.91); the trend check fails if
# the normalized regret ever exceeds this.
REGRET_SQRT_BOUND = 2.5

NONCONVEX_PROTOCOL = dict(problem="rosenbrock", sigma=0.1, alpha=0.1,
                          seeds=(1, 2, 3, 4, 5), horizon_pow=14, early=100)

GRADCHECK_POINTS = 100
GRADCHECK_SEED = 2024
GRADCHECK_H = 1e-6
GRADCHECK_RTOL = 1e-5
KINK_CLEARANCE = 1e-3


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (exact round-trip)."""
    return "%.17g" % float(x)


def _sanitize(obj):
    """Make a report JSON-safe: numpy -> python, non-finite -> null."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _dump_json(report: dict, fh) -> None:
    fh.write(json.dumps(_sanitize(report), indent=2, sort_keys=True))
    fh.write("\n")


def write_csv(traj, fh) -> None:
    """Trajectory CSV; a diverged run gets a trailing comment line."""
    d = traj.thetas.shape[1]
    header = ["step"] + [f"theta_{i}" for i in range(d)] + ["f", "grad_norm", "update_norm"]
    fh.write(",".join(header) + "\n")
    for i in range(traj.steps_completed):
        row = [str(i + 1)]
        row += [format_float(v) for v in traj.thetas[i]]
        row.append(format_float(traj.values[i]))
        row.append(format_float(traj.grad_norms[i]))
        row.append(format_float(math.sqrt(float(traj.updates[i] @ traj.updates[i]))))
        fh.write(",".join(row) + "\n")
    if traj.diverged:
        fh.write(f"# diverged at step {traj.diverged_at}\n")


def _traj_json(traj) -> dict:
    rows = []
    for i in range(traj.steps_completed):
        rows.append({
            "step": i + 1,
            "theta": list(traj.thetas[i]),
            "f": traj.values[i],
            "grad_norm": traj.grad_norms[i],
            "update_norm": math.sqrt(float(traj.updates[i] @ traj.updates[i])),
        })
    return {
        "problem": traj.problem_name,
        "optimizer": traj.optimizer,
        "steps_requested": traj.steps_requested,
        "steps_completed": traj.steps_completed,
        "diverged": traj.diverged,
        "diverged_at": traj.diverged_at,
        "first_hit": traj.first_hit,
        "rows": rows,
    }


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract here is 1
    def error(self, message):
        raise _UsageError(message)


def _split_csv_list(text: str, allowed: tuple, flag: str) -> list:
    items = [s.strip() for s in text.split(",") if s.strip()]
    for item in items:
        if item not in allowed:
            raise _UsageError(f"argument {flag}: invalid choice {item!r} "
                              f"(choose from {', '.join(allowed)})")
    if not items:
        raise _UsageError(f"argument {flag}: empty list")
    return items


def _parse_start(text: str, flag: str = "--start") -> tuple:
    try:
        values = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise _UsageError(f"argument {flag}: expected comma-separated floats, got {text!r}")
    if not values:
        raise _UsageError(f"argument {flag}: empty point")
    return values


def build_parser() -> _Parser:
    parser = _Parser(prog="beliefbench", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one optimizer on one problem")
    p_run.add_argument("--problem", required=True, choices=BUILTIN_PROBLEMS)
    p_run.add_argument("--optimizer", required=True, choices=OPTIMIZER_KINDS)
    p_run.add_argument("--lr", type=float, default=1e-3)
    p_run.add_argument("--beta1", type=float, default=0.9)
    p_run.add_argument("--beta2", type=float, default=0.999)
    p_run.add_argument("--eps", type=float, default=1e-8)
    p_run.add_argument("--steps", type=int, default=1000)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--sigma", type=float, default=0.0)
    p_run.add_argument("--start", type=str, default=None,
                       help='comma-separated point, e.g. "-4,-4" (default: benchmark start)')
    p_run.add_argument("--amsgrad", action="store_true")
    p_run.add_argument("--weight-decay", type=float, default=0.0)
    p_run.add_argument("--decoupled", action="store_true")
    p_run.add_argument("--out", type=str, default="-")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")

    p_bench = sub.add_parser("bench", help="run a problems x optimizers grid")
    p_bench.add_argument("--problems", type=str, default=",".join(BUILTIN_PROBLEMS))
    p_bench.add_argument("--optimizers", type=str, default=",".join(OPTIMIZER_KINDS))
    p_bench.add_argument("--steps", type=int, default=50_000)
    p_bench.add_argument("--delta", type=float, default=1e-2)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", type=str, default="-")

    p_probe = sub.add_parser("probe", help="run one diagnostics probe")
    p_probe.add_argument("--kind", required=True, choices=PROBE_KINDS)
    p_probe.add_argument("--out", type=str, default="-")

    return parser


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _cmd_run(args) -> int:
    try:
        config = OptimizerConfig(
            learning_rate=args.lr, beta1=args.beta1, beta2=args.beta2,
            epsilon=args.eps, weight_decay=args.weight_decay,
            decoupled_weight_decay=args.decoupled, amsgrad=args.amsgrad,
        )
    except InvalidConfig as exc:
        raise _UsageError(str(exc))
    start = _parse_start(args.start) if args.start else BENCH_STARTS[args.problem]
    spec = RunSpec(problem=args.problem, optimizer=args.optimizer, start=start,
                   steps=args.steps, config=config, seed=args.seed,
                   sigma=args.sigma)
    try:
        traj = run(spec)
    except InvalidConfig as exc:
        raise _UsageError(str(exc))

    fh, close = _open_out(args.out)
    try:
        if args.format == "csv":
            write_csv(traj, fh)
        else:
            _dump_json(_traj_json(traj), fh)
    finally:
        if close:
            fh.close()
    return 2 if traj.diverged else 0


def _cmd_bench(args) -> int:
    problems = _split_csv_list(args.problems, BUILTIN_PROBLEMS, "--problems")
    optimizers = _split_csv_list(args.optimizers, OPTIMIZER_KINDS, "--optimizers")
    if args.steps < 1:
        raise _UsageError("argument --steps: must be >= 1")
    if args.delta <= 0:
        raise _UsageError("argument --delta: must be > 0")

    grid = {}
    for pname in problems:
        prob = builtin_problem(pname)
        cells = {}
        best = None
        for opt in optimizers:
            spec = RunSpec(
                problem=pname, optimizer=opt, start=BENCH_STARTS[pname],
                steps=args.steps, config=bench_config(pname), seed=args.seed,
                convergence_radius=args.delta,
            )
            traj = run(spec)
            if traj.steps_completed:
                final_f = float(traj.values[-1])
                final_distance = float(np.linalg.norm(traj.final_theta() - prob.optimum))
            else:
                final_f = None
                final_distance = None
            cells[opt] = {
                "first_hit": traj.first_hit,
                "final_f": final_f,
                "final_distance": final_distance,
                "diverged": traj.diverged,
                "steps_completed": traj.steps_completed,
            }
            if traj.first_hit is not None and (best is None or traj.first_hit < best[1]):
                best = (opt, traj.first_hit)
        grid[pname] = {
            "optimizers": cells,
            "fastest": best[0] if best else None,
        }

    report = {"steps": args.steps, "delta": args.delta, "seed": args.seed,
              "grid": grid}
    fh, close = _open_out(args.out)
    try:
        _dump_json(report, fh)
    finally:
        if close:
            fh.close()
    return 0


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

def probe_ema() -> dict:
    drive = alternating_drive()
    adam = ema_steady_state("adam", OptimizerConfig(), drive, **EMA_PROBE,
                            drive_label="g_x = 1, g_y alternating +-1")
    belief = ema_steady_state("adabelief", OptimizerConfig(), drive, **EMA_PROBE,
                              drive_label="g_x = 1, g_y alternating +-1")
    b = EMA_BANDS
    checks = {
        "v_hat_x_in_band": b["v_lo"] <= adam.second_hat[0] <= b["v_hi"],
        "v_hat_y_in_band": b["v_lo"] <= adam.second_hat[1] <= b["v_hi"],
        "s_hat_x_small": belief.second_hat[0] <= b["s_x_max"],
        "s_hat_y_in_band": b["s_y_lo"] <= belief.second_hat[1] <= b["s_y_hi"],
    }
    return {
        "kind": "ema",
        "drive": adam.drive_label,
        "steps": EMA_PROBE["burn_in"] + EMA_PROBE["window"],
        "adam": {"m_hat": adam.m_hat, "v_hat": adam.second_hat},
        "adabelief": {"m_hat": belief.m_hat, "s_hat": belief.second_hat},
        "bands": dict(b),
        "checks": checks,
        "pass": all(checks.values()),
    }


def probe_table1() -> dict:
    report = table1_report()
    return {"kind": "table1", **report}


def probe_sign() -> dict:
    rep = sign_descent_angle()
    b = SIGN_BANDS
    checks = {
        "adam_in_band": b["adam_lo"] <= rep.adam_ratio <= b["adam_hi"],
        "adabelief_in_band": b["adabelief_lo"] <= rep.adabelief_ratio <= b["adabelief_hi"],
        "sgd_exact": rep.sgd_ratio == b["sgd_exact"],
    }
    return {
        "kind": "sign",
        "adam_ratio": rep.adam_ratio,
        "adabelief_ratio": rep.adabelief_ratio,
        "sgd_ratio": rep.sgd_ratio,
        "gradient_ratio": rep.gradient_ratio,
        "bands": dict(b),
        "checks": checks,
        "pass": all(checks.values()),
    }


def probe_regret() -> dict:
    p = REGRET_PROTOCOL
    box = [[p["box_lo"], p["box_hi"]]]
    config = OptimizerConfig(learning_rate=p["alpha"], amsgrad=True,
                             lr_schedule="inverse_sqrt")
    stream = alternating_abs_stream()
    ledger = regret_probe(stream, p["steps"], box, [p["start"]], config)

    t_axis = np.arange(1, p["steps"] + 1)
    window = slice(p["early"] - 1, p["steps"])
    sqrt_series = ledger.cumulative[window] / np.sqrt(t_axis[window])
    max_sqrt = float(sqrt_series.max())

    # same stream through the squared-gradient denominator, only to report
    # the final sum-of-sqrt-second-moment ratio (no assertion attached)
    adam_ledger = regret_probe(stream, p["steps"], box, [p["start"]], config,
                               optimizer="adam", comparator=ledger.comparator)

    early_rate = ledger.over_t(p["early"])
    late_rate = ledger.over_t(p["steps"])
    checks = {
        "average_regret_decays_10x": late_rate < 0.1 * early_rate,
        "regret_over_sqrt_t_bounded": max_sqrt <= REGRET_SQRT_BOUND,
    }
    return {
        "kind": "regret",
        "protocol": dict(p),
        "comparator": ledger.comparator,
        "regret_at_early": ledger.regret_at(p["early"]),
        "regret_at_final": ledger.regret_at(p["steps"]),
        "avg_regret_early": early_rate,
        "avg_regret_final": late_rate,
        "max_regret_over_sqrt_t": max_sqrt,
        "sqrt_bound": REGRET_SQRT_BOUND,
        "sum_sqrt_second_ratio_vs_adam":
            ledger.sum_sqrt_second / adam_ledger.sum_sqrt_second,
        "checks": checks,
        "pass": all(checks.values()),
    }


def probe_nonconvex() -> dict:
    p = NONCONVEX_PROTOCOL
    problem = builtin_problem(p["problem"])
    config = OptimizerConfig(learning_rate=p["alpha"], lr_schedule="inverse_sqrt")
    checkpoints = sorted({2 ** k for k in range(p["horizon_pow"] + 1)} | {p["early"]})
    decades = [100, 1000, 10_000]
    seeds_report = {}
    ok_all = True
    for seed in p["seeds"]:
        probe = nonconvex_probe(problem, p["sigma"], config, checkpoints,
                                seed=seed, start=BENCH_STARTS[p["problem"]])
        series = dict(zip(probe.checkpoints, probe.min_sq_grad))
        non_increasing = all(a >= b for a, b in
                             zip(probe.min_sq_grad, probe.min_sq_grad[1:]))
        decade_drop = all(series[a] > series[b] for a, b in zip(decades, decades[1:]))
        final_drop = probe.min_sq_grad[-1] < 0.1 * series[p["early"]]
        ok = non_increasing and decade_drop and final_drop
        ok_all = ok_all and ok
        seeds_report[str(seed)] = {
            "checkpoints": probe.checkpoints,
            "min_sq_grad": probe.min_sq_grad,
            "decay_correlation": probe.decay_correlation,
            "non_increasing": non_increasing,
            "strictly_decreasing_decades": decade_drop,
            "final_below_tenth_of_early": final_drop,
            "ok": ok,
        }
    return {
        "kind": "nonconvex",
        "protocol": {k: (list(v) if isinstance(v, tuple) else v) for k, v in p.items()},
        "seeds": seeds_report,
        "pass": ok_all,
    }


_KINK_DISTANCES = {
    # distance of (x, y) to the nearest non-differentiable locus
    "l1_separable": lambda q: min(abs(q[0]), abs(q[1])),
    "l1_inseparable": lambda q: min(abs(q[0] + q[1]), abs(q[0] - q[1])) / math.sqrt(2),
    "l1_skew": lambda q: min(abs(q[0]), abs(q[1])),
}


def probe_gradcheck() -> dict:
    rng = RngStream(GRADCHECK_SEED)
    per_problem = {}
    worst = 0.0
    for name in BUILTIN_PROBLEMS:
        problem = builtin_problem(name)
        kink_dist = _KINK_DISTANCES.get(name)
        max_rel = 0.0
        accepted = 0
        while accepted < GRADCHECK_POINTS:
            point = rng.normals(problem.dim) * 2.0
            if kink_dist is not None and kink_dist(point) <= KINK_CLEARANCE:
                continue
            accepted += 1
            analytic = np.asarray(problem.gradient(point), dtype=np.float64)
            numeric = finite_diff_grad(problem, point, GRADCHECK_H)
            scale = max(1.0, float(np.abs(analytic).max()))
            rel = float(np.abs(numeric - analytic).max()) / scale
            max_rel = max(max_rel, rel)
        per_problem[name] = {"points": GRADCHECK_POINTS, "max_rel_error": max_rel,
                             "ok": max_rel < GRADCHECK_RTOL}
        worst = max(worst, max_rel)
    return {
        "kind": "gradcheck",
        "h": GRADCHECK_H,
        "rtol": GRADCHECK_RTOL,
        "seed": GRADCHECK_SEED,
        "problems": per_problem,
        "max_rel_error": worst,
        "pass": all(v["ok"] for v in per_problem.values()),
    }


_PROBES = {
    "table1": probe_table1,
    "ema": probe_ema,
    "sign": probe_sign,
    "regret": probe_regret,
    "nonconvex": probe_nonconvex,
    "gradcheck": probe_gradcheck,
}


def _cmd_probe(args) -> int:
    report = _PROBES[args.kind]()
    fh, close = _open_out(args.out)
    try:
        _dump_json(report, fh)
    finally:
        if close:
            fh.close()
    return 0 if report["pass"] else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_probe(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        code = exc.code if isinstance(exc.code, int) else 0
        return code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
