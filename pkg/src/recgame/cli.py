"""Command-line front end.

Commands: solve, verify, eval, baseline, bench, oracle. Exit codes are a
stable contract: 0 on success or a passing check, 1 when a verification
fails or a solver faults, 2 on input problems. Numeric output is printed
with six decimals and files are written with sorted keys so runs diff
byte-for-byte.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import solve_cmdp, solve_unconstrained
from .broadcast import (
    BroadcastParams,
    build_broadcast_game,
    probe_strategy,
    reproduce_table1,
    run_static_case,
)
from .designer import solve_designer
from .errors import InputError, SolverFault
from .figures import (
    save_benchmark_figure,
    save_static_figure,
    save_trajectory_figure,
)
from .serialize import (
    eval_report_to_json,
    load_game,
    load_strategy,
    probe_to_json,
    sr_report_to_json,
    strategy_to_json,
    write_benchmark_csv,
    write_json,
    write_probe_csv,
)
from .verifier import SR_TOL, best_response, check_obedience, evaluate, history_expanded_optimum

GAME_PRESETS = ("table1-c3", "overcap-c1")
BENCH_PRESETS = GAME_PRESETS + ("static",)


def _preset_params(name: str) -> BroadcastParams:
    if name == "table1-c3":
        return BroadcastParams(horizon=10)
    if name == "overcap-c1":
        return BroadcastParams(horizon=10, channel_capacity=1)
    raise InputError(f"unknown game preset {name!r}; choose one of {', '.join(GAME_PRESETS)}")


def _load_spec(args):
    if getattr(args, "preset", None):
        return build_broadcast_game(_preset_params(args.preset))
    if args.spec is None:
        raise InputError("provide --spec FILE or --preset NAME")
    return load_game(args.spec)


def _initial_value(spec, layer: np.ndarray) -> float:
    return float(spec.initial @ layer)


def cmd_solve(args) -> int:
    spec = _load_spec(args)
    strategy, values = solve_designer(spec, threads=args.threads)
    write_json(args.out, strategy_to_json(spec, strategy, values=values))
    print(f"{_initial_value(spec, values.designer[0]):.6f}")
    return 0


def cmd_verify(args) -> int:
    spec = _load_spec(args)
    strategy = load_strategy(spec, args.strategy)
    evaluate(spec, strategy)  # surfaces coverage problems as input errors
    report = check_obedience(spec, strategy, tol=args.tol)
    responses = [best_response(spec, strategy, agent) for agent in (1, 2)]
    passed = report.passed and all(r.passes(args.tol) for r in responses)

    print(f"obedience route: max gap {report.max_gap:.3e}")
    for r in responses:
        print(
            f"best-response route, agent {r.agent}: value gap {r.max_value_gap:.3e}, "
            f"one-shot gap {r.oneshot_max_gap:.3e}"
        )
    if report.violations:
        print(f"worst violations (showing up to 10 of {len(report.violations)}):")
        print(f"  {'agent':>5}  {'t':>3}  {'state':<12} {'swap':<16} {'gap':>12}")
        for v in report.violations[:10]:
            swap = f"{v.recommended} -> {v.deviation}"
            print(f"  {v.agent:>5}  {v.t:>3}  {v.state:<12} {swap:<16} {v.gap:>12.3e}")
    if args.out:
        doc = sr_report_to_json(report)
        doc["passed"] = passed
        doc["best_response"] = {
            f"agent{r.agent}": {
                "max_value_gap": r.max_value_gap,
                "oneshot_max_gap": r.oneshot_max_gap,
                "passed": r.passes(args.tol),
            }
            for r in responses
        }
        write_json(args.out, doc)
    print(f"{'PASS' if passed else 'FAIL'} (tol {args.tol:g})")
    return 0 if passed else 1


def cmd_eval(args) -> int:
    spec = _load_spec(args)
    strategy = load_strategy(spec, args.strategy)
    report = evaluate(spec, strategy)
    if args.out:
        write_json(args.out, eval_report_to_json(spec, report))
    print(f"designer {report.designer_total:.6f}")
    print(f"agent1 {report.agent1_total:.6f}")
    print(f"agent2 {report.agent2_total:.6f}")
    return 0


def cmd_baseline(args) -> int:
    spec = _load_spec(args)
    if args.kind == "ud":
        strategy, values, j0 = solve_unconstrained(spec)
        doc = strategy_to_json(spec, strategy.to_messaging(), kind="ud")
        write_json(args.out, doc)
        print(f"{j0:.6f}")
        return 0
    if args.eps1 is None or args.eps2 is None:
        raise InputError("the cmdp baseline needs --eps1 and --eps2")
    result = solve_cmdp(spec, args.eps1, args.eps2)
    if result.strategy is None:
        print(
            f"infeasible: no policy meets agent floors ({args.eps1:g}, {args.eps2:g})",
            file=sys.stderr,
        )
        return 2
    write_json(args.out, strategy_to_json(spec, result.strategy.to_messaging(), kind="cmdp"))
    print(f"{result.designer_total:.6f}")
    return 0


def _bench_tables(preset: str, out_dir: Path, threads: int) -> None:
    params = _preset_params(preset)
    result = reproduce_table1(params, threads=threads)
    spec = result.spec
    cap = params.channel_capacity
    x22 = spec.state_index(1, "(2,2)")

    write_benchmark_csv(result, out_dir / "table1.csv")
    save_benchmark_figure(result, out_dir / "totals.png")

    probes = [
        probe_strategy(result.messaging, t, x22, cap)
        for t in range(1, params.horizon + 1)
    ]
    write_json(
        out_dir / "probes_recommendation.json",
        {"state": "(2,2)", "probes": [probe_to_json(spec, p) for p in probes]},
    )
    write_probe_csv(probes, out_dir / "trajectory.csv")
    save_trajectory_figure(probes, "(2,2)", out_dir / "trajectory.png")

    if preset == "overcap-c1":
        ud_probes = [
            probe_strategy(result.ud_strategy, t, x22, cap)
            for t in range(1, params.horizon + 1)
        ]
        write_json(
            out_dir / "probes_unconstrained.json",
            {"state": "(2,2)", "probes": [probe_to_json(spec, p) for p in ud_probes]},
        )

    for name, row in (
        ("unconstrained", result.designer[0]),
        ("constrained", result.designer[1]),
        ("recommendation", result.designer[2]),
    ):
        print(f"{name} {row:.6f}")


def _bench_static(out_dir: Path) -> None:
    params = BroadcastParams(horizon=1)
    reports = [run_static_case(params, (2, 1), alpha) for alpha in (3.0, 4.0)]
    rows = []
    for report in reports:
        rows.append(
            {
                "alpha": report.alpha,
                "start": list(report.start),
                "threshold": report.threshold,
                "condition_holds": report.condition_holds,
                "supports_differ": report.supports_differ,
                "recommendation": {
                    "value": report.recommendation_value,
                    "support": [list(entry) for entry in report.recommendation_support],
                },
                "unconstrained": {
                    "value": report.dictation_value,
                    "support": [list(entry) for entry in report.dictation_support],
                },
            }
        )
    write_json(out_dir / "static.json", {"cases": rows})
    with (out_dir / "static.csv").open("w") as handle:
        handle.write("alpha,unconstrained,recommendation,threshold,supports_differ\n")
        for report in reports:
            handle.write(
                f"{report.alpha:g},{report.dictation_value:.6f},"
                f"{report.recommendation_value:.6f},{report.threshold:.6f},"
                f"{str(report.supports_differ).lower()}\n"
            )
    save_static_figure(reports, out_dir / "static.png")
    for report in reports:
        tag = "differ" if report.supports_differ else "match"
        print(
            f"alpha {report.alpha:g}: unconstrained {report.dictation_value:.6f}, "
            f"recommendation {report.recommendation_value:.6f}, supports {tag}"
        )


def cmd_bench(args) -> int:
    if args.preset not in BENCH_PRESETS:
        raise InputError(
            f"unknown preset {args.preset!r}; choose one of {', '.join(BENCH_PRESETS)}"
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.preset == "static":
        _bench_static(out_dir)
    else:
        _bench_tables(args.preset, out_dir, args.threads)
    for path in sorted(out_dir.iterdir()):
        print(f"wrote {path}")
    return 0


def cmd_oracle(args) -> int:
    spec = _load_spec(args)
    _, values = solve_designer(spec)
    markov = _initial_value(spec, values.designer[0])
    expanded = history_expanded_optimum(spec)
    gap = abs(markov - expanded)
    agree = gap <= args.tol
    print(f"markov {markov:.6f}")
    print(f"expanded {expanded:.6f}")
    print(f"agreement gap {gap:.3e} (tol {args.tol:g}): {'pass' if agree else 'FAIL'}")
    return 0 if agree else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recgame",
        description="Recommendation-strategy solver for two-agent Markov games",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_threads = os.cpu_count() or 1

    def add_spec(p, with_preset=True):
        p.add_argument("--spec", help="game-spec JSON file")
        if with_preset:
            p.add_argument("--preset", help="built-in broadcast game instead of --spec")

    p = sub.add_parser("solve", help="compute the optimal recommendation strategy")
    add_spec(p)
    p.add_argument("--out", required=True, help="strategy JSON to write")
    p.add_argument("--threads", type=int, default=default_threads)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="check a strategy for sequential rationality")
    add_spec(p)
    p.add_argument("--strategy", required=True, help="strategy JSON to check")
    p.add_argument("--tol", type=float, default=SR_TOL)
    p.add_argument("--out", help="report JSON to write")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("eval", help="expected totals of a strategy")
    add_spec(p)
    p.add_argument("--strategy", required=True)
    p.add_argument("--out", help="evaluation JSON to write")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("baseline", help="dictation baselines (unconstrained or floor-constrained)")
    add_spec(p)
    p.add_argument("--kind", required=True, choices=("ud", "cmdp"))
    p.add_argument("--eps1", type=float, help="agent-1 total floor (cmdp)")
    p.add_argument("--eps2", type=float, help="agent-2 total floor (cmdp)")
    p.add_argument("--out", required=True, help="strategy JSON to write")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("bench", help="broadcast benchmark report: tables, probes, figures")
    p.add_argument("--preset", required=True, help=", ".join(BENCH_PRESETS))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=default_threads)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("oracle", help="cross-check the solver on a full-history expansion")
    add_spec(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(fn=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 2
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SolverFault as err:
        print(f"solver fault: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
