"""Command-line front end; every command is a thin wrapper over a library call.

Exit codes: 0 success (including optimizer non-convergence, which is reported
as a warning), 1 internal error, 2 input/parse error, 3 scenario or data
mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import gainrates, quantum, sim
from .errors import ScenarioMismatchError, SizeLimitError, TrialFormatError, UnknownFunctionalError
from .functionals import (
    catalog_names,
    load_functional_file,
    resolve_catalog_name,
    standardize,
    trivial_standardized,
)
from .optim import OptimizerControls
from .protocols import run_full_pbr, run_martingale, run_simplified_pbr
from .scenario import Scenario, read_distribution, read_trials, write_distribution

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_MISMATCH = 3


def _parse_scenario(text: str) -> Scenario:
    try:
        l, s, d = (int(v) for v in text.split(","))
    except ValueError:
        raise TrialFormatError(f"--scenario expects 'l,s,d', got {text!r}") from None
    return Scenario(l, s, d)


def _parse_values(text: str) -> list[float]:
    # "2..7" (integer range) or a comma list
    if ".." in text:
        lo, hi = text.split("..", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(v) for v in text.split(",")]


def _controls(args) -> OptimizerControls:
    return OptimizerControls(max_iterations=args.max_iter, rel_tolerance=args.tol)


def _named_distribution(name: str):
    kind, _, arg = name.partition(":")
    if kind == "chsh":
        state, bank = quantum.chsh_config(float(arg))
    elif kind == "cglmp":
        state, bank = quantum.cglmp_config(int(arg))
    else:
        raise UnknownFunctionalError(f"unknown quantum config {name!r} (expected chsh:<theta> or cglmp:<d>)")
    return quantum.born_distribution(state, bank)


def _source_distribution(args):
    if args.config:
        return _named_distribution(args.config)
    if args.dist:
        return read_distribution(args.dist)
    raise TrialFormatError("either --config or --dist is required")


def _print_flags(analyses: dict) -> None:
    for name, analysis in analyses.items():
        for flag in getattr(analysis, "flags", []):
            print(f"warning: {name}: {flag}", file=sys.stderr)


def _resolve_names(names, scenario):
    """Catalog names plus ``file:<path>`` entries pointing at value-table files."""
    resolved = []
    for name in names:
        if name.startswith("file:"):
            f = load_functional_file(name[5:])
            _check_same_result_space(f.scenario, scenario)
            resolved.append(f)
        else:
            resolved.extend(resolve_catalog_name(name, scenario))
    return resolved


def _check_same_result_space(found, expected):
    same = (
        found.parties == expected.parties
        and found.settings_per_party == expected.settings_per_party
        and found.outcomes_per_setting == expected.outcomes_per_setting
    )
    if not same:
        raise ScenarioMismatchError("custom functional file targets a different scenario")


def cmd_analyze(args) -> int:
    scenario = _parse_scenario(args.scenario)
    trials = read_trials(args.trials_file, scenario)
    if not trials:
        raise ScenarioMismatchError(f"{args.trials_file}: no trial records")
    names = [n for n in args.functions.split(",") if n]
    resolved = _resolve_names(names, scenario)
    functions = [trivial_standardized(scenario)] + [standardize(f) for f in resolved]
    controls = _controls(args)
    analyses = {}
    for protocol in args.protocol.split(","):
        protocol = protocol.strip()
        if protocol == "mart":
            if not resolved:
                raise UnknownFunctionalError("martingale protocol needs a non-trivial functional name")
            analyses[protocol] = run_martingale(trials, resolved[0])
        elif protocol == "spbr":
            analyses[protocol] = run_simplified_pbr(trials, functions, args.block, controls)
        elif protocol == "fpbr":
            analyses[protocol] = run_full_pbr(trials, scenario, args.block, controls, args.floor)
        else:
            raise UnknownFunctionalError(f"unknown protocol {protocol!r}")
    for name, analysis in analyses.items():
        stat = analysis.mean if name == "mart" else analysis.log2_t
        stat_name = "mean" if name == "mart" else "log2_T"
        print(f"protocol={name} n={analysis.n} {stat_name}={stat:.10g} p_value={analysis.pvalue:.10g}")
        if args.out:
            path = Path(args.out) / f"report_{name}.csv"
            Path(args.out).mkdir(parents=True, exist_ok=True)
            sim.write_report(path, analysis, per_block=args.per_block, block_size=args.block)
            print(f"wrote {path}")
    _print_flags(analyses)
    return EXIT_OK


def cmd_simulate(args) -> int:
    source = _source_distribution(args)
    names = tuple(n for n in args.functions.split(",") if n) if args.functions else ()
    plan = sim.SimulationPlan(
        source=source,
        n_trials=args.trials,
        seed=args.seed,
        protocols=tuple(p.strip() for p in args.protocol.split(",")),
        function_names=names,
        block_size=args.block,
        controls=_controls(args),
        floor=args.floor,
    )
    if args.seeds > 1:
        results = sim.run_seed_sweep(plan, range(args.seed, args.seed + args.seeds), out_dir=args.out)
        for res in results:
            finals = " ".join(f"{p}={res.neg_log2_pvalue(p):.6g}" for p in plan.protocols)
            print(f"seed={res.plan.seed} neg_log2_p: {finals}")
    else:
        res = sim.run_experiment(plan, out_dir=args.out, per_block=args.per_block)
        for protocol in plan.protocols:
            print(
                f"protocol={protocol} n={res.analyses[protocol].n}"
                f" neg_log2_p={res.neg_log2_pvalue(protocol):.10g}"
                f" p_value={res.analyses[protocol].pvalue:.10g}"
                f" rate={res.rates[protocol]:.10g}"
            )
        _print_flags(res.analyses)
    return EXIT_OK


def cmd_gain(args) -> int:
    controls = _controls(args)
    if args.sweep:
        values = _parse_values(args.d if args.sweep == "cglmp" else args.theta)
        reports = gainrates.gain_curve(
            args.sweep, values, include_optimal=args.with_sq, include_nosignaling=not args.no_ns, controls=controls
        )
    else:
        source = args.config or ""
        kind, _, arg = source.partition(":")
        if kind == "cglmp":
            reports = gainrates.gain_curve("cglmp", [int(arg)], include_optimal=args.with_sq, controls=controls)
        elif kind == "chsh":
            reports = gainrates.gain_curve(
                "chsh", [float(arg)], include_optimal=args.with_sq, include_nosignaling=not args.no_ns, controls=controls
            )
        else:
            raise UnknownFunctionalError(f"unknown gain config {source!r}")
    lines = ["parameter,mean_value,gain_mart,gain_spbr,gain_spbr_extended,optimal"]
    for r in reports:
        ext = "" if r.gain_spbr_extended is None else f"{r.gain_spbr_extended:.10g}"
        opt = "" if r.optimal is None else f"{r.optimal:.10g}"
        lines.append(f"{r.parameter:.10g},{r.mean_value:.10g},{r.gain_mart:.10g},{r.gain_spbr:.10g},{ext},{opt}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_quantum(args) -> int:
    dist = _named_distribution(args.config)
    if args.out:
        write_distribution(args.out, dist)
        print(f"wrote {args.out}")
    else:
        json.dump({"probs": [float(v) for v in dist.probs]}, sys.stdout)
        print()
    return EXIT_OK


def cmd_catalog(args) -> int:
    scenario = _parse_scenario(args.scenario)
    for name in catalog_names(scenario):
        print(name)
    return EXIT_OK


def _apply_config_file(argv: list[str]) -> list[str]:
    # config file supplies defaults; explicit flags override
    if "--config-file" not in argv:
        return argv
    i = argv.index("--config-file")
    path = argv[i + 1]
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    head = argv[: i + 2]
    injected: list[str] = []
    for key, value in cfg.items():
        flag = f"--{key.replace('_', '-')}"
        if flag in argv:
            continue
        if isinstance(value, bool):
            if value:
                injected.append(flag)
        else:
            injected.extend([flag, str(value)])
    return head + injected + argv[i + 2 :]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellcert", description="p-value certificates against local realism")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=1e-10, help="optimizer relative tolerance")
        p.add_argument("--max-iter", type=int, default=100_000, help="optimizer iteration budget")
        p.add_argument("--floor", type=float, default=1e-9, help="frequency floor for the full protocol")
        p.add_argument("--block", type=int, default=154, help="trials per prediction update")
        p.add_argument("--out", default=None, help="output file or directory")
        p.add_argument("--per-block", action="store_true", help="report one row per block instead of per trial")
        p.add_argument("--config-file", default=None, help="JSON file of defaults for these flags")

    p = sub.add_parser("analyze", help="run protocols on a recorded trial file")
    p.add_argument("trials_file")
    p.add_argument("--scenario", required=True, help="l,s,d")
    p.add_argument("--functions", default="chsh", help="comma list of catalog names")
    p.add_argument("--protocol", default="mart,spbr", help="comma list from mart,spbr,fpbr")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="sample a quantum configuration and run protocols")
    p.add_argument("--config", default=None, help="chsh:<theta> or cglmp:<d>")
    p.add_argument("--dist", default=None, help="distribution file to sample instead")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to fan out")
    p.add_argument("--functions", default=None, help="comma list of catalog names (default from config)")
    p.add_argument("--protocol", default="mart,spbr,fpbr")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gain", help="emit gain-rate tables")
    p.add_argument("--config", default=None, help="single configuration, e.g. cglmp:3")
    p.add_argument("--sweep", default=None, choices=["cglmp", "chsh"])
    p.add_argument("--d", default="2..7", help="outcome counts for --sweep cglmp (range or comma list)")
    p.add_argument("--theta", default="0.19634954,0.39269908,0.58904862", help="angles for --sweep chsh")
    p.add_argument("--with-sq", action="store_true", help="include the optimal (projection) rate")
    p.add_argument("--no-ns", action="store_true", help="skip the no-signaling column on chsh sweeps")
    common(p)
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("quantum", help="emit the trial distribution of a named configuration")
    p.add_argument("--config", required=True, help="chsh:<theta> or cglmp:<d>")
    common(p)
    p.set_defaults(func=cmd_quantum)

    p = sub.add_parser("catalog", help="list catalog functional names for a scenario")
    p.add_argument("--scenario", required=True, help="l,s,d")
    p.set_defaults(func=cmd_catalog)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (TrialFormatError, UnknownFunctionalError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScenarioMismatchError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (SizeLimitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
