"""Seeded trial sampling and end-to-end experiment running.

Sampling is inverse-CDF over the encoded result index, driven by a named
generator (:data:`GENERATOR_ID`) so that every run is replayable from its
seed.  ``run_experiment`` feeds one sampled sequence to each requested
protocol and pairs the running curves with the exact asymptotic rates.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .functionals import StandardizedFunctional, build_function_set, expectation, resolve_catalog_name
from .gainrates import gain_martingale, gain_spbr, optimal_gain
from .optim import DEFAULT_CONTROLS, OptimizerControls
from .protocols import (
    FullPbrAnalysis,
    MartingaleAnalysis,
    SimplifiedPbrAnalysis,
    run_full_pbr,
    run_martingale,
    run_simplified_pbr,
)
from .scenario import Distribution, TrialResult, decode_result

# Algorithm identifier of the random source, recorded in every report header.
GENERATOR_ID = "numpy-pcg64"

PROTOCOL_NAMES = ("mart", "spbr", "fpbr")


def sample_encoded(q: Distribution, n: int, seed: int) -> np.ndarray:
    """n i.i.d. encoded results drawn from q by inverse CDF; seed-deterministic."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(q.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(idx, q.probs.size - 1).astype(np.int64)


def sample_trials(q: Distribution, n: int, seed: int) -> list[TrialResult]:
    """n i.i.d. trials drawn from q; identical seeds give identical sequences."""
    return [decode_result(q.scenario, int(i)) for i in sample_encoded(q, n, seed)]


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    """A reproducible experiment: source distribution, length, seed, and protocol choices."""

    source: Distribution
    n_trials: int
    seed: int
    protocols: tuple[str, ...] = PROTOCOL_NAMES
    function_names: tuple[str, ...] = ()
    block_size: int = 154
    controls: OptimizerControls = DEFAULT_CONTROLS
    floor: float = 1e-9
    label: str = ""

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        for p in self.protocols:
            if p not in PROTOCOL_NAMES:
                raise ValueError(f"unknown protocol {p!r} (expected one of {PROTOCOL_NAMES})")


@dataclass
class ExperimentResult:
    """Analyses keyed by protocol name, with the exact asymptotic rates for overlay."""

    plan: SimulationPlan
    analyses: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)

    def neg_log2_pvalue(self, protocol: str) -> float:
        a = self.analyses[protocol]
        if isinstance(a, MartingaleAnalysis):
            f = a.functional
            return a.n * gain_martingale(max(a.mean, f.bound_B), f.sup_a, f.inf_b, f.bound_B)
        return max(a.log2_t, 0.0)

    def learning_offset(self, protocol: str) -> float:
        """Gap between the asymptote n * rate and the achieved -log2 p at the final n."""
        a = self.analyses[protocol]
        return a.n * self.rates[protocol] - self.neg_log2_pvalue(protocol)


def _default_function_names(q: Distribution) -> tuple[str, ...]:
    sc = q.scenario
    if sc.parties == 2 and sc.settings_per_party == 2 and sc.is_uniform():
        if sc.outcomes_per_setting == 2:
            return ("chsh",)
        return (f"cglmp:{sc.outcomes_per_setting}",)
    raise ValueError("no default function set for this scenario; supply function_names")


def run_experiment(plan: SimulationPlan, out_dir: str | Path | None = None, per_block: bool = False) -> ExperimentResult:
    """Sample one sequence and feed it to every requested protocol.

    Writes per-protocol running reports (and the asymptote table) under
    ``out_dir`` when given.  Identical plans produce byte-identical reports.
    """
    q = plan.source
    names = plan.function_names or _default_function_names(q)
    functions = build_function_set(names, q.scenario)
    encoded = sample_encoded(q, plan.n_trials, plan.seed)
    result = ExperimentResult(plan=plan)

    primary = None
    for name in names:
        resolved = resolve_catalog_name(name, q.scenario)
        if resolved:
            primary = resolved[0]
            break
    for protocol in plan.protocols:
        if protocol == "mart":
            if primary is None:
                raise ValueError("martingale protocol needs at least one non-trivial functional")
            result.analyses[protocol] = run_martingale(encoded, primary)
            i_q = expectation(primary, q)
            result.rates[protocol] = gain_martingale(
                max(i_q, primary.bound_B), primary.sup_a, primary.inf_b, primary.bound_B
            )
        elif protocol == "spbr":
            result.analyses[protocol] = run_simplified_pbr(encoded, functions, plan.block_size, plan.controls)
            result.rates[protocol] = gain_spbr(q, functions, plan.controls).gain
        else:
            result.analyses[protocol] = run_full_pbr(encoded, q.scenario, plan.block_size, plan.controls, plan.floor)
            result.rates[protocol] = optimal_gain(q, plan.controls)

    if out_dir is not None:
        write_reports(result, out_dir, per_block=per_block)
    return result


def _report_header(plan: SimulationPlan, protocol: str, rate: float) -> list[str]:
    return [
        f"# generator={GENERATOR_ID} seed={plan.seed}",
        f"# protocol={protocol} trials={plan.n_trials} block={plan.block_size}"
        f" scenario={plan.source.scenario.parties},{plan.source.scenario.settings_per_party},"
        f"{plan.source.scenario.outcomes_per_setting}",
        f"# asymptotic_rate_bits_per_trial={rate:.12g}",
    ]


def write_report(path: str | Path, analysis, header_lines: Sequence[str] = (), per_block: bool = False, block_size: int = 1) -> None:
    """Write a running report: ``n, statistic, p_value`` per trial (or per block end)."""
    hist = analysis.history()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "statistic", "p_value"])
        for i in range(hist.shape[0]):
            n = int(hist[i, 0])
            if per_block and n % block_size != 0 and n != hist.shape[0]:
                continue
            writer.writerow([n, f"{hist[i, 1]:.12g}", f"{hist[i, 2]:.12g}"])


def write_reports(result: ExperimentResult, out_dir: str | Path, per_block: bool = False) -> dict[str, Path]:
    """Write one report per protocol plus the asymptote table; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = (result.plan.label + "_") if result.plan.label else ""
    paths: dict[str, Path] = {}
    for protocol, analysis in result.analyses.items():
        path = out / f"{prefix}report_{protocol}.csv"
        write_report(
            path,
            analysis,
            _report_header(result.plan, protocol, result.rates[protocol]),
            per_block=per_block,
            block_size=result.plan.block_size,
        )
        paths[protocol] = path
    asym = out / f"{prefix}asymptotes.csv"
    with open(asym, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# generator={GENERATOR_ID} seed={result.plan.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["protocol", "gain_rate_bits_per_trial", "final_n", "final_neg_log2_p"])
        for protocol in result.analyses:
            writer.writerow(
                [
                    protocol,
                    f"{result.rates[protocol]:.12g}",
                    result.analyses[protocol].n,
                    f"{result.neg_log2_pvalue(protocol):.12g}",
                ]
            )
    paths["asymptotes"] = asym
    return paths


def run_seed_sweep(plan: SimulationPlan, seeds: Sequence[int], out_dir: str | Path | None = None) -> list[ExperimentResult]:
    """Run the same plan under many seeds; optionally write a per-seed summary table."""
    results = []
    for seed in seeds:
        results.append(
            run_experiment(
                SimulationPlan(
                    source=plan.source,
                    n_trials=plan.n_trials,
                    seed=int(seed),
                    protocols=plan.protocols,
                    function_names=plan.function_names,
                    block_size=plan.block_size,
                    controls=plan.controls,
                    floor=plan.floor,
                    label=plan.label,
                )
            )
        )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        prefix = (plan.label + "_") if plan.label else ""
        with open(out / f"{prefix}seed_summary.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# generator={GENERATOR_ID}\n")
            writer = csv.writer(fh)
            writer.writerow(["seed"] + [f"neg_log2_p_{p}" for p in plan.protocols])
            for res in results:
                writer.writerow(
                    [res.plan.seed] + [f"{res.neg_log2_pvalue(p):.12g}" for p in plan.protocols]
                )
    return results


def validity_exceedance(
    q_lr: Distribution,
    n_seeds: int,
    n_trials: int,
    alphas: Sequence[float],
    protocols: Sequence[str] = PROTOCOL_NAMES,
    functions: Sequence[StandardizedFunctional] | None = None,
    block_size: int = 10,
    base_seed: int = 0,
    controls: OptimizerControls | None = None,
    floor: float = 1e-9,
) -> dict[str, dict[float, float]]:
    """Empirical Prob(final p <= alpha) over many seeded runs on LR-model data.

    For data from any LR model every protocol must keep this at or below
    alpha (up to Monte Carlo noise).  The default optimizer budget is small:
    prediction quality never affects validity, only the power to reject.
    """
    controls = controls or OptimizerControls(max_iterations=300, rel_tolerance=1e-6)
    if functions is None:
        functions = build_function_set(_default_function_names(q_lr), q_lr.scenario)
    primary = next((f.source for f in functions if f.source is not None), None)
    counts = {p: {float(a): 0 for a in alphas} for p in protocols}
    for i in range(n_seeds):
        encoded = sample_encoded(q_lr, n_trials, base_seed + i)
        for protocol in protocols:
            if protocol == "mart":
                if primary is None:
                    raise ValueError("martingale protocol needs a non-trivial functional")
                p_final = run_martingale(encoded, primary).pvalue
            elif protocol == "spbr":
                p_final = run_simplified_pbr(encoded, functions, block_size, controls).pvalue
            else:
                p_final = run_full_pbr(encoded, q_lr.scenario, block_size, controls, floor).pvalue
            for a in counts[protocol]:
                if p_final <= a:
                    counts[protocol][a] += 1
    return {p: {a: c / n_seeds for a, c in table.items()} for p, table in counts.items()}
