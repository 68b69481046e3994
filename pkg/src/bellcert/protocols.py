"""The three p-value engines: mean-based (Hoeffding) and the two prediction-based-ratio protocols.

Each engine consumes trials one at a time, in order.  The prediction-based
protocols score every trial with a non-negative per-trial function of LR
expectation at most 1 that was fixed before the trial's block began, so the
running product is a test supermartingale under every LR model and
``min(1/T, 1)`` is a valid p-value bound at every n, whatever the data
distribution.  All accumulation happens in log2 space.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import SizeLimitError
from .functionals import Functional, StandardizedFunctional
from .gainrates import gain_martingale
from .lrpolytope import strategy_result_indices
from .optim import DEFAULT_CONTROLS, OptimizerControls, kl_project_lr, maximize_log_gain
from .scenario import (
    ENUMERATION_CAP,
    Distribution,
    Scenario,
    TrialResult,
    decode_result,
    encode_result,
    result_space_size,
)

# Smallest positive double; reported p-values are clamped here instead of 0.
P_FLOOR = 5e-324


def pbr_pvalue(log2_t: float) -> float:
    """min(2^(-log2_T), 1), clamped away from exact zero."""
    if not log2_t > 0.0:  # also handles -inf (flagged runs report p = 1)
        return 1.0
    return max(2.0 ** (-log2_t), P_FLOOR)


def _check_mart_inputs(i_hat: float, n: int, a: float, b: float, bound: float) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (b < bound < a):
        raise ValueError(f"need b < B < a, got b={b}, B={bound}, a={a}")
    if not (b <= i_hat <= a):
        raise ValueError(f"mean {i_hat} outside the declared range [{b}, {a}]")


def martingale_pvalue(i_hat: float, n: int, a: float, b: float, bound: float) -> float:
    """Hoeffding-style supermartingale bound on the LR tail of the running mean.

    Equals 2^(-n * g) where g is the closed-form rate of
    :func:`bellcert.gainrates.gain_martingale` at the observed mean; 1 when
    the mean does not exceed the bound.
    """
    _check_mart_inputs(i_hat, n, a, b, bound)
    if i_hat <= bound:
        return 1.0
    log2_p = -n * gain_martingale(i_hat, a, b, bound)
    return max(2.0**log2_p, P_FLOOR)


def azuma_pvalue(i_hat: float, n: int, a: float, b: float, bound: float) -> float:
    """Azuma-Hoeffding comparison baseline exp(-2 n (mean - B)^2 / (a - b)^2).

    Never smaller than :func:`martingale_pvalue`; provided only so the two
    bounds can be compared.
    """
    _check_mart_inputs(i_hat, n, a, b, bound)
    if i_hat <= bound:
        return 1.0
    t = (i_hat - bound) / (a - b)
    return max(math.exp(-2.0 * n * t * t), P_FLOOR)


def _encode_one(scenario: Scenario, trial) -> int:
    if isinstance(trial, (int, np.integer)):
        if trial < 0:
            raise ValueError(f"encoded result index must be non-negative, got {trial}")
        return int(trial)
    return encode_result(scenario, trial)


class MartingaleAnalysis:
    """Streaming mean-based certificate for a single bounded functional."""

    def __init__(self, functional: Functional):
        a, b, bound = functional.sup_a, functional.inf_b, functional.bound_B
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("martingale protocol needs finite functional bounds")
        if not (b < bound < a):
            raise ValueError(f"need inf_b < bound_B < sup_a, got {b}, {bound}, {a}")
        self.functional = functional
        self.scenario = functional.scenario
        self.n = 0
        self.total = 0.0
        self._values: dict[int, float] = {}
        self.history_n: list[int] = []
        self.history_stat: list[float] = []
        self.history_p: list[float] = []

    def _value(self, enc: int) -> float:
        if self.functional.table is not None:
            return float(self.functional.table[enc])
        v = self._values.get(enc)
        if v is None:
            v = float(self.functional.evaluate(decode_result(self.scenario, enc)))
            self._values[enc] = v
        return v

    @property
    def mean(self) -> float:
        return self.total / self.n if self.n else 0.0

    @property
    def pvalue(self) -> float:
        if self.n == 0:
            return 1.0
        f = self.functional
        return martingale_pvalue(self.mean, self.n, f.sup_a, f.inf_b, f.bound_B)

    def update(self, trial) -> None:
        self.total += self._value(_encode_one(self.scenario, trial))
        self.n += 1
        self.history_n.append(self.n)
        self.history_stat.append(self.mean)
        self.history_p.append(self.pvalue)

    def extend(self, trials: Iterable) -> None:
        for x in trials:
            self.update(x)

    def history(self) -> np.ndarray:
        """(N, 3) array of (n, running mean, p-value)."""
        return np.column_stack([self.history_n, self.history_stat, self.history_p])


class SimplifiedPbrAnalysis:
    """Weighted-function protocol with block updates.

    Trials in the first block are scored by the trivial function (log term 0).
    Before each later block the weights are refit by maximizing the empirical
    log gain over all preceding trials, so every score uses only information
    available before its block started; a final partial block is scored with
    the latest weights.

    Args:
        functions: standardized functions, the trivial one first.
        block_size: trials per weight update.
        controls: optimizer budget for the per-block refits.
    """

    def __init__(
        self,
        functions: Sequence[StandardizedFunctional],
        block_size: int = 154,
        controls: OptimizerControls = DEFAULT_CONTROLS,
    ):
        if not functions:
            raise ValueError("at least the trivial function is required")
        if not functions[0].is_trivial:
            raise ValueError("functions[0] must be the trivial function")
        scenario = functions[0].scenario
        for f in functions:
            if f.scenario is not scenario and result_space_size(f.scenario) != result_space_size(scenario):
                raise ValueError("all functions must share one scenario")
        if block_size < 1:
            raise ValueError("block_size must be >= 1")
        self.functions = tuple(functions)
        self.scenario = scenario
        self.block_size = block_size
        self.controls = controls
        self.n = 0
        self.log2_t = 0.0
        self.weights = np.zeros(len(functions))
        self.weights[0] = 1.0
        self.flags: list[str] = []
        self.block_weights: list[tuple[int, np.ndarray]] = [(1, self.weights.copy())]
        self._counts: dict[int, int] = {}
        self._rows: dict[int, np.ndarray] = {}
        self.history_n: list[int] = []
        self.history_stat: list[float] = []
        self.history_p: list[float] = []

    def _row(self, enc: int) -> np.ndarray:
        row = self._rows.get(enc)
        if row is None:
            x = decode_result(self.scenario, enc)
            row = np.array([f.evaluate_r(x) for f in self.functions])
            self._rows[enc] = row
        return row

    def _refit(self) -> None:
        keys = sorted(self._counts)
        freq = np.array([self._counts[k] for k in keys], dtype=float)
        freq /= freq.sum()
        r = np.vstack([self._rows[k] for k in keys])
        opt = maximize_log_gain(r, freq, self.controls)
        if not opt.converged:
            self.flags.append(f"weight refit before trial {self.n + 1} hit the iteration budget")
        self.weights = opt.weights
        self.block_weights.append((self.n + 1, self.weights.copy()))

    @property
    def pvalue(self) -> float:
        return pbr_pvalue(self.log2_t)

    def update(self, trial) -> None:
        if self.n > 0 and self.n % self.block_size == 0:
            self._refit()
        enc = _encode_one(self.scenario, trial)
        value = float(self._row(enc) @ self.weights)
        if value > 0.0:
            self.log2_t += math.log2(value)
        else:
            self.log2_t = -math.inf
            self.flags.append(f"zero-valued ratio at trial {self.n + 1}; p-value pinned to 1")
        self.n += 1
        self._counts[enc] = self._counts.get(enc, 0) + 1
        self.history_n.append(self.n)
        self.history_stat.append(self.log2_t)
        self.history_p.append(self.pvalue)

    def extend(self, trials: Iterable) -> None:
        for x in trials:
            self.update(x)

    def history(self) -> np.ndarray:
        """(N, 3) array of (n, running log2 T, p-value)."""
        return np.column_stack([self.history_n, self.history_stat, self.history_p])


class FullPbrAnalysis:
    """Polytope-projection protocol with block updates.

    Before each block (the first uses the constant ratio 1), the empirical
    frequencies of all preceding trials, optionally floored by a uniform
    mixture, are projected onto the LR polytope; the per-trial ratio is the
    frequency over its projection.  Ratios are rescaled whenever any
    deterministic strategy would give them an expectation above 1, so validity
    never depends on the projection's numerical precision.

    Args:
        scenario: the (small) scenario; the strategy and result caps apply.
        block_size: trials per projection refresh.
        controls: optimizer budget for the projections.
        floor: uniform-mixture weight mixed into the frequencies (keeps the
            ratio positive on never-observed results); None falls back to
            ``controls.floor``.
    """

    def __init__(
        self,
        scenario: Scenario,
        block_size: int = 154,
        controls: OptimizerControls = DEFAULT_CONTROLS,
        floor: float | None = 1e-9,
    ):
        if block_size < 1:
            raise ValueError("block_size must be >= 1")
        if floor is None:
            floor = controls.floor
        if not 0.0 <= floor < 1.0:
            raise ValueError("floor must lie in [0, 1)")
        self.scenario = scenario
        self.k = result_space_size(scenario)
        if self.k > ENUMERATION_CAP:
            raise SizeLimitError(f"full protocol needs a dense result table; {self.k} exceeds {ENUMERATION_CAP}")
        self.block_size = block_size
        self.controls = controls
        self.floor = floor
        self._indices, self._setting_w = strategy_result_indices(scenario)
        self.n = 0
        self.log2_t = 0.0
        self.ratio = np.ones(self.k)
        self.mixture: np.ndarray | None = None
        self.flags: list[str] = []
        self._counts = np.zeros(self.k, dtype=np.int64)
        self.history_n: list[int] = []
        self.history_stat: list[float] = []
        self.history_p: list[float] = []

    def _refit(self) -> None:
        freq = self._counts / self.n
        if self.floor > 0.0:
            freq = (1.0 - self.floor) * freq + self.floor / self.k
        q = Distribution(self.scenario, freq, empirical=True)
        # the stationarity requirement keeps the rescue rescale below
        # log2(1 + 1e-7) bits per trial
        proj = kl_project_lr(q, controls=self.controls, warm_start=self.mixture, stationarity_slack=1e-7)
        if not proj.converged:
            self.flags.append(f"projection before trial {self.n + 1} hit the iteration budget")
        self.mixture = proj.mixture
        p = proj.distribution.probs
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(p > 0.0, freq / np.where(p > 0.0, p, 1.0), 0.0)
        # cap the worst-case LR expectation of the ratio at exactly 1
        worst = float((ratio[self._indices] @ self._setting_w).max())
        if worst > 1.0:
            ratio = ratio / worst
        self.ratio = ratio

    @property
    def pvalue(self) -> float:
        return pbr_pvalue(self.log2_t)

    def update(self, trial) -> None:
        if self.n > 0 and self.n % self.block_size == 0:
            self._refit()
        enc = _encode_one(self.scenario, trial)
        value = float(self.ratio[enc])
        if value > 0.0:
            self.log2_t += math.log2(value)
        else:
            self.log2_t = -math.inf
            self.flags.append(f"zero-valued ratio at trial {self.n + 1}; p-value pinned to 1")
        self.n += 1
        self._counts[enc] += 1
        self.history_n.append(self.n)
        self.history_stat.append(self.log2_t)
        self.history_p.append(self.pvalue)

    def extend(self, trials: Iterable) -> None:
        for x in trials:
            self.update(x)

    def history(self) -> np.ndarray:
        """(N, 3) array of (n, running log2 T, p-value)."""
        return np.column_stack([self.history_n, self.history_stat, self.history_p])


def run_martingale(trials: Sequence, functional: Functional) -> MartingaleAnalysis:
    """Run the mean-based certificate over a recorded trial sequence."""
    analysis = MartingaleAnalysis(functional)
    analysis.extend(trials)
    return analysis


def run_simplified_pbr(
    trials: Sequence,
    functions: Sequence[StandardizedFunctional],
    block_size: int = 154,
    controls: OptimizerControls = DEFAULT_CONTROLS,
) -> SimplifiedPbrAnalysis:
    """Run the weighted-function protocol over a recorded trial sequence."""
    analysis = SimplifiedPbrAnalysis(functions, block_size, controls)
    analysis.extend(trials)
    return analysis


def run_full_pbr(
    trials: Sequence,
    scenario: Scenario,
    block_size: int = 154,
    controls: OptimizerControls = DEFAULT_CONTROLS,
    floor: float | None = 1e-9,
) -> FullPbrAnalysis:
    """Run the polytope-projection protocol over a recorded trial sequence."""
    analysis = FullPbrAnalysis(scenario, block_size, controls, floor)
    analysis.extend(trials)
    return analysis
