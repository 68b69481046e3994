"""Experiment configurations, trial records, the encoded result space, and file IO.

A trial result is encoded as a mixed-radix integer whose most significant
digits are the per-party settings (party 1 first, 0-based internally) followed
by the per-party outcomes.  All distributions over the result space are dense
arrays indexed by that encoding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ScenarioMismatchError, SizeLimitError, TrialFormatError

# Largest encoded index we are willing to hand out (fits in int64).
INDEX_LIMIT = 2**63
# Largest result space that operations may enumerate or materialize densely.
ENUMERATION_CAP = 2**24


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    """An (l, s, d) measurement configuration with a fixed joint-setting distribution.

    ``setting_distribution`` is indexed by the mixed-radix encoding of the
    per-party settings (party 1 most significant); it defaults to uniform.
    """

    parties: int
    settings_per_party: int
    outcomes_per_setting: int
    setting_distribution: np.ndarray | None = None

    def __post_init__(self):
        l, s, d = self.parties, self.settings_per_party, self.outcomes_per_setting
        if min(l, s, d) < 1:
            raise ValueError("parties, settings_per_party and outcomes_per_setting must be >= 1")
        if s**l > ENUMERATION_CAP:
            raise SizeLimitError(f"joint-setting space {s}^{l} exceeds the storage cap {ENUMERATION_CAP}")
        n_joint = s**l
        if self.setting_distribution is None:
            dist = np.full(n_joint, 1.0 / n_joint)
        else:
            dist = np.asarray(self.setting_distribution, dtype=float)
            if dist.shape != (n_joint,):
                raise ValueError(f"setting_distribution must have length {n_joint}")
            if np.any(dist < 0.0) or abs(float(dist.sum()) - 1.0) > 1e-12:
                raise ValueError("setting_distribution entries must be >= 0 and sum to 1 within 1e-12")
        object.__setattr__(self, "setting_distribution", _frozen(dist))

    @property
    def n_joint_settings(self) -> int:
        return self.settings_per_party**self.parties

    @property
    def n_joint_outcomes(self) -> int:
        return self.outcomes_per_setting**self.parties

    def settings_index(self, settings: Sequence[int]) -> int:
        """Mixed-radix index of a 1-based per-party settings tuple."""
        s = self.settings_per_party
        idx = 0
        for i, u in enumerate(settings):
            if not 1 <= u <= s:
                raise ValueError(f"setting {u} of party {i + 1} outside 1..{s}")
            idx = idx * s + (u - 1)
        return idx

    def setting_probability(self, settings: Sequence[int]) -> float:
        return float(self.setting_distribution[self.settings_index(settings)])

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.setting_distribution, 1.0 / self.n_joint_settings, atol=tol))


@dataclass(frozen=True)
class TrialResult:
    """One trial: per-party 1-based setting choices and 0-based outcome indices."""

    settings: tuple[int, ...]
    outcomes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(int(u) for u in self.settings))
        object.__setattr__(self, "outcomes", tuple(int(a) for a in self.outcomes))

    def validate_for(self, scenario: Scenario) -> None:
        l, s, d = scenario.parties, scenario.settings_per_party, scenario.outcomes_per_setting
        if len(self.settings) != l or len(self.outcomes) != l:
            raise ValueError(f"trial has {len(self.settings)} settings / {len(self.outcomes)} outcomes, expected {l}")
        for i, u in enumerate(self.settings):
            if not 1 <= u <= s:
                raise ValueError(f"setting {u} of party {i + 1} outside 1..{s}")
        for i, a in enumerate(self.outcomes):
            if not 0 <= a < d:
                raise ValueError(f"outcome {a} of party {i + 1} outside 0..{d - 1}")


def result_space_size(scenario: Scenario) -> int:
    """Number of distinct trial results, (d*s)^l."""
    k = (scenario.outcomes_per_setting * scenario.settings_per_party) ** scenario.parties
    if k > INDEX_LIMIT:
        raise SizeLimitError(f"result space (d*s)^l = {k} exceeds the index limit 2^63")
    return k


def encode_result(scenario: Scenario, x: TrialResult) -> int:
    """Bijective mixed-radix index of a trial result (settings digits first)."""
    x.validate_for(scenario)
    s, d = scenario.settings_per_party, scenario.outcomes_per_setting
    idx = 0
    for u in x.settings:
        idx = idx * s + (u - 1)
    for a in x.outcomes:
        idx = idx * d + a
    return idx


def decode_result(scenario: Scenario, index: int) -> TrialResult:
    """Inverse of :func:`encode_result`."""
    k = result_space_size(scenario)
    if not 0 <= index < k:
        raise ValueError(f"index {index} outside 0..{k - 1}")
    l, s, d = scenario.parties, scenario.settings_per_party, scenario.outcomes_per_setting
    digits = []
    rem = int(index)
    for _ in range(l):
        rem, a = divmod(rem, d)
        digits.append(a)
    outcomes = tuple(reversed(digits))
    digits = []
    for _ in range(l):
        rem, u = divmod(rem, s)
        digits.append(u + 1)
    return TrialResult(tuple(reversed(digits)), outcomes)


def encode_trials(scenario: Scenario, trials: Iterable[TrialResult]) -> np.ndarray:
    """Encode a trial sequence into an int64 index array."""
    return np.fromiter((encode_result(scenario, x) for x in trials), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability assignment over the encoded result space of a scenario.

    Model distributions must reproduce the scenario's joint-setting
    distribution when marginalized over outcomes.  Empirical frequency tables
    (``empirical=True``) are exempt from that requirement.
    """

    scenario: Scenario
    probs: np.ndarray
    empirical: bool = False

    def __post_init__(self):
        k = result_space_size(self.scenario)
        if k > ENUMERATION_CAP:
            raise SizeLimitError(f"dense distribution over {k} results exceeds the cap {ENUMERATION_CAP}")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (k,):
            raise ValueError(f"probs must have length {k}")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be non-negative")
        if abs(float(p.sum()) - 1.0) > 1e-10:
            raise ValueError("probabilities must sum to 1 within 1e-10")
        if not self.empirical:
            marginal = p.reshape(self.scenario.n_joint_settings, -1).sum(axis=1)
            if not np.allclose(marginal, self.scenario.setting_distribution, atol=1e-10):
                raise ValueError("outcome marginals do not reproduce the setting distribution")
        object.__setattr__(self, "probs", _frozen(p))

    def expectation(self, values: np.ndarray) -> float:
        """Expectation of a per-result value table under this distribution."""
        return float(np.dot(self.probs, np.asarray(values, dtype=float)))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs)


def uniform_outcome_distribution(scenario: Scenario) -> Distribution:
    """Outcomes uniformly random given the settings; always LR-achievable."""
    per = np.repeat(scenario.setting_distribution / scenario.n_joint_outcomes, scenario.n_joint_outcomes)
    return Distribution(scenario, per)


def empirical_distribution(scenario: Scenario, trials: Sequence[TrialResult]) -> Distribution:
    """Empirical frequency table of a non-empty trial sequence."""
    if len(trials) == 0:
        raise ValueError("empirical distribution of an empty trial sequence is undefined")
    k = result_space_size(scenario)
    if k > ENUMERATION_CAP:
        raise SizeLimitError(f"dense frequency table over {k} results exceeds the cap {ENUMERATION_CAP}")
    counts = np.bincount(encode_trials(scenario, trials), minlength=k)
    return Distribution(scenario, counts / len(trials), empirical=True)


# ---------------------------------------------------------------------------
# file formats


def scenario_to_json(scenario: Scenario) -> dict:
    obj = {
        "l": scenario.parties,
        "s": scenario.settings_per_party,
        "d": scenario.outcomes_per_setting,
    }
    if not scenario.is_uniform():
        obj["setting_distribution"] = [float(v) for v in scenario.setting_distribution]
    return obj


def scenario_from_json(obj: dict) -> Scenario:
    try:
        l, s, d = int(obj["l"]), int(obj["s"]), int(obj["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TrialFormatError(f"scenario object must carry integer fields l, s, d: {obj!r}") from exc
    dist = obj.get("setting_distribution")
    return Scenario(l, s, d, None if dist is None else np.asarray(dist, dtype=float))


def _check_same_scenario(found: Scenario, expected: Scenario, where: str) -> None:
    same = (
        found.parties == expected.parties
        and found.settings_per_party == expected.settings_per_party
        and found.outcomes_per_setting == expected.outcomes_per_setting
        and np.allclose(found.setting_distribution, expected.setting_distribution, atol=1e-12)
    )
    if not same:
        raise ScenarioMismatchError(f"{where}: scenario in file does not match the one supplied")


def read_trials(path: str | Path, scenario: Scenario) -> list[TrialResult]:
    """Read a trial-record file (one JSON object per line, optional scenario header)."""
    trials: list[TrialResult] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TrialFormatError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if lineno == 1 and isinstance(obj, dict) and "scenario" in obj:
                _check_same_scenario(scenario_from_json(obj["scenario"]), scenario, f"{path}: line 1")
                continue
            if not isinstance(obj, dict) or "settings" not in obj or "outcomes" not in obj:
                raise TrialFormatError(f"{path}: line {lineno}: record must carry 'settings' and 'outcomes'")
            trial = TrialResult(tuple(obj["settings"]), tuple(obj["outcomes"]))
            try:
                trial.validate_for(scenario)
            except ValueError as exc:
                raise TrialFormatError(f"{path}: line {lineno}: {exc}") from exc
            trials.append(trial)
    return trials


def write_trials(path: str | Path, scenario: Scenario, trials: Iterable[TrialResult], header: bool = True) -> None:
    """Inverse of :func:`read_trials`; writes the optional scenario header line."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(json.dumps({"scenario": scenario_to_json(scenario)}, separators=(",", ":")) + "\n")
        for x in trials:
            fh.write(json.dumps({"settings": list(x.settings), "outcomes": list(x.outcomes)}, separators=(",", ":")) + "\n")


def read_distribution(path: str | Path) -> Distribution:
    """Read a distribution file ``{"scenario": .., "probs": [..]}``."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if "scenario" not in obj or "probs" not in obj:
        raise TrialFormatError(f"{path}: distribution file must carry 'scenario' and 'probs'")
    scenario = scenario_from_json(obj["scenario"])
    return Distribution(scenario, np.asarray(obj["probs"], dtype=float), empirical=bool(obj.get("empirical", False)))


def write_distribution(path: str | Path, dist: Distribution) -> None:
    obj = {"scenario": scenario_to_json(dist.scenario), "probs": [float(v) for v in dist.probs]}
    if dist.empirical:
        obj["empirical"] = True
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")
