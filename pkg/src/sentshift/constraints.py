"""Imperceptibility constraints on adversarial inputs.

Three checks: visual similarity (normalized word edit distance), perplexity
under a language model (dynamic threshold of ``multiplier x dataset mean``),
and preservation of the input's own perceived sentiment. Synonym-only
substitution is enforced structurally by the attack engine, not here.

All thresholds compare inclusively: a measured value exactly equal to its
threshold passes.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .oracles import OracleUnavailableError, PerplexityOracle, SentimentOracle
from .text import TokenSequence, normalized_edit_distance

PERCEPTION_MODES = ("class-preserved", "score-delta", "both")

# Reported when a mode has no numeric bound (class-preserved): the score
# delta can never exceed 1, so the entry's pass flag carries the decision.
_VACUOUS_DELTA_BOUND = 1.0


@dataclass(frozen=True)
class ConstraintConfig:
    """Thresholds for the imperceptibility checks.

    ``max_edit_fraction`` bounds the normalized edit distance; attacks
    override it per budget. The perplexity bound is dynamic:
    ``perplexity_multiplier x mean_perplexity``, where the mean must be
    precomputed over the original sentences of the evaluation set.
    ``max_perception_delta`` only applies in the score-delta modes.
    """

    max_edit_fraction: float = 0.3
    perplexity_multiplier: float = 1.5
    mean_perplexity: float | None = None
    max_perception_delta: float | None = None
    perception_mode: str = "class-preserved"

    def __post_init__(self) -> None:
        if not 0.0 <= self.max_edit_fraction <= 1.0:
            raise ValueError(f"max_edit_fraction outside [0, 1]: {self.max_edit_fraction}")
        if self.perplexity_multiplier <= 0.0:
            raise ValueError(f"perplexity_multiplier must be positive: {self.perplexity_multiplier}")
        if self.mean_perplexity is not None and self.mean_perplexity <= 0.0:
            raise ValueError(f"mean_perplexity must be positive: {self.mean_perplexity}")
        if self.max_perception_delta is not None and not 0.0 <= self.max_perception_delta <= 1.0:
            raise ValueError(f"max_perception_delta outside [0, 1]: {self.max_perception_delta}")
        if self.perception_mode not in PERCEPTION_MODES:
            raise ValueError(f"unknown perception_mode: {self.perception_mode!r}")
        if self.perception_mode in ("score-delta", "both") and self.max_perception_delta is None:
            raise ValueError(f"perception_mode {self.perception_mode!r} requires max_perception_delta")


@dataclass(frozen=True)
class ConstraintEntry:
    """One measured constraint: name, value, threshold, verdict.

    ``measured`` is None when the oracle backing the check failed; such
    entries never pass and carry the failure in ``note``.
    """

    name: str
    measured: float | None
    threshold: float
    passed: bool
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "threshold": self.threshold,
            "passed": self.passed,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConstraintEntry":
        return cls(
            name=data["name"],
            measured=data["measured"],
            threshold=data["threshold"],
            passed=data["passed"],
            note=data.get("note"),
        )


@dataclass(frozen=True)
class ConstraintReport:
    """Conjunction of constraint entries."""

    entries: tuple[ConstraintEntry, ...]

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def entry(self, name: str) -> ConstraintEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(f"no constraint entry named {name!r}")

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries], "passed": self.passed}

    @classmethod
    def from_dict(cls, data: dict) -> "ConstraintReport":
        return cls(tuple(ConstraintEntry.from_dict(e) for e in data["entries"]))


def check_visual(
    config: ConstraintConfig, original: TokenSequence, candidate: TokenSequence
) -> ConstraintEntry:
    """Pass iff the normalized edit distance stays within ``max_edit_fraction``."""
    measured = normalized_edit_distance(original, candidate)
    return ConstraintEntry(
        name="visual",
        measured=measured,
        threshold=config.max_edit_fraction,
        passed=measured <= config.max_edit_fraction,
    )


def check_perplexity(
    config: ConstraintConfig,
    oracle: PerplexityOracle,
    candidate: TokenSequence,
    fail_closed: bool = True,
) -> ConstraintEntry:
    """Pass iff candidate perplexity is at most ``multiplier x dataset mean``.

    Oracle unavailability marks the entry failed (fail-closed) unless
    ``fail_closed`` is False, in which case the error propagates.
    """
    if config.mean_perplexity is None:
        raise ValueError("mean perplexity not set; compute it over the evaluation corpus first")
    threshold = config.perplexity_multiplier * config.mean_perplexity
    try:
        measured = oracle.perplexity(candidate)
    except OracleUnavailableError as exc:
        if not fail_closed:
            raise
        return ConstraintEntry(
            name="perplexity",
            measured=None,
            threshold=threshold,
            passed=False,
            note=f"oracle unavailable: {exc}",
        )
    return ConstraintEntry(
        name="perplexity",
        measured=measured,
        threshold=threshold,
        passed=measured <= threshold,
    )


def check_input_perception(
    config: ConstraintConfig,
    oracle: SentimentOracle,
    original: TokenSequence,
    candidate: TokenSequence,
    target_label: str,
    fail_closed: bool = True,
) -> ConstraintEntry:
    """Pass iff the input's own perceived sentiment is preserved.

    Mode "class-preserved" compares max-class labels; "score-delta" bounds
    the target-label probability change by ``max_perception_delta``; "both"
    is their conjunction. The measured value is always the score delta.
    """
    try:
        before = oracle.score(original)
        after = oracle.score(candidate)
    except OracleUnavailableError as exc:
        if not fail_closed:
            raise
        threshold = (
            config.max_perception_delta
            if config.perception_mode != "class-preserved"
            else _VACUOUS_DELTA_BOUND
        )
        return ConstraintEntry(
            name="input-perception",
            measured=None,
            threshold=threshold,
            passed=False,
            note=f"oracle unavailable: {exc}",
        )
    delta = abs(after.probability(target_label) - before.probability(target_label))
    class_ok = after.top_label() == before.top_label()
    if config.perception_mode == "class-preserved":
        passed = class_ok
        threshold = _VACUOUS_DELTA_BOUND
    elif config.perception_mode == "score-delta":
        assert config.max_perception_delta is not None
        passed = delta <= config.max_perception_delta
        threshold = config.max_perception_delta
    else:
        assert config.max_perception_delta is not None
        passed = class_ok and delta <= config.max_perception_delta
        threshold = config.max_perception_delta
    return ConstraintEntry(name="input-perception", measured=delta, threshold=threshold, passed=passed)


def compute_dataset_mean_perplexity(
    oracle: PerplexityOracle, corpus: Sequence[TokenSequence]
) -> float:
    """Arithmetic mean of per-sentence perplexities over the original corpus."""
    if not corpus:
        raise ValueError("empty corpus")
    return sum(oracle.perplexity(seq) for seq in corpus) / len(corpus)


def evaluate_constraints(
    config: ConstraintConfig,
    original: TokenSequence,
    candidate: TokenSequence,
    perplexity_oracle: PerplexityOracle,
    input_sentiment: SentimentOracle | None = None,
    target_label: str | None = None,
) -> ConstraintReport:
    """Evaluate the full constraint set; overall pass is the conjunction.

    Omits the input-perception entry when ``input_sentiment`` is None
    (direct attacks). Oracle failures fail closed: an errored entry never
    passes, so no unvalidated candidate is ever reported as imperceptible.
    """
    entries = [
        check_visual(config, original, candidate),
        check_perplexity(config, perplexity_oracle, candidate),
    ]
    if input_sentiment is not None:
        if target_label is None:
            raise ValueError("target_label required for the input-perception check")
        entries.append(
            check_input_perception(config, input_sentiment, original, candidate, target_label)
        )
    return ConstraintReport(tuple(entries))
