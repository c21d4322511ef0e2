"""Greedy synonym-substitution attacks on translation output sentiment.

The attack walks source positions in saliency order and, at each position,
substitutes the synonym that maximizes the translation's target-label
probability, subject to the imperceptibility constraints on the input.
A substitution is accepted only if it strictly improves the target
probability; the walk stops once the edit budget is spent.

``direct_attack`` runs the same procedure on target-language text with an
identity translator and no input-perception constraint, as a comparison
baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

from .constraints import (
    ConstraintConfig,
    ConstraintReport,
    check_input_perception,
    check_perplexity,
    check_visual,
    evaluate_constraints,
)
from .oracles import IdentityTranslator, OracleSuite, PerplexityOracle, SentimentOracle, SentimentScore, SynonymOracle
from .saliency import SaliencyRanking, rank_positions
from .text import TokenSequence

Status = Literal["improved", "unchanged", "no-candidates"]

STATUS_IMPROVED: Status = "improved"
STATUS_UNCHANGED: Status = "unchanged"
STATUS_NO_CANDIDATES: Status = "no-candidates"

# Snap tolerance for floor(fraction * T): products like 1/7 * 7 land a few
# ulps below the exact integer and must not lose a whole edit.
_FLOOR_SNAP = 1e-9


@dataclass(frozen=True)
class AttackBudget:
    """Maximum fraction of source words that may be substituted.

    The fraction doubles as the visual-similarity bound for the attack; the
    substitution count is N = floor(fraction * T).
    """

    fraction: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"budget fraction outside [0, 1]: {self.fraction}")

    def limit(self, length: int) -> int:
        if length < 0:
            raise ValueError("negative length")
        product = self.fraction * length
        nearest = round(product)
        if abs(product - nearest) < _FLOOR_SNAP:
            return int(nearest)
        return math.floor(product)


@dataclass(frozen=True)
class Substitution:
    """One accepted edit: the token at ``position`` becomes ``replacement``."""

    position: int
    original: str
    replacement: str

    def __post_init__(self) -> None:
        if self.position < 0:
            raise ValueError(f"negative position: {self.position}")
        if self.replacement == self.original:
            raise ValueError(f"replacement equals original token: {self.original!r}")

    def to_dict(self) -> dict:
        return {"position": self.position, "original": self.original, "replacement": self.replacement}

    @classmethod
    def from_dict(cls, data: dict) -> "Substitution":
        return cls(data["position"], data["original"], data["replacement"])


@dataclass(frozen=True)
class _WalkState:
    """Resumable greedy-walk state for nested-budget extension."""

    ranking: SaliencyRanking
    cursor: int
    tokens: tuple[str, ...]
    target_prob: float
    substitutions: tuple[Substitution, ...]
    saw_feasible: bool


@dataclass(frozen=True)
class AttackResult:
    """Outcome of one attack on one sentence.

    ``adversarial`` always equals the original with the accepted
    substitutions applied; with status "improved" the constraint report is
    guaranteed to pass and the target probability strictly exceeds the
    original's.
    """

    original: TokenSequence
    adversarial: TokenSequence
    substitutions: tuple[Substitution, ...]
    original_output: TokenSequence
    adversarial_output: TokenSequence
    score_before: SentimentScore
    score_after: SentimentScore
    report: ConstraintReport
    status: Status
    target_label: str
    budget: AttackBudget
    config: ConstraintConfig
    oracle_ids: tuple[tuple[str, str | None], ...]
    walk_state: _WalkState | None = field(default=None, compare=False, repr=False)


def apply_substitutions(
    original: TokenSequence, substitutions: tuple[Substitution, ...] | list[Substitution]
) -> TokenSequence:
    """Apply in-place token substitutions; length is preserved.

    Positions must be distinct and in range, and each substitution's
    recorded original token must match the sequence.
    """
    if not original.tokens:
        raise ValueError("empty input")
    seen: set[int] = set()
    tokens = list(original.tokens)
    for sub in substitutions:
        if not 0 <= sub.position < len(tokens):
            raise ValueError(f"substitution position {sub.position} out of range")
        if sub.position in seen:
            raise ValueError(f"duplicate substitution position {sub.position}")
        if original.tokens[sub.position] != sub.original:
            raise ValueError(
                f"substitution original {sub.original!r} does not match token "
                f"{original.tokens[sub.position]!r} at position {sub.position}"
            )
        seen.add(sub.position)
        tokens[sub.position] = sub.replacement
    if not seen:
        return original
    return TokenSequence(tuple(tokens), original.language)


def _effective_config(config: ConstraintConfig, budget: AttackBudget) -> ConstraintConfig:
    # The budget fraction is the attack's own visual bound.
    return replace(config, max_edit_fraction=budget.fraction)


def _candidate_feasible(
    source: TokenSequence,
    tentative: TokenSequence,
    suite: OracleSuite,
    config: ConstraintConfig,
    target_label: str,
) -> bool:
    """Input-side constraint checks for one tentative source sequence.

    Oracle failures propagate (the sweep runner retries or records them);
    fail-closed reporting is only for emitted reports.
    """
    if not check_visual(config, source, tentative).passed:
        return False
    if not check_perplexity(config, suite.perplexity, tentative, fail_closed=False).passed:
        return False
    if suite.input_sentiment is not None:
        entry = check_input_perception(
            config, suite.input_sentiment, source, tentative, target_label, fail_closed=False
        )
        if not entry.passed:
            return False
    return True


def _initial_state(
    source: TokenSequence,
    suite: OracleSuite,
    target_label: str,
) -> _WalkState:
    if len(source) >= 2:
        ranking = rank_positions(source, suite.translator, suite.output_sentiment, target_label)
    else:
        # Saliency needs a deletable token; a sole position ranks trivially.
        ranking = SaliencyRanking(
            entries=((0, 0.0),),
            translator_id=suite.translator.oracle_id,
            sentiment_id=suite.output_sentiment.oracle_id,
            target_label=target_label,
        )
    base_prob = suite.output_sentiment.score(suite.translator.translate(source)).probability(
        target_label
    )
    return _WalkState(
        ranking=ranking,
        cursor=0,
        tokens=source.tokens,
        target_prob=base_prob,
        substitutions=(),
        saw_feasible=False,
    )


def _advance_walk(
    source: TokenSequence,
    state: _WalkState,
    limit: int,
    suite: OracleSuite,
    config: ConstraintConfig,
    target_label: str,
) -> _WalkState:
    """Continue the ranked-position walk until the budget or positions run out."""
    cursor = state.cursor
    tokens = list(state.tokens)
    current_prob = state.target_prob
    substitutions = list(state.substitutions)
    saw_feasible = state.saw_feasible
    entries = state.ranking.entries

    while cursor < len(entries) and len(substitutions) < limit:
        position, _ = entries[cursor]
        cursor += 1
        original_token = source.tokens[position]
        feasible: list[tuple[str, TokenSequence]] = []
        for candidate in sorted(suite.synonyms.synonyms(original_token, source.language)):
            tentative_tokens = list(tokens)
            tentative_tokens[position] = candidate
            tentative = TokenSequence(tuple(tentative_tokens), source.language)
            if _candidate_feasible(source, tentative, suite, config, target_label):
                feasible.append((candidate, tentative))
        if not feasible:
            continue
        saw_feasible = True
        best_candidate: str | None = None
        best_tentative: TokenSequence | None = None
        best_prob = -1.0
        # Candidates are in code-point order; strict comparison keeps the
        # first of any tied pair, which is the documented tie-break.
        for candidate, tentative in feasible:
            prob = suite.output_sentiment.score(suite.translator.translate(tentative)).probability(
                target_label
            )
            if prob > best_prob:
                best_candidate, best_tentative, best_prob = candidate, tentative, prob
        assert best_candidate is not None and best_tentative is not None
        if best_prob > current_prob:
            tokens = list(best_tentative.tokens)
            current_prob = best_prob
            substitutions.append(Substitution(position, original_token, best_candidate))

    return _WalkState(
        ranking=state.ranking,
        cursor=cursor,
        tokens=tuple(tokens),
        target_prob=current_prob,
        substitutions=tuple(substitutions),
        saw_feasible=saw_feasible,
    )


def _finalize(
    source: TokenSequence,
    state: _WalkState | None,
    budget: AttackBudget,
    target_label: str,
    suite: OracleSuite,
    config: ConstraintConfig,
) -> AttackResult:
    substitutions = state.substitutions if state is not None else ()
    adversarial = apply_substitutions(source, substitutions)
    original_output = suite.translator.translate(source)
    adversarial_output = suite.translator.translate(adversarial)
    score_before = suite.output_sentiment.score(original_output)
    score_after = suite.output_sentiment.score(adversarial_output)
    report = evaluate_constraints(
        _effective_config(config, budget),
        source,
        adversarial,
        perplexity_oracle=suite.perplexity,
        input_sentiment=suite.input_sentiment,
        target_label=target_label,
    )
    if substitutions:
        status = STATUS_IMPROVED
    elif state is not None and state.cursor > 0 and not state.saw_feasible:
        status = STATUS_NO_CANDIDATES
    else:
        status = STATUS_UNCHANGED
    return AttackResult(
        original=source,
        adversarial=adversarial,
        substitutions=substitutions,
        original_output=original_output,
        adversarial_output=adversarial_output,
        score_before=score_before,
        score_after=score_after,
        report=report,
        status=status,
        target_label=target_label,
        budget=budget,
        config=config,
        oracle_ids=suite.ids(),
        walk_state=state,
    )


def greedy_attack(
    source: TokenSequence,
    budget: AttackBudget,
    target_label: str,
    suite: OracleSuite,
    config: ConstraintConfig,
    rerank: bool = False,
) -> AttackResult:
    """Greedy budgeted synonym-substitution attack on one source sentence.

    With ``rerank`` the saliency ranking is recomputed on the current
    sequence after every accepted substitution instead of being walked
    statically; such results cannot be extended to larger budgets.
    """
    if not source.tokens:
        raise ValueError("empty input")
    limit = budget.limit(len(source))
    if limit == 0:
        return _finalize(source, None, budget, target_label, suite, config)
    if rerank:
        return _rerank_attack(source, budget, limit, target_label, suite, config)
    state = _initial_state(source, suite, target_label)
    state = _advance_walk(
        source, state, limit, suite, _effective_config(config, budget), target_label
    )
    return _finalize(source, state, budget, target_label, suite, config)


def extend_attack(
    previous: AttackResult,
    budget: AttackBudget,
    suite: OracleSuite,
    config: ConstraintConfig,
) -> AttackResult:
    """Continue a previous attack under a larger budget.

    The previous substitutions are kept as a prefix and the position walk
    resumes where it stopped, so the target probability is non-decreasing
    in the budget. Requires the same oracles and constraint config.
    """
    if budget.fraction < previous.budget.fraction:
        raise ValueError(
            f"budget {budget.fraction} is smaller than previous {previous.budget.fraction}"
        )
    if config != previous.config:
        raise ValueError("mismatched config: extension must reuse the previous constraint config")
    if suite.ids() != previous.oracle_ids:
        raise ValueError("mismatched oracles: extension must reuse the previous oracle suite")
    source = previous.original
    limit = budget.limit(len(source))
    if limit == 0:
        return _finalize(source, None, budget, previous.target_label, suite, config)
    state = previous.walk_state
    if state is None:
        # Previous run was the zero-budget short-circuit; start fresh.
        state = _initial_state(source, suite, previous.target_label)
    if len(state.substitutions) < limit:
        state = _advance_walk(
            source, state, limit, suite, _effective_config(config, budget), previous.target_label
        )
    return _finalize(source, state, budget, previous.target_label, suite, config)


def _rerank_attack(
    source: TokenSequence,
    budget: AttackBudget,
    limit: int,
    target_label: str,
    suite: OracleSuite,
    config: ConstraintConfig,
) -> AttackResult:
    """Greedy attack that re-ranks remaining positions after each acceptance."""
    effective = _effective_config(config, budget)
    current = source
    edited: set[int] = set()
    substitutions: list[Substitution] = []
    saw_feasible = False
    walked = False
    first_ranking: SaliencyRanking | None = None
    while len(substitutions) < limit:
        state = _initial_state(current, suite, target_label)
        if first_ranking is None:
            first_ranking = state.ranking
        accepted = None
        for position, _ in state.ranking.entries:
            if position in edited:
                continue
            walked = True
            original_token = source.tokens[position]
            feasible = []
            for candidate in sorted(suite.synonyms.synonyms(original_token, source.language)):
                tentative = current.replace_token(position, candidate)
                if _candidate_feasible(source, tentative, suite, effective, target_label):
                    feasible.append((candidate, tentative))
            if not feasible:
                continue
            saw_feasible = True
            best = None
            best_prob = -1.0
            for candidate, tentative in feasible:
                prob = suite.output_sentiment.score(
                    suite.translator.translate(tentative)
                ).probability(target_label)
                if prob > best_prob:
                    best, best_prob = (candidate, tentative), prob
            if best is not None and best_prob > state.target_prob:
                accepted = (position, original_token, best[0], best[1])
                break
        if accepted is None:
            break
        position, original_token, candidate, tentative = accepted
        current = tentative
        edited.add(position)
        substitutions.append(Substitution(position, original_token, candidate))
    assert first_ranking is not None or not walked
    final = _WalkState(
        ranking=first_ranking or _initial_state(source, suite, target_label).ranking,
        cursor=len(source) if walked else 0,
        tokens=current.tokens,
        target_prob=suite.output_sentiment.score(suite.translator.translate(current)).probability(
            target_label
        ),
        substitutions=tuple(substitutions),
        saw_feasible=saw_feasible,
    )
    result = _finalize(source, final, budget, target_label, suite, config)
    # Re-ranked walks violate the static prefix contract; block extension.
    return replace(result, walk_state=None) if substitutions else result


def direct_attack(
    text: TokenSequence,
    budget: AttackBudget,
    target_label: str,
    sentiment: SentimentOracle,
    perplexity: PerplexityOracle,
    synonyms: SynonymOracle,
    config: ConstraintConfig,
) -> AttackResult:
    """Attack target-language text directly (comparison baseline).

    Identical greedy procedure with an identity translator; saliency is
    deletion on the text itself and the input-perception constraint is not
    applied (it would contradict the objective). Synonym and perplexity
    constraints are still enforced on the target-language text.
    """
    suite = direct_suite(text.language, sentiment, perplexity, synonyms)
    return greedy_attack(text, budget, target_label, suite, config)


def direct_suite(
    language: str,
    sentiment: SentimentOracle,
    perplexity: PerplexityOracle,
    synonyms: SynonymOracle,
) -> OracleSuite:
    """Oracle suite for direct attacks: identity translation, no input check."""
    return OracleSuite(
        translator=IdentityTranslator(language),
        output_sentiment=sentiment,
        perplexity=perplexity,
        synonyms=synonyms,
        input_sentiment=None,
    )
