"""Sentiment saliency: ranking source positions by output-sentiment impact.

The saliency of a position is the absolute change in the translation's
target-label probability when that single token is deleted. The ranking is
computed once on the original sentence; the attack walks it statically.
"""

from __future__ import annotations

from dataclasses import dataclass

from .oracles import SentimentOracle, TranslationOracle
from .text import TokenSequence


@dataclass(frozen=True)
class SaliencyRanking:
    """Positions ordered by saliency descending, ties by ascending position.

    Covers every position of the ranked sequence exactly once. The oracle
    ids and target label record what the ranking was computed against.
    """

    entries: tuple[tuple[int, float], ...]
    translator_id: str
    sentiment_id: str
    target_label: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        positions = sorted(p for p, _ in self.entries)
        if positions != list(range(len(self.entries))):
            raise ValueError("entries are not a permutation of 0..T-1")
        for (pos_a, a), (pos_b, b) in zip(self.entries, self.entries[1:]):
            if a < b or (a == b and pos_a > pos_b):
                raise ValueError("entries not sorted by saliency desc, position asc")
        for pos, value in self.entries:
            if value < 0.0:
                raise ValueError(f"negative saliency at position {pos}")

    def positions(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.entries)


def _target_probability(
    seq: TokenSequence,
    translator: TranslationOracle,
    sentiment: SentimentOracle,
    target_label: str,
) -> float:
    return sentiment.score(translator.translate(seq)).probability(target_label)


def sentiment_saliency(
    source: TokenSequence,
    position: int,
    translator: TranslationOracle,
    sentiment: SentimentOracle,
    target_label: str,
) -> float:
    """Absolute target-probability change when ``position`` is deleted.

    Costs two translation and two sentiment calls (fewer with memoizing
    oracles). Requires at least two tokens so the deletion leaves a
    non-empty sequence.
    """
    if len(source) < 2:
        raise ValueError("cannot delete sole token")
    if not 0 <= position < len(source):
        raise IndexError(f"position {position} out of range")
    base = _target_probability(source, translator, sentiment, target_label)
    reduced = _target_probability(source.delete_token(position), translator, sentiment, target_label)
    return abs(reduced - base)


def rank_positions(
    source: TokenSequence,
    translator: TranslationOracle,
    sentiment: SentimentOracle,
    target_label: str,
) -> SaliencyRanking:
    """Rank every position of ``source`` by sentiment saliency.

    The base translation is computed once and reused, so at most T+1
    translation calls are issued for a T-token sentence.
    """
    if len(source) < 2:
        raise ValueError("cannot delete sole token")
    base = _target_probability(source, translator, sentiment, target_label)
    scored = []
    for position in range(len(source)):
        reduced = _target_probability(
            source.delete_token(position), translator, sentiment, target_label
        )
        scored.append((position, abs(reduced - base)))
    scored.sort(key=lambda entry: (-entry[1], entry[0]))
    return SaliencyRanking(
        entries=tuple(scored),
        translator_id=translator.oracle_id,
        sentiment_id=sentiment.oracle_id,
        target_label=target_label,
    )
