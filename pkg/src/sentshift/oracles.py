"""Black-box model interfaces and deterministic toy implementations.

Models (translation, sentiment, perplexity, synonyms) are reached only
through these oracle interfaces; nothing downstream inspects model
internals. The toy implementations are pure functions of their inputs,
which makes every attack outcome hand-computable offline.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass

from .text import TokenSequence


class OracleError(Exception):
    """Base class for oracle failures."""


class OracleUnavailableError(OracleError):
    """Transient oracle failure; the request may be retried."""


class ProtocolError(OracleError):
    """Malformed oracle response; not retryable."""


@dataclass(frozen=True)
class SentimentScore:
    """Probability distribution over sentiment labels.

    ``probabilities`` is an ordered tuple of ``(label, probability)`` pairs
    that sums to 1 within 1e-9.
    """

    probabilities: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probabilities", tuple(tuple(p) for p in self.probabilities))
        if not self.probabilities:
            raise ValueError("empty label set")
        labels = [label for label, _ in self.probabilities]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        total = 0.0
        for label, prob in self.probabilities:
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"probability for {label!r} outside [0, 1]: {prob}")
            total += prob
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.probabilities)

    def probability(self, label: str) -> float:
        for name, prob in self.probabilities:
            if name == label:
                return prob
        raise KeyError(f"unknown label: {label!r}")

    def top_label(self, ignore: Collection[str] = ()) -> str:
        """Label with maximum probability.

        Exact ties resolve to the lexicographically smallest label, which
        makes a positive/negative tie classify as negative.
        """
        candidates = [(prob, label) for label, prob in self.probabilities if label not in ignore]
        if not candidates:
            raise ValueError("all labels ignored")
        best_prob = max(prob for prob, _ in candidates)
        return min(label for prob, label in candidates if prob == best_prob)


class TranslationOracle(ABC):
    """Maps a source-language token sequence to its best translation."""

    kind = "translation"
    oracle_id: str
    deterministic: bool = True
    source_language: str
    target_language: str

    @abstractmethod
    def translate(self, source: TokenSequence) -> TokenSequence:
        raise NotImplementedError


class SentimentOracle(ABC):
    """Scores a token sequence over a fixed sentiment label set."""

    kind = "sentiment"
    oracle_id: str
    deterministic: bool = True
    labels: tuple[str, ...]

    @abstractmethod
    def score(self, seq: TokenSequence) -> SentimentScore:
        raise NotImplementedError


class PerplexityOracle(ABC):
    """Sentence perplexity under a language model."""

    kind = "perplexity"
    oracle_id: str
    deterministic: bool = True

    @abstractmethod
    def perplexity(self, seq: TokenSequence) -> float:
        raise NotImplementedError


class SynonymOracle(ABC):
    """Candidate word replacements for a single token."""

    kind = "synonym"
    oracle_id: str
    deterministic: bool = True

    @abstractmethod
    def synonyms(self, token: str, language: str) -> tuple[str, ...]:
        raise NotImplementedError


def _require_nonempty(seq: TokenSequence) -> None:
    if not seq.tokens:
        raise ValueError("empty input")


class DictionaryTranslator(TranslationOracle):
    """Token-wise dictionary translator; unmapped tokens pass through."""

    def __init__(
        self,
        mapping: Mapping[str, str],
        source_language: str,
        target_language: str,
        oracle_id: str | None = None,
    ) -> None:
        self._mapping = dict(mapping)
        self.source_language = source_language
        self.target_language = target_language
        self.oracle_id = oracle_id or f"toy-translator:{source_language}-{target_language}"

    def translate(self, source: TokenSequence) -> TokenSequence:
        _require_nonempty(source)
        if source.language != self.source_language:
            raise ValueError(
                f"wrong source language: got {source.language!r}, expected {self.source_language!r}"
            )
        tokens = tuple(self._mapping.get(token, token) for token in source.tokens)
        return TokenSequence(tokens, self.target_language)


class IdentityTranslator(TranslationOracle):
    """Returns its input unchanged; used by direct attacks on target text."""

    def __init__(self, language: str) -> None:
        self.source_language = language
        self.target_language = language
        self.oracle_id = f"identity:{language}"

    def translate(self, source: TokenSequence) -> TokenSequence:
        _require_nonempty(source)
        if source.language != self.source_language:
            raise ValueError(
                f"wrong source language: got {source.language!r}, expected {self.source_language!r}"
            )
        return source


def _as_weights(entries: Mapping[str, int] | Iterable[str]) -> dict[str, int]:
    if isinstance(entries, Mapping):
        return {token: int(weight) for token, weight in entries.items()}
    return {token: 1 for token in entries}


class LexiconSentiment(SentimentOracle):
    """Lexicon counting scorer over {negative, positive}.

    With P and N the total positive/negative lexicon weight present in the
    sequence and T its length, the positive probability is
    ``clamp(0.5 + (P - N) / (2T), 0, 1)``.
    """

    labels = ("negative", "positive")

    def __init__(
        self,
        positive: Mapping[str, int] | Iterable[str],
        negative: Mapping[str, int] | Iterable[str],
        language: str | None = None,
        oracle_id: str | None = None,
    ) -> None:
        self._positive = _as_weights(positive)
        self._negative = _as_weights(negative)
        self.language = language
        self.oracle_id = oracle_id or f"toy-sentiment:{language or 'any'}"

    def score(self, seq: TokenSequence) -> SentimentScore:
        _require_nonempty(seq)
        if self.language is not None and seq.language != self.language:
            raise ValueError(f"unsupported language: {seq.language!r}")
        pos = sum(self._positive.get(token, 0) for token in seq.tokens)
        neg = sum(self._negative.get(token, 0) for token in seq.tokens)
        p = 0.5 + (pos - neg) / (2 * len(seq))
        p = min(1.0, max(0.0, p))
        return SentimentScore((("negative", 1.0 - p), ("positive", p)))


class UnigramPerplexity(PerplexityOracle):
    """Unigram language model with a probability floor for unknown tokens."""

    def __init__(
        self,
        probabilities: Mapping[str, float],
        floor: float = 1e-4,
        language: str | None = None,
        oracle_id: str | None = None,
    ) -> None:
        if not 0.0 < floor <= 1.0:
            raise ValueError(f"floor outside (0, 1]: {floor}")
        for token, prob in probabilities.items():
            if not 0.0 < prob <= 1.0:
                raise ValueError(f"probability for {token!r} outside (0, 1]: {prob}")
        self._probabilities = dict(probabilities)
        self._floor = floor
        self.language = language
        self.oracle_id = oracle_id or f"toy-perplexity:{language or 'any'}"

    def perplexity(self, seq: TokenSequence) -> float:
        _require_nonempty(seq)
        log_total = sum(
            math.log(self._probabilities.get(token, self._floor)) for token in seq.tokens
        )
        return math.exp(-log_total / len(seq))


class StaticSynonyms(SynonymOracle):
    """Fixed synonym table; unknown tokens have no synonyms."""

    def __init__(
        self,
        table: Mapping[str, Iterable[str]],
        language: str | None = None,
        oracle_id: str | None = None,
    ) -> None:
        self._table = {token: tuple(entries) for token, entries in table.items()}
        self.language = language
        self.oracle_id = oracle_id or f"toy-synonyms:{language or 'any'}"

    def synonyms(self, token: str, language: str) -> tuple[str, ...]:
        if not token:
            raise ValueError("empty token")
        if self.language is not None and language != self.language:
            return ()
        candidates = self._table.get(token, ())
        return tuple(sorted({c for c in candidates if c != token}))


class CachingTranslator(TranslationOracle):
    """Memoizes an inner translator by (tokens, language)."""

    def __init__(self, inner: TranslationOracle) -> None:
        self._inner = inner
        self._cache: dict[tuple[tuple[str, ...], str], TokenSequence] = {}

    @property
    def oracle_id(self) -> str:  # type: ignore[override]
        return self._inner.oracle_id

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self._inner.deterministic

    @property
    def source_language(self) -> str:  # type: ignore[override]
        return self._inner.source_language

    @property
    def target_language(self) -> str:  # type: ignore[override]
        return self._inner.target_language

    def translate(self, source: TokenSequence) -> TokenSequence:
        key = (source.tokens, source.language)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._inner.translate(source)
            self._cache[key] = hit
        return hit


class CachingSentiment(SentimentOracle):
    """Memoizes an inner sentiment oracle by (tokens, language)."""

    def __init__(self, inner: SentimentOracle) -> None:
        self._inner = inner
        self._cache: dict[tuple[tuple[str, ...], str], SentimentScore] = {}

    @property
    def oracle_id(self) -> str:  # type: ignore[override]
        return self._inner.oracle_id

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self._inner.deterministic

    @property
    def labels(self) -> tuple[str, ...]:  # type: ignore[override]
        return self._inner.labels

    def score(self, seq: TokenSequence) -> SentimentScore:
        key = (seq.tokens, seq.language)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._inner.score(seq)
            self._cache[key] = hit
        return hit


class CachingPerplexity(PerplexityOracle):
    """Memoizes an inner perplexity oracle by (tokens, language)."""

    def __init__(self, inner: PerplexityOracle) -> None:
        self._inner = inner
        self._cache: dict[tuple[tuple[str, ...], str], float] = {}

    @property
    def oracle_id(self) -> str:  # type: ignore[override]
        return self._inner.oracle_id

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self._inner.deterministic

    def perplexity(self, seq: TokenSequence) -> float:
        key = (seq.tokens, seq.language)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._inner.perplexity(seq)
            self._cache[key] = hit
        return hit


class CachingSynonyms(SynonymOracle):
    """Memoizes an inner synonym oracle by (token, language)."""

    def __init__(self, inner: SynonymOracle) -> None:
        self._inner = inner
        self._cache: dict[tuple[str, str], tuple[str, ...]] = {}

    @property
    def oracle_id(self) -> str:  # type: ignore[override]
        return self._inner.oracle_id

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self._inner.deterministic

    def synonyms(self, token: str, language: str) -> tuple[str, ...]:
        key = (token, language)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._inner.synonyms(token, language)
            self._cache[key] = hit
        return hit


@dataclass(frozen=True)
class OracleSuite:
    """The oracle bundle an attack runs against.

    ``input_sentiment`` may be None, in which case the input-perception
    constraint is skipped (direct attacks on target-language text).
    """

    translator: TranslationOracle
    output_sentiment: SentimentOracle
    perplexity: PerplexityOracle
    synonyms: SynonymOracle
    input_sentiment: SentimentOracle | None = None

    def memoized(self) -> "OracleSuite":
        """Wrap every oracle in a memoizing cache (transparent for pure oracles)."""
        return OracleSuite(
            translator=CachingTranslator(self.translator),
            output_sentiment=CachingSentiment(self.output_sentiment),
            perplexity=CachingPerplexity(self.perplexity),
            synonyms=CachingSynonyms(self.synonyms),
            input_sentiment=(
                CachingSentiment(self.input_sentiment) if self.input_sentiment else None
            ),
        )

    def ids(self) -> tuple[tuple[str, str | None], ...]:
        """Stable (role, oracle id) pairs identifying this suite."""
        return (
            ("translator", self.translator.oracle_id),
            ("output_sentiment", self.output_sentiment.oracle_id),
            ("perplexity", self.perplexity.oracle_id),
            ("synonyms", self.synonyms.oracle_id),
            ("input_sentiment", self.input_sentiment.oracle_id if self.input_sentiment else None),
        )

    def deterministic(self) -> bool:
        oracles = [self.translator, self.output_sentiment, self.perplexity, self.synonyms]
        if self.input_sentiment is not None:
            oracles.append(self.input_sentiment)
        return all(o.deterministic for o in oracles)
