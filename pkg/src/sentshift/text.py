"""Word-level text handling: tokenization, detokenization, and edit distance.

Everything here operates on whole word tokens. Punctuation marks are
standalone tokens and count as words both for sequence length and for edit
cost, so distances stay comparable across languages without per-language
heuristics.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

# Tokens that re-attach to the preceding token on detokenization.
_NO_SPACE_BEFORE = frozenset({",", ".", "!", "?", ";", ":", ")", "]", "}", "»", "›", "”", "’"})


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


@dataclass(frozen=True)
class TokenSequence:
    """A tokenized sentence with its language tag and raw-text provenance.

    ``raw`` is the original untokenized text; it is empty for sequences
    synthesized by an attack. Tokens never contain whitespace.
    """

    tokens: tuple[str, ...]
    language: str
    raw: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for token in self.tokens:
            if not token:
                raise ValueError("empty token")
            if any(ch.isspace() for ch in token):
                raise ValueError(f"token contains whitespace: {token!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def replace_token(self, position: int, token: str) -> "TokenSequence":
        """Return a copy with the token at ``position`` replaced (raw dropped)."""
        if not 0 <= position < len(self.tokens):
            raise IndexError(f"position {position} out of range")
        tokens = self.tokens[:position] + (token,) + self.tokens[position + 1:]
        return TokenSequence(tokens, self.language)

    def delete_token(self, position: int) -> "TokenSequence":
        """Return a copy with the token at ``position`` removed (raw dropped)."""
        if not 0 <= position < len(self.tokens):
            raise IndexError(f"position {position} out of range")
        return TokenSequence(self.tokens[:position] + self.tokens[position + 1:], self.language)

    @property
    def text(self) -> str:
        return detokenize(self)


def tokenize(raw: str, language: str) -> TokenSequence:
    """Split raw text into word tokens.

    The text is NFC-normalized first; each punctuation character becomes its
    own token and the remainder splits on whitespace. Case and reading order
    are preserved.
    """
    normalized = unicodedata.normalize("NFC", raw)
    if not normalized.strip():
        raise ValueError("empty input")
    tokens: list[str] = []
    for chunk in normalized.split():
        buffer: list[str] = []
        for ch in chunk:
            if _is_punctuation(ch):
                if buffer:
                    tokens.append("".join(buffer))
                    buffer = []
                tokens.append(ch)
            else:
                buffer.append(ch)
        if buffer:
            tokens.append("".join(buffer))
    return TokenSequence(tuple(tokens), language, raw=raw)


def detokenize(seq: TokenSequence) -> str:
    """Join tokens back into text, re-attaching trailing punctuation.

    Tokens are joined with single spaces except that no space precedes
    ``, . ! ? ; :`` or closing quotes/brackets. Deterministic; the result
    re-tokenizes to the identical token list.
    """
    if not seq.tokens:
        raise ValueError("empty input")
    parts: list[str] = [seq.tokens[0]]
    for token in seq.tokens[1:]:
        if token not in _NO_SPACE_BEFORE:
            parts.append(" ")
        parts.append(token)
    return "".join(parts)


def edit_distance(original: TokenSequence, candidate: TokenSequence) -> int:
    """Word-level Levenshtein distance with unit swap/addition/deletion cost."""
    a, b = original.tokens, candidate.tokens
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            current[j] = min(
                previous[j] + 1,        # delete from a
                current[j - 1] + 1,     # insert into a
                previous[j - 1] + cost, # swap
            )
        previous = current
    return previous[-1]


def normalized_edit_distance(original: TokenSequence, candidate: TokenSequence) -> float:
    """Levenshtein distance divided by the length of the original sequence.

    Normalization is by the original length, so the measure is not symmetric.
    """
    if not original.tokens:
        raise ValueError("empty original")
    return edit_distance(original, candidate) / len(original)
