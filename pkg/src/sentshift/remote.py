"""HTTP oracle clients with retries and a disk response cache.

Wire protocol (JSON over POST to the configured URL):

  request   {"kind": "translation"|"sentiment"|"perplexity", "language": ..., "tokens": [...]}
            {"kind": "synonym", "token": ..., "language": ...}
  response  translation  {"tokens": [...]}
            sentiment    {"labels": [...], "probabilities": [...]}
            perplexity   {"perplexity": number}
            synonyms     {"synonyms": [...]}

Transient failures (connection errors, timeouts, 5xx) are retried with
exponential backoff up to the configured count, then surface as
``OracleUnavailableError``; anything malformed is a non-retryable
``ProtocolError``. Requests are idempotent reads, so retries never
duplicate side effects.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import requests

from .oracles import (
    OracleUnavailableError,
    PerplexityOracle,
    ProtocolError,
    SentimentOracle,
    SentimentScore,
    SynonymOracle,
    TranslationOracle,
)
from .text import TokenSequence

ORACLE_KINDS = ("translation", "sentiment", "perplexity", "synonym")


@dataclass(frozen=True)
class RemoteOracleConfig:
    """Connection settings for one remote oracle endpoint."""

    base_url: str
    kind: str
    source_language: str | None = None
    target_language: str | None = None
    timeout: float = 10.0
    retries: int = 2
    concurrent_safe: bool = True
    deterministic: bool = True
    oracle_id: str | None = None
    bearer_token: str | None = None
    backoff_base: float = 0.25

    def __post_init__(self) -> None:
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle kind: {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive: {self.timeout}")
        if self.retries < 0:
            raise ValueError(f"retries must be non-negative: {self.retries}")
        if self.backoff_base < 0:
            raise ValueError(f"backoff_base must be non-negative: {self.backoff_base}")


class ResponseCache:
    """Disk-backed response cache: one hash-named JSON file per entry.

    Keys combine the oracle id with the canonical request body, so distinct
    oracles never collide. Entries are immutable once written; writes are
    atomic (write-then-rename), which makes concurrent identical writers
    idempotent.
    """

    def __init__(self, directory) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(oracle_id: str, request: dict) -> str:
        canonical = json.dumps(
            {"oracle_id": oracle_id, "request": request},
            sort_keys=True,
            ensure_ascii=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as handle:
                return json.load(handle)
        except (OSError, ValueError):
            return None

    def put(self, key: str, value: dict) -> None:
        path = self._path(key)
        if path.exists():
            return
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(value, handle, ensure_ascii=True, sort_keys=True)
        os.replace(tmp, path)


class _RemoteOracle:
    """Shared POST/retry/cache machinery for the concrete adapters."""

    def __init__(
        self,
        config: RemoteOracleConfig,
        cache: ResponseCache | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.config = config
        self._cache = cache
        self._session = session or requests.Session()
        # Oracles that declare themselves unsafe for concurrent requests
        # are serialized behind this lock.
        self._lock = None if config.concurrent_safe else threading.Lock()

    @property
    def oracle_id(self) -> str:
        return self.config.oracle_id or f"remote-{self.config.kind}:{self.config.base_url}"

    @property
    def deterministic(self) -> bool:
        return self.config.deterministic

    def _headers(self) -> dict[str, str]:
        if self.config.bearer_token:
            return {"Authorization": f"Bearer {self.config.bearer_token}"}
        return {}

    def _post_once(self, payload: dict) -> dict:
        try:
            if self._lock is not None:
                with self._lock:
                    response = self._session.post(
                        self.config.base_url,
                        json=payload,
                        timeout=self.config.timeout,
                        headers=self._headers(),
                    )
            else:
                response = self._session.post(
                    self.config.base_url,
                    json=payload,
                    timeout=self.config.timeout,
                    headers=self._headers(),
                )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise OracleUnavailableError(f"{self.oracle_id}: {exc}") from exc
        if response.status_code >= 500:
            raise OracleUnavailableError(
                f"{self.oracle_id}: server error {response.status_code}"
            )
        if response.status_code != 200:
            raise ProtocolError(f"{self.oracle_id}: unexpected status {response.status_code}")
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"{self.oracle_id}: response is not JSON") from exc
        if not isinstance(data, dict):
            raise ProtocolError(f"{self.oracle_id}: response is not a JSON object")
        return data

    def _request(self, payload: dict, parse):
        if self._cache is not None:
            key = ResponseCache.key(self.oracle_id, payload)
            cached = self._cache.get(key)
            if cached is not None:
                return parse(cached)
        last_error: OracleUnavailableError | None = None
        for attempt in range(self.config.retries + 1):
            try:
                data = self._post_once(payload)
            except OracleUnavailableError as exc:
                last_error = exc
                if attempt < self.config.retries and self.config.backoff_base > 0:
                    time.sleep(self.config.backoff_base * (2 ** attempt))
                continue
            result = parse(data)
            if self._cache is not None:
                self._cache.put(key, data)
            return result
        assert last_error is not None
        raise last_error


def _parse_token_list(data: dict, key: str, oracle_id: str) -> tuple[str, ...]:
    tokens = data.get(key)
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ProtocolError(f"{oracle_id}: {key!r} must be a list of strings")
    normalized = []
    for token in tokens:
        token = unicodedata.normalize("NFC", token)
        if not token or any(ch.isspace() for ch in token):
            raise ProtocolError(f"{oracle_id}: invalid token {token!r}")
        normalized.append(token)
    return tuple(normalized)


class RemoteTranslator(_RemoteOracle, TranslationOracle):
    def __init__(self, config: RemoteOracleConfig, cache=None, session=None) -> None:
        if config.kind != "translation":
            raise ValueError(f"expected a translation config, got {config.kind!r}")
        if not config.source_language or not config.target_language:
            raise ValueError("translation oracle requires source and target languages")
        super().__init__(config, cache, session)
        self.source_language = config.source_language
        self.target_language = config.target_language

    def translate(self, source: TokenSequence) -> TokenSequence:
        if not source.tokens:
            raise ValueError("empty input")
        if source.language != self.source_language:
            raise ValueError(
                f"wrong source language: got {source.language!r}, expected {self.source_language!r}"
            )
        payload = {"kind": "translation", "language": source.language, "tokens": list(source.tokens)}

        def parse(data: dict) -> TokenSequence:
            tokens = _parse_token_list(data, "tokens", self.oracle_id)
            if not tokens:
                raise ProtocolError(f"{self.oracle_id}: empty translation")
            return TokenSequence(tokens, self.target_language)

        return self._request(payload, parse)


class RemoteSentiment(_RemoteOracle, SentimentOracle):
    def __init__(self, config: RemoteOracleConfig, cache=None, session=None) -> None:
        if config.kind != "sentiment":
            raise ValueError(f"expected a sentiment config, got {config.kind!r}")
        super().__init__(config, cache, session)
        self.language = config.source_language
        self.labels: tuple[str, ...] = ()

    def score(self, seq: TokenSequence) -> SentimentScore:
        if not seq.tokens:
            raise ValueError("empty input")
        if self.language and seq.language != self.language:
            raise ValueError(f"unsupported language: {seq.language!r}")
        payload = {"kind": "sentiment", "language": seq.language, "tokens": list(seq.tokens)}

        def parse(data: dict) -> SentimentScore:
            labels = data.get("labels")
            probabilities = data.get("probabilities")
            if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
                raise ProtocolError(f"{self.oracle_id}: 'labels' must be a list of strings")
            if not isinstance(probabilities, list) or not all(
                isinstance(p, (int, float)) and not isinstance(p, bool) for p in probabilities
            ):
                raise ProtocolError(f"{self.oracle_id}: 'probabilities' must be a list of numbers")
            if len(labels) != len(probabilities):
                raise ProtocolError(f"{self.oracle_id}: labels/probabilities length mismatch")
            try:
                score = SentimentScore(tuple(zip(labels, map(float, probabilities))))
            except ValueError as exc:
                raise ProtocolError(f"{self.oracle_id}: {exc}") from exc
            return score

        score = self._request(payload, parse)
        if not self.labels:
            self.labels = score.labels
        return score


class RemotePerplexity(_RemoteOracle, PerplexityOracle):
    def __init__(self, config: RemoteOracleConfig, cache=None, session=None) -> None:
        if config.kind != "perplexity":
            raise ValueError(f"expected a perplexity config, got {config.kind!r}")
        super().__init__(config, cache, session)
        self.language = config.source_language

    def perplexity(self, seq: TokenSequence) -> float:
        if not seq.tokens:
            raise ValueError("empty input")
        payload = {"kind": "perplexity", "language": seq.language, "tokens": list(seq.tokens)}

        def parse(data: dict) -> float:
            value = data.get("perplexity")
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise ProtocolError(f"{self.oracle_id}: 'perplexity' must be a positive number")
            return float(value)

        return self._request(payload, parse)


class RemoteSynonyms(_RemoteOracle, SynonymOracle):
    def __init__(self, config: RemoteOracleConfig, cache=None, session=None) -> None:
        if config.kind != "synonym":
            raise ValueError(f"expected a synonym config, got {config.kind!r}")
        super().__init__(config, cache, session)

    def synonyms(self, token: str, language: str) -> tuple[str, ...]:
        if not token:
            raise ValueError("empty token")
        payload = {"kind": "synonym", "token": token, "language": language}

        def parse(data: dict) -> tuple[str, ...]:
            entries = data.get("synonyms")
            if not isinstance(entries, list) or not all(isinstance(s, str) for s in entries):
                raise ProtocolError(f"{self.oracle_id}: 'synonyms' must be a list of strings")
            cleaned = {unicodedata.normalize("NFC", s) for s in entries}
            return tuple(sorted(c for c in cleaned if c and c != token))

        return self._request(payload, parse)
