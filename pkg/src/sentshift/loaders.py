"""Dataset and run-configuration loading.

Config files are JSON with strict validation: unknown keys are errors and
invalid values name the offending field. Defaults are materialized on
load, so a saved config round-trips to an identical RunConfig.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .constraints import PERCEPTION_MODES, ConstraintConfig
from .evaluation import DENOMINATORS, SWEEP_MODES, CorpusItem, SweepConfig
from .oracles import (
    DictionaryTranslator,
    LexiconSentiment,
    OracleSuite,
    StaticSynonyms,
    UnigramPerplexity,
)
from .remote import (
    RemoteOracleConfig,
    RemotePerplexity,
    RemoteSentiment,
    RemoteSynonyms,
    RemoteTranslator,
    ResponseCache,
)
from .text import tokenize

ORACLE_ROLES = ("translator", "output_sentiment", "input_sentiment", "perplexity", "synonyms")

_ROLE_KIND = {
    "translator": "translation",
    "output_sentiment": "sentiment",
    "input_sentiment": "sentiment",
    "perplexity": "perplexity",
    "synonyms": "synonym",
}


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def load_corpus(path, language: str) -> list[CorpusItem]:
    """Load a newline-delimited UTF-8 corpus; ids are 1-based line numbers.

    Blank lines are skipped (their line numbers stay reserved) and a BOM on
    the first line is stripped.
    """
    items: list[CorpusItem] = []
    with open(path, encoding="utf-8-sig") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            items.append(CorpusItem(number, tokenize(line, language)))
    if not items:
        raise ConfigError(f"no usable lines in corpus file {path}")
    return items


@dataclass(frozen=True)
class RunConfig:
    """Full run configuration: constraints, sweep, oracle specs."""

    constraints: ConstraintConfig
    sweep: SweepConfig
    oracles: dict
    cache_dir: str | None = None
    parallelism: int = 1


def _check_keys(section: dict, allowed: tuple[str, ...], context: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{context}.{key}'" if context else f"unknown key '{key}'")


def _number(section: dict, key: str, context: str, *, optional: bool = False):
    value = section.get(key)
    if value is None:
        if optional:
            return None
        raise ConfigError(f"missing key '{context}.{key}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{context}.{key}' must be a number, got {value!r}")
    return float(value)


def _string(section: dict, key: str, context: str, choices: tuple[str, ...] | None = None) -> str:
    value = section.get(key)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"'{context}.{key}' must be a non-empty string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"'{context}.{key}' must be one of {choices}, got {value!r}")
    return value


def _constraints_from_dict(section: dict) -> ConstraintConfig:
    context = "constraints"
    allowed = (
        "max_edit_fraction",
        "perplexity_multiplier",
        "mean_perplexity",
        "max_perception_delta",
        "perception_mode",
    )
    _check_keys(section, allowed, context)
    defaults = ConstraintConfig()
    kwargs = {
        "max_edit_fraction": _number(section, "max_edit_fraction", context, optional=True),
        "perplexity_multiplier": _number(section, "perplexity_multiplier", context, optional=True),
        "mean_perplexity": _number(section, "mean_perplexity", context, optional=True),
        "max_perception_delta": _number(section, "max_perception_delta", context, optional=True),
    }
    if kwargs["max_edit_fraction"] is None:
        kwargs["max_edit_fraction"] = defaults.max_edit_fraction
    if kwargs["perplexity_multiplier"] is None:
        kwargs["perplexity_multiplier"] = defaults.perplexity_multiplier
    if "perception_mode" in section:
        kwargs["perception_mode"] = _string(section, "perception_mode", context, PERCEPTION_MODES)
    try:
        return ConstraintConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _sweep_from_dict(section: dict) -> SweepConfig:
    context = "sweep"
    allowed = ("budget_grid", "target_label", "mode", "seed", "denominator")
    _check_keys(section, allowed, context)
    kwargs: dict = {}
    if "budget_grid" in section:
        grid = section["budget_grid"]
        if not isinstance(grid, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in grid
        ):
            raise ConfigError(f"'{context}.budget_grid' must be a list of numbers")
        kwargs["budget_grid"] = tuple(float(v) for v in grid)
    if "target_label" in section:
        kwargs["target_label"] = _string(section, "target_label", context)
    if "mode" in section:
        kwargs["mode"] = _string(section, "mode", context, SWEEP_MODES)
    if "seed" in section:
        seed = section["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError(f"'{context}.seed' must be an integer, got {seed!r}")
        kwargs["seed"] = seed
    if "denominator" in section:
        kwargs["denominator"] = _string(section, "denominator", context, DENOMINATORS)
    try:
        return SweepConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


_TOY_ORACLE_KEYS = {
    "translator": ("type", "mapping", "source_language", "target_language", "oracle_id"),
    "sentiment": ("type", "language", "positive", "negative", "oracle_id"),
    "perplexity": ("type", "language", "probabilities", "floor", "oracle_id"),
    "synonym": ("type", "language", "table", "oracle_id"),
}

_REMOTE_ORACLE_KEYS = (
    "type",
    "base_url",
    "source_language",
    "target_language",
    "timeout",
    "retries",
    "concurrent_safe",
    "deterministic",
    "oracle_id",
    "bearer_token",
    "backoff_base",
)


def _string_map(section: dict, key: str, context: str) -> dict[str, str]:
    value = section.get(key)
    if not isinstance(value, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in value.items()
    ):
        raise ConfigError(f"'{context}.{key}' must map strings to strings")
    return value


def _validate_oracle_spec(role: str, spec: dict) -> None:
    context = f"oracles.{role}"
    if not isinstance(spec, dict):
        raise ConfigError(f"'{context}' must be an object")
    kind = _ROLE_KIND[role]
    spec_type = _string(spec, "type", context, ("toy", "remote"))
    if spec_type == "remote":
        _check_keys(spec, _REMOTE_ORACLE_KEYS, context)
        _string(spec, "base_url", context)
        _build_remote_config(role, spec)  # value ranges checked eagerly
        return
    _check_keys(spec, _TOY_ORACLE_KEYS[kind], context)
    if "language" in spec:
        _string(spec, "language", context)
    if kind == "translation":
        _string_map(spec, "mapping", context)
        _string(spec, "source_language", context)
        _string(spec, "target_language", context)
    elif kind == "sentiment":
        _string(spec, "language", context)
        for side in ("positive", "negative"):
            value = spec.get(side, {})
            if not isinstance(value, dict) or not all(
                isinstance(k, str) and isinstance(v, int) and not isinstance(v, bool)
                for k, v in value.items()
            ):
                raise ConfigError(f"'{context}.{side}' must map tokens to integer weights")
    elif kind == "perplexity":
        value = spec.get("probabilities", {})
        if not isinstance(value, dict) or not all(
            isinstance(k, str) and isinstance(v, (int, float)) and not isinstance(v, bool)
            for k, v in value.items()
        ):
            raise ConfigError(f"'{context}.probabilities' must map tokens to numbers")
        if "floor" in spec:
            _number(spec, "floor", context)
    else:  # synonym
        value = spec.get("table", {})
        if not isinstance(value, dict) or not all(
            isinstance(k, str) and isinstance(v, list) and all(isinstance(s, str) for s in v)
            for k, v in value.items()
        ):
            raise ConfigError(f"'{context}.table' must map tokens to lists of strings")


def config_from_dict(data: dict) -> RunConfig:
    """Validate a raw config mapping and materialize defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _check_keys(data, ("constraints", "sweep", "oracles", "cache_dir", "parallelism"), "")
    constraints = _constraints_from_dict(data.get("constraints", {}))
    sweep = _sweep_from_dict(data.get("sweep", {}))
    oracles = data.get("oracles")
    if not isinstance(oracles, dict):
        raise ConfigError("missing or invalid 'oracles' section")
    _check_keys(oracles, ORACLE_ROLES, "oracles")
    for role in ("output_sentiment", "perplexity", "synonyms"):
        if role not in oracles:
            raise ConfigError(f"missing key 'oracles.{role}'")
    for role, spec in oracles.items():
        _validate_oracle_spec(role, spec)
    cache_dir = data.get("cache_dir")
    if cache_dir is not None and not isinstance(cache_dir, str):
        raise ConfigError(f"'cache_dir' must be a string or null, got {cache_dir!r}")
    parallelism = data.get("parallelism", 1)
    if isinstance(parallelism, bool) or not isinstance(parallelism, int) or parallelism < 1:
        raise ConfigError(f"'parallelism' must be a positive integer, got {parallelism!r}")
    return RunConfig(
        constraints=constraints,
        sweep=sweep,
        oracles=oracles,
        cache_dir=cache_dir,
        parallelism=parallelism,
    )


def config_to_dict(config: RunConfig) -> dict:
    """Inverse of ``config_from_dict`` with all defaults spelled out."""
    return {
        "constraints": {
            "max_edit_fraction": config.constraints.max_edit_fraction,
            "perplexity_multiplier": config.constraints.perplexity_multiplier,
            "mean_perplexity": config.constraints.mean_perplexity,
            "max_perception_delta": config.constraints.max_perception_delta,
            "perception_mode": config.constraints.perception_mode,
        },
        "sweep": {
            "budget_grid": list(config.sweep.budget_grid),
            "target_label": config.sweep.target_label,
            "mode": config.sweep.mode,
            "seed": config.sweep.seed,
            "denominator": config.sweep.denominator,
        },
        "oracles": config.oracles,
        "cache_dir": config.cache_dir,
        "parallelism": config.parallelism,
    }


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    """Load, override, and strictly validate a JSON run configuration."""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    for override in overrides or []:
        data = apply_override(data, override)
    return config_from_dict(data)


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config_to_dict(config), handle, indent=2, ensure_ascii=False, sort_keys=True)
        handle.write("\n")


def apply_override(data: dict, override: str) -> dict:
    """Apply one ``dotted.key=value`` override onto a raw config mapping.

    Values parse as JSON when possible, otherwise as plain strings.
    Validation still happens afterward, so unknown keys are rejected.
    """
    if "=" not in override:
        raise ConfigError(f"override must look like key=value, got {override!r}")
    dotted, raw_value = override.split("=", 1)
    if not dotted:
        raise ConfigError(f"empty key in override {override!r}")
    try:
        value = json.loads(raw_value)
    except ValueError:
        value = raw_value
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value
    return data


def _build_remote_config(role: str, spec: dict) -> RemoteOracleConfig:
    kwargs = {k: v for k, v in spec.items() if k != "type"}
    try:
        return RemoteOracleConfig(kind=_ROLE_KIND[role], **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"oracles.{role}: {exc}") from exc


def build_oracle(role: str, spec: dict, cache: ResponseCache | None = None):
    """Construct the oracle object for one validated config spec."""
    kind = _ROLE_KIND[role]
    if spec["type"] == "remote":
        config = _build_remote_config(role, spec)
        builders = {
            "translation": RemoteTranslator,
            "sentiment": RemoteSentiment,
            "perplexity": RemotePerplexity,
            "synonym": RemoteSynonyms,
        }
        return builders[kind](config, cache=cache)
    if kind == "translation":
        return DictionaryTranslator(
            spec["mapping"],
            source_language=spec["source_language"],
            target_language=spec["target_language"],
            oracle_id=spec.get("oracle_id"),
        )
    if kind == "sentiment":
        return LexiconSentiment(
            spec.get("positive", {}),
            spec.get("negative", {}),
            language=spec["language"],
            oracle_id=spec.get("oracle_id"),
        )
    if kind == "perplexity":
        return UnigramPerplexity(
            spec.get("probabilities", {}),
            floor=spec.get("floor", 1e-4),
            language=spec.get("language"),
            oracle_id=spec.get("oracle_id"),
        )
    return StaticSynonyms(
        spec.get("table", {}),
        language=spec.get("language"),
        oracle_id=spec.get("oracle_id"),
    )


def build_suite(config: RunConfig, cache: ResponseCache | None = None) -> OracleSuite:
    """Build the oracle suite a run needs from its validated config.

    Requires a translator spec; ``input_sentiment`` is optional (direct
    attacks never use it).
    """
    if "translator" not in config.oracles:
        raise ConfigError("missing key 'oracles.translator'")
    if cache is None and config.cache_dir:
        cache = ResponseCache(config.cache_dir)
    input_sentiment = None
    if "input_sentiment" in config.oracles:
        input_sentiment = build_oracle("input_sentiment", config.oracles["input_sentiment"], cache)
    return OracleSuite(
        translator=build_oracle("translator", config.oracles["translator"], cache),
        output_sentiment=build_oracle("output_sentiment", config.oracles["output_sentiment"], cache),
        perplexity=build_oracle("perplexity", config.oracles["perplexity"], cache),
        synonyms=build_oracle("synonyms", config.oracles["synonyms"], cache),
        input_sentiment=input_sentiment,
    )
