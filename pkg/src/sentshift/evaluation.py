"""Budget sweeps, max-class classification, and result export.

A sweep attacks every corpus sentence at the smallest budget and extends
each result through the ascending budget grid, then aggregates the
fraction of samples whose (adversarial) translation classifies as the
target label at each budget. Outputs are byte-deterministic given
identical inputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
import unicodedata
from collections.abc import Collection, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .attack import AttackBudget, AttackResult, Substitution, direct_suite, extend_attack, greedy_attack
from .constraints import ConstraintConfig, ConstraintReport
from .oracles import (
    OracleSuite,
    OracleUnavailableError,
    PerplexityOracle,
    SentimentOracle,
    SentimentScore,
    SynonymOracle,
)
from .text import TokenSequence, detokenize

CURVE_CSV_HEADER = "budget_fraction,attacked_fraction,sample_count,mode,target_label"

SWEEP_MODES = ("nmt", "direct")
DENOMINATORS = ("all", "non-target-baseline")

DEFAULT_BUDGET_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)

STATUS_ERROR = "error"


def classify_max_class(score: SentimentScore, ignore: Collection[str] = ()) -> str:
    """Label with the highest probability.

    Exact ties resolve to the lexicographically smallest label, so a
    positive/negative tie classifies as negative. ``ignore`` drops labels
    (e.g. a neutral class) from the comparison.
    """
    return score.top_label(ignore=ignore)


@dataclass(frozen=True)
class CorpusItem:
    """One evaluation sentence with its stable id (corpus line number)."""

    sentence_id: int
    sequence: TokenSequence


def as_corpus(sequences: Sequence[TokenSequence]) -> tuple[CorpusItem, ...]:
    """Wrap bare sequences as corpus items with 1-based ids."""
    return tuple(CorpusItem(i, seq) for i, seq in enumerate(sequences, start=1))


def subsample_corpus(
    corpus: Sequence[CorpusItem], size: int, seed: int
) -> tuple[CorpusItem, ...]:
    """Seeded random subsample, returned in ascending sentence-id order."""
    if size >= len(corpus):
        return tuple(corpus)
    picked = random.Random(seed).sample(list(corpus), size)
    return tuple(sorted(picked, key=lambda item: item.sentence_id))


@dataclass(frozen=True)
class SweepConfig:
    """Attack-strength sweep settings.

    The budget grid must be strictly ascending and start at 0.0 so every
    sweep carries its unattacked baseline point.
    """

    budget_grid: tuple[float, ...] = DEFAULT_BUDGET_GRID
    target_label: str = "positive"
    mode: str = "nmt"
    seed: int = 0
    denominator: str = "all"

    def __post_init__(self) -> None:
        object.__setattr__(self, "budget_grid", tuple(self.budget_grid))
        if not self.budget_grid:
            raise ValueError("empty budget grid")
        if self.budget_grid[0] != 0.0:
            raise ValueError("budget grid must start at 0.0")
        for a, b in zip(self.budget_grid, self.budget_grid[1:]):
            if b <= a:
                raise ValueError("budget grid must be strictly ascending")
        for fraction in self.budget_grid:
            if not 0.0 <= fraction <= 1.0:
                raise ValueError(f"budget fraction outside [0, 1]: {fraction}")
        if not self.target_label:
            raise ValueError("empty target label")
        if self.mode not in SWEEP_MODES:
            raise ValueError(f"unknown sweep mode: {self.mode!r}")
        if self.denominator not in DENOMINATORS:
            raise ValueError(f"unknown denominator rule: {self.denominator!r}")


@dataclass(frozen=True)
class CurvePoint:
    """Fraction of evaluated samples classified as the target at one budget."""

    budget_fraction: float
    attacked_fraction: float
    sample_count: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.attacked_fraction <= 1.0:
            raise ValueError(f"attacked fraction outside [0, 1]: {self.attacked_fraction}")
        if self.sample_count <= 0:
            raise ValueError("sample count must be positive")


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class AttackRecord:
    """Lossless per-sentence, per-budget attack record (JSONL row)."""

    sentence_id: int
    budget_fraction: float
    mode: str
    target_label: str
    source_original: str
    source_adversarial: str
    translation_original: str
    translation_adversarial: str
    sentiment_before: float
    sentiment_after: float
    substitutions: tuple[Substitution, ...]
    constraint_report: ConstraintReport
    status: str

    @classmethod
    def from_result(cls, sentence_id: int, result: AttackResult, mode: str) -> "AttackRecord":
        return cls(
            sentence_id=sentence_id,
            budget_fraction=result.budget.fraction,
            mode=mode,
            target_label=result.target_label,
            source_original=_nfc(detokenize(result.original)),
            source_adversarial=_nfc(detokenize(result.adversarial)),
            translation_original=_nfc(detokenize(result.original_output)),
            translation_adversarial=_nfc(detokenize(result.adversarial_output)),
            sentiment_before=result.score_before.probability(result.target_label),
            sentiment_after=result.score_after.probability(result.target_label),
            substitutions=result.substitutions,
            constraint_report=result.report,
            status=result.status,
        )

    def to_dict(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "budget_fraction": self.budget_fraction,
            "mode": self.mode,
            "target_label": self.target_label,
            "source_original": self.source_original,
            "source_adversarial": self.source_adversarial,
            "translation_original": self.translation_original,
            "translation_adversarial": self.translation_adversarial,
            "sentiment_before": self.sentiment_before,
            "sentiment_after": self.sentiment_after,
            "substitutions": [s.to_dict() for s in self.substitutions],
            "constraint_report": self.constraint_report.to_dict(),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackRecord":
        return cls(
            sentence_id=data["sentence_id"],
            budget_fraction=data["budget_fraction"],
            mode=data["mode"],
            target_label=data["target_label"],
            source_original=data["source_original"],
            source_adversarial=data["source_adversarial"],
            translation_original=data["translation_original"],
            translation_adversarial=data["translation_adversarial"],
            sentiment_before=data["sentiment_before"],
            sentiment_after=data["sentiment_after"],
            substitutions=tuple(Substitution.from_dict(s) for s in data["substitutions"]),
            constraint_report=ConstraintReport.from_dict(data["constraint_report"]),
            status=data["status"],
        )


@dataclass
class SweepResult:
    """Everything one sweep produced."""

    mode: str
    target_label: str
    points: tuple[CurvePoint, ...]
    records: tuple[AttackRecord, ...]
    # status -> count, per budget fraction, in grid order
    tally: dict[float, dict[str, int]] = field(default_factory=dict)
    failed_sentence_ids: tuple[int, ...] = ()
    evaluated_count: int = 0

    @property
    def failure_fraction(self) -> float:
        total = len(self.failed_sentence_ids) + self.evaluated_count
        if total == 0:
            return 0.0
        return len(self.failed_sentence_ids) / total


def _attack_sentence(
    item: CorpusItem,
    grid: Sequence[float],
    target_label: str,
    suite: OracleSuite,
    config: ConstraintConfig,
) -> list[AttackResult] | OracleUnavailableError:
    try:
        results = [greedy_attack(item.sequence, AttackBudget(grid[0]), target_label, suite, config)]
        for fraction in grid[1:]:
            results.append(extend_attack(results[-1], AttackBudget(fraction), suite, config))
        return results
    except OracleUnavailableError as exc:
        return exc


def _aggregate(
    mode: str,
    sweep: SweepConfig,
    items: Sequence[CorpusItem],
    outcomes: Sequence[list[AttackResult] | OracleUnavailableError],
) -> SweepResult:
    evaluated: list[tuple[CorpusItem, list[AttackResult]]] = []
    failed: list[int] = []
    for item, outcome in zip(items, outcomes):
        if isinstance(outcome, OracleUnavailableError):
            failed.append(item.sentence_id)
        else:
            evaluated.append((item, outcome))
    if not evaluated:
        raise OracleUnavailableError("every sentence failed")

    points = []
    tally: dict[float, dict[str, int]] = {}
    for index, fraction in enumerate(sweep.budget_grid):
        counts: dict[str, int] = {}
        hits = 0
        denominator = 0
        for item, results in evaluated:
            result = results[index]
            counts[result.status] = counts.get(result.status, 0) + 1
            if sweep.denominator == "non-target-baseline":
                baseline = classify_max_class(results[0].score_after)
                if baseline == sweep.target_label:
                    continue
            denominator += 1
            if classify_max_class(result.score_after) == sweep.target_label:
                hits += 1
        if failed:
            counts[STATUS_ERROR] = len(failed)
        tally[fraction] = counts
        if denominator == 0:
            raise ValueError("no samples left in the curve denominator")
        points.append(CurvePoint(fraction, hits / denominator, denominator))

    records = tuple(
        AttackRecord.from_result(item.sentence_id, result, mode)
        for item, results in evaluated
        for result in results
    )
    return SweepResult(
        mode=mode,
        target_label=sweep.target_label,
        points=tuple(points),
        records=records,
        tally=tally,
        failed_sentence_ids=tuple(failed),
        evaluated_count=len(evaluated),
    )


def _run(
    mode: str,
    corpus: Sequence[CorpusItem],
    sweep: SweepConfig,
    suite: OracleSuite,
    config: ConstraintConfig,
    parallelism: int,
) -> SweepResult:
    if not corpus:
        raise ValueError("empty corpus")
    if config.mean_perplexity is None:
        raise ValueError("mean perplexity not set; compute it over this corpus first")
    suite = suite.memoized()
    jobs = [(item, sweep.budget_grid, sweep.target_label, suite, config) for item in corpus]
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(lambda args: _attack_sentence(*args), jobs))
    else:
        outcomes = [_attack_sentence(*args) for args in jobs]
    return _aggregate(mode, sweep, corpus, outcomes)


def run_sweep(
    corpus: Sequence[CorpusItem],
    sweep: SweepConfig,
    suite: OracleSuite,
    config: ConstraintConfig,
    parallelism: int = 1,
) -> SweepResult:
    """Attack every source sentence over the budget grid (nested extension).

    Per-sentence oracle failures are recorded and excluded from every
    budget's denominator; the sweep continues.
    """
    if sweep.mode != "nmt":
        raise ValueError(f"run_sweep requires mode 'nmt', got {sweep.mode!r}")
    return _run("nmt", corpus, sweep, suite, config, parallelism)


def run_direct_sweep(
    translations: Sequence[CorpusItem],
    sweep: SweepConfig,
    sentiment: SentimentOracle,
    perplexity: PerplexityOracle,
    synonyms: SynonymOracle,
    config: ConstraintConfig,
    parallelism: int = 1,
) -> SweepResult:
    """Directly attack target-language texts over the budget grid.

    The corpus is the set of unattacked model translations (or reference
    texts); the identity translator replaces the NMT system and the
    input-perception constraint is not applied.
    """
    if sweep.mode != "direct":
        raise ValueError(f"run_direct_sweep requires mode 'direct', got {sweep.mode!r}")
    if not translations:
        raise ValueError("empty corpus")
    languages = {item.sequence.language for item in translations}
    if len(languages) != 1:
        raise ValueError(f"mixed corpus languages: {sorted(languages)}")
    suite = direct_suite(languages.pop(), sentiment, perplexity, synonyms)
    return _run("direct", translations, sweep, suite, config, parallelism)


def export_curves(
    points: Sequence[CurvePoint], path, mode: str, target_label: str
) -> None:
    """Write curve points as CSV with the stable five-column header."""
    if not points:
        raise ValueError("no curve points to export")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVE_CSV_HEADER.split(","))
        for point in points:
            writer.writerow(
                [point.budget_fraction, point.attacked_fraction, point.sample_count, mode, target_label]
            )


def read_curves(path) -> list[tuple[CurvePoint, str, str]]:
    """Parse a curves CSV back into (point, mode, target_label) rows."""
    rows = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != CURVE_CSV_HEADER.split(","):
            raise ValueError(f"unexpected curve CSV header: {header}")
        for row in reader:
            point = CurvePoint(float(row[0]), float(row[1]), int(row[2]))
            rows.append((point, row[3], row[4]))
    if not rows:
        raise ValueError("empty curve CSV")
    return rows


def export_records(records: Sequence[AttackRecord], path) -> None:
    """Write attack records as UTF-8 JSONL, one record per line."""
    if not records:
        raise ValueError("no records to export")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False))
            handle.write("\n")


def parse_records(path) -> list[AttackRecord]:
    """Read back a records JSONL file."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(AttackRecord.from_dict(json.loads(line)))
    return records


def corpus_digest(corpus: Sequence[CorpusItem]) -> str:
    """SHA-256 over the corpus text, for run manifests."""
    hasher = hashlib.sha256()
    for item in corpus:
        text = item.sequence.raw or detokenize(item.sequence)
        hasher.update(str(item.sentence_id).encode("utf-8"))
        hasher.update(b"\x1f")
        hasher.update(text.encode("utf-8"))
        hasher.update(b"\n")
    return hasher.hexdigest()


def build_manifest(
    sweep: SweepConfig,
    config: ConstraintConfig,
    suite_ids: Sequence[tuple[str, str | None]],
    deterministic: bool,
    corpus: Sequence[CorpusItem],
    result: SweepResult,
) -> dict:
    """Run manifest: config snapshot, oracle ids, corpus hash, status tally."""
    return {
        "sweep": {
            "budget_grid": list(sweep.budget_grid),
            "target_label": sweep.target_label,
            "mode": sweep.mode,
            "seed": sweep.seed,
            "denominator": sweep.denominator,
        },
        "constraints": {
            "max_edit_fraction": config.max_edit_fraction,
            "perplexity_multiplier": config.perplexity_multiplier,
            "mean_perplexity": config.mean_perplexity,
            "max_perception_delta": config.max_perception_delta,
            "perception_mode": config.perception_mode,
        },
        "oracles": {role: oracle_id for role, oracle_id in suite_ids},
        "deterministic": deterministic,
        "corpus": {"size": len(corpus), "sha256": corpus_digest(corpus)},
        "status_tally": {str(fraction): counts for fraction, counts in result.tally.items()},
        "failed_sentence_ids": list(result.failed_sentence_ids),
    }
