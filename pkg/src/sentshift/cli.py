"""Command-line entry point.

Commands: attack, sweep, direct-sweep, check, avg-ppl, report.

Exit codes are stable: 0 success, 2 environment/oracle error, 3 attack
made no change, 4 degraded run (>50% sentence failures), 5 audit
failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .attack import AttackBudget, direct_attack, greedy_attack
from .constraints import compute_dataset_mean_perplexity, evaluate_constraints
from .evaluation import (
    AttackRecord,
    CorpusItem,
    build_manifest,
    export_curves,
    export_records,
    parse_records,
    read_curves,
    run_direct_sweep,
    run_sweep,
)
from .loaders import ConfigError, RunConfig, build_suite, load_config, load_corpus
from .oracles import CachingPerplexity, OracleUnavailableError
from .plotting import render_plot
from .text import tokenize

EXIT_OK = 0
EXIT_ENVIRONMENT = 2
EXIT_NO_CHANGE = 3
EXIT_DEGRADED = 4
EXIT_AUDIT_FAILED = 5

CURVES_FILE = "curves.csv"
RECORDS_FILE = "records.jsonl"
MANIFEST_FILE = "manifest.json"
PLOT_FILE = "plot.svg"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run configuration JSON")
    parser.add_argument("--out", default="out", help="output directory (created if absent)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="config override with a dotted key, repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentshift",
        description="Sentiment-perception adversarial attacks on black-box translation systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="attack a single sentence")
    _add_common(p_attack)
    group = p_attack.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", help="sentence to attack")
    group.add_argument("--input", help="file whose first usable line is attacked")
    p_attack.add_argument("--budget", type=float, help="edit-fraction budget (default: config max_edit_fraction)")
    p_attack.add_argument("--target", choices=("positive", "negative"), help="target sentiment label")
    p_attack.add_argument("--mode", choices=("nmt", "direct"), help="attack mode")

    for name in ("sweep", "direct-sweep"):
        p = sub.add_parser(name, help=f"run a budget {name.replace('-', ' ')} over a corpus")
        _add_common(p)
        p.add_argument("--input", required=True, help="corpus file, one sentence per line")
        p.add_argument("--target", choices=("positive", "negative"))
        p.add_argument("--grid", help="comma-separated budget grid, e.g. 0.0,0.1,0.2")
        p.add_argument("--parallel", type=int, help="worker threads across sentences")
        p.add_argument("--seed", type=int, help="seed recorded in the manifest")
        p.add_argument("--plot", action="store_true", help="also render an SVG plot")
        if name == "direct-sweep":
            p.add_argument(
                "--use-references",
                metavar="FILE",
                help="attack these reference texts instead of model predictions",
            )

    p_check = sub.add_parser("check", help="audit tab-separated (original, candidate) pairs")
    _add_common(p_check)
    p_check.add_argument("--input", required=True, help="TSV file of original<TAB>candidate pairs")

    p_avg = sub.add_parser("avg-ppl", help="compute corpus mean perplexity")
    _add_common(p_avg)
    p_avg.add_argument("--input", required=True, help="corpus file, one sentence per line")

    p_report = sub.add_parser("report", help="summarize existing sweep outputs")
    p_report.add_argument("--input", required=True, help="directory holding curves.csv and records.jsonl")
    p_report.add_argument("--top-k", type=int, default=3, help="example records to format")
    return parser


def _load(args) -> RunConfig:
    overrides = list(args.overrides)
    if getattr(args, "target", None):
        overrides.append(f"sweep.target_label={args.target}")
    if getattr(args, "grid", None):
        overrides.append(f"sweep.budget_grid=[{args.grid}]")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"sweep.seed={args.seed}")
    if getattr(args, "parallel", None) is not None:
        overrides.append(f"parallelism={args.parallel}")
    if getattr(args, "mode", None):
        overrides.append(f"sweep.mode={args.mode}")
    return load_config(args.config, overrides)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _source_language(config: RunConfig) -> str:
    spec = config.oracles.get("translator")
    if spec is None:
        raise ConfigError("missing key 'oracles.translator'")
    if spec["type"] == "toy":
        return spec["source_language"]
    language = spec.get("source_language")
    if not language:
        raise ConfigError("oracles.translator: source_language required")
    return language


def _target_language(config: RunConfig) -> str:
    spec = config.oracles["output_sentiment"]
    language = spec.get("language") or spec.get("source_language")
    if not language:
        raise ConfigError("oracles.output_sentiment: language required")
    return language


def _ensure_mean_perplexity(config: RunConfig, suite, corpus: list[CorpusItem]) -> RunConfig:
    if config.constraints.mean_perplexity is not None:
        return config
    oracle = CachingPerplexity(suite.perplexity)
    mean = compute_dataset_mean_perplexity(oracle, [item.sequence for item in corpus])
    constraints = replace(config.constraints, mean_perplexity=mean)
    return replace(config, constraints=constraints)


def cmd_attack(args) -> int:
    config = _load(args)
    suite = build_suite(config)
    mode = args.mode or config.sweep.mode
    language = _source_language(config) if mode == "nmt" else _target_language(config)
    if args.text:
        text = args.text
    else:
        lines = [l.strip() for l in Path(args.input).read_text(encoding="utf-8-sig").splitlines()]
        usable = [l for l in lines if l]
        if not usable:
            raise ConfigError(f"no usable lines in {args.input}")
        text = usable[0]
    sentence = tokenize(text, language)
    if config.constraints.mean_perplexity is None:
        print("warning: mean_perplexity not in config; using this sentence's perplexity", file=sys.stderr)
        config = _ensure_mean_perplexity(config, suite, [CorpusItem(1, sentence)])
    budget = AttackBudget(args.budget if args.budget is not None else config.constraints.max_edit_fraction)
    target = args.target or config.sweep.target_label
    if mode == "nmt":
        result = greedy_attack(sentence, budget, target, suite, config.constraints)
    else:
        result = direct_attack(
            sentence,
            budget,
            target,
            sentiment=suite.output_sentiment,
            perplexity=suite.perplexity,
            synonyms=suite.synonyms,
            config=config.constraints,
        )
    record = AttackRecord.from_result(1, result, mode)
    out = _outdir(args)
    export_records([record], out / "record.jsonl")

    before = result.score_before.probability(target)
    after = result.score_after.probability(target)
    print(f"status: {result.status}  (budget {budget.fraction}, target {target}, mode {mode})")
    print(f"source      | {record.source_original}")
    print(f"adversarial | {record.source_adversarial}")
    print(f"translation | {record.translation_original}")
    print(f"attacked    | {record.translation_adversarial}")
    print(f"target-label probability: {before:.4f} -> {after:.4f}")
    for sub in result.substitutions:
        print(f"  substitution @{sub.position}: {sub.original} -> {sub.replacement}")
    for entry in result.report.entries:
        measured = "n/a" if entry.measured is None else f"{entry.measured:.4f}"
        verdict = "pass" if entry.passed else "FAIL"
        print(f"  constraint {entry.name}: {measured} <= {entry.threshold:.4f} [{verdict}]")
    print(f"record written to {out / 'record.jsonl'}")
    return EXIT_OK if result.status == "improved" else EXIT_NO_CHANGE


def _write_sweep_outputs(out: Path, result, config: RunConfig, suite, corpus, plot: bool) -> None:
    export_curves(result.points, out / CURVES_FILE, mode=result.mode, target_label=result.target_label)
    export_records(result.records, out / RECORDS_FILE)
    manifest = build_manifest(
        config.sweep, config.constraints, suite.ids(), suite.deterministic(), corpus, result
    )
    with open(out / MANIFEST_FILE, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, ensure_ascii=False, sort_keys=True)
        handle.write("\n")
    if plot:
        label = f"{result.mode}/{result.target_label}"
        render_plot([(label, result.points)], out / PLOT_FILE)


def cmd_sweep(args) -> int:
    config = _load(args)
    if config.sweep.mode != "nmt":
        raise ConfigError("sweep.mode must be 'nmt' for the sweep command")
    suite = build_suite(config)
    corpus = load_corpus(args.input, _source_language(config))
    config = _ensure_mean_perplexity(config, suite, corpus)
    result = run_sweep(corpus, config.sweep, suite, config.constraints, parallelism=config.parallelism)
    out = _outdir(args)
    _write_sweep_outputs(out, result, config, suite, corpus, args.plot)
    for point in result.points:
        print(f"budget {point.budget_fraction}: attacked fraction {point.attacked_fraction:.4f} "
              f"({point.sample_count} samples)")
    print(f"outputs written to {out}")
    if result.failure_fraction > 0.5:
        print("run degraded: more than half of the sentences failed", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def cmd_direct_sweep(args) -> int:
    config = _load(args)
    config = replace(config, sweep=replace(config.sweep, mode="direct"))
    suite = build_suite(config)
    target_language = _target_language(config)
    if args.use_references:
        corpus = load_corpus(args.use_references, target_language)
    else:
        source_corpus = load_corpus(args.input, _source_language(config))
        corpus = [
            CorpusItem(item.sentence_id, suite.translator.translate(item.sequence))
            for item in source_corpus
        ]
    config = _ensure_mean_perplexity(config, suite, corpus)
    result = run_direct_sweep(
        corpus,
        config.sweep,
        sentiment=suite.output_sentiment,
        perplexity=suite.perplexity,
        synonyms=suite.synonyms,
        config=config.constraints,
        parallelism=config.parallelism,
    )
    out = _outdir(args)
    direct_ids = tuple((role, oid) for role, oid in suite.ids() if role != "input_sentiment")
    _write_sweep_outputs(out, result, config, _DirectSuiteView(direct_ids, suite), corpus, args.plot)
    for point in result.points:
        print(f"budget {point.budget_fraction}: attacked fraction {point.attacked_fraction:.4f} "
              f"({point.sample_count} samples)")
    print(f"outputs written to {out}")
    if result.failure_fraction > 0.5:
        print("run degraded: more than half of the sentences failed", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


class _DirectSuiteView:
    """Manifest adapter: direct sweeps report no input-sentiment oracle."""

    def __init__(self, ids, suite) -> None:
        self._ids = ids
        self._suite = suite

    def ids(self):
        return self._ids

    def deterministic(self):
        return self._suite.deterministic()


def cmd_check(args) -> int:
    config = _load(args)
    suite = build_suite(config)
    language = _source_language(config)
    target = config.sweep.target_label
    pairs: list[tuple[int, str, str] | tuple[int, None, str]] = []
    with open(args.input, encoding="utf-8-sig") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
                pairs.append((number, None, "malformed line: expected original<TAB>candidate"))
                continue
            pairs.append((number, fields[0].strip(), fields[1].strip()))
    if not pairs:
        raise ConfigError(f"no usable lines in {args.input}")
    if config.constraints.mean_perplexity is None:
        originals = [
            CorpusItem(number, tokenize(original, language))
            for number, original, _ in pairs
            if original is not None
        ]
        if originals:
            config = _ensure_mean_perplexity(config, suite, originals)
    out = _outdir(args)
    all_passed = True
    with open(out / "checks.jsonl", "w", encoding="utf-8") as handle:
        for entry in pairs:
            number = entry[0]
            if entry[1] is None:
                all_passed = False
                print(f"line {number}: ERROR {entry[2]}")
                handle.write(json.dumps({"line": number, "error": entry[2]}, ensure_ascii=False) + "\n")
                continue
            original = tokenize(entry[1], language)
            candidate = tokenize(entry[2], language)
            report = evaluate_constraints(
                config.constraints,
                original,
                candidate,
                perplexity_oracle=suite.perplexity,
                input_sentiment=suite.input_sentiment,
                target_label=target if suite.input_sentiment else None,
            )
            all_passed = all_passed and report.passed
            verdict = "pass" if report.passed else "FAIL"
            print(f"line {number}: {verdict}")
            handle.write(
                json.dumps(
                    {
                        "line": number,
                        "original": entry[1],
                        "candidate": entry[2],
                        "report": report.to_dict(),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"verdicts written to {out / 'checks.jsonl'}")
    return EXIT_OK if all_passed else EXIT_AUDIT_FAILED


def cmd_avg_ppl(args) -> int:
    config = _load(args)
    suite = build_suite(config)
    corpus = load_corpus(args.input, _source_language(config))
    oracle = CachingPerplexity(suite.perplexity)
    mean = compute_dataset_mean_perplexity(oracle, [item.sequence for item in corpus])
    out = _outdir(args)
    fragment = {"constraints": {"mean_perplexity": mean}}
    with open(out / "mean_perplexity.json", "w", encoding="utf-8") as handle:
        json.dump(fragment, handle, indent=2)
        handle.write("\n")
    print(f"mean perplexity over {len(corpus)} sentences: {mean}")
    print(f"config fragment written to {out / 'mean_perplexity.json'}")
    return EXIT_OK


def cmd_report(args) -> int:
    directory = Path(args.input)
    curves_path = directory / CURVES_FILE
    records_path = directory / RECORDS_FILE
    if not curves_path.exists() or not records_path.exists():
        print(f"missing {CURVES_FILE} or {RECORDS_FILE} under {directory}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    rows = read_curves(curves_path)
    records = parse_records(records_path)
    baseline = rows[0][0].attacked_fraction
    print(f"{'budget':>8}  {'attacked':>9}  {'delta':>7}  {'samples':>7}")
    for point, mode, target in rows:
        delta = point.attacked_fraction - baseline
        print(f"{point.budget_fraction:>8}  {point.attacked_fraction:>9.4f}  {delta:>+7.4f}  {point.sample_count:>7}")
    improved = [r for r in records if r.status == "improved"]
    improved.sort(key=lambda r: (-(r.sentiment_after - r.sentiment_before), r.sentence_id, r.budget_fraction))
    for record in improved[: max(args.top_k, 0)]:
        print()
        print(f"sentence {record.sentence_id} @ budget {record.budget_fraction} "
              f"({record.sentiment_before:.0%} -> {record.sentiment_after:.0%} {record.target_label})")
        print(f"  source      | {record.source_original}")
        print(f"  adversarial | {record.source_adversarial}")
        print(f"  translation | {record.translation_original}")
        print(f"  attacked    | {record.translation_adversarial}")
    return EXIT_OK


_COMMANDS = {
    "attack": cmd_attack,
    "sweep": cmd_sweep,
    "direct-sweep": cmd_direct_sweep,
    "check": cmd_check,
    "avg-ppl": cmd_avg_ppl,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except OracleUnavailableError as exc:
        print(f"oracle unavailable: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
