"""Perception-based adversarial attacks on black-box translation systems.

Generates imperceptible synonym substitutions on source text that shift
the sentiment of the translated output, with constraint auditing,
saliency-ranked greedy search, and attack-strength sweep evaluation.
"""

from .attack import (
    AttackBudget,
    AttackResult,
    Substitution,
    apply_substitutions,
    direct_attack,
    extend_attack,
    greedy_attack,
)
from .constraints import (
    ConstraintConfig,
    ConstraintEntry,
    ConstraintReport,
    check_input_perception,
    check_perplexity,
    check_visual,
    compute_dataset_mean_perplexity,
    evaluate_constraints,
)
from .evaluation import (
    AttackRecord,
    CorpusItem,
    CurvePoint,
    SweepConfig,
    SweepResult,
    as_corpus,
    classify_max_class,
    export_curves,
    export_records,
    parse_records,
    run_direct_sweep,
    run_sweep,
)
from .loaders import ConfigError, RunConfig, build_suite, load_config, load_corpus, save_config
from .oracles import (
    DictionaryTranslator,
    IdentityTranslator,
    LexiconSentiment,
    OracleError,
    OracleSuite,
    OracleUnavailableError,
    PerplexityOracle,
    ProtocolError,
    SentimentOracle,
    SentimentScore,
    StaticSynonyms,
    SynonymOracle,
    TranslationOracle,
    UnigramPerplexity,
)
from .saliency import SaliencyRanking, rank_positions, sentiment_saliency
from .text import TokenSequence, detokenize, edit_distance, normalized_edit_distance, tokenize

__version__ = "0.1.0"

__all__ = [
    "AttackBudget",
    "AttackRecord",
    "AttackResult",
    "ConfigError",
    "ConstraintConfig",
    "ConstraintEntry",
    "ConstraintReport",
    "CorpusItem",
    "CurvePoint",
    "DictionaryTranslator",
    "IdentityTranslator",
    "LexiconSentiment",
    "OracleError",
    "OracleSuite",
    "OracleUnavailableError",
    "PerplexityOracle",
    "ProtocolError",
    "RunConfig",
    "SaliencyRanking",
    "SentimentOracle",
    "SentimentScore",
    "StaticSynonyms",
    "Substitution",
    "SweepConfig",
    "SweepResult",
    "SynonymOracle",
    "TokenSequence",
    "TranslationOracle",
    "UnigramPerplexity",
    "apply_substitutions",
    "as_corpus",
    "build_suite",
    "check_input_perception",
    "check_perplexity",
    "check_visual",
    "classify_max_class",
    "compute_dataset_mean_perplexity",
    "detokenize",
    "direct_attack",
    "edit_distance",
    "evaluate_constraints",
    "export_curves",
    "export_records",
    "extend_attack",
    "greedy_attack",
    "load_config",
    "load_corpus",
    "normalized_edit_distance",
    "parse_records",
    "rank_positions",
    "run_direct_sweep",
    "run_sweep",
    "save_config",
    "sentiment_saliency",
    "tokenize",
]
