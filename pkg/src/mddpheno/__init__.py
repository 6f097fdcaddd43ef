"""Distant-supervision MDD phenotyping pipeline.

Rule-labels clinical-note sentences into four assertion classes, builds
balanced training sets, trains CBOW embeddings and baseline classifiers,
and scores every model with per-class precision/recall/F1.
"""

from .cohort import CohortAssignment, PatientRecord, load_icd_codeset, select_cohort
from .corpus import Corpus, Document, Sentence, read_corpus, segment_sentences, write_corpus
from .dataset import (
    LabeledSentence,
    LabeledSet,
    balance_unknown,
    class_distribution,
    read_dataset,
    split_train_validation,
    weak_label_corpus,
    write_dataset,
)
from .embeddings import (
    EmbeddingConfig,
    EmbeddingModel,
    build_vocab,
    embed_sentence,
    load_embeddings,
    save_embeddings,
    tokenize,
    train_cbow,
)
from .errors import PipelineError, ValidationError
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    confusion,
    error_listing,
    per_class_metrics,
    render_comparison,
)
from .rules import (
    CompiledRuleSet,
    Label,
    MatchSpan,
    RuleSpec,
    classify_assertion,
    compile_ruleset,
    find_concept_mentions,
    label_sentence,
    load_ruleset,
)
from .synthesis import GenerationConfig, TemplateBank, generate_corpus, read_template_bank, validate_bank

__version__ = "0.1.0"
