"""Command-line entry point for the phenotyping pipeline.

Subcommands compose the library modules into the distant-supervision
flow: generate (or ingest) a corpus, weak-label it, balance and split,
train embeddings and classifiers, predict, and evaluate.  A single master
seed expands into per-stage seeds by hashing the stage name, so one flag
reproduces an entire run.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import baselines, cohort, corpus, dataset, embeddings, evaluation, figures, rules, synthesis
from .errors import ValidationError
from .rules import CLASS_ORDER, Label


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the pipeline reserves 2
    # for I/O problems, so route usage errors to exit code 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def derive_seed(master: int, stage: str) -> int:
    """Per-stage seed: first 8 bytes of sha256("<master>:<stage>")."""
    digest = hashlib.sha256(f"{master}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _print_config(command: str, params: dict) -> None:
    resolved = {"command": command}
    resolved.update(params)
    print(json.dumps(resolved, sort_keys=True, default=str))


def _parse_mix(text: str) -> dict[Label, float]:
    if text == "train":
        return dict(synthesis.TRAIN_MIX)
    if text == "test":
        return dict(synthesis.TEST_MIX)
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ValidationError(
            "mix must be 'train', 'test', or four comma-separated shares "
            "(unknown,positive,possible,negated)"
        )
    return dict(zip(CLASS_ORDER, parts))


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def _load_ruleset(arg: str) -> rules.CompiledRuleSet:
    return rules.load_ruleset(None if arg == "default" else arg)


def _load_bank(arg: str) -> synthesis.TemplateBank:
    return synthesis.read_template_bank(None if arg == "default" else arg)


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_gen_corpus(args) -> int:
    bank = _load_bank(args.templates)
    config = synthesis.GenerationConfig(
        n_documents=args.n_docs,
        sentences_per_document=_parse_range(args.sentences_per_doc),
        class_mix=_parse_mix(args.mix),
        hard_fraction=args.hard_fraction,
        seed=args.seed,
    )
    _print_config("gen-corpus", {
        "templates": args.templates,
        "n_documents": config.n_documents,
        "sentences_per_document": list(config.sentences_per_document),
        "class_mix": {k.value: v for k, v in config.class_mix.items()},
        "hard_fraction": config.hard_fraction,
        "seed": config.seed,
        "out_corpus": args.out_corpus,
        "out_gold": args.out_gold,
    })
    generated, gold = synthesis.generate_corpus(config, bank)
    corpus.write_corpus(generated, args.out_corpus)
    dataset.write_dataset(gold, args.out_gold)
    return 0


def _cmd_cohort(args) -> int:
    codes = cohort.load_icd_codeset(
        cohort.default_codeset_path() if args.codes == "default" else args.codes
    )
    records = cohort.read_patient_records(args.records)
    _print_config("cohort", {
        "records": args.records,
        "codes": args.codes,
        "n_codes": len(codes),
        "sample_cases": args.sample_cases,
        "sample_controls": args.sample_controls,
        "sample_seed": args.sample_seed,
        "out": args.out,
    })
    assignments = cohort.select_cohort(records, codes)
    if args.sample_cases or args.sample_controls:
        import numpy as np

        rng = np.random.default_rng(args.sample_seed)
        selected = []
        for group, want in ((cohort.CASE, args.sample_cases),
                            (cohort.CONTROL, args.sample_controls)):
            members = [a for a in assignments if a.cohort == group]
            if want:
                if want > len(members):
                    raise ValidationError(
                        f"requested {want} {group} patients but only {len(members)} available"
                    )
                idx = sorted(rng.choice(len(members), size=want, replace=False))
                members = [members[i] for i in idx]
            selected.extend(members)
        assignments = selected
    cohort.write_assignments(assignments, args.out)
    return 0


def _cmd_weaklabel(args) -> int:
    ruleset = _load_ruleset(args.ruleset)
    _print_config("weaklabel", {
        "corpus": args.corpus,
        "ruleset": args.ruleset,
        "ruleset_hash": ruleset.fingerprint(),
        "out": args.out,
    })
    corp = corpus.read_corpus(args.corpus)
    labeled = dataset.weak_label_corpus(corp, ruleset, source_path=args.source_name or args.corpus)
    dataset.write_dataset(labeled, args.out)
    return 0


def _cmd_build_dataset(args) -> int:
    _print_config("build-dataset", {
        "input": args.input,
        "train_fraction": args.train_fraction,
        "balance_seed": args.balance_seed,
        "split_seed": args.split_seed,
        "out_train": args.out_train,
        "out_valid": args.out_valid,
    })
    labeled = dataset.read_dataset(args.input)
    balanced = dataset.balance_unknown(labeled, seed=args.balance_seed)
    if args.out_balanced:
        dataset.write_dataset(balanced, args.out_balanced)
    train, valid = dataset.split_train_validation(
        balanced, train_fraction=args.train_fraction, seed=args.split_seed
    )
    dataset.write_dataset(train, args.out_train)
    dataset.write_dataset(valid, args.out_valid)
    return 0


def _cmd_train_embeddings(args) -> int:
    config = embeddings.EmbeddingConfig(
        dim=args.dim,
        window=args.window,
        negative=args.negative,
        epochs=args.epochs,
        learning_rate=args.lr,
        min_count=args.min_count,
        seed=args.seed,
    )
    _print_config("train-embeddings", {
        "input": args.input,
        "dim": config.dim,
        "window": config.window,
        "negative": config.negative,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "min_count": config.min_count,
        "seed": config.seed,
        "out": args.out,
    })
    labeled = dataset.read_dataset(args.input)
    sentences = [embeddings.tokenize(s.text) for s in labeled]
    model = embeddings.train_cbow(sentences, config)
    embeddings.save_embeddings(model, args.out)
    return 0


def _cmd_train(args) -> int:
    _print_config("train", {
        "model": args.model,
        "features": args.features,
        "embeddings": args.embeddings,
        "k": args.k,
        "C": args.C,
        "steps": args.steps,
        "trees": args.trees,
        "seed": args.seed,
        "out": args.out,
    })
    emb = embeddings.load_embeddings(args.embeddings)
    labeled = dataset.read_dataset(args.features)
    feats = baselines.features_from_dataset(labeled, emb)
    if args.model == "knn":
        model = baselines.train_knn(feats, k=args.k)
    elif args.model == "svm":
        model = baselines.train_linear_svm(feats, C=args.C, steps=args.steps, seed=args.seed)
    else:
        model = baselines.train_random_forest(feats, n_trees=args.trees, seed=args.seed)
    model.save(args.out)
    return 0


def _cmd_predict(args) -> int:
    _print_config("predict", {
        "model": args.model,
        "embeddings": args.embeddings,
        "input": args.input,
        "out": args.out,
    })
    model = baselines.load_model(args.model)
    emb = embeddings.load_embeddings(args.embeddings)
    labeled = dataset.read_dataset(args.input)
    feats = baselines.features_from_dataset(labeled, emb)
    labels = baselines.predict(model, feats)
    evaluation.write_predictions(zip(feats.sentence_ids, labels), args.out)
    return 0


def _evaluate(gold_path, named_preds: list[tuple[str, str]], out_dir: Path,
              max_errors: int, make_figures: bool) -> None:
    gold = dataset.read_dataset(gold_path)
    reports = []
    confusions = {}
    preds_by_model = {}
    for name, path in named_preds:
        preds = evaluation.read_predictions(path)
        matrix = evaluation.confusion(gold, preds)
        confusions[name] = matrix
        preds_by_model[name] = preds
        reports.append(
            evaluation.per_class_metrics(
                matrix, model=name, fingerprint=gold.metadata.get("bank_hash", "")
            )
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(evaluation.render_comparison(reports), encoding="utf-8")
    (out_dir / "report.csv").write_text(evaluation.render_comparison_csv(reports), encoding="utf-8")
    (out_dir / "errors.txt").write_text(
        evaluation.error_listing(gold, preds_by_model, max_per_class=max_errors),
        encoding="utf-8",
    )
    if make_figures:
        figures.save_f1_bars(reports, out_dir / "report-f1.png")
        for name, matrix in confusions.items():
            figures.save_confusion_heatmap(matrix, name, out_dir / f"confusion-{name}.png")
    print((out_dir / "report.txt").read_text(encoding="utf-8"), end="")


def _cmd_evaluate(args) -> int:
    named = []
    for item in args.pred:
        if "=" not in item:
            raise ValidationError(f"--pred expects NAME=PATH, got {item!r}")
        name, _, path = item.partition("=")
        named.append((name, path))
    _print_config("evaluate", {
        "gold": args.gold,
        "predictions": dict(named),
        "out": args.out,
        "max_errors": args.max_errors,
        "figures": args.figures,
    })
    _evaluate(args.gold, named, Path(args.out), args.max_errors, args.figures)
    return 0


def _cmd_run_all(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = {
        stage: derive_seed(args.seed, stage)
        for stage in (
            "generate-train", "generate-test", "balance", "split",
            "embeddings", "model-svm", "model-rf",
        )
    }
    _print_config("run-all", {
        "out": args.out,
        "seed": args.seed,
        "stage_seeds": seeds,
        "corpus": args.corpus,
        "gold": args.gold,
        "train_sentences_target": args.train_docs,
        "test_docs": args.test_docs,
        "train_mix": args.train_mix,
        "test_mix": args.test_mix,
        "hard_fraction": args.hard_fraction,
        "train_fraction": args.train_fraction,
        "dim": args.dim,
        "window": args.window,
        "epochs": args.epochs,
        "k": args.k,
        "C": args.C,
        "svm_steps": args.svm_steps,
        "trees": args.trees,
        "figures": args.figures,
    })

    bank = _load_bank(args.templates)
    ruleset = _load_ruleset(args.ruleset)

    # Stage 1: training corpus (generated or ingested).
    if args.corpus:
        corp = corpus.read_corpus(args.corpus)
        corpus.write_corpus(corp, out / "corpus.jsonl")
    else:
        gen_cfg = synthesis.GenerationConfig(
            n_documents=args.train_docs,
            sentences_per_document=_parse_range(args.sentences_per_doc),
            class_mix=_parse_mix(args.train_mix),
            hard_fraction=args.hard_fraction,
            seed=seeds["generate-train"],
        )
        corp, gold_train = synthesis.generate_corpus(gen_cfg, bank)
        corpus.write_corpus(corp, out / "corpus.jsonl")
        dataset.write_dataset(gold_train, out / "corpus-gold.jsonl")

    # Stage 2: gold test corpus.
    if args.gold:
        gold_test = dataset.read_dataset(args.gold)
        dataset.write_dataset(gold_test, out / "test-gold.jsonl")
    else:
        test_cfg = synthesis.GenerationConfig(
            n_documents=args.test_docs,
            sentences_per_document=_parse_range(args.sentences_per_doc),
            class_mix=_parse_mix(args.test_mix),
            hard_fraction=args.hard_fraction,
            seed=seeds["generate-test"],
        )
        test_corp, gold_test = synthesis.generate_corpus(test_cfg, bank)
        corpus.write_corpus(test_corp, out / "test.jsonl")
        dataset.write_dataset(gold_test, out / "test-gold.jsonl")

    # Stage 3: weak labels -> balance -> split.
    weak = dataset.weak_label_corpus(corp, ruleset, source_path="corpus.jsonl")
    dataset.write_dataset(weak, out / "weak.jsonl")
    balanced = dataset.balance_unknown(weak, seed=seeds["balance"])
    train, valid = dataset.split_train_validation(
        balanced, train_fraction=args.train_fraction, seed=seeds["split"]
    )
    dataset.write_dataset(train, out / "train.jsonl")
    dataset.write_dataset(valid, out / "valid.jsonl")

    # Stage 4: embeddings on the train split.
    emb_cfg = embeddings.EmbeddingConfig(
        dim=args.dim, window=args.window, epochs=args.epochs,
        seed=seeds["embeddings"],
    )
    tokenized = [embeddings.tokenize(s.text) for s in train]
    emb = embeddings.train_cbow(tokenized, emb_cfg)
    embeddings.save_embeddings(emb, out / "embeddings.model")

    # Stage 5: classifiers.
    feats = baselines.features_from_dataset(train, emb)
    models = {
        "knn": baselines.train_knn(feats, k=args.k),
        "svm": baselines.train_linear_svm(
            feats, C=args.C, steps=args.svm_steps, seed=seeds["model-svm"]
        ),
        "rf": baselines.train_random_forest(
            feats, n_trees=args.trees, seed=seeds["model-rf"]
        ),
    }
    for name, model in models.items():
        model.save(out / f"{name}.model")

    # Stage 6: predictions on the gold test set.
    test_feats = baselines.features_from_dataset(gold_test, emb)
    named_preds = []
    for name, model in models.items():
        labels = baselines.predict(model, test_feats)
        pred_path = out / f"preds-{name}.jsonl"
        evaluation.write_predictions(zip(test_feats.sentence_ids, labels), pred_path)
        named_preds.append((name, str(pred_path)))

    # Stage 7: evaluation report (+ figures).
    _evaluate(out / "test-gold.jsonl", named_preds, out, args.max_errors, args.figures)
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="mddpheno", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", default=None,
        help="JSON file of flag values (underscored keys) overriding the command line",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", parents=[common],
                       help="generate a synthetic corpus with gold labels")
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-gold", required=True)
    p.add_argument("--templates", default="default")
    p.add_argument("--n-docs", type=int, default=100)
    p.add_argument("--sentences-per-doc", default="4:12")
    p.add_argument("--mix", default="train", help="train | test | u,p,o,n shares")
    p.add_argument("--hard-fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("cohort", parents=[common], help="assign patients to case/control cohorts")
    p.add_argument("--records", required=True)
    p.add_argument("--codes", default="default")
    p.add_argument("--out", required=True)
    p.add_argument("--sample-cases", type=int, default=0)
    p.add_argument("--sample-controls", type=int, default=0)
    p.add_argument("--sample-seed", type=int, default=0)
    p.set_defaults(func=_cmd_cohort)

    p = sub.add_parser("weaklabel", parents=[common], help="rule-label every sentence of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ruleset", default="default")
    p.add_argument("--out", required=True)
    p.add_argument("--source-name", default=None, help="override the corpus path recorded in metadata")
    p.set_defaults(func=_cmd_weaklabel)

    p = sub.add_parser("build-dataset", parents=[common], help="balance unknowns and split train/validation")
    p.add_argument("--input", required=True)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-valid", required=True)
    p.add_argument("--out-balanced", default=None)
    p.add_argument("--train-fraction", type=float, default=0.99)
    p.add_argument("--balance-seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("train-embeddings", parents=[common], help="train CBOW embeddings from a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negative", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_embeddings)

    p = sub.add_parser("train", parents=[common], help="train a baseline classifier")
    p.add_argument("--model", required=True, choices=("knn", "svm", "rf"))
    p.add_argument("--features", required=True,
                   help="labeled dataset JSONL providing the feature rows")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", parents=[common], help="emit predictions for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="score prediction files against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--out", required=True)
    p.add_argument("--max-errors", type=int, default=5)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run-all", parents=[common], help="run the full pipeline end to end")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus", default=None, help="ingest this corpus instead of generating")
    p.add_argument("--gold", default=None, help="ingest this gold test dataset instead of generating")
    p.add_argument("--templates", default="default")
    p.add_argument("--ruleset", default="default")
    p.add_argument("--train-docs", type=int, default=400)
    p.add_argument("--test-docs", type=int, default=150)
    p.add_argument("--sentences-per-doc", default="4:12")
    p.add_argument("--train-mix", default="train")
    p.add_argument("--test-mix", default="test")
    p.add_argument("--hard-fraction", type=float, default=0.0)
    p.add_argument("--train-fraction", type=float, default=0.99)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--svm-steps", type=int, default=1000)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-errors", type=int, default=5)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_run_all)

    return parser


def _apply_config_file(args) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise ValidationError(f"{args.config}: config file must hold a JSON object")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("func", "command", "config"):
            raise ValidationError(f"{args.config}: unknown config key {key!r}")
        setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
