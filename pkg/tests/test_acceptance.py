"""Acceptance suite: one test per exit criterion, each printing a
[PASS]/[FAIL] line (run with `pytest -s tests/test_acceptance.py` to see
them inline).  Tolerances are pinned here, not calibrated elsewhere.
"""

import filecmp
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from mddpheno.corpus import segment_sentences
from mddpheno.dataset import (
    balance_unknown,
    class_distribution,
    read_dataset,
    split_train_validation,
    weak_label_corpus,
)
from mddpheno.embeddings import cbow_loss_and_grads
from mddpheno.evaluation import ConfusionMatrix, confusion, per_class_metrics, read_predictions
from mddpheno.rules import CLASS_INDEX, CLASS_ORDER, Label, load_ruleset
from mddpheno.synthesis import (
    TRAIN_MIX,
    GenerationConfig,
    generate_corpus,
    read_template_bank,
)

from conftest import make_sentence


def _report(name: str, ok: bool, detail: str = ""):
    marker = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{marker}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def _cli(args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "mddpheno.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture(scope="module")
def rules():
    return load_ruleset()


@pytest.fixture(scope="module")
def bank():
    return read_template_bank()


def test_rule_engine_oracle_equivalence(rules, bank):
    """Weak labels match planted gold on 100% of 10,000 sentences in <10s."""
    config = GenerationConfig(
        n_documents=1250, sentences_per_document=(8, 8), hard_fraction=0.0, seed=2024
    )
    corpus, gold = generate_corpus(config, bank)
    assert len(gold) == 10_000
    start = time.perf_counter()
    weak = weak_label_corpus(corpus, rules)
    elapsed = time.perf_counter() - start
    mismatches = sum(
        1 for w, g in zip(weak, gold) if w.label is not g.label or w.sentence_id != g.sentence_id
    )
    _report(
        "rule-engine oracle equivalence on 10,000 sentences",
        mismatches == 0 and elapsed < 10.0,
        f"mismatches={mismatches}, {elapsed:.2f}s",
    )


def test_paper_example_fidelity(rules):
    """Six canonical example sentences label exactly as required."""
    from mddpheno.rules import classify_assertion, find_concept_mentions

    expected = [
        ("Patient has history of dysthymia", Label.POSITIVE),
        ("Patient is a depression suspect", Label.POSSIBLE),
        ("There is no evidence of depression", Label.NEGATED),
        ("Patient has hx of dysthymia", Label.POSITIVE),
        ("Likewise, he is not experiencing anhedonia.", Label.NEGATED),
        ("There is a strong family history of depression", Label.UNKNOWN),
    ]
    wrong = []
    for text, want in expected:
        sent = make_sentence(text)
        got = classify_assertion(sent, find_concept_mentions(sent, rules), rules)
        if got is not want:
            wrong.append((text, want.value, got.value))
    _report("canonical example fidelity (6 sentences)", not wrong, str(wrong) if wrong else "6/6")


def test_balancing_analog(rules, bank):
    """Post-balance unknown count equals the MDD-related count exactly;
    no non-unknown sentence is lost."""
    config = GenerationConfig(
        n_documents=500,
        sentences_per_document=(6, 10),
        class_mix={Label.UNKNOWN: 0.9, Label.POSITIVE: 0.06,
                   Label.POSSIBLE: 0.025, Label.NEGATED: 0.015},
        seed=77,
    )
    corpus, _ = generate_corpus(config, bank)
    weak = weak_label_corpus(corpus, rules)
    balanced = balance_unknown(weak, seed=5)
    before = weak.counts()
    after = balanced.counts()
    n_mdd = sum(before[label] for label in (Label.POSITIVE, Label.POSSIBLE, Label.NEGATED))
    mdd_ids_before = {s.sentence_id for s in weak if s.label is not Label.UNKNOWN}
    mdd_ids_after = {s.sentence_id for s in balanced if s.label is not Label.UNKNOWN}
    ok = (
        before[Label.UNKNOWN] > n_mdd
        and after[Label.UNKNOWN] == n_mdd
        and mdd_ids_before == mdd_ids_after
        and len({s.sentence_id for s in balanced}) == len(balanced)
    )
    _report(
        "balancing analog (unknowns down-sampled to MDD count)",
        ok,
        f"unknown {before[Label.UNKNOWN]} -> {after[Label.UNKNOWN]}, mdd={n_mdd}",
    )


def test_split_analog():
    """10,000 sentences at 0.99 -> 9,900/100 up to per-class rounding, with
    partition and stratification invariants."""
    from mddpheno.dataset import LabeledSentence, LabeledSet

    labels = (
        [Label.UNKNOWN] * 5000 + [Label.POSITIVE] * 4450
        + [Label.POSSIBLE] * 360 + [Label.NEGATED] * 190
    )
    labeled = LabeledSet(
        sentences=tuple(
            LabeledSentence(f"s#{i:05d}", "s", f"t{i}", label, "weak")
            for i, label in enumerate(labels)
        )
    )
    train, valid = split_train_validation(labeled, train_fraction=0.99, seed=11)
    train_ids = {s.sentence_id for s in train}
    valid_ids = {s.sentence_id for s in valid}
    partition = (
        len(train) + len(valid) == 10_000
        and not (train_ids & valid_ids)
        and train_ids | valid_ids == {s.sentence_id for s in labeled}
    )
    stratified = True
    tc, vc = train.counts(), valid.counts()
    for label, total in ((Label.UNKNOWN, 5000), (Label.POSITIVE, 4450),
                         (Label.POSSIBLE, 360), (Label.NEGATED, 190)):
        floor = math.floor(0.99 * total)
        if tc[label] not in (floor, floor + 1):
            stratified = False
    ok = partition and stratified and abs(len(valid) - 100) <= 4
    _report(
        "99/1 split analog on 10,000 sentences",
        ok,
        f"train={len(train)}, valid={len(valid)}, per-class valid="
        f"{[vc[label] for label in CLASS_ORDER]}",
    )


def test_distribution_reporting(bank):
    """A train-mix corpus reports 50.0 / 44.5 / 3.6 / 1.9 within 0.1."""
    config = GenerationConfig(
        n_documents=1250, sentences_per_document=(8, 8),
        class_mix=dict(TRAIN_MIX), seed=31,
    )
    _, gold = generate_corpus(config, bank)
    dist = class_distribution(gold)
    want = {Label.UNKNOWN: 50.0, Label.POSITIVE: 44.5, Label.POSSIBLE: 3.6, Label.NEGATED: 1.9}
    deltas = {k.value: abs(dist.percentages[k] - want[k]) for k in CLASS_ORDER}
    ok = all(d <= 0.1 for d in deltas.values())
    _report(
        "class distribution reproduces the train-mix shares",
        ok,
        ", ".join(f"{label.value}={dist.percentages[label]}" for label in CLASS_ORDER),
    )


def test_cbow_gradient_check():
    """100 random probes: analytic vs central finite differences, max
    relative error < 1e-4, in under 30s."""
    rng = np.random.default_rng(4242)
    start = time.perf_counter()
    h = 1e-5
    worst = 0.0
    probes = 0
    while probes < 100:
        V, dim = 25, 300
        w_in = rng.normal(0, 0.5, (V, dim))
        w_out = rng.normal(0, 0.5, (V, dim))
        ctx = list(rng.integers(0, V, int(rng.integers(1, 9))))
        target = int(rng.integers(0, V))
        negs = [int(x) for x in rng.integers(0, V, 5) if int(x) != target]
        _, gin, gout = cbow_loss_and_grads(w_in, w_out, ctx, target, negs)
        for W, grads in ((w_in, gin), (w_out, gout)):
            rows = list(grads)
            row = rows[int(rng.integers(0, len(rows)))]
            col = int(rng.integers(0, dim))
            orig = W[row, col]
            W[row, col] = orig + h
            lp, _, _ = cbow_loss_and_grads(w_in, w_out, ctx, target, negs)
            W[row, col] = orig - h
            lm, _, _ = cbow_loss_and_grads(w_in, w_out, ctx, target, negs)
            W[row, col] = orig
            fd = (lp - lm) / (2 * h)
            an = grads[row][col]
            worst = max(worst, abs(an - fd) / max(abs(an) + abs(fd), 1e-8))
            probes += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 30.0
    _report(
        "CBOW analytic vs finite-difference gradients (100 probes)",
        ok,
        f"max rel err={worst:.2e}, {elapsed:.2f}s",
    )


def test_baseline_sanity_and_runtime(tmp_path):
    """On a separable 5,000-sentence corpus each baseline reaches positive
    F1 >= 0.80 and beats majority-class accuracy; run-all finishes in
    under 5 minutes."""
    out = tmp_path / "full"
    start = time.perf_counter()
    proc = _cli([
        "run-all", "--out", str(out), "--seed", "42",
        "--train-docs", "625", "--test-docs", "125",
        "--sentences-per-doc", "8:8", "--test-mix", "train",
    ])
    elapsed = time.perf_counter() - start
    assert proc.returncode == 0, proc.stderr

    corpus_sentences = sum(
        len(segment_sentences(d))
        for d in __import__("mddpheno.corpus", fromlist=["read_corpus"]).read_corpus(
            out / "corpus.jsonl"
        )
    )
    assert corpus_sentences == 5000

    gold = read_dataset(out / "test-gold.jsonl")
    majority = max(gold.counts().values()) / len(gold)
    failures = []
    scores = {}
    for name in ("knn", "svm", "rf"):
        preds = read_predictions(out / f"preds-{name}.jsonl")
        matrix = confusion(gold, preds)
        report = per_class_metrics(matrix, model=name)
        f1 = report.per_class[Label.POSITIVE].f1
        acc = matrix.accuracy()
        scores[name] = (f1, acc)
        if f1 < 0.80 or acc <= majority:
            failures.append((name, f1, acc))
    ok = not failures and elapsed < 300.0
    _report(
        "baseline sanity on separable 5,000-sentence corpus",
        ok,
        "; ".join(
            f"{name}: posF1={f1:.2f}, acc={acc:.2f}" for name, (f1, acc) in scores.items()
        )
        + f"; majority={majority:.2f}; run-all {elapsed:.1f}s",
    )


def test_metrics_fixture_and_micro_recall():
    """Hand-computed confusion arithmetic to 1e-9 plus the micro-recall ==
    accuracy identity on 1,000 random prediction vectors."""
    counts = np.zeros((4, 4), dtype=np.int64)
    P, U = CLASS_INDEX[Label.POSITIVE], CLASS_INDEX[Label.UNKNOWN]
    counts[P, P] = 2
    counts[U, P] = 1
    counts[P, U] = 1
    report = per_class_metrics(ConfusionMatrix(counts=counts))
    cm = report.per_class[Label.POSITIVE]
    fixture_ok = (
        abs(cm.precision - 2 / 3) < 1e-9
        and abs(cm.recall - 2 / 3) < 1e-9
        and abs(cm.f1 - 2 / 3) < 1e-9
    )

    rng = np.random.default_rng(99)
    identity_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        g = rng.integers(0, 4, n)
        p = rng.integers(0, 4, n)
        m = np.zeros((4, 4), dtype=np.int64)
        for gi, pi in zip(g, p):
            m[gi, pi] += 1
        matrix = ConfusionMatrix(counts=m)
        micro_recall = sum(m[c, c] for c in range(4)) / n
        if abs(micro_recall - matrix.accuracy()) > 1e-12:
            identity_ok = False
            break
    _report(
        "metrics fixture (0.6667 to 1e-9) and micro-recall == accuracy x1000",
        fixture_ok and identity_ok,
    )


def test_run_all_determinism(tmp_path):
    """`run-all --seed 42` twice yields byte-identical output trees."""
    args = [
        "run-all", "--seed", "42", "--train-docs", "80", "--test-docs", "30",
        "--epochs", "2", "--dim", "48", "--svm-steps", "200", "--trees", "20",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    p1 = _cli(args + ["--out", str(out1)])
    p2 = _cli(args + ["--out", str(out2)])
    assert p1.returncode == 0 and p2.returncode == 0, p1.stderr + p2.stderr

    names1 = sorted(p.name for p in out1.iterdir())
    names2 = sorted(p.name for p in out2.iterdir())
    same_names = names1 == names2
    diffs = [
        name for name in names1 if not filecmp.cmp(out1 / name, out2 / name, shallow=False)
    ] if same_names else ["<tree mismatch>"]
    _report(
        "run-all determinism (byte-identical trees)",
        same_names and not diffs,
        f"{len(names1)} files compared" + (f", diffs={diffs}" if diffs else ""),
    )
