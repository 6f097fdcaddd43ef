import json

import pytest

from mddpheno.cli import derive_seed, main


def run(argv):
    return main(argv)


class TestDispatch:
    def test_unknown_subcommand_exits_1(self, capsys):
        assert run(["frobnicate"]) == 1

    def test_unknown_flag_exits_1(self):
        assert run(["weaklabel", "--bogus", "x"]) == 1

    def test_train_without_features_usage_error(self):
        assert run(["train", "--model", "svm"]) == 1

    def test_missing_input_file_exits_2(self, tmp_path):
        code = run(
            ["weaklabel", "--corpus", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")]
        )
        assert code == 2

    def test_validation_error_exits_1(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        code = run(["weaklabel", "--corpus", str(bad), "--out", str(tmp_path / "o")])
        assert code == 1


class TestSeedDerivation:
    def test_deterministic_and_stage_keyed(self):
        assert derive_seed(42, "balance") == derive_seed(42, "balance")
        assert derive_seed(42, "balance") != derive_seed(42, "split")
        assert derive_seed(42, "balance") != derive_seed(43, "balance")


class TestCommands:
    def test_gen_weaklabel_builddataset_chain(self, tmp_path, capsys):
        corpus = tmp_path / "c.jsonl"
        gold = tmp_path / "g.jsonl"
        assert run([
            "gen-corpus", "--out-corpus", str(corpus), "--out-gold", str(gold),
            "--n-docs", "40", "--seed", "3",
        ]) == 0
        config_line = capsys.readouterr().out.splitlines()[0]
        assert json.loads(config_line)["command"] == "gen-corpus"

        weak = tmp_path / "weak.jsonl"
        assert run(["weaklabel", "--corpus", str(corpus), "--out", str(weak)]) == 0
        assert weak.exists() and (tmp_path / "weak.jsonl.meta.json").exists()

        train, valid = tmp_path / "train.jsonl", tmp_path / "valid.jsonl"
        assert run([
            "build-dataset", "--input", str(weak),
            "--out-train", str(train), "--out-valid", str(valid),
            "--train-fraction", "0.9",
        ]) == 0
        n_train = len(train.read_text().splitlines())
        n_valid = len(valid.read_text().splitlines())
        n_weak = len(weak.read_text().splitlines())
        assert n_train + n_valid <= n_weak  # balancing may drop unknowns
        assert n_valid >= 1

    def test_cohort_command(self, tmp_path):
        records = tmp_path / "patients.jsonl"
        records.write_text(
            json.dumps({"patient_id": "p1", "icd_codes": ["F32", "F33.1"]}) + "\n"
            + json.dumps({"patient_id": "p2", "icd_codes": ["I10"]}) + "\n"
            + json.dumps({"patient_id": "p3", "icd_codes": ["296.2"]}) + "\n"
        )
        out = tmp_path / "cohorts.jsonl"
        assert run(["cohort", "--records", str(records), "--out", str(out)]) == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert {r["patient_id"]: r["cohort"] for r in rows} == {
            "p1": "case", "p2": "control", "p3": "excluded",
        }

    def test_evaluate_id_mismatch_nonzero_exit(self, tmp_path):
        gold = tmp_path / "gold.jsonl"
        gold.write_text(
            json.dumps({"sentence_id": "a#0", "doc_id": "a", "text": "x",
                        "label": "positive", "source": "gold"}) + "\n"
        )
        preds = tmp_path / "preds.jsonl"
        preds.write_text(json.dumps({"sentence_id": "wrong#0", "predicted_label": "positive"}) + "\n")
        code = run([
            "evaluate", "--gold", str(gold), "--pred", f"m={preds}",
            "--out", str(tmp_path / "rep"), "--no-figures",
        ])
        assert code == 1

    def test_evaluate_writes_reports_and_figures(self, tmp_path):
        gold = tmp_path / "gold.jsonl"
        records = [
            {"sentence_id": f"a#{i}", "doc_id": "a", "text": f"s{i}",
             "label": label, "source": "gold"}
            for i, label in enumerate(["positive", "unknown", "negated", "possible"])
        ]
        gold.write_text("".join(json.dumps(r) + "\n" for r in records))
        preds = tmp_path / "preds.jsonl"
        preds.write_text(
            "".join(
                json.dumps({"sentence_id": r["sentence_id"], "predicted_label": r["label"]}) + "\n"
                for r in records
            )
        )
        outdir = tmp_path / "rep"
        assert run([
            "evaluate", "--gold", str(gold), "--pred", f"mymodel={preds}",
            "--out", str(outdir),
        ]) == 0
        assert (outdir / "report.txt").exists()
        assert (outdir / "report.csv").exists()
        assert (outdir / "errors.txt").exists()
        assert (outdir / "report-f1.png").exists()
        assert (outdir / "confusion-mymodel.png").exists()
        assert "1.00" in (outdir / "report.txt").read_text()

    def test_config_file_overrides_flags(self, tmp_path, capsys):
        corpus = tmp_path / "c.jsonl"
        gold = tmp_path / "g.jsonl"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_docs": 25, "seed": 9}))
        assert run([
            "gen-corpus", "--out-corpus", str(corpus), "--out-gold", str(gold),
            "--n-docs", "10", "--seed", "1", "--config", str(cfg),
        ]) == 0
        resolved = json.loads(capsys.readouterr().out.splitlines()[0])
        assert resolved["n_documents"] == 25
        assert resolved["seed"] == 9
        assert len(corpus.read_text().splitlines()) == 25

    def test_config_file_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus_key": 1}))
        code = run([
            "gen-corpus", "--out-corpus", str(tmp_path / "c"), "--out-gold",
            str(tmp_path / "g"), "--config", str(cfg),
        ])
        assert code == 1


class TestRunAllSmall:
    def test_run_all_produces_expected_tree(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = run([
            "run-all", "--out", str(out), "--seed", "7",
            "--train-docs", "60", "--test-docs", "20",
            "--test-mix", "train", "--epochs", "2", "--dim", "32",
            "--svm-steps", "200", "--trees", "10",
        ])
        assert code == 0
        for name in [
            "corpus.jsonl", "corpus-gold.jsonl", "test.jsonl", "test-gold.jsonl",
            "weak.jsonl", "train.jsonl", "valid.jsonl", "embeddings.model",
            "knn.model", "svm.model", "rf.model",
            "preds-knn.jsonl", "preds-svm.jsonl", "preds-rf.jsonl",
            "report.csv", "report.txt", "errors.txt", "report-f1.png",
        ]:
            assert (out / name).exists(), name
        stdout = capsys.readouterr().out
        config = json.loads(stdout.splitlines()[0])
        assert "stage_seeds" in config and len(config["stage_seeds"]) == 7
