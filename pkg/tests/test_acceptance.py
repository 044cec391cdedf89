"""Acceptance suite: one test per release criterion.

Each test prints a `[ACCEPTANCE] <criterion>: PASS` line on success (run
with `pytest -s` to see them); a pytest failure is the fail line. All
tolerances are pinned here, not configurable.
"""

from __future__ import annotations

import json
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from movelab.metrics import (
    ConfusionCounts,
    JudgmentRecord,
    confusion,
    disagreement,
    metric_triple,
)
from movelab.moves import CANONICAL_ORDER, move_set
from movelab.parser import annotate_response
from movelab.prompts import (
    BLOCK_SEPARATOR,
    InstructionBlock,
    PromptSpec,
    build_prompt,
    chunk,
    default_bank,
    render_example,
)
from movelab.gateway import heuristic_moves

from .conftest import make_abstract, random_gold_abstract
from .test_metrics import brute_force_confusion, brute_force_triple, conclusion_fixture

DATA = Path(__file__).parent / "data"
TOLERANCE = 1e-4


def passed(name: str) -> None:
    print(f"\n[ACCEPTANCE] {name}: PASS")


def run_cli(*argv: str) -> tuple[int, str, str]:
    result = subprocess.run(
        [sys.executable, "-m", "movelab", *argv],
        capture_output=True,
        text=True,
        timeout=60,
    )
    return result.returncode, result.stdout, result.stderr


class TestAcceptance:
    def test_metric_arithmetic_known_count_fixtures(self):
        start = time.perf_counter()

        pred, ref = conclusion_fixture(missed=1, false=0)
        counts = confusion(pred, ref, CANONICAL_ORDER[4])
        assert (counts.tp, counts.fp, counts.fn) == (93, 0, 1)
        triple = metric_triple(counts)
        assert triple.precision == pytest.approx(1.0000, abs=TOLERANCE)
        assert triple.recall == pytest.approx(0.9894, abs=TOLERANCE)
        assert triple.f1 == pytest.approx(0.9947, abs=TOLERANCE)

        pred, ref = conclusion_fixture(missed=2, false=3)
        counts = confusion(pred, ref, CANONICAL_ORDER[4])
        assert (counts.tp, counts.fp, counts.fn) == (92, 3, 2)
        triple = metric_triple(counts)
        assert triple.precision == pytest.approx(0.9684, abs=TOLERANCE)
        assert triple.recall == pytest.approx(0.9787, abs=TOLERANCE)
        assert triple.f1 == pytest.approx(0.9735, abs=TOLERANCE)

        results = CANONICAL_ORDER[3]
        eight = metric_triple(ConfusionCounts(label=results, tp=213, fp=0, fn=6))
        assert eight.recall == pytest.approx(0.9726, abs=TOLERANCE)
        two = metric_triple(ConfusionCounts(label=results, tp=204, fp=0, fn=15))
        assert two.recall == pytest.approx(0.9315, abs=TOLERANCE)

        assert time.perf_counter() - start < 1.0
        passed("metric arithmetic on known count fixtures")

    def test_disagreement_arithmetic(self):
        a = [
            JudgmentRecord("a", f"t{i // 7}", i % 7, "correct") for i in range(678)
        ]
        b = [
            JudgmentRecord(
                "b",
                f"t{i // 7}",
                i % 7,
                "incorrect" if i < 12 else "correct",
                corrected=move_set("METHOD") if i < 12 else None,
            )
            for i in range(678)
        ]
        rate, disputed = disagreement(a, b)
        assert len(disputed) == 12
        assert rate == pytest.approx(0.0177, abs=0.0001)
        passed("disagreement arithmetic (12/678 = 1.8%)")

    def test_worked_example_golden(self, worked_response, worked_abstract):
        start = time.perf_counter()
        annotations, diagnostics = annotate_response(worked_response, worked_abstract)
        elapsed = time.perf_counter() - start
        assert [a.predicted for a in annotations] == [
            move_set("BACKGROUND"),
            move_set("PURPOSE", "METHOD"),
            move_set("METHOD"),
            move_set("RESULTS"),
            move_set("CONCLUSION"),
        ]
        assert diagnostics.unknown_tags == []
        assert diagnostics.unclosed_tags == []
        assert diagnostics.stray_close_tags == []
        assert diagnostics.orphan_spans == []
        assert diagnostics.unannotated_sentences == []
        assert elapsed < 0.1
        passed("golden worked-example parse + align")

    def test_round_trip_property_1000(self):
        rng = random.Random(90210)
        failures = 0
        for index in range(1000):
            abstract = random_gold_abstract(rng, index)
            annotations, diagnostics = annotate_response(
                render_example(abstract), abstract
            )
            if [a.predicted for a in annotations] != list(abstract.gold):
                failures += 1
            if diagnostics.has_problems:
                failures += 1
        assert failures == 0
        passed("round-trip property over 1000 randomized abstracts")

    def test_oracle_equivalence_500(self):
        rng = random.Random(555)
        mismatches = 0
        for _ in range(500):
            n = rng.randint(1, 6)
            pred = [
                frozenset(rng.sample(CANONICAL_ORDER, rng.randint(0, 5)))
                for _ in range(n)
            ]
            ref = [
                frozenset(rng.sample(CANONICAL_ORDER, rng.randint(1, 5)))
                for _ in range(n)
            ]
            for label in CANONICAL_ORDER:
                counts = confusion(pred, ref, label)
                if (counts.tp, counts.fp, counts.fn) != brute_force_confusion(
                    pred, ref, label
                ):
                    mismatches += 1
                triple = metric_triple(counts)
                if (
                    triple.precision,
                    triple.recall,
                    triple.f1,
                ) != brute_force_triple(counts.tp, counts.fp, counts.fn):
                    mismatches += 1
        assert mismatches == 0
        passed("confusion/metric oracle equivalence over 500 corpora")

    def test_end_to_end_mock_run(self, tmp_path):
        start = time.perf_counter()
        code, out, err = run_cli(
            "annotate",
            "--store",
            str(tmp_path),
            "--corpus",
            str(DATA / "mock_corpus.jsonl"),
            "--run-id",
            "accept-mock",
            "--k",
            "2",
            "--backend",
            "mock",
            "--rounds",
            "2",
        )
        assert code == 0, err
        code, out, err = run_cli(
            "eval",
            "--store",
            str(tmp_path),
            "--run-id",
            "accept-mock",
            "--corpus",
            str(DATA / "mock_corpus.jsonl"),
        )
        elapsed = time.perf_counter() - start
        assert code == 0, err
        report = json.loads(out)
        assert report["accuracy_mean"] == 1.0
        errors = report["errors"]
        assert errors["unrecognized"] == {}
        assert errors["false_recognition"] == {}
        assert errors["hallucination"] == {}
        assert errors["first_sentence_background"] == 0
        assert errors["combined_move_miss"] == 0
        assert errors["overshadow"] == 0
        assert report["stability"]["delta"] == 0.0
        assert elapsed < 5.0
        passed("end-to-end mock run (accuracy 1.0, stability delta 0.0)")

    def test_ablation_harness_shape(self, tmp_path):
        out_file = tmp_path / "curve.tsv"
        code, _, err = run_cli(
            "ablate",
            "--store",
            str(tmp_path / "store"),
            "--corpus",
            str(DATA / "ablation_corpus.jsonl"),
            "--run-id",
            "accept-abl",
            "--ks",
            "0..8",
            "--backend",
            "simulated",
            "--out",
            str(out_file),
        )
        assert code == 0, err
        lines = out_file.read_text(encoding="utf-8").strip().split("\n")
        rows = [line.split("\t") for line in lines[1:]]
        assert [int(r[0]) for r in rows] == list(range(9))
        means = [float(r[-1]) for r in rows]
        assert min(range(9), key=means.__getitem__) in (5, 6)
        assert means[5] < means[4] and means[6] < means[4]
        assert means[7] > means[5] and means[7] > means[6]
        assert means[8] > means[5] and means[8] > means[6]
        assert means != sorted(means)
        passed("ablation curve: 9 rows, dip at k in {5,6}, recovery at k>=7")

    def test_chunker_compliance(self):
        rng = random.Random(777)
        for _ in range(10_000):
            lengths = [rng.randint(8, 4000) for _ in range(rng.randint(1, 10))]
            blocks = [
                InstructionBlock(
                    ordinal=i + 1, kind="shot-example", text=f"[{i:03d}]" + "x" * (n - 5)
                )
                for i, n in enumerate(lengths)
            ]
            turns = chunk(blocks, 4000)
            ordinals = [o for turn in turns for o in turn.block_ordinals]
            assert ordinals == list(range(1, len(blocks) + 1))
            for turn in turns:
                assert len(turn.text) <= 4000
                assert turn.text.split(BLOCK_SEPARATOR) == [
                    blocks[o - 1].text for o in turn.block_ordinals
                ]
        prompt = build_prompt(
            PromptSpec(k=8, bank=default_bank(), include_trial_feedback=True)
        )
        assert len(prompt.turns) == 4
        passed("chunker compliance (10k vectors) + 8-shot fixture = 4 turns")

    def test_heuristic_baseline_sanity(self):
        cases = {
            "This study focuses on teacher cognition.": move_set("PURPOSE"),
            "The coded transcripts revealed that learners adapted quickly.": move_set(
                "RESULTS"
            ),
            "We conclude with recommendations for classroom practice.": move_set(
                "CONCLUSION"
            ),
        }
        for _ in range(3):  # deterministic across repeated runs
            for sentence, expected in cases.items():
                abstract = make_abstract(sentence)
                assert heuristic_moves(abstract) == [expected]
        passed("heuristic baseline markers fire their documented labels")
