"""Deterministic fixture builders shared across the test suite.

Also runnable as a script to materialize the large-scale review store the
frontend integration flow drives:

    python3 tests/fixtures.py /tmp/demo-store
"""

from __future__ import annotations

import datetime
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from movelab.corpus import Abstract, dump_corpus, segment
from movelab.gateway import BackendConfig
from movelab.metrics import JudgmentRecord
from movelab.moves import MoveLabel, move_set
from movelab.runner import RunSpec, run
from movelab.store import RunStore

JOURNALS = (
    "Journal of Fixture Linguistics",
    "Synthetic Language Studies",
    "Annals of Corpus Teaching",
    "Review of Classroom Research",
)

_TOPICS = (
    "collocation journals", "dictation loops", "error logs", "feedback scripts",
    "glossing routines", "homework portfolios", "intonation drills", "jigsaw readings",
    "keyword posters", "listening ladders", "mentor texts", "noticing tasks",
    "oral summaries", "peer podcasts", "question banks", "recast episodes",
    "shadowing sessions", "timed writings", "usage surveys", "vocabulary sprints",
    "word webs", "exit tickets", "lesson vignettes", "reading sprints", "syntax clinics",
)


def _sentences(index: int, topic: str, count: int) -> tuple[list[str], list[list[str]]]:
    """One synthetic abstract: `count` sentences with gold labels."""
    s = [
        f"Classroom interest in {topic} has grown in recent years, although the supporting evidence base remains thin.",
        f"To gauge the value of {topic}, this study followed learners in cohort {index + 1} across a full teaching term.",
        f"Weekly sessions built around {topic} were recorded, transcribed, and coded by two trained raters.",
        f"Analysis of the coded sessions revealed steady gains that favored the learners who used {topic} most consistently.",
        f"Gains on the delayed test were smaller but still visible for cohort {index + 1}.",
        f"Questionnaire responses tied the improvement to the routine use of {topic} rather than to extra study time.",
        f"We conclude that {topic} can be recommended for similar programs, with monitoring of learner workload.",
    ]
    gold = [
        ["BACKGROUND"],
        ["PURPOSE", "METHOD"],
        ["METHOD"],
        ["METHOD", "RESULTS"],
        ["RESULTS"],
        ["RESULTS"],
        ["CONCLUSION"],
    ]
    if count == 6:
        del s[4], gold[4]
    return s, gold


def s5_corpus() -> list[Abstract]:
    """100 abstracts totalling 678 sentences (78 x 7 + 22 x 6)."""
    abstracts = []
    for i in range(100):
        count = 7 if i < 78 else 6
        sentences, gold = _sentences(i, _TOPICS[i % len(_TOPICS)], count)
        text = " ".join(sentences)
        assert len(segment(text)) == count, (i, len(segment(text)))
        abstracts.append(
            Abstract(
                id=f"s5-{i + 1:03d}",
                journal=JOURNALS[i % 4],
                date=datetime.date(2023, (i % 12) + 1, (i % 27) + 1),
                text=text,
                gold=tuple(move_set(*labels) for labels in gold),
            )
        )
    total = sum(len(a.gold) for a in abstracts)
    assert total == 678, total
    return abstracts


# The 12 disputed sentences: six METHOD cases and six PURPOSE cases.
DISPUTED_KEYS = tuple(
    [(f"s5-{i:03d}", 2) for i in (3, 11, 19, 27, 35, 43)]  # METHOD sentence
    + [(f"s5-{i:03d}", 1) for i in (5, 13, 21, 29, 37, 45)]  # PURPOSE+METHOD sentence
)


def evaluator_judgments(
    corpus: list[Abstract],
) -> tuple[list[JudgmentRecord], list[JudgmentRecord], list[JudgmentRecord]]:
    """Two full evaluator passes disagreeing on exactly the 12 disputed
    items, plus the adjudications that settle them (siding with A)."""
    disputed = set(DISPUTED_KEYS)
    a_records, b_records, adjudications = [], [], []
    for abstract in corpus:
        for index, labels in enumerate(abstract.gold):
            key = (abstract.id, index)
            a_records.append(
                JudgmentRecord(
                    evaluator="eval-a",
                    abstract_id=abstract.id,
                    sentence_index=index,
                    verdict="correct",
                )
            )
            if key in disputed:
                corrected = (
                    move_set(MoveLabel.BACKGROUND)
                    if MoveLabel.PURPOSE in labels
                    else move_set(MoveLabel.RESULTS)
                )
                b_records.append(
                    JudgmentRecord(
                        evaluator="eval-b",
                        abstract_id=abstract.id,
                        sentence_index=index,
                        verdict="incorrect",
                        corrected=corrected,
                    )
                )
                adjudications.append(
                    JudgmentRecord(
                        evaluator="adjudicator",
                        abstract_id=abstract.id,
                        sentence_index=index,
                        verdict="correct",
                    )
                )
            else:
                b_records.append(
                    JudgmentRecord(
                        evaluator="eval-b",
                        abstract_id=abstract.id,
                        sentence_index=index,
                        verdict="correct",
                    )
                )
    return a_records, b_records, adjudications


def build_s5_store(
    root: str | Path,
    with_judgments: bool = True,
    with_resolutions: bool = False,
) -> RunStore:
    """Store with an echo-mock run over the S5-scale corpus and, by
    default, both evaluators' judgment files (12 disputes pending)."""
    corpus = s5_corpus()
    store = RunStore(root)
    store.root.mkdir(parents=True, exist_ok=True)
    dump_corpus(corpus, store.corpus_path)
    spec = RunSpec(
        run_id="s5-run",
        part="all",
        k=8,
        backend=BackendConfig(kind="mock"),
    )
    run(spec, corpus, store=store)
    if with_judgments:
        a_records, b_records, adjudications = evaluator_judgments(corpus)
        for record in a_records + b_records:
            store.append_judgment(record)
        if with_resolutions:
            for record in adjudications:
                store.append_judgment(record, resolution=True)
    return store


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "demo-store"
    build_s5_store(target)
    print(f"built review store at {target} (run id: s5-run, 678 items, 12 disputed)")
