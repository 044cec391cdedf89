#!/usr/bin/env python3
"""End-to-end library walkthrough on the bundled fixtures.

Covers the main capabilities in order: load a corpus, split it
chronologically, build and chunk a k-shot prompt, annotate with the echo
mock and the heuristic baseline, parse a messy tagged response, and
evaluate a run. Run from the repository root:

    python3 demos/walkthrough.py
"""

import tempfile
from pathlib import Path

from movelab import (
    BackendConfig,
    PromptSpec,
    RunSpec,
    RunStore,
    SplitSpec,
    annotate_heuristic,
    annotate_response,
    audit_bank,
    build_prompt,
    default_bank,
    evaluate,
    load_corpus,
    run,
    split_corpus,
)
from movelab.runner import report_table

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "data" / "mock_corpus.jsonl"


def main() -> None:
    print("== corpus ==")
    corpus = load_corpus(CORPUS)
    print(f"loaded {len(corpus)} abstracts from {CORPUS.name}")

    parts = split_corpus(corpus, SplitSpec(parts=(("DEV", 3), ("TEST", 7))))
    print("chronological split:", {name: len(items) for name, items in parts.items()})

    print("\n== prompt ==")
    bank = default_bank()
    audit = audit_bank(bank)
    print("bank trait coverage:", audit.coverage)
    prompt = build_prompt(PromptSpec(k=8, bank=bank, include_trial_feedback=True))
    print(f"8-shot prompt: {len(prompt.blocks)} blocks in {len(prompt.turns)} turns")
    for i, turn in enumerate(prompt.turns, start=1):
        print(f"  turn {i}: {len(turn.text)} chars, blocks {turn.block_ordinals}")

    print("\n== heuristic baseline ==")
    sample = corpus[0]
    tagged = annotate_heuristic(sample)
    print(tagged[:160] + "...")

    print("\n== parsing a messy response ==")
    messy = (
        "Sure, here is my attempt:\n\n"
        "<BACKGROUND>Reading research has a long history. "
        "<PURPOSE><METHOD>To test this, we ran a study.</METHOD></PURPOSE>\n\n"
        "Did I get it right?"
    )
    from movelab import Abstract
    import datetime

    source = Abstract(
        id="demo",
        journal="demo",
        date=datetime.date(2024, 1, 1),
        text="Reading research has a long history. To test this, we ran a study.",
    )
    annotations, diagnostics = annotate_response(messy, source)
    for a in annotations:
        print(f"  sentence {a.index}: {sorted(l.value for l in a.predicted)}")
    print(f"  recovered despite unclosed tags: {diagnostics.unclosed_tags}")

    print("\n== mock annotation run and evaluation ==")
    with tempfile.TemporaryDirectory() as tmp:
        store = RunStore(tmp)
        spec = RunSpec(
            run_id="demo-run",
            part="all",
            k=8,
            backend=BackendConfig(kind="mock"),
            rounds=2,
        )
        record = run(spec, corpus, store=store)
        report = evaluate(record, corpus)
        print(report_table(report))
        print("accuracy per round:", report.accuracy_by_round)
        assert report.stability is not None
        print("cross-round stability delta:", report.stability.delta)


if __name__ == "__main__":
    main()
