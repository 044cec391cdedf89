from __future__ import annotations

import datetime
from pathlib import Path

import pytest

from movelab.corpus import Abstract, load_corpus
from movelab.moves import move_set

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def worked_response() -> str:
    return (DATA_DIR / "worked_response.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def worked_abstract() -> Abstract:
    text = (DATA_DIR / "worked_abstract.txt").read_text(encoding="utf-8")
    gold = (
        move_set("BACKGROUND"),
        move_set("PURPOSE", "METHOD"),
        move_set("METHOD"),
        move_set("RESULTS"),
        move_set("CONCLUSION"),
    )
    return Abstract(
        id="wx1",
        journal="Applied Fixture Quarterly",
        date=datetime.date(2023, 12, 1),
        text=text,
        gold=gold,
    )


@pytest.fixture(scope="session")
def mock_corpus() -> list[Abstract]:
    return load_corpus(DATA_DIR / "mock_corpus.jsonl")


@pytest.fixture(scope="session")
def ablation_corpus() -> list[Abstract]:
    return load_corpus(DATA_DIR / "ablation_corpus.jsonl")


def make_abstract(
    text: str,
    gold: tuple[frozenset, ...] | None = None,
    id: str = "a1",
    journal: str = "J",
    date: datetime.date = datetime.date(2023, 1, 1),
) -> Abstract:
    return Abstract(id=id, journal=journal, date=date, text=text, gold=gold)


GENERATOR_WORDS = [
    "analysis", "budget", "cohort", "design", "effect", "feedback", "gain",
    "habit", "input", "journal", "kernel", "lesson", "metric", "notion",
    "outcome", "pattern", "quality", "rating", "sample", "theme", "uptake",
    "value", "window", "yield", "zone", "accent", "border", "custom",
    "detail", "essay", "fluency", "grammar", "history", "idiom", "jargon",
    "keyword", "lexicon", "margin", "number", "opinion", "phrase", "query",
    "record", "survey", "token", "usage", "version", "writing", "accuracy",
    "balance", "context", "drill", "example", "figure", "glossary", "habitat",
    "interval", "junction", "knowledge", "listener",
]


def random_gold_abstract(rng, index: int) -> Abstract:
    """Synthetic abstract with random gold labels; sentences use disjoint
    word sets so alignment is unambiguous."""
    from movelab.moves import CANONICAL_ORDER

    n_sentences = rng.randint(1, 6)
    pool = GENERATOR_WORDS[:]
    rng.shuffle(pool)
    sentences = []
    cursor = 0
    for _ in range(n_sentences):
        length = rng.randint(4, 9)
        words = pool[cursor : cursor + length]
        cursor += length
        sentences.append(" ".join(words).capitalize() + rng.choice(".?!"))
    gold = tuple(
        frozenset(rng.sample(CANONICAL_ORDER, rng.randint(1, 5)))
        for _ in range(n_sentences)
    )
    return make_abstract(" ".join(sentences), gold=gold, id=f"rt-{index}")
