"""Corpus data model: abstracts, sentence segmentation, chronological splits.

Corpus files are line-delimited JSON (UTF-8, LF), one record per line:

    {"id": ..., "journal": ..., "date": "YYYY-MM-DD", "text": ...,
     "gold": [["BACKGROUND"], ["PURPOSE", "METHOD"], ...]}

`gold` is optional; when present it must hold one non-empty label array per
segmented sentence, so a change in segmentation behavior surfaces as a load
error instead of silently shifting annotations.
"""

from __future__ import annotations

import datetime
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import CorpusError, SplitError
from .moves import MoveLabel, move_set

TERMINATORS = frozenset(".?!")
OPEN_BRACKETS = {"(": ")", "[": "]"}
CLOSE_BRACKETS = frozenset(OPEN_BRACKETS.values())


def _load_abbreviations() -> frozenset[str]:
    raw = resources.files("movelab.data").joinpath("abbreviations.txt").read_text("utf-8")
    entries = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line.lower())
    return frozenset(entries)


ABBREVIATIONS: frozenset[str] = _load_abbreviations()


@dataclass(frozen=True)
class Sentence:
    """One segmented sentence: exact substring of the abstract text."""

    index: int
    text: str
    span: tuple[int, int]


@dataclass(frozen=True)
class Abstract:
    """A source abstract with journal/date metadata and optional gold labels."""

    id: str
    journal: str
    date: datetime.date
    text: str
    gold: tuple[frozenset[MoveLabel], ...] | None = None

    def sentences(self) -> list[Sentence]:
        return segment(self.text)


@dataclass(frozen=True)
class SplitSpec:
    """Ordered sub-corpus parts, each taking `count` abstracts per journal."""

    parts: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.parts]
        if len(set(names)) != len(names):
            raise SplitError(f"duplicate part names in split spec: {names}")
        for name, count in self.parts:
            if count <= 0:
                raise SplitError(f"part {name!r} demands non-positive count {count}")

    @property
    def per_journal_total(self) -> int:
        return sum(count for _, count in self.parts)


# The default five-part split: four design parts of 5 abstracts per journal
# plus one assessment part of 25 per journal (100 abstracts over 4 journals).
FIVE_PART_SPLIT = SplitSpec(
    parts=(("S1", 5), ("S2", 5), ("S3", 5), ("S4", 5), ("S5", 25)),
)


def _is_abbreviation(text: str, end: int) -> bool:
    """True if the word ending at text[end] (a terminator) is protected."""
    words = text[: end + 1].split()
    if not words:
        return False
    last = words[-1].lstrip("([{'\"‘“").lower()
    if last in ABBREVIATIONS:
        return True
    if len(words) >= 2:
        prev = words[-2].lstrip("([{'\"‘“").lower()
        if f"{prev} {last}" in ABBREVIATIONS:
            return True
    return False


def segment(text: str) -> list[Sentence]:
    """Split abstract text into sentences with character spans.

    Boundary rules (deterministic by design):
      - a sentence ends at '.', '?' or '!' followed by whitespace and then
        an uppercase letter or digit;
      - terminators inside unbalanced '(' or '[' regions never split;
      - a terminator completing a protected abbreviation never splits;
      - the final sentence ends at the last non-whitespace character.

    Spans cover every non-whitespace character and reconstruct the input
    up to inter-sentence whitespace. Worst case the whole text is one
    sentence; empty input is an error.
    """
    if not text or not text.strip():
        raise CorpusError("cannot segment empty text")

    boundaries: list[int] = []  # index just past each sentence terminator
    depth = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch in OPEN_BRACKETS:
            depth += 1
        elif ch in CLOSE_BRACKETS:
            depth = max(0, depth - 1)
        if ch not in TERMINATORS or depth > 0:
            continue
        j = i + 1
        if j >= n or not text[j].isspace():
            continue
        while j < n and text[j].isspace():
            j += 1
        if j >= n:
            continue
        if not (text[j].isupper() or text[j].isdigit()):
            continue
        if ch == "." and _is_abbreviation(text, i):
            continue
        boundaries.append(i + 1)

    sentences: list[Sentence] = []
    start = 0
    last = text.rstrip()
    end_of_text = len(last)
    for boundary in boundaries + [end_of_text]:
        while start < boundary and text[start].isspace():
            start += 1
        if start >= boundary:
            continue
        sentences.append(
            Sentence(
                index=len(sentences),
                text=text[start:boundary],
                span=(start, boundary),
            )
        )
        start = boundary
    return sentences


def _parse_gold(
    raw_gold: object, sentence_count: int, line_no: int, abstract_id: str
) -> tuple[frozenset[MoveLabel], ...]:
    if not isinstance(raw_gold, list):
        raise CorpusError(f"line {line_no}: field 'gold' must be an array of label arrays")
    if len(raw_gold) != sentence_count:
        raise CorpusError(
            f"line {line_no}: abstract {abstract_id!r} has {sentence_count} sentences "
            f"but {len(raw_gold)} gold entries"
        )
    sets = []
    for idx, entry in enumerate(raw_gold):
        if not isinstance(entry, list) or not entry:
            raise CorpusError(
                f"line {line_no}: gold entry {idx} of {abstract_id!r} must be a "
                "non-empty label array"
            )
        try:
            sets.append(move_set(*entry))
        except ValueError as exc:
            raise CorpusError(f"line {line_no}: field 'gold': {exc}") from None
    return tuple(sets)


def parse_record(raw: dict, line_no: int = 0) -> Abstract:
    """Validate one corpus record into an Abstract."""
    for name in ("id", "journal", "date", "text"):
        if name not in raw:
            raise CorpusError(f"line {line_no}: missing field {name!r}")
        if not isinstance(raw[name], str):
            raise CorpusError(f"line {line_no}: field {name!r} must be a string")
    if not raw["text"].strip():
        raise CorpusError(f"line {line_no}: field 'text' is empty")
    try:
        date = datetime.date.fromisoformat(raw["date"])
    except ValueError:
        raise CorpusError(
            f"line {line_no}: field 'date' is not an ISO date: {raw['date']!r}"
        ) from None
    gold = None
    if raw.get("gold") is not None:
        sentence_count = len(segment(raw["text"]))
        gold = _parse_gold(raw["gold"], sentence_count, line_no, raw["id"])
    return Abstract(id=raw["id"], journal=raw["journal"], date=date, text=raw["text"], gold=gold)


def load_corpus(path: str | Path, format: str = "jsonl") -> list[Abstract]:
    """Load and validate a corpus file, preserving record order."""
    if format != "jsonl":
        raise CorpusError(f"unknown corpus format: {format!r}")
    path = Path(path)
    abstracts: list[Abstract] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            if not isinstance(raw, dict):
                raise CorpusError(f"line {line_no}: record must be an object")
            abstract = parse_record(raw, line_no)
            if abstract.id in seen:
                raise CorpusError(f"line {line_no}: duplicate abstract id {abstract.id!r}")
            seen.add(abstract.id)
            abstracts.append(abstract)
    if not abstracts:
        raise CorpusError(f"empty corpus: {path}")
    return abstracts


def dump_corpus(abstracts: Iterable[Abstract], path: str | Path) -> None:
    """Write abstracts back out in the corpus file format."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for abstract in abstracts:
            record: dict = {
                "id": abstract.id,
                "journal": abstract.journal,
                "date": abstract.date.isoformat(),
                "text": abstract.text,
            }
            if abstract.gold is not None:
                record["gold"] = [
                    [label.value for label in sorted(labels, key=lambda l: l.value)]
                    for labels in abstract.gold
                ]
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def split_corpus(
    corpus: Sequence[Abstract], spec: SplitSpec
) -> dict[str, list[Abstract]]:
    """Assign abstracts to named parts chronologically within each journal.

    Within a journal, abstracts are ordered by (date, journal, id) and dealt
    to parts in spec order. Raises when some journal cannot satisfy the
    per-journal demand, naming that journal.
    """
    by_journal: dict[str, list[Abstract]] = {}
    for abstract in corpus:
        by_journal.setdefault(abstract.journal, []).append(abstract)

    demand = spec.per_journal_total
    for journal in sorted(by_journal):
        available = len(by_journal[journal])
        if available < demand:
            raise SplitError(
                f"journal {journal!r} has {available} abstracts but the split "
                f"needs {demand} per journal"
            )

    for entries in by_journal.values():
        entries.sort(key=lambda a: (a.date, a.journal, a.id))

    parts: dict[str, list[Abstract]] = {name: [] for name, _ in spec.parts}
    for journal in sorted(by_journal):
        cursor = 0
        for name, count in spec.parts:
            parts[name].extend(by_journal[journal][cursor : cursor + count])
            cursor += count
    for entries in parts.values():
        entries.sort(key=lambda a: (a.date, a.journal, a.id))
    return parts
