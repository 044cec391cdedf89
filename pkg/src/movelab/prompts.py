"""Assemble k-shot annotation prompts and chunk them into chat turns.

A prompt is an ordered list of numbered instruction blocks: one block of
label definitions, k worked examples from the example bank, a task
directive, and optionally a scripted trial-with-feedback exchange. Blocks
are packed greedily into turns that respect the per-turn character limit.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Abstract, parse_record, segment
from .errors import PromptError
from .moves import CANONICAL_ORDER, MoveLabel, canonical

DEFAULT_TURN_LIMIT = 4000
BLOCK_SEPARATOR = "\n\n"

KIND_DEFINITIONS = "label-definitions"
KIND_SHOT = "shot-example"
KIND_DIRECTIVE = "task-directive"
KIND_TRIAL = "trial-with-feedback"

TRAIT_COMBINED = "combined-moves"
TRAIT_NON_BACKGROUND_OPENING = "non-background-opening"
TRAIT_METHOD_RESULTS_FUSION = "method-results-fusion"
KEY_TRAITS = (TRAIT_COMBINED, TRAIT_NON_BACKGROUND_OPENING, TRAIT_METHOD_RESULTS_FUSION)

LABEL_DEFINITIONS = {
    MoveLabel.BACKGROUND: (
        "this move situates the study by describing the research territory, "
        "what is already known, and the gap or problem that motivates the work"
    ),
    MoveLabel.PURPOSE: (
        "this move states the aim, objective, or research questions of the study"
    ),
    MoveLabel.METHOD: (
        "this move describes the research design, data collection, data analysis "
        "procedures, analysis techniques, and theories used in the study"
    ),
    MoveLabel.RESULTS: (
        "this move reports the findings, outcomes, or observations produced by the study"
    ),
    MoveLabel.CONCLUSION: (
        "this move interprets the findings, states implications or recommendations, "
        "and draws the study to a close"
    ),
}


def render_example(
    abstract: Abstract, gold: Sequence[frozenset[MoveLabel]] | None = None
) -> str:
    """Render an abstract as tagged text, one tag pair per label per sentence.

    Tags nest outer-to-inner in canonical label order, so a PURPOSE+METHOD
    sentence renders as <PURPOSE><METHOD>...</METHOD></PURPOSE>. Sentence
    text is never altered; the result round-trips through the parser.
    """
    if gold is None:
        gold = abstract.gold
    if gold is None:
        raise PromptError(f"abstract {abstract.id!r} has no gold annotation to render")
    sentences = segment(abstract.text)
    if len(gold) != len(sentences):
        raise PromptError(
            f"abstract {abstract.id!r}: {len(sentences)} sentences but "
            f"{len(gold)} gold label sets"
        )
    pieces = []
    for sentence, labels in zip(sentences, gold):
        if not labels:
            raise PromptError(
                f"abstract {abstract.id!r}: sentence {sentence.index} has an "
                "empty label set"
            )
        ordered = canonical(labels)
        opens = "".join(f"<{label.value}>" for label in ordered)
        closes = "".join(f"</{label.value}>" for label in reversed(ordered))
        pieces.append(f"{opens}{sentence.text}{closes}")
    return " ".join(pieces)


def derive_traits(gold: Sequence[frozenset[MoveLabel]]) -> frozenset[str]:
    """Phenomena flags inferable from a gold annotation."""
    traits = set()
    if any(len(labels) >= 2 for labels in gold):
        traits.add(TRAIT_COMBINED)
    if gold and MoveLabel.BACKGROUND not in gold[0]:
        traits.add(TRAIT_NON_BACKGROUND_OPENING)
    if any({MoveLabel.METHOD, MoveLabel.RESULTS} <= labels for labels in gold):
        traits.add(TRAIT_METHOD_RESULTS_FUSION)
    return frozenset(traits)


@dataclass(frozen=True)
class ShotExample:
    """A gold-annotated abstract ready to be used as a prompt shot."""

    abstract: Abstract
    rendered: str
    traits: frozenset[str]

    @classmethod
    def from_abstract(
        cls, abstract: Abstract, declared_traits: Iterable[str] = ()
    ) -> "ShotExample":
        if abstract.gold is None:
            raise PromptError(f"bank abstract {abstract.id!r} has no gold annotation")
        return cls(
            abstract=abstract,
            rendered=render_example(abstract),
            traits=derive_traits(abstract.gold) | frozenset(declared_traits),
        )


@dataclass(frozen=True)
class InstructionBlock:
    ordinal: int
    kind: str
    text: str


@dataclass(frozen=True)
class Turn:
    """One chat turn: consecutive blocks joined by the block separator."""

    text: str
    block_ordinals: tuple[int, ...]


@dataclass(frozen=True)
class PromptSpec:
    """What to build: shot count, bank, turn limit, optional trial block."""

    k: int
    bank: tuple[ShotExample, ...]
    turn_limit: int = DEFAULT_TURN_LIMIT
    include_trial_feedback: bool = False

    def __post_init__(self) -> None:
        if self.k < 0:
            raise PromptError(f"shot count must be non-negative, got {self.k}")
        if self.k > len(self.bank):
            raise PromptError(
                f"shot count {self.k} exceeds bank size {len(self.bank)}"
            )
        if self.turn_limit <= 0:
            raise PromptError(f"turn limit must be positive, got {self.turn_limit}")


@dataclass(frozen=True)
class Prompt:
    blocks: tuple[InstructionBlock, ...]
    turns: tuple[Turn, ...]
    shots: tuple[ShotExample, ...]

    @property
    def text(self) -> str:
        return BLOCK_SEPARATOR.join(block.text for block in self.blocks)


def _definitions_block(ordinal: int) -> InstructionBlock:
    lines = [
        f"Instruction {ordinal}: Please learn the definitions of the five "
        "rhetorical moves used in this annotation task."
    ]
    for label in CANONICAL_ORDER:
        lines.append(f"{label.value}: {LABEL_DEFINITIONS[label]}.")
    lines.append(
        "Labels are assigned at sentence level. A sentence expressing more than "
        "one move must be assigned multiple labels; pay attention to combined moves."
    )
    return InstructionBlock(ordinal=ordinal, kind=KIND_DEFINITIONS, text="\n".join(lines))


def _shot_block(ordinal: int, shot: ShotExample) -> InstructionBlock:
    text = (
        f"Instruction {ordinal}: Please learn the following annotated example.\n"
        f"{shot.rendered}"
    )
    return InstructionBlock(ordinal=ordinal, kind=KIND_SHOT, text=text)


def _directive_block(ordinal: int) -> InstructionBlock:
    text = (
        f"Instruction {ordinal}: Please annotate each sentence in the following "
        "abstract using the five move labels from instruction 1. Wrap every "
        "sentence in one tag pair per move, for example "
        "<BACKGROUND>...</BACKGROUND>, and nest the tags, for example "
        "<PURPOSE><METHOD>...</METHOD></PURPOSE>, when a sentence carries "
        "combined moves. Pay attention to combined moves, and do not rewrite "
        "the sentences."
    )
    return InstructionBlock(ordinal=ordinal, kind=KIND_DIRECTIVE, text=text)


def _trial_block(ordinal: int, trial: ShotExample) -> InstructionBlock:
    text = (
        f"Instruction {ordinal}: As a trial, please annotate the following "
        "abstract, then compare your answer with the correction below.\n"
        f"Abstract: {trial.abstract.text}\n"
        f"Correct annotation: {trial.rendered}\n"
        "If your trial differs from the correction, please follow the "
        "correction when annotating new abstracts."
    )
    return InstructionBlock(ordinal=ordinal, kind=KIND_TRIAL, text=text)


def build_prompt(spec: PromptSpec) -> Prompt:
    """Build the deterministic block sequence for a spec and chunk it.

    Block order: label definitions, the first k bank examples, the task
    directive, then the optional trial exchange. The trial uses the first
    bank example beyond the shots when one exists (a fresh test), else the
    last shot.
    """
    shots = spec.bank[: spec.k]
    blocks = [_definitions_block(1)]
    for i, shot in enumerate(shots, start=2):
        blocks.append(_shot_block(i, shot))
    blocks.append(_directive_block(len(blocks) + 1))
    if spec.include_trial_feedback:
        if not spec.bank:
            raise PromptError("trial-with-feedback requires a non-empty bank")
        trial = spec.bank[spec.k] if spec.k < len(spec.bank) else spec.bank[-1]
        blocks.append(_trial_block(len(blocks) + 1, trial))
    turns = chunk(blocks, spec.turn_limit)
    return Prompt(blocks=tuple(blocks), turns=tuple(turns), shots=tuple(shots))


def chunk(blocks: Sequence[InstructionBlock], limit: int) -> list[Turn]:
    """Pack blocks greedily into turns of at most `limit` characters.

    Order is preserved and no block is split; separators between packed
    blocks count toward the limit. A single block longer than the limit is
    an error naming its ordinal.
    """
    for block in blocks:
        if len(block.text) > limit:
            raise PromptError(
                f"block {block.ordinal} is {len(block.text)} characters, over "
                f"the {limit}-character turn limit"
            )
    turns: list[Turn] = []
    current: list[InstructionBlock] = []
    current_len = 0
    for block in blocks:
        added = len(block.text) if not current else len(BLOCK_SEPARATOR) + len(block.text)
        if current and current_len + added > limit:
            turns.append(_finish_turn(current))
            current, current_len = [], 0
            added = len(block.text)
        current.append(block)
        current_len += added
    if current:
        turns.append(_finish_turn(current))
    return turns


def _finish_turn(blocks: list[InstructionBlock]) -> Turn:
    return Turn(
        text=BLOCK_SEPARATOR.join(b.text for b in blocks),
        block_ordinals=tuple(b.ordinal for b in blocks),
    )


@dataclass(frozen=True)
class BankAudit:
    """Per-trait coverage over a bank, with under-covered key traits flagged."""

    coverage: dict[str, int]
    flags: tuple[str, ...]
    threshold: int


def audit_bank(bank: Sequence[ShotExample], threshold: int = 2) -> BankAudit:
    """Count how many bank examples exhibit each phenomena trait.

    The three key traits are always reported; any of them covered by fewer
    than `threshold` examples is flagged.
    """
    coverage: dict[str, int] = {trait: 0 for trait in KEY_TRAITS}
    for shot in bank:
        for trait in sorted(shot.traits):
            coverage[trait] = coverage.get(trait, 0) + 1
    flags = tuple(trait for trait in KEY_TRAITS if coverage[trait] < threshold)
    return BankAudit(coverage=coverage, flags=flags, threshold=threshold)


def load_bank(path: str | Path) -> tuple[ShotExample, ...]:
    """Load an example bank file (corpus records plus a `traits` array)."""
    path = Path(path)
    shots = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            raw = json.loads(line)
            abstract = parse_record(raw, line_no)
            shots.append(ShotExample.from_abstract(abstract, raw.get("traits", ())))
    if not shots:
        raise PromptError(f"empty example bank: {path}")
    return tuple(shots)


_DEFAULT_BANK: tuple[ShotExample, ...] | None = None


def default_bank() -> tuple[ShotExample, ...]:
    """The packaged eight-example bank."""
    global _DEFAULT_BANK
    if _DEFAULT_BANK is None:
        with resources.as_file(
            resources.files("movelab.data").joinpath("example_bank.jsonl")
        ) as path:
            _DEFAULT_BANK = load_bank(path)
    return _DEFAULT_BANK


def dump_prompt(prompt: Prompt) -> str:
    """Plain-text dump with `--- turn N ---` separators for audit."""
    parts = []
    for i, turn in enumerate(prompt.turns, start=1):
        parts.append(f"--- turn {i} ---")
        parts.append(turn.text)
    return "\n".join(parts) + "\n"
