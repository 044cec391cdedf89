"""The five-label rhetorical move vocabulary and label-set helpers.

Labels are a closed set; everything downstream (rendering, parsing,
metrics) goes through this module so no other spelling can leak in.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable


class MoveLabel(enum.Enum):
    """One of the five abstract moves, in canonical rhetorical order."""

    BACKGROUND = "BACKGROUND"
    PURPOSE = "PURPOSE"
    METHOD = "METHOD"
    RESULTS = "RESULTS"
    CONCLUSION = "CONCLUSION"

    def __str__(self) -> str:
        return self.value


CANONICAL_ORDER: tuple[MoveLabel, ...] = tuple(MoveLabel)
_RANK = {label: i for i, label in enumerate(CANONICAL_ORDER)}
LABEL_NAMES: frozenset[str] = frozenset(label.value for label in MoveLabel)

# A MoveSet is a frozenset of MoveLabel; empty sets are legal only in
# intermediate states (an unannotated sentence), never in gold data.
MoveSet = frozenset


def parse_label(name: str) -> MoveLabel:
    """Resolve a serialized label name, case-insensitively."""
    try:
        return MoveLabel(name.strip().upper())
    except ValueError:
        raise ValueError(f"unknown move label: {name!r}") from None


def move_set(*labels: MoveLabel | str) -> frozenset[MoveLabel]:
    """Build a MoveSet from labels or label names."""
    return frozenset(
        label if isinstance(label, MoveLabel) else parse_label(label)
        for label in labels
    )


def canonical(labels: Iterable[MoveLabel]) -> tuple[MoveLabel, ...]:
    """Order labels BACKGROUND < PURPOSE < METHOD < RESULTS < CONCLUSION."""
    return tuple(sorted(labels, key=_RANK.__getitem__))


def leading(labels: Iterable[MoveLabel]) -> MoveLabel:
    """The canonically first label of a non-empty set."""
    ordered = canonical(labels)
    if not ordered:
        raise ValueError("empty move set has no leading label")
    return ordered[0]


def format_moves(labels: Iterable[MoveLabel]) -> str:
    """Serialize a MoveSet as '+'-joined canonical names, e.g. PURPOSE+METHOD."""
    return "+".join(label.value for label in canonical(labels))
