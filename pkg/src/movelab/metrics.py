"""Annotation quality metrics: confusion counts, P/R/F1, accuracy,
error taxonomy, evaluator disagreement and adjudication, run stability.

An instance is a (sentence, label) pair. Undefined metrics (zero
denominators) are surfaced as None, never silently reported as 0.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EvaluationError
from .moves import CANONICAL_ORDER, MoveLabel, leading, move_set

LabelSets = Sequence[frozenset[MoveLabel]]

VERDICT_CORRECT = "correct"
VERDICT_INCORRECT = "incorrect"


@dataclass(frozen=True)
class ConfusionCounts:
    label: MoveLabel
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        if self.label != other.label:
            raise EvaluationError("cannot add confusion counts for different labels")
        return ConfusionCounts(
            label=self.label,
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class MetricTriple:
    """Precision, recall, F1; None where the value is undefined."""

    precision: float | None
    recall: float | None
    f1: float | None


def _check_lengths(pred: LabelSets, ref: LabelSets) -> None:
    if len(pred) != len(ref):
        raise EvaluationError(
            f"prediction covers {len(pred)} sentences but reference covers {len(ref)}"
        )


def confusion(pred: LabelSets, ref: LabelSets, label: MoveLabel) -> ConfusionCounts:
    """Per-label confusion counts over aligned per-sentence label sets."""
    _check_lengths(pred, ref)
    tp = fp = fn = 0
    for p, r in zip(pred, ref):
        if label in p and label in r:
            tp += 1
        elif label in p:
            fp += 1
        elif label in r:
            fn += 1
    return ConfusionCounts(label=label, tp=tp, fp=fp, fn=fn)


def confusion_all(pred: LabelSets, ref: LabelSets) -> dict[MoveLabel, ConfusionCounts]:
    return {label: confusion(pred, ref, label) for label in CANONICAL_ORDER}


def metric_triple(counts: ConfusionCounts) -> MetricTriple:
    """P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R).

    Precision is undefined when nothing was predicted, recall when the
    label has no reference instances, and F1 when either is undefined or
    both are zero.
    """
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricTriple(precision=precision, recall=recall, f1=f1)


def sentence_accuracy(pred: LabelSets, ref: LabelSets, lenient: bool = False) -> float:
    """Fraction of sentences whose predicted label set is correct.

    Strict mode requires exact set equality. Lenient mode also credits a
    non-empty proper subset of the reference (partial credit for dropped
    combined moves, none for invented labels).
    """
    _check_lengths(pred, ref)
    if not ref:
        raise EvaluationError("no sentences to score")
    correct = 0
    for p, r in zip(pred, ref):
        if p == r or (lenient and p and p <= r):
            correct += 1
    return correct / len(ref)


@dataclass
class ErrorTally:
    """Error-taxonomy tallies: per-label unrecognized / false recognition /
    hallucination, plus the positional and combined-move counters."""

    unrecognized: dict[MoveLabel, int] = field(default_factory=dict)
    false_recognition: dict[MoveLabel, int] = field(default_factory=dict)
    hallucination: dict[MoveLabel, int] = field(default_factory=dict)
    first_sentence_background: int = 0
    combined_move_miss: int = 0
    overshadow: int = 0

    @property
    def total(self) -> int:
        return (
            sum(self.unrecognized.values())
            + sum(self.false_recognition.values())
            + sum(self.hallucination.values())
        )

    def is_empty(self) -> bool:
        return self.total == 0 and not (
            self.first_sentence_background or self.combined_move_miss or self.overshadow
        )


def classify_errors(
    pred: Sequence[LabelSets],
    ref: Sequence[LabelSets],
    orphan_label_sets: Iterable[frozenset[MoveLabel]] = (),
) -> ErrorTally:
    """Tally taxonomy errors over per-abstract, per-sentence label sets.

    `orphan_label_sets` carries the labels of hallucinated spans reported
    by the parser (text with no counterpart in the source).
    """
    if len(pred) != len(ref):
        raise EvaluationError(
            f"prediction covers {len(pred)} abstracts but reference covers {len(ref)}"
        )
    tally = ErrorTally()
    for doc_pred, doc_ref in zip(pred, ref):
        _check_lengths(doc_pred, doc_ref)
        for index, (p, r) in enumerate(zip(doc_pred, doc_ref)):
            for label in r - p:
                tally.unrecognized[label] = tally.unrecognized.get(label, 0) + 1
            for label in p - r:
                tally.false_recognition[label] = (
                    tally.false_recognition.get(label, 0) + 1
                )
            if (
                index == 0
                and MoveLabel.BACKGROUND in p - r
                and ({MoveLabel.PURPOSE, MoveLabel.METHOD} & (r - p))
            ):
                tally.first_sentence_background += 1
            if len(r) >= 2 and p < r:
                tally.combined_move_miss += 1
            if len(r) >= 2 and p == {leading(r)}:
                tally.overshadow += 1
    for labels in orphan_label_sets:
        for label in labels:
            tally.hallucination[label] = tally.hallucination.get(label, 0) + 1
    return tally


@dataclass(frozen=True)
class JudgmentRecord:
    """One evaluator's verdict on one model-annotated sentence."""

    evaluator: str
    abstract_id: str
    sentence_index: int
    verdict: str
    corrected: frozenset[MoveLabel] | None = None
    note: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in (VERDICT_CORRECT, VERDICT_INCORRECT):
            raise EvaluationError(f"unknown verdict: {self.verdict!r}")
        if self.verdict == VERDICT_INCORRECT and not self.corrected:
            raise EvaluationError(
                f"incorrect verdict on ({self.abstract_id}, {self.sentence_index}) "
                "must carry a corrected label set"
            )

    @property
    def key(self) -> tuple[str, int]:
        return (self.abstract_id, self.sentence_index)

    def agrees_with(self, other: "JudgmentRecord") -> bool:
        if self.verdict != other.verdict:
            return False
        if self.verdict == VERDICT_INCORRECT:
            return self.corrected == other.corrected
        return True


def judgment_from_record(raw: Mapping, line_no: int = 0) -> JudgmentRecord:
    try:
        corrected = raw.get("corrected_labels")
        return JudgmentRecord(
            evaluator=raw["evaluator"],
            abstract_id=raw["abstract_id"],
            sentence_index=int(raw["sentence_index"]),
            verdict=raw["verdict"],
            corrected=move_set(*corrected) if corrected else None,
            note=raw.get("note", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise EvaluationError(f"line {line_no}: bad judgment record: {exc}") from None


def judgment_to_record(judgment: JudgmentRecord) -> dict:
    record: dict = {
        "evaluator": judgment.evaluator,
        "abstract_id": judgment.abstract_id,
        "sentence_index": judgment.sentence_index,
        "verdict": judgment.verdict,
    }
    if judgment.corrected is not None:
        record["corrected_labels"] = sorted(label.value for label in judgment.corrected)
    if judgment.note:
        record["note"] = judgment.note
    return record


def load_judgments(path: str | Path) -> list[JudgmentRecord]:
    """Read a line-delimited judgment file."""
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvaluationError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            records.append(judgment_from_record(raw, line_no))
    return records


def _by_key(records: Iterable[JudgmentRecord], who: str) -> dict[tuple[str, int], JudgmentRecord]:
    indexed: dict[tuple[str, int], JudgmentRecord] = {}
    for record in records:
        if record.key in indexed:
            raise EvaluationError(f"{who} judged {record.key} twice")
        indexed[record.key] = record
    return indexed


def disagreement(
    a: Iterable[JudgmentRecord], b: Iterable[JudgmentRecord]
) -> tuple[float, list[tuple[str, int]]]:
    """Disagreement rate between two evaluators plus the disputed items.

    Both evaluators must cover exactly the same (abstract, sentence) items.
    Two incorrect verdicts with different corrections count as a dispute.
    """
    a_map, b_map = _by_key(a, "evaluator A"), _by_key(b, "evaluator B")
    missing_b = sorted(set(a_map) - set(b_map))
    missing_a = sorted(set(b_map) - set(a_map))
    if missing_a or missing_b:
        raise EvaluationError(
            f"judgment coverage mismatch: only A has {missing_b[:5]}, "
            f"only B has {missing_a[:5]}"
        )
    if not a_map:
        raise EvaluationError("no judgments to compare")
    disputed = sorted(
        key for key, record in a_map.items() if not record.agrees_with(b_map[key])
    )
    return len(disputed) / len(a_map), disputed


def resolve(
    a: Iterable[JudgmentRecord],
    b: Iterable[JudgmentRecord],
    adjudications: Iterable[JudgmentRecord],
) -> dict[tuple[str, int], JudgmentRecord]:
    """Combine agreed verdicts with adjudicator verdicts on disputed items.

    The adjudicator must cover exactly the disputed items: a missing or
    extra item is an error naming it.
    """
    a_map = _by_key(a, "evaluator A")
    _, disputed = disagreement(a, b)
    disputed_set = set(disputed)
    adj_map = _by_key(adjudications, "adjudicator")
    missing = sorted(disputed_set - set(adj_map))
    if missing:
        raise EvaluationError(f"adjudicator is missing disputed item {missing[0]}")
    extra = sorted(set(adj_map) - disputed_set)
    if extra:
        raise EvaluationError(f"adjudicator covers undisputed item {extra[0]}")
    final: dict[tuple[str, int], JudgmentRecord] = {}
    for key, record in a_map.items():
        final[key] = adj_map[key] if key in disputed_set else record
    return final


@dataclass(frozen=True)
class StabilityResult:
    accuracy_a: float
    accuracy_b: float
    delta: float
    per_text: dict[str, float]
    both_above_threshold: bool
    threshold: float


def stability(
    run_a: Mapping[str, tuple[int, int]],
    run_b: Mapping[str, tuple[int, int]],
    threshold: float = 0.90,
) -> StabilityResult:
    """Compare two runs' per-text (correct, total) sentence counts.

    Accuracies are micro-averaged over sentences; `delta` is their
    absolute difference. Both runs must cover the same text set.
    """
    if set(run_a) != set(run_b):
        only_a = sorted(set(run_a) - set(run_b))
        only_b = sorted(set(run_b) - set(run_a))
        raise EvaluationError(
            f"stability text sets differ: only A has {only_a[:5]}, only B has {only_b[:5]}"
        )
    if not run_a:
        raise EvaluationError("no texts to compare")
    correct_a = sum(c for c, _ in run_a.values())
    total_a = sum(t for _, t in run_a.values())
    correct_b = sum(c for c, _ in run_b.values())
    total_b = sum(t for _, t in run_b.values())
    if not total_a or not total_b:
        raise EvaluationError("runs contain no sentences")
    accuracy_a = correct_a / total_a
    accuracy_b = correct_b / total_b
    per_text = {}
    for text_id in sorted(run_a):
        ca, ta = run_a[text_id]
        cb, tb = run_b[text_id]
        per_text[text_id] = (ca / ta if ta else 0.0) - (cb / tb if tb else 0.0)
    return StabilityResult(
        accuracy_a=accuracy_a,
        accuracy_b=accuracy_b,
        delta=abs(accuracy_a - accuracy_b),
        per_text=per_text,
        both_above_threshold=accuracy_a > threshold and accuracy_b > threshold,
        threshold=threshold,
    )


def reference_from_judgments(
    predictions: Mapping[str, LabelSets],
    final_judgments: Mapping[tuple[str, int], JudgmentRecord],
) -> dict[str, list[frozenset[MoveLabel]]]:
    """Derive a reference from final human verdicts over model output.

    A sentence judged correct adopts the model's labels as reference; one
    judged incorrect adopts the adjudicated correction.
    """
    reference: dict[str, list[frozenset[MoveLabel]]] = {}
    for abstract_id, sets in predictions.items():
        derived = []
        for index, predicted in enumerate(sets):
            judgment = final_judgments.get((abstract_id, index))
            if judgment is None:
                raise EvaluationError(
                    f"no final judgment for ({abstract_id}, {index})"
                )
            if judgment.verdict == VERDICT_CORRECT:
                derived.append(frozenset(predicted))
            else:
                derived.append(judgment.corrected or frozenset())
        reference[abstract_id] = derived
    return reference
