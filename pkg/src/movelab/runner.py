"""Orchestrate annotation runs, k-shot ablations, and evaluation reports.

A run sends the built prompt turn by turn to a fresh session per abstract
and round, parses and aligns the final response, and persists everything
needed to re-evaluate offline. Evaluation recomputes metrics purely from
stored annotations against either gold labels or final human judgments.
"""

from __future__ import annotations

import datetime
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .corpus import Abstract
from .errors import EvaluationError, MoveLabError, PromptError
from .gateway import (
    Backend,
    BackendConfig,
    HeuristicBackend,
    KIND_HEURISTIC,
    KIND_MOCK,
    MockEchoBackend,
    RemoteBackend,
    open_session,
)
from .metrics import (
    ConfusionCounts,
    ErrorTally,
    JudgmentRecord,
    MetricTriple,
    classify_errors,
    confusion_all,
    metric_triple,
    reference_from_judgments,
    sentence_accuracy,
    stability,
    StabilityResult,
)
from .moves import CANONICAL_ORDER, MoveLabel
from .parser import ParseDiagnostics, SentenceAnnotation, annotate_response
from .prompts import Prompt, PromptSpec, ShotExample, build_prompt, default_bank, load_bank
from .store import (
    RunStore,
    annotation_from_record,
    annotation_to_record,
    diagnostics_from_record,
    diagnostics_to_record,
)

BackendFactory = Callable[["RunSpec", Sequence[Abstract]], Backend]


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce a run."""

    run_id: str
    part: str
    k: int
    bank_id: str = "default"
    backend: BackendConfig = field(default_factory=lambda: BackendConfig(kind=KIND_MOCK))
    rounds: int = 1
    parallelism: int = 1
    seed: int = 0
    threshold: float = 0.80
    turn_limit: int = 4000
    trial_feedback: bool = False

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise EvaluationError(f"rounds must be >= 1, got {self.rounds}")
        if self.parallelism < 1:
            raise EvaluationError(f"parallelism must be >= 1, got {self.parallelism}")

    def to_record(self) -> dict:
        return {
            "run_id": self.run_id,
            "part": self.part,
            "k": self.k,
            "bank_id": self.bank_id,
            "backend": self.backend.metadata(),
            "rounds": self.rounds,
            "parallelism": self.parallelism,
            "seed": self.seed,
            "threshold": self.threshold,
            "turn_limit": self.turn_limit,
            "trial_feedback": self.trial_feedback,
        }


@dataclass
class AbstractResult:
    """Outcome for one (round, abstract) task."""

    round: int
    abstract_id: str
    annotations: list[SentenceAnnotation] = field(default_factory=list)
    diagnostics: ParseDiagnostics = field(default_factory=ParseDiagnostics)
    transcript: list[tuple[str, str]] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class RunRecord:
    """Self-contained record of a run; evaluation needs nothing else."""

    spec: RunSpec
    results: list[AbstractResult]
    started: str = ""
    finished: str = ""

    def round_results(self, round_no: int) -> list[AbstractResult]:
        return [r for r in self.results if r.round == round_no]

    def failures(self) -> list[AbstractResult]:
        return [r for r in self.results if r.failed]


def resolve_bank(bank_id: str) -> tuple[ShotExample, ...]:
    """Map a bank id to shot examples: "default" or a file path."""
    if bank_id == "default":
        return default_bank()
    return load_bank(bank_id)


def _make_backend(spec: RunSpec, corpus: Sequence[Abstract]) -> Backend:
    if spec.backend.kind == KIND_MOCK:
        return MockEchoBackend(corpus)
    if spec.backend.kind == KIND_HEURISTIC:
        return HeuristicBackend()
    return RemoteBackend(spec.backend)


def _annotate_one(
    spec: RunSpec,
    prompt: Prompt,
    abstract: Abstract,
    round_no: int,
    backend: Backend,
) -> AbstractResult:
    result = AbstractResult(round=round_no, abstract_id=abstract.id)
    session_id = f"{spec.run_id}-r{round_no}-{abstract.id}"
    try:
        session = open_session(spec.backend, session_id, backend=backend)
        for turn in prompt.turns:
            session.send(turn.text)
        response = session.send(abstract.text)
        session.close()
        result.transcript = list(session.transcript)
        annotations, diagnostics = annotate_response(
            response, abstract, threshold=spec.threshold
        )
        result.annotations = annotations
        result.diagnostics = diagnostics
    except MoveLabError as exc:
        result.error = str(exc)
    return result


def run(
    spec: RunSpec,
    corpus_part: Sequence[Abstract],
    store: RunStore | None = None,
    backend_factory: BackendFactory | None = None,
) -> RunRecord:
    """Annotate every abstract in the part for every round.

    Per-abstract failures are recorded and do not stop the run. With a
    store, results are persisted in deterministic (round, input) order by
    a single writer regardless of the parallelism bound.
    """
    if not corpus_part:
        raise EvaluationError(f"corpus part {spec.part!r} is empty")
    bank = resolve_bank(spec.bank_id)
    prompt = build_prompt(
        PromptSpec(
            k=spec.k,
            bank=bank,
            turn_limit=spec.turn_limit,
            include_trial_feedback=spec.trial_feedback,
        )
    )
    factory = backend_factory or _make_backend
    backend = factory(spec, corpus_part)

    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if store is not None:
        store.create_run(spec.run_id, {**spec.to_record(), "started": started})

    results: list[AbstractResult] = []
    for round_no in range(1, spec.rounds + 1):
        tasks = list(corpus_part)
        if spec.parallelism > 1:
            with ThreadPoolExecutor(max_workers=spec.parallelism) as pool:
                round_results = list(
                    pool.map(
                        lambda a: _annotate_one(spec, prompt, a, round_no, backend),
                        tasks,
                    )
                )
        else:
            round_results = [
                _annotate_one(spec, prompt, a, round_no, backend) for a in tasks
            ]
        for result in round_results:
            results.append(result)
            if store is not None:
                store.append_result(
                    spec.run_id,
                    {
                        "round": result.round,
                        "abstract_id": result.abstract_id,
                        "transcript": [list(entry) for entry in result.transcript],
                    },
                    {
                        "round": result.round,
                        "abstract_id": result.abstract_id,
                        "annotations": [
                            annotation_to_record(a) for a in result.annotations
                        ],
                        "diagnostics": diagnostics_to_record(result.diagnostics),
                        "error": result.error,
                    },
                )

    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if store is not None:
        store.finish_run(
            spec.run_id,
            {
                "finished": finished,
                "abstracts": len(corpus_part),
                "rounds": spec.rounds,
                "failures": sum(1 for r in results if r.failed),
            },
        )
    return RunRecord(spec=spec, results=results, started=started, finished=finished)


def load_run_record(store: RunStore, run_id: str) -> RunRecord:
    """Rehydrate a stored run for offline evaluation."""
    raw_spec = store.load_spec(run_id)
    spec = RunSpec(
        run_id=raw_spec["run_id"],
        part=raw_spec["part"],
        k=raw_spec["k"],
        bank_id=raw_spec.get("bank_id", "default"),
        backend=BackendConfig(
            kind=raw_spec["backend"]["kind"],
            endpoint=raw_spec["backend"].get("endpoint"),
            mode=raw_spec["backend"].get("mode", ""),
        ),
        rounds=raw_spec.get("rounds", 1),
        parallelism=raw_spec.get("parallelism", 1),
        seed=raw_spec.get("seed", 0),
        threshold=raw_spec.get("threshold", 0.80),
        turn_limit=raw_spec.get("turn_limit", 4000),
        trial_feedback=raw_spec.get("trial_feedback", False),
    )
    results = []
    for raw in store.load_annotation_records(run_id):
        results.append(
            AbstractResult(
                round=raw["round"],
                abstract_id=raw["abstract_id"],
                annotations=[annotation_from_record(a) for a in raw["annotations"]],
                diagnostics=diagnostics_from_record(raw.get("diagnostics", {})),
                error=raw.get("error"),
            )
        )
    return RunRecord(spec=spec, results=results)


@dataclass
class Report:
    """Evaluation of one run against a reference."""

    run_ids: tuple[str, ...]
    reference_mode: str
    per_label: dict[MoveLabel, tuple[ConfusionCounts, MetricTriple]]
    accuracy_by_round: dict[int, float]
    accuracy_mean: float
    lenient_by_round: dict[int, float]
    errors: ErrorTally
    stability: StabilityResult | None
    annotated: int
    failed: int
    diagnostics_summary: dict[str, int]

    def to_record(self) -> dict:
        def fmt(value: float | None) -> float | None:
            return None if value is None else round(value, 6)

        return {
            "run_ids": list(self.run_ids),
            "reference_mode": self.reference_mode,
            "per_label": {
                label.value: {
                    "tp": counts.tp,
                    "fp": counts.fp,
                    "fn": counts.fn,
                    "precision": fmt(triple.precision),
                    "recall": fmt(triple.recall),
                    "f1": fmt(triple.f1),
                }
                for label, (counts, triple) in self.per_label.items()
            },
            "accuracy_by_round": {
                str(r): fmt(a) for r, a in self.accuracy_by_round.items()
            },
            "accuracy_mean": fmt(self.accuracy_mean),
            "lenient_by_round": {
                str(r): fmt(a) for r, a in self.lenient_by_round.items()
            },
            "errors": {
                "unrecognized": {
                    l.value: n for l, n in sorted(self.errors.unrecognized.items(), key=lambda kv: kv[0].value)
                },
                "false_recognition": {
                    l.value: n
                    for l, n in sorted(self.errors.false_recognition.items(), key=lambda kv: kv[0].value)
                },
                "hallucination": {
                    l.value: n for l, n in sorted(self.errors.hallucination.items(), key=lambda kv: kv[0].value)
                },
                "first_sentence_background": self.errors.first_sentence_background,
                "combined_move_miss": self.errors.combined_move_miss,
                "overshadow": self.errors.overshadow,
            },
            "stability": None
            if self.stability is None
            else {
                "accuracy_a": fmt(self.stability.accuracy_a),
                "accuracy_b": fmt(self.stability.accuracy_b),
                "delta": fmt(self.stability.delta),
                "both_above_threshold": self.stability.both_above_threshold,
                "threshold": self.stability.threshold,
            },
            "annotated": self.annotated,
            "failed": self.failed,
            "diagnostics": self.diagnostics_summary,
        }


Reference = Sequence[Abstract] | Mapping[tuple[str, int], JudgmentRecord]


def _gold_reference(
    record: RunRecord, corpus: Sequence[Abstract]
) -> dict[str, list[frozenset[MoveLabel]]]:
    gold: dict[str, list[frozenset[MoveLabel]]] = {}
    by_id = {a.id: a for a in corpus}
    for result in record.results:
        if result.failed:
            continue
        abstract = by_id.get(result.abstract_id)
        if abstract is None:
            raise EvaluationError(
                f"reference does not cover abstract {result.abstract_id!r}"
            )
        if abstract.gold is None:
            raise EvaluationError(
                f"abstract {result.abstract_id!r} has no gold annotation"
            )
        gold[abstract.id] = list(abstract.gold)
    return gold


def evaluate(record: RunRecord, reference: Reference) -> Report:
    """Score a run against gold labels or final human judgments."""
    successes = [r for r in record.results if not r.failed]
    if not successes:
        raise EvaluationError("run contains no successful annotations")

    predictions: dict[str, list[frozenset[MoveLabel]]] = {}
    for result in successes:
        predictions.setdefault(
            result.abstract_id, [a.predicted for a in result.annotations]
        )

    if isinstance(reference, Mapping):
        mode = "judgments"
        ref_by_id = reference_from_judgments(predictions, reference)
    else:
        mode = "gold"
        ref_by_id = _gold_reference(record, reference)

    rounds = sorted({r.round for r in record.results})
    flat_pred: list[frozenset[MoveLabel]] = []
    flat_ref: list[frozenset[MoveLabel]] = []
    nested_pred: list[list[frozenset[MoveLabel]]] = []
    nested_ref: list[list[frozenset[MoveLabel]]] = []
    orphan_label_sets = []
    accuracy_by_round: dict[int, float] = {}
    lenient_by_round: dict[int, float] = {}
    per_text_by_round: dict[int, dict[str, tuple[int, int]]] = {}

    for round_no in rounds:
        round_pred: list[frozenset[MoveLabel]] = []
        round_ref: list[frozenset[MoveLabel]] = []
        per_text: dict[str, tuple[int, int]] = {}
        for result in record.round_results(round_no):
            if result.failed:
                continue
            ref = ref_by_id.get(result.abstract_id)
            if ref is None:
                raise EvaluationError(
                    f"reference does not cover abstract {result.abstract_id!r}"
                )
            pred = [a.predicted for a in result.annotations]
            if len(pred) != len(ref):
                raise EvaluationError(
                    f"abstract {result.abstract_id!r}: {len(pred)} annotations vs "
                    f"{len(ref)} reference sentences"
                )
            round_pred.extend(pred)
            round_ref.extend(ref)
            nested_pred.append(pred)
            nested_ref.append(list(ref))
            correct = sum(1 for p, r in zip(pred, ref) if p == r)
            per_text[result.abstract_id] = (correct, len(ref))
            for span in result.diagnostics.orphan_spans:
                orphan_label_sets.append(span.labels)
        if round_pred:
            accuracy_by_round[round_no] = sentence_accuracy(round_pred, round_ref)
            lenient_by_round[round_no] = sentence_accuracy(
                round_pred, round_ref, lenient=True
            )
            per_text_by_round[round_no] = per_text
        flat_pred.extend(round_pred)
        flat_ref.extend(round_ref)

    per_label = {
        label: (counts, metric_triple(counts))
        for label, counts in confusion_all(flat_pred, flat_ref).items()
    }

    errors = classify_errors(nested_pred, nested_ref, orphan_label_sets)

    stability_result = None
    if len(per_text_by_round) >= 2:
        first, second = sorted(per_text_by_round)[:2]
        stability_result = stability(
            per_text_by_round[first], per_text_by_round[second]
        )

    diag_summary = {
        "unknown_tags": 0,
        "unclosed_tags": 0,
        "stray_close_tags": 0,
        "orphan_spans": 0,
        "unannotated_sentences": 0,
    }
    for result in successes:
        diag_summary["unknown_tags"] += len(result.diagnostics.unknown_tags)
        diag_summary["unclosed_tags"] += len(result.diagnostics.unclosed_tags)
        diag_summary["stray_close_tags"] += len(result.diagnostics.stray_close_tags)
        diag_summary["orphan_spans"] += len(result.diagnostics.orphan_spans)
        diag_summary["unannotated_sentences"] += len(
            result.diagnostics.unannotated_sentences
        )

    accuracies = list(accuracy_by_round.values())
    return Report(
        run_ids=(record.spec.run_id,),
        reference_mode=mode,
        per_label=per_label,
        accuracy_by_round=accuracy_by_round,
        accuracy_mean=sum(accuracies) / len(accuracies),
        lenient_by_round=lenient_by_round,
        errors=errors,
        stability=stability_result,
        annotated=len(successes),
        failed=len(record.failures()),
        diagnostics_summary=diag_summary,
    )


@dataclass(frozen=True)
class CurveRow:
    k: int
    accuracy_by_round: tuple[float, ...]

    @property
    def mean(self) -> float:
        return sum(self.accuracy_by_round) / len(self.accuracy_by_round)


def ablate(
    ks: Sequence[int],
    corpus_part: Sequence[Abstract],
    spec_template: RunSpec,
    store: RunStore | None = None,
    backend_factory: BackendFactory | None = None,
) -> tuple[list[RunRecord], list[CurveRow]]:
    """One run per shot count, plus the accuracy-vs-k curve table.

    The bank must support the largest requested k; that is checked before
    any run starts. Rows come out in ascending k.
    """
    if not ks:
        raise EvaluationError("no shot counts requested")
    bank = resolve_bank(spec_template.bank_id)
    overflow = [k for k in ks if k > len(bank)]
    if overflow:
        raise PromptError(
            f"shot count {max(overflow)} exceeds bank size {len(bank)}"
        )
    records: list[RunRecord] = []
    rows: list[CurveRow] = []
    for k in sorted(set(ks)):
        spec = replace(spec_template, run_id=f"{spec_template.run_id}-k{k}", k=k)
        record = run(spec, corpus_part, store=store, backend_factory=backend_factory)
        report = evaluate(record, corpus_part)
        records.append(record)
        rows.append(
            CurveRow(
                k=k,
                accuracy_by_round=tuple(
                    report.accuracy_by_round[r] for r in sorted(report.accuracy_by_round)
                ),
            )
        )
    return records, rows


def report_table(report: Report) -> str:
    """Tab-separated per-label metric table (one row per label)."""

    def fmt(value: float | None) -> str:
        return "undefined" if value is None else f"{value:.4f}"

    lines = ["label\ttp\tfp\tfn\tprecision\trecall\tf1"]
    for label in CANONICAL_ORDER:
        counts, triple = report.per_label[label]
        lines.append(
            f"{label.value}\t{counts.tp}\t{counts.fp}\t{counts.fn}\t"
            f"{fmt(triple.precision)}\t{fmt(triple.recall)}\t{fmt(triple.f1)}"
        )
    return "\n".join(lines) + "\n"


def curve_table(rows: Sequence[CurveRow]) -> str:
    """Tab-separated accuracy-vs-k table, ascending k."""
    if not rows:
        return ""
    rounds = len(rows[0].accuracy_by_round)
    header = "k\t" + "\t".join(f"round{r}" for r in range(1, rounds + 1)) + "\tmean"
    lines = [header]
    for row in rows:
        accs = "\t".join(f"{a:.4f}" for a in row.accuracy_by_round)
        lines.append(f"{row.k}\t{accs}\t{row.mean:.4f}")
    return "\n".join(lines) + "\n"
