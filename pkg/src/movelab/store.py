"""Append-only, line-delimited run store.

Layout under the store directory:

    corpus.jsonl            ingested corpus (normalized records)
    parts/<name>.jsonl      sub-corpus parts from `split`
    runs/<run-id>/spec.json       spec snapshot + backend metadata + timestamps
    runs/<run-id>/transcripts.jsonl   one record per (round, abstract)
    runs/<run-id>/annotations.jsonl   one record per (round, abstract)
    judgments.jsonl         evaluator judgments (appended, never rewritten)
    resolutions.jsonl       adjudicator verdicts (appended, never rewritten)

Everything is diff-able JSON lines; re-running a spec never rewrites an
existing run directory.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import StoreError
from .metrics import JudgmentRecord, judgment_from_record, judgment_to_record
from .moves import move_set
from .parser import ParseDiagnostics, SentenceAnnotation, TaggedSpan


def annotation_to_record(annotation: SentenceAnnotation) -> dict:
    return {
        "index": annotation.index,
        "predicted": sorted(label.value for label in annotation.predicted),
        "alignment_score": round(annotation.alignment_score, 6),
        "hallucination": annotation.hallucination,
    }


def annotation_from_record(raw: dict) -> SentenceAnnotation:
    return SentenceAnnotation(
        index=raw["index"],
        predicted=move_set(*raw["predicted"]),
        alignment_score=raw["alignment_score"],
        hallucination=raw.get("hallucination", False),
    )


def diagnostics_to_record(diagnostics: ParseDiagnostics) -> dict:
    return {
        "unknown_tags": list(diagnostics.unknown_tags),
        "unclosed_tags": list(diagnostics.unclosed_tags),
        "stray_close_tags": list(diagnostics.stray_close_tags),
        "orphan_spans": [
            {"labels": sorted(l.value for l in span.labels), "text": span.text}
            for span in diagnostics.orphan_spans
        ],
        "unannotated_sentences": list(diagnostics.unannotated_sentences),
        "wrapper_stripped": diagnostics.wrapper_stripped,
    }


def diagnostics_from_record(raw: dict) -> ParseDiagnostics:
    diagnostics = ParseDiagnostics(
        unknown_tags=list(raw.get("unknown_tags", [])),
        unclosed_tags=list(raw.get("unclosed_tags", [])),
        stray_close_tags=list(raw.get("stray_close_tags", [])),
        unannotated_sentences=list(raw.get("unannotated_sentences", [])),
        wrapper_stripped=raw.get("wrapper_stripped", False),
    )
    for order, span in enumerate(raw.get("orphan_spans", [])):
        diagnostics.orphan_spans.append(
            TaggedSpan(labels=move_set(*span["labels"]), text=span["text"], order=order)
        )
    return diagnostics


class RunStore:
    """Filesystem-backed store with a single-writer discipline per file."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- layout helpers -------------------------------------------------

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    def part_path(self, name: str) -> Path:
        return self.root / "parts" / f"{name}.jsonl"

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    @property
    def judgments_path(self) -> Path:
        return self.root / "judgments.jsonl"

    @property
    def resolutions_path(self) -> Path:
        return self.root / "resolutions.jsonl"

    # -- runs ------------------------------------------------------------

    def create_run(self, run_id: str, spec_record: dict) -> Path:
        """Reserve a run directory; an existing run id is an error."""
        run_dir = self.run_dir(run_id)
        if run_dir.exists():
            raise StoreError(f"run {run_id!r} already exists; run ids are unique")
        run_dir.mkdir(parents=True)
        (run_dir / "spec.json").write_text(
            json.dumps(spec_record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        return run_dir

    def append_result(
        self, run_id: str, transcript_record: dict, annotation_record: dict
    ) -> None:
        run_dir = self.run_dir(run_id)
        with (run_dir / "transcripts.jsonl").open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(transcript_record, ensure_ascii=False) + "\n")
        with (run_dir / "annotations.jsonl").open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(annotation_record, ensure_ascii=False) + "\n")

    def finish_run(self, run_id: str, meta: dict) -> None:
        run_dir = self.run_dir(run_id)
        (run_dir / "meta.json").write_text(
            json.dumps(meta, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def list_runs(self) -> list[str]:
        runs_dir = self.root / "runs"
        if not runs_dir.is_dir():
            return []
        return sorted(p.name for p in runs_dir.iterdir() if p.is_dir())

    def load_spec(self, run_id: str) -> dict:
        path = self.run_dir(run_id) / "spec.json"
        if not path.exists():
            raise StoreError(f"run {run_id!r} not found in store {self.root}")
        return json.loads(path.read_text(encoding="utf-8"))

    def load_annotation_records(self, run_id: str) -> list[dict]:
        path = self.run_dir(run_id) / "annotations.jsonl"
        if not path.exists():
            raise StoreError(f"run {run_id!r} has no annotations")
        return self._read_jsonl(path)

    def load_transcript_records(self, run_id: str) -> list[dict]:
        path = self.run_dir(run_id) / "transcripts.jsonl"
        if not path.exists():
            return []
        return self._read_jsonl(path)

    # -- judgments ---------------------------------------------------------

    def append_judgment(self, judgment: JudgmentRecord, resolution: bool = False) -> None:
        path = self.resolutions_path if resolution else self.judgments_path
        with path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(judgment_to_record(judgment), ensure_ascii=False) + "\n")

    def load_judgments(self, resolution: bool = False) -> list[JudgmentRecord]:
        path = self.resolutions_path if resolution else self.judgments_path
        if not path.exists():
            return []
        records = []
        for line_no, raw in enumerate(self._read_jsonl(path), start=1):
            records.append(judgment_from_record(raw, line_no))
        return records

    # -- shared ------------------------------------------------------------

    def _read_jsonl(self, path: Path) -> list[dict]:
        records = []
        with path.open(encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise StoreError(
                        f"corrupt store file {path.name} at line {line_no}: {exc.msg}"
                    ) from None
        return records
