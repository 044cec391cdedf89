"""Adjudication HTTP service hosting the two-evaluator-plus-adjudicator
verification workflow.

Evaluators verdict each model-annotated sentence; items where they
conflict form the disputed queue, which only adjudicator resolutions can
clear. All mutations are append-only JSONL writes through the run store;
the in-memory state is rebuilt from the store at startup, so a corrupt
store line refuses to serve rather than silently dropping records.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import signal
import threading
import urllib.parse
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .corpus import Abstract, load_corpus, segment
from .errors import EvaluationError, ServiceError, StoreError
from .metrics import (
    JudgmentRecord,
    judgment_from_record,
)
from .runner import evaluate, load_run_record
from .store import RunStore

logger = logging.getLogger(__name__)

FALLBACK_PAGE = """<!doctype html>
<html><head><title>movelab adjudication</title></head>
<body>
<h1>movelab adjudication service</h1>
<p>No UI bundle configured (start with --ui-dir). API endpoints:</p>
<ul>
<li>GET /api/items?filter=disputed|all</li>
<li>GET /api/items/{abstract}/{sentence}</li>
<li>POST /api/judgments</li>
<li>POST /api/resolutions</li>
<li>GET /api/status</li>
<li>GET /api/report</li>
</ul>
</body></html>
"""


@dataclass
class ReviewItem:
    abstract_id: str
    sentence_index: int
    sentence: str
    predicted: list[str]
    context_before: str
    context_after: str
    judgments: list[JudgmentRecord] = field(default_factory=list)
    resolution: JudgmentRecord | None = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.abstract_id, self.sentence_index)

    @property
    def fully_judged(self) -> bool:
        return len({j.evaluator for j in self.judgments}) >= 2

    @property
    def disputed(self) -> bool:
        if not self.fully_judged:
            return False
        first = self.judgments[0]
        return any(not first.agrees_with(other) for other in self.judgments[1:])

    @property
    def finalized(self) -> bool:
        if not self.fully_judged:
            return False
        return not self.disputed or self.resolution is not None

    def final_judgment(self) -> JudgmentRecord | None:
        if not self.finalized:
            return None
        return self.resolution if self.disputed else self.judgments[0]

    def to_record(self) -> dict:
        return {
            "abstract_id": self.abstract_id,
            "sentence_index": self.sentence_index,
            "sentence": self.sentence,
            "predicted": self.predicted,
            "context": {"before": self.context_before, "after": self.context_after},
            "judgments": [
                {
                    "evaluator": j.evaluator,
                    "verdict": j.verdict,
                    "corrected_labels": sorted(l.value for l in j.corrected)
                    if j.corrected
                    else None,
                }
                for j in self.judgments
            ],
            "disputed": self.disputed,
            "resolved": self.resolution is not None,
            "finalized": self.finalized,
        }


class AdjudicationState:
    """Review items plus judgments, with append-only persistence."""

    def __init__(self, store: RunStore, run_id: str, corpus: list[Abstract]):
        self.store = store
        self.run_id = run_id
        self.lock = threading.Lock()
        self.items: dict[tuple[str, int], ReviewItem] = {}
        self._build_items(corpus)
        for judgment in store.load_judgments():
            self._attach(judgment, resolution=False, persist=False)
        for resolution in store.load_judgments(resolution=True):
            self._attach(resolution, resolution=True, persist=False)

    def _build_items(self, corpus: list[Abstract]) -> None:
        by_id = {a.id: a for a in corpus}
        record = load_run_record(self.store, self.run_id)
        for result in record.results:
            if result.round != 1 or result.failed:
                continue
            abstract = by_id.get(result.abstract_id)
            if abstract is None:
                raise ServiceError(
                    f"corpus does not cover abstract {result.abstract_id!r} from "
                    f"run {self.run_id!r}"
                )
            sentences = segment(abstract.text)
            for annotation in result.annotations:
                sentence = sentences[annotation.index]
                self.items[(abstract.id, annotation.index)] = ReviewItem(
                    abstract_id=abstract.id,
                    sentence_index=annotation.index,
                    sentence=sentence.text,
                    predicted=sorted(l.value for l in annotation.predicted),
                    context_before=sentences[annotation.index - 1].text
                    if annotation.index > 0
                    else "",
                    context_after=sentences[annotation.index + 1].text
                    if annotation.index + 1 < len(sentences)
                    else "",
                )
        if not self.items:
            raise ServiceError(f"run {self.run_id!r} produced no review items")

    def _attach(self, judgment: JudgmentRecord, resolution: bool, persist: bool) -> str:
        item = self.items.get(judgment.key)
        if item is None:
            raise ServiceError(f"no review item {judgment.key}")
        if resolution:
            if not item.disputed:
                raise ServiceError(f"item {judgment.key} is not disputed")
            if item.resolution is not None:
                if item.resolution.agrees_with(judgment):
                    return "duplicate"
                raise ServiceError(f"item {judgment.key} already resolved differently")
            item.resolution = judgment
        else:
            existing = next(
                (j for j in item.judgments if j.evaluator == judgment.evaluator), None
            )
            if existing is not None:
                if existing.agrees_with(judgment):
                    return "duplicate"
                raise ServiceError(
                    f"evaluator {judgment.evaluator!r} already judged "
                    f"{judgment.key} differently"
                )
            item.judgments.append(judgment)
        if persist:
            self.store.append_judgment(judgment, resolution=resolution)
        return "recorded"

    def add_judgment(self, judgment: JudgmentRecord, resolution: bool) -> str:
        with self.lock:
            return self._attach(judgment, resolution=resolution, persist=True)

    def list_items(self, filter_name: str) -> list[ReviewItem]:
        ordered = [self.items[key] for key in sorted(self.items)]
        if filter_name == "all":
            return ordered
        if filter_name == "disputed":
            return [i for i in ordered if i.disputed and i.resolution is None]
        raise ServiceError(f"unknown filter {filter_name!r}; use disputed or all")

    def status(self) -> dict:
        ordered = list(self.items.values())
        judged_by: dict[str, int] = {}
        for item in ordered:
            for judgment in item.judgments:
                judged_by[judgment.evaluator] = judged_by.get(judgment.evaluator, 0) + 1
        disputed = [i for i in ordered if i.disputed]
        resolved = [i for i in disputed if i.resolution is not None]
        finalized = [i for i in ordered if i.finalized]
        return {
            "run_id": self.run_id,
            "items": len(ordered),
            "judged_by": dict(sorted(judged_by.items())),
            "fully_judged": sum(1 for i in ordered if i.fully_judged),
            "disputed": len(disputed),
            "resolved": len(resolved),
            "final_verdicts": len(finalized),
            "complete": len(finalized) == len(ordered),
        }

    def final_judgments(self) -> dict[tuple[str, int], JudgmentRecord]:
        final = {}
        for key, item in self.items.items():
            judgment = item.final_judgment()
            if judgment is None:
                raise ServiceError(
                    f"workflow incomplete: item {key} has no final verdict"
                )
            final[key] = judgment
        return final

    def report(self) -> dict:
        final = self.final_judgments()
        record = load_run_record(self.store, self.run_id)
        report = evaluate(record, final)
        return report.to_record()


class _Handler(BaseHTTPRequestHandler):
    state: AdjudicationState
    ui_dir: Path | None = None

    # -- plumbing --------------------------------------------------------

    def log_message(self, format: str, *args) -> None:
        logger.debug("%s - %s", self.address_string(), format % args)

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw.decode("utf-8")) if raw else {}
        except json.JSONDecodeError as exc:
            raise ServiceError(f"invalid JSON body: {exc.msg}") from None
        if not isinstance(payload, dict):
            raise ServiceError("request body must be a JSON object")
        return payload

    # -- routes ------------------------------------------------------------

    def do_GET(self) -> None:
        parsed = urllib.parse.urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        try:
            if parts[:2] == ["api", "items"] and len(parts) == 2:
                query = urllib.parse.parse_qs(parsed.query)
                filter_name = query.get("filter", ["all"])[0]
                items = self.state.list_items(filter_name)
                self._send_json(
                    {
                        "filter": filter_name,
                        "total": len(items),
                        "items": [item.to_record() for item in items],
                    }
                )
            elif parts[:2] == ["api", "items"] and len(parts) == 4:
                key = (parts[2], int(parts[3]))
                item = self.state.items.get(key)
                if item is None:
                    self._send_json({"error": f"no item {key}"}, status=404)
                else:
                    self._send_json(item.to_record())
            elif parts == ["api", "status"]:
                self._send_json(self.state.status())
            elif parts == ["api", "report"]:
                self._send_json(self.state.report())
            elif parts[:1] == ["api"]:
                self._send_json({"error": f"no such endpoint: {parsed.path}"}, status=404)
            else:
                self._serve_static(parts)
        except ServiceError as exc:
            self._send_json({"error": str(exc)}, status=409)
        except (ValueError, IndexError) as exc:
            self._send_json({"error": str(exc)}, status=400)

    def do_POST(self) -> None:
        parsed = urllib.parse.urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        try:
            payload = self._read_json()
            if parts == ["api", "judgments"]:
                judgment = judgment_from_record(payload)
                status = self.state.add_judgment(judgment, resolution=False)
                self._send_json({"status": status})
            elif parts == ["api", "resolutions"]:
                judgment = judgment_from_record(payload)
                status = self.state.add_judgment(judgment, resolution=True)
                self._send_json({"status": status})
            else:
                self._send_json({"error": f"no such endpoint: {parsed.path}"}, status=404)
        except EvaluationError as exc:
            self._send_json({"error": str(exc)}, status=400)
        except ServiceError as exc:
            self._send_json({"error": str(exc)}, status=409)

    def _serve_static(self, parts: list[str]) -> None:
        if self.ui_dir is None:
            body = FALLBACK_PAGE.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/html; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        relative = "/".join(parts) or "index.html"
        target = (self.ui_dir / relative).resolve()
        if not target.is_relative_to(self.ui_dir.resolve()) or not target.is_file():
            self._send_json({"error": f"not found: /{relative}"}, status=404)
            return
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def create_service(
    store_dir: str | Path,
    run_id: str | None = None,
    corpus_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8765,
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Build the HTTP server; call serve_forever() on the result.

    Refuses to start on a corrupt store (naming the offending file and
    line) or a busy port. `corpus_path` defaults to the part file the run
    was annotated from, falling back to the store's ingested corpus.
    """
    store = RunStore(store_dir)
    runs = store.list_runs()
    if not runs:
        raise ServiceError(f"store {store_dir} contains no run records")
    if run_id is None:
        run_id = runs[-1]
    elif run_id not in runs:
        raise ServiceError(f"run {run_id!r} not found; store has {runs}")

    if corpus_path is None:
        part = store.load_spec(run_id).get("part", "")
        part_file = store.part_path(part)
        corpus_path = part_file if part_file.exists() else store.corpus_path
    try:
        corpus = load_corpus(corpus_path)
    except FileNotFoundError:
        raise ServiceError(f"no corpus found at {corpus_path}") from None

    try:
        state = AdjudicationState(store, run_id, corpus)
    except StoreError as exc:
        raise ServiceError(f"refusing to start: {exc}") from exc

    handler = type(
        "BoundHandler",
        (_Handler,),
        {"state": state, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    try:
        httpd = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise ServiceError(f"cannot bind {host}:{port} (port busy?): {exc}") from exc
    return httpd


def serve(
    store_dir: str | Path,
    run_id: str | None = None,
    corpus_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8765,
    ui_dir: str | Path | None = None,
) -> None:
    """Run the adjudication service until SIGINT/SIGTERM."""
    httpd = create_service(
        store_dir, run_id=run_id, corpus_path=corpus_path, host=host, port=port, ui_dir=ui_dir
    )

    def shutdown(signum, frame) -> None:
        threading.Thread(target=httpd.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, shutdown)
    signal.signal(signal.SIGTERM, shutdown)
    address = httpd.server_address
    logger.info("adjudication service listening on %s:%s", address[0], address[1])
    print(f"serving on http://{address[0]}:{address[1]}/ (Ctrl-C to stop)", flush=True)
    try:
        httpd.serve_forever()
    finally:
        httpd.server_close()
