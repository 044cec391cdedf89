"""Parse tagged model responses and align them to source sentences.

Model output is messy by default: conversational framing around the
annotation, missing close tags, invented tag names. Every malformation
is recovered from and recorded in ParseDiagnostics; nothing short of a
completely tag-free response raises.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass, field

from .corpus import Abstract, segment
from .errors import ParseError
from .moves import LABEL_NAMES, MoveLabel

TAG_RE = re.compile(r"<\s*(/?)\s*([A-Za-z][A-Za-z0-9_-]*)\s*>")
_NORM_RE = re.compile(r"[^0-9a-z]+")

DEFAULT_THRESHOLD = 0.80


@dataclass(frozen=True)
class TaggedSpan:
    """A text span with the labels accumulated from its enclosing tags."""

    labels: frozenset[MoveLabel]
    text: str
    order: int


@dataclass(frozen=True)
class SentenceAnnotation:
    """Predicted labels for one source sentence after alignment."""

    index: int
    predicted: frozenset[MoveLabel]
    alignment_score: float
    hallucination: bool = False


@dataclass
class ParseDiagnostics:
    """Everything that went wrong (or was tolerated) while parsing.

    All problem fields stay empty on canonical well-formed input. The
    wrapper fields are informational: conversational framing around the
    tagged body is expected model behavior, not a defect.
    """

    unknown_tags: list[str] = field(default_factory=list)
    unclosed_tags: list[str] = field(default_factory=list)
    stray_close_tags: list[str] = field(default_factory=list)
    orphan_spans: list[TaggedSpan] = field(default_factory=list)
    unannotated_sentences: list[int] = field(default_factory=list)
    wrapper_stripped: bool = False
    wrapper_prefix: str = ""
    wrapper_suffix: str = ""

    @property
    def has_problems(self) -> bool:
        return bool(
            self.unknown_tags
            or self.unclosed_tags
            or self.stray_close_tags
            or self.orphan_spans
        )


def strip_wrapper(
    response: str, diagnostics: ParseDiagnostics | None = None
) -> tuple[str, ParseDiagnostics]:
    """Cut the response down to the region between its first and last tag.

    The body runs from the first open tag to the last close tag (to the end
    of the response when no close tag exists); whatever sits outside is
    recorded as wrapper text. Raises ParseError when the response contains
    no tags at all.
    """
    diagnostics = diagnostics or ParseDiagnostics()
    matches = list(TAG_RE.finditer(response))
    if not matches:
        raise ParseError("response contains no tags; nothing to parse")
    first = next((m for m in matches if not m.group(1)), matches[0])
    closers = [m for m in matches if m.group(1)]
    start = first.start()
    end = closers[-1].end() if closers else len(response)
    prefix, suffix = response[:start], response[end:]
    if prefix.strip() or suffix.strip():
        diagnostics.wrapper_stripped = True
        diagnostics.wrapper_prefix = prefix
        diagnostics.wrapper_suffix = suffix
    return response[start:end], diagnostics


def _pair_tags(tokens: list[tuple[str, str]]) -> tuple[set[int], set[int]]:
    """Match open/close tokens per label name.

    Returns (opens_without_close, closes_without_open) as index sets
    into `tokens`.
    """
    unmatched_opens: set[int] = set()
    unmatched_closes: set[int] = set()
    stacks: dict[str, list[int]] = {}
    for idx, (kind, name) in enumerate(tokens):
        if kind == "open":
            stacks.setdefault(name, []).append(idx)
        else:
            stack = stacks.get(name)
            if stack:
                stack.pop()
            else:
                unmatched_closes.add(idx)
    for stack in stacks.values():
        unmatched_opens.update(stack)
    return unmatched_opens, unmatched_closes


def parse_tagged(
    body: str, diagnostics: ParseDiagnostics | None = None
) -> tuple[list[TaggedSpan], ParseDiagnostics]:
    """Extract labelled spans from a tagged body.

    Recovery rules:
      - nesting accumulates labels (inner spans inherit outer labels);
      - adjacent runs with identical label sets merge into one span;
      - unknown tag names are recorded and otherwise ignored;
      - an open tag whose close never arrives is auto-closed at the next
        open tag once real text has intervened, or at end of body;
      - a close tag with no matching open is recorded and skipped;
      - text outside every tag is dropped (it carries no labels).
    """
    diagnostics = diagnostics or ParseDiagnostics()

    tokens: list[tuple[str, str]] = []
    runs: list[tuple[str, int]] = []  # (text, index of the token that follows it)
    cursor = 0
    for match in TAG_RE.finditer(body):
        if match.start() > cursor:
            runs.append((body[cursor : match.start()], len(tokens)))
        tokens.append(("close" if match.group(1) else "open", match.group(2).upper()))
        cursor = match.end()
    if cursor < len(body):
        runs.append((body[cursor:], len(tokens)))

    unmatched_opens, unmatched_closes = _pair_tags(tokens)

    spans: list[TaggedSpan] = []
    pending_ws = ""  # whitespace buffered between runs with identical labels
    barrier = False  # a known open/close tag separates sibling spans

    def emit(text: str, labels: frozenset[MoveLabel]) -> None:
        nonlocal pending_ws, barrier
        if not text.strip():
            pending_ws += text
            return
        if not labels:
            pending_ws = ""
            return
        if spans and spans[-1].labels == labels and not barrier:
            spans[-1] = TaggedSpan(
                labels=labels, text=spans[-1].text + pending_ws + text, order=spans[-1].order
            )
        else:
            spans.append(TaggedSpan(labels=labels, text=text, order=len(spans)))
        pending_ws = ""
        barrier = False

    # stack entries: [label, auto_close (no matching close exists), saw_text]
    stack: list[list] = []
    run_iter = iter(runs)
    next_run = next(run_iter, None)

    def flush_runs(up_to: int) -> None:
        nonlocal next_run
        while next_run is not None and next_run[1] <= up_to:
            text = next_run[0]
            emit(text, frozenset(entry[0] for entry in stack))
            if text.strip():
                for entry in stack:
                    entry[2] = True
            next_run = next(run_iter, None)

    for idx, (kind, name) in enumerate(tokens):
        flush_runs(idx)
        if name not in LABEL_NAMES:
            if name not in diagnostics.unknown_tags:
                diagnostics.unknown_tags.append(name)
            continue
        barrier = True
        label = MoveLabel(name)
        if kind == "open":
            while stack and stack[-1][1] and stack[-1][2]:
                stack.pop()  # auto-close: text intervened, close never arrives
            auto = idx in unmatched_opens
            if auto:
                diagnostics.unclosed_tags.append(name)
            stack.append([label, auto, False])
        else:
            if idx in unmatched_closes:
                diagnostics.stray_close_tags.append(name)
                continue
            while stack and stack[-1][0] != label:
                popped = stack.pop()
                if not popped[1]:  # had a close coming, but was mis-nested
                    diagnostics.unclosed_tags.append(popped[0].value)
            if stack:
                stack.pop()

    flush_runs(len(tokens))
    return spans, diagnostics


def normalized_tokens(text: str) -> frozenset[str]:
    """Case-folded, punctuation-insensitive token set."""
    return frozenset(t for t in _NORM_RE.split(text.lower()) if t)


def similarity(a: str, b: str) -> float:
    """Jaccard overlap of normalized token sets, in [0, 1]."""
    ta, tb = normalized_tokens(a), normalized_tokens(b)
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def align(
    spans: Sequence[TaggedSpan],
    abstract: Abstract,
    threshold: float = DEFAULT_THRESHOLD,
    diagnostics: ParseDiagnostics | None = None,
) -> tuple[list[SentenceAnnotation], ParseDiagnostics]:
    """Match spans to source sentences and build per-sentence annotations.

    Every span is assigned to the sentence it resembles most (ties go to
    the earlier sentence); a sentence's prediction is the label union of
    the spans assigned to it at or above the threshold. Spans below the
    threshold against every sentence are orphans (hallucinated text);
    sentences no span reaches stay unannotated with an empty prediction.
    The output always has exactly one entry per source sentence.
    """
    diagnostics = diagnostics or ParseDiagnostics()
    sentences = segment(abstract.text)

    assigned: dict[int, list[TaggedSpan]] = {s.index: [] for s in sentences}
    best_score: dict[int, float] = {s.index: 0.0 for s in sentences}

    for span in spans:
        scores = [(similarity(span.text, s.text), -s.index) for s in sentences]
        sim, neg_index = max(scores)
        if sim < threshold:
            diagnostics.orphan_spans.append(span)
            continue
        target = -neg_index
        assigned[target].append(span)
        best_score[target] = max(best_score[target], sim)

    annotations: list[SentenceAnnotation] = []
    for sentence in sentences:
        covering = assigned[sentence.index]
        predicted: frozenset[MoveLabel] = (
            frozenset().union(*(span.labels for span in covering))
            if covering
            else frozenset()
        )
        if not covering:
            diagnostics.unannotated_sentences.append(sentence.index)
        annotations.append(
            SentenceAnnotation(
                index=sentence.index,
                predicted=predicted,
                alignment_score=best_score[sentence.index],
                hallucination=False,
            )
        )
    return annotations, diagnostics


def annotate_response(
    response: str, abstract: Abstract, threshold: float = DEFAULT_THRESHOLD
) -> tuple[list[SentenceAnnotation], ParseDiagnostics]:
    """Full pipeline: strip the wrapper, parse tags, align to sentences."""
    body, diagnostics = strip_wrapper(response)
    spans, diagnostics = parse_tagged(body, diagnostics)
    return align(spans, abstract, threshold=threshold, diagnostics=diagnostics)
