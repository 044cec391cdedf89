"""movelab: LLM-assisted rhetorical move annotation toolkit.

Builds k-shot annotation prompts, parses and aligns tagged model output,
scores annotations with multi-label precision/recall/F1 and an error
taxonomy, and hosts the two-evaluator-plus-adjudicator verification
workflow.
"""

from .corpus import (
    Abstract,
    FIVE_PART_SPLIT,
    Sentence,
    SplitSpec,
    load_corpus,
    segment,
    split_corpus,
)
from .errors import MoveLabError
from .gateway import BackendConfig, Session, annotate_heuristic, open_session
from .metrics import (
    ConfusionCounts,
    ErrorTally,
    JudgmentRecord,
    MetricTriple,
    classify_errors,
    confusion,
    disagreement,
    metric_triple,
    resolve,
    sentence_accuracy,
    stability,
)
from .moves import CANONICAL_ORDER, MoveLabel, canonical, move_set
from .parser import (
    ParseDiagnostics,
    SentenceAnnotation,
    TaggedSpan,
    align,
    annotate_response,
    parse_tagged,
    strip_wrapper,
)
from .prompts import (
    InstructionBlock,
    Prompt,
    PromptSpec,
    ShotExample,
    audit_bank,
    build_prompt,
    chunk,
    default_bank,
    load_bank,
    render_example,
)
from .runner import Report, RunRecord, RunSpec, ablate, evaluate, run
from .store import RunStore

__version__ = "0.1.0"

__all__ = [
    "Abstract",
    "BackendConfig",
    "CANONICAL_ORDER",
    "ConfusionCounts",
    "ErrorTally",
    "InstructionBlock",
    "JudgmentRecord",
    "MetricTriple",
    "MoveLabError",
    "MoveLabel",
    "FIVE_PART_SPLIT",
    "ParseDiagnostics",
    "Prompt",
    "PromptSpec",
    "Report",
    "RunRecord",
    "RunSpec",
    "RunStore",
    "Sentence",
    "SentenceAnnotation",
    "Session",
    "ShotExample",
    "SplitSpec",
    "TaggedSpan",
    "ablate",
    "align",
    "annotate_heuristic",
    "annotate_response",
    "audit_bank",
    "build_prompt",
    "canonical",
    "chunk",
    "classify_errors",
    "confusion",
    "default_bank",
    "disagreement",
    "evaluate",
    "load_bank",
    "load_corpus",
    "metric_triple",
    "move_set",
    "open_session",
    "parse_tagged",
    "render_example",
    "resolve",
    "run",
    "segment",
    "sentence_accuracy",
    "split_corpus",
    "stability",
    "strip_wrapper",
]
