"""Exception types shared across the toolkit."""


class MoveLabError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(MoveLabError):
    """Corpus file is malformed or violates a data invariant."""


class SplitError(MoveLabError):
    """A sub-corpus split cannot be satisfied."""


class PromptError(MoveLabError):
    """Prompt construction failed (bad spec, oversize block, bank too small)."""


class GatewayError(MoveLabError):
    """Backend communication failure (connection, auth, timeout, misuse)."""


class ParseError(MoveLabError):
    """Response contains nothing parseable (no tags at all)."""


class EvaluationError(MoveLabError):
    """Evaluation inputs do not line up (coverage or length mismatch)."""


class StoreError(MoveLabError):
    """Run store is corrupt, missing, or would be overwritten."""


class ServiceError(MoveLabError):
    """Adjudication service cannot start or refuses a request."""
