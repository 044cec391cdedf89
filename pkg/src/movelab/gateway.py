"""Uniform multi-turn chat interface over annotation backends.

Three backend kinds: a remote HTTP chat-completion service, a
deterministic mock that echoes gold annotations, and a lexical-marker
heuristic baseline. Sessions record the full transcript verbatim so every
run can be replayed offline.
"""

from __future__ import annotations

import datetime
import json
import logging
import os
import random
import socket
import time
import urllib.error
import urllib.parse
import urllib.request
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import Abstract, segment
from .errors import GatewayError
from .moves import MoveLabel, parse_label
from .prompts import render_example

logger = logging.getLogger(__name__)

KIND_REMOTE = "remote"
KIND_MOCK = "mock"
KIND_HEURISTIC = "heuristic"
BACKEND_KINDS = (KIND_REMOTE, KIND_MOCK, KIND_HEURISTIC)

AUTH_TOKEN_ENV = "MOVELAB_API_TOKEN"
DEFAULT_TURN_LIMIT = 4000

_ACKNOWLEDGEMENTS = (
    "OK. I have learned this instruction.",
    "Understood. I will follow this instruction.",
    "Noted. I am ready for the next instruction.",
)


@dataclass(frozen=True)
class BackendConfig:
    """Declarative backend selection plus transport knobs.

    `mode` is a free-form tag recorded in run metadata (provenance only,
    e.g. "creative"); it carries no semantics here.
    """

    kind: str
    endpoint: str | None = None
    auth_token_env: str | None = None
    mode: str = ""
    timeout: float = 30.0
    max_retries: int = 3
    turn_delay_ms: int = 0
    turn_limit: int = DEFAULT_TURN_LIMIT

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise GatewayError(f"unknown backend kind: {self.kind!r}")
        if self.kind == KIND_REMOTE and not self.endpoint:
            raise GatewayError("remote backend requires an endpoint")
        if self.kind != KIND_REMOTE and self.endpoint:
            raise GatewayError(f"{self.kind} backend must not set an endpoint")
        if self.timeout <= 0:
            raise GatewayError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 0:
            raise GatewayError(f"max retries must be non-negative, got {self.max_retries}")

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "mode": self.mode,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
        }


def _load_markers() -> dict[MoveLabel, tuple[str, ...]]:
    raw = json.loads(
        resources.files("movelab.data").joinpath("markers.json").read_text("utf-8")
    )
    return {
        parse_label(name): tuple(marker.lower() for marker in markers)
        for name, markers in raw.items()
    }


MARKER_RULES: dict[MoveLabel, tuple[str, ...]] = _load_markers()


def load_marker_rules(path: str | Path) -> dict[MoveLabel, tuple[str, ...]]:
    """Load an alternative marker rule table from an editable JSON file."""
    raw = json.loads(Path(path).read_text("utf-8"))
    return {
        parse_label(name): tuple(marker.lower() for marker in markers)
        for name, markers in raw.items()
    }


def heuristic_moves(
    abstract: Abstract, rules: Mapping[MoveLabel, tuple[str, ...]] | None = None
) -> list[frozenset[MoveLabel]]:
    """Per-sentence label sets from the lexical-marker rules.

    Every matching rule fires (multi-label capable). A sentence matching
    nothing defaults to BACKGROUND when it opens the abstract, otherwise
    it inherits the previous sentence's labels.
    """
    rules = MARKER_RULES if rules is None else rules
    predictions: list[frozenset[MoveLabel]] = []
    for sentence in segment(abstract.text):
        lowered = sentence.text.lower()
        fired = frozenset(
            label
            for label, markers in rules.items()
            if any(marker in lowered for marker in markers)
        )
        if not fired:
            fired = (
                frozenset({MoveLabel.BACKGROUND})
                if sentence.index == 0
                else predictions[-1]
            )
        predictions.append(fired)
    return predictions


def annotate_heuristic(
    abstract: Abstract, rules: Mapping[MoveLabel, tuple[str, ...]] | None = None
) -> str:
    """Rule-based tagged annotation; quotes source sentences verbatim."""
    return render_example(abstract, heuristic_moves(abstract, rules))


class Backend:
    """One response per user turn; implementations must be deterministic
    for a fixed seed (remote excepted)."""

    def respond(self, session: "Session", turn: str) -> str:
        raise NotImplementedError

    def check(self) -> None:
        """Raise GatewayError if the backend cannot be reached."""


def _normalize(text: str) -> str:
    return " ".join(text.split())


class MockEchoBackend(Backend):
    """Echoes the gold annotation of any known abstract, with the same
    conversational framing a chat model produces."""

    def __init__(self, corpus: Iterable[Abstract] = ()):
        self._gold: dict[str, Abstract] = {}
        for abstract in corpus:
            if abstract.gold is not None:
                self._gold[_normalize(abstract.text)] = abstract

    def respond(self, session: "Session", turn: str) -> str:
        abstract = self._gold.get(_normalize(turn))
        if abstract is None:
            rng = random.Random(session.id)
            return rng.choice(_ACKNOWLEDGEMENTS)
        rendered = render_example(abstract)
        return (
            "OK, I will try to annotate the abstract according to the "
            f"instructions you have given me. Here is my attempt:\n\n{rendered}\n\n"
            "How did I do? Please give me some feedback on my annotation."
        )


class HeuristicBackend(Backend):
    """Annotates any non-instruction turn with the marker rules."""

    def __init__(self, rules: Mapping[MoveLabel, tuple[str, ...]] | None = None):
        self._rules = rules

    def respond(self, session: "Session", turn: str) -> str:
        if turn.startswith("Instruction "):
            return "OK."
        adhoc = Abstract(
            id="adhoc", journal="", date=datetime.date(1970, 1, 1), text=turn
        )
        return annotate_heuristic(adhoc, self._rules)


Transport = Callable[[str, dict, dict, float], str]


def _http_transport(endpoint: str, payload: dict, headers: dict, timeout: float) -> str:
    request = urllib.request.Request(
        endpoint,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json", **headers},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            body = json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        raise GatewayError(f"remote returned HTTP {exc.code}: {exc.reason}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise GatewayError(f"remote request failed: {exc}") from exc
    if "text" not in body:
        raise GatewayError("remote response missing 'text' field")
    return body["text"]


class RemoteBackend(Backend):
    """POSTs {messages, metadata} to a chat-completion endpoint.

    Transient failures are retried with exponential backoff up to the
    configured retry count; responses are returned verbatim.
    """

    def __init__(
        self,
        config: BackendConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._transport = transport or _http_transport
        self._sleep = sleep

    def check(self) -> None:
        parsed = urllib.parse.urlparse(self.config.endpoint)
        host = parsed.hostname
        if not host:
            raise GatewayError(f"cannot parse endpoint {self.config.endpoint!r}")
        try:
            socket.getaddrinfo(host, parsed.port or (443 if parsed.scheme == "https" else 80))
        except OSError as exc:
            raise GatewayError(
                f"remote endpoint unreachable: {self.config.endpoint} ({exc})"
            ) from exc
        if self.config.auth_token_env and not os.environ.get(self.config.auth_token_env):
            raise GatewayError(
                f"auth failure: environment variable {self.config.auth_token_env} is not set"
            )

    def respond(self, session: "Session", turn: str) -> str:
        headers = {}
        if self.config.auth_token_env:
            token = os.environ.get(self.config.auth_token_env, "")
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "messages": [
                {"role": role, "text": text} for role, text in session.transcript
            ]
            + [{"role": "user", "text": turn}],
            "metadata": {"mode": self.config.mode, "session": session.id},
        }
        attempts = 0
        delay = 0.5
        while True:
            attempts += 1
            try:
                response = self._transport(
                    self.config.endpoint, payload, headers, self.config.timeout
                )
                session.attempt_log.append(attempts)
                return response
            except GatewayError as exc:
                if attempts > self.config.max_retries:
                    session.attempt_log.append(attempts)
                    raise GatewayError(
                        f"remote send failed after {attempts} attempts: {exc}"
                    ) from exc
                logger.warning(
                    "send attempt %d failed (%s), retrying in %.1fs", attempts, exc, delay
                )
                self._sleep(delay)
                delay *= 2


@dataclass
class Session:
    """A single chat session: strict user/assistant alternation."""

    id: str
    config: BackendConfig
    backend: Backend
    transcript: list[tuple[str, str]] = field(default_factory=list)
    state: str = "open"
    attempt_log: list[int] = field(default_factory=list)
    sleep: Callable[[float], None] = time.sleep

    def send(self, turn: str) -> str:
        """Send one user turn and record the backend's response."""
        if self.state != "open":
            raise GatewayError(f"session {self.id} is closed")
        if len(turn) > self.config.turn_limit:
            raise GatewayError(
                f"turn of {len(turn)} characters exceeds the "
                f"{self.config.turn_limit}-character limit"
            )
        if self.config.turn_delay_ms and self.transcript:
            self.sleep(self.config.turn_delay_ms / 1000.0)
        response = self.backend.respond(self, turn)
        self.transcript.append(("user", turn))
        self.transcript.append(("assistant", response))
        return response

    def close(self) -> None:
        self.state = "closed"


def open_session(
    config: BackendConfig,
    session_id: str = "session-0",
    *,
    corpus: Iterable[Abstract] = (),
    backend: Backend | None = None,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> Session:
    """Open a session against the configured backend.

    Mock and heuristic backends are pure functions of (session id, inputs).
    The remote backend verifies endpoint reachability and auth-token
    presence up front. A pre-built `backend` wins over `config.kind`,
    which lets tests and the experiment runner inject doubles.
    """
    if backend is None:
        if config.kind == KIND_MOCK:
            backend = MockEchoBackend(corpus)
        elif config.kind == KIND_HEURISTIC:
            backend = HeuristicBackend()
        else:
            backend = RemoteBackend(config, transport=transport, sleep=sleep)
    backend.check()
    return Session(id=session_id, config=config, backend=backend, sleep=sleep)


def send(session: Session, turn: str) -> str:
    """Module-level alias for Session.send."""
    return session.send(turn)
