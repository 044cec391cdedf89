from __future__ import annotations

import pytest

from movelab.errors import GatewayError
from movelab.gateway import (
    BackendConfig,
    HeuristicBackend,
    MockEchoBackend,
    RemoteBackend,
    annotate_heuristic,
    heuristic_moves,
    open_session,
)
from movelab.moves import move_set
from movelab.parser import annotate_response, parse_tagged, strip_wrapper

from .conftest import make_abstract


class TestBackendConfig:
    def test_remote_requires_endpoint(self):
        with pytest.raises(GatewayError, match="endpoint"):
            BackendConfig(kind="remote")

    def test_mock_forbids_endpoint(self):
        with pytest.raises(GatewayError, match="must not set"):
            BackendConfig(kind="mock", endpoint="http://x.example/chat")

    def test_unknown_kind_rejected(self):
        with pytest.raises(GatewayError, match="unknown backend kind"):
            BackendConfig(kind="copilot")

    def test_bad_numbers_rejected(self):
        with pytest.raises(GatewayError):
            BackendConfig(kind="mock", timeout=0)
        with pytest.raises(GatewayError):
            BackendConfig(kind="mock", max_retries=-1)


class TestSession:
    def test_open_mock_session_empty_transcript(self):
        session = open_session(BackendConfig(kind="mock"), "s1")
        assert session.transcript == []
        assert session.state == "open"

    def test_transcript_alternates_roles(self, mock_corpus):
        config = BackendConfig(kind="mock")
        session = open_session(config, "s1", corpus=mock_corpus)
        for turn in ("Instruction 1: learn.", mock_corpus[0].text, "Instruction 2: more."):
            session.send(turn)
        assert len(session.transcript) == 6
        assert [role for role, _ in session.transcript] == [
            "user",
            "assistant",
        ] * 3

    def test_same_seed_byte_identical(self, mock_corpus):
        config = BackendConfig(kind="mock")
        transcripts = []
        for _ in range(2):
            session = open_session(config, "seed-7", corpus=mock_corpus)
            session.send("Instruction 1: learn this.")
            session.send(mock_corpus[0].text)
            transcripts.append(list(session.transcript))
        assert transcripts[0] == transcripts[1]

    def test_closed_session_rejects_sends(self):
        session = open_session(BackendConfig(kind="mock"), "s1")
        session.close()
        with pytest.raises(GatewayError, match="closed"):
            session.send("hello")

    def test_over_limit_turn_rejected(self):
        config = BackendConfig(kind="mock", turn_limit=4000)
        session = open_session(config, "s1")
        with pytest.raises(GatewayError, match="4000"):
            session.send("x" * 4001)

    def test_turn_stored_verbatim(self, mock_corpus):
        session = open_session(BackendConfig(kind="mock"), "s1", corpus=mock_corpus)
        turn = "Instruction 1:  spacing   preserved\t."
        session.send(turn)
        assert session.transcript[0] == ("user", turn)

    def test_echo_mock_returns_gold(self, mock_corpus):
        abstract = mock_corpus[0]
        session = open_session(BackendConfig(kind="mock"), "s1", corpus=mock_corpus)
        response = session.send(abstract.text)
        annotations, diagnostics = annotate_response(response, abstract)
        assert [a.predicted for a in annotations] == list(abstract.gold)
        assert not diagnostics.has_problems


class TestRemote:
    def test_unresolvable_endpoint_named_in_error(self):
        config = BackendConfig(
            kind="remote", endpoint="http://no-such-host.invalid/chat"
        )
        with pytest.raises(GatewayError, match="no-such-host.invalid"):
            open_session(config, "s1")

    def test_missing_auth_token_is_auth_failure(self, monkeypatch):
        monkeypatch.delenv("MOVELAB_API_TOKEN", raising=False)
        config = BackendConfig(
            kind="remote",
            endpoint="http://localhost:1/chat",
            auth_token_env="MOVELAB_API_TOKEN",
        )
        with pytest.raises(GatewayError, match="MOVELAB_API_TOKEN"):
            open_session(config, "s1")

    def test_retries_then_success(self):
        config = BackendConfig(
            kind="remote", endpoint="http://localhost:9/chat", max_retries=3
        )
        calls = []

        def flaky(endpoint, payload, headers, timeout):
            calls.append(payload)
            if len(calls) <= 2:
                raise GatewayError("transient")
            return "<METHOD>done.</METHOD>"

        backend = RemoteBackend(config, transport=flaky, sleep=lambda _: None)
        session = open_session(config, "s1", backend=backend)
        response = session.send("annotate this")
        assert response == "<METHOD>done.</METHOD>"
        assert len(calls) == 3
        assert session.attempt_log == [3]

    def test_retries_exhausted(self):
        config = BackendConfig(
            kind="remote", endpoint="http://localhost:9/chat", max_retries=2
        )

        def always_down(endpoint, payload, headers, timeout):
            raise GatewayError("transient")

        backend = RemoteBackend(config, transport=always_down, sleep=lambda _: None)
        session = open_session(config, "s1", backend=backend)
        with pytest.raises(GatewayError, match="after 3 attempts"):
            session.send("annotate this")

    def test_backoff_doubles(self):
        config = BackendConfig(
            kind="remote", endpoint="http://localhost:9/chat", max_retries=3
        )
        delays = []
        attempts = []

        def flaky(endpoint, payload, headers, timeout):
            attempts.append(1)
            if len(attempts) <= 3:
                raise GatewayError("transient")
            return "ok"

        backend = RemoteBackend(config, transport=flaky, sleep=delays.append)
        session = open_session(config, "s1", backend=backend)
        session.send("x")
        assert delays == [0.5, 1.0, 2.0]


class TestHeuristic:
    def test_quoted_purpose_marker(self):
        abstract = make_abstract("This study examines teacher feedback.")
        assert heuristic_moves(abstract) == [move_set("PURPOSE")]

    def test_method_plus_results_markers_combine(self):
        abstract = make_abstract("Analysis of interviews revealed that learners adapt.")
        assert heuristic_moves(abstract) == [move_set("METHOD", "RESULTS")]

    def test_conclusion_marker(self):
        abstract = make_abstract(
            "Teachers value autonomy. We conclude with recommendations for training."
        )
        assert heuristic_moves(abstract)[1] == move_set("CONCLUSION")

    def test_unmatched_first_sentence_defaults_background(self):
        abstract = make_abstract("Nothing here matches any marker at all.")
        assert heuristic_moves(abstract) == [move_set("BACKGROUND")]

    def test_unmatched_sentence_inherits_previous(self):
        abstract = make_abstract(
            "This study examines feedback. More follows without markers."
        )
        assert heuristic_moves(abstract) == [move_set("PURPOSE"), move_set("PURPOSE")]

    def test_output_parses_cleanly_no_hallucination(self, mock_corpus):
        for abstract in mock_corpus:
            tagged = annotate_heuristic(abstract)
            body, diagnostics = strip_wrapper(tagged)
            assert body == tagged  # no conversational wrapper
            annotations, diagnostics = annotate_response(tagged, abstract)
            assert not diagnostics.has_problems
            assert diagnostics.orphan_spans == []
            assert all(a.alignment_score == 1.0 for a in annotations)

    def test_deterministic_across_runs(self, mock_corpus):
        first = [annotate_heuristic(a) for a in mock_corpus]
        second = [annotate_heuristic(a) for a in mock_corpus]
        assert first == second

    def test_backend_acknowledges_instructions(self):
        backend = HeuristicBackend()
        session = open_session(
            BackendConfig(kind="heuristic"), "s1", backend=backend
        )
        assert session.send("Instruction 1: learn this.") == "OK."
        tagged = session.send("This study examines feedback.")
        spans, _ = parse_tagged(tagged)
        assert spans
