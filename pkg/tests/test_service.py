from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request

import pytest

from movelab.errors import ServiceError
from movelab.service import create_service

from .fixtures import DISPUTED_KEYS, build_s5_store


@pytest.fixture(scope="module")
def live_service(tmp_path_factory):
    """S5-scale store (12 pending disputes) served on an ephemeral port."""
    root = tmp_path_factory.mktemp("service-store")
    build_s5_store(root)
    httpd = create_service(root, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base
    httpd.shutdown()
    thread.join(timeout=5)


def get(base: str, path: str) -> dict:
    with urllib.request.urlopen(base + path) as response:
        return json.loads(response.read().decode("utf-8"))


def post(base: str, path: str, payload: dict) -> tuple[int, dict]:
    request = urllib.request.Request(
        base + path,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode("utf-8"))


class TestQueue:
    def test_disputed_queue_has_twelve_items(self, live_service):
        payload = get(live_service, "/api/items?filter=disputed")
        assert payload["total"] == 12
        keys = [(i["abstract_id"], i["sentence_index"]) for i in payload["items"]]
        assert keys == sorted(DISPUTED_KEYS)

    def test_all_filter_returns_678(self, live_service):
        payload = get(live_service, "/api/items?filter=all")
        assert payload["total"] == 678

    def test_single_item_lookup(self, live_service):
        abstract_id, index = sorted(DISPUTED_KEYS)[0]
        item = get(live_service, f"/api/items/{abstract_id}/{index}")
        assert item["disputed"] is True
        assert item["sentence"]
        assert len(item["judgments"]) == 2

    def test_status_before_resolutions(self, live_service):
        status = get(live_service, "/api/status")
        assert status["items"] == 678
        assert status["disputed"] == 12
        assert status["resolved"] == 0
        assert status["final_verdicts"] == 666
        assert status["complete"] is False

    def test_report_refused_while_incomplete(self, live_service):
        code, payload = None, None
        try:
            get(live_service, "/api/report")
        except urllib.error.HTTPError as exc:
            code, payload = exc.code, json.loads(exc.read().decode("utf-8"))
        assert code == 409
        assert "incomplete" in payload["error"]


class TestMutations:
    def test_resolution_for_undisputed_item_conflicts(self, live_service):
        code, payload = post(
            live_service,
            "/api/resolutions",
            {
                "evaluator": "adjudicator",
                "abstract_id": "s5-002",
                "sentence_index": 0,
                "verdict": "correct",
            },
        )
        assert code == 409
        assert "not disputed" in payload["error"]

    def test_judgment_idempotent_duplicate(self, live_service):
        body = {
            "evaluator": "eval-a",
            "abstract_id": "s5-001",
            "sentence_index": 0,
            "verdict": "correct",
        }
        code, payload = post(live_service, "/api/judgments", body)
        assert code == 200
        assert payload["status"] == "duplicate"

    def test_conflicting_rejudgment_rejected(self, live_service):
        body = {
            "evaluator": "eval-a",
            "abstract_id": "s5-001",
            "sentence_index": 0,
            "verdict": "incorrect",
            "corrected_labels": ["METHOD"],
        }
        code, payload = post(live_service, "/api/judgments", body)
        assert code == 409
        assert "differently" in payload["error"]

    def test_invalid_verdict_form_rejected(self, live_service):
        body = {
            "evaluator": "eval-x",
            "abstract_id": "s5-001",
            "sentence_index": 1,
            "verdict": "incorrect",
        }
        code, payload = post(live_service, "/api/judgments", body)
        assert code == 400
        assert "corrected" in payload["error"]


class TestFullWorkflow:
    def test_twelve_resolutions_complete_678(self, tmp_path):
        build_s5_store(tmp_path)
        httpd = create_service(tmp_path, port=0)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{httpd.server_address[1]}"
        try:
            for abstract_id, index in DISPUTED_KEYS:
                code, payload = post(
                    base,
                    "/api/resolutions",
                    {
                        "evaluator": "adjudicator",
                        "abstract_id": abstract_id,
                        "sentence_index": index,
                        "verdict": "correct",
                    },
                )
                assert code == 200 and payload["status"] == "recorded"
            status = get(base, "/api/status")
            assert status["complete"] is True
            assert status["final_verdicts"] == 678
            assert get(base, "/api/items?filter=disputed")["total"] == 0
            report = get(base, "/api/report")
            assert report["accuracy_mean"] == 1.0
            # duplicate resolution is a no-op
            code, payload = post(
                base,
                "/api/resolutions",
                {
                    "evaluator": "adjudicator",
                    "abstract_id": DISPUTED_KEYS[0][0],
                    "sentence_index": DISPUTED_KEYS[0][1],
                    "verdict": "correct",
                },
            )
            assert payload["status"] == "duplicate"
        finally:
            httpd.shutdown()
            thread.join(timeout=5)

    def test_state_survives_restart(self, tmp_path):
        build_s5_store(tmp_path, with_resolutions=True)
        httpd = create_service(tmp_path, port=0)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{httpd.server_address[1]}"
        try:
            status = get(base, "/api/status")
            assert status["complete"] is True
            assert status["final_verdicts"] == 678
        finally:
            httpd.shutdown()
            thread.join(timeout=5)


class TestStartup:
    def test_empty_store_refused(self, tmp_path):
        with pytest.raises(ServiceError, match="no run records"):
            create_service(tmp_path)

    def test_corrupt_judgment_file_names_line(self, tmp_path):
        store = build_s5_store(tmp_path, with_judgments=False)
        store.judgments_path.write_text('{"evaluator": "a"\nnot json\n', encoding="utf-8")
        with pytest.raises(ServiceError, match="line 1"):
            create_service(tmp_path)

    def test_unknown_run_id_refused(self, tmp_path):
        build_s5_store(tmp_path, with_judgments=False)
        with pytest.raises(ServiceError, match="not found"):
            create_service(tmp_path, run_id="nope")

    def test_port_busy_reported(self, tmp_path):
        build_s5_store(tmp_path, with_judgments=False)
        first = create_service(tmp_path, port=0)
        try:
            busy_port = first.server_address[1]
            with pytest.raises(ServiceError, match="busy"):
                create_service(tmp_path, port=busy_port)
        finally:
            first.server_close()

    def test_fallback_page_served_without_ui(self, tmp_path):
        build_s5_store(tmp_path, with_judgments=False)
        httpd = create_service(tmp_path, port=0)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        try:
            base = f"http://127.0.0.1:{httpd.server_address[1]}"
            with urllib.request.urlopen(base + "/") as response:
                body = response.read().decode("utf-8")
            assert "adjudication" in body
        finally:
            httpd.shutdown()
            thread.join(timeout=5)

    def test_static_paths_stay_inside_ui_dir(self, tmp_path):
        build_s5_store(tmp_path / "store", with_judgments=False)
        ui_dir = tmp_path / "ui"
        ui_dir.mkdir()
        (ui_dir / "index.html").write_text("<div id=\"app\"></div>", encoding="utf-8")
        (tmp_path / "secret.txt").write_text("do not serve", encoding="utf-8")
        httpd = create_service(tmp_path / "store", port=0, ui_dir=ui_dir)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        try:
            base = f"http://127.0.0.1:{httpd.server_address[1]}"
            with urllib.request.urlopen(base + "/") as response:
                assert "app" in response.read().decode("utf-8")
            for escape in ("/../secret.txt", "/%2e%2e/secret.txt"):
                try:
                    with urllib.request.urlopen(base + escape) as response:
                        assert response.status == 404
                except urllib.error.HTTPError as exc:
                    assert exc.code == 404
        finally:
            httpd.shutdown()
            thread.join(timeout=5)
