"""Wire-protocol conformance of the reference adapter, driven over a
real child process exactly the way the explainer drives it."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

ADAPTER = Path(__file__).parent.parent / "src" / "limelight_adapter.py"

sys.path.insert(0, str(ADAPTER.parent))
from limelight_adapter import (  # noqa: E402
    HATE_KEYWORDS,
    OFFENSIVE_KEYWORDS,
    KeywordModel,
)


class AdapterProcess:
    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, str(ADAPTER)],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1,
        )

    def read(self):
        line = self.proc.stdout.readline()
        assert line, "adapter closed its stdout unexpectedly"
        return json.loads(line)

    def send(self, payload):
        self.proc.stdin.write(json.dumps(payload) + "\n")
        self.proc.stdin.flush()

    def send_raw(self, text):
        self.proc.stdin.write(text + "\n")
        self.proc.stdin.flush()

    def close(self):
        self.proc.stdin.close()
        return self.proc.wait(timeout=5)


@pytest.fixture
def adapter():
    proc = AdapterProcess()
    yield proc
    if proc.proc.poll() is None:
        proc.proc.kill()
        proc.proc.wait()


class TestHandshake:
    def test_first_line_advertises_three_classes_in_order(self, adapter):
        handshake = adapter.read()
        assert handshake == {
            "protocol": "limelight-blackbox",
            "version": 1,
            "classes": ["hate", "offensive", "none"],
        }

    def test_eof_is_a_clean_exit(self, adapter):
        adapter.read()
        assert adapter.close() == 0


class TestRequests:
    def test_batch_round_trip_echoes_id_and_counts(self, adapter):
        adapter.read()
        adapter.send({"id": 7, "texts": ["first text", "second text"]})
        response = adapter.read()
        assert response["id"] == 7
        assert len(response["probabilities"]) == 2

    def test_rows_normalized_to_one_within_1e9(self, adapter):
        adapter.read()
        texts = [f"text number {i} with words" for i in range(40)]
        texts += ["i hate everything", "you stupid thing", "hate stupid mix"]
        adapter.send({"id": 1, "texts": texts})
        for row in adapter.read()["probabilities"]:
            assert len(row) == 3
            assert all(v >= 0 for v in row)
            assert abs(sum(row) - 1.0) <= 1e-9

    def test_malformed_request_yields_error_and_serving_continues(self, adapter):
        adapter.read()
        adapter.send_raw("this is not json")
        error = adapter.read()
        assert "error" in error and error["id"] is None
        adapter.send({"id": 2, "texts": ["still alive"]})
        assert adapter.read()["id"] == 2

    def test_missing_texts_field_reports_id(self, adapter):
        adapter.read()
        adapter.send({"id": 9, "wrong": []})
        error = adapter.read()
        assert error["id"] == 9 and "error" in error

    def test_empty_batch_allowed(self, adapter):
        adapter.read()
        adapter.send({"id": 3, "texts": []})
        assert adapter.read()["probabilities"] == []


class TestKeywordScorer:
    def test_hate_keyword_makes_hate_strictly_greatest(self):
        model = KeywordModel()
        for keyword in sorted(HATE_KEYWORDS):
            row = model.predict([f"you {keyword} person"])[0]
            assert row[0] > row[1] and row[0] > row[2]

    def test_offensive_keyword_makes_offensive_strictly_greatest(self):
        model = KeywordModel()
        for keyword in sorted(OFFENSIVE_KEYWORDS):
            row = model.predict([f"such a {keyword} thing"])[0]
            assert row[1] > row[0] and row[1] > row[2]

    def test_no_keywords_scores_none_highest(self):
        row = KeywordModel().predict(["a perfectly pleasant afternoon"])[0]
        assert row[2] > row[0] and row[2] > row[1]

    def test_scores_by_direct_rule_evaluation(self):
        # 1 hate hit: raw scores (3, 1, 1), normalized (0.6, 0.2, 0.2)
        from limelight_adapter import _normalized

        raw = KeywordModel().predict(["i hate mondays"])[0]
        assert raw == [3.0, 1.0, 1.0]
        assert _normalized(raw) == pytest.approx([0.6, 0.2, 0.2], abs=1e-12)
