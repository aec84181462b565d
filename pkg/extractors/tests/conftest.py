from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from rbench_extractors.manifest import ManifestEntry


def manifest_rows(image_path: str) -> list[dict]:
    """Ten samples spanning task and embodiment strata, in the engine's format."""

    def row(sample_id, embodiment, task=None, events=(), questions=()):
        return {
            "sample_id": sample_id,
            "task_category": task,
            "embodiment": embodiment,
            "prompt": f"the robot handles {sample_id}",
            "reference_image": image_path,
            "metadata": {"manipulated_object": "box", "viewpoint": "third_person"},
            "event_list": list(events),
            "question_chain": list(questions),
        }

    events = ["open the drawer", "take out the cup", "close the drawer"]
    questions = [
        "does the robot approach the correct object?",
        "does the robot grasp the object?",
        "is the object placed at the described spot?",
        "does the scene stay physically plausible?",
        "is the final state reached?",
    ]
    return [
        row("cm-000", "single_arm", task="common_manipulation"),
        row("cm-001", "dual_arm", task="common_manipulation"),
        row("lh-000", "humanoid", task="long_horizon_planning", events=events),
        row("lh-001", "single_arm", task="long_horizon_planning", events=events),
        row("vr-000", "dual_arm", task="visual_reasoning", questions=questions),
        row("vr-001", "quadruped", task="visual_reasoning", questions=questions),
        row("emb-000", "dual_arm"),
        row("emb-001", "dual_arm"),
        row("emb-002", "quadruped"),
        row("emb-003", "humanoid"),
    ]


@pytest.fixture
def manifest_path(tmp_path):
    image = tmp_path / "ref.png"
    image.write_bytes(b"\x89PNG stub")
    path = tmp_path / "manifest.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for row in manifest_rows(str(image)):
            handle.write(json.dumps(row) + "\n")
    return path


@pytest.fixture
def sample_entry():
    return ManifestEntry(
        sample_id="vr-000",
        task_category="visual_reasoning",
        embodiment="dual_arm",
        prompt="the robot grasps the blue book and places it in the hollow basket",
        viewpoint="third_person",
        manipulated_object="blue book",
        event_list=(),
        question_chain=(
            "does the robot approach the blue book?",
            "does the robot grasp the blue book?",
            "is the hollow basket identified?",
            "is the book placed inside the basket?",
            "does the book stay in the basket?",
        ),
    )


class _JudgeHandler(BaseHTTPRequestHandler):
    def do_GET(self):
        if self.path == "/health" and self.server.healthy:
            self._send(200, b"ok")
        else:
            self._send(503, b"down")

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append(
            {"path": self.path, "body": body, "auth": self.headers.get("Authorization")}
        )
        if self.path == "/extract":
            payload = json.dumps(self.server.signal_payload).encode("utf-8")
            self._send(200, payload, content_type="application/json")
            return
        if self.path != "/evaluate":
            self._send(404, b"not found")
            return
        calls = sum(1 for r in self.server.requests if r["path"] == "/evaluate")
        if calls <= self.server.fail_first:
            self._send(500, b"transient failure")
            return
        payload = json.dumps({"content": self.server.reply}).encode("utf-8")
        self._send(200, payload, content_type="application/json")

    def _send(self, status, body, content_type="text/plain"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class FakeJudgeServer:
    def __init__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _JudgeHandler)
        self.server.requests = []
        self.server.fail_first = 0
        self.server.healthy = True
        self.server.reply = "{}"
        self.server.signal_payload = {}
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.server.requests

    def configure(
        self,
        *,
        reply: str = "{}",
        fail_first: int = 0,
        healthy: bool = True,
        signal_payload: dict | None = None,
    ):
        self.server.reply = reply
        self.server.fail_first = fail_first
        self.server.healthy = healthy
        self.server.signal_payload = signal_payload or {}
        self.server.requests.clear()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def judge_server():
    server = FakeJudgeServer()
    yield server
    server.close()
