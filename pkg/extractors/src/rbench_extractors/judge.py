"""HTTP client for the multimodal judge service, plus response parsing.

The judge returns free text that is expected to contain one JSON object with
the structured scores. Parsing is separated from transport so persisted
transcripts can be re-parsed without re-querying the model.
"""

from __future__ import annotations

import base64
import json
import re
import time
from typing import Any, Mapping

import numpy as np
import requests

from .jobs import JobError, LiveEndpoints

_GRADES = ("A", "B", "C", "D", "E")
_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


class JudgeResponseError(Exception):
    """The judge's reply could not be parsed; carries the raw text for audit."""

    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(message)


def _extract_json_object(text: str) -> Mapping[str, Any]:
    candidates = _FENCE.findall(text) or [text]
    for candidate in candidates:
        candidate = candidate.strip()
        start = candidate.find("{")
        end = candidate.rfind("}")
        if start < 0 or end <= start:
            continue
        try:
            payload = json.loads(candidate[start : end + 1])
        except json.JSONDecodeError:
            continue
        if isinstance(payload, Mapping):
            return payload
    raise JudgeResponseError("no JSON object in judge reply", raw=text)


def _score_in_range(payload: Mapping[str, Any], key: str) -> float:
    value = payload.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0 <= value <= 5:
        raise JudgeResponseError(f"{key} missing or outside [0, 5]: {value!r}", raw=json.dumps(payload))
    return float(value)


def _optional_grade(payload: Mapping[str, Any], key: str) -> str | None:
    value = payload.get(key)
    if value is None:
        return None
    token = str(value).strip().upper()
    if token not in _GRADES:
        raise JudgeResponseError(f"{key} is not a grade A-E: {value!r}", raw=json.dumps(payload))
    return token


def _optional_counts(payload: Mapping[str, Any], key: str) -> tuple[int | None, int | None]:
    value = payload.get(key)
    if value is None:
        return None, None
    try:
        completed = int(value["completed"])
        total = int(value["total"])
    except (KeyError, TypeError, ValueError):
        raise JudgeResponseError(f"{key} needs completed/total integers: {value!r}", raw=json.dumps(payload)) from None
    if not 0 <= completed <= total:
        raise JudgeResponseError(f"{key} counts out of order: {value!r}", raw=json.dumps(payload))
    return completed, total


def parse_judge_response(text: str) -> dict[str, Any]:
    """Parse a judge transcript into the judge-record field set.

    Raises :class:`JudgeResponseError` (with the raw text attached) when the
    reply carries no usable JSON or the scores are malformed.
    """
    payload = _extract_json_object(text)
    events_completed, events_total = _optional_counts(payload, "events")
    questions_completed, questions_total = _optional_counts(payload, "questions")
    submetrics = payload.get("task_submetrics") or {}
    if not isinstance(submetrics, Mapping):
        raise JudgeResponseError(f"task_submetrics must be an object: {submetrics!r}", raw=text)
    return {
        "pss_raw": _score_in_range(payload, "plausibility_score"),
        "tac_raw": _score_in_range(payload, "adherence_score"),
        "robot_grade": _optional_grade(payload, "robot_grade"),
        "object_grade": _optional_grade(payload, "object_grade"),
        "task_submetrics": {str(k): float(v) for k, v in submetrics.items()},
        "events_completed": events_completed,
        "events_total": events_total,
        "questions_completed": questions_completed,
        "questions_total": questions_total,
    }


def encode_grid(grid: np.ndarray) -> str:
    """Serialize a grid image as base64 PNG-less raw bytes with shape header."""
    header = f"{grid.shape[0]}x{grid.shape[1]}x{grid.shape[2]}:".encode()
    return base64.b64encode(header + np.ascontiguousarray(grid, dtype=np.uint8).tobytes()).decode()


class JudgeClient:
    """Queries the judge endpoint with bounded retries and backoff."""

    def __init__(self, endpoints: LiveEndpoints, session: requests.Session | None = None):
        self.endpoints = endpoints
        self.session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = self.endpoints.judge_api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def available(self) -> bool:
        try:
            response = self.session.get(
                f"{self.endpoints.judge_url}/health", timeout=self.endpoints.timeout_s
            )
            return response.status_code == 200
        except requests.RequestException:
            return False

    def evaluate(self, prompt: str, images: list[str]) -> str:
        """POST one evaluation request; returns the judge's raw text reply."""
        body = {
            "prompt": prompt,
            "images": images,
            "temperature": self.endpoints.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.endpoints.retries + 1):
            if attempt:
                time.sleep(self.endpoints.backoff_s * (2 ** (attempt - 1)))
            try:
                response = self.session.post(
                    f"{self.endpoints.judge_url}/evaluate",
                    json=body,
                    headers=self._headers(),
                    timeout=self.endpoints.timeout_s,
                )
                if response.status_code == 200:
                    return response.json()["content"]
                last_error = JobError(f"judge returned HTTP {response.status_code}: {response.text[:200]}")
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
        raise JobError(f"judge unavailable after {self.endpoints.retries + 1} attempts: {last_error}")
