"""Light reader for the engine's manifest format.

The toolkit talks to the scoring engine only through its file formats, so the
manifest is parsed here independently; only the fields the extractors need are
pulled out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    task_category: str | None
    embodiment: str
    prompt: str
    viewpoint: str
    manipulated_object: str
    event_list: tuple[str, ...]
    question_chain: tuple[str, ...]


def read_manifest(path: Path) -> list[ManifestEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
                metadata = payload.get("metadata") or {}
                entries.append(
                    ManifestEntry(
                        sample_id=payload["sample_id"],
                        task_category=payload.get("task_category"),
                        embodiment=payload["embodiment"],
                        prompt=payload["prompt"],
                        viewpoint=metadata.get("viewpoint", "third_person"),
                        manipulated_object=metadata.get("manipulated_object", "object"),
                        event_list=tuple(payload.get("event_list") or ()),
                        question_chain=tuple(payload.get("question_chain") or ()),
                    )
                )
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ValueError(f"bad manifest line {line_no}: {exc}") from exc
    return entries
