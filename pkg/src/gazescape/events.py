"""Append-only session event log with deterministic replay in mind.

One JSON line per event; images never go inline - they are referenced by
content hash, with PNG blobs written to a sibling directory when a log
directory is configured. The log is the provenance record of a session
and the input for recorded-vs-replayed verification.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .imgio import image_hash, png_encode

EVENT_KINDS = (
    "GazeBatch",
    "FixationDetected",
    "MaskEmitted",
    "PromptChosen",
    "CycleStarted",
    "CycleCompleted",
    "CycleFailed",
    "TransitionStarted",
    "PresenceLost",
    "PresenceRegained",
    "Regenerated",
    "ConfigLoaded",
)


@dataclass(frozen=True)
class SessionEvent:
    t_ms: int
    kind: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def to_json(self) -> str:
        return json.dumps({"t": self.t_ms, "kind": self.kind,
                           "payload": self.payload},
                          separators=(",", ":"), sort_keys=True)


def event_from_json(line: str) -> SessionEvent:
    obj = json.loads(line)
    return SessionEvent(t_ms=obj["t"], kind=obj["kind"],
                        payload=obj.get("payload", {}))


class EventLog:
    """Collects events in order; optionally mirrors them to JSONL + blobs.

    Events must arrive in non-decreasing time order (append-only log).
    """

    def __init__(self, log_dir: str | None = None, keep: bool = True):
        self.events: list[SessionEvent] = []
        self._keep = keep
        self._last_t = None
        self._fh = None
        self._blob_dir = None
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            self._blob_dir = os.path.join(log_dir, "blobs")
            os.makedirs(self._blob_dir, exist_ok=True)
            self._fh = open(os.path.join(log_dir, "events.jsonl"),
                            "a", encoding="utf-8")

    def emit(self, event: SessionEvent) -> None:
        if self._last_t is not None and event.t_ms < self._last_t:
            raise ValueError(
                f"event log must be time-ordered: {event.t_ms} after {self._last_t}")
        self._last_t = event.t_ms
        if self._keep:
            self.events.append(event)
        if self._fh is not None:
            self._fh.write(event.to_json() + "\n")

    def store_image(self, pixels: np.ndarray) -> str:
        """Hash an image, writing the PNG blob when persistence is on."""
        h = image_hash(pixels)
        if self._blob_dir is not None:
            path = os.path.join(self._blob_dir, h + ".png")
            if not os.path.exists(path):
                with open(path, "wb") as fh:
                    fh.write(png_encode(pixels))
        return h

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None

    def of_kind(self, kind: str) -> list[SessionEvent]:
        return [e for e in self.events if e.kind == kind]


def read_event_log(path: str) -> list[SessionEvent]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(event_from_json(line))
    return out
