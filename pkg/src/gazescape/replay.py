"""Deterministic replay: drive the engine from a gaze file on a virtual clock.

Replay ticks the engine on the exact nominal grid, delivers each gaze
sample to the first tick at or after its timestamp, executes generations
synchronously between ticks and delivers their completions to the next
tick. With a deterministic backend the resulting canvas-hash sequence is a
pure function of (gaze file, config), which is the property the recorded
live session is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import SessionConfig
from .engine import (Action, Engine, GenerationCompletion, LogEvent,
                     PendingGeneration, StartGeneration)
from .events import EventLog, SessionEvent
from .gaze import GazeSample, MalformedRecord, parse_sample
from .generation import BackendError, GenerationBackend, generate, make_backend


class ReplayDivergence(RuntimeError):
    """Replayed canvas hashes disagree with the recorded session."""


@dataclass
class ReplayResult:
    hashes: list[str]
    log: EventLog
    ticks: int
    final_canvas: np.ndarray | None

    def events_of(self, kind: str) -> list[SessionEvent]:
        return self.log.of_kind(kind)


def load_gaze_file(path: str) -> list[GazeSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(parse_sample(line))
            except MalformedRecord as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
    return samples


def samples_from_events(events: list[SessionEvent]) -> list[GazeSample]:
    """Reconstruct the gaze stream from a recorded event log."""
    out = []
    for e in events:
        if e.kind != "GazeBatch":
            continue
        for t, x, y, v, s in e.payload.get("samples", []):
            out.append(GazeSample(t_ms=t, x=x, y=y, valid=v, source_id=s))
    return out


def load_replay_source(path: str) -> tuple[list[GazeSample], int | None]:
    """Read either a raw gaze JSONL or a recorded events JSONL.

    Event logs also pin the session duration (their last timestamp), so
    trailing idle regenerations replay too.
    """
    import json
    with open(path, "r", encoding="utf-8") as fh:
        first = ""
        for line in fh:
            first = line.strip()
            if first:
                break
    try:
        is_event_log = "kind" in json.loads(first or "{}")
    except json.JSONDecodeError:
        is_event_log = False
    if is_event_log:
        from .events import read_event_log
        events = read_event_log(path)
        duration = events[-1].t_ms if events else 0
        return samples_from_events(events), duration
    return load_gaze_file(path), None


def execute_generation(backend: GenerationBackend,
                       pending: PendingGeneration) -> GenerationCompletion:
    """Run one generation, folding backend failures into the completion."""
    try:
        image = generate(backend, pending.request)
    except BackendError as exc:
        return GenerationCompletion(token=pending.token,
                                    error_kind=type(exc).__name__,
                                    error_msg=str(exc))
    return GenerationCompletion(token=pending.token, image=image)


def run_replay(config: SessionConfig,
               samples: list[GazeSample],
               duration_ms: int | None = None,
               backend: GenerationBackend | None = None,
               log: EventLog | None = None,
               stop_after_cycles: int | None = None,
               on_action: Callable[[int, Action], None] | None = None) -> ReplayResult:
    """Run a full headless session over the given gaze samples.

    duration_ms defaults to the last sample timestamp; the final tick is
    the first one at or after that time.
    """
    if backend is None:
        backend = make_backend(config.generation.backend,
                               config.generation.endpoint,
                               config.generation.timeout_ms)
    if log is None:
        log = EventLog()

    ordered = sorted(samples, key=lambda s: s.t_ms)
    if duration_ms is None:
        duration_ms = ordered[-1].t_ms if ordered else 0

    tick_ms = config.tick_interval_ms
    last_tick = max(1, math.ceil(duration_ms / tick_ms))

    engine = Engine(config)
    hashes: list[str] = []
    completions: list[GenerationCompletion] = []
    cursor = 0
    completed_cycles = 0
    ticks_run = 0

    for k in range(last_tick + 1):
        now_ms = k * tick_ms
        batch = []
        while cursor < len(ordered) and ordered[cursor].t_ms <= now_ms:
            batch.append(ordered[cursor])
            cursor += 1

        actions = engine.tick(now_ms, batch, completions)
        completions = []
        ticks_run += 1

        for action in actions:
            if on_action is not None:
                on_action(now_ms, action)
            if isinstance(action, StartGeneration):
                completions.append(execute_generation(backend, action.pending))
            elif isinstance(action, LogEvent):
                log.emit(action.event)
                for _, img in action.images:
                    log.store_image(img)
                if action.event.kind in ("CycleCompleted", "Regenerated"):
                    hashes.append(action.event.payload["canvas"])
                if action.event.kind == "CycleCompleted":
                    completed_cycles += 1

        if stop_after_cycles is not None and completed_cycles >= stop_after_cycles:
            break

    log.flush()
    return ReplayResult(hashes=hashes, log=log, ticks=ticks_run,
                        final_canvas=engine.canvas)


def recorded_hashes(events: list[SessionEvent]) -> list[str]:
    """Canvas-hash sequence of a recorded session's event log."""
    return [e.payload["canvas"] for e in events
            if e.kind in ("CycleCompleted", "Regenerated")]


def verify_replay(result: ReplayResult,
                  recorded: list[SessionEvent]) -> None:
    """Raise ReplayDivergence when replayed hashes differ from recorded."""
    want = recorded_hashes(recorded)
    got = result.hashes
    n = min(len(want), len(got))
    for i in range(n):
        if want[i] != got[i]:
            raise ReplayDivergence(
                f"canvas hash {i} diverged: recorded {want[i][:12]}… "
                f"vs replayed {got[i][:12]}…")
    if len(want) != len(got):
        raise ReplayDivergence(
            f"hash count diverged: recorded {len(want)} vs replayed {len(got)}")
