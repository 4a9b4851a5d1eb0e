"""Gaze sample ingestion: wire-format parsing, presence, dropout bridging.

Samples arrive as JSON lines - ``{"t":<int ms>,"x":<float>,"y":<float>,
"v":<bool>,"s":<int>}`` - from a device bridge, the browser UI's pointer
emulation, or a replay file. The engine never knows which.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace


class MalformedRecord(ValueError):
    """Gaze record is not parseable as the JSON-lines wire format."""


class OutOfRange(ValueError):
    """Valid sample with coordinates far outside the canvas; the producer
    is probably sending pixels instead of normalized coordinates."""


# slack beyond [0,1] a valid sample may carry before we suspect a
# mis-scaled producer rather than ordinary tracker jitter
_COORD_SLACK = 0.1


@dataclass(frozen=True)
class GazeSample:
    t_ms: int
    x: float
    y: float
    valid: bool
    source_id: int = 0


@dataclass(frozen=True)
class PresenceState:
    present: bool = False
    last_valid_t_ms: int = 0
    absence_ms: int = 0


def parse_sample(line: str) -> GazeSample:
    """Decode one wire record into a GazeSample.

    Valid samples get their coordinates clamped to [0,1]; coordinates
    outside [-0.1, 1.1] raise OutOfRange instead (that is not jitter, the
    producer is mis-scaled). Raises MalformedRecord for anything that is
    not a complete record.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not valid JSON: {line!r}") from exc
    if not isinstance(obj, dict):
        raise MalformedRecord(f"expected a JSON object, got {type(obj).__name__}")

    try:
        t = obj["t"]
        x = obj["x"]
        y = obj["y"]
        v = obj["v"]
        s = obj["s"]
    except KeyError as exc:
        raise MalformedRecord(f"missing field {exc.args[0]!r} in {line!r}") from exc

    if isinstance(t, bool) or not isinstance(t, int):
        raise MalformedRecord(f"t must be integer milliseconds, got {t!r}")
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise MalformedRecord(f"x must be a number, got {x!r}")
    if not isinstance(y, (int, float)) or isinstance(y, bool):
        raise MalformedRecord(f"y must be a number, got {y!r}")
    if not isinstance(v, bool):
        raise MalformedRecord(f"v must be a boolean, got {v!r}")
    if isinstance(s, bool) or not isinstance(s, int):
        raise MalformedRecord(f"s must be an integer source id, got {s!r}")

    x = float(x)
    y = float(y)
    if v:
        if not (-_COORD_SLACK <= x <= 1.0 + _COORD_SLACK
                and -_COORD_SLACK <= y <= 1.0 + _COORD_SLACK):
            raise OutOfRange(f"valid sample at ({x}, {y}) is not normalized")
        x = min(1.0, max(0.0, x))
        y = min(1.0, max(0.0, y))
    return GazeSample(t_ms=t, x=x, y=y, valid=v, source_id=s)


def emit_sample(sample: GazeSample) -> str:
    """Encode a sample back into its wire format (one line, no newline)."""
    return json.dumps(
        {"t": sample.t_ms, "x": sample.x, "y": sample.y,
         "v": sample.valid, "s": sample.source_id},
        separators=(",", ":"),
    )


def update_presence(state: PresenceState, sample: GazeSample | None,
                    now_ms: int, absence_timeout_ms: int) -> PresenceState:
    """Advance presence by one sample and/or one clock reading.

    A valid sample marks the spectator present and restarts the absence
    clock; otherwise absence grows from the last valid sample and presence
    drops exactly when it reaches the timeout.
    """
    if sample is not None and sample.valid:
        return PresenceState(present=True,
                             last_valid_t_ms=sample.t_ms,
                             absence_ms=max(0, now_ms - sample.t_ms))
    # hysteresis: the clock alone can only ever drop presence; a fresh
    # valid sample is the one way back up
    absence = max(0, now_ms - state.last_valid_t_ms)
    return replace(state,
                   present=state.present and absence < absence_timeout_ms,
                   absence_ms=absence)


def dropout_filter(samples: list[GazeSample],
                   max_gap_ms: int) -> list[GazeSample]:
    """Bridge short invalid gaps by linear interpolation.

    An invalid run is bridged only when bracketed by valid samples less
    than max_gap_ms apart; longer runs (and runs without a bracket) pass
    through untouched so presence logic can see them. Originally-valid
    samples are never modified.
    """
    out = list(samples)
    n = len(out)
    i = 0
    while i < n:
        if out[i].valid:
            i += 1
            continue
        run_start = i
        while i < n and not out[i].valid:
            i += 1
        run_end = i  # one past the invalid run
        if run_start == 0 or run_end == n:
            continue
        left = out[run_start - 1]
        right = out[run_end]
        gap = right.t_ms - left.t_ms
        if gap >= max_gap_ms or gap <= 0:
            continue
        for k in range(run_start, run_end):
            f = (out[k].t_ms - left.t_ms) / gap
            out[k] = GazeSample(
                t_ms=out[k].t_ms,
                x=left.x + (right.x - left.x) * f,
                y=left.y + (right.y - left.y) * f,
                valid=True,
                source_id=out[k].source_id,
            )
    return out


class DropoutBridger:
    """Streaming counterpart of dropout_filter for one gaze source.

    Invalid samples are held back until either a valid sample closes the
    gap (then they are emitted interpolated) or the gap has grown too wide
    to ever be bridged (then they are emitted untouched). Output order is
    always timestamp order; the added latency is bounded by max_gap_ms.
    """

    def __init__(self, max_gap_ms: int):
        self.max_gap_ms = max_gap_ms
        self._last_valid: GazeSample | None = None
        self._pending: list[GazeSample] = []

    def push(self, sample: GazeSample, now_ms: int) -> list[GazeSample]:
        if not sample.valid:
            out = self.poll(now_ms)
            self._pending.append(sample)
            return out
        # the bridge decision depends only on the bracketing gap, never on
        # the clock, so it must run before any staleness flush
        out: list[GazeSample] = []
        if self._pending:
            left = self._last_valid
            gap = sample.t_ms - left.t_ms if left is not None else 0
            if left is not None and 0 < gap < self.max_gap_ms:
                for p in self._pending:
                    f = (p.t_ms - left.t_ms) / gap
                    out.append(GazeSample(
                        t_ms=p.t_ms,
                        x=left.x + (sample.x - left.x) * f,
                        y=left.y + (sample.y - left.y) * f,
                        valid=True,
                        source_id=p.source_id,
                    ))
            else:
                out.extend(self._pending)
            self._pending = []
        self._last_valid = sample
        out.append(sample)
        return out

    def poll(self, now_ms: int) -> list[GazeSample]:
        """Release pending invalids whose gap can no longer be bridged."""
        if not self._pending:
            return []
        if self._last_valid is None or \
                now_ms - self._last_valid.t_ms >= self.max_gap_ms:
            out = self._pending
            self._pending = []
            return out
        return []
