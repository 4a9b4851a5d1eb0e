"""Canvas transitions as finite frame sequences.

Every canvas change is shown as a short morph from the old image to the
new one. The analytic backend blends per-pixel with an easing curve; any
backend must keep the endpoint contract - frame 0 is the old image and
frame K-1 the new one, bit for bit - so preemption can always restart
from whatever is currently on screen without a visual jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels

EASINGS = ("linear", "smoothstep")


class IndexOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class Transition:
    frm: np.ndarray
    to: np.ndarray
    frame_count: int
    easing: str = "smoothstep"
    frame_interval_ms: int = 40
    cycle: int = 0

    def __post_init__(self):
        if self.frame_count < 2:
            raise ValueError("frame_count must be at least 2")
        if self.frm.shape != self.to.shape:
            raise ValueError(
                f"transition endpoints differ: {self.frm.shape} vs {self.to.shape}")
        if self.easing not in EASINGS:
            raise ValueError(f"unknown easing {self.easing!r}")
        if self.frame_interval_ms <= 0:
            raise ValueError("frame_interval_ms must be positive")


def _ease(easing: str, u: float) -> float:
    if easing == "linear":
        return u
    return u * u * (3.0 - 2.0 * u)


def frame_at(tr: Transition, i: int) -> np.ndarray:
    """Frame i of the transition; endpoints are returned bit-exact."""
    if not (0 <= i < tr.frame_count):
        raise IndexOutOfRange(f"frame {i} outside [0, {tr.frame_count})")
    if i == 0:
        return tr.frm.copy()
    if i == tr.frame_count - 1:
        return tr.to.copy()
    u = i / (tr.frame_count - 1)
    return _kernels.blend_u8_scalar(tr.frm, tr.to, _ease(tr.easing, u))


def stream_transition(tr: Transition, emit: Callable[[int, np.ndarray], None],
                      sleep: Callable[[float], None]) -> int:
    """Emit all frames in order at the configured pace; returns the count.

    `sleep` is injected so tests can drive it with a virtual clock."""
    for i in range(tr.frame_count):
        emit(i, frame_at(tr, i))
        if i < tr.frame_count - 1:
            sleep(tr.frame_interval_ms / 1000.0)
    return tr.frame_count


@dataclass(frozen=True)
class FrameEvent:
    cycle: int
    frame: int
    of: int
    image: np.ndarray

    def header(self) -> dict:
        return {"cycle": self.cycle, "frame": self.frame, "of": self.of}


class FramePacer:
    """Schedules transition frames against a millisecond clock.

    Single publisher to the frame stream. A new transition preempts the
    current one starting from the currently displayed frame, so the pixel
    stream never jumps backwards.
    """

    def __init__(self):
        self._tr: Transition | None = None
        self._next_index = 0
        self._next_due_ms: int | None = None
        self._displayed: np.ndarray | None = None
        self._immediate: list[FrameEvent] = []

    @property
    def displayed(self) -> np.ndarray | None:
        return self._displayed

    @property
    def active(self) -> bool:
        return self._tr is not None

    def start(self, tr: Transition, now_ms: int) -> None:
        if self._displayed is not None:
            tr = Transition(frm=self._displayed, to=tr.to,
                            frame_count=tr.frame_count, easing=tr.easing,
                            frame_interval_ms=tr.frame_interval_ms,
                            cycle=tr.cycle)
        self._tr = tr
        self._next_index = 0
        self._next_due_ms = now_ms

    def cut(self, image: np.ndarray, cycle: int) -> None:
        """Show an image immediately, cancelling any running transition."""
        self._tr = None
        self._next_due_ms = None
        self._displayed = image
        self._immediate.append(FrameEvent(cycle=cycle, frame=0, of=1,
                                          image=image))

    def poll(self, now_ms: int) -> list[FrameEvent]:
        """All frames due by now_ms, in order."""
        out: list[FrameEvent] = self._immediate
        self._immediate = []
        while (self._tr is not None and self._next_due_ms is not None
               and now_ms >= self._next_due_ms):
            tr = self._tr
            img = frame_at(tr, self._next_index)
            out.append(FrameEvent(cycle=tr.cycle, frame=self._next_index,
                                  of=tr.frame_count, image=img))
            self._displayed = img
            self._next_index += 1
            if self._next_index >= tr.frame_count:
                self._tr = None
                self._next_due_ms = None
            else:
                self._next_due_ms += tr.frame_interval_ms
        return out
