"""Fixation detection and the decaying dwell-energy field.

The attention field is a coarse grid of dwell energy (seconds-equivalent)
over the canvas. Valid gaze deposits Gaussian splats weighted by the
inter-sample interval; completed fixations deposit their full duration at
the centroid. Energy decays exponentially so the field always describes
*recent* lingering, not session history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gaze import GazeSample


@dataclass(frozen=True)
class Fixation:
    cx: float
    cy: float
    start_ms: int
    end_ms: int
    dispersion: float

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


class AttentionField:
    """Dwell-energy grid. Single writer (the session tick); readers get
    copies via snapshot()."""

    def __init__(self, grid_w: int = 64, grid_h: int = 64,
                 half_life_ms: int = 4000):
        if grid_w <= 0 or grid_h <= 0:
            raise ValueError("grid dimensions must be positive")
        if half_life_ms <= 0:
            raise ValueError("half_life_ms must be positive")
        self.grid = np.zeros((grid_h, grid_w), dtype=np.float64)
        self.half_life_ms = half_life_ms

    @property
    def grid_w(self) -> int:
        return self.grid.shape[1]

    @property
    def grid_h(self) -> int:
        return self.grid.shape[0]

    def total_energy(self) -> float:
        return float(self.grid.sum())

    def snapshot(self) -> np.ndarray:
        return self.grid.copy()

    def reset(self) -> None:
        self.grid[:] = 0.0


def deposit(field: AttentionField, x: float, y: float,
            weight: float, sigma: float) -> AttentionField:
    """Add a Gaussian splat of total energy `weight` centered at (x, y).

    The splat is renormalized over in-bounds cells, so energy is conserved
    even at canvas corners. Cells beyond 3 sigma are untouched.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"deposit point ({x}, {y}) outside canvas")
    if weight <= 0.0:
        raise ValueError("weight must be positive")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    _kernels.splat_add(field.grid, x, y, weight, sigma)
    return field


def decay(field: AttentionField, dt_ms: int) -> AttentionField:
    """Multiply every cell by 2^(-dt/half_life)."""
    if dt_ms < 0:
        raise ValueError("dt_ms must be non-negative")
    if dt_ms == 0:
        return field
    field.grid *= 2.0 ** (-dt_ms / field.half_life_ms)
    return field


def dwell_regions(field: AttentionField,
                  activation_threshold: float) -> set[tuple[int, int]]:
    """Cells whose energy has reached the threshold, as (row, col) pairs."""
    if activation_threshold <= 0.0:
        raise ValueError("activation_threshold must be positive")
    rows, cols = np.nonzero(field.grid >= activation_threshold)
    return {(int(r), int(c)) for r, c in zip(rows, cols)}


def detect_fixations(samples: list[GazeSample], dispersion_threshold: float,
                     min_duration_ms: int) -> list[Fixation]:
    """Dispersion-threshold fixation detection over a valid, time-ordered
    sample stream.

    Scans greedily from the left: each fixation is the maximal window whose
    dispersion (x-extent + y-extent) stays within the threshold and whose
    duration reaches the minimum; detection restarts after the window.
    """
    if not samples:
        return []
    t = np.array([s.t_ms for s in samples], dtype=np.int64)
    x = np.array([s.x for s in samples], dtype=np.float64)
    y = np.array([s.y for s in samples], dtype=np.float64)
    spans = _kernels.idt_scan(t, x, y, dispersion_threshold, min_duration_ms)

    fixations = []
    for i, j in spans:
        # sequential sums, so the streaming detector emits identical floats
        xs = x[i:j + 1].tolist()
        ys = y[i:j + 1].tolist()
        fixations.append(Fixation(
            cx=sum(xs) / len(xs),
            cy=sum(ys) / len(ys),
            start_ms=int(t[i]),
            end_ms=int(t[j]),
            dispersion=(max(xs) - min(xs)) + (max(ys) - min(ys)),
        ))
    return fixations


class StreamingFixationDetector:
    """Online fixation detector with the same greedy-left semantics as
    detect_fixations; emits each fixation the moment its window closes."""

    def __init__(self, dispersion_threshold: float, min_duration_ms: int):
        self.dispersion_threshold = dispersion_threshold
        self.min_duration_ms = min_duration_ms
        self._window: list[GazeSample] = []

    def _dispersion(self) -> float:
        xs = [s.x for s in self._window]
        ys = [s.y for s in self._window]
        return (max(xs) - min(xs)) + (max(ys) - min(ys))

    def _emit_window(self) -> Fixation:
        w = self._window
        xs = [s.x for s in w]
        ys = [s.y for s in w]
        return Fixation(
            cx=sum(xs) / len(xs),
            cy=sum(ys) / len(ys),
            start_ms=w[0].t_ms,
            end_ms=w[-1].t_ms,
            dispersion=(max(xs) - min(xs)) + (max(ys) - min(ys)),
        )

    def push(self, sample: GazeSample) -> list[Fixation]:
        """Feed one valid sample; returns fixations completed by it."""
        out: list[Fixation] = []
        self._window.append(sample)
        while len(self._window) > 1 and self._dispersion() > self.dispersion_threshold:
            closed = self._window[:-1]
            if closed[-1].t_ms - closed[0].t_ms >= self.min_duration_ms:
                keep = self._window[-1]
                self._window = closed
                out.append(self._emit_window())
                self._window = [keep]
            else:
                self._window = self._window[1:]
        return out

    def flush(self) -> list[Fixation]:
        """Close the open window (tracking lost or stream over)."""
        out: list[Fixation] = []
        if self._window and \
                self._window[-1].t_ms - self._window[0].t_ms >= self.min_duration_ms:
            out.append(self._emit_window())
        self._window = []
        return out
