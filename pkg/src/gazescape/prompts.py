"""Prompt selection and the slow-then-fast transformation schedule.

Prompts are drawn by weighted pseudo-random choice from a counter-keyed
generator, so a replayed session picks the identical prompt at every
cycle. Stage gating (min_stage) lets a deck hold its harshest prompts
back until the landscape is already damaged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .rng import mix64, unit_float


class NonMonotoneSchedule(ValueError):
    """Stage schedule speeds must never increase with progression."""


@dataclass(frozen=True)
class Prompt:
    text: str
    weight: float = 1.0
    min_stage: int = 0


@dataclass(frozen=True)
class PromptDeck:
    prompts: tuple[Prompt, ...]
    rng_seed: int

    def __post_init__(self):
        if not self.prompts:
            raise ValueError("prompt deck must not be empty")
        for p in self.prompts:
            if p.weight <= 0:
                raise ValueError(f"prompt {p.text!r} has non-positive weight")
            if p.min_stage < 0:
                raise ValueError(f"prompt {p.text!r} has negative min_stage")
        if not any(p.min_stage == 0 for p in self.prompts):
            raise ValueError("at least one prompt must have min_stage 0")


@dataclass(frozen=True)
class StageState:
    transform_count: int = 0
    stage: int = 0
    cycle_interval_ms: int = 0


def make_stage_state(schedule: list[int], cycles_per_stage: int) -> StageState:
    validate_schedule(schedule)
    if cycles_per_stage <= 0:
        raise ValueError("cycles_per_stage must be positive")
    return StageState(transform_count=0, stage=0,
                      cycle_interval_ms=schedule[0])


def validate_schedule(schedule: list[int]) -> None:
    if not schedule:
        raise NonMonotoneSchedule("stage schedule must not be empty")
    for interval in schedule:
        if interval <= 0:
            raise NonMonotoneSchedule(
                f"stage interval must be positive, got {interval}")
    for a, b in zip(schedule, schedule[1:]):
        if b > a:
            raise NonMonotoneSchedule(
                f"stage schedule must be non-increasing, got {a} -> {b}")


def advance(state: StageState, schedule: list[int],
            cycles_per_stage: int) -> StageState:
    """Count one completed transformation and recompute stage + interval."""
    count = state.transform_count + 1
    stage = count // cycles_per_stage
    interval = schedule[min(stage, len(schedule) - 1)]
    return StageState(transform_count=count, stage=stage,
                      cycle_interval_ms=interval)


def reset_stage(state: StageState, schedule: list[int]) -> StageState:
    """Regeneration: back to the slow opening pace."""
    return replace(state, transform_count=0, stage=0,
                   cycle_interval_ms=schedule[0])


def next_prompt(deck: PromptDeck, state: StageState, cycle_index: int) -> str:
    """Weighted draw among stage-eligible prompts, keyed by (seed, cycle).

    The same (deck, stage, cycle_index) always yields the same prompt; the
    deck invariant guarantees the eligible set is never empty.
    """
    eligible = [p for p in deck.prompts if p.min_stage <= state.stage]
    u = unit_float(mix64(deck.rng_seed, cycle_index))
    total = sum(p.weight for p in eligible)
    acc = 0.0
    for p in eligible:
        acc += p.weight
        if u * total < acc:
            return p.text
    return eligible[-1].text
