"""The engine state machine: one deterministic tick at a time.

All semantic time lives on the tick grid (k * tick_interval_ms from
session start). The tick consumes the gaze samples and generation
completions delivered since the previous tick and returns explicit action
values (start a generation, publish a transition, log an event) - it never
touches a clock, a socket, or a thread, which is what makes a session a
pure function of its gaze log and config.

Mode machine: Attended <-> Absent on gaze presence; Regenerating is
entered from Absent via the idle timeout (or at startup) and left when the
fresh landscape lands. The idle timer advances by exactly the timeout per
regeneration, not to the tick that fired it, so long-idle sessions
regenerate on an exact cadence instead of drifting by a tick each time.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .attention import AttentionField, StreamingFixationDetector, decay, deposit
from .config import SessionConfig
from .events import SessionEvent
from .gaze import DropoutBridger, GazeSample, PresenceState, update_presence
from .generation import GenerationRequest, build_inpaint_request, composite
from .imgio import image_hash
from .masks import InpaintMask, build_mask_detail
from .prompts import StageState, advance, make_stage_state, next_prompt, reset_stage
from .rng import mix64

_REGEN_SEED_DOMAIN = 1 << 32


class Mode(Enum):
    ATTENDED = "attended"
    ABSENT = "absent"
    REGENERATING = "regenerating"


@dataclass(frozen=True)
class PendingGeneration:
    token: int
    kind: str  # "inpaint" | "full_scene"
    index: int  # cycle_index for inpaint, regen_index for full_scene
    request: GenerationRequest
    started_ms: int
    attempt: int = 0
    bbox: tuple[int, int, int, int] | None = None
    mask: InpaintMask | None = None
    fired_cells: frozenset[tuple[int, int]] = frozenset()


@dataclass(frozen=True)
class GenerationCompletion:
    token: int
    image: np.ndarray | None = None
    error_kind: str | None = None
    error_msg: str | None = None


@dataclass(frozen=True)
class StartGeneration:
    pending: PendingGeneration


@dataclass(frozen=True)
class PublishTransition:
    frm: np.ndarray | None  # None: hard cut (first canvas ever)
    to: np.ndarray
    cycle: int


@dataclass(frozen=True)
class LogEvent:
    event: SessionEvent
    images: tuple[tuple[str, np.ndarray], ...] = ()


@dataclass(frozen=True)
class EmitDebug:
    snapshot: dict


Action = StartGeneration | PublishTransition | LogEvent | EmitDebug


@dataclass
class _SourceState:
    bridger: DropoutBridger
    detector: StreamingFixationDetector
    prev_valid: GazeSample | None = None


class Engine:
    """Owns EngineState; mutated only through tick()."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.mode = Mode.ABSENT
        self.canvas: np.ndarray | None = None
        self.attention = AttentionField(config.attention.grid_w,
                                        config.attention.grid_h,
                                        config.attention.half_life_ms)
        self.presence = PresenceState()
        self.stage: StageState = make_stage_state(
            list(config.prompts.stage_schedule_ms),
            config.prompts.cycles_per_stage)
        self.cycle_index = 0
        self.regen_index = 0
        self.pending: PendingGeneration | None = None
        self.region_counts = np.zeros(
            (config.attention.grid_h, config.attention.grid_w), dtype=np.int64)

        self.last_cycle_anchor_ms = 0
        self.idle_regen_due_ms: int | None = None
        self.last_prompt: str = ""
        self.last_tick_ms: int | None = None
        self._token_counter = 0
        self._sources: dict[int, _SourceState] = {}
        self._booted = False
        self._debug_due_ms = 0
        self._recent_gaze: list[tuple[int, float, float]] = []

    # -- helpers -----------------------------------------------------------

    def _source(self, source_id: int) -> _SourceState:
        st = self._sources.get(source_id)
        if st is None:
            st = _SourceState(
                bridger=DropoutBridger(self.config.gaze.max_gap_ms),
                detector=StreamingFixationDetector(
                    self.config.attention.dispersion_threshold,
                    self.config.attention.min_fixation_ms),
            )
            self._sources[source_id] = st
        return st

    def _next_token(self) -> int:
        self._token_counter += 1
        return self._token_counter

    def _scene_prompt(self, regen_index: int) -> str:
        prompts = self.config.scene_prompts
        pick = mix64(self.config.session_seed,
                     _REGEN_SEED_DOMAIN + regen_index) % len(prompts)
        return prompts[pick]

    def _start_regeneration(self, now_ms: int, attempt: int,
                            regen_index: int, actions: list[Action]) -> None:
        prompt = self._scene_prompt(regen_index)
        seed = (mix64(self.config.session_seed,
                      _REGEN_SEED_DOMAIN + 2 * regen_index + 1) + attempt) \
            & ((1 << 64) - 1)
        request = GenerationRequest(
            kind="full_scene", prompt=prompt, seed=seed, strength=1.0,
            width=self.config.canvas_w, height=self.config.canvas_h)
        self.pending = PendingGeneration(
            token=self._next_token(), kind="full_scene", index=regen_index,
            request=request, started_ms=now_ms, attempt=attempt)
        self.mode = Mode.REGENERATING
        actions.append(LogEvent(SessionEvent(now_ms, "CycleStarted", {
            "kind": "full_scene", "regen_index": regen_index,
            "prompt": prompt, "attempt": attempt})))
        actions.append(StartGeneration(self.pending))

    # -- the tick ----------------------------------------------------------

    def tick(self, now_ms: int, samples: list[GazeSample],
             completions: list[GenerationCompletion]) -> list[Action]:
        cfg = self.config
        actions: list[Action] = []
        was_present = self.presence.present

        # startup behaves as a regeneration: fresh landscape on boot
        if not self._booted:
            self._booted = True
            self.last_cycle_anchor_ms = now_ms
            self._start_regeneration(now_ms, attempt=0,
                                     regen_index=self.regen_index,
                                     actions=actions)
            self.regen_index += 1

        # 1) dropout-filter the drained samples, in time order
        resolved: list[GazeSample] = []
        for s in sorted(samples, key=lambda s: s.t_ms):
            resolved.extend(self._source(s.source_id).bridger.push(s, now_ms))
        for st in self._sources.values():
            resolved.extend(st.bridger.poll(now_ms))
        resolved.sort(key=lambda s: s.t_ms)

        if samples:
            n_valid = sum(1 for s in samples if s.valid)
            # the raw batch rides along so an event log alone can replay
            actions.append(LogEvent(SessionEvent(now_ms, "GazeBatch", {
                "n": len(samples), "valid": n_valid,
                "samples": [[s.t_ms, s.x, s.y, s.valid, s.source_id]
                            for s in sorted(samples, key=lambda s: s.t_ms)]})))

        # 2) presence, fixation windows, attention deposits
        fixations = []
        for s in resolved:
            src = self._source(s.source_id)
            if s.valid:
                self.presence = update_presence(
                    self.presence, s, now_ms, cfg.gaze.absence_timeout_ms)
                fixations.extend(src.detector.push(s))
                prev = src.prev_valid
                if prev is not None:
                    dt = s.t_ms - prev.t_ms
                    if dt > 0:
                        w = min(dt, cfg.attention.deposit_cap_ms) / 1000.0
                        deposit(self.attention, s.x, s.y, w,
                                cfg.attention.sigma)
                src.prev_valid = s
                self._recent_gaze.append((s.t_ms, s.x, s.y))
            else:
                fixations.extend(src.detector.flush())
        if len(self._recent_gaze) > 64:
            self._recent_gaze = self._recent_gaze[-64:]

        for fx in fixations:
            deposit(self.attention, fx.cx, fx.cy,
                    max(fx.duration_ms, 1) / 1000.0, cfg.attention.sigma)
            actions.append(LogEvent(SessionEvent(now_ms, "FixationDetected", {
                "cx": fx.cx, "cy": fx.cy, "start_ms": fx.start_ms,
                "end_ms": fx.end_ms, "dispersion": fx.dispersion})))

        # clock-only presence update (absence keeps growing without samples)
        self.presence = update_presence(self.presence, None, now_ms,
                                        cfg.gaze.absence_timeout_ms)
        if self.presence.present and not was_present:
            actions.append(LogEvent(SessionEvent(
                now_ms, "PresenceRegained", {})))
            self.idle_regen_due_ms = None
        elif was_present and not self.presence.present:
            actions.append(LogEvent(SessionEvent(now_ms, "PresenceLost", {
                "absence_ms": self.presence.absence_ms})))

        # 3) decay
        if self.last_tick_ms is not None and now_ms > self.last_tick_ms:
            decay(self.attention, now_ms - self.last_tick_ms)
        self.last_tick_ms = now_ms

        in_regen = self.pending is not None and self.pending.kind == "full_scene"
        if not in_regen:
            self.mode = Mode.ATTENDED if self.presence.present else Mode.ABSENT

        # 4) idle regeneration on the timeout metronome
        if not self.presence.present or self.canvas is None:
            if self.idle_regen_due_ms is None:
                self.idle_regen_due_ms = (self.presence.last_valid_t_ms
                                          + cfg.gaze.absence_timeout_ms)
            regen_in_flight = (self.pending is not None
                               and self.pending.kind == "full_scene")
            if now_ms >= self.idle_regen_due_ms and not regen_in_flight:
                # an in-flight inpaint is abandoned here: replacing the
                # pending token makes its eventual completion a no-op
                self._start_regeneration(now_ms, attempt=0,
                                         regen_index=self.regen_index,
                                         actions=actions)
                self.regen_index += 1
                self.idle_regen_due_ms += cfg.gaze.absence_timeout_ms
        else:
            self.idle_regen_due_ms = None

        # 5) start an inpaint cycle when attended, free, due, and charged
        if (self.mode is Mode.ATTENDED and self.pending is None
                and self.canvas is not None
                and now_ms - self.last_cycle_anchor_ms
                >= self.stage.cycle_interval_ms):
            detail = build_mask_detail(self.attention, cfg.canvas_w,
                                       cfg.canvas_h,
                                       cfg.mask.activation_threshold,
                                       cfg.mask.feather_px)
            if detail is not None:
                mask, fired = detail
                prompt = next_prompt(self.config.prompt_deck(), self.stage,
                                     self.cycle_index)
                self.last_prompt = prompt
                seed = mix64(cfg.session_seed, self.cycle_index)
                request, bbox = build_inpaint_request(
                    self.canvas, mask, prompt, seed,
                    cfg.generation.strength, cfg.mask.pad_px,
                    cfg.mask.min_side_px)
                self.pending = PendingGeneration(
                    token=self._next_token(), kind="inpaint",
                    index=self.cycle_index, request=request,
                    started_ms=now_ms, bbox=bbox, mask=mask,
                    fired_cells=fired)
                mask_u8 = mask.to_u8()
                actions.append(LogEvent(
                    SessionEvent(now_ms, "MaskEmitted", {
                        "cycle": self.cycle_index, "bbox": list(mask.bbox),
                        "mask": image_hash(mask_u8)}),
                    images=((image_hash(mask_u8), mask_u8),)))
                actions.append(LogEvent(SessionEvent(now_ms, "PromptChosen", {
                    "cycle": self.cycle_index, "prompt": prompt})))
                actions.append(LogEvent(SessionEvent(now_ms, "CycleStarted", {
                    "kind": "inpaint", "cycle": self.cycle_index,
                    "bbox": list(bbox), "seed": seed,
                    "interval_ms": self.stage.cycle_interval_ms,
                    "stage": self.stage.stage})))
                actions.append(StartGeneration(self.pending))
                self.last_cycle_anchor_ms = now_ms
                self.cycle_index += 1

        # 6) absorb completed generations
        for comp in completions:
            self._on_completion(comp, now_ms, actions)

        # 7) debug snapshot, throttled
        if now_ms >= self._debug_due_ms:
            self._debug_due_ms = now_ms + max(
                1, int(round(1000.0 / cfg.server.debug_hz)))
            actions.append(EmitDebug(self.debug_snapshot(now_ms)))

        return actions

    def _on_completion(self, comp: GenerationCompletion, now_ms: int,
                       actions: list[Action]) -> None:
        cfg = self.config
        if self.pending is None or comp.token != self.pending.token:
            return  # abandoned generation (superseded by a regeneration)
        pend = self.pending
        self.pending = None

        if comp.error_kind is not None:
            actions.append(LogEvent(SessionEvent(now_ms, "CycleFailed", {
                "kind": pend.kind, "index": pend.index,
                "attempt": pend.attempt, "error": comp.error_kind,
                "message": comp.error_msg or ""})))
            if pend.kind == "full_scene" and \
                    pend.attempt < cfg.generation.retry_limit:
                self._start_regeneration(now_ms, attempt=pend.attempt + 1,
                                         regen_index=pend.index,
                                         actions=actions)
            elif pend.kind == "full_scene":
                # retries exhausted: keep the previous canvas
                self.mode = (Mode.ATTENDED if self.presence.present
                             else Mode.ABSENT)
            return

        if pend.kind == "full_scene":
            old = self.canvas
            self.canvas = comp.image
            self.stage = reset_stage(self.stage,
                                     list(cfg.prompts.stage_schedule_ms))
            self.attention.reset()
            self.region_counts[:] = 0
            self.mode = Mode.ATTENDED if self.presence.present else Mode.ABSENT
            actions.append(LogEvent(SessionEvent(now_ms, "Regenerated", {
                "regen_index": pend.index, "trigger_ms": pend.started_ms,
                "canvas": image_hash(comp.image),
                "prompt": pend.request.prompt}),
                images=((image_hash(comp.image), comp.image),)))
            actions.append(PublishTransition(frm=old, to=comp.image,
                                             cycle=-1 - pend.index))
            actions.append(LogEvent(SessionEvent(
                now_ms, "TransitionStarted",
                {"cycle": -1 - pend.index, "kind": "full_scene"})))
        else:
            old = self.canvas
            new = composite(old, comp.image, pend.mask, pend.bbox)
            self.canvas = new
            self.stage = advance(self.stage,
                                 list(cfg.prompts.stage_schedule_ms),
                                 cfg.prompts.cycles_per_stage)
            for r, c in pend.fired_cells:
                self.region_counts[r, c] += 1
            actions.append(LogEvent(SessionEvent(now_ms, "CycleCompleted", {
                "cycle": pend.index, "canvas": image_hash(new),
                "transform_count": self.stage.transform_count,
                "stage": self.stage.stage,
                "interval_ms": self.stage.cycle_interval_ms}),
                images=((image_hash(new), new),)))
            actions.append(PublishTransition(frm=old, to=new,
                                             cycle=pend.index))
            actions.append(LogEvent(SessionEvent(
                now_ms, "TransitionStarted",
                {"cycle": pend.index, "kind": "inpaint"})))

    def debug_snapshot(self, now_ms: int) -> dict:
        """Reduced-resolution state snapshot for the /debug stream."""
        grid = self.attention.grid
        gh, gw = grid.shape
        fh, fw = max(1, gh // 16), max(1, gw // 16)
        small = grid[:gh - gh % fh, :gw - gw % fw]
        small = small.reshape(small.shape[0] // fh, fh,
                              small.shape[1] // fw, fw).max(axis=(1, 3))
        return {
            "t_ms": now_ms,
            "mode": self.mode.value,
            "stage": self.stage.stage,
            "transform_count": self.stage.transform_count,
            "cycle_index": self.cycle_index,
            "prompt": self.last_prompt,
            "present": self.presence.present,
            "absence_ms": self.presence.absence_ms,
            "regen_due_in_ms": (max(0, self.idle_regen_due_ms - now_ms)
                                if self.idle_regen_due_ms is not None else None),
            "attention": [[round(float(v), 4) for v in row] for row in small],
            "gaze": [{"t": t, "x": round(x, 4), "y": round(y, 4)}
                     for t, x, y in self._recent_gaze[-30:]],
            "canvas": image_hash(self.canvas) if self.canvas is not None else None,
        }
