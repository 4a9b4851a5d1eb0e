"""Session configuration: one versioned JSON document, validated at load.

Every tunable named across the engine lives here so a session is fully
described by (config, gaze log, session seed). Validation reports the
offending field by dotted path; defaults apply per-field, so `{}` is a
valid config.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .interpolate import EASINGS
from .prompts import NonMonotoneSchedule, Prompt, PromptDeck, validate_schedule

SCHEMA_VERSION = 1

DEFAULT_PROMPT_TEXTS = (
    "mining",
    "catastrophe",
    "industrial pollution",
    "deforestation",
    "urban sprawl",
    "oil refinery",
    "wildfire aftermath",
    "flooded streets",
)

DEFAULT_SCENE_PROMPTS = (
    "pristine mountain lake at dawn",
    "untouched old-growth forest in morning mist",
    "expansive desert dunes under a clear sky",
    "tranquil coastal cliffs with turquoise water",
    "alpine meadow in full bloom",
)


class ConfigInvalid(ValueError):
    """Configuration rejected; message names the offending field."""


@dataclass(frozen=True)
class GazeConfig:
    absence_timeout_ms: int = 5000
    max_gap_ms: int = 300


@dataclass(frozen=True)
class AttentionConfig:
    grid_w: int = 64
    grid_h: int = 64
    half_life_ms: int = 4000
    sigma: float = 0.04
    dispersion_threshold: float = 0.03
    min_fixation_ms: int = 100
    deposit_cap_ms: int = 100


@dataclass(frozen=True)
class MaskConfig:
    activation_threshold: float = 0.008
    feather_px: int = 24
    pad_px: int = 16
    min_side_px: int = 160


@dataclass(frozen=True)
class PromptConfig:
    deck: tuple[Prompt, ...] = tuple(Prompt(t) for t in DEFAULT_PROMPT_TEXTS)
    stage_schedule_ms: tuple[int, ...] = (8000, 5000, 3000)
    cycles_per_stage: int = 3


@dataclass(frozen=True)
class GenerationConfig:
    backend: str = "procedural"
    endpoint: str = ""
    timeout_ms: int = 15000
    strength: float = 0.85
    retry_limit: int = 3


@dataclass(frozen=True)
class TransitionConfig:
    frame_count: int = 12
    frame_interval_ms: int = 40
    easing: str = "smoothstep"


@dataclass(frozen=True)
class ServerConfig:
    listen: str = "127.0.0.1:8750"
    log_dir: str = ""
    debug_hz: float = 10.0
    time_scale: float = 1.0


@dataclass(frozen=True)
class SessionConfig:
    canvas_w: int = 512
    canvas_h: int = 512
    session_seed: int = 1
    tick_interval_ms: int = 33
    gaze: GazeConfig = field(default_factory=GazeConfig)
    attention: AttentionConfig = field(default_factory=AttentionConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)
    prompts: PromptConfig = field(default_factory=PromptConfig)
    scene_prompts: tuple[str, ...] = DEFAULT_SCENE_PROMPTS
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    transition: TransitionConfig = field(default_factory=TransitionConfig)
    server: ServerConfig = field(default_factory=ServerConfig)

    def prompt_deck(self) -> PromptDeck:
        return PromptDeck(prompts=self.prompts.deck,
                          rng_seed=self.session_seed)


def _expect(d: dict, key: str, kind, default, path: str):
    if key not in d:
        return default
    val = d[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is int and isinstance(val, bool):
        raise ConfigInvalid(f"{path}.{key}: expected {kind.__name__}, got bool")
    if not isinstance(val, kind):
        raise ConfigInvalid(
            f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _positive(value, path: str):
    if value <= 0:
        raise ConfigInvalid(f"{path}: must be positive, got {value}")
    return value


def config_from_dict(doc: dict) -> SessionConfig:
    if not isinstance(doc, dict):
        raise ConfigInvalid("config root: expected a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigInvalid(
            f"schema_version: expected {SCHEMA_VERSION}, got {version}")

    canvas = doc.get("canvas", {})
    gaze = doc.get("gaze", {})
    att = doc.get("attention", {})
    mask = doc.get("mask", {})
    pr = doc.get("prompts", {})
    gen = doc.get("generation", {})
    tr = doc.get("transition", {})
    srv = doc.get("server", {})

    deck_doc = pr.get("deck")
    if deck_doc is None:
        deck = PromptConfig().deck
    else:
        if not isinstance(deck_doc, list) or not deck_doc:
            raise ConfigInvalid("prompts.deck: expected a non-empty list")
        deck = []
        for i, entry in enumerate(deck_doc):
            path = f"prompts.deck[{i}]"
            if isinstance(entry, str):
                deck.append(Prompt(entry))
                continue
            if not isinstance(entry, dict) or "text" not in entry:
                raise ConfigInvalid(f"{path}: expected string or object with 'text'")
            deck.append(Prompt(
                text=_expect(entry, "text", str, "", path),
                weight=_expect(entry, "weight", float, 1.0, path),
                min_stage=_expect(entry, "min_stage", int, 0, path),
            ))
        deck = tuple(deck)

    schedule = pr.get("stage_schedule_ms", list(PromptConfig().stage_schedule_ms))
    if not isinstance(schedule, list) or \
            not all(isinstance(v, int) and not isinstance(v, bool) for v in schedule):
        raise ConfigInvalid("prompts.stage_schedule_ms: expected a list of integers")

    scene_prompts = doc.get("scene_prompts", list(DEFAULT_SCENE_PROMPTS))
    if not isinstance(scene_prompts, list) or not scene_prompts or \
            not all(isinstance(s, str) for s in scene_prompts):
        raise ConfigInvalid("scene_prompts: expected a non-empty list of strings")

    cfg = SessionConfig(
        canvas_w=_positive(_expect(canvas, "width", int, 512, "canvas"),
                           "canvas.width"),
        canvas_h=_positive(_expect(canvas, "height", int, 512, "canvas"),
                           "canvas.height"),
        session_seed=_expect(doc, "session_seed", int, 1, "config"),
        tick_interval_ms=_positive(
            _expect(doc, "tick_interval_ms", int, 33, "config"),
            "tick_interval_ms"),
        gaze=GazeConfig(
            absence_timeout_ms=_positive(
                _expect(gaze, "absence_timeout_ms", int, 5000, "gaze"),
                "gaze.absence_timeout_ms"),
            max_gap_ms=_positive(
                _expect(gaze, "max_gap_ms", int, 300, "gaze"),
                "gaze.max_gap_ms"),
        ),
        attention=AttentionConfig(
            grid_w=_positive(_expect(att, "grid_w", int, 64, "attention"),
                             "attention.grid_w"),
            grid_h=_positive(_expect(att, "grid_h", int, 64, "attention"),
                             "attention.grid_h"),
            half_life_ms=_positive(
                _expect(att, "half_life_ms", int, 4000, "attention"),
                "attention.half_life_ms"),
            sigma=_positive(_expect(att, "sigma", float, 0.04, "attention"),
                            "attention.sigma"),
            dispersion_threshold=_positive(
                _expect(att, "dispersion_threshold", float, 0.03, "attention"),
                "attention.dispersion_threshold"),
            min_fixation_ms=_positive(
                _expect(att, "min_fixation_ms", int, 100, "attention"),
                "attention.min_fixation_ms"),
            deposit_cap_ms=_positive(
                _expect(att, "deposit_cap_ms", int, 100, "attention"),
                "attention.deposit_cap_ms"),
        ),
        mask=MaskConfig(
            activation_threshold=_positive(
                _expect(mask, "activation_threshold", float, 0.008, "mask"),
                "mask.activation_threshold"),
            feather_px=_expect(mask, "feather_px", int, 24, "mask"),
            pad_px=_expect(mask, "pad_px", int, 16, "mask"),
            min_side_px=_expect(mask, "min_side_px", int, 160, "mask"),
        ),
        prompts=PromptConfig(
            deck=deck,
            stage_schedule_ms=tuple(schedule),
            cycles_per_stage=_positive(
                _expect(pr, "cycles_per_stage", int, 3, "prompts"),
                "prompts.cycles_per_stage"),
        ),
        scene_prompts=tuple(scene_prompts),
        generation=GenerationConfig(
            backend=_expect(gen, "backend", str, "procedural", "generation"),
            endpoint=_expect(gen, "endpoint", str, "", "generation"),
            timeout_ms=_positive(
                _expect(gen, "timeout_ms", int, 15000, "generation"),
                "generation.timeout_ms"),
            strength=_expect(gen, "strength", float, 0.85, "generation"),
            retry_limit=_expect(gen, "retry_limit", int, 3, "generation"),
        ),
        transition=TransitionConfig(
            frame_count=_expect(tr, "frame_count", int, 12, "transition"),
            frame_interval_ms=_positive(
                _expect(tr, "frame_interval_ms", int, 40, "transition"),
                "transition.frame_interval_ms"),
            easing=_expect(tr, "easing", str, "smoothstep", "transition"),
        ),
        server=ServerConfig(
            listen=_expect(srv, "listen", str, "127.0.0.1:8750", "server"),
            log_dir=_expect(srv, "log_dir", str, "", "server"),
            debug_hz=_positive(_expect(srv, "debug_hz", float, 10.0, "server"),
                               "server.debug_hz"),
            time_scale=_positive(
                _expect(srv, "time_scale", float, 1.0, "server"),
                "server.time_scale"),
        ),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: SessionConfig) -> None:
    try:
        validate_schedule(list(cfg.prompts.stage_schedule_ms))
    except NonMonotoneSchedule as exc:
        raise ConfigInvalid(f"prompts.stage_schedule_ms: {exc}") from exc
    try:
        cfg.prompt_deck()
    except ValueError as exc:
        raise ConfigInvalid(f"prompts.deck: {exc}") from exc
    if cfg.generation.backend not in ("procedural", "network"):
        raise ConfigInvalid(
            f"generation.backend: must be 'procedural' or 'network', "
            f"got {cfg.generation.backend!r}")
    if cfg.generation.backend == "network" and not cfg.generation.endpoint:
        raise ConfigInvalid("generation.endpoint: required for network backend")
    if not (0.0 < cfg.generation.strength <= 1.0):
        raise ConfigInvalid(
            f"generation.strength: must be in (0, 1], got {cfg.generation.strength}")
    if cfg.generation.retry_limit < 0:
        raise ConfigInvalid("generation.retry_limit: must be non-negative")
    if cfg.transition.frame_count < 2:
        raise ConfigInvalid("transition.frame_count: must be at least 2")
    if cfg.transition.easing not in EASINGS:
        raise ConfigInvalid(
            f"transition.easing: must be one of {EASINGS}, "
            f"got {cfg.transition.easing!r}")
    if cfg.mask.feather_px < 0:
        raise ConfigInvalid("mask.feather_px: must be non-negative")
    if cfg.mask.pad_px < 0:
        raise ConfigInvalid("mask.pad_px: must be non-negative")
    if cfg.mask.min_side_px < 0:
        raise ConfigInvalid("mask.min_side_px: must be non-negative")


def apply_env_overrides(cfg: SessionConfig,
                        env: dict[str, str] | None = None) -> SessionConfig:
    """ENGINE_LOG_DIR / ENGINE_LISTEN take precedence over the file."""
    env = os.environ if env is None else env
    srv = cfg.server
    log_dir = env.get("ENGINE_LOG_DIR")
    listen = env.get("ENGINE_LISTEN")
    if log_dir is None and listen is None:
        return cfg
    srv = ServerConfig(
        listen=listen if listen is not None else srv.listen,
        log_dir=log_dir if log_dir is not None else srv.log_dir,
        debug_hz=srv.debug_hz,
        time_scale=srv.time_scale,
    )
    return _replace_server(cfg, srv)


def _replace_server(cfg: SessionConfig, srv: ServerConfig) -> SessionConfig:
    from dataclasses import replace
    return replace(cfg, server=srv)


def load_config(path: str, env: dict[str, str] | None = None) -> SessionConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path!r} is not valid JSON: {exc}") from exc
    return apply_env_overrides(config_from_dict(doc), env)


def config_to_dict(cfg: SessionConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "canvas": {"width": cfg.canvas_w, "height": cfg.canvas_h},
        "session_seed": cfg.session_seed,
        "tick_interval_ms": cfg.tick_interval_ms,
        "gaze": {
            "absence_timeout_ms": cfg.gaze.absence_timeout_ms,
            "max_gap_ms": cfg.gaze.max_gap_ms,
        },
        "attention": {
            "grid_w": cfg.attention.grid_w,
            "grid_h": cfg.attention.grid_h,
            "half_life_ms": cfg.attention.half_life_ms,
            "sigma": cfg.attention.sigma,
            "dispersion_threshold": cfg.attention.dispersion_threshold,
            "min_fixation_ms": cfg.attention.min_fixation_ms,
            "deposit_cap_ms": cfg.attention.deposit_cap_ms,
        },
        "mask": {
            "activation_threshold": cfg.mask.activation_threshold,
            "feather_px": cfg.mask.feather_px,
            "pad_px": cfg.mask.pad_px,
            "min_side_px": cfg.mask.min_side_px,
        },
        "prompts": {
            "deck": [{"text": p.text, "weight": p.weight,
                      "min_stage": p.min_stage} for p in cfg.prompts.deck],
            "stage_schedule_ms": list(cfg.prompts.stage_schedule_ms),
            "cycles_per_stage": cfg.prompts.cycles_per_stage,
        },
        "scene_prompts": list(cfg.scene_prompts),
        "generation": {
            "backend": cfg.generation.backend,
            "endpoint": cfg.generation.endpoint,
            "timeout_ms": cfg.generation.timeout_ms,
            "strength": cfg.generation.strength,
            "retry_limit": cfg.generation.retry_limit,
        },
        "transition": {
            "frame_count": cfg.transition.frame_count,
            "frame_interval_ms": cfg.transition.frame_interval_ms,
            "easing": cfg.transition.easing,
        },
        "server": {
            "listen": cfg.server.listen,
            "log_dir": cfg.server.log_dir,
            "debug_hz": cfg.server.debug_hz,
            "time_scale": cfg.server.time_scale,
        },
    }
