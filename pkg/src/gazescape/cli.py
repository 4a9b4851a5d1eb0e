"""Command line entry points: serve, replay, validate-config."""

from __future__ import annotations

import errno
import json
import logging
import os
import sys
from dataclasses import replace

import click
import uvicorn

from .config import (ConfigInvalid, SessionConfig, apply_env_overrides,
                     config_from_dict, load_config)
from .events import read_event_log
from .replay import (ReplayDivergence, load_replay_source, recorded_hashes,
                     run_replay, verify_replay)
from .server import EngineHost, build_app


def _load(config_path: str | None) -> SessionConfig:
    if config_path:
        return load_config(config_path)
    return apply_env_overrides(config_from_dict({}))


def _apply_overrides(cfg: SessionConfig, backend: str | None,
                     listen: str | None, log_dir: str | None,
                     seed: int | None,
                     time_scale: float | None = None) -> SessionConfig:
    if backend:
        cfg = replace(cfg, generation=replace(cfg.generation, backend=backend))
    if listen:
        cfg = replace(cfg, server=replace(cfg.server, listen=listen))
    if log_dir:
        cfg = replace(cfg, server=replace(cfg.server, log_dir=log_dir))
    if seed is not None:
        cfg = replace(cfg, session_seed=seed)
    if time_scale is not None:
        cfg = replace(cfg, server=replace(cfg.server, time_scale=time_scale))
    return cfg


@click.group()
def main():
    """Gaze-steered generative landscape engine."""
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Session config JSON. Defaults apply without one.")
@click.option("--backend", type=click.Choice(["procedural", "network"]),
              default=None, help="Override the generation backend.")
@click.option("--listen", default=None, help="addr:port to bind.")
@click.option("--log-dir", default=None,
              help="Directory for events.jsonl, gaze.jsonl and PNG blobs.")
@click.option("--seed", type=int, default=None, help="Session seed override.")
@click.option("--time-scale", type=float, default=None,
              help="Wall-clock pacing multiplier (semantics unchanged).")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Directory with the built browser UI (serves / and /ui).")
@click.option("--replay", "replay_path", type=click.Path(exists=True),
              default=None,
              help="Feed gaze from a JSONL file instead of (or alongside) "
                   "the /gaze socket.")
def serve(config_path, backend, listen, log_dir, seed, time_scale, ui_dir,
          replay_path):
    """Run the live engine with its streaming endpoints."""
    try:
        cfg = _load(config_path)
        cfg = _apply_overrides(cfg, backend, listen, log_dir, seed, time_scale)
    except ConfigInvalid as exc:
        raise click.ClickException(str(exc)) from exc

    if ui_dir is None:
        candidate = os.path.join(os.getcwd(), "frontend", "dist")
        ui_dir = candidate if os.path.isdir(candidate) else None

    host_addr, _, port_s = cfg.server.listen.rpartition(":")
    if not host_addr or not port_s.isdigit():
        raise click.ClickException(
            f"server.listen: expected addr:port, got {cfg.server.listen!r}")

    import socket
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host_addr, int(port_s)))
    except OSError as exc:
        raise click.ClickException(
            f"port in use: {cfg.server.listen}") from exc
    finally:
        probe.close()

    host = EngineHost(cfg, replay_path=replay_path)
    app = build_app(host, ui_dir=ui_dir)
    click.echo(f"engine listening on {cfg.server.listen} "
               f"(backend={cfg.generation.backend})")
    try:
        uvicorn.run(app, host=host_addr, port=int(port_s), log_level="warning")
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise click.ClickException(
                f"port in use: {cfg.server.listen}") from exc
        raise


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--gaze", "gaze_path", type=click.Path(exists=True),
              required=True,
              help="Gaze JSONL file (or a recorded events.jsonl) to replay.")
@click.option("--out-hashes", type=click.Path(), default=None,
              help="Write the canvas-hash sequence here, one per line.")
@click.option("--expect-log", type=click.Path(exists=True), default=None,
              help="Recorded events.jsonl to verify against.")
@click.option("--backend", type=click.Choice(["procedural", "network"]),
              default=None)
@click.option("--log-dir", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--duration-ms", type=int, default=None,
              help="Session length; defaults to the last gaze timestamp.")
def replay(config_path, gaze_path, out_hashes, expect_log, backend,
           log_dir, seed, duration_ms):
    """Replay a gaze file headlessly and print/verify canvas hashes."""
    try:
        cfg = _load(config_path)
        cfg = _apply_overrides(cfg, backend, None, log_dir, seed)
    except ConfigInvalid as exc:
        raise click.ClickException(str(exc)) from exc

    samples, source_duration = load_replay_source(gaze_path)
    if duration_ms is None:
        duration_ms = source_duration
    from .events import EventLog
    log = EventLog(cfg.server.log_dir or None)
    result = run_replay(cfg, samples, duration_ms=duration_ms, log=log)

    if out_hashes:
        with open(out_hashes, "w", encoding="utf-8") as fh:
            fh.write("\n".join(result.hashes) + "\n")
        click.echo(f"{len(result.hashes)} canvas hashes -> {out_hashes}")
    else:
        for h in result.hashes:
            click.echo(h)

    if expect_log:
        recorded = read_event_log(expect_log)
        try:
            verify_replay(result, recorded)
        except ReplayDivergence as exc:
            raise click.ClickException(str(exc)) from exc
        click.echo(f"replay matches recorded log "
                   f"({len(recorded_hashes(recorded))} hashes)")


@main.command("validate-config")
@click.argument("config_path", type=click.Path())
def validate_config(config_path):
    """Check a config file; prints the offending field on failure."""
    try:
        cfg = load_config(config_path)
    except ConfigInvalid as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"ok": True,
                           "canvas": [cfg.canvas_w, cfg.canvas_h],
                           "backend": cfg.generation.backend}))


if __name__ == "__main__":
    main()
