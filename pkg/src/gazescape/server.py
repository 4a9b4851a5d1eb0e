"""Live service: websocket gaze in, frames and debug out, HTTP state.

The host wraps the engine in a fixed-timestep loop. Wall time only paces
the loop; every semantic decision uses nominal tick time, and incoming
gaze is rebased onto the engine timeline with a small latency cushion and
recorded post-rebase. That recording, replayed headlessly, reproduces the
live canvas-hash sequence - the UI is just another gaze producer.

Endpoints: WS /gaze (JSONL in), WS /frames (length-prefixed JSON header +
PNG per message), WS /debug (JSON snapshots), GET /state /config /healthz
/canvas.png, plus the static UI when a build directory is provided.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import struct
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import _kernels
from .config import SessionConfig, config_to_dict
from .engine import (EmitDebug, Engine, GenerationCompletion, LogEvent,
                     PublishTransition, StartGeneration)
from .events import EventLog
from .gaze import GazeSample, MalformedRecord, OutOfRange, emit_sample, parse_sample
from .generation import GenerationBackend, make_backend
from .imgio import png_encode
from .interpolate import FrameEvent, FramePacer, Transition
from .replay import execute_generation

logger = logging.getLogger("gazescape.server")

# rebased sample timestamps sit this far in the engine's future so network
# jitter cannot reorder a sample across its tick boundary
REBASE_CUSHION_MS = 100

_SUB_QUEUE_LIMIT = 64


def encode_frame_message(event: FrameEvent) -> bytes:
    """4-byte big-endian header length, JSON header, PNG payload."""
    header = json.dumps(event.header(), separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(header)) + header + png_encode(event.image)


def decode_frame_message(data: bytes) -> tuple[dict, bytes]:
    (hlen,) = struct.unpack(">I", data[:4])
    header = json.loads(data[4:4 + hlen].decode("utf-8"))
    return header, data[4 + hlen:]


class EngineHost:
    """Owns the engine, the tick loop, and the stream fan-outs."""

    def __init__(self, config: SessionConfig,
                 backend: GenerationBackend | None = None,
                 replay_path: str | None = None):
        self.config = config
        self.engine = Engine(config)
        self.backend = backend or make_backend(config.generation.backend,
                                               config.generation.endpoint,
                                               config.generation.timeout_ms)
        self.replay_path = replay_path
        self.log = EventLog(config.server.log_dir or None, keep=False)
        self.pacer = FramePacer()

        self.sample_queue: deque[GazeSample] = deque(maxlen=8192)
        self.completions: deque[GenerationCompletion] = deque()
        self.frame_subs: set[asyncio.Queue] = set()
        self.debug_subs: set[asyncio.Queue] = set()
        self.tick_index = 0
        self.last_debug: dict | None = None

        self._executor = ThreadPoolExecutor(max_workers=1)
        self._task: asyncio.Task | None = None
        self._stopping = asyncio.Event()
        self._gaze_rec = None
        if config.server.log_dir:
            os.makedirs(config.server.log_dir, exist_ok=True)
            self._gaze_rec = open(
                os.path.join(config.server.log_dir, "gaze.jsonl"),
                "a", encoding="utf-8")

    # -- lifecycle ---------------------------------------------------------

    async def start(self) -> None:
        _kernels.warmup()
        self._task = asyncio.create_task(self._run())
        if self.replay_path:
            self._feed_task = asyncio.create_task(self._feed_replay())
        else:
            self._feed_task = None

    async def stop(self) -> None:
        self._stopping.set()
        if self._task is not None:
            await self._task
        if self._feed_task is not None:
            self._feed_task.cancel()
        self._executor.shutdown(wait=False, cancel_futures=True)
        self.log.close()
        if self._gaze_rec is not None:
            self._gaze_rec.close()

    async def _feed_replay(self) -> None:
        """Feed a gaze file into the live session; timestamps in the file
        are already on the engine timeline, so no rebasing happens."""
        from .replay import load_replay_source

        samples, _ = load_replay_source(self.replay_path)
        scale = self.config.server.time_scale
        lead_ms = 500  # keep the queue shallow
        for s in sorted(samples, key=lambda s: s.t_ms):
            while s.t_ms > self.now_nominal_ms() + lead_ms:
                if self._stopping.is_set():
                    return
                await asyncio.sleep(0.05 / scale)
            self.submit_sample(s)

    def now_nominal_ms(self) -> int:
        return self.tick_index * self.config.tick_interval_ms

    # -- gaze intake -------------------------------------------------------

    def submit_sample(self, sample: GazeSample) -> None:
        """Queue one engine-timeline sample; drop-oldest under pressure."""
        self.sample_queue.append(sample)
        if self._gaze_rec is not None:
            self._gaze_rec.write(emit_sample(sample) + "\n")

    # -- the loop ----------------------------------------------------------

    async def _run(self) -> None:
        loop = asyncio.get_running_loop()
        tick_s = self.config.tick_interval_ms / 1000.0
        scale = self.config.server.time_scale
        t0 = time.perf_counter()
        try:
            while not self._stopping.is_set():
                now_ms = self.now_nominal_ms()
                self._tick_once(loop, now_ms)
                self.tick_index += 1
                deadline = t0 + (self.tick_index * tick_s) / scale
                delay = deadline - time.perf_counter()
                if delay > 0:
                    try:
                        await asyncio.wait_for(self._stopping.wait(), delay)
                    except asyncio.TimeoutError:
                        pass
                else:
                    # behind schedule: yield, then catch up tick by tick
                    await asyncio.sleep(0)
        except Exception:
            logger.exception("engine loop crashed")
            raise

    def _tick_once(self, loop: asyncio.AbstractEventLoop, now_ms: int) -> None:
        batch = []
        leftover = []
        while self.sample_queue:
            s = self.sample_queue.popleft()
            (batch if s.t_ms <= now_ms else leftover).append(s)
        self.sample_queue.extendleft(reversed(leftover))

        comps = list(self.completions)
        self.completions.clear()

        actions = self.engine.tick(now_ms, batch, comps)
        for action in actions:
            if isinstance(action, StartGeneration):
                fut = loop.run_in_executor(self._executor, execute_generation,
                                           self.backend, action.pending)
                fut.add_done_callback(self._make_delivery(action.pending.token))
            elif isinstance(action, LogEvent):
                self.log.emit(action.event)
                for _, img in action.images:
                    self.log.store_image(img)
            elif isinstance(action, PublishTransition):
                if action.frm is None:
                    self.pacer.cut(action.to, action.cycle)
                else:
                    self.pacer.start(Transition(
                        frm=action.frm, to=action.to,
                        frame_count=self.config.transition.frame_count,
                        easing=self.config.transition.easing,
                        frame_interval_ms=self.config.transition.frame_interval_ms,
                        cycle=action.cycle), now_ms)
            elif isinstance(action, EmitDebug):
                self.last_debug = action.snapshot
                self._broadcast(self.debug_subs, action.snapshot)

        for frame in self.pacer.poll(now_ms):
            self._broadcast(self.frame_subs, frame)

    def _make_delivery(self, token: int):
        def deliver(fut):
            try:
                self.completions.append(fut.result())
            except Exception as exc:  # worker bug must not wedge the slot
                logger.exception("generation worker failed")
                self.completions.append(GenerationCompletion(
                    token=token, error_kind="InternalError",
                    error_msg=str(exc)))
        return deliver

    @staticmethod
    def _broadcast(subs: set[asyncio.Queue], item) -> None:
        for q in list(subs):
            try:
                q.put_nowait(item)
            except asyncio.QueueFull:
                # slow consumer: drop the oldest, frames are a live signal
                try:
                    q.get_nowait()
                    q.put_nowait(item)
                except (asyncio.QueueEmpty, asyncio.QueueFull):
                    pass


def build_app(host: EngineHost, ui_dir: str | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        await host.start()
        try:
            yield
        finally:
            await host.stop()

    app = FastAPI(lifespan=lifespan)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True}

    @app.get("/state")
    async def state():
        e = host.engine
        return {
            "mode": e.mode.value,
            "stage": e.stage.stage,
            "transform_count": e.stage.transform_count,
            "cycle_index": e.cycle_index,
            "present": e.presence.present,
            "absence_ms": e.presence.absence_ms,
            "tick_ms": host.now_nominal_ms(),
        }

    @app.get("/config")
    async def config():
        return config_to_dict(host.config)

    @app.get("/canvas.png")
    async def canvas_png():
        img = host.pacer.displayed
        if img is None:
            img = host.engine.canvas
        if img is None:
            return JSONResponse({"error": "no canvas yet"}, status_code=404)
        return Response(content=png_encode(img), media_type="image/png")

    @app.websocket("/gaze")
    async def gaze_ws(ws: WebSocket):
        await ws.accept()
        offsets: dict[int, int] = {}
        try:
            while True:
                text = await ws.receive_text()
                for line in text.splitlines():
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        sample = parse_sample(line)
                    except (MalformedRecord, OutOfRange) as exc:
                        await ws.send_text(json.dumps(
                            {"error": type(exc).__name__, "detail": str(exc)}))
                        continue
                    off = offsets.get(sample.source_id)
                    if off is None:
                        off = (host.now_nominal_ms() + REBASE_CUSHION_MS
                               - sample.t_ms)
                        offsets[sample.source_id] = off
                    host.submit_sample(GazeSample(
                        t_ms=sample.t_ms + off, x=sample.x, y=sample.y,
                        valid=sample.valid, source_id=sample.source_id))
        except WebSocketDisconnect:
            pass

    @app.websocket("/frames")
    async def frames_ws(ws: WebSocket):
        await ws.accept()
        q: asyncio.Queue = asyncio.Queue(maxsize=_SUB_QUEUE_LIMIT)
        host.frame_subs.add(q)
        try:
            while True:
                frame = await q.get()
                await ws.send_bytes(encode_frame_message(frame))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            host.frame_subs.discard(q)

    @app.websocket("/debug")
    async def debug_ws(ws: WebSocket):
        await ws.accept()
        q: asyncio.Queue = asyncio.Queue(maxsize=_SUB_QUEUE_LIMIT)
        host.debug_subs.add(q)
        try:
            if host.last_debug is not None:
                await ws.send_text(json.dumps(host.last_debug))
            while True:
                snap = await q.get()
                await ws.send_text(json.dumps(snap))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            host.debug_subs.discard(q)

    if ui_dir and os.path.isdir(ui_dir):
        index = os.path.join(ui_dir, "index.html")

        @app.get("/")
        async def root():
            return FileResponse(index)

        app.mount("/ui", StaticFiles(directory=ui_dir), name="ui")

    return app
