"""Live session service: JSON messages over a websocket.

One participant session at a time; the engine is authoritative over all
timing and game rules. Two client modes:

* ``scripted``: the client declares action timestamps; the block is run
  through the same engine path as a headless scripted run, so the resulting
  record is bit-identical to it (transport transparency).
* ``live``: the engine runs the block on its own monotonic clock, re-times
  every input on arrival, and streams gauge snapshots at >= 30 Hz.
"""
from __future__ import annotations

import asyncio
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .biofeedback import TriggerScheduler
from .game import (Mode, OutcomeKind, PlayerAction, apply_outcome, gauge_view,
                   handle_press, initial_state, new_trial, validate, expire)
from .heartsim import HeartModel, HeartParams
from .probe import schedule_beeps
from .session import (BlockConfig, BlockRecord, _block_seeds, _sorted_events,
                      block_features, run_scripted_block, write_log,
                      INTER_TRIAL_S, LOG_VERSION)

SNAPSHOT_HZ = 30.0


def _error(reason: str) -> str:
    return json.dumps({"type": "error", "error": reason})


def _wire_floats(values) -> list:
    """Feature row for the wire: non-finite floats become null (strict JSON
    parsers reject bare NaN/Infinity)."""
    return [v if v is not None and np.isfinite(v) else None for v in values]


class SessionServer:
    """Holds the single-session lock and per-connection state."""

    def __init__(self, out_dir=None, frontend_dir=None, bf_override=None):
        self.out_dir = Path(out_dir) if out_dir else None
        self.frontend_dir = frontend_dir
        self.bf_override = bf_override  # None = per-condition default
        self._busy = False

    async def handle(self, ws: WebSocket):
        await ws.accept()
        if self._busy:
            await ws.send_text(_error("another session is active"))
            await ws.close()
            return
        self._busy = True
        try:
            await ws.send_text(json.dumps({"type": "welcome", "v": LOG_VERSION}))
            await self._converse(ws)
        except WebSocketDisconnect:
            pass
        finally:
            self._busy = False

    async def _converse(self, ws: WebSocket):
        while True:
            raw = await ws.receive_text()
            msg = self._parse(raw)
            if msg is None:
                await ws.send_text(_error("malformed message"))
                continue
            kind = msg.get("type")
            if kind == "start":
                try:
                    config = BlockConfig(
                        condition=msg.get("condition", "EG"),
                        duration=float(msg.get("duration", 480.0)),
                        seed=int(msg.get("seed", 0)),
                        bf_factor=float(msg.get("bf_factor", 1.5)))
                except (TypeError, ValueError) as exc:
                    await ws.send_text(_error(f"bad start message: {exc}"))
                    continue
                if msg.get("mode") == "scripted":
                    await self._run_scripted(ws, config)
                else:
                    await LiveBlock(self, ws, config).run()
            elif kind == "hello":
                await ws.send_text(json.dumps({"type": "welcome",
                                               "v": LOG_VERSION}))
            else:
                await ws.send_text(_error(f"unexpected message {kind!r}"))

    @staticmethod
    def _parse(raw):
        try:
            msg = json.loads(raw)
            return msg if isinstance(msg, dict) else None
        except json.JSONDecodeError:
            return None

    def bf_enabled(self, config: BlockConfig) -> bool:
        if self.bf_override is not None:
            return self.bf_override
        return config.bf_enabled

    async def _run_scripted(self, ws: WebSocket, config: BlockConfig):
        """Collect a declared-time action script, then run the block."""
        await ws.send_text(json.dumps({"type": "block_start",
                                       "mode": "scripted",
                                       "config": asdict(config)}))
        actions = []
        while True:
            msg = self._parse(await ws.receive_text())
            if msg is None:
                await ws.send_text(_error("malformed message"))
                continue
            kind = msg.get("type")
            if kind == "end":
                break
            if kind in ("press", "validate", "pedal"):
                try:
                    cell = tuple(msg["cell"]) if kind == "press" else None
                    actions.append(PlayerAction(t=float(msg["t"]), kind=kind,
                                                cell=cell))
                except (KeyError, TypeError, ValueError) as exc:
                    await ws.send_text(_error(f"bad action: {exc}"))
            else:
                await ws.send_text(_error(f"unexpected message {kind!r}"))
        record = run_scripted_block(config, actions)
        self._persist(record)
        for e in record.events:
            await ws.send_text(json.dumps(e))
        await ws.send_text(json.dumps(
            {"type": "record", "incomplete": record.incomplete,
             "features": _wire_floats(record.features.as_row()),
             "n_events": len(record.events)}))

    def _persist(self, record: BlockRecord):
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        name = f"{record.config.condition}_{record.config.seed}.jsonl"
        write_log(record, self.out_dir / name)


class LiveBlock:
    """A real-time block: engine clock, concurrent heart/probe/game stages."""

    def __init__(self, server: SessionServer, ws: WebSocket,
                 config: BlockConfig, heart: HeartParams = None):
        self.server = server
        self.ws = ws
        self.config = config
        self.seeds = _block_seeds(config.seed)
        self.heart = HeartModel(heart or HeartParams(), self.seeds["heart"],
                                stress=config.stress)
        self.sched = TriggerScheduler(factor=config.bf_factor,
                                      enabled=server.bf_enabled(config))
        self.state = initial_state(config.mode, config.stress)
        self.game_rng = np.random.default_rng(self.seeds["game"])
        self.events = []
        self.inputs = asyncio.Queue()
        self.feedback = ""
        self._t0 = None
        self._trig_times = []

    def now(self) -> float:
        return time.monotonic() - self._t0

    def log(self, event: dict):
        self.events.append(event)

    async def send(self, payload: dict):
        await self.ws.send_text(json.dumps(payload))

    async def run(self):
        self._t0 = time.monotonic()
        await self.send({"type": "block_start", "mode": "live",
                         "config": asdict(self.config)})
        input_task = asyncio.create_task(self._input_loop())
        background = [asyncio.create_task(c) for c in
                      (self._heart_loop(), self._trigger_loop(),
                       self._probe_loop(), self._snapshot_loop(),
                       self._game_loop())]
        sleeper = asyncio.create_task(asyncio.sleep(self.config.duration))
        # the block ends at the duration, or early on client disconnect
        # (the input loop only ever exits by raising)
        done, _ = await asyncio.wait({sleeper, input_task},
                                     return_when=asyncio.FIRST_COMPLETED)
        disconnected = input_task in done
        for t in (sleeper, input_task, *background):
            t.cancel()
        await asyncio.gather(sleeper, input_task, *background,
                             return_exceptions=True)
        record = self._finish(disconnected)
        self.server._persist(record)
        if disconnected:
            raise WebSocketDisconnect(1006)
        await self.send({"type": "block_end", "t": self.config.duration,
                         "features": _wire_floats(record.features.as_row())})

    def _finish(self, incomplete: bool) -> BlockRecord:
        events = _sorted_events(
            self.events + [{"t": self.config.duration, "type": "block_end"}])
        record = BlockRecord(config=self.config, events=events,
                             incomplete=incomplete)
        record.features = block_features(record)
        return record

    # -- concurrent stages ------------------------------------------------

    async def _heart_loop(self):
        """Simulated heart: each ground-truth beat is also the detected one."""
        while True:
            iv = None
            if len(self._trig_times) >= 2:
                iv = (self._trig_times[-1] - self._trig_times[-2]) * 1000.0
                iv = iv if 200.0 <= iv <= 4000.0 else None
            tb = self.heart.next_beat(iv)
            if tb > self.config.duration:
                return
            await asyncio.sleep(max(0.0, tb - self.now()))
            t = self.now()
            self.log({"t": t, "type": "truth_beat"})
            self.log({"t": t, "type": "beat"})
            self.sched.on_beat(t)

    async def _trigger_loop(self):
        while True:
            await asyncio.sleep(self.sched.tick_s)
            trig = self.sched.tick(self.now())
            if trig is not None:
                self._trig_times.append(trig.t)
                msg = {"t": trig.t, "type": "vibe", "p1_ms": trig.pulse_ms,
                       "gap_ms": trig.gap_ms, "p2_ms": trig.pulse2_ms,
                       "motors": trig.motors}
                self.log(msg)
                await self.send(msg)

    async def _probe_loop(self):
        rng = np.random.default_rng(self.seeds["probe"])
        beeps = schedule_beeps(self.config.duration, self.config.probe_min_gap,
                               self.config.probe_max_gap, rng)
        for b in beeps:
            await asyncio.sleep(max(0.0, b.t - self.now()))
            msg = {"t": b.t, "type": "beep"}
            self.log(msg)
            await self.send(msg)

    async def _snapshot_loop(self):
        # absolute-time pacing so send latency cannot drag the rate below
        # the 30 Hz floor
        period = 1.0 / (SNAPSHOT_HZ * 1.1)
        next_t = self.now()
        while True:
            g = gauge_view(self.state, self.now(), feedback=self.feedback)
            await self.send({"type": "snapshot", "t": self.now(),
                             "time_leds": g.time_leds, "score_leds": g.score_leds,
                             "objective_leds": g.objective_leds,
                             "score": g.score, "objective": g.objective,
                             "lit": [list(c) for c in g.lit],
                             "feedback": g.feedback})
            next_t += period
            await asyncio.sleep(max(0.0, next_t - self.now()))

    async def _input_loop(self):
        """Re-time and queue client inputs; engine clock is authoritative."""
        while True:
            msg = SessionServer._parse(await self.ws.receive_text())
            if msg is None or msg.get("type") not in ("press", "validate",
                                                      "pedal"):
                await self.ws.send_text(_error("malformed message"))
                continue
            t = self.now()
            kind = msg["type"]
            if kind == "pedal":
                self.log({"t": t, "type": "pedal"})
            else:
                cell = tuple(msg.get("cell") or ()) if kind == "press" else None
                if kind == "press" and len(cell) != 2:
                    await self.ws.send_text(_error("press needs a cell"))
                    continue
                await self.inputs.put(PlayerAction(t=t, kind=kind, cell=cell))

    async def _game_loop(self):
        while self.now() < self.config.duration:
            t = self.now()
            trial = new_trial(self.state, self.game_rng, t)
            self.log({"t": t, "type": "trial_start",
                      "pattern": [list(c) for c in trial.pattern],
                      "length": self.state.length,
                      "time_limit_ms": self.state.time_limit_ms})
            await self.send({"type": "trial_start", "t": t,
                             "pattern": [list(c) for c in trial.pattern],
                             "fixation_ms": 500, "cell_ms": 250,
                             "time_limit_ms": self.state.time_limit_ms})
            deadline = (trial.reproduction_start
                        + self.state.time_limit_ms / 1000.0
                        if self.config.stress else self.config.duration)
            outcome = None
            while outcome is None:
                timeout = deadline - self.now()
                if timeout <= 0:
                    break
                try:
                    a = await asyncio.wait_for(self.inputs.get(), timeout)
                except asyncio.TimeoutError:
                    break
                if a.t < trial.reproduction_start:
                    continue  # input during fixation/display: engine ignores
                if a.kind == "press":
                    handle_press(self.state, a.cell, a.t)
                    self.log({"t": a.t, "type": "press", "cell": list(a.cell)})
                else:
                    self.log({"t": a.t, "type": "validate"})
                    outcome = validate(self.state, a.t)
                    end_t = a.t
            if outcome is None:
                if not self.config.stress or deadline >= self.config.duration:
                    return  # block ended mid-trial
                outcome = expire(self.state, deadline)
                end_t = deadline
            apply_outcome(self.state, outcome)
            self.log({"t": end_t, "type": "trial_end",
                      "kind": outcome.kind.value,
                      "completion_ms": outcome.completion_ms,
                      "correct": outcome.correct,
                      "score": self.state.score if self.config.stress else None,
                      "next_length": self.state.length,
                      "time_limit_ms": self.state.time_limit_ms})
            self.feedback = ("success" if outcome.kind is OutcomeKind.SUCCESS
                             else "failure")
            await self.send({"type": "trial_end", "t": end_t,
                             "kind": outcome.kind.value,
                             "score": self.state.score,
                             "next_length": self.state.length})
            await asyncio.sleep(INTER_TRIAL_S)
            self.feedback = ""


def build_app(out_dir=None, frontend_dir=None, bf_override=None) -> FastAPI:
    """FastAPI app with the websocket endpoint and optional static frontend."""
    server = SessionServer(out_dir=out_dir, frontend_dir=frontend_dir,
                           bf_override=bf_override)
    app = FastAPI(title="pulseloop session service")
    app.state.session_server = server

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await server.handle(ws)

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="frontend")
    return app


def serve(host: str = "127.0.0.1", port: int = 8710, out_dir=None,
          frontend_dir=None, bf_override=None):
    """Run the live session endpoint (blocking)."""
    import uvicorn
    app = build_app(out_dir=out_dir, frontend_dir=frontend_dir,
                    bf_override=bf_override)
    uvicorn.run(app, host=host, port=port, log_level="warning")
