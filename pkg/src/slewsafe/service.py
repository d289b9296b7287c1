"""Network front end: live trial streaming plus batch analysis artifacts.

One process serves two kinds of client.  An operator console opens a
WebSocket per trial and exchanges JSON text messages: joystick commands
in, state frames out at a fixed 30 Hz cadence (each frame advances the
240 Hz simulation by eight sub-steps), a terminal frame with the trial
metrics at the end.  Scripted clients POST analysis requests and collect
the CSV artifacts the stability module writes.

Every message carries a schema version field ``v`` and a monotonically
increasing ``seq``.  Sessions are isolated: each trial owns its own
InteractiveSession and advances only inside its own socket handler, so
commands to one session can never touch another's state log.
"""

from __future__ import annotations

import asyncio
import math
import secrets
import tempfile
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse
from pydantic import BaseModel

from . import session as trials
from . import stability
from .config import config_from_mapping, config_fingerprint

PROTOCOL_VERSION = 1
STREAM_HZ = 30
STREAM_INTERVAL = 1.0 / STREAM_HZ

READY = "ready"
RUNNING = "running"
TERMINAL_STATES = ("tipped", "completed", "aborted")


class CreateSessionRequest(BaseModel):
    scenario_id: str
    shaped: bool = False


class AnalysisRequest(BaseModel):
    kind: str
    config: dict = {}


class SessionEntry:
    """Book-keeping for one live trial."""

    def __init__(self, session_id: str, scenario: trials.Scenario, shaped: bool):
        self.session_id = session_id
        self.scenario = scenario
        self.shaped = shaped
        self.live = trials.InteractiveSession(scenario, shaped)
        self.state = READY
        self.seq = 0
        self.record: trials.TrialRecord | None = None
        self.socket_open = False

    def descriptor(self) -> dict:
        return {"session_id": self.session_id,
                "scenario_id": self.scenario.scenario_id,
                "shaped": self.shaped,
                "state": self.state}

    def close(self, state: str) -> None:
        self.state = state
        if self.record is None:
            self.record = self.live.record()


def _metrics_payload(entry: SessionEntry) -> dict:
    m = entry.record.metrics
    return {"max_swing_deg": m.max_swing_deg,
            "collision_count": m.collision_count,
            "completion_time_s": m.completion_time,
            "tipped": m.tipped,
            "completed": m.completed}


def _state_frame(entry: SessionEntry) -> dict:
    s = entry.live.state
    entry.seq += 1
    return {"v": PROTOCOL_VERSION, "type": "state", "seq": entry.seq,
            "t": entry.live.sim_time,
            "alpha": s.slew.alpha, "alpha_dot": s.slew.alpha_dot,
            "rate_cmd": entry.live.commanded_rate,
            "theta1": s.swing.theta1, "theta2": s.swing.theta2,
            "tip_margin": s.tip_margin,
            "payload_x": s.payload_xy[0], "payload_y": s.payload_xy[1]}


def _terminal_frame(entry: SessionEntry) -> dict:
    entry.seq += 1
    return {"v": PROTOCOL_VERSION, "type": "terminal", "seq": entry.seq,
            "t": entry.live.sim_time, "state": entry.state,
            "metrics": _metrics_payload(entry)}


def _scenario_summary(sc: trials.Scenario) -> dict:
    return {"id": sc.scenario_id,
            "start_angle_deg": math.degrees(sc.start_angle),
            "goal_angle_deg": math.degrees(sc.goal_angle),
            "goal_tolerance_deg": math.degrees(sc.goal_tolerance),
            "time_limit_s": sc.time_limit,
            "crane": {"radius_m": sc.crane.radius,
                      "rope_length_m": sc.crane.rope_length,
                      "speed_limit_rad_s": sc.crane.speed_limit,
                      "payload_mass_kg": sc.crane.payload_mass,
                      "footprint_half_width_m": sc.crane.footprint_half_width},
            "obstacles": [{"center": list(ob.center), "radius": ob.radius,
                           "height_class": ob.height_class}
                          for ob in sc.obstacles]}


def load_scenario_dir(scenario_dir) -> dict[str, trials.Scenario]:
    found = {}
    for p in sorted(Path(scenario_dir).glob("*.yaml")):
        sc = trials.load_scenario(p)
        if sc.scenario_id in found:
            raise ValueError(f"duplicate scenario id {sc.scenario_id!r}")
        found[sc.scenario_id] = sc
    return found


def create_app(scenario_dir, *, artifact_dir=None, realtime: bool = True,
               ui_dir=None) -> FastAPI:
    """Build the service.

    ``realtime`` paces the stream on the wall clock; tests switch it off,
    which gates each frame on the next client message instead (lockstep
    for active clients, a few-ms idle timeout otherwise) while keeping
    the exact per-frame sub-step count.

    ``ui_dir`` optionally mounts a directory of static files at ``/ui``
    so a browser console can be served same-origin; the API itself never
    depends on it.
    """
    app = FastAPI(title="slewsafe")
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    scenarios = load_scenario_dir(scenario_dir)
    sessions: dict[str, SessionEntry] = {}
    analyses: dict[str, dict] = {}
    artifacts_root = Path(artifact_dir) if artifact_dir else Path(
        tempfile.mkdtemp(prefix="slewsafe-analyses-"))
    counter = {"sessions": 0, "analyses": 0}

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "scenarios": len(scenarios)}

    @app.get("/scenarios")
    def list_scenarios():
        return [_scenario_summary(sc) for sc in scenarios.values()]

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        sc = scenarios.get(req.scenario_id)
        if sc is None:
            raise HTTPException(404, f"unknown scenario {req.scenario_id!r}")
        counter["sessions"] += 1
        sid = f"trial-{counter['sessions']:04d}-{secrets.token_hex(4)}"
        try:
            sessions[sid] = SessionEntry(sid, sc, req.shaped)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        return sessions[sid].descriptor()

    def _get_session(session_id: str) -> SessionEntry:
        entry = sessions.get(session_id)
        if entry is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return entry

    @app.get("/sessions/{session_id}")
    def session_descriptor(session_id: str):
        return _get_session(session_id).descriptor()

    @app.get("/sessions/{session_id}/metrics")
    def session_metrics(session_id: str):
        entry = _get_session(session_id)
        if entry.state not in TERMINAL_STATES:
            raise HTTPException(409, "session not finished; no metrics yet")
        return {**entry.descriptor(), "metrics": _metrics_payload(entry)}

    @app.websocket("/session/{session_id}")
    async def stream_session(ws: WebSocket, session_id: str):
        await ws.accept()
        entry = sessions.get(session_id)
        if entry is None:
            await ws.send_json({"v": PROTOCOL_VERSION, "type": "error",
                                "error": f"unknown session {session_id!r}"})
            await ws.close(code=4404)
            return
        if entry.state in TERMINAL_STATES:
            # reconnect after the trial ended: replay the terminal frame
            await ws.send_json(_terminal_frame(entry))
            await ws.close()
            return
        if entry.socket_open:
            await ws.send_json({"v": PROTOCOL_VERSION, "type": "error",
                                "error": "session already has a live stream"})
            await ws.close(code=4409)
            return
        entry.socket_open = True
        entry.state = RUNNING
        try:
            await _run_stream(ws, entry)
        finally:
            entry.socket_open = False

    async def _run_stream(ws: WebSocket, entry: SessionEntry) -> None:
        live = entry.live
        inbox: asyncio.Queue = asyncio.Queue()
        disconnected = asyncio.Event()

        async def reader():
            try:
                while True:
                    msg = await ws.receive_json()
                    inbox.put_nowait(msg)
            except WebSocketDisconnect:
                disconnected.set()

        reader_task = asyncio.create_task(reader())
        loop = asyncio.get_running_loop()
        start = loop.time()
        held = 0.0
        tick = 0
        live.step(held, 0.0)  # pin the session clock at t = 0
        try:
            while True:
                tick += 1
                pending = []
                if realtime:
                    delay = start + tick * STREAM_INTERVAL - loop.time()
                    if delay > 0.0:
                        await asyncio.sleep(delay)
                else:
                    # no wall-clock pacing: gate on the next client message
                    # so an active client stays in lockstep, with a short
                    # idle timeout so a silent one still gets frames
                    try:
                        pending.append(await asyncio.wait_for(
                            inbox.get(), timeout=0.005))
                    except asyncio.TimeoutError:
                        pass
                if disconnected.is_set():
                    entry.close("aborted")
                    return
                aborted = False
                while not inbox.empty():
                    pending.append(inbox.get_nowait())
                for msg in pending:
                    if msg.get("type") == "abort":
                        aborted = True
                    elif msg.get("type") == "command":
                        held = float(msg.get("value", 0.0))
                        # zero-width step: applied in arrival order, the
                        # last value before the tick drives the sub-steps
                        live.step(held, (tick - 1) * STREAM_INTERVAL)
                if not live.tipped:
                    try:
                        live.step(held, tick * STREAM_INTERVAL)
                    except trials.SessionClosed:
                        pass
                await ws.send_json(_state_frame(entry))
                if live.tipped:
                    entry.close("tipped")
                elif aborted:
                    entry.close("aborted")
                elif live.goal_settled():
                    entry.close("completed")
                elif live.out_of_time:
                    entry.close("aborted")
                else:
                    continue
                await ws.send_json(_terminal_frame(entry))
                await ws.close()
                return
        except WebSocketDisconnect:
            entry.close("aborted")
        finally:
            reader_task.cancel()
            if entry.state == RUNNING:
                entry.close("aborted")

    @app.post("/analyses", status_code=201)
    async def run_analysis(req: AnalysisRequest):
        if req.kind not in stability.ANALYSIS_KINDS:
            raise HTTPException(
                422, f"unknown analysis kind {req.kind!r}; "
                     f"expected one of {list(stability.ANALYSIS_KINDS)}")
        try:
            analysis = config_from_mapping(req.config)
        except ValueError as exc:
            # message names the offending field
            raise HTTPException(422, str(exc)) from None
        counter["analyses"] += 1
        aid = f"analysis-{counter['analyses']:04d}-{secrets.token_hex(4)}"
        out_dir = artifacts_root / aid
        rows = await asyncio.to_thread(stability.run_analysis, req.kind,
                                       analysis, out_dir)
        analyses[aid] = {
            "analysis_id": aid, "kind": req.kind,
            "config_fingerprint": config_fingerprint(analysis),
            "rows": rows,
            "artifacts": {name: f"/analyses/{aid}/artifacts/{name}"
                          for name in rows}}
        return analyses[aid]

    @app.get("/analyses/{analysis_id}")
    def get_analysis(analysis_id: str):
        ref = analyses.get(analysis_id)
        if ref is None:
            raise HTTPException(404, f"unknown analysis {analysis_id!r}")
        return ref

    @app.get("/analyses/{analysis_id}/artifacts/{name}")
    def get_artifact(analysis_id: str, name: str):
        ref = analyses.get(analysis_id)
        if ref is None or name not in ref["rows"]:
            raise HTTPException(404, "no such artifact")
        return FileResponse(artifacts_root / analysis_id / name,
                            media_type="text/csv")

    return app
