import json
import time

import pytest
from fastapi.testclient import TestClient

from pulseloop import BlockConfig, read_log, run_block, run_scripted_block
from pulseloop.game import PlayerAction
from pulseloop.server import build_app


@pytest.fixture()
def client(tmp_path):
    app = build_app(out_dir=tmp_path / "out")
    with TestClient(app) as c:
        c.out_dir = tmp_path / "out"
        yield c


def _recv(ws):
    return json.loads(ws.receive_text())


def test_welcome_frame(client):
    with client.websocket_connect("/ws") as ws:
        msg = _recv(ws)
        assert msg["type"] == "welcome"
        assert msg["v"] == 1


def test_single_session_lock(client):
    with client.websocket_connect("/ws") as ws1:
        assert _recv(ws1)["type"] == "welcome"
        with client.websocket_connect("/ws") as ws2:
            msg = _recv(ws2)
            assert msg["type"] == "error"
            assert "active" in msg["error"]


def test_malformed_message_keeps_connection(client):
    with client.websocket_connect("/ws") as ws:
        _recv(ws)
        ws.send_text("this is not json")
        assert _recv(ws)["type"] == "error"
        ws.send_text(json.dumps({"type": "bogus"}))
        assert _recv(ws)["type"] == "error"
        ws.send_text(json.dumps({"type": "hello"}))
        assert _recv(ws)["type"] == "welcome"


def test_bad_start_rejected(client):
    with client.websocket_connect("/ws") as ws:
        _recv(ws)
        ws.send_text(json.dumps({"type": "start", "condition": "NOPE"}))
        msg = _recv(ws)
        assert msg["type"] == "error"


def test_scripted_block_transport_transparency(client):
    # the same action script over the wire must yield the headless record
    cfg = BlockConfig("DG", duration=30.0, seed=19)
    ref_block = run_block(cfg, fidelity="beat")
    actions = []
    for e in ref_block.events:
        if e["type"] == "press":
            actions.append(PlayerAction(t=e["t"], kind="press",
                                        cell=tuple(e["cell"])))
        elif e["type"] in ("validate", "pedal"):
            actions.append(PlayerAction(t=e["t"], kind=e["type"]))
    headless = run_scripted_block(cfg, actions)

    with client.websocket_connect("/ws") as ws:
        _recv(ws)
        ws.send_text(json.dumps({"type": "start", "mode": "scripted",
                                 "condition": "DG", "duration": 30.0,
                                 "seed": 19}))
        assert _recv(ws)["type"] == "block_start"
        for a in actions:
            msg = {"type": a.kind, "t": a.t}
            if a.cell is not None:
                msg["cell"] = list(a.cell)
            ws.send_text(json.dumps(msg))
        ws.send_text(json.dumps({"type": "end"}))
        streamed = []
        while True:
            msg = _recv(ws)
            if msg["type"] == "record":
                record_frame = msg
                break
            streamed.append(msg)
    assert streamed == headless.events
    # the wire maps non-finite floats to null for strict JSON parsers
    wire = [float("nan") if v is None else v for v in record_frame["features"]]
    assert wire == pytest.approx(headless.features.as_row(), nan_ok=True)
    assert not record_frame["incomplete"]


def test_live_block_snapshots_and_lifecycle(client):
    duration = 3.0
    t_start = time.monotonic()
    with client.websocket_connect("/ws") as ws:
        _recv(ws)
        ws.send_text(json.dumps({"type": "start", "condition": "EG",
                                 "duration": duration, "seed": 23}))
        assert _recv(ws)["type"] == "block_start"
        snapshots = 0
        saw_trial = False
        while True:
            msg = _recv(ws)
            if msg["type"] == "snapshot":
                snapshots += 1
            elif msg["type"] == "trial_start":
                saw_trial = True
            elif msg["type"] == "block_end":
                break
        elapsed = time.monotonic() - t_start
    assert saw_trial
    assert snapshots >= 30.0 * duration
    assert elapsed >= duration


def test_live_block_press_and_validate(client):
    duration = 4.0
    with client.websocket_connect("/ws") as ws:
        _recv(ws)
        ws.send_text(json.dumps({"type": "start", "condition": "EG",
                                 "duration": duration, "seed": 29}))
        assert _recv(ws)["type"] == "block_start"
        pattern = None
        outcome = None
        while True:
            msg = _recv(ws)
            if msg["type"] == "trial_start" and pattern is None:
                pattern = msg["pattern"]
                # wait out fixation + display + hold before pressing
                wait_s = (msg["fixation_ms"]
                          + msg["cell_ms"] * len(pattern) + 500) / 1000.0
                time.sleep(wait_s + 0.1)
                for cell in pattern:
                    ws.send_text(json.dumps({"type": "press", "cell": cell}))
                ws.send_text(json.dumps({"type": "validate"}))
            elif msg["type"] == "trial_end" and outcome is None:
                outcome = msg["kind"]
            elif msg["type"] == "block_end":
                break
    assert outcome == "success"


def test_live_disconnect_persists_incomplete(tmp_path):
    # needs a real server: the in-process test transport cancels the handler
    # on close instead of delivering a websocket disconnect
    import asyncio
    import threading

    import uvicorn
    import websockets

    out = tmp_path / "out"
    app = build_app(out_dir=out)
    config = uvicorn.Config(app, host="127.0.0.1", port=0,
                            log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        for _ in range(100):
            if server.started:
                break
            time.sleep(0.05)
        assert server.started
        port = server.servers[0].sockets[0].getsockname()[1]

        async def run_client():
            async with websockets.connect(f"ws://127.0.0.1:{port}/ws") as ws:
                assert json.loads(await ws.recv())["type"] == "welcome"
                await ws.send(json.dumps({"type": "start", "condition": "DG",
                                          "duration": 60.0, "seed": 31}))
                assert json.loads(await ws.recv())["type"] == "block_start"
                await asyncio.sleep(2.0)
                # context exit closes the socket mid-block

        asyncio.run(run_client())
        path = out / "DG_31.jsonl"
        for _ in range(50):
            if path.exists():
                break
            time.sleep(0.1)
        record = read_log(path)
        assert record.incomplete
    finally:
        server.should_exit = True
        thread.join(timeout=5)
