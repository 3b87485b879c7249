"""Write a session log, read it back, and prove the replay matches.

Every block is fully determined by its seed and the timed input script, so a
logged block can be re-simulated bit-for-bit. Replay doubles as an integrity
check: touch one press in the log and the re-simulation diverges.
"""
import json
import tempfile
from pathlib import Path

from pulseloop import BlockConfig, read_log, replay, run_block, write_log

rec = run_block(BlockConfig("DSG", duration=120.0, seed=33), fidelity="beat")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "block.jsonl"
    write_log(rec, path)
    print(f"log written    : {path.name}, {path.stat().st_size} bytes, "
          f"{len(path.read_text().splitlines())} lines")

    back = read_log(path)
    print(f"round trip     : events equal = {back.events == rec.events}")

    rep = replay(back)
    print(f"replay         : bit-identical = {rep.events == back.events}")

    # tamper with one press inside a succeeded trial and replay again
    lines = path.read_text().splitlines()
    pending = None
    for i, line in enumerate(lines):
        msg = json.loads(line)
        if msg.get("type") == "trial_start":
            pending = None
        elif msg.get("type") == "press" and pending is None:
            pending = i
        elif (msg.get("type") == "trial_end"
              and msg.get("kind") == "success" and pending is not None):
            m = json.loads(lines[pending])
            m["cell"] = [0, 0] if m["cell"] != [0, 0] else [1, 1]
            lines[pending] = json.dumps(m)
            break
    path.write_text("\n".join(lines) + "\n")

    tampered = read_log(path)
    rep2 = replay(tampered)
    print(f"after tamper   : bit-identical = {rep2.events == tampered.events}")
