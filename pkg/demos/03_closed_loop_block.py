"""Run one closed-loop block and audit the haptic trigger stream.

In the DSGR condition the wristband vibrates at 1.5x the live inter-beat
interval estimate — a rhythm slower than the wearer's own heart. This script
runs a full simulated block, then re-derives the estimate from the logged
beats and checks every inter-trigger interval against it.
"""
from pulseloop import BlockConfig, LiveIbiEstimator, run_block

rec = run_block(BlockConfig("DSGR", duration=240.0, seed=9), fidelity="beat")

beats = [e["t"] for e in rec.events if e["type"] == "beat"]
vibes = [e["t"] for e in rec.events if e["type"] == "vibe"]
trials = rec.of_type("trial_end")

print(f"condition      : {rec.config.condition}")
print(f"beats logged   : {len(beats)}")
print(f"vibes logged   : {len(vibes)}")
print(f"trials played  : {len(trials)}")

# ---------------------------------------------------------------------------
# independent audit: fold the beat stream through a fresh estimator and
# check each interval against the estimate in force at its start.
# a beat stamped exactly at a trigger time is folded after the trigger.

est = LiveIbiEstimator()
estimate = None
i = 0
worst = 0.0
for prev, nxt in zip(vibes, vibes[1:]):
    while i < len(beats) and beats[i] < prev:
        estimate = est.on_beat(beats[i]) or estimate
        i += 1
    target = 1.5 * estimate / 1000.0
    worst = max(worst, abs((nxt - prev) - target))

print(f"\nintervals checked : {len(vibes) - 1}")
print(f"worst ratio error : {worst * 1000:.2f} ms (tick grid is 5 ms)")

# ---------------------------------------------------------------------------
# block-level features the analysis pipeline would consume

f = rec.features
print(f"\nHR        : {f.hr_bpm:.1f} bpm")
print(f"RMSSD     : {f.rmssd_ms:.1f} ms")
print(f"successes : {sum(e['kind'] == 'success' for e in trials)}")
print(f"timeouts  : {sum(e['kind'] == 'timeout' for e in trials)}")
