import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulseloop import (HeartParams, TriggerScheduler, VibrationTrigger,
                       decode_trigger, encode_trigger, gen_ibi_series)
from pulseloop.biofeedback import TICK_S, TriggerCodecError


def _feed_constant(sched, ibi_s=0.8, until=10.0):
    t = 0.0
    while t <= until:
        sched.on_beat(t)
        t += ibi_s
    return t


def test_interval_is_factor_times_estimate():
    # [TRIVIAL] estimate 800 ms -> inter-trigger interval 1200 ms.
    sched = TriggerScheduler(factor=1.5)
    sched.on_beat(0.0)
    sched.on_beat(0.8)  # first estimate at t=0.8
    trigs = sched.advance(5.0)
    times = [tr.t for tr in trigs]
    assert times[0] == pytest.approx(0.8 + 1.2, abs=TICK_S)
    for a, b in zip(times, times[1:]):
        assert b - a == pytest.approx(1.2, abs=TICK_S)


def test_first_trigger_one_interval_after_first_estimate():
    # [DERIVED] beats at 1.2 and 2.0 -> estimate at 2.0 -> first fire at 3.2.
    sched = TriggerScheduler(factor=1.5)
    sched.on_beat(1.2)
    sched.on_beat(2.0)
    trigs = sched.advance(4.0)
    assert trigs[0].t == pytest.approx(3.2, abs=TICK_S)


def test_estimate_change_not_retroactive():
    # A mid-interval estimate change applies from the next interval onward.
    sched = TriggerScheduler(factor=1.5)
    sched.on_beat(0.0)
    sched.on_beat(0.8)            # estimate 800 ms, first fire at 2.0
    trigs = sched.advance(1.9)
    assert trigs == []
    sched.on_beat(1.8)            # estimate 1000 ms, mid-interval
    trigs = sched.advance(4.0)
    assert trigs[0].t == pytest.approx(2.0, abs=TICK_S)      # unchanged
    assert trigs[1].t - trigs[0].t == pytest.approx(1.5, abs=TICK_S)


def sched_all_count():
    sched = TriggerScheduler(factor=1.5)
    out = []
    for t in np.arange(0.0, 480.0, 0.8):
        out += sched.advance(t)
        sched.on_beat(t)
    out += sched.advance(480.0)
    return out


def test_constant_hr_block_trigger_count_value():
    # [DERIVED] 480 s at a constant 75 bpm: 399 triggers (400 +- 1).
    out = sched_all_count()
    assert abs(len(out) - 400) <= 1


def test_disabled_scheduler_never_fires():
    sched = TriggerScheduler(factor=1.5, enabled=False)
    _feed_constant(sched, until=60.0)
    assert sched.advance(60.0) == []


def test_no_trigger_before_first_estimate():
    sched = TriggerScheduler(factor=1.5)
    sched.on_beat(0.0)            # single beat: no estimate yet
    assert sched.advance(100.0) == []


def test_factor_must_exceed_one():
    with pytest.raises(ValueError):
        TriggerScheduler(factor=1.0)


def test_advance_equals_tick_polling():
    rng = np.random.default_rng(8)
    ibi = gen_ibi_series(HeartParams(mean_hr=80, rmssd_target=60), 120.0,
                         seed=3)
    beats = ibi.beat_times()

    def run(poll):
        sched = TriggerScheduler(factor=1.5)
        out = []
        if poll:
            next_tick = 0.0
            bi = 0
            while next_tick <= 120.0:
                while bi < len(beats) and beats[bi] <= next_tick:
                    sched.on_beat(beats[bi])
                    bi += 1
                trig = sched.tick(next_tick)
                if trig is not None:
                    out.append(trig.t)
                next_tick = round(next_tick + TICK_S, 9)
        else:
            bi = 0
            last = 0.0
            for b in beats:
                out += [tr.t for tr in sched.advance(b)]
                sched.on_beat(b)
            out += [tr.t for tr in sched.advance(120.0)]
        return out

    polled, advanced = run(True), run(False)
    assert len(polled) == len(advanced)
    assert np.allclose(polled, advanced, atol=TICK_S)


def test_interval_tracks_estimate_in_force():
    # For a variable-rate block, every inter-trigger interval equals
    # factor x the estimate in force at the interval's start (+- one tick).
    ibi = gen_ibi_series(HeartParams(mean_hr=77, rmssd_target=70), 120.0,
                         seed=9)
    beats = ibi.beat_times()
    sched = TriggerScheduler(factor=1.5)
    fires = []  # (t, estimate at fire time)
    for b in beats:
        for tr in sched.advance(b):
            fires.append((tr.t, sched.current_ibi_estimate))
        sched.on_beat(b)
    for (t0, est0), (t1, _) in zip(fires, fires[1:]):
        assert t1 - t0 == pytest.approx(1.5 * est0 / 1000.0, abs=2 * TICK_S)


# ---------------------------------------------------------------------------
# wire codec


def test_codec_round_trip_default():
    trig = VibrationTrigger(t=12.345)
    assert decode_trigger(encode_trigger(trig)) == trig


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e5, allow_nan=False),
       st.floats(1, 500), st.floats(1, 500), st.floats(1, 500),
       st.integers(1, 3))
def test_codec_round_trip_property(t, p1, gap, p2, motors):
    trig = VibrationTrigger(t=t, pulse_ms=p1, gap_ms=gap, pulse2_ms=p2,
                            motors=motors)
    assert decode_trigger(encode_trigger(trig)) == trig


@pytest.mark.parametrize("frame", [
    "",
    "{",
    "null",
    '{"type": "beat", "t": 1.0}',
    '{"type": "vibe"}',
    '{"type": "vibe", "t": "soon", "p1_ms": 60, "gap_ms": 80, "p2_ms": 60}',
])
def test_codec_rejects_malformed(frame):
    with pytest.raises(TriggerCodecError):
        decode_trigger(frame)


def test_trigger_pattern_validation():
    with pytest.raises(ValueError):
        VibrationTrigger(t=0.0, gap_ms=0.0)
