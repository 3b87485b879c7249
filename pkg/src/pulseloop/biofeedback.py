"""Lowered-rate haptic trigger scheduling.

The inter-vibration interval continuously equals ``factor`` (default 1.5)
times the live inter-beat interval estimate. Estimate changes never move an
already-scheduled trigger: they apply from the next interval onward.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .rpeak import BeatEvent, LiveIbiEstimator

#: scheduler polling period, seconds; bounds trigger jitter
TICK_S = 0.005

# default double-impulse pattern, ms (fits inside the fastest legal interval)
PULSE_MS = 60.0
GAP_MS = 80.0


class TriggerCodecError(ValueError):
    """Raised on malformed trigger wire frames."""


@dataclass(frozen=True)
class VibrationTrigger:
    """A timestamped double-impulse command for the 3 wrist motors."""

    t: float
    pulse_ms: float = PULSE_MS
    gap_ms: float = GAP_MS
    pulse2_ms: float = PULSE_MS
    motors: int = 3

    def __post_init__(self):
        if min(self.pulse_ms, self.gap_ms, self.pulse2_ms) <= 0:
            raise ValueError("pattern durations must be positive")


def encode_trigger(trigger: VibrationTrigger) -> str:
    """Serialize a trigger to its JSON wire frame."""
    return json.dumps({"type": "vibe", "t": trigger.t, "p1_ms": trigger.pulse_ms,
                       "gap_ms": trigger.gap_ms, "p2_ms": trigger.pulse2_ms,
                       "motors": trigger.motors})


def decode_trigger(frame: str) -> VibrationTrigger:
    """Parse a trigger wire frame; malformed frames raise TriggerCodecError."""
    try:
        msg = json.loads(frame)
        if not isinstance(msg, dict):
            raise ValueError(f"trigger frame must be an object, got {msg!r}")
        if msg.get("type") != "vibe":
            raise ValueError(f"not a trigger frame: {msg.get('type')!r}")
        return VibrationTrigger(t=float(msg["t"]), pulse_ms=float(msg["p1_ms"]),
                                gap_ms=float(msg["gap_ms"]),
                                pulse2_ms=float(msg["p2_ms"]),
                                motors=int(msg.get("motors", 3)))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise TriggerCodecError(f"malformed trigger frame: {exc}") from exc


class TriggerScheduler:
    """Fires vibration triggers at ``factor`` x the live IBI estimate.

    Driven by two ordered inputs: beat events (updating the estimate) and
    clock ticks (firing). A pending trigger is never rescheduled when the
    estimate changes, so an HR jump cannot cause a burst.
    """

    def __init__(self, factor: float = 1.5, enabled: bool = True,
                 tick_s: float = TICK_S, estimator: LiveIbiEstimator = None):
        if factor <= 1:
            raise ValueError("biofeedback factor must exceed 1")
        self.factor = factor
        self.enabled = enabled
        self.tick_s = tick_s
        self.estimator = estimator or LiveIbiEstimator()
        self.next_fire_at = None
        self.last_fire_at = None
        self.current_ibi_estimate = None

    def on_beat(self, beat) -> None:
        """Update the IBI estimate from a beat event (or raw beat time)."""
        t = beat.t if isinstance(beat, BeatEvent) else float(beat)
        est = self.estimator.on_beat(t)
        if est is None:
            return
        self.current_ibi_estimate = est
        if self.next_fire_at is None:
            # first valid estimate: schedule the first trigger one lowered
            # interval after it
            self.next_fire_at = t + self.factor * est / 1000.0

    def tick(self, now: float):
        """Poll the clock; fires when ``now`` reaches the scheduled time."""
        if (not self.enabled or self.next_fire_at is None
                or now < self.next_fire_at - 1e-6):
            return None
        trigger = VibrationTrigger(t=now)
        self.last_fire_at = now
        # the estimate in force at the start of the new interval
        self.next_fire_at = now + self.factor * self.current_ibi_estimate / 1000.0
        return trigger

    def advance(self, until: float) -> list:
        """Emit all triggers up to ``until``, on the tick grid.

        Equivalent to polling ``tick`` every ``tick_s`` seconds: each trigger
        fires at the first tick at or after its scheduled time.
        """
        out = []
        if not self.enabled or self.next_fire_at is None:
            return out
        while self.next_fire_at <= until + 1e-6:
            fire = math.ceil((self.next_fire_at - 1e-6) / self.tick_s) * self.tick_s
            if fire > until:
                break
            trig = self.tick(fire)
            if trig is None:
                break
            out.append(trig)
        return out
