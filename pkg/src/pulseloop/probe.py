"""Auditory detection task: beep scheduling and footswitch response matching."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BEEP_DUR_MS = 100.0
BEEP_FREQ_HZ = 1000.0
BEEP_LEVEL_DB = 75.0
NOISE_LEVEL_DB = 65.0

#: response window after a beep, seconds
RESPONSE_WINDOW_S = 3.0
#: double presses closer than this to the previous press are discarded, s
DEBOUNCE_S = 0.3


@dataclass(frozen=True)
class BeepEvent:
    """A scheduled probe beep; levels are configuration metadata."""

    t: float
    dur_ms: float = BEEP_DUR_MS
    freq_hz: float = BEEP_FREQ_HZ
    level_db: float = BEEP_LEVEL_DB
    noise_db: float = NOISE_LEVEL_DB


@dataclass(frozen=True)
class Detection:
    """One beep with its matched response (or omission)."""

    beep_t: float
    press_t: float = None
    rt_ms: float = None

    @property
    def omitted(self) -> bool:
        return self.press_t is None


@dataclass
class MatchResult:
    detections: list
    false_alarms: list = field(default_factory=list)

    @property
    def omissions(self) -> int:
        return sum(d.omitted for d in self.detections)

    def reaction_times_ms(self):
        return [d.rt_ms for d in self.detections if not d.omitted]


def schedule_beeps(block_dur: float, min_gap: float, max_gap: float,
                   rng) -> list[BeepEvent]:
    """Schedule beeps with i.i.d. uniform gaps in [min_gap, max_gap].

    No beep falls in the final response window of the block. A block too
    short for one beep yields an empty schedule.
    """
    if not 0 < min_gap <= max_gap:
        raise ValueError("need 0 < min_gap <= max_gap")
    beeps = []
    t = float(rng.uniform(min_gap, max_gap))
    while t <= block_dur - RESPONSE_WINDOW_S:
        beeps.append(BeepEvent(t=t))
        t += float(rng.uniform(min_gap, max_gap))
    return beeps


def match_responses(beeps, presses, window: float = RESPONSE_WINDOW_S) -> MatchResult:
    """Match footswitch presses to beeps.

    Presses within 300 ms of the previous retained press are discarded as
    double presses. Each beep consumes the earliest unconsumed press in
    (beep_t, beep_t + window]; unmatched beeps are omissions and presses
    matching no beep are reported as false alarms.
    """
    beep_times = [b.t if isinstance(b, BeepEvent) else float(b) for b in beeps]
    press_times = [float(p) for p in presses]
    if any(np.diff(beep_times) < 0) or any(np.diff(press_times) < 0):
        raise ValueError("beeps and presses must be time-sorted")

    debounced = []
    for p in press_times:
        if debounced and p - debounced[-1] < DEBOUNCE_S:
            continue
        debounced.append(p)

    detections = []
    consumed = [False] * len(debounced)
    for bt in beep_times:
        match = None
        for i, p in enumerate(debounced):
            if consumed[i] or p <= bt:
                continue
            if p > bt + window:
                break
            match = i
            break
        if match is None:
            detections.append(Detection(beep_t=bt))
        else:
            consumed[match] = True
            p = debounced[match]
            detections.append(Detection(beep_t=bt, press_t=p,
                                        rt_ms=(p - bt) * 1000.0))
    false_alarms = [p for i, p in enumerate(debounced) if not consumed[i]]
    return MatchResult(detections=detections, false_alarms=false_alarms)
