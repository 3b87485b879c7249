"""R-peak detection from ECG, in streaming and batch modes.

The detector runs a causal band-pass filter (5-25 Hz, sharpening QRS energy)
followed by an adaptive prominence-threshold state machine with a 250 ms
refractory period. Batch detection feeds the whole signal through the same
compiled per-sample scan used by the streaming path, so both modes produce
bit-identical event streams.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.signal import butter

from .signals import Signal


class StreamOrderError(ValueError):
    """Raised when samples arrive out of time order."""


class InsufficientDataError(ValueError):
    """Raised when a signal is too short for the requested analysis."""


@dataclass(frozen=True)
class BeatEvent:
    """One detected R-peak.

    Attributes
    ----------
    t : float
        Peak time in seconds on the stream clock.
    amplitude : float
        Raw sample value at the peak, mV.
    prominence : float
        Height of the band-passed peak that triggered the detection, mV.
    """

    t: float
    amplitude: float
    prominence: float


@dataclass
class IbiSeries:
    """Inter-beat intervals in ms, anchored at the ending beat of each interval."""

    intervals: np.ndarray  # ms
    anchor_times: np.ndarray  # s

    def __post_init__(self):
        self.intervals = np.asarray(self.intervals, dtype=np.float64)
        self.anchor_times = np.asarray(self.anchor_times, dtype=np.float64)
        if len(self.intervals) != len(self.anchor_times):
            raise ValueError("intervals and anchor_times must have equal length")

    def __len__(self):
        return len(self.intervals)

    def beat_times(self) -> np.ndarray:
        """Reconstruct beat times, including the beat opening the first interval."""
        if len(self) == 0:
            return np.empty(0)
        first = self.anchor_times[0] - self.intervals[0] / 1000.0
        return np.concatenate([[first], self.anchor_times])


# Interval sanity bounds applied when deriving IBIs from beats (ms).
IBI_MIN_MS = 250.0
IBI_MAX_MS = 2000.0

# state vector layout for the compiled scan
_N = 0            # samples processed
_WARMUP_MAX = 1   # running max of filtered signal before arming
_EMA = 2          # exponential average of accepted peak prominences (0 = unarmed)
_TRACKING = 3
_TRACK_MAX = 4
_TRACK_MAX_IDX = 5
_TRACK_START = 6
_REFRACT_UNTIL = 7
_LAST_EVENT = 8
_RING_POS = 9
_ARMED = 10       # envelope dropped below exit threshold since last event
_Z = 11           # four filter delay slots
_RING = 15        # raw-sample ring buffer starts here


@njit(cache=True)
def _scan(raw, state, b, a, warmup_n, thresh_frac, exit_frac,
          refract_n, decision_n, back_n, fwd_n, ring_len):
    """Filter and scan a chunk of raw samples, advancing the detector state.

    Returns parallel arrays (peak sample index, raw amplitude, filtered
    prominence) for every beat decided within this chunk.
    """
    cap = raw.size // refract_n + 2
    ev_idx = np.empty(cap, np.int64)
    ev_amp = np.empty(cap, np.float64)
    ev_prom = np.empty(cap, np.float64)
    n_ev = 0

    n = int(state[_N])
    warmup_max = state[_WARMUP_MAX]
    ema = state[_EMA]
    tracking = state[_TRACKING] != 0.0
    track_max = state[_TRACK_MAX]
    track_max_idx = int(state[_TRACK_MAX_IDX])
    track_start = int(state[_TRACK_START])
    refract_until = int(state[_REFRACT_UNTIL])
    last_event = int(state[_LAST_EVENT])
    armed = state[_ARMED] != 0.0
    pos = int(state[_RING_POS])
    z0 = state[_Z]
    z1 = state[_Z + 1]
    z2 = state[_Z + 2]
    z3 = state[_Z + 3]

    for i in range(raw.size):
        x = raw[i]
        # direct-form II transposed band-pass
        f = b[0] * x + z0
        z0 = b[1] * x + z1 - a[1] * f
        z1 = b[2] * x + z2 - a[2] * f
        z2 = b[3] * x + z3 - a[3] * f
        z3 = b[4] * x - a[4] * f

        state[_RING + pos] = x
        pos += 1
        if pos == ring_len:
            pos = 0

        if n < warmup_n:
            if f > warmup_max:
                warmup_max = f
        else:
            if ema <= 0.0:
                if f > warmup_max:
                    warmup_max = f
                if warmup_max > 1e-9:
                    ema = warmup_max
            if ema > 0.0:
                if last_event < 0 and f > ema:
                    ema = f  # bootstrap: track the envelope until first beat
                threshold = thresh_frac * ema
                if not tracking:
                    if not armed and f < exit_frac * threshold:
                        armed = True
                    if armed and n >= refract_until and f > threshold:
                        tracking = True
                        track_max = f
                        track_max_idx = n
                        track_start = n
                else:
                    if f > track_max:
                        track_max = f
                        track_max_idx = n
                    done = (n >= track_max_idx + fwd_n
                            and (f < exit_frac * threshold
                                 or n >= track_start + decision_n))
                    if n >= track_start + decision_n + fwd_n:
                        done = True
                    if done:
                        lo = track_max_idx - back_n
                        if last_event >= 0 and lo < last_event + refract_n:
                            lo = last_event + refract_n
                        if lo < 0:
                            lo = 0
                        hi = track_max_idx + fwd_n
                        if hi > n:
                            hi = n
                        best = -1.0e308
                        best_i = track_max_idx
                        for j in range(lo, hi + 1):
                            rp = pos - 1 - (n - j)
                            if rp < 0:
                                rp += ring_len
                            v = state[_RING + rp]
                            if v > best:
                                best = v
                                best_i = j
                        ev_idx[n_ev] = best_i
                        ev_amp[n_ev] = best
                        ev_prom[n_ev] = track_max
                        n_ev += 1
                        ema = 0.8 * ema + 0.2 * track_max
                        refract_until = best_i + refract_n
                        last_event = best_i
                        tracking = False
                        armed = False
        n += 1

    state[_N] = n
    state[_WARMUP_MAX] = warmup_max
    state[_EMA] = ema
    state[_TRACKING] = 1.0 if tracking else 0.0
    state[_TRACK_MAX] = track_max
    state[_TRACK_MAX_IDX] = track_max_idx
    state[_TRACK_START] = track_start
    state[_REFRACT_UNTIL] = refract_until
    state[_LAST_EVENT] = last_event
    state[_ARMED] = 1.0 if armed else 0.0
    state[_RING_POS] = pos
    state[_Z] = z0
    state[_Z + 1] = z1
    state[_Z + 2] = z2
    state[_Z + 3] = z3
    return ev_idx[:n_ev], ev_amp[:n_ev], ev_prom[:n_ev]


class StreamingDetector:
    """Sample-at-a-time R-peak detector with bounded decision latency.

    State is single-owner: samples must be pushed in strict time order, and
    identical streams yield identical event streams.
    """

    def __init__(self, fs, band=(5.0, 25.0), thresh_frac=0.5, exit_frac=0.5,
                 refractory=0.25, decision_window=0.09, warmup=1.0,
                 search_back=0.05, search_fwd=0.03):
        if fs < 250:
            raise ValueError(f"sample rate too low for QRS detection: {fs} Hz")
        self.fs = float(fs)
        b, a = butter(2, [band[0] / (fs / 2), band[1] / (fs / 2)], btype="band")
        self._b = np.ascontiguousarray(b)
        self._a = np.ascontiguousarray(a)
        self._warmup_n = int(round(warmup * fs))
        self._thresh_frac = float(thresh_frac)
        self._exit_frac = float(exit_frac)
        self._refract_n = max(1, int(round(refractory * fs)))
        self._decision_n = int(round(decision_window * fs))
        self._back_n = int(round(search_back * fs))
        self._fwd_n = int(round(search_fwd * fs))
        self._ring_len = self._decision_n + self._back_n + 2 * self._fwd_n + 8
        self.state = np.zeros(_RING + self._ring_len)
        self.state[_LAST_EVENT] = -1.0
        self.state[_ARMED] = 1.0
        self._t_start = None
        self._last_t = None

    @property
    def refractory_s(self) -> float:
        return self._refract_n / self.fs

    def _run(self, chunk):
        idx, amp, prom = _scan(
            chunk, self.state, self._b, self._a, self._warmup_n,
            self._thresh_frac, self._exit_frac, self._refract_n,
            self._decision_n, self._back_n, self._fwd_n, self._ring_len)
        t0 = self._t_start
        return [BeatEvent(t=t0 + i / self.fs, amplitude=a, prominence=p)
                for i, a, p in zip(idx, amp, prom)]

    def push_sample(self, sample: float, t: float):
        """Process one sample; returns a BeatEvent when a peak is decided.

        Samples are assumed uniformly spaced at the constructor's sample rate;
        ``t`` is validated for strict monotonicity.
        """
        if not np.isfinite(sample):
            raise ValueError(f"non-finite sample at t={t}")
        if self._last_t is not None and t <= self._last_t:
            raise StreamOrderError(
                f"sample at t={t} not after previous t={self._last_t}")
        if self._t_start is None:
            self._t_start = t
        self._last_t = t
        events = self._run(np.array([sample], dtype=np.float64))
        return events[0] if events else None

    def push_chunk(self, samples, t0: float):
        """Process a contiguous chunk starting at time ``t0``; returns events."""
        samples = np.ascontiguousarray(samples, dtype=np.float64)
        if samples.size == 0:
            return []
        if self._last_t is not None and t0 <= self._last_t:
            raise StreamOrderError(
                f"chunk at t={t0} not after previous t={self._last_t}")
        if self._t_start is None:
            self._t_start = t0
        self._last_t = t0 + (samples.size - 1) / self.fs
        return self._run(samples)


def detect_batch(signal: Signal, **detector_kwargs) -> list[BeatEvent]:
    """Detect all R-peaks of an ECG signal.

    Equals the streaming result on the same data: the whole signal is pushed
    through one streaming detector as a single chunk.
    """
    if signal.kind != "ecg":
        raise ValueError(f"expected an ECG signal, got kind={signal.kind!r}")
    if signal.duration < 2.0:
        raise InsufficientDataError(
            f"signal of {signal.duration:.2f} s is too short (need >= 2 s)")
    det = StreamingDetector(signal.fs, **detector_kwargs)
    return det.push_chunk(signal.data, signal.t0)


def ibi_from_beats(beats) -> IbiSeries:
    """Derive inter-beat intervals (ms) from beat events or beat times.

    Intervals outside [250, 2000] ms are rejected as outliers together with
    their anchors. Fewer than 2 beats yields an empty series.
    """
    times = np.array([b.t if isinstance(b, BeatEvent) else float(b)
                      for b in beats])
    if len(times) < 2:
        return IbiSeries(np.empty(0), np.empty(0))
    intervals = np.diff(times) * 1000.0
    anchors = times[1:]
    keep = (intervals >= IBI_MIN_MS) & (intervals <= IBI_MAX_MS)
    return IbiSeries(intervals[keep], anchors[keep])


class LiveIbiEstimator:
    """Real-time IBI estimate: last accepted interval with a jump guard.

    An interval differing from the current estimate by more than
    ``max_jump_frac`` is rejected and the previous estimate is kept.
    """

    def __init__(self, max_jump_frac=0.35):
        self.max_jump_frac = max_jump_frac
        self.estimate_ms = None
        self._last_beat_t = None

    def on_beat(self, t: float):
        """Feed the next beat time; returns the current estimate in ms (or None)."""
        if self._last_beat_t is not None:
            ibi = (t - self._last_beat_t) * 1000.0
            if IBI_MIN_MS <= ibi <= IBI_MAX_MS:
                if self.estimate_ms is None:
                    self.estimate_ms = ibi
                elif abs(ibi - self.estimate_ms) / self.estimate_ms <= self.max_jump_frac:
                    self.estimate_ms = ibi
                # else: outlier jump, keep previous estimate
        self._last_beat_t = t
        return self.estimate_ms
