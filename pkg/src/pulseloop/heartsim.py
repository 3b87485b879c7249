"""Synthetic participants: beat times, ECG/respiration/EDA waveforms and a
player model, so the closed loop can be exercised and validated without humans.

All generators are pure functions of (parameters, seed): identical inputs give
bit-identical outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, lfilter

from .features import bateman_kernel
from .game import PlayerAction, Trial
from .rpeak import IbiSeries
from .signals import Signal


@dataclass
class HeartParams:
    """Ground-truth cardiac parameters of a simulated participant.

    ``entrainment_kappa`` models the hypothesized drift of the heart rhythm
    toward an external rhythmic stimulus: each IBI relaxes toward the current
    stimulus interval by fraction kappa per beat. ``stress_hr_offset`` is
    added to the mean HR in stress blocks.
    """

    mean_hr: float = 77.56
    rmssd_target: float = 75.96
    entrainment_kappa: float = 0.0
    stress_hr_offset: float = 0.0

    def __post_init__(self):
        vals = (self.mean_hr, self.rmssd_target,
                self.entrainment_kappa, self.stress_hr_offset)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"non-finite heart parameters: {self}")
        if not 40 <= self.mean_hr <= 180:
            raise ValueError(f"mean_hr {self.mean_hr} outside [40, 180]")
        if self.rmssd_target < 0:
            raise ValueError("rmssd_target must be >= 0")
        if not 0 <= self.entrainment_kappa <= 1:
            raise ValueError("entrainment_kappa must be in [0, 1]")


@dataclass
class GroundTruth:
    """Generator-side truth used as the oracle for the analysis pipeline."""

    beat_times: np.ndarray  # s, strictly increasing
    scr_onsets: np.ndarray  # s
    scr_amps: np.ndarray  # uS
    inspiration_times: np.ndarray  # s
    tonic_level: float  # uS

    def __post_init__(self):
        self.beat_times = np.asarray(self.beat_times, dtype=np.float64)
        self.scr_onsets = np.asarray(self.scr_onsets, dtype=np.float64)
        self.scr_amps = np.asarray(self.scr_amps, dtype=np.float64)
        self.inspiration_times = np.asarray(self.inspiration_times, dtype=np.float64)
        if len(self.beat_times) > 1 and not np.all(np.diff(self.beat_times) > 0):
            raise ValueError("beat_times must be strictly increasing")
        if np.any(self.scr_amps < 0):
            raise ValueError("SCR amplitudes must be >= 0")


# plausibility clamp on generated IBIs, ms
_IBI_CLAMP = (300.0, 2000.0)


class HeartModel:
    """Incremental beat generator for closed-loop simulation.

    The next IBI is a Gaussian deviation around the mean interval, optionally
    relaxed toward the most recent stimulus interval by ``kappa`` per beat
    (step capped at ``max_step_frac`` of the current IBI when set).
    """

    def __init__(self, params: HeartParams, seed, stress=False, max_step_frac=0.15):
        self.params = params
        hr = params.mean_hr + (params.stress_hr_offset if stress else 0.0)
        hr = min(max(hr, 40.0), 180.0)
        self.sigma = params.rmssd_target / math.sqrt(2.0)
        m0 = 60000.0 / hr
        # second-order correction so mean(60000/IBI) hits the target HR
        self.mean_ibi = m0 * (1.0 + (self.sigma / m0) ** 2)
        self.max_step_frac = max_step_frac
        self._rng = np.random.default_rng(seed)
        self.t = 0.0  # time of the latest beat
        self.last_ibi = self.mean_ibi

    def next_beat(self, stimulus_interval_ms=None) -> float:
        """Advance to the next beat time, given the stimulus interval in force."""
        ibi = self.mean_ibi + self._rng.normal(0.0, self.sigma) if self.sigma > 0 \
            else self.mean_ibi
        kappa = self.params.entrainment_kappa
        if kappa > 0 and stimulus_interval_ms is not None:
            step = kappa * (stimulus_interval_ms - ibi)
            if self.max_step_frac is not None:
                cap = self.max_step_frac * ibi
                step = min(max(step, -cap), cap)
            ibi += step
        ibi = min(max(ibi, _IBI_CLAMP[0]), _IBI_CLAMP[1])
        self.last_ibi = ibi
        self.t += ibi / 1000.0
        return self.t


def _stimulus_interval_at(stimulus, t):
    """Interval (ms) between the two most recent stimulus events before t."""
    i = np.searchsorted(stimulus, t)
    if i < 2:
        return None
    iv = (stimulus[i - 1] - stimulus[i - 2]) * 1000.0
    return iv if 200.0 <= iv <= 4000.0 else None


def gen_ibi_series(params: HeartParams, duration: float, stimulus=None,
                   seed=0, max_step_frac=None) -> IbiSeries:
    """Generate a beat sequence of the given duration as an IbiSeries.

    With ``kappa == 0`` the realized successive-difference spread is rescaled
    to the RMSSD target, so the feature round trip is tight. ``stimulus`` is a
    sorted sequence of external trigger times in seconds.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    params.__post_init__()  # re-validate in case fields were mutated
    rng = np.random.default_rng(seed)
    sigma = params.rmssd_target / math.sqrt(2.0)
    m0 = 60000.0 / params.mean_hr
    m = m0 * (1.0 + (sigma / m0) ** 2)

    if params.entrainment_kappa == 0 or stimulus is None:
        n_est = int(duration * 1000.0 / m) + 64
        ibis = m + (rng.normal(0.0, sigma, size=n_est) if sigma > 0
                    else np.zeros(n_est))
        if sigma > 0:
            achieved = np.sqrt(np.mean(np.diff(ibis) ** 2))
            if achieved > 0:
                ibis = np.mean(ibis) + (ibis - np.mean(ibis)) * \
                    (params.rmssd_target / achieved)
        ibis = np.clip(ibis, *_IBI_CLAMP)
        beats = np.concatenate([[0.0], np.cumsum(ibis) / 1000.0])
        beats = beats[beats <= duration + 1e-9]
    else:
        stimulus = np.asarray(stimulus, dtype=np.float64)
        model = HeartModel(params, seed, max_step_frac=max_step_frac)
        # reuse the same rng stream as the vectorized path
        model._rng = rng
        beats = [0.0]
        while True:
            s = _stimulus_interval_at(stimulus, model.t)
            t = model.next_beat(s)
            if t > duration + 1e-9:
                break
            beats.append(t)
        beats = np.array(beats)

    if len(beats) < 2:
        return IbiSeries(np.empty(0), np.empty(0))
    return IbiSeries(np.diff(beats) * 1000.0, beats[1:])


# ---------------------------------------------------------------------------
# waveform synthesis

# (amplitude mV, center offset s, width s) per beat-template component
_ECG_WAVES = (
    (0.12, -0.180, 0.025),   # P
    (-0.12, -0.028, 0.008),  # Q
    (1.00, 0.000, 0.008),    # R
    (-0.15, 0.028, 0.009),   # S
    (0.30, 0.220, 0.050),    # T
)


def synth_ecg(ibi: IbiSeries, fs: float = 1000.0, noise_rms: float = 0.0,
              seed=0, duration: float = None) -> Signal:
    """Synthesize an ECG waveform from a beat sequence.

    Each beat contributes a template of Gaussian deflections with a dominant
    narrow R wave, so every ground-truth beat is a prominent local maximum.
    Additive noise is white Gaussian band-limited to 35 Hz (emulating the
    recording chain's low-pass) and scaled to ``noise_rms``.
    """
    if fs < 250:
        raise ValueError("synth_ecg needs fs >= 250 Hz")
    if len(ibi) == 0:
        return Signal(np.empty(0), fs, "ecg", units="mV")
    beats = ibi.beat_times()
    if duration is None:
        duration = float(beats[-1]) + 0.5
    n = int(round(duration * fs))
    x = np.zeros(n)
    half = int(round(0.35 * fs))
    tpl_t = np.arange(-half, half + 1) / fs
    template = np.zeros_like(tpl_t)
    for amp, mu, sd in _ECG_WAVES:
        template += amp * np.exp(-0.5 * ((tpl_t - mu) / sd) ** 2)
    for bt in beats:
        c = int(round(bt * fs))
        lo, hi = c - half, c + half + 1
        s_lo, s_hi = max(0, -lo), len(tpl_t) - max(0, hi - n)
        lo, hi = max(lo, 0), min(hi, n)
        if lo < hi:
            x[lo:hi] += template[s_lo:s_hi]
    if noise_rms > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(n)
        b, a = butter(4, 35.0 / (fs / 2), btype="low")
        noise = lfilter(b, a, noise)
        noise *= noise_rms / np.sqrt(np.mean(noise ** 2))
        x += noise
    return Signal(x, fs, "ecg", units="mV")


def noise_rms_for_snr(clean: np.ndarray, snr_db: float) -> float:
    """Noise RMS giving the requested power SNR against the clean signal."""
    return float(np.sqrt(np.mean(clean ** 2)) * 10 ** (-snr_db / 20.0))


def synth_respiration(rate: float, fs: float, duration: float, seed=0) -> Signal:
    """Respiration waveform with round(rate * duration / 60) inspiration
    maxima (±1): a sinusoid at the breathing rate with slow amplitude
    modulation and a small noise floor."""
    if not 5 <= rate <= 60:
        raise ValueError(f"respiration rate {rate} outside [5, 60] cycles/min")
    if fs < 10:
        raise ValueError("synth_respiration needs fs >= 10 Hz")
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * fs))) / fs
    phase = 2 * np.pi * rate / 60.0 * t + rng.uniform(0, 2 * np.pi)
    am = 1.0 + 0.1 * np.sin(2 * np.pi * 0.01 * t + rng.uniform(0, 2 * np.pi))
    x = am * np.sin(phase) + 0.01 * rng.standard_normal(len(t))
    return Signal(x, fs, "respiration", units="a.u.")


def synth_eda(ground: GroundTruth, fs: float, duration: float) -> Signal:
    """EDA waveform: tonic level plus each SCR convolved with the Bateman
    impulse response used by the decomposition module."""
    if ground.tonic_level < 0:
        raise ValueError("tonic_level must be >= 0")
    n = int(round(duration * fs))
    driver = np.zeros(n)
    for onset, amp in zip(ground.scr_onsets, ground.scr_amps):
        i = int(round(onset * fs))
        if 0 <= i < n:
            driver[i] += amp
    kernel = bateman_kernel(fs)
    x = ground.tonic_level + np.convolve(driver, kernel)[:n]
    return Signal(x, fs, "eda", units="uS")


def gen_scr_events(rate_per_min: float, duration: float, rng,
                   amp_mean: float = 0.04, amp_sd: float = 0.02):
    """Draw SCR onsets (Poisson, >= 2 s apart) and lognormal-ish amplitudes.

    No onset lands in the final 5 s: a response truncated at the block edge
    never develops a measurable rise.
    """
    onsets = []
    duration = duration - 5.0
    t = float(rng.exponential(60.0 / rate_per_min)) if rate_per_min > 0 else duration
    while t < duration:
        onsets.append(t)
        t += 2.0 + rng.exponential(max(60.0 / rate_per_min - 2.0, 0.5))
    onsets = np.array(onsets)
    amps = np.clip(rng.normal(amp_mean, amp_sd, size=len(onsets)), 0.016, None)
    return onsets, amps


class EcgStream:
    """Incremental ECG synthesis for closed-loop simulation.

    Beats are appended as they are generated; samples are released only up to
    a time that no future beat's template can influence (the beat template
    spans +-0.35 s and beats are at least 0.3 s apart). Band-limited noise is
    filtered statefully so chunk boundaries are seamless.
    """

    def __init__(self, fs: float = 1000.0, noise_rms: float = 0.0, seed=0):
        if fs < 250:
            raise ValueError("EcgStream needs fs >= 250 Hz")
        self.fs = float(fs)
        self._half = int(round(0.35 * fs))
        tpl_t = np.arange(-self._half, self._half + 1) / fs
        self._template = np.zeros_like(tpl_t)
        for amp, mu, sd in _ECG_WAVES:
            self._template += amp * np.exp(-0.5 * ((tpl_t - mu) / sd) ** 2)
        self._cursor = 0  # index of the next unreleased sample
        self._beats = []  # beats whose template may still overlap the cursor
        self.noise_rms = noise_rms
        if noise_rms > 0:
            self._rng = np.random.default_rng(seed)
            self._nb, self._na = butter(4, 35.0 / (fs / 2), btype="low")
            self._zi = np.zeros(max(len(self._nb), len(self._na)) - 1)
            imp = np.zeros(int(4 * fs))
            imp[0] = 1.0
            h = lfilter(self._nb, self._na, imp)
            self._noise_gain = noise_rms / np.sqrt(np.sum(h ** 2))

    def add_beat(self, t: float) -> None:
        self._beats.append(float(t))

    def clean_rms(self, mean_ibi_s: float) -> float:
        """Long-run RMS of the noise-free waveform at the given mean IBI."""
        return float(np.sqrt(np.sum(self._template ** 2)
                             / (mean_ibi_s * self.fs)))

    def release(self, upto_t: float) -> tuple[np.ndarray, float]:
        """Samples in [cursor, upto_t) and the chunk start time."""
        n_end = int(math.floor(upto_t * self.fs))
        n0 = self._cursor
        if n_end <= n0:
            return np.empty(0), n0 / self.fs
        x = np.zeros(n_end - n0)
        keep = []
        for bt in self._beats:
            c = int(round(bt * self.fs))
            lo, hi = c - self._half, c + self._half + 1
            if hi > n_end:
                keep.append(bt)
            if hi <= n0 or lo >= n_end:
                continue
            s_lo = max(0, n0 - lo)
            s_hi = len(self._template) - max(0, hi - n_end)
            x[max(lo, n0) - n0:min(hi, n_end) - n0] += self._template[s_lo:s_hi]
        self._beats = keep
        if self.noise_rms > 0:
            white = self._rng.standard_normal(len(x))
            noise, self._zi = lfilter(self._nb, self._na, white, zi=self._zi)
            x += self._noise_gain * noise
        self._cursor = n_end
        return x, n0 / self.fs


# ---------------------------------------------------------------------------
# player model


@dataclass
class PlayerModel:
    """Behavioral model driving headless game sessions."""

    base_accuracy: float = 0.97
    accuracy_slope: float = 0.0  # accuracy lost per button beyond the first
    press_interval_ms: float = 700.0
    press_jitter_ms: float = 150.0
    stress_penalty: float = 0.1  # accuracy / speed degradation under stress
    pedal_rt_mean_ms: float = 1100.0
    pedal_rt_sd_ms: float = 300.0
    pedal_omission_rate: float = 0.02

    def __post_init__(self):
        if not 0 <= self.base_accuracy <= 1:
            raise ValueError("base_accuracy must be in [0, 1]")
        if self.press_interval_ms <= 0:
            raise ValueError("press_interval_ms must be positive")

    def press_accuracy(self, length: int, stress: bool = False) -> float:
        """Per-button press accuracy as a function of pattern length."""
        acc = self.base_accuracy - self.accuracy_slope * max(0, length - 1)
        if stress:
            acc *= 1.0 - self.stress_penalty
        return min(max(acc, 0.0), 1.0)


def simulate_player(model: PlayerModel, trial: Trial, seed,
                    stress: bool = False) -> list[PlayerAction]:
    """Emit timed presses for one trial, ending with a validation press.

    Each pattern button is pressed correctly with the model's per-button
    accuracy; a miss presses a random wrong cell instead (left uncorrected).
    """
    rng = np.random.default_rng(seed)
    length = len(trial.pattern)
    acc = model.press_accuracy(length, stress)
    interval = model.press_interval_ms * (1.0 + (model.stress_penalty if stress else 0.0))
    pattern_set = set(trial.pattern)
    pressed_wrong = set()
    t = trial.reproduction_start
    actions = []
    for cell in trial.pattern:
        t += max(0.05, rng.normal(interval, model.press_jitter_ms) / 1000.0)
        if rng.random() < acc:
            actions.append(PlayerAction(t=t, kind="press", cell=cell))
        else:
            wrong = _random_wrong_cell(rng, pattern_set | pressed_wrong)
            pressed_wrong.add(wrong)
            actions.append(PlayerAction(t=t, kind="press", cell=wrong))
    t += max(0.05, rng.normal(interval, model.press_jitter_ms) / 1000.0)
    actions.append(PlayerAction(t=t, kind="validate"))
    return actions


def _random_wrong_cell(rng, excluded):
    from .game import GRID_SIZE
    while True:
        c = int(rng.integers(GRID_SIZE * GRID_SIZE))
        cell = (c // GRID_SIZE, c % GRID_SIZE)
        if cell not in excluded:
            return cell
