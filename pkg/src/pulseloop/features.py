"""Offline feature extraction: cardiac, respiratory, electrodermal and behavioral.

Electrodermal decomposition follows the continuous-decomposition idea: the
skin-conductance signal is modeled as a smooth tonic level plus a nonnegative
phasic driver convolved with a bi-exponential (Bateman) impulse response.
The sampled Bateman kernel is rational in z, so the driver is recovered by an
exact inverse filter followed by baseline removal and clipping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import minimum_filter1d, uniform_filter1d
from scipy.optimize import nnls
from scipy.signal import find_peaks, lfilter, resample_poly, welch

from .rpeak import IbiSeries, InsufficientDataError
from .signals import Signal

# Bateman impulse-response time constants (rise, decay), seconds.
TAU_RISE = 0.75
TAU_DECAY = 2.0

#: SCR amplitude counting threshold, uS (inclusive).
SCR_THRESHOLD_US = 0.015

# expected frequency band per channel kind, Hz
SIGNAL_BANDS = {"ecg": (0.8, 3.0), "respiration": (0.1, 0.8), "eda": (0.1, 0.3)}


class DecompositionError(RuntimeError):
    """Raised when EDA decomposition fails to reach an acceptable residual."""


# ---------------------------------------------------------------------------
# cardiac


def mean_hr(ibi: IbiSeries) -> float:
    """Mean heart rate in bpm: average of 60000/IBI over all intervals."""
    if len(ibi) < 2:
        raise InsufficientDataError("mean HR needs at least 2 intervals")
    return float(np.mean(60000.0 / ibi.intervals))


def rmssd(ibi: IbiSeries) -> float:
    """Root mean square of successive IBI differences, ms."""
    if len(ibi) < 3:
        raise InsufficientDataError("RMSSD needs at least 3 intervals")
    d = np.diff(ibi.intervals)
    return float(np.sqrt(np.mean(d * d)))


# ---------------------------------------------------------------------------
# respiration


def respiration_rate(signal: Signal, min_peak_gap=1.2) -> float:
    """Respiration rate in cycles/min from inspiration peaks.

    Peaks are found by prominence with a refractory gap of ``min_peak_gap``
    seconds; the rate is 60 * (peak count - 1) / (last - first peak time).
    """
    if signal.kind != "respiration":
        raise ValueError(f"expected a respiration signal, got {signal.kind!r}")
    if signal.duration < 30.0:
        raise InsufficientDataError("respiration rate needs >= 30 s of signal")
    x = signal.data - np.mean(signal.data)
    spread = np.std(x)
    if spread < 1e-12:
        raise InsufficientDataError("respiration signal is constant")
    peaks, _ = find_peaks(x, distance=max(1, int(min_peak_gap * signal.fs)),
                          prominence=0.5 * spread)
    if len(peaks) < 2:
        raise InsufficientDataError("fewer than 2 inspiration peaks found")
    span = (peaks[-1] - peaks[0]) / signal.fs
    return 60.0 * (len(peaks) - 1) / span


# ---------------------------------------------------------------------------
# electrodermal activity


def bateman_kernel(fs: float, duration: float = 12.0,
                   tau_rise: float = TAU_RISE, tau_decay: float = TAU_DECAY) -> np.ndarray:
    """Sampled bi-exponential impulse response, normalized to unit peak.

    ``k[n] = c * (exp(-n/fs/tau_decay) - exp(-n/fs/tau_rise))`` with c chosen
    so the sampled maximum equals 1.
    """
    n = np.arange(int(round(duration * fs)))
    b_rise = math.exp(-1.0 / (fs * tau_rise))
    b_decay = math.exp(-1.0 / (fs * tau_decay))
    k = b_decay ** n - b_rise ** n
    peak = k.max()
    if peak <= 0:
        raise ValueError("degenerate Bateman kernel")
    return k / peak


def _kernel_poles(fs, tau_rise=TAU_RISE, tau_decay=TAU_DECAY):
    b_rise = math.exp(-1.0 / (fs * tau_rise))
    b_decay = math.exp(-1.0 / (fs * tau_decay))
    # unit-peak normalization constant of the sampled kernel
    n = np.arange(int(round(12.0 * fs)))
    peak = (b_decay ** n - b_rise ** n).max()
    return b_rise, b_decay, 1.0 / peak


@dataclass
class EdaDecomposition:
    """Tonic/phasic split of an EDA signal.

    ``driver`` is the nonnegative phasic driver in uS/s; ``scrs`` holds
    (onset_s, amplitude_uS) pairs; ``residual_rms`` is the reconstruction
    residual of tonic + driver * IRF against the input.
    """

    tonic: Signal
    driver: Signal
    scrs: list
    residual_rms: float

    @property
    def tonic_mean(self) -> float:
        return float(np.mean(self.tonic.data))


def eda_decompose(signal: Signal, target_fs: float = 10.0,
                  min_driver_height: float = 0.004,
                  min_scr_amp: float = 0.002,
                  tonic_knot_s: float = 10.0,
                  max_residual_frac: float = 0.25) -> EdaDecomposition:
    """Decompose an EDA signal into tonic level, phasic driver and SCR events.

    Two stages: (1) the downsampled signal is inverse-filtered through the
    exact rational inverse of the sampled Bateman kernel, and local maxima of
    the baseline-corrected driver mark candidate SCR onsets; (2) one kernel
    per candidate plus a tonic hat basis (knots every ``tonic_knot_s``
    seconds) is fit to the signal by nonnegative least squares, yielding the
    SCR amplitudes, the smooth tonic and a nonnegative impulse driver.
    """
    if signal.kind != "eda":
        raise ValueError(f"expected an EDA signal, got {signal.kind!r}")
    if signal.duration < 60.0:
        raise InsufficientDataError("EDA decomposition needs >= 60 s of signal")
    if signal.fs < 10.0:
        raise ValueError("EDA decomposition needs fs >= 10 Hz")

    if signal.fs > 1.6 * target_fs:
        down = int(round(signal.fs / target_fs))
        y = resample_poly(signal.data, 1, down, padtype="line")
        fs = signal.fs / down
    else:
        y = signal.data.astype(np.float64)
        fs = signal.fs
    n = len(y)

    b_rise, b_decay, c = _kernel_poles(fs)
    # inverse of H(z) = c (bd - br) z^-1 / ((1 - br z^-1)(1 - bd z^-1))
    num = np.array([1.0, -(b_rise + b_decay), b_rise * b_decay])
    gain = c * (b_decay - b_rise)
    w = lfilter(num, [1.0], y - y[0]) / gain
    d = np.zeros_like(y)
    d[:-1] = w[1:]  # undo the one-sample kernel delay
    # tame deconvolution ringing before peak picking
    d = uniform_filter1d(d, size=max(1, int(round(0.3 * fs))))
    # remove the slow (tonic-driven) component, then clip
    win = max(3, int(round(4.0 * fs)))
    baseline = uniform_filter1d(minimum_filter1d(d, size=win), size=win)
    d = np.clip(d - baseline, 0.0, None)
    peaks, _ = find_peaks(d, height=min_driver_height,
                          distance=max(1, int(round(1.0 * fs))))

    # NNLS fit: one shifted kernel per candidate + tonic hat functions
    kernel = bateman_kernel(fs)
    knot_step = max(1, int(round(tonic_knot_s * fs)))
    knots = np.arange(0, n + knot_step, knot_step)
    cols = []
    for p in peaks:
        col = np.zeros(n)
        seg = kernel[:n - p]
        col[p:p + len(seg)] = seg
        cols.append(col)
    for k in knots:
        col = np.clip(1.0 - np.abs(np.arange(n) - k) / knot_step, 0.0, None)
        cols.append(col)
    a_mat = np.column_stack(cols)
    coefs, _ = nnls(a_mat, y)
    scr_amps = coefs[:len(peaks)]
    tonic = a_mat[:, len(peaks):] @ coefs[len(peaks):]

    keep = scr_amps > min_scr_amp
    scrs = [(float(signal.t0 + p / fs), float(a))
            for p, a in zip(peaks[keep], scr_amps[keep])]
    driver = np.zeros(n)
    driver[peaks[keep]] = scr_amps[keep] * fs  # impulse train, uS/s

    phasic = a_mat[:, :len(peaks)] @ scr_amps
    residual = y - tonic - phasic
    residual_rms = float(np.sqrt(np.mean(residual * residual)))

    rng = float(np.ptp(y))
    if rng > 1e-9 and residual_rms > max_residual_frac * rng:
        raise DecompositionError(
            f"decomposition residual RMS {residual_rms:.4g} exceeds "
            f"{max_residual_frac:.0%} of signal range {rng:.4g}")

    return EdaDecomposition(
        tonic=Signal(tonic, fs, "eda", units=signal.units, t0=signal.t0),
        driver=Signal(driver, fs, "eda", units="uS/s", t0=signal.t0),
        scrs=scrs,
        residual_rms=residual_rms,
    )


def scr_stats(decomp: EdaDecomposition, threshold: float = SCR_THRESHOLD_US):
    """Count SCRs with amplitude >= threshold and their mean amplitude.

    With zero qualifying SCRs the mean is NaN.
    """
    amps = np.array([a for _, a in decomp.scrs])
    amps = amps[amps >= threshold]
    if len(amps) == 0:
        return 0, float("nan")
    return int(len(amps)), float(np.mean(amps))


# ---------------------------------------------------------------------------
# normalization and behavioral indicators


def normalize(value: float, baseline: float) -> float:
    """Relative difference to the baseline-condition value: (x - b) / b."""
    if baseline == 0:
        raise ValueError("baseline value must be nonzero")
    return (value - baseline) / baseline


@dataclass(frozen=True)
class TrialPerf:
    """Per-trial performance summary used by the behavioral indicators."""

    length: int
    completion_s: float
    success: bool
    timeout: bool


def _raw_game_score(trials) -> float:
    n = len(trials)
    success_rate = sum(t.success for t in trials) / n
    mean_len = sum(t.length for t in trials) / n
    mean_completion = sum(t.completion_s for t in trials) / n
    if mean_completion <= 0:
        raise ValueError("mean completion time must be positive")
    return success_rate * mean_len / mean_completion


def behavioral_indicators(trials, cohort):
    """Cohort-normalized game and timeout indicators for one block.

    The raw game score is success rate x mean pattern length / mean completion
    time; the timeout score is the timeout rate. Both are divided by the
    cohort mean of the same quantity so the cohort average is 1.
    """
    if not trials:
        raise ValueError("no trials for this block")
    if not cohort:
        raise ValueError("empty cohort")
    raw = _raw_game_score(trials)
    cohort_raw = np.mean([_raw_game_score(ts) for ts in cohort])
    game_ind = raw / cohort_raw if cohort_raw != 0 else 0.0

    t_rate = sum(t.timeout for t in trials) / len(trials)
    cohort_t = np.mean([sum(t.timeout for t in ts) / len(ts) for ts in cohort])
    timeout_ind = t_rate / cohort_t if cohort_t != 0 else 0.0
    return float(game_ind), float(timeout_ind)


# ---------------------------------------------------------------------------
# quality screening


@dataclass
class ScreenReport:
    """Outcome of automated signal quality screening."""

    accepted: bool
    failed_rules: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


def quality_screen(signal: Signal, expected_duration: float = 480.0,
                   line_frac: float = 0.5, drift_limit: float = None) -> ScreenReport:
    """Screen a labeled signal for duration, narrowband interference and drift.

    Rules:
      * ``duration``: signal shorter than the expected block duration.
      * ``band``: a narrowband component (±0.5 Hz) outside the kind's
        expected frequency band carries more than ``line_frac`` of the
        non-DC power. Broadband content (e.g. QRS harmonics) passes.
      * ``drift``: absolute difference between the first and last 30 s means
        exceeds ``drift_limit`` (skipped when ``drift_limit`` is None).
    """
    failed = []
    details = {"duration_s": signal.duration}
    if signal.duration < expected_duration:
        failed.append("duration")

    band = SIGNAL_BANDS[signal.kind]
    nperseg = min(len(signal.data), int(20 * signal.fs))
    if nperseg >= 64:
        f, pxx = welch(signal.data, fs=signal.fs, nperseg=nperseg)
        use = f >= 0.05  # exclude DC / very slow trend
        f, pxx = f[use], pxx[use]
        total = pxx.sum()
        if total > 0:
            cum = np.concatenate([[0.0], np.cumsum(pxx)])
            lo_idx = np.searchsorted(f, f - 0.5, side="left")
            hi_idx = np.searchsorted(f, f + 0.5, side="right")
            window_power = cum[hi_idx] - cum[lo_idx]
            out_of_band = (f < band[0]) | (f > band[1])
            worst = (window_power[out_of_band].max() / total
                     if out_of_band.any() else 0.0)
            details["out_of_band_line_fraction"] = float(worst)
            if worst > line_frac:
                failed.append("band")

    if drift_limit is not None and signal.duration >= 60.0:
        n = int(30 * signal.fs)
        drift = abs(float(np.mean(signal.data[-n:]) - np.mean(signal.data[:n])))
        details["drift"] = drift
        if drift > drift_limit:
            failed.append("drift")

    return ScreenReport(accepted=not failed, failed_rules=failed, details=details)


# ---------------------------------------------------------------------------
# combined feature set


@dataclass
class FeatureSet:
    """All per-block features; NaN marks a feature that was not computed."""

    hr_bpm: float = float("nan")
    rmssd_ms: float = float("nan")
    rr_cpm: float = float("nan")
    n_scrs: float = float("nan")
    scr_amp_mean: float = float("nan")
    tonic_mean: float = float("nan")
    game_indicator: float = float("nan")
    timeout_indicator: float = float("nan")
    rt_mean_ms: float = float("nan")
    omissions: float = float("nan")

    #: fixed CSV column order
    COLUMNS = ("hr_bpm", "rmssd_ms", "rr_cpm", "n_scrs", "scr_amp_mean",
               "tonic_mean", "game_indicator", "timeout_indicator",
               "rt_mean_ms", "omissions")

    def as_row(self):
        return [getattr(self, c) for c in self.COLUMNS]

    @classmethod
    def from_row(cls, row):
        return cls(**{c: float(v) for c, v in zip(cls.COLUMNS, row)})
