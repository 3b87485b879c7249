"""Block and experiment orchestration, event logging and deterministic replay.

One coordinator owns the clock: every persisted event carries a timestamp
from a single monotonic source and logs are sorted by (t, event rank). A
block is reproducible bit-exactly from its config seed plus the logged timed
input script.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .biofeedback import TriggerScheduler
from .features import (FeatureSet, TrialPerf, behavioral_indicators,
                       eda_decompose, mean_hr, respiration_rate, rmssd,
                       scr_stats)
from .game import (Mode, OutcomeKind, handle_press, initial_state, new_trial,
                   validate, expire, apply_outcome)
from .heartsim import (EcgStream, GroundTruth, HeartModel, HeartParams,
                       PlayerModel, gen_scr_events, simulate_player,
                       synth_eda, synth_respiration)
from .probe import BeepEvent, match_responses, schedule_beeps
from .rpeak import StreamingDetector, ibi_from_beats
from .signals import Signal

LOG_VERSION = 1

CONDITIONS = ("EG", "DG", "DSG", "DSGR")

#: pause between a trial's end and the next fixation onset, seconds
INTER_TRIAL_S = 1.0

#: deterministic tie-break for events sharing a timestamp
_EVENT_RANK = {"truth_beat": 0, "truth_scr": 1, "beat": 2, "vibe": 3,
               "trial_start": 4, "press": 5, "validate": 6, "trial_end": 7,
               "beep": 8, "pedal": 9, "block_end": 10}


class LogFormatError(ValueError):
    """Raised on malformed or version-mismatched event logs."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class BlockConfig:
    """One experimental block.

    The condition fixes the game mode and the manipulations: EG is the easy
    baseline; DG/DSG/DSGR are difficult, with the stressors active in DSG and
    DSGR and the vibration feedback active only in DSGR.
    """

    condition: str
    duration: float = 480.0
    seed: int = 0
    bf_factor: float = 1.5
    probe_min_gap: float = 15.0
    probe_max_gap: float = 30.0
    training: bool = False

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.training and self.condition != "EG":
            raise ValueError("the training block is an easy-mode block")

    @property
    def mode(self) -> Mode:
        return Mode.EASY if self.condition == "EG" else Mode.DIFFICULT

    @property
    def stress(self) -> bool:
        return self.condition in ("DSG", "DSGR")

    @property
    def bf_enabled(self) -> bool:
        return self.condition == "DSGR"


def training_preset(seed: int = 0) -> BlockConfig:
    """Familiarization block: 3 minutes, easy mode, excluded from analysis."""
    return BlockConfig(condition="EG", duration=180.0, seed=seed, training=True)


@dataclass
class ExperimentPlan:
    """Block order for one participant: EG always first, the remaining three
    conditions in a uniformly drawn order."""

    participant: int
    blocks: list

    def conditions(self):
        return [b.condition for b in self.blocks if not b.training]


def make_plan(participant: int, rng, seeds, duration: float = 480.0,
              bf_factor: float = 1.5, include_training: bool = False,
              conditions=None) -> ExperimentPlan:
    """Draw a participant's plan; ``seeds`` supplies one int per block.

    With the default (full) condition set the order is EG followed by a
    uniform permutation of the other three. An explicit ``conditions``
    subset is run in the given order (reduced designs for simulation studies).
    """
    if conditions is None:
        order = ["EG"] + [str(c) for c in rng.permutation(("DG", "DSG", "DSGR"))]
    else:
        order = list(conditions)
    blocks = []
    seeds = iter(seeds)
    if include_training:
        blocks.append(training_preset(seed=int(next(seeds))))
    for cond in order:
        blocks.append(BlockConfig(condition=cond, duration=duration,
                                  seed=int(next(seeds)), bf_factor=bf_factor))
    return ExperimentPlan(participant=participant, blocks=blocks)


@dataclass
class ParticipantModel:
    """Bundle of ground-truth models for one simulated participant."""

    heart: HeartParams = field(default_factory=HeartParams)
    player: PlayerModel = field(default_factory=PlayerModel)
    rr_cpm: float = 19.0
    tonic_us: float = 0.64
    scr_rate_base: float = 3.0
    scr_rate_stress: float = 5.0


# ---------------------------------------------------------------------------
# block record


@dataclass
class BlockRecord:
    """Everything persisted for one block: config, the ordered event log,
    questionnaire responses, derived features and raw signals."""

    config: BlockConfig
    events: list
    survey: dict = None
    features: FeatureSet = None
    signals: dict = field(default_factory=dict)  # kind -> Signal
    incomplete: bool = False

    def trials(self) -> list:
        """Per-trial performance summaries derived from the event log."""
        out = []
        length = None
        for e in self.events:
            if e["type"] == "trial_start":
                length = e["length"]
            elif e["type"] == "trial_end":
                kind = e["kind"]
                out.append(TrialPerf(length=length,
                                     completion_s=e["completion_ms"] / 1000.0,
                                     success=kind == "success",
                                     timeout=kind == "timeout"))
        return out

    def of_type(self, kind: str) -> list:
        return [e for e in self.events if e["type"] == kind]


def _sorted_events(events):
    return sorted(events, key=lambda e: (e["t"], _EVENT_RANK[e["type"]]))


# ---------------------------------------------------------------------------
# game loop


class _Peekable:
    def __init__(self, items):
        self._items = list(items)
        self._i = 0

    def peek(self):
        return self._items[self._i] if self._i < len(self._items) else None

    def pop(self):
        a = self.peek()
        self._i += 1
        return a


def _drive_game(config: BlockConfig, game_rng, supply):
    """Fold the adaptive game over a timed action source.

    ``supply(trial_index, trial, state)`` returns a peekable action stream for
    the new trial; actions after the stress deadline or the block end are
    never consumed. Used identically by live runs (generated actions) and
    replay (logged actions), which is what makes replay bit-exact.
    """
    events, trials = [], []
    state = initial_state(config.mode, config.stress)
    t = 0.0
    idx = 0
    while t < config.duration:
        trial = new_trial(state, game_rng, t)
        events.append({"t": t, "type": "trial_start",
                       "pattern": [list(c) for c in trial.pattern],
                       "length": state.length,
                       "time_limit_ms": state.time_limit_ms})
        deadline = (trial.reproduction_start + state.time_limit_ms / 1000.0
                    if config.stress else math.inf)
        horizon = min(deadline, config.duration)
        src = supply(idx, trial, state)
        outcome = None
        end_t = None
        while True:
            a = src.peek()
            if a is None or a.t > horizon:
                if config.stress and deadline <= config.duration:
                    outcome = expire(state, deadline)
                    end_t = deadline
                break
            src.pop()
            if a.t < trial.reproduction_start:
                continue  # input during fixation/display: engine ignores
            if a.kind == "press":
                handle_press(state, a.cell, a.t)
                events.append({"t": a.t, "type": "press", "cell": list(a.cell)})
            elif a.kind == "validate":
                events.append({"t": a.t, "type": "validate"})
                outcome = validate(state, a.t)
                end_t = a.t
                break
        if outcome is None:
            break  # block ended mid-trial; partial trial is not scored
        apply_outcome(state, outcome)
        events.append({"t": end_t, "type": "trial_end",
                       "kind": outcome.kind.value,
                       "completion_ms": outcome.completion_ms,
                       "correct": outcome.correct,
                       "score": state.score if config.stress else None,
                       "next_length": state.length,
                       "time_limit_ms": state.time_limit_ms})
        trials.append(TrialPerf(length=len(trial.pattern),
                                completion_s=outcome.completion_ms / 1000.0,
                                success=outcome.kind is OutcomeKind.SUCCESS,
                                timeout=outcome.kind is OutcomeKind.TIMEOUT))
        idx += 1
        t = end_t + INTER_TRIAL_S
    return events, trials


# ---------------------------------------------------------------------------
# heart / biofeedback loop


def _last_stimulus_interval(trig_times):
    if len(trig_times) < 2:
        return None
    iv = (trig_times[-1] - trig_times[-2]) * 1000.0
    return iv if 200.0 <= iv <= 4000.0 else None


def _run_heart(config: BlockConfig, heart: HeartParams, heart_seed, noise_seed,
               fidelity: str, snr_db: float, ecg_fs: float):
    """Co-simulate the heart, detection and the trigger scheduler.

    ``fidelity='waveform'`` synthesizes ECG and runs the streaming detector;
    ``fidelity='beat'`` treats ground-truth beats as detected (fast path for
    closed-loop simulation studies).
    """
    events = []
    model = HeartModel(heart, heart_seed, stress=config.stress)
    sched = TriggerScheduler(factor=config.bf_factor, enabled=config.bf_enabled)
    trig_times = []
    true_beats = [0.0]
    events.append({"t": 0.0, "type": "truth_beat"})

    ecg = None
    detector = None
    if fidelity == "waveform":
        noise_rms = 0.0
        if snr_db is not None:
            clean = EcgStream(fs=ecg_fs).clean_rms(60.0 / heart.mean_hr)
            noise_rms = clean * 10 ** (-snr_db / 20.0)
        ecg = EcgStream(fs=ecg_fs, seed=noise_seed, noise_rms=noise_rms)
        ecg.add_beat(0.0)
        detector = StreamingDetector(ecg_fs)
    elif fidelity != "beat":
        raise ValueError(f"unknown fidelity {fidelity!r}")

    ecg_chunks = []

    def on_detected(bt, amp=None, prom=None):
        for trig in sched.advance(bt):
            trig_times.append(trig.t)
            events.append({"t": trig.t, "type": "vibe", "p1_ms": trig.pulse_ms,
                           "gap_ms": trig.gap_ms, "p2_ms": trig.pulse2_ms,
                           "motors": trig.motors})
        sched.on_beat(bt)
        ev = {"t": float(bt), "type": "beat"}
        if amp is not None:
            ev["amp"] = float(amp)
            ev["prom"] = float(prom)
        events.append(ev)

    def push_upto(t):
        chunk, t0 = ecg.release(t)
        if len(chunk):
            ecg_chunks.append(chunk)
            for b in detector.push_chunk(chunk, t0):
                on_detected(b.t, b.amplitude, b.prominence)

    while True:
        tb = model.next_beat(_last_stimulus_interval(trig_times))
        if tb > config.duration:
            break
        true_beats.append(tb)
        events.append({"t": tb, "type": "truth_beat"})
        if fidelity == "beat":
            on_detected(tb)
        else:
            ecg.add_beat(tb)
            push_upto(tb - 0.06)

    if fidelity == "waveform":
        push_upto(config.duration)
    for trig in sched.advance(config.duration):
        trig_times.append(trig.t)
        events.append({"t": trig.t, "type": "vibe", "p1_ms": trig.pulse_ms,
                       "gap_ms": trig.gap_ms, "p2_ms": trig.pulse2_ms,
                       "motors": trig.motors})

    ecg_signal = None
    if fidelity == "waveform" and ecg_chunks:
        ecg_signal = Signal(np.concatenate(ecg_chunks), ecg_fs, "ecg", units="mV")
    return events, np.array(true_beats), ecg_signal


# ---------------------------------------------------------------------------
# probe loop


def _run_probe(config: BlockConfig, player: PlayerModel, rng):
    events = []
    beeps = schedule_beeps(config.duration, config.probe_min_gap,
                           config.probe_max_gap, rng)
    rt_mean = player.pedal_rt_mean_ms * (1.0 + (player.stress_penalty / 2.0
                                                if config.stress else 0.0))
    for b in beeps:
        events.append({"t": b.t, "type": "beep"})
        if rng.random() < player.pedal_omission_rate:
            continue
        rt = min(max(rng.normal(rt_mean, player.pedal_rt_sd_ms), 150.0), 2900.0)
        events.append({"t": b.t + rt / 1000.0, "type": "pedal"})
    return events


# ---------------------------------------------------------------------------
# surveys


def synthesize_survey(config: BlockConfig, rng) -> dict:
    """Plausible questionnaire responses for a headless participant."""
    bump = 6.0 if config.stress else (2.0 if config.mode is Mode.DIFFICULT else 0.0)
    tlx = {k: float(np.clip(round(rng.normal(8.0 + bump, 2.5)), 0, 20))
           for k in ("mental", "physical", "temporal", "performance",
                     "effort", "frustration")}
    gew = {k: int(np.clip(round(rng.normal(2.0 + bump / 6.0, 0.8)), 1, 5))
           for k in ("impatience", "frustration", "sadness", "social_worry",
                     "dissatisfaction")}
    return {"tlx": tlx, "gew_negative": gew}


# ---------------------------------------------------------------------------
# features


def block_features(record: BlockRecord) -> FeatureSet:
    """Recompute the per-block feature set from the event log and signals.

    The cohort-normalized behavioral indicators need the whole cohort and are
    filled in at experiment level; probe statistics come from the logged
    beep/pedal events.
    """
    fs = FeatureSet()
    beats = [e["t"] for e in record.events if e["type"] == "beat"]
    ibi = ibi_from_beats(beats)
    if len(ibi) >= 3:
        fs.hr_bpm = mean_hr(ibi)
        fs.rmssd_ms = rmssd(ibi)
    resp = record.signals.get("respiration")
    if resp is not None:
        fs.rr_cpm = respiration_rate(resp)
    eda = record.signals.get("eda")
    if eda is not None:
        dec = eda_decompose(eda)
        fs.n_scrs, fs.scr_amp_mean = scr_stats(dec)
        fs.tonic_mean = float(np.mean(dec.tonic.data))
    beeps = [e["t"] for e in record.events if e["type"] == "beep"]
    pedals = [e["t"] for e in record.events if e["type"] == "pedal"]
    if beeps:
        m = match_responses(beeps, pedals)
        rts = m.reaction_times_ms()
        fs.rt_mean_ms = float(np.mean(rts)) if rts else float("nan")
        fs.omissions = float(m.omissions)
    return fs


# ---------------------------------------------------------------------------
# run_block / replay


def _block_seeds(seed: int):
    """Named child seeds derived deterministically from the block seed."""
    names = ("heart", "noise", "game", "player", "probe", "scr", "resp", "survey")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return dict(zip(names, children))


def run_block(config: BlockConfig, participant: ParticipantModel = None,
              fidelity: str = "waveform", snr_db: float = 20.0,
              ecg_fs: float = 1000.0, eda_fs: float = 32.0,
              with_survey: bool = True) -> BlockRecord:
    """Run one headless block with a simulated participant.

    Drives game and probe concurrently for the block duration on one clock,
    feeds the synthetic ECG through the streaming detector and the vibration
    scheduler (active only when the config enables it), and logs every event.
    """
    participant = participant or ParticipantModel()
    seeds = _block_seeds(config.seed)

    heart_events, true_beats, ecg_signal = _run_heart(
        config, participant.heart, seeds["heart"], seeds["noise"],
        fidelity, snr_db, ecg_fs)

    player_rng = np.random.default_rng(seeds["player"])

    def supply(idx, trial, state):
        trial_seed = int(player_rng.integers(2 ** 63))
        return _Peekable(simulate_player(participant.player, trial, trial_seed,
                                         stress=config.stress))

    game_rng = np.random.default_rng(seeds["game"])
    game_events, _ = _drive_game(config, game_rng, supply)

    probe_events = _run_probe(config, participant.player,
                              np.random.default_rng(seeds["probe"]))

    signals = {}
    truth_events = []
    if fidelity == "waveform":
        scr_rng = np.random.default_rng(seeds["scr"])
        rate = (participant.scr_rate_stress if config.stress
                else participant.scr_rate_base)
        onsets, amps = gen_scr_events(rate, config.duration, scr_rng)
        truth_events = [{"t": float(t), "type": "truth_scr", "amp": float(a)}
                        for t, a in zip(onsets, amps)]
        ground = GroundTruth(beat_times=true_beats, scr_onsets=onsets,
                             scr_amps=amps, inspiration_times=np.array([]),
                             tonic_level=participant.tonic_us)
        signals["ecg"] = ecg_signal
        signals["eda"] = synth_eda(ground, fs=eda_fs, duration=config.duration)
        signals["respiration"] = synth_respiration(
            participant.rr_cpm, fs=eda_fs, duration=config.duration,
            seed=seeds["resp"])

    events = _sorted_events(heart_events + truth_events + game_events
                            + probe_events
                            + [{"t": config.duration, "type": "block_end"}])
    survey = (synthesize_survey(config, np.random.default_rng(seeds["survey"]))
              if with_survey else None)
    record = BlockRecord(config=config, events=events, survey=survey,
                         signals=signals)
    record.features = block_features(record)
    return record


def replay(record: BlockRecord) -> BlockRecord:
    """Recompute a block from its logged inputs.

    Trial sequence and outcomes are re-folded from the config seed plus the
    logged presses; vibration triggers are re-derived from the logged beats;
    features are recomputed. The result is bit-identical to the original.
    """
    config = record.config
    seeds = _block_seeds(config.seed)

    from .game import PlayerAction
    script = _Peekable([
        PlayerAction(t=e["t"], kind=e["type"],
                     cell=tuple(e["cell"]) if e["type"] == "press" else None)
        for e in record.events if e["type"] in ("press", "validate")])
    game_rng = np.random.default_rng(seeds["game"])
    game_events, _ = _drive_game(config, game_rng, lambda i, tr, st: script)

    sched = TriggerScheduler(factor=config.bf_factor, enabled=config.bf_enabled)
    heart_events = []
    for e in record.events:
        if e["type"] == "beat":
            for trig in sched.advance(e["t"]):
                heart_events.append({"t": trig.t, "type": "vibe",
                                     "p1_ms": trig.pulse_ms,
                                     "gap_ms": trig.gap_ms,
                                     "p2_ms": trig.pulse2_ms,
                                     "motors": trig.motors})
            sched.on_beat(e["t"])
            heart_events.append(dict(e))
        elif e["type"] in ("truth_beat", "truth_scr"):
            heart_events.append(dict(e))
    for trig in sched.advance(config.duration):
        heart_events.append({"t": trig.t, "type": "vibe",
                             "p1_ms": trig.pulse_ms, "gap_ms": trig.gap_ms,
                             "p2_ms": trig.pulse2_ms, "motors": trig.motors})

    probe_events = [dict(e) for e in record.events
                    if e["type"] in ("beep", "pedal")]
    events = _sorted_events(heart_events + game_events + probe_events
                            + [{"t": config.duration, "type": "block_end"}])
    out = BlockRecord(config=config, events=events, survey=record.survey,
                      signals=record.signals, incomplete=record.incomplete)
    out.features = block_features(out)
    if record.features is not None:
        # cohort-normalized indicators need the whole cohort; carry them over
        out.features.game_indicator = record.features.game_indicator
        out.features.timeout_indicator = record.features.timeout_indicator
    return out


def run_scripted_block(config: BlockConfig, actions,
                       heart: HeartParams = None) -> BlockRecord:
    """Run a block driven by an explicit timed input script.

    ``actions`` is a time-sorted sequence of PlayerAction (press/validate/
    pedal). The same engine path backs both the live service and headless
    runs, so a scripted client over the wire yields a bit-identical record.
    """
    actions = sorted(actions, key=lambda a: a.t)
    seeds = _block_seeds(config.seed)
    heart_events, _, _ = _run_heart(config, heart or HeartParams(),
                                    seeds["heart"], seeds["noise"],
                                    "beat", None, 1000.0)
    script = _Peekable([a for a in actions if a.kind in ("press", "validate")])
    game_rng = np.random.default_rng(seeds["game"])
    game_events, _ = _drive_game(config, game_rng, lambda i, tr, st: script)
    probe_rng = np.random.default_rng(seeds["probe"])
    beeps = schedule_beeps(config.duration, config.probe_min_gap,
                           config.probe_max_gap, probe_rng)
    probe_events = [{"t": b.t, "type": "beep"} for b in beeps]
    probe_events += [{"t": a.t, "type": "pedal"} for a in actions
                     if a.kind == "pedal" and a.t <= config.duration]
    events = _sorted_events(heart_events + game_events + probe_events
                            + [{"t": config.duration, "type": "block_end"}])
    record = BlockRecord(config=config, events=events)
    record.features = block_features(record)
    return record


# ---------------------------------------------------------------------------
# persistence


def write_log(record: BlockRecord, path, signal_dir=None) -> None:
    """Write a block as versioned JSONL; signals go to sibling CSV files."""
    path = Path(path)
    sig_dir = Path(signal_dir) if signal_dir else path.parent
    sig_refs = {}
    for kind, sig in record.signals.items():
        name = f"{path.stem}_{kind}.csv"
        sig.to_csv(sig_dir / name)
        sig_refs[kind] = name
    with path.open("w") as fh:
        header = {"v": LOG_VERSION, "type": "header",
                  "config": asdict(record.config),
                  "incomplete": record.incomplete, "signals": sig_refs}
        fh.write(json.dumps(header) + "\n")
        for e in record.events:
            fh.write(json.dumps(e) + "\n")
        if record.survey is not None:
            fh.write(json.dumps({"type": "survey", **record.survey}) + "\n")
        if record.features is not None:
            fh.write(json.dumps({"type": "features",
                                 "row": record.features.as_row()}) + "\n")


def read_log(path, load_signals: bool = True) -> BlockRecord:
    """Read a block log written by :func:`write_log`.

    A corrupted line raises :class:`LogFormatError` naming its line number;
    an unknown schema version is rejected explicitly.
    """
    path = Path(path)
    events, survey, features = [], None, None
    with path.open() as fh:
        lines = fh.readlines()
    if not lines:
        raise LogFormatError(f"{path}: empty log")
    header = _parse_line(path, 1, lines[0])
    if header.get("type") != "header":
        raise LogFormatError(f"{path}:1: first line is not a log header")
    if header.get("v") != LOG_VERSION:
        raise LogFormatError(
            f"{path}:1: log schema version {header.get('v')!r}, "
            f"expected {LOG_VERSION}")
    config = BlockConfig(**header["config"])
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        msg = _parse_line(path, i, line)
        kind = msg.get("type")
        if kind == "survey":
            survey = {k: v for k, v in msg.items() if k != "type"}
        elif kind == "features":
            features = FeatureSet.from_row(msg["row"])
        elif kind in _EVENT_RANK:
            events.append(msg)
        else:
            raise LogFormatError(f"{path}:{i}: unknown event type {kind!r}")
    signals = {}
    if load_signals:
        for kind, name in header.get("signals", {}).items():
            signals[kind] = Signal.from_csv(path.parent / name)
    return BlockRecord(config=config, events=events, survey=survey,
                       features=features, signals=signals,
                       incomplete=header.get("incomplete", False))


def _parse_line(path, lineno, line):
    try:
        msg = json.loads(line)
        if not isinstance(msg, dict):
            raise ValueError("not a JSON object")
        return msg
    except ValueError as exc:
        raise LogFormatError(f"{path}:{lineno}: malformed log line: {exc}") from exc


# compact binary signal frame: magic, version, kind, fs, t0, n, float64 data
_FRAME_MAGIC = b"PLSF"
_FRAME_KINDS = ("ecg", "respiration", "eda")


def encode_signal_frame(sig: Signal) -> bytes:
    """Serialize a signal to the compact binary frame (lossless float64)."""
    import struct
    head = struct.pack("<4sBB dd I", _FRAME_MAGIC, LOG_VERSION,
                       _FRAME_KINDS.index(sig.kind), sig.fs, sig.t0,
                       len(sig.data))
    return head + np.ascontiguousarray(sig.data, dtype="<f8").tobytes()


def decode_signal_frame(buf: bytes) -> Signal:
    """Parse a binary signal frame written by :func:`encode_signal_frame`."""
    import struct
    head_fmt = "<4sBB dd I"
    head_len = struct.calcsize(head_fmt)
    if len(buf) < head_len:
        raise LogFormatError("signal frame too short")
    magic, version, kind_i, fs, t0, n = struct.unpack(head_fmt, buf[:head_len])
    if magic != _FRAME_MAGIC:
        raise LogFormatError("not a signal frame (bad magic)")
    if version != LOG_VERSION:
        raise LogFormatError(f"signal frame version {version}, "
                             f"expected {LOG_VERSION}")
    if kind_i >= len(_FRAME_KINDS) or len(buf) != head_len + 8 * n:
        raise LogFormatError("corrupt signal frame")
    data = np.frombuffer(buf[head_len:], dtype="<f8")
    return Signal(data.copy(), fs, _FRAME_KINDS[kind_i], t0=t0)


# ---------------------------------------------------------------------------
# experiments


@dataclass
class PopulationParams:
    """Distributions from which simulated participants are drawn."""

    hr_mean: float = 77.56
    hr_sd: float = 8.0
    rmssd_mean: float = 76.0
    rmssd_sd: float = 20.0
    rr_mean: float = 19.0
    rr_sd: float = 2.5
    tonic_mean: float = 0.64
    tonic_sd: float = 0.15
    accuracy_mean: float = 0.97
    accuracy_sd: float = 0.02
    kappa: float = 0.0
    stress_hr_offset: float = 0.0


def draw_participant(pop: PopulationParams, rng) -> ParticipantModel:
    heart = HeartParams(
        mean_hr=float(np.clip(rng.normal(pop.hr_mean, pop.hr_sd), 45.0, 170.0)),
        rmssd_target=float(np.clip(rng.normal(pop.rmssd_mean, pop.rmssd_sd),
                                   5.0, 150.0)),
        entrainment_kappa=pop.kappa,
        stress_hr_offset=pop.stress_hr_offset,
    )
    player = PlayerModel(
        base_accuracy=float(np.clip(rng.normal(pop.accuracy_mean,
                                               pop.accuracy_sd), 0.5, 1.0)))
    return ParticipantModel(
        heart=heart, player=player,
        rr_cpm=float(np.clip(rng.normal(pop.rr_mean, pop.rr_sd), 8.0, 30.0)),
        tonic_us=float(np.clip(rng.normal(pop.tonic_mean, pop.tonic_sd),
                               0.1, 3.0)))


@dataclass
class ExperimentRecord:
    """All blocks of one simulated experiment plus the cohort feature table."""

    plans: list
    records: dict  # (participant, condition) -> BlockRecord
    participants: list = field(default_factory=list)

    def baseline(self, participant: int) -> FeatureSet:
        """The participant's EG features (normalization baseline)."""
        return self.records[(participant, "EG")].features

    def feature_table(self):
        """Rows (participant, condition, *FeatureSet columns), plan order."""
        rows = []
        for plan in self.plans:
            for cond in plan.conditions():
                rec = self.records[(plan.participant, cond)]
                rows.append([plan.participant, cond] + rec.features.as_row())
        return ["participant", "condition", *FeatureSet.COLUMNS], rows


def run_experiment(n_participants: int, population: PopulationParams = None,
                   master_seed: int = 0, duration: float = 480.0,
                   fidelity: str = "waveform", bf_factor: float = 1.5,
                   include_training: bool = False,
                   conditions=None) -> ExperimentRecord:
    """Run a full headless experiment over a simulated cohort.

    Each participant gets an independently randomized plan (EG first) and
    freshly drawn ground-truth models; the cohort-normalized behavioral
    indicators are filled in once all blocks exist.
    """
    if n_participants < 2:
        raise ValueError("an experiment needs at least 2 participants")
    population = population or PopulationParams()
    ss = np.random.SeedSequence(master_seed)
    plans, records, participants = [], {}, []
    trials_by_cond = {}
    for pid, child in enumerate(ss.spawn(n_participants)):
        draw_ss, plan_ss, blocks_ss = child.spawn(3)
        model = draw_participant(population, np.random.default_rng(draw_ss))
        participants.append(model)
        n_blocks = (len(conditions) if conditions else 4) + include_training
        block_seeds = [int(s.generate_state(1)[0])
                       for s in blocks_ss.spawn(n_blocks)]
        plan = make_plan(pid, np.random.default_rng(plan_ss), block_seeds,
                         duration=duration, bf_factor=bf_factor,
                         include_training=include_training,
                         conditions=conditions)
        plans.append(plan)
        for cfg in plan.blocks:
            rec = run_block(cfg, model, fidelity=fidelity)
            if not cfg.training:
                records[(pid, cfg.condition)] = rec
                trials_by_cond.setdefault(cfg.condition, []).append(rec.trials())
    # cohort-normalized behavioral indicators (cohort = same condition)
    for (pid, cond), rec in records.items():
        trials = rec.trials()
        if trials:
            g, to = behavioral_indicators(trials, trials_by_cond[cond])
            rec.features.game_indicator = g
            rec.features.timeout_indicator = to
    return ExperimentRecord(plans=plans, records=records,
                            participants=participants)
