"""Closed-loop false heart-rate biofeedback experiment platform."""

from .signals import Signal
from .rpeak import (BeatEvent, IbiSeries, LiveIbiEstimator, StreamingDetector,
                    detect_batch, ibi_from_beats)
from .heartsim import (EcgStream, GroundTruth, HeartModel, HeartParams,
                       PlayerModel, gen_ibi_series, gen_scr_events,
                       noise_rms_for_snr, simulate_player, synth_ecg,
                       synth_eda, synth_respiration)
from .biofeedback import (TriggerScheduler, VibrationTrigger, encode_trigger,
                          decode_trigger)
from .features import (FeatureSet, TrialPerf, behavioral_indicators,
                       eda_decompose, mean_hr, normalize, quality_screen,
                       respiration_rate, rmssd, scr_stats)
from .probe import BeepEvent, match_responses, schedule_beeps
from .instruments import (BfiResponse, GewResponse, TlxResponse, median_split,
                          score_bfi, score_gew_negative, score_tlx)
from .session import (BlockConfig, BlockRecord, ExperimentPlan,
                      ExperimentRecord, ParticipantModel, PopulationParams,
                      block_features, make_plan, read_log, replay, run_block,
                      run_experiment, run_scripted_block, training_preset,
                      write_log)

__all__ = [
    "Signal", "BeatEvent", "IbiSeries", "LiveIbiEstimator",
    "StreamingDetector", "detect_batch", "ibi_from_beats",
    "EcgStream", "GroundTruth", "HeartModel", "HeartParams", "PlayerModel",
    "gen_ibi_series", "gen_scr_events", "noise_rms_for_snr",
    "simulate_player", "synth_ecg",
    "synth_eda", "synth_respiration",
    "TriggerScheduler", "VibrationTrigger", "encode_trigger", "decode_trigger",
    "FeatureSet", "TrialPerf", "behavioral_indicators", "eda_decompose",
    "mean_hr", "normalize", "quality_screen", "respiration_rate", "rmssd",
    "scr_stats",
    "BeepEvent", "match_responses", "schedule_beeps",
    "BfiResponse", "GewResponse", "TlxResponse", "median_split", "score_bfi",
    "score_gew_negative", "score_tlx",
    "BlockConfig", "BlockRecord", "ExperimentPlan", "ExperimentRecord",
    "ParticipantModel", "PopulationParams", "block_features", "make_plan",
    "read_log", "replay", "run_block", "run_experiment", "run_scripted_block",
    "training_preset", "write_log",
]

__version__ = "0.1.0"
