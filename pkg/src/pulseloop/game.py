"""Adaptive 8x8 pattern-memory game with the three stress manipulations.

Pure, deterministic state machine: given a seed and a totally ordered timed
input script, the trial sequence and outcomes are reproducible bit-exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

GRID_SIZE = 8
CELL_DISPLAY_MS = 250
FIXATION_MS = 500
HOLD_MS = 500

EASY_BOUNDS = (1, 7)
DIFFICULT_BOUNDS = (7, GRID_SIZE * GRID_SIZE)

SCORE_MIN = 0
SCORE_MAX = 16
SCORE_START = 8
OBJECTIVE_DEFAULT = 12

#: reproduction-time allowance per pattern button when stress starts, ms
INITIAL_LIMIT_MS_PER_BUTTON = CELL_DISPLAY_MS + 600


class Mode(str, Enum):
    EASY = "easy"
    DIFFICULT = "difficult"


class OutcomeKind(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    TIMEOUT = "timeout"


class ContractViolation(RuntimeError):
    """An operation was called outside its declared preconditions."""


@dataclass(frozen=True)
class Trial:
    """One pattern-reproduction trial."""

    pattern: tuple  # ordered distinct (row, col) cells
    shown_at: float  # s, fixation onset

    def __post_init__(self):
        if len(self.pattern) < 1:
            raise ValueError("pattern must have at least one cell")
        if len(set(self.pattern)) != len(self.pattern):
            raise ValueError("pattern cells must be distinct")

    @property
    def display_ms(self) -> int:
        return CELL_DISPLAY_MS * len(self.pattern)

    @property
    def reproduction_start(self) -> float:
        """Time at which the pattern disappears and input is accepted."""
        return self.shown_at + (FIXATION_MS + self.display_ms + HOLD_MS) / 1000.0


@dataclass(frozen=True)
class TrialOutcome:
    kind: OutcomeKind
    completion_ms: float
    presses: tuple  # ((t, (row, col)), ...)
    correct: bool


@dataclass
class GameState:
    """Evolving game state: difficulty, gauges and the active trial."""

    mode: Mode
    stress: bool
    length: int
    lit: set = field(default_factory=set)
    outcome_history: list = field(default_factory=list)
    score: int = SCORE_START
    objective: int = OBJECTIVE_DEFAULT
    time_limit_ms: float = None
    last_completion_ms: float = None
    trial: Trial = None
    press_log: list = field(default_factory=list)

    def __post_init__(self):
        lo, hi = self.bounds
        if not lo <= self.length <= hi:
            raise ValueError(
                f"length {self.length} outside {self.mode.value} bounds {self.bounds}")
        if self.stress and self.time_limit_ms is None:
            self.time_limit_ms = float(INITIAL_LIMIT_MS_PER_BUTTON * self.length)
        if not self.stress and self.time_limit_ms is not None:
            raise ValueError("time limit only exists under stress")

    @property
    def bounds(self):
        return EASY_BOUNDS if self.mode is Mode.EASY else DIFFICULT_BOUNDS


def initial_state(mode: Mode, stress: bool, length: int = None) -> GameState:
    """Fresh game state; default length is 3 (easy) or the difficult floor."""
    if length is None:
        length = 3 if mode is Mode.EASY else DIFFICULT_BOUNDS[0]
    if stress and mode is Mode.EASY:
        raise ValueError("stress manipulations only exist in difficult mode")
    return GameState(mode=mode, stress=stress, length=length)


def new_trial(state: GameState, rng: np.random.Generator, t: float) -> Trial:
    """Draw the next pattern: ``state.length`` distinct cells, uniform."""
    cells = rng.choice(GRID_SIZE * GRID_SIZE, size=state.length, replace=False)
    pattern = tuple((int(c) // GRID_SIZE, int(c) % GRID_SIZE) for c in cells)
    trial = Trial(pattern=pattern, shown_at=t)
    state.trial = trial
    state.lit = set()
    state.press_log = []
    return trial


def handle_press(state: GameState, cell, t: float) -> GameState:
    """Toggle a cell's lit status; every press is logged with its timestamp."""
    if state.trial is None:
        raise ContractViolation("no active trial")
    state.press_log.append((t, tuple(cell)))
    r, c = cell
    if not (0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE):
        return state  # outside the grid: ignored, but logged
    cell = (r, c)
    if cell in state.lit:
        state.lit.discard(cell)
    else:
        state.lit.add(cell)
    return state


def elapsed_ms(state: GameState, t: float) -> float:
    return (t - state.trial.reproduction_start) * 1000.0


def timed_out(state: GameState, t: float) -> bool:
    """Whether the stress time limit has expired at time ``t``."""
    return (state.stress and state.trial is not None
            and elapsed_ms(state, t) > state.time_limit_ms)


def validate(state: GameState, t: float) -> TrialOutcome:
    """Close the active trial at the validation press.

    Success compares the lit cell set against the pattern set; under stress an
    expired time limit yields a Timeout, which counts as a failed trial.
    """
    if state.trial is None:
        raise ContractViolation("no active trial")
    completion = elapsed_ms(state, t)
    correct = state.lit == set(state.trial.pattern)
    if state.stress and completion > state.time_limit_ms:
        kind = OutcomeKind.TIMEOUT
        correct = False
    elif correct:
        kind = OutcomeKind.SUCCESS
    else:
        kind = OutcomeKind.FAILURE
    outcome = TrialOutcome(kind=kind, completion_ms=completion,
                           presses=tuple(state.press_log), correct=correct)
    state.trial = None
    state.outcome_history.append(outcome.kind)
    state.last_completion_ms = completion
    return outcome


def expire(state: GameState, t: float) -> TrialOutcome:
    """Close the active trial as a Timeout when the gauge empties."""
    if not state.stress:
        raise ContractViolation("timeout cannot occur with stress off")
    if state.trial is None:
        raise ContractViolation("no active trial")
    outcome = TrialOutcome(kind=OutcomeKind.TIMEOUT,
                           completion_ms=elapsed_ms(state, t),
                           presses=tuple(state.press_log), correct=False)
    state.trial = None
    state.outcome_history.append(outcome.kind)
    state.last_completion_ms = outcome.completion_ms
    return outcome


def update_difficulty(state: GameState, outcome: TrialOutcome) -> GameState:
    """Adjust pattern length on 2 consecutive successes/failures (sliding window)."""
    hist = state.outcome_history
    if len(hist) >= 2:
        last2 = hist[-2:]
        if all(k is OutcomeKind.SUCCESS for k in last2):
            state.length += 1
        elif all(k is not OutcomeKind.SUCCESS for k in last2):
            state.length -= 1
        lo, hi = state.bounds
        state.length = min(max(state.length, lo), hi)
    return state


def update_time_constraint(state: GameState, outcome: TrialOutcome) -> GameState:
    """Failure/Timeout relaxes the limit by 1000 ms; success tightens it to
    the last completion time + 100 ms."""
    if not state.stress:
        raise ContractViolation("time constraint only exists under stress")
    if outcome.kind is OutcomeKind.SUCCESS:
        state.time_limit_ms = outcome.completion_ms + 100.0
    else:
        state.time_limit_ms += 1000.0
    return state


def update_score(state: GameState, outcome: TrialOutcome) -> GameState:
    """Success: +1 point. Failure or timeout: -2 points. Clamped to the gauge."""
    if not state.stress:
        raise ContractViolation("score gauge only exists under stress")
    delta = 1 if outcome.kind is OutcomeKind.SUCCESS else -2
    state.score = min(max(state.score + delta, SCORE_MIN), SCORE_MAX)
    return state


def apply_outcome(state: GameState, outcome: TrialOutcome) -> GameState:
    """Fold one outcome into the state: difficulty, then stress gauges."""
    update_difficulty(state, outcome)
    if state.stress:
        update_time_constraint(state, outcome)
        update_score(state, outcome)
    return state


@dataclass(frozen=True)
class GaugeView:
    """Pure render model for the UI gauges."""

    time_leds: int  # 0..8
    score_leds: int  # 0..8
    objective_leds: int  # 0..8
    score: int
    objective: int
    lit: tuple
    feedback: str  # "", "success", "failure"


def gauge_view(state: GameState, t: float = None, feedback: str = "") -> GaugeView:
    """Snapshot of the gauges; time gauge fill is ceil(8 * remaining/limit)."""
    if state.stress and state.trial is not None and t is not None:
        remaining = max(0.0, state.time_limit_ms - elapsed_ms(state, t))
        time_leds = math.ceil(8 * remaining / state.time_limit_ms)
    elif state.stress:
        time_leds = 8
    else:
        time_leds = 0
    return GaugeView(
        time_leds=time_leds,
        score_leds=round(state.score / 2) if state.stress else 0,
        objective_leds=round(state.objective / 2) if state.stress else 0,
        score=state.score,
        objective=state.objective,
        lit=tuple(sorted(state.lit)),
        feedback=feedback,
    )


@dataclass(frozen=True)
class PlayerAction:
    """One timed input from a (simulated or live) participant."""

    t: float
    kind: str  # "press" | "validate" | "pedal"
    cell: tuple = None
