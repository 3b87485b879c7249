import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulseloop.game import (CELL_DISPLAY_MS, DIFFICULT_BOUNDS, EASY_BOUNDS,
                            FIXATION_MS, GRID_SIZE, HOLD_MS,
                            INITIAL_LIMIT_MS_PER_BUTTON, SCORE_MAX, SCORE_MIN,
                            SCORE_START, ContractViolation, Mode, OutcomeKind,
                            Trial, TrialOutcome, apply_outcome, expire,
                            gauge_view, handle_press, initial_state, new_trial,
                            timed_out, update_difficulty, update_score,
                            update_time_constraint, validate)


def _stress_state(length=7):
    return initial_state(Mode.DIFFICULT, stress=True, length=length)


def _outcome(kind, completion_ms=1000.0):
    return TrialOutcome(kind=kind, completion_ms=completion_ms, presses=(),
                        correct=kind is OutcomeKind.SUCCESS)


S = OutcomeKind.SUCCESS
F = OutcomeKind.FAILURE
T = OutcomeKind.TIMEOUT


# ---------------------------------------------------------------------------
# trial creation


def test_new_trial_distinct_cells_and_length():
    state = _stress_state(length=9)
    trial = new_trial(state, np.random.default_rng(0), t=5.0)
    assert len(trial.pattern) == 9
    assert len(set(trial.pattern)) == 9
    assert all(0 <= r < 8 and 0 <= c < 8 for r, c in trial.pattern)


def test_difficult_mode_starts_at_seven():
    state = initial_state(Mode.DIFFICULT, stress=True)
    assert state.length == 7
    assert state.time_limit_ms == 7 * INITIAL_LIMIT_MS_PER_BUTTON


def test_easy_mode_has_no_stress_gauges():
    with pytest.raises(ValueError):
        initial_state(Mode.EASY, stress=True)
    state = initial_state(Mode.EASY, stress=False)
    assert state.time_limit_ms is None


def test_reproduction_start_timing():
    trial = Trial(pattern=((0, 0), (1, 1), (2, 2)), shown_at=10.0)
    expected = 10.0 + (FIXATION_MS + 3 * CELL_DISPLAY_MS + HOLD_MS) / 1000.0
    assert trial.reproduction_start == pytest.approx(expected)


def test_pattern_cell_uniformity():
    # [DERIVED] each of the 64 cells appears with frequency 7/64 over many
    # length-7 trials (within 1 % absolute).
    state = _stress_state(length=7)
    rng = np.random.default_rng(123)
    counts = np.zeros((8, 8))
    n = 10_000
    for _ in range(n):
        for cell in new_trial(state, rng, t=0.0).pattern:
            counts[cell] += 1
    freq = counts / n
    assert np.all(np.abs(freq - 7 / 64) < 0.01)


# ---------------------------------------------------------------------------
# presses


def test_press_toggles():
    state = _stress_state()
    new_trial(state, np.random.default_rng(0), t=0.0)
    handle_press(state, (3, 4), t=5.0)
    assert (3, 4) in state.lit
    handle_press(state, (3, 4), t=5.2)
    assert (3, 4) not in state.lit
    assert len(state.press_log) == 2


def test_off_grid_press_logged_but_ignored():
    state = _stress_state()
    new_trial(state, np.random.default_rng(0), t=0.0)
    handle_press(state, (8, 0), t=5.0)
    assert state.lit == set()
    assert state.press_log == [(5.0, (8, 0))]


def test_press_without_trial_is_contract_violation():
    state = _stress_state()
    with pytest.raises(ContractViolation):
        handle_press(state, (0, 0), t=1.0)


# ---------------------------------------------------------------------------
# validation / expiry


def test_validate_success_and_failure():
    state = _stress_state(length=7)
    trial = new_trial(state, np.random.default_rng(1), t=0.0)
    for cell in trial.pattern:
        handle_press(state, cell, t=trial.reproduction_start + 0.5)
    out = validate(state, t=trial.reproduction_start + 1.0)
    assert out.kind is S and out.correct
    assert out.completion_ms == pytest.approx(1000.0)

    trial = new_trial(state, np.random.default_rng(2), t=10.0)
    handle_press(state, trial.pattern[0], t=trial.reproduction_start + 0.2)
    out = validate(state, t=trial.reproduction_start + 0.4)
    assert out.kind is F and not out.correct


def test_validate_order_independent():
    # success is set equality: press order does not matter
    state = _stress_state(length=8)
    trial = new_trial(state, np.random.default_rng(3), t=0.0)
    for cell in reversed(trial.pattern):
        handle_press(state, cell, t=trial.reproduction_start + 0.1)
    assert validate(state, t=trial.reproduction_start + 0.2).kind is S


def test_validate_past_limit_is_timeout():
    state = _stress_state(length=7)  # limit 5950 ms
    trial = new_trial(state, np.random.default_rng(4), t=0.0)
    for cell in trial.pattern:
        handle_press(state, cell, t=trial.reproduction_start + 1.0)
    out = validate(state, t=trial.reproduction_start + 6.5)
    assert out.kind is T and not out.correct


def test_timed_out_and_expire():
    state = _stress_state(length=7)
    trial = new_trial(state, np.random.default_rng(5), t=0.0)
    tl = state.time_limit_ms / 1000.0
    assert not timed_out(state, trial.reproduction_start + tl - 0.01)
    assert timed_out(state, trial.reproduction_start + tl + 0.01)
    out = expire(state, trial.reproduction_start + tl + 0.01)
    assert out.kind is T
    assert state.trial is None


def test_expire_requires_stress():
    state = initial_state(Mode.EASY, stress=False)
    new_trial(state, np.random.default_rng(0), t=0.0)
    with pytest.raises(ContractViolation):
        expire(state, t=10.0)


# ---------------------------------------------------------------------------
# difficulty adaptation


def test_two_successes_increase_length():
    state = _stress_state(length=8)
    for _ in range(2):
        state.outcome_history.append(S)
    update_difficulty(state, _outcome(S))
    assert state.length == 9


def test_two_failures_decrease_length_with_floor():
    state = _stress_state(length=7)
    for _ in range(2):
        state.outcome_history.append(F)
    update_difficulty(state, _outcome(F))
    assert state.length == 7  # clamped at the difficult floor


def test_mixed_outcomes_keep_length():
    state = _stress_state(length=9)
    state.outcome_history += [S, F]
    update_difficulty(state, _outcome(F))
    assert state.length == 9


def test_sliding_window_adjusts_repeatedly():
    # S, S, S: the window [S,S] fires after outcome 2 and after outcome 3.
    state = _stress_state(length=8)
    for _ in range(3):
        state.outcome_history.append(S)
        update_difficulty(state, _outcome(S))
    assert state.length == 10


def test_easy_bounds_respected():
    state = initial_state(Mode.EASY, stress=False, length=7)
    state.outcome_history += [S, S]
    update_difficulty(state, _outcome(S))
    assert state.length == EASY_BOUNDS[1]


# ---------------------------------------------------------------------------
# time constraint


def test_failure_relaxes_limit():
    state = _stress_state(length=7)
    state.time_limit_ms = 6000.0
    update_time_constraint(state, _outcome(F))
    assert state.time_limit_ms == 7000.0


def test_success_tightens_limit():
    state = _stress_state(length=7)
    update_time_constraint(state, _outcome(S, completion_ms=4300.0))
    assert state.time_limit_ms == 4400.0


def test_success_then_failure_composition():
    state = _stress_state(length=7)
    update_time_constraint(state, _outcome(S, completion_ms=4300.0))
    update_time_constraint(state, _outcome(T, completion_ms=5600.0))
    assert state.time_limit_ms == 5400.0


def test_time_constraint_requires_stress():
    state = initial_state(Mode.EASY, stress=False)
    with pytest.raises(ContractViolation):
        update_time_constraint(state, _outcome(S))


# ---------------------------------------------------------------------------
# score


@pytest.mark.parametrize("start,kind,expected", [
    (5, S, 6),
    (5, F, 3),
    (1, F, 0),       # clamped at the floor
    (16, S, 16),     # clamped at the ceiling
    (5, T, 3),       # timeout scores like a failure
])
def test_score_updates(start, kind, expected):
    state = _stress_state()
    state.score = start
    update_score(state, _outcome(kind))
    assert state.score == expected


# ---------------------------------------------------------------------------
# gauges


def test_gauge_time_leds():
    state = _stress_state(length=7)
    trial = new_trial(state, np.random.default_rng(0), t=0.0)
    t0 = trial.reproduction_start
    assert gauge_view(state, t0).time_leds == 8
    half = t0 + state.time_limit_ms / 2000.0 + 1e-6
    assert gauge_view(state, half).time_leds == 4
    done = t0 + state.time_limit_ms / 1000.0 + 0.1
    assert gauge_view(state, done).time_leds == 0


def test_gauge_score_objective_leds():
    state = _stress_state()
    view = gauge_view(state)
    assert view.score_leds == round(SCORE_START / 2)
    assert view.objective_leds == 6
    easy = initial_state(Mode.EASY, stress=False)
    assert gauge_view(easy).score_leds == 0


# ---------------------------------------------------------------------------
# full-fold property


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([S, F, T]), min_size=1, max_size=60))
def test_outcome_fold_invariants(kinds):
    state = _stress_state(length=7)
    for kind in kinds:
        state.outcome_history.append(kind)
        out = _outcome(kind, completion_ms=3000.0)
        prev_len = state.length
        prev_score = state.score
        prev_limit = state.time_limit_ms
        update_difficulty(state, out)
        update_time_constraint(state, out)
        update_score(state, out)
        assert DIFFICULT_BOUNDS[0] <= state.length <= DIFFICULT_BOUNDS[1]
        assert abs(state.length - prev_len) <= 1
        assert SCORE_MIN <= state.score <= SCORE_MAX
        if kind is S:
            assert state.score >= prev_score
            assert state.time_limit_ms == 3100.0
        else:
            assert state.score <= prev_score
            assert state.time_limit_ms == prev_limit + 1000.0
