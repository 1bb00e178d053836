from dataclasses import replace

import numpy as np
import pytest

from hapsim.schedule import (
    DESIGNATED_PAIRS,
    HARDER,
    SOFTER,
    TASK_S,
    TrialSchedule,
    export_csv,
    import_csv,
    practice_trials,
    randomize_presentation,
    schedule_table1,
    softer_task_trials,
    validate_schedule,
)

# the 24-column session table, transcribed row by row
EXPECTED_A = [1, 2, 4, 3, 5, 2, 1, 3, 5, 5, 3, 1, 1, 1, 4, 5, 1, 2, 4, 3, 5, 2, 1, 3]
EXPECTED_B = [5, 5, 3, 1, 1, 1, 4, 5, 1, 2, 4, 3, 5, 2, 1, 3, 5, 5, 3, 1, 1, 1, 4, 5]
EXPECTED_X = [1, 5, 3, 3, 5, 1, 1, 5, 1, 5, 3, 3, 5, 1, 1, 5, 1, 5, 3, 3, 5, 1, 1, 5]
EXPECTED_D = [4, 3, 1, 2, 4, 1, 3, 2, 4, 3, 1, 2, 4, 1, 3, 2, 4, 3, 1, 2, 4, 1, 3, 2]
EXPECTED_DIR = [
    HARDER, SOFTER, HARDER, SOFTER, SOFTER, HARDER, HARDER, SOFTER,
    HARDER, SOFTER, HARDER, SOFTER, SOFTER, HARDER, HARDER, SOFTER,
    HARDER, SOFTER, HARDER, SOFTER, SOFTER, HARDER, HARDER, SOFTER,
]


def test_table_matches_expected_rows():
    sched = schedule_table1()
    assert [t.a for t in sched] == EXPECTED_A
    assert [t.b for t in sched] == EXPECTED_B
    assert [t.x for t in sched] == EXPECTED_X
    assert [t.distance for t in sched] == EXPECTED_D
    assert [t.direction for t in sched] == EXPECTED_DIR
    assert [t.index for t in sched] == list(range(1, 25))


def test_first_trial_values():
    t = schedule_table1().trials[0]
    assert (t.a, t.b, t.x, t.distance, t.direction) == (1, 5, 1, 4, HARDER)


def test_swap_block_and_repeat_block():
    trials = schedule_table1().trials
    t9 = trials[8]
    assert (t9.a, t9.b, t9.x) == (5, 1, 1)
    for i in range(8):
        assert (trials[16 + i].a, trials[16 + i].b, trials[16 + i].x) == (
            trials[i].a,
            trials[i].b,
            trials[i].x,
        )
        assert (trials[8 + i].a, trials[8 + i].b) == (trials[i].b, trials[i].a)
        assert trials[8 + i].x == trials[i].x


def test_schedule_passes_validation():
    report = validate_schedule(schedule_table1())
    assert report.passed, report.violations


def test_balance_counts():
    sched = schedule_table1()
    for d in (1, 2, 3, 4):
        assert sum(t.distance == d for t in sched) == 6
    for key in DESIGNATED_PAIRS:
        assert sum(t.pair_key() == key for t in sched) == 3


def test_corrupted_repeat_block_detected():
    trials = list(schedule_table1().trials)
    trials[16] = replace(trials[16], a=2, b=5, x=5, distance=3, direction=SOFTER)
    report = validate_schedule(TrialSchedule(trials=tuple(trials)))
    assert not report.passed
    assert any(v.code == "block-repeat" for v in report.violations)


def test_unbalanced_distances_detected():
    trials = list(schedule_table1().trials)
    # replace a D=1 trial with a D=2 trial (appears 7 times then)
    trials[2] = replace(trials[2], a=3, b=1, x=3, distance=2, direction=SOFTER)
    report = validate_schedule(TrialSchedule(trials=tuple(trials)))
    assert any(v.code == "distance-balance" for v in report.violations)
    assert any(v.code == "pair-balance" for v in report.violations)


def test_undesignated_pair_detected():
    trials = list(schedule_table1().trials)
    trials[0] = replace(trials[0], a=2, b=4, x=2, distance=2)
    report = validate_schedule(TrialSchedule(trials=tuple(trials)))
    assert any(v.code == "pair-membership" for v in report.violations)
    assert any(v.code == "x-levels" for v in report.violations)


def test_direction_semantics():
    # direction says whether the non-matching stimulus is harder than X
    for t in schedule_table1():
        other = t.b if t.x == t.a else t.a
        assert t.direction == (HARDER if other > t.x else SOFTER)


def test_wrong_length_detected():
    report = validate_schedule(TrialSchedule(trials=schedule_table1().trials[:20]))
    assert any(v.code == "length" for v in report.violations)


def test_practice_trials():
    pts = practice_trials()
    assert [(t.a, t.b, t.x) for t in pts] == [(1, 3, 1), (5, 3, 3)]
    assert all(t.practice for t in pts)


def test_softer_task_reuses_pairs():
    sched = schedule_table1()
    s_sched = softer_task_trials(sched)
    assert [(t.a, t.b) for t in s_sched] == [(t.a, t.b) for t in sched]
    assert all(t.task == TASK_S for t in s_sched)


def test_randomize_presentation_deterministic():
    sched = schedule_table1()
    p1 = randomize_presentation(sched, 123)
    p2 = randomize_presentation(sched, 123)
    assert p1 == p2
    assert len(p1) == 24
    assert {p.first for p in p1} <= {"A", "B"}


def test_randomize_presentation_seeds_differ():
    sched = schedule_table1()
    orders = {tuple(p.first for p in randomize_presentation(sched, seed)) for seed in range(100)}
    # collisions over 100 seeds of 24-bit patterns are overwhelmingly unlikely
    assert len(orders) >= 99


def test_randomize_presentation_leaves_trials_unchanged():
    sched = schedule_table1()
    before = tuple(sched.trials)
    randomize_presentation(sched, 7)
    assert tuple(sched.trials) == before


def test_csv_round_trip(tmp_path):
    path = tmp_path / "schedule.csv"
    sched = schedule_table1()
    export_csv(sched, path)
    loaded = import_csv(path)
    assert loaded.trials == sched.trials
    assert validate_schedule(loaded).passed


def test_csv_import_rejects_missing_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("test,1,2\na,1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        import_csv(path)


def test_csv_accepts_word_directions(tmp_path):
    path = tmp_path / "words.csv"
    export_csv(schedule_table1(), path)
    text = path.read_text(encoding="utf-8").replace("↑", "harder").replace("↓", "softer")
    path.write_text(text, encoding="utf-8")
    assert validate_schedule(import_csv(path)).passed
