import random

import pytest

from mathstrat.core import RouterDecision, Strategy, Verdict
from mathstrat.metrics import (IdMismatch, MissingAttempt, TransitionCell,
                               accuracy, avg_tokens_per_strategy,
                               avg_tokens_routed, build_report,
                               chosen_accuracy, render_report_text,
                               round_half_up, routed_accuracy,
                               transition_cell_from_counts, transitions,
                               weighted_micro_average)

from conftest import make_attempt


def decision(pid, chosen, tokens=0):
    return RouterDecision(problem_id=pid, selection_raw=chosen.value,
                          chosen=chosen, selection_tokens=tokens)


class TestRounding:
    @pytest.mark.parametrize("x,places,expected", [
        (50.605, 2, 50.61),   # half rounds up, not to even
        (0.25, 1, 0.3),
        (2.44999, 1, 2.4),
        (3.35, 1, 3.4),
        (-1.25, 1, -1.3),
    ])
    def test_half_up(self, x, places, expected):
        assert round_half_up(x, places) == expected


class TestAccuracy:
    def test_per_subject_and_micro(self):
        attempts = [
            make_attempt("a1", verdict=Verdict.CORRECT),
            make_attempt("a2", verdict=Verdict.INCORRECT),
            make_attempt("g1", verdict=Verdict.CORRECT),
        ]
        subjects = {"a1": "Algebra", "a2": "Algebra", "g1": "Geometry"}
        per_subject, micro = accuracy(attempts, subjects)
        assert per_subject == {"Algebra": 50.0, "Geometry": 100.0}
        assert micro == pytest.approx(2 / 3 * 100)

    def test_micro_weights_per_problem_not_per_subject(self):
        attempts = [make_attempt(f"a{i}", verdict=Verdict.CORRECT) for i in range(9)]
        attempts.append(make_attempt("g0", verdict=Verdict.INCORRECT))
        subjects = {a.problem_id: ("A" if a.problem_id.startswith("a") else "G")
                    for a in attempts}
        _, micro = accuracy(attempts, subjects)
        assert micro == 90.0  # macro would say 50.0

    def test_none_subject_bucketed(self):
        per_subject, _ = accuracy([make_attempt("x")], {"x": None})
        assert list(per_subject) == ["(none)"]

    def test_every_failure_mode_counts_as_incorrect(self):
        attempts = [
            make_attempt("a", verdict=Verdict.CORRECT),
            make_attempt("b", verdict=Verdict.INCORRECT),
            make_attempt("c", verdict=Verdict.EXTRACTION_FAILED, answer=None),
            make_attempt("d", strategy=Strategy.PAL,
                         verdict=Verdict.EXECUTION_ERROR, answer=None),
        ]
        _, micro = accuracy(attempts, {k: "S" for k in "abcd"})
        assert micro == 25.0

    def test_missing_subject_entry(self):
        with pytest.raises(MissingAttempt):
            accuracy([make_attempt("x")], {})

    def test_empty(self):
        assert accuracy([], {}) == ({}, 0.0)


class TestWeightedMicroAverage:
    def test_matches_direct_computation(self):
        rates = {"A": 75.0, "B": 25.0}
        counts = {"A": 3, "B": 1}
        assert weighted_micro_average(rates, counts) == pytest.approx(62.5)

    def test_empty(self):
        assert weighted_micro_average({}, {}) == 0.0


def four_attempts(pid, correct_set):
    return {s: make_attempt(pid, strategy=s,
                            verdict=(Verdict.CORRECT if s in correct_set
                                     else Verdict.INCORRECT))
            for s in Strategy}


class TestChosenAndRoutedAccuracy:
    def test_chosen_right_when_chosen_correct(self):
        all_attempts = {"p": four_attempts("p", {Strategy.PAL})}
        assert chosen_accuracy([decision("p", Strategy.PAL)], all_attempts) == 100.0
        assert chosen_accuracy([decision("p", Strategy.COT)], all_attempts) == 0.0

    def test_chosen_right_when_all_fail(self):
        all_attempts = {"p": four_attempts("p", set())}
        assert chosen_accuracy([decision("p", Strategy.COT)], all_attempts) == 100.0
        assert routed_accuracy([decision("p", Strategy.COT)], all_attempts) == 0.0

    def test_requires_all_four(self):
        partial = {"p": {Strategy.COT: make_attempt("p")}}
        with pytest.raises(MissingAttempt):
            chosen_accuracy([decision("p", Strategy.COT)], partial)

    def test_chosen_never_below_routed(self):
        rng = random.Random(13)
        for _ in range(50):
            decisions, all_attempts = [], {}
            for i in range(20):
                pid = f"p{i}"
                correct = {s for s in Strategy if rng.random() < 0.5}
                all_attempts[pid] = four_attempts(pid, correct)
                decisions.append(decision(pid, rng.choice(list(Strategy))))
            assert chosen_accuracy(decisions, all_attempts) >= \
                routed_accuracy(decisions, all_attempts)


class TestTransitions:
    def test_counts(self):
        base = [make_attempt(f"p{i}", strategy=Strategy.PAL,
                             verdict=(Verdict.CORRECT if i < 3 else Verdict.INCORRECT))
                for i in range(6)]
        two = [make_attempt(f"p{i}", strategy=Strategy.CODENL,
                            verdict=(Verdict.CORRECT if i in (0, 3, 4) else Verdict.INCORRECT),
                            stages=base[0].stages)
               for i in range(6)]
        cell = transitions(base, two)
        assert (cell.fixed, cell.broken) == (2, 2)
        assert cell.baseline is Strategy.PAL
        assert cell.two_stage is Strategy.CODENL

    def test_id_mismatch(self):
        with pytest.raises(IdMismatch):
            transitions([make_attempt("a")], [make_attempt("b", strategy=Strategy.CODENL)])

    def test_flip_property(self):
        # flipping the two-stage verdict on k problems yields fixed+broken == k
        rng = random.Random(5)
        for _ in range(20):
            n = 30
            verdicts = [rng.random() < 0.5 for _ in range(n)]
            flip = set(rng.sample(range(n), rng.randint(0, n)))
            base = [make_attempt(f"p{i}", strategy=Strategy.COT,
                                 verdict=(Verdict.CORRECT if v else Verdict.INCORRECT))
                    for i, v in enumerate(verdicts)]
            two = [make_attempt(f"p{i}", strategy=Strategy.NLCODE,
                                verdict=(Verdict.CORRECT if (v != (i in flip))
                                         else Verdict.INCORRECT))
                    for i, v in enumerate(verdicts)]
            cell = transitions(base, two)
            assert cell.fixed + cell.broken == len(flip)

    @pytest.mark.parametrize("fixed,broken,display", [
        (272, 80, "3.4"), (243, 102, "2.4"), (167, 147, "1.1"), (158, 189, "0.8"),
    ])
    def test_ratio_rounding(self, fixed, broken, display):
        cell = transition_cell_from_counts(Strategy.PAL, Strategy.CODENL, fixed, broken)
        assert cell.ratio_display == display

    def test_zero_broken_shows_dash(self):
        cell = transition_cell_from_counts(Strategy.COT, Strategy.CODENL, 5, 0)
        assert cell.ratio is None
        assert cell.ratio_display == "—"


class TestTokenAverages:
    def test_per_strategy(self):
        attempts = {
            Strategy.COT: [make_attempt("a", tokens=(100, 50)),
                           make_attempt("b", tokens=(200, 50))],
            Strategy.PAL: [],
        }
        avg = avg_tokens_per_strategy(attempts)
        assert avg == {"cot": 200.0}

    def test_routed_adds_selection_tokens(self):
        pairs = [(decision("a", Strategy.COT, tokens=40),
                  make_attempt("a", tokens=(100, 60)))]
        assert avg_tokens_routed(pairs) == 200.0

    def test_routed_empty(self):
        assert avg_tokens_routed([]) == 0.0


class TestBuildReport:
    def test_report_assembles_everything(self):
        attempts_by_strategy = {s: [four_attempts(f"p{i}", {Strategy.COT})[s]
                                    for i in range(4)]
                                for s in Strategy}
        subjects = {f"p{i}": "Algebra" for i in range(4)}
        decisions = [decision(f"p{i}", Strategy.COT) for i in range(4)]
        routed = {f"p{i}": attempts_by_strategy[Strategy.COT][i] for i in range(4)}
        report = build_report(attempts_by_strategy, subjects, decisions=decisions,
                              vote_verdicts={f"p{i}": i % 2 == 0 for i in range(4)},
                              routed_attempts=routed)
        assert report.per_strategy["cot"]["micro_average"] == 100.0
        assert report.per_strategy["pal"]["micro_average"] == 0.0
        assert report.routed_accuracy == 100.0
        assert report.chosen_accuracy == 100.0
        assert report.vote_accuracy == 50.0
        assert len(report.transitions) == 4
        assert "routed" in report.avg_tokens

    def test_render_is_text(self):
        attempts_by_strategy = {Strategy.COT: [make_attempt("p0")]}
        report = build_report(attempts_by_strategy, {"p0": "Algebra"})
        text = render_report_text(report)
        assert "Accuracy (%) by subject" in text
        assert "cot" in text
        assert text.endswith("\n")
