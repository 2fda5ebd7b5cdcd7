import itertools
import random

import pytest

from mathstrat.core import (ExecStatus, ExecutionOutcome, Problem, Strategy,
                            Verdict)
from mathstrat.gateway import MockGateway
from mathstrat.router import (DuplicateStrategy, majority_vote, parse_selection,
                              run_routed, select_strategy)
from mathstrat.sandbox import MockExecutor

from conftest import make_attempt

P = Problem(id="p1", statement="What is 2+2?", reference_answer="4")


class TestParseSelection:
    @pytest.mark.parametrize("text,expected", [
        ("PAL", Strategy.PAL),
        ("cot", Strategy.COT),
        ("I would use CodeNL here.", Strategy.CODENL),
        ("NLCode.", Strategy.NLCODE),
        ("nlcode\n", Strategy.NLCODE),
    ])
    def test_single_label(self, text, expected):
        assert parse_selection(text) is expected

    @pytest.mark.parametrize("text", [
        "either CoT or PAL",          # two distinct labels
        "no label at all",
        "COTTON",                      # word boundary must hold
        "palindrome",
        "",
    ])
    def test_no_unique_label(self, text):
        assert parse_selection(text) is None

    def test_repeated_same_label_is_fine(self):
        assert parse_selection("PAL, definitely PAL") is Strategy.PAL


class TestSelectStrategy:
    def test_parses_choice(self):
        gw = MockGateway(["CodeNL"])
        d = select_strategy(P, gw)
        assert d.chosen is Strategy.CODENL
        assert not d.fallback_used
        assert d.selection_raw == "CodeNL"
        assert d.selection_tokens > 0
        assert gw.calls[0].seed_tag == "select:p1"

    def test_fallback_on_ambiguous(self):
        d = select_strategy(P, MockGateway(["CoT or PAL, hard to say"]))
        assert d.chosen is Strategy.COT
        assert d.fallback_used

    def test_fallback_is_configurable(self):
        d = select_strategy(P, MockGateway(["mumble"]), fallback=Strategy.PAL)
        assert d.chosen is Strategy.PAL
        assert d.fallback_used


class TestRunRouted:
    def test_runs_exactly_the_chosen_pipeline(self):
        gw = MockGateway(["PAL", "```python\ndef solution():\n    return 4\n```"])
        ex = MockExecutor(by_code={
            "def solution():\n    return 4":
            ExecutionOutcome(status=ExecStatus.OK, value_text="4")})
        decision, attempt = run_routed(P, gw, ex)
        assert decision.chosen is Strategy.PAL
        assert attempt.strategy is Strategy.PAL
        assert attempt.verdict is Verdict.CORRECT
        assert len(gw.calls) == 2  # one selection call + one pipeline call

    def test_fallback_runs_default(self):
        gw = MockGateway(["no idea", "thus $\\boxed{4}$"])
        decision, attempt = run_routed(P, gw, MockExecutor())
        assert decision.fallback_used
        assert attempt.strategy is Strategy.COT
        assert attempt.verdict is Verdict.CORRECT


def four(answers):
    """One attempt per strategy with the given extracted answers (None = no vote)."""
    out = []
    for strategy, ans in zip(Strategy, answers):
        verdict = Verdict.EXTRACTION_FAILED if ans is None else Verdict.INCORRECT
        out.append(make_attempt(strategy=strategy, verdict=verdict, answer=ans))
    return out


class TestMajorityVote:
    def test_strict_majority(self):
        vote = majority_vote(four(["7", "7", "7", "9"]), seed=0)
        assert vote.winner_answer == "7"
        assert not vote.tie_broken
        assert vote.winner_strategies == frozenset({Strategy.COT, Strategy.PAL,
                                                    Strategy.CODENL})

    def test_equivalence_aware_clustering(self):
        # "1/2" and "0.5" agree mathematically and outvote the singletons
        vote = majority_vote(four(["1/2", "0.5", "2", "3"]), seed=0)
        assert vote.winner_answer in ("1/2", "0.5")
        assert vote.winner_strategies == frozenset({Strategy.COT, Strategy.PAL})
        assert not vote.tie_broken

    def test_transitive_closure(self):
        # 0.4999999 bridges to 0.5 by tolerance, 1/2 to 0.5 exactly; all
        # three must land in one cluster
        vote = majority_vote(four(["1/2", "0.5", "0.4999999", "9"]), seed=0)
        assert len(vote.winner_strategies) == 3

    def test_abstainers_form_no_cluster(self):
        vote = majority_vote(four([None, None, "8", "9"]), seed=1)
        assert vote.winner_answer in ("8", "9")
        assert vote.tie_broken

    def test_all_abstain(self):
        vote = majority_vote(four([None, None, None, None]), seed=0)
        assert vote.winner_answer == ""
        assert vote.winner_strategies == frozenset()
        assert not vote.tie_broken

    def test_tie_flag_and_seed_recorded(self):
        vote = majority_vote(four(["1", "1", "2", "2"]), seed=77)
        assert vote.tie_broken
        assert vote.rng_seed == 77

    def test_same_seed_same_winner(self):
        attempts = four(["1", "1", "2", "2"])
        a = majority_vote(attempts, seed=5)
        b = majority_vote(attempts, seed=5)
        assert a == b

    def test_permutation_invariance(self):
        attempts = four(["1", "2", "2", "3"])
        winners = {majority_vote(list(perm), seed=3).winner_answer
                   for perm in itertools.permutations(attempts)}
        assert winners == {"2"}

    def test_tie_permutation_invariance(self):
        attempts = four(["1", "1", "2", "2"])
        winners = {majority_vote(list(perm), seed=11).winner_answer
                   for perm in itertools.permutations(attempts)}
        assert len(winners) == 1

    def test_tie_fairness_smoke(self):
        attempts = four(["1", "1", "2", "2"])
        wins = sum(majority_vote(attempts, seed=s).winner_answer == "1"
                   for s in range(2000))
        assert 0.45 < wins / 2000 < 0.55

    def test_duplicate_strategy_rejected(self):
        attempts = four(["1", "2", "3", "4"])
        with pytest.raises(DuplicateStrategy):
            majority_vote(attempts + [attempts[0]], seed=0)

    def test_strict_string_mode(self):
        # under strict strings "1/2" and "0.5" no longer cluster
        vote = majority_vote(four(["1/2", "0.5", "2", "2"]), seed=0,
                             strict_string=True)
        assert vote.winner_answer == "2"
        assert not vote.tie_broken
