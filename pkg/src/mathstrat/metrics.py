"""Aggregate computations: accuracies, transition tables, token averages.

All percentages are kept unrounded internally; rounding (half-up, 2
decimals for accuracies, 1 for transition ratios) happens only at display
time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from typing import Optional

from .core import Attempt, RouterDecision, Strategy, Verdict

NO_SUBJECT = "(none)"


class MissingAttempt(ValueError):
    pass


class IdMismatch(ValueError):
    pass


def round_half_up(x: float, places: int) -> float:
    q = Decimal(10) ** -places
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class TransitionCell:
    baseline: Strategy
    two_stage: Strategy
    fixed: int    # baseline not correct, two-stage correct
    broken: int   # baseline correct, two-stage not correct

    @property
    def ratio(self) -> Optional[float]:
        """fixed/broken rounded half-up to 1 decimal; None when broken == 0."""
        if self.broken == 0:
            return None
        return round_half_up(self.fixed / self.broken, 1)

    @property
    def ratio_display(self) -> str:
        return "—" if self.ratio is None else f"{self.ratio:.1f}"

    def to_dict(self) -> dict:
        return {"baseline": self.baseline.value, "two_stage": self.two_stage.value,
                "fixed": self.fixed, "broken": self.broken, "ratio": self.ratio}


@dataclass(frozen=True)
class RunReport:
    per_strategy: dict          # strategy name -> {"per_subject": {...}, "micro_average": float}
    routed_accuracy: Optional[float]
    chosen_accuracy: Optional[float]
    vote_accuracy: Optional[float]
    transitions: tuple          # tuple of TransitionCell
    avg_tokens: dict            # method name -> float

    def to_dict(self) -> dict:
        return {
            "per_strategy": self.per_strategy,
            "routed_accuracy": self.routed_accuracy,
            "chosen_accuracy": self.chosen_accuracy,
            "vote_accuracy": self.vote_accuracy,
            "transitions": [t.to_dict() for t in self.transitions],
            "avg_tokens": self.avg_tokens,
        }


def accuracy(attempts: list, subjects: dict) -> tuple:
    """(per-subject accuracy map, micro average), both in percent.

    subjects maps problem_id -> subject (None allowed). Per-subject values
    are unrounded; empty subjects are simply absent. Micro average weights
    per problem. Verdicts other than correct all count as incorrect.
    """
    if not attempts:
        return {}, 0.0
    totals: dict[str, int] = {}
    corrects: dict[str, int] = {}
    correct_total = 0
    for a in attempts:
        if a.problem_id not in subjects:
            raise MissingAttempt(f"no subject entry for problem {a.problem_id!r}")
        subj = subjects[a.problem_id] or NO_SUBJECT
        totals[subj] = totals.get(subj, 0) + 1
        if a.verdict is Verdict.CORRECT:
            corrects[subj] = corrects.get(subj, 0) + 1
            correct_total += 1
    per_subject = {s: corrects.get(s, 0) / t * 100 for s, t in totals.items()}
    return per_subject, correct_total / len(attempts) * 100


def weighted_micro_average(per_subject_rates: dict, counts: dict) -> float:
    """Micro average (percent) from per-subject percentages and problem counts."""
    total = sum(counts.values())
    if total == 0:
        return 0.0
    return sum(per_subject_rates[s] * counts[s] for s in counts) / total


def chosen_accuracy(decisions: list, all_attempts: dict) -> float:
    """Percent of decisions that were "right".

    all_attempts maps problem_id -> {Strategy: Attempt} with all four
    strategies present. A decision is right iff the chosen strategy's
    attempt is correct, or none of the four attempts is correct.
    """
    if not decisions:
        return 0.0
    right = 0
    for d in decisions:
        per_strategy = all_attempts.get(d.problem_id)
        if per_strategy is None or set(per_strategy) != set(Strategy):
            raise MissingAttempt(
                f"problem {d.problem_id!r} lacks attempts for all four strategies")
        chosen_correct = per_strategy[d.chosen].verdict is Verdict.CORRECT
        any_correct = any(a.verdict is Verdict.CORRECT for a in per_strategy.values())
        if chosen_correct or not any_correct:
            right += 1
    return right / len(decisions) * 100


def routed_accuracy(decisions: list, all_attempts: dict) -> float:
    """Percent of problems where the chosen strategy's attempt is correct."""
    if not decisions:
        return 0.0
    correct = sum(
        1 for d in decisions
        if all_attempts[d.problem_id][d.chosen].verdict is Verdict.CORRECT
    )
    return correct / len(decisions) * 100


def transitions(baseline_attempts: list, two_stage_attempts: list) -> TransitionCell:
    """Count problems fixed and broken by moving from one stage to two."""
    base = {a.problem_id: a for a in baseline_attempts}
    two = {a.problem_id: a for a in two_stage_attempts}
    if set(base) != set(two):
        raise IdMismatch("baseline and two-stage attempts cover different problems")
    fixed = broken = 0
    for pid, b in base.items():
        b_ok = b.verdict is Verdict.CORRECT
        t_ok = two[pid].verdict is Verdict.CORRECT
        if not b_ok and t_ok:
            fixed += 1
        elif b_ok and not t_ok:
            broken += 1
    b_strategy = next(iter(base.values())).strategy if base else Strategy.COT
    t_strategy = next(iter(two.values())).strategy if two else Strategy.CODENL
    return TransitionCell(baseline=b_strategy, two_stage=t_strategy,
                          fixed=fixed, broken=broken)


def transition_cell_from_counts(baseline: Strategy, two_stage: Strategy,
                                fixed: int, broken: int) -> TransitionCell:
    return TransitionCell(baseline=baseline, two_stage=two_stage,
                          fixed=fixed, broken=broken)


def avg_tokens_per_strategy(attempts_by_strategy: dict) -> dict:
    """Mean total tokens per strategy name."""
    out = {}
    for strategy, attempts in attempts_by_strategy.items():
        if attempts:
            key = strategy.value if isinstance(strategy, Strategy) else str(strategy)
            out[key] = sum(a.total_tokens for a in attempts) / len(attempts)
    return out


def avg_tokens_routed(pairs: list) -> float:
    """Mean of selection tokens + chosen attempt tokens over (decision, attempt) pairs."""
    if not pairs:
        return 0.0
    return sum(d.selection_tokens + a.total_tokens for d, a in pairs) / len(pairs)


# ---------------------------------------------------------------------------
# report assembly and rendering

def build_report(attempts_by_strategy: dict, subjects: dict,
                 decisions: Optional[list] = None,
                 vote_verdicts: Optional[dict] = None,
                 routed_attempts: Optional[dict] = None) -> RunReport:
    """Assemble a RunReport from completed per-strategy attempts.

    vote_verdicts maps problem_id -> bool (winner answer judged correct).
    routed_attempts maps problem_id -> the attempt of the chosen strategy
    (used for routed accuracy and token accounting).
    """
    per_strategy = {}
    for strategy in Strategy:
        attempts = attempts_by_strategy.get(strategy)
        if attempts:
            per_subject, micro = accuracy(attempts, subjects)
            per_strategy[strategy.value] = {
                "per_subject": per_subject, "micro_average": micro}

    routed_acc = chosen_acc = None
    if decisions:
        all_by_pid: dict[str, dict] = {}
        for strategy, attempts in attempts_by_strategy.items():
            for a in attempts:
                all_by_pid.setdefault(a.problem_id, {})[strategy] = a
        if all(set(v) == set(Strategy) for v in all_by_pid.values()):
            chosen_acc = chosen_accuracy(decisions, all_by_pid)
            routed_acc = routed_accuracy(decisions, all_by_pid)

    vote_acc = None
    if vote_verdicts:
        vote_acc = sum(1 for ok in vote_verdicts.values() if ok) / len(vote_verdicts) * 100

    cells = []
    for baseline, two_stage in ((Strategy.PAL, Strategy.CODENL),
                                (Strategy.PAL, Strategy.NLCODE),
                                (Strategy.COT, Strategy.CODENL),
                                (Strategy.COT, Strategy.NLCODE)):
        b = attempts_by_strategy.get(baseline)
        t = attempts_by_strategy.get(two_stage)
        if b and t and {a.problem_id for a in b} == {a.problem_id for a in t}:
            cell = transitions(b, t)
            cells.append(TransitionCell(baseline=baseline, two_stage=two_stage,
                                        fixed=cell.fixed, broken=cell.broken))

    avg = avg_tokens_per_strategy(attempts_by_strategy)
    if decisions and routed_attempts:
        by_pid = {d.problem_id: d for d in decisions}
        pairs = [(by_pid[pid], a) for pid, a in routed_attempts.items() if pid in by_pid]
        if pairs:
            avg["routed"] = avg_tokens_routed(pairs)

    return RunReport(per_strategy=per_strategy, routed_accuracy=routed_acc,
                     chosen_accuracy=chosen_acc, vote_accuracy=vote_acc,
                     transitions=tuple(cells), avg_tokens=avg)


def render_report_text(report: RunReport) -> str:
    """Human-readable tables: per-subject accuracy, token averages, transitions."""
    lines = []
    subjects = sorted({s for v in report.per_strategy.values()
                       for s in v["per_subject"]})
    if report.per_strategy:
        lines.append("Accuracy (%) by subject")
        header = ["method"] + subjects + ["average"]
        lines.append("  ".join(header))
        for method, v in report.per_strategy.items():
            row = [method]
            row += [f"{round_half_up(v['per_subject'][s], 2):.2f}" if s in v["per_subject"]
                    else "-" for s in subjects]
            row.append(f"{round_half_up(v['micro_average'], 2):.2f}")
            lines.append("  ".join(row))
        lines.append("")
    for label, value in (("routed accuracy", report.routed_accuracy),
                         ("chosen accuracy", report.chosen_accuracy),
                         ("vote accuracy", report.vote_accuracy)):
        if value is not None:
            lines.append(f"{label}: {round_half_up(value, 2):.2f}")
    if report.avg_tokens:
        lines.append("")
        lines.append("Average tokens per method")
        for method, value in sorted(report.avg_tokens.items()):
            lines.append(f"  {method}: {round_half_up(value, 2):.2f}")
    if report.transitions:
        lines.append("")
        lines.append("One-stage vs two-stage correctness")
        lines.append("  baseline  two-stage  fixed  broken  ratio")
        for c in report.transitions:
            lines.append(f"  {c.baseline.value:<8}  {c.two_stage.value:<9}  "
                         f"{c.fixed:<5}  {c.broken:<6}  {c.ratio_display}")
    return "\n".join(lines) + "\n"
