"""Run orchestration and trace persistence.

A run appends one JSON object per line to traces.jsonl: a header with
provenance hashes, one record per problem, then attempt / decision / vote
records. Reports are always rebuilt from parsed trace records, so the
report written by a run and the one recomputed offline from its traces are
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .core import Attempt, Problem, RouterDecision, Strategy, Verdict
from .data import ProblemSet
from .equiv import equivalent, normalize_reference
from .gateway import Gateway
from .metrics import RunReport, build_report, render_report_text
from .promptkit import asset_hashes
from .router import VoteResult, majority_vote, select_strategy
from .sandbox import ExecLimits, Executor
from .strategies import StrategyConfig, run_strategy

TRACE_VERSION = 1


class MalformedTrace(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class RunSettings:
    strategies: tuple = tuple(Strategy)
    router: bool = False
    vote: bool = False
    vote_seed: int = 0
    concurrency: int = 4
    strategy_config: StrategyConfig = field(default_factory=StrategyConfig)

    def fingerprint(self) -> str:
        blob = _dumps({
            "strategies": [s.value for s in self.strategies],
            "router": self.router,
            "vote": self.vote,
            "vote_seed": self.vote_seed,
            "model_id": self.strategy_config.model_id,
            "max_tokens": self.strategy_config.max_tokens,
            "temperature": self.strategy_config.temperature,
            "shots_override": self.strategy_config.shots_override,
            "timeout_ms": self.strategy_config.limits.wall_timeout_ms,
        })
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ProblemResult:
    problem: Problem
    attempts: dict                      # Strategy -> Attempt
    decision: Optional[RouterDecision] = None
    vote: Optional[VoteResult] = None
    vote_correct: Optional[bool] = None


def _run_one(p: Problem, gateway: Gateway, executor: Executor,
             settings: RunSettings) -> ProblemResult:
    cfg = settings.strategy_config
    attempts = {}
    for strategy in settings.strategies:
        attempts[strategy] = run_strategy(strategy, p, gateway, executor, cfg)
    decision = None
    if settings.router:
        decision = select_strategy(p, gateway, cfg)
        if decision.chosen not in attempts:
            attempts[decision.chosen] = run_strategy(decision.chosen, p, gateway,
                                                     executor, cfg)
    vote = vote_correct = None
    if settings.vote and set(attempts) >= set(Strategy):
        vote = majority_vote([attempts[s] for s in Strategy], settings.vote_seed)
        if vote.winner_answer:
            vote_correct = equivalent(vote.winner_answer, normalize_reference(p))
        else:
            vote_correct = False
    return ProblemResult(problem=p, attempts=attempts, decision=decision,
                         vote=vote, vote_correct=vote_correct)


def execute_run(problems: ProblemSet, gateway: Gateway, executor: Executor,
                settings: RunSettings, trace_path: str,
                runner_env_hash: str = "mock") -> list:
    """Run every problem and append trace lines; returns ProblemResults.

    The trace stays a parseable prefix if the run dies mid-way: the header
    and problem records go out first, then one flush per completed problem,
    in problem order.
    """
    results: list[Optional[ProblemResult]] = [None] * len(problems.problems)
    with open(trace_path, "w", encoding="utf-8") as out:
        header = {
            "type": "header",
            "trace_version": TRACE_VERSION,
            "config_hash": settings.fingerprint(),
            "asset_hashes": asset_hashes(),
            "runner_env_hash": runner_env_hash,
            "provenance": problems.provenance,
        }
        out.write(_dumps(header) + "\n")
        for p in problems.problems:
            rec = {"type": "problem", **p.to_dict(),
                   "reference": normalize_reference(p)}
            out.write(_dumps(rec) + "\n")
        out.flush()

        if settings.concurrency > 1:
            with ThreadPoolExecutor(max_workers=settings.concurrency) as pool:
                futures = [pool.submit(_run_one, p, gateway, executor, settings)
                           for p in problems.problems]
                for i, fut in enumerate(futures):
                    results[i] = fut.result()
        else:
            for i, p in enumerate(problems.problems):
                results[i] = _run_one(p, gateway, executor, settings)
                _write_result(out, results[i])
                out.flush()
        if settings.concurrency > 1:
            for r in results:
                _write_result(out, r)
            out.flush()
    return results


def _write_result(out, r: ProblemResult):
    for strategy in Strategy:
        if strategy in r.attempts:
            out.write(_dumps({"type": "attempt", **r.attempts[strategy].to_dict()}) + "\n")
    if r.decision is not None:
        out.write(_dumps({"type": "decision", **r.decision.to_dict()}) + "\n")
    if r.vote is not None:
        out.write(_dumps({"type": "vote", "problem_id": r.problem.id,
                          "correct": r.vote_correct, **r.vote.to_dict()}) + "\n")


# ---------------------------------------------------------------------------
# report from traces

def parse_traces(trace_path: str) -> dict:
    """Parse a trace file into {header, problems, attempts, decisions, votes}."""
    header = None
    problems: dict[str, dict] = {}
    attempts: list[Attempt] = []
    decisions: list[RouterDecision] = []
    votes: list[dict] = []
    with open(trace_path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                kind = rec["type"]
                if kind == "header":
                    header = rec
                elif kind == "problem":
                    problems[rec["id"]] = rec
                elif kind == "attempt":
                    attempts.append(Attempt.from_dict(rec))
                elif kind == "decision":
                    decisions.append(RouterDecision.from_dict(rec))
                elif kind == "vote":
                    votes.append(rec)
                else:
                    raise ValueError(f"unknown record type {kind!r}")
            except (ValueError, KeyError) as e:
                raise MalformedTrace(f"{trace_path}:{lineno}: {e}")
    return {"header": header, "problems": problems, "attempts": attempts,
            "decisions": decisions, "votes": votes}


def report_from_traces(trace_path: str) -> RunReport:
    parsed = parse_traces(trace_path)
    subjects = {pid: rec.get("subject") for pid, rec in parsed["problems"].items()}
    attempts_by_strategy: dict[Strategy, list] = {}
    for a in parsed["attempts"]:
        attempts_by_strategy.setdefault(a.strategy, []).append(a)
    vote_verdicts = {v["problem_id"]: bool(v.get("correct")) for v in parsed["votes"]}
    routed_attempts = {}
    by_pid: dict[str, dict] = {}
    for a in parsed["attempts"]:
        by_pid.setdefault(a.problem_id, {})[a.strategy] = a
    for d in parsed["decisions"]:
        if d.problem_id in by_pid and d.chosen in by_pid[d.problem_id]:
            routed_attempts[d.problem_id] = by_pid[d.problem_id][d.chosen]
    return build_report(attempts_by_strategy, subjects,
                        decisions=parsed["decisions"] or None,
                        vote_verdicts=vote_verdicts or None,
                        routed_attempts=routed_attempts or None)


def write_report_files(report: RunReport, json_path: str, text_path: str):
    with open(json_path, "w", encoding="utf-8") as f:
        f.write(_dumps(report.to_dict()) + "\n")
    with open(text_path, "w", encoding="utf-8") as f:
        f.write(render_report_text(report))
