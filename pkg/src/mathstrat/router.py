"""Strategy selection and four-way majority voting."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .core import Attempt, Problem, RouterDecision, Strategy
from .equiv import equivalent
from .gateway import CompletionRequest, Gateway
from .promptkit import build_selector_prompt
from .sandbox import Executor
from .strategies import StrategyConfig, run_strategy

DEFAULT_FALLBACK = Strategy.COT

_LABEL_RE = re.compile(r"\b(cot|pal|codenl|nlcode)\b", re.IGNORECASE)


class DuplicateStrategy(ValueError):
    pass


@dataclass(frozen=True)
class VoteResult:
    winner_answer: str
    winner_strategies: frozenset
    tie_broken: bool
    rng_seed: int

    def to_dict(self) -> dict:
        return {
            "winner_answer": self.winner_answer,
            "winner_strategies": sorted(s.value for s in self.winner_strategies),
            "tie_broken": self.tie_broken,
            "rng_seed": self.rng_seed,
        }


def parse_selection(text: str):
    """Return the single strategy label named in the text, or None."""
    labels = {m.group(1).lower() for m in _LABEL_RE.finditer(text)}
    if len(labels) == 1:
        return Strategy(labels.pop())
    return None


def select_strategy(p: Problem, gateway: Gateway,
                    cfg: StrategyConfig = StrategyConfig(),
                    fallback: Strategy = DEFAULT_FALLBACK) -> RouterDecision:
    messages = build_selector_prompt(p)
    req = CompletionRequest(
        messages=tuple(messages),
        model_id=cfg.model_id,
        max_tokens=cfg.max_tokens,
        temperature=cfg.temperature,
        seed_tag=f"select:{p.id}",
    )
    result = gateway.complete(req)
    chosen = parse_selection(result.text)
    fallback_used = chosen is None
    return RouterDecision(
        problem_id=p.id,
        selection_raw=result.text,
        chosen=chosen if chosen is not None else fallback,
        selection_tokens=result.prompt_tokens + result.completion_tokens,
        fallback_used=fallback_used,
    )


def run_routed(p: Problem, gateway: Gateway, executor: Executor,
               cfg: StrategyConfig = StrategyConfig(),
               fallback: Strategy = DEFAULT_FALLBACK):
    """Select a strategy for the problem, then run exactly that pipeline."""
    decision = select_strategy(p, gateway, cfg, fallback)
    attempt = run_strategy(decision.chosen, p, gateway, executor, cfg)
    return decision, attempt


def majority_vote(attempts: list, seed: int, strict_string: bool = False) -> VoteResult:
    """Equivalence-aware majority vote over the four attempts for one problem.

    Answers are clustered by transitive closure of pairwise equivalence
    (union-find); the largest cluster wins; ties among largest clusters are
    broken by a seeded uniform draw over clusters in canonical order (min
    strategy name in cluster, alphabetically). Attempts without an extracted
    answer form no cluster.
    """
    seen = set()
    for a in attempts:
        if a.strategy in seen:
            raise DuplicateStrategy(f"two attempts for {a.strategy.value}")
        seen.add(a.strategy)

    voters = sorted(
        (a for a in attempts if a.extracted_answer is not None),
        key=lambda a: a.strategy.value,
    )
    if not voters:
        return VoteResult(winner_answer="", winner_strategies=frozenset(),
                          tie_broken=False, rng_seed=seed)

    parent = list(range(len(voters)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(voters)):
        for j in range(i + 1, len(voters)):
            if equivalent(voters[i].extracted_answer, voters[j].extracted_answer,
                          strict_string=strict_string):
                parent[find(j)] = find(i)

    clusters: dict[int, list] = {}
    for i in range(len(voters)):
        clusters.setdefault(find(i), []).append(voters[i])
    # canonical order: min strategy name within each cluster, alphabetical
    ordered = sorted(clusters.values(),
                     key=lambda c: min(a.strategy.value for a in c))
    max_size = max(len(c) for c in ordered)
    top = [c for c in ordered if len(c) == max_size]
    tie_broken = len(top) > 1
    winner = random.Random(seed).choice(top) if tie_broken else top[0]
    representative = min(winner, key=lambda a: a.strategy.value)
    return VoteResult(
        winner_answer=representative.extracted_answer,
        winner_strategies=frozenset(a.strategy for a in winner),
        tie_broken=tie_broken,
        rng_seed=seed,
    )
