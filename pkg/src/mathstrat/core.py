"""Domain types shared by the whole harness.

Everything here is a frozen dataclass or an enum: construct, validate,
serialize. Behavior lives in the other modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional


class Dataset(str, Enum):
    GSM8K = "gsm8k"
    MATH = "math"
    AIME = "aime"
    CUSTOM = "custom"


class Strategy(str, Enum):
    COT = "cot"
    PAL = "pal"
    CODENL = "codenl"
    NLCODE = "nlcode"


class StageKind(str, Enum):
    REASONING = "reasoning"
    CODE = "code"
    SELECTION = "selection"


class ExecStatus(str, Enum):
    OK = "ok"
    SYNTAX_ERROR = "syntax_error"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    MISSING_ENTRY = "missing_entry"
    SERIALIZATION_ERROR = "serialization_error"
    SANDBOX_FAILURE = "sandbox_failure"


class Verdict(str, Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    EXTRACTION_FAILED = "extraction_failed"
    EXECUTION_ERROR = "execution_error"


class ProblemError(ValueError):
    """A Problem record violates an invariant."""


class EmptyStatement(ProblemError):
    pass


class BadLevel(ProblemError):
    pass


class DuplicateId(ProblemError):
    pass


@dataclass(frozen=True)
class Problem:
    id: str
    statement: str
    reference_answer: str
    dataset: Dataset = Dataset.CUSTOM
    subject: Optional[str] = None
    level: Optional[int] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dataset"] = self.dataset.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Problem":
        return cls(
            id=d["id"],
            statement=d["statement"],
            reference_answer=d["reference_answer"],
            dataset=Dataset(d.get("dataset", "custom")),
            subject=d.get("subject"),
            level=d.get("level"),
        )


def validate_problem(p: Problem, seen_ids: Optional[set] = None) -> Problem:
    """Return p unchanged if it satisfies all Problem invariants.

    seen_ids is a caller-supplied set of ids already accepted; p.id must not
    be in it (the caller adds p.id afterwards).
    """
    if not p.id:
        raise ProblemError("problem id must be nonempty")
    if not p.statement or not p.statement.strip():
        raise EmptyStatement(f"problem {p.id!r} has an empty statement")
    if p.level is not None and not (1 <= p.level <= 5):
        raise BadLevel(f"problem {p.id!r} has level {p.level}, expected 1..5")
    if seen_ids is not None and p.id in seen_ids:
        raise DuplicateId(f"duplicate problem id {p.id!r}")
    return p


@dataclass(frozen=True)
class StageOutput:
    stage_index: int
    raw_text: str
    kind: StageKind
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.stage_index not in (1, 2):
            raise ValueError(f"stage_index must be 1 or 2, got {self.stage_index}")
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StageOutput":
        return cls(
            stage_index=d["stage_index"],
            raw_text=d["raw_text"],
            kind=StageKind(d["kind"]),
            prompt_tokens=d["prompt_tokens"],
            completion_tokens=d["completion_tokens"],
        )


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExecStatus
    value_text: Optional[str] = None
    stderr_excerpt: Optional[str] = None
    wall_time_ms: int = 0

    def __post_init__(self):
        if (self.status is ExecStatus.OK) != (self.value_text is not None):
            raise ValueError("value_text must be present iff status is ok")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionOutcome":
        return cls(
            status=ExecStatus(d["status"]),
            value_text=d.get("value_text"),
            stderr_excerpt=d.get("stderr_excerpt"),
            wall_time_ms=d.get("wall_time_ms", 0),
        )


@dataclass(frozen=True)
class Attempt:
    problem_id: str
    strategy: Strategy
    stages: tuple  # tuple of StageOutput, length 1 or 2
    verdict: Verdict
    execution: Optional[ExecutionOutcome] = None
    extracted_answer: Optional[str] = None

    def __post_init__(self):
        if len(self.stages) not in (1, 2):
            raise ValueError("an attempt has 1 or 2 stages")
        if self.strategy is Strategy.COT and self.execution is not None:
            raise ValueError("cot attempts never carry an execution outcome")
        if self.verdict is Verdict.CORRECT and self.extracted_answer is None:
            raise ValueError("a correct attempt must have an extracted answer")
        if (
            self.strategy in (Strategy.PAL, Strategy.NLCODE)
            and self.verdict is Verdict.CORRECT
            and (self.execution is None or self.execution.status is not ExecStatus.OK)
        ):
            raise ValueError("correct pal/nlcode attempts require an ok execution")

    @property
    def total_tokens(self) -> int:
        return sum(s.prompt_tokens + s.completion_tokens for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "strategy": self.strategy.value,
            "stages": [s.to_dict() for s in self.stages],
            "verdict": self.verdict.value,
            "execution": self.execution.to_dict() if self.execution else None,
            "extracted_answer": self.extracted_answer,
            "total_tokens": self.total_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Attempt":
        return cls(
            problem_id=d["problem_id"],
            strategy=Strategy(d["strategy"]),
            stages=tuple(StageOutput.from_dict(s) for s in d["stages"]),
            verdict=Verdict(d["verdict"]),
            execution=ExecutionOutcome.from_dict(d["execution"]) if d.get("execution") else None,
            extracted_answer=d.get("extracted_answer"),
        )


@dataclass(frozen=True)
class RouterDecision:
    problem_id: str
    selection_raw: str
    chosen: Strategy
    selection_tokens: int = 0
    fallback_used: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chosen"] = self.chosen.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RouterDecision":
        return cls(
            problem_id=d["problem_id"],
            selection_raw=d["selection_raw"],
            chosen=Strategy(d["chosen"]),
            selection_tokens=d.get("selection_tokens", 0),
            fallback_used=d.get("fallback_used", False),
        )
