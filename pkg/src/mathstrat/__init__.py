"""Math-reasoning evaluation harness.

Four solving pipelines (natural language, program, and two hybrids), a
strategy-selection router, majority voting, a sandboxed program executor,
an answer-equivalence engine, and reproducible trace/report tooling.
"""

from .core import (Attempt, Dataset, ExecStatus, ExecutionOutcome, Problem,
                   RouterDecision, StageKind, StageOutput, Strategy, Verdict,
                   validate_problem)
from .equiv import CanonicalAnswer, Kind, canonicalize, equivalent, normalize_reference
from .extract import Extraction, extract_boxed, extract_code
from .gateway import (CompletionRequest, CompletionResult, Message, MockGateway,
                      RemoteGateway, ReplayGateway, Role, cache_key)
from .promptkit import StageContext, build_prompt, build_selector_prompt
from .router import VoteResult, majority_vote, run_routed, select_strategy
from .sandbox import ExecLimits, MockExecutor, SubprocessExecutor
from .strategies import (StrategyConfig, run_cot, run_codenl, run_nlcode,
                         run_pal, run_strategy)

__version__ = "0.1.0"

__all__ = [
    "Attempt", "CanonicalAnswer", "CompletionRequest", "CompletionResult",
    "Dataset", "ExecLimits", "ExecStatus", "ExecutionOutcome", "Extraction",
    "Kind", "Message", "MockExecutor", "MockGateway", "Problem",
    "RemoteGateway", "ReplayGateway", "Role", "RouterDecision", "StageContext",
    "StageKind", "StageOutput", "Strategy", "StrategyConfig",
    "SubprocessExecutor", "Verdict", "VoteResult", "build_prompt",
    "build_selector_prompt", "cache_key", "canonicalize", "equivalent",
    "extract_boxed", "extract_code", "majority_vote", "normalize_reference",
    "run_cot", "run_codenl", "run_nlcode", "run_pal", "run_routed",
    "run_strategy", "select_strategy", "validate_problem",
]
