"""The four end-to-end reasoning pipelines.

Each maps a Problem to an Attempt through the gateway, the extractors, the
sandbox, and the equivalence judge. Verdict sources are fixed per pipeline:
cot and codenl judge the boxed answer of an NL stage, pal and nlcode judge
the executed value of a code stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (Attempt, ExecStatus, Problem, StageKind, StageOutput,
                   Strategy, Verdict)
from .equiv import equivalent, normalize_reference
from .extract import ExtractionError, extract_boxed, extract_code
from .gateway import CompletionRequest, Gateway
from .promptkit import StageContext, build_prompt
from .sandbox import ExecLimits, Executor


@dataclass(frozen=True)
class StrategyConfig:
    model_id: str = "default"
    max_tokens: int = 2048
    temperature: float = 0.0
    shots_override: Optional[int] = None
    limits: ExecLimits = field(default_factory=ExecLimits)


def _complete(gateway: Gateway, messages: list, p: Problem, cfg: StrategyConfig,
              stage: int, kind: StageKind, seed_tag: str):
    req = CompletionRequest(
        messages=tuple(messages),
        model_id=cfg.model_id,
        max_tokens=cfg.max_tokens,
        temperature=cfg.temperature,
        seed_tag=seed_tag,
    )
    result = gateway.complete(req)
    return StageOutput(
        stage_index=stage,
        raw_text=result.text,
        kind=kind,
        prompt_tokens=result.prompt_tokens,
        completion_tokens=result.completion_tokens,
    )


def _judge(extracted: str, p: Problem) -> Verdict:
    reference = normalize_reference(p)
    return Verdict.CORRECT if equivalent(extracted, reference) else Verdict.INCORRECT


def run_cot(p: Problem, gateway: Gateway, cfg: StrategyConfig = StrategyConfig()) -> Attempt:
    messages = build_prompt(Strategy.COT, 1, p, shots_override=cfg.shots_override)
    stage = _complete(gateway, messages, p, cfg, 1, StageKind.REASONING, f"cot:{p.id}")
    try:
        extracted = extract_boxed(stage.raw_text).payload
    except ExtractionError:
        return Attempt(p.id, Strategy.COT, (stage,), Verdict.EXTRACTION_FAILED)
    return Attempt(p.id, Strategy.COT, (stage,), _judge(extracted, p),
                   extracted_answer=extracted)


def run_pal(p: Problem, gateway: Gateway, executor: Executor,
            cfg: StrategyConfig = StrategyConfig()) -> Attempt:
    messages = build_prompt(Strategy.PAL, 1, p, shots_override=cfg.shots_override)
    stage = _complete(gateway, messages, p, cfg, 1, StageKind.CODE, f"pal:{p.id}")
    try:
        code = extract_code(stage.raw_text).payload
    except ExtractionError:
        return Attempt(p.id, Strategy.PAL, (stage,), Verdict.EXTRACTION_FAILED)
    outcome = executor.execute(code, cfg.limits)
    if outcome.status is not ExecStatus.OK:
        return Attempt(p.id, Strategy.PAL, (stage,), Verdict.EXECUTION_ERROR,
                       execution=outcome)
    return Attempt(p.id, Strategy.PAL, (stage,), _judge(outcome.value_text, p),
                   execution=outcome, extracted_answer=outcome.value_text)


def run_codenl(p: Problem, gateway: Gateway, executor: Executor,
               cfg: StrategyConfig = StrategyConfig()) -> Attempt:
    """Code first, then NL reasoning over the code and its output.

    Any stage-1 outcome, including errors, is carried into stage 2 as the
    textual Output section; the stage-2 boxed answer is the verdict source.
    """
    messages = build_prompt(Strategy.CODENL, 1, p, shots_override=cfg.shots_override)
    stage1 = _complete(gateway, messages, p, cfg, 1, StageKind.CODE, f"codenl1:{p.id}")
    execution = None
    try:
        code = extract_code(stage1.raw_text).payload
        code_section = f"```python\n{code}\n```"
    except ExtractionError:
        code = None
        code_section = "<none produced>"
    if code is not None:
        execution = executor.execute(code, cfg.limits)
        if execution.status is ExecStatus.OK:
            output_section = execution.value_text
        else:
            output_section = f"<{execution.status.value}: {execution.stderr_excerpt or ''}>"
    else:
        output_section = "<no code was produced>"
    ctx = StageContext(prior_code=code_section, prior_exec_output=output_section)
    messages2 = build_prompt(Strategy.CODENL, 2, p, ctx, shots_override=cfg.shots_override)
    stage2 = _complete(gateway, messages2, p, cfg, 2, StageKind.REASONING, f"codenl2:{p.id}")
    stages = (stage1, stage2)
    try:
        extracted = extract_boxed(stage2.raw_text).payload
    except ExtractionError:
        return Attempt(p.id, Strategy.CODENL, stages, Verdict.EXTRACTION_FAILED,
                       execution=execution)
    return Attempt(p.id, Strategy.CODENL, stages, _judge(extracted, p),
                   execution=execution, extracted_answer=extracted)


def run_nlcode(p: Problem, gateway: Gateway, executor: Executor,
               cfg: StrategyConfig = StrategyConfig()) -> Attempt:
    """NL reasoning first, then translation to code; the executed value is
    the verdict source. The stage-1 boxed answer stays in the trace only."""
    messages = build_prompt(Strategy.NLCODE, 1, p, shots_override=cfg.shots_override)
    stage1 = _complete(gateway, messages, p, cfg, 1, StageKind.REASONING, f"nlcode1:{p.id}")
    ctx = StageContext(prior_reasoning=stage1.raw_text)
    messages2 = build_prompt(Strategy.NLCODE, 2, p, ctx, shots_override=cfg.shots_override)
    stage2 = _complete(gateway, messages2, p, cfg, 2, StageKind.CODE, f"nlcode2:{p.id}")
    stages = (stage1, stage2)
    try:
        code = extract_code(stage2.raw_text).payload
    except ExtractionError:
        return Attempt(p.id, Strategy.NLCODE, stages, Verdict.EXTRACTION_FAILED)
    outcome = executor.execute(code, cfg.limits)
    if outcome.status is not ExecStatus.OK:
        return Attempt(p.id, Strategy.NLCODE, stages, Verdict.EXECUTION_ERROR,
                       execution=outcome)
    return Attempt(p.id, Strategy.NLCODE, stages, _judge(outcome.value_text, p),
                   execution=outcome, extracted_answer=outcome.value_text)


def run_strategy(strategy: Strategy, p: Problem, gateway: Gateway,
                 executor: Executor, cfg: StrategyConfig = StrategyConfig()) -> Attempt:
    if strategy is Strategy.COT:
        return run_cot(p, gateway, cfg)
    if strategy is Strategy.PAL:
        return run_pal(p, gateway, executor, cfg)
    if strategy is Strategy.CODENL:
        return run_codenl(p, gateway, executor, cfg)
    return run_nlcode(p, gateway, executor, cfg)
