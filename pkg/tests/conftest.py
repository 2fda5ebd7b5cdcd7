import pytest

from mathstrat.core import (Attempt, Dataset, ExecStatus, ExecutionOutcome,
                            Problem, StageKind, StageOutput, Strategy, Verdict)


@pytest.fixture
def problem():
    return Problem(id="p1", statement="What is 2+2?", reference_answer="4",
                   dataset=Dataset.CUSTOM)


def make_stage(stage_index=1, kind=StageKind.REASONING, text="...", pt=10, ct=20):
    return StageOutput(stage_index=stage_index, raw_text=text, kind=kind,
                       prompt_tokens=pt, completion_tokens=ct)


def make_attempt(problem_id="p1", strategy=Strategy.COT, verdict=Verdict.CORRECT,
                 answer="4", execution=None, stages=None, tokens=(10, 20)):
    if stages is None:
        kind = StageKind.REASONING if strategy in (Strategy.COT,) else StageKind.CODE
        stages = (make_stage(kind=kind, pt=tokens[0], ct=tokens[1]),)
    if strategy in (Strategy.PAL, Strategy.NLCODE) and verdict is Verdict.CORRECT \
            and execution is None:
        execution = ExecutionOutcome(status=ExecStatus.OK, value_text=answer)
    if verdict is not Verdict.CORRECT and answer is not None \
            and verdict in (Verdict.EXTRACTION_FAILED, Verdict.EXECUTION_ERROR):
        answer = None
    return Attempt(problem_id=problem_id, strategy=strategy, stages=stages,
                   verdict=verdict, execution=execution, extracted_answer=answer)
