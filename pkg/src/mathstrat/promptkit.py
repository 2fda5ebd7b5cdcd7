"""Prompt assembly for every strategy/stage from the bundled text assets.

Assets live under assets/prompts/<name>/ as plain files: system.txt,
instruction.txt (or template.txt for the selector) and shots/NN.txt.
Shot order is the sorted filename order and is version-controlled;
assets/manifest.json pins a sha256 per asset directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import Problem, Strategy
from .gateway import Message, Role

ASSETS_DIR = Path(__file__).parent / "assets"
PROMPTS_DIR = ASSETS_DIR / "prompts"

SHOT_DELIMITER = "\n\n"


class InvalidCombination(ValueError):
    """(strategy, stage) pair outside the supported pipeline shapes."""


class MissingContext(ValueError):
    """A two-stage second call lacks its required prior-stage material."""


@dataclass(frozen=True)
class StageContext:
    prior_reasoning: Optional[str] = None
    prior_code: Optional[str] = None
    prior_exec_output: Optional[str] = None


@dataclass(frozen=True)
class PromptAsset:
    name: str
    system_prompt: str
    instruction: str
    shots: tuple  # tuple of str


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8").rstrip("\n")


def load_asset(name: str) -> PromptAsset:
    base = PROMPTS_DIR / name
    if not base.is_dir():
        raise FileNotFoundError(f"no prompt asset directory {base}")
    shots_dir = base / "shots"
    shot_files = sorted(shots_dir.glob("*.txt")) if shots_dir.is_dir() else []
    return PromptAsset(
        name=name,
        system_prompt=_read(base / "system.txt"),
        instruction=_read(base / "instruction.txt") if (base / "instruction.txt").exists() else "",
        shots=tuple(_read(f) for f in shot_files),
    )


# Which asset backs each (strategy, stage), and how many shots it renders.
# Two-stage methods use 4-shot truncations of the single-stage assets in
# stage 1 and their own 4-shot assets in stage 2.
_STAGE_PLAN: dict[tuple[Strategy, int], tuple[str, Optional[int]]] = {
    (Strategy.COT, 1): ("cot", 8),
    (Strategy.PAL, 1): ("pal", 8),
    (Strategy.CODENL, 1): ("pal", 4),
    (Strategy.CODENL, 2): ("codenl_stage2", 4),
    (Strategy.NLCODE, 1): ("cot", 4),
    (Strategy.NLCODE, 2): ("nlcode_stage2", 4),
}

# Stages whose expected model output is code rather than prose.
CODE_STAGES = {(Strategy.PAL, 1), (Strategy.CODENL, 1), (Strategy.NLCODE, 2)}


def asset_hashes() -> dict[str, str]:
    """sha256 per asset directory, over (relative path, bytes) of every file."""
    out = {}
    for base in sorted(PROMPTS_DIR.iterdir()):
        if not base.is_dir():
            continue
        h = hashlib.sha256()
        for f in sorted(base.rglob("*.txt")):
            h.update(str(f.relative_to(base)).encode())
            h.update(b"\0")
            h.update(f.read_bytes())
        out[base.name] = h.hexdigest()
    return out


def load_manifest() -> list[dict]:
    return json.loads((ASSETS_DIR / "manifest.json").read_text(encoding="utf-8"))


def _render_problem(strategy: Strategy, stage: int, p: Problem, ctx: StageContext) -> str:
    if stage == 1:
        if (strategy, 1) in CODE_STAGES:
            return f"Question: {p.statement}\n"
        return f"Question: {p.statement}\nAnswer:"
    if strategy is Strategy.CODENL:
        code = ctx.prior_code if ctx.prior_code is not None else "<none produced>"
        return (
            f"Question: {p.statement}\n"
            f"Code: {code}\n"
            f"Output: {ctx.prior_exec_output}\n"
            f"Answer:"
        )
    # nlcode stage 2
    return (
        f"Question: {p.statement}\n"
        f"Reasoning Path: {ctx.prior_reasoning}\n"
        f"Code:"
    )


def build_prompt(strategy: Strategy, stage: int, p: Problem,
                 ctx: StageContext = StageContext(),
                 shots_override: Optional[int] = None) -> list:
    """Assemble [system, user] messages for one strategy stage.

    Pure function of its arguments; shots are rendered in asset order, the
    problem after all shots. shots_override (e.g. 0 for zero-shot runs) must
    not exceed the asset's shot count.
    """
    plan = _STAGE_PLAN.get((strategy, stage))
    if plan is None:
        raise InvalidCombination(f"{strategy.value} has no stage {stage}")
    if strategy is Strategy.CODENL and stage == 2 and (
        ctx.prior_code is None or ctx.prior_exec_output is None
    ):
        raise MissingContext("codenl stage 2 needs prior code and execution output")
    if strategy is Strategy.NLCODE and stage == 2 and ctx.prior_reasoning is None:
        raise MissingContext("nlcode stage 2 needs the prior reasoning path")

    asset_name, shot_count = plan
    asset = load_asset(asset_name)
    n = shot_count if shots_override is None else shots_override
    if n > len(asset.shots):
        raise ValueError(f"asset {asset_name} has only {len(asset.shots)} shots, asked for {n}")
    parts = [asset.instruction] if asset.instruction else []
    parts.extend(asset.shots[:n])
    parts.append(_render_problem(strategy, stage, p, ctx))
    user = SHOT_DELIMITER.join(parts)
    return [Message(Role.SYSTEM, asset.system_prompt), Message(Role.USER, user)]


def build_selector_prompt(p: Problem) -> list:
    """Zero-shot selection prompt enumerating the four approach labels."""
    base = PROMPTS_DIR / "selector"
    system = _read(base / "system.txt")
    template = _read(base / "template.txt")
    return [Message(Role.SYSTEM, system),
            Message(Role.USER, template.format(statement=p.statement))]
