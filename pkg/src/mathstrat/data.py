"""Loading, filtering, and sampling of benchmark problem files."""

from __future__ import annotations

import json
import os
import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .core import Dataset, Problem, validate_problem


class DataFormat(str, Enum):
    GSM8K_JSONL = "gsm8k_jsonl"
    MATH_DIR = "math_dir"
    AIME_JSONL = "aime_jsonl"
    CUSTOM_JSONL = "custom_jsonl"


class MalformedRecord(ValueError):
    pass


class SampleTooLarge(ValueError):
    pass


_LEVEL_RE = re.compile(r"^Level\s+(\d+)$")


@dataclass(frozen=True)
class ProblemSet:
    problems: tuple  # tuple of Problem
    provenance: str

    def __len__(self):
        return len(self.problems)

    def __iter__(self):
        return iter(self.problems)

    def to_dict(self) -> dict:
        return {"problems": [p.to_dict() for p in self.problems],
                "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSet":
        return cls(problems=tuple(Problem.from_dict(p) for p in d["problems"]),
                   provenance=d["provenance"])


def _parse_level(raw) -> Optional[int]:
    if raw is None:
        return None
    if isinstance(raw, int):
        return raw if 1 <= raw <= 5 else None
    m = _LEVEL_RE.match(str(raw).strip())
    if not m:
        return None
    level = int(m.group(1))
    return level if 1 <= level <= 5 else None


def _jsonl_records(path: str):
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecord(f"{path}:{lineno}: invalid JSON ({e})")


def load(path: str, fmt: DataFormat) -> ProblemSet:
    """Load a ProblemSet from disk in file order."""
    problems: list[Problem] = []
    seen: set[str] = set()

    def add(p: Problem):
        validate_problem(p, seen)
        seen.add(p.id)
        problems.append(p)

    if fmt is DataFormat.MATH_DIR:
        files = sorted(
            os.path.join(root, name)
            for root, _dirs, names in os.walk(path)
            for name in names if name.endswith(".json")
        )
        for fp in files:
            with open(fp, "r", encoding="utf-8") as f:
                try:
                    rec = json.load(f)
                except json.JSONDecodeError as e:
                    raise MalformedRecord(f"{fp}: invalid JSON ({e})")
            try:
                add(Problem(
                    id=os.path.relpath(fp, path),
                    statement=rec["problem"],
                    reference_answer=rec["solution"],
                    dataset=Dataset.MATH,
                    subject=rec.get("type"),
                    level=_parse_level(rec.get("level")),
                ))
            except KeyError as e:
                raise MalformedRecord(f"{fp}: missing field {e}")
    else:
        dataset, q_field, a_field = {
            DataFormat.GSM8K_JSONL: (Dataset.GSM8K, "question", "answer"),
            DataFormat.AIME_JSONL: (Dataset.AIME, "problem", "answer"),
            DataFormat.CUSTOM_JSONL: (Dataset.CUSTOM, "problem", "answer"),
        }[fmt]
        for lineno, rec in _jsonl_records(path):
            try:
                add(Problem(
                    id=rec.get("id", f"{dataset.value}-{lineno}"),
                    statement=rec[q_field],
                    reference_answer=str(rec[a_field]),
                    dataset=dataset,
                    subject=rec.get("subject") or rec.get("type"),
                    level=_parse_level(rec.get("level")),
                ))
            except KeyError as e:
                raise MalformedRecord(f"{path}:{lineno}: missing field {e}")

    return ProblemSet(problems=tuple(problems),
                      provenance=f"{path} [{fmt.value}]")


def filter_level(s: ProblemSet, level: int) -> ProblemSet:
    """Keep problems whose level is exactly `level`; no level means excluded."""
    kept = tuple(p for p in s.problems if p.level == level)
    return ProblemSet(problems=kept,
                      provenance=f"{s.provenance} | level={level}")


def sample(s: ProblemSet, n: int, seed: int) -> ProblemSet:
    """Seeded uniform sample without replacement, stable by original order."""
    if n > len(s.problems):
        raise SampleTooLarge(f"asked for {n} of {len(s.problems)} problems")
    indices = sorted(random.Random(seed).sample(range(len(s.problems)), n))
    kept = tuple(s.problems[i] for i in indices)
    return ProblemSet(problems=kept,
                      provenance=f"{s.provenance} | sample(n={n}, seed={seed})")
