"""Isolated execution of extracted program text.

The real backend writes the program to prog.src in a fresh temp dir and
invokes the external runner process, which prints one JSON object on stdout
per the wire protocol:

    {"status": "<ok|syntax_error|runtime_error|missing_entry|serialization_error>",
     "value": "<string or null>", "error": "<string or null>"}

Exit code 0 for all handled statuses; nonzero exit or malformed stdout maps
to sandbox_failure, an orchestrator-side timeout to timeout. The mock
backend serves scripted outcomes so the rest of the suite runs without the
runner binary.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import ExecStatus, ExecutionOutcome

DEFAULT_TIMEOUT_MS = 10_000
TIMEOUT_GRACE_MS = 500

_STATUS_MAP = {
    "ok": ExecStatus.OK,
    "syntax_error": ExecStatus.SYNTAX_ERROR,
    "runtime_error": ExecStatus.RUNTIME_ERROR,
    "missing_entry": ExecStatus.MISSING_ENTRY,
    "serialization_error": ExecStatus.SERIALIZATION_ERROR,
}


@dataclass(frozen=True)
class ExecLimits:
    wall_timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_output_bytes: int = 64_000

    def __post_init__(self):
        if self.wall_timeout_ms <= 0:
            raise ValueError("wall_timeout_ms must be positive")
        if self.max_output_bytes <= 0:
            raise ValueError("max_output_bytes must be positive")


class Executor:
    """Interface: execute(code, limits) -> ExecutionOutcome. Never raises."""

    def execute(self, code: str, limits: ExecLimits) -> ExecutionOutcome:
        raise NotImplementedError


def default_runner_command() -> list:
    """Locate the companion runner package next to this repo, if present."""
    here = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    script = os.path.join(here, "runner", "src", "solution_runner", "run.py")
    if os.path.exists(script):
        return [sys.executable, script]
    exe = shutil.which("solution-runner")
    if exe:
        return [exe]
    raise FileNotFoundError("no solution runner found; configure runner_command explicitly")


class SubprocessExecutor(Executor):
    """Runs the external runner in an ephemeral working directory."""

    def __init__(self, runner_command: Optional[Sequence[str]] = None):
        self.runner_command = list(runner_command) if runner_command else default_runner_command()

    def execute(self, code: str, limits: ExecLimits) -> ExecutionOutcome:
        start = time.monotonic()
        workdir = tempfile.mkdtemp(prefix="mathstrat-exec-")
        try:
            src = os.path.join(workdir, "prog.src")
            with open(src, "w", encoding="utf-8") as f:
                f.write(code)
            try:
                proc = subprocess.run(
                    self.runner_command + [src],
                    cwd=workdir,
                    capture_output=True,
                    text=True,
                    timeout=limits.wall_timeout_ms / 1000.0,
                )
            except subprocess.TimeoutExpired:
                return ExecutionOutcome(
                    status=ExecStatus.TIMEOUT,
                    stderr_excerpt="wall timeout exceeded",
                    wall_time_ms=self._elapsed_ms(start, limits),
                )
            except OSError as e:
                return ExecutionOutcome(
                    status=ExecStatus.SANDBOX_FAILURE,
                    stderr_excerpt=str(e)[: limits.max_output_bytes],
                    wall_time_ms=self._elapsed_ms(start, limits),
                )
            wall_ms = self._elapsed_ms(start, limits)
            stderr = (proc.stderr or "")[: limits.max_output_bytes]
            if proc.returncode != 0:
                return ExecutionOutcome(
                    status=ExecStatus.SANDBOX_FAILURE,
                    stderr_excerpt=stderr or f"runner exited {proc.returncode}",
                    wall_time_ms=wall_ms,
                )
            try:
                report = json.loads((proc.stdout or "").strip().splitlines()[-1])
                status = _STATUS_MAP[report["status"]]
            except (json.JSONDecodeError, KeyError, IndexError):
                return ExecutionOutcome(
                    status=ExecStatus.SANDBOX_FAILURE,
                    stderr_excerpt=("malformed runner output: " + (proc.stdout or ""))[
                        : limits.max_output_bytes],
                    wall_time_ms=wall_ms,
                )
            if status is ExecStatus.OK:
                return ExecutionOutcome(
                    status=ExecStatus.OK,
                    value_text=report.get("value") or "",
                    wall_time_ms=wall_ms,
                )
            error = report.get("error") or status.value
            return ExecutionOutcome(
                status=status,
                stderr_excerpt=error[: limits.max_output_bytes],
                wall_time_ms=wall_ms,
            )
        finally:
            shutil.rmtree(workdir, ignore_errors=True)

    @staticmethod
    def _elapsed_ms(start: float, limits: ExecLimits) -> int:
        ms = int((time.monotonic() - start) * 1000)
        return min(ms, limits.wall_timeout_ms + TIMEOUT_GRACE_MS)


class MockExecutor(Executor):
    """Scripted outcomes, served in call order or keyed by exact code text."""

    def __init__(self, script: Optional[Sequence[ExecutionOutcome]] = None,
                 by_code: Optional[dict] = None):
        self._script = list(script or [])
        self._by_code = dict(by_code or {})
        self.calls: list[str] = []

    def execute(self, code: str, limits: ExecLimits) -> ExecutionOutcome:
        self.calls.append(code)
        if code in self._by_code:
            return self._by_code[code]
        if self._script:
            return self._script.pop(0)
        return ExecutionOutcome(status=ExecStatus.SANDBOX_FAILURE,
                                stderr_excerpt="mock executor script exhausted")
