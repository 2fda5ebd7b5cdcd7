"""Command-line entry point: run, report, check-equiv."""

from __future__ import annotations

import json
import os
import sys

import click

from .core import Strategy
from .data import DataFormat, SampleTooLarge, filter_level, load, sample
from .equiv import equivalent
from .gateway import (Gateway, GatewayError, MockGateway, RemoteGateway,
                      ReplayGateway, ReplayMiss)
from .harness import (MalformedTrace, RunSettings, execute_run,
                      report_from_traces, write_report_files)
from .metrics import RunReport
from .promptkit import ASSETS_DIR
from .sandbox import (ExecLimits, Executor, MockExecutor, SubprocessExecutor,
                      default_runner_command)
from .strategies import StrategyConfig

BUNDLED_CORPUS = ASSETS_DIR / "equiv_corpus.tsv"


class MalformedCorpusLine(ValueError):
    pass


@click.group()
def main():
    """Math-reasoning evaluation harness."""


def _make_gateway(backend: str, replay_store: str, strict_replay: bool,
                  mock_script: str) -> Gateway:
    if backend == "mock":
        if not mock_script:
            raise click.UsageError("--backend mock requires --mock-script")
        with open(mock_script, "r", encoding="utf-8") as f:
            script = json.load(f)
        return MockGateway(script)
    if backend == "replay":
        if not replay_store:
            raise click.UsageError("--backend replay requires --replay-store")
        if strict_replay and not os.path.exists(replay_store):
            raise click.UsageError(f"strict replay store not found: {replay_store}")
        inner = None
        if not strict_replay:
            inner = RemoteGateway()
        return ReplayGateway(replay_store, strict=strict_replay, inner=inner)
    return RemoteGateway()


def _make_executor(sandbox_backend: str, runner_cmd: str) -> Executor:
    if sandbox_backend == "mock":
        return MockExecutor()
    cmd = runner_cmd.split() if runner_cmd else default_runner_command()
    return SubprocessExecutor(cmd)


@main.command("run")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice([f.value for f in DataFormat]),
              default=DataFormat.CUSTOM_JSONL.value)
@click.option("--level", type=int, default=None, help="Keep only this difficulty level.")
@click.option("--sample-n", type=int, default=None)
@click.option("--sample-seed", type=int, default=0)
@click.option("--strategies", "strategies_opt", default="cot,pal,codenl,nlcode",
              help="Comma-separated subset of cot,pal,codenl,nlcode.")
@click.option("--router/--no-router", default=False)
@click.option("--vote/--no-vote", default=False)
@click.option("--vote-seed", type=int, default=0)
@click.option("--backend", type=click.Choice(["remote", "replay", "mock"]), default="mock")
@click.option("--mock-script", type=click.Path(), default=None,
              help="JSON list of scripted completions for the mock backend.")
@click.option("--replay-store", type=click.Path(), default=None)
@click.option("--record-on-miss", is_flag=True, default=False,
              help="On replay miss, call the remote backend and record.")
@click.option("--model", "model_id", default="default")
@click.option("--timeout-ms", type=int, default=10000)
@click.option("--sandbox", "sandbox_backend", type=click.Choice(["subprocess", "mock"]),
              default="subprocess")
@click.option("--runner-cmd", default=None, help="Override the runner command line.")
@click.option("--concurrency", type=int, default=4)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_run(dataset_path, fmt, level, sample_n, sample_seed, strategies_opt,
            router, vote, vote_seed, backend, mock_script, replay_store,
            record_on_miss, model_id, timeout_ms, sandbox_backend, runner_cmd,
            concurrency, out_dir):
    """Execute strategies over a dataset; write traces and reports."""
    try:
        strategies = tuple(Strategy(s.strip()) for s in strategies_opt.split(",") if s.strip())
        if not strategies:
            raise click.UsageError("--strategies must name at least one strategy")
        if concurrency < 1:
            raise click.UsageError("--concurrency must be >= 1")
        problems = load(dataset_path, DataFormat(fmt))
        if level is not None:
            problems = filter_level(problems, level)
        if sample_n is not None:
            problems = sample(problems, sample_n, sample_seed)
        gateway = _make_gateway(backend, replay_store, not record_on_miss, mock_script)
        executor = _make_executor(sandbox_backend, runner_cmd)
        if backend == "mock":
            concurrency = 1  # scripted call order must stay sequential
        settings = RunSettings(
            strategies=strategies,
            router=router,
            vote=vote,
            vote_seed=vote_seed,
            concurrency=concurrency,
            strategy_config=StrategyConfig(model_id=model_id,
                                           limits=ExecLimits(wall_timeout_ms=timeout_ms)),
        )
    except (click.UsageError, ValueError, SampleTooLarge) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)

    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "traces.jsonl")
    runner_env = "mock" if sandbox_backend == "mock" else " ".join(
        runner_cmd.split() if runner_cmd else default_runner_command())
    try:
        execute_run(problems, gateway, executor, settings, trace_path,
                    runner_env_hash=runner_env)
    except ReplayMiss as e:
        click.echo(f"replay miss: {e} (cache_key={e.cache_key})", err=True)
        sys.exit(1)
    except GatewayError as e:
        click.echo(f"gateway failure: {e}", err=True)
        sys.exit(1)
    report = report_from_traces(trace_path)
    write_report_files(report,
                       os.path.join(out_dir, "report.json"),
                       os.path.join(out_dir, "report.txt"))
    click.echo(f"wrote {trace_path}")


@main.command("report")
@click.option("--traces", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_report(trace_path, out_dir):
    """Recompute the report purely from a trace file."""
    try:
        report = report_from_traces(trace_path)
    except MalformedTrace as e:
        click.echo(f"malformed trace: {e}", err=True)
        sys.exit(1)
    os.makedirs(out_dir, exist_ok=True)
    write_report_files(report,
                       os.path.join(out_dir, "report.json"),
                       os.path.join(out_dir, "report.txt"))
    click.echo(f"wrote {os.path.join(out_dir, 'report.json')}")


def check_corpus(path: str) -> tuple:
    """Evaluate an equivalence corpus; returns (total, failures list)."""
    total = 0
    failures = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("0", "1"):
                raise MalformedCorpusLine(f"{path}:{lineno}: expected 'a<TAB>b<TAB>0|1'")
            a, b, expected = parts[0], parts[1], parts[2] == "1"
            total += 1
            if equivalent(a, b) != expected:
                failures.append((lineno, a, b, expected))
    return total, failures


@main.command("check-equiv")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True),
              default=str(BUNDLED_CORPUS), show_default="bundled corpus")
def cmd_check_equiv(corpus_path):
    """Run the answer-equivalence conformance corpus."""
    try:
        total, failures = check_corpus(corpus_path)
    except MalformedCorpusLine as e:
        click.echo(f"malformed corpus: {e}", err=True)
        sys.exit(1)
    if total == 0:
        click.echo("warning: empty corpus (0 checks)")
        return
    for lineno, a, b, expected in failures:
        click.echo(f"FAIL line {lineno}: {a!r} vs {b!r} expected "
                   f"{'equivalent' if expected else 'inequivalent'}")
    click.echo(f"{total - len(failures)}/{total} passed")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
