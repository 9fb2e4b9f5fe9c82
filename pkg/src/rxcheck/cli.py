"""rxcheck command line: check sources, fuzz soundness, or dump traces.

Exit codes: 0 means accepted (or a clean fuzz run), 1 means diagnostics were
emitted (or an unsound witness was found), 2 means the tool itself could not
run (usage, I/O, or a bad stub file).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .checker import check_program
from .diagnostics import Diagnostic, render_json, render_text, sort_diagnostics
from .frontend import parse_program, parse_stub_file, resolve_annotations
from .oracle import (
    OracleUnsupported,
    enumerate_resolutions,
    lower,
    run,
    run_soundness_fuzz,
)
from .stubs import StubConflict, StubEnv, builtin_env, empty_env, merge

NO_BUILTIN_ENV_VAR = "RXCHECK_NO_BUILTIN_STUBS"


@dataclass
class Config:
    mode: str = "check"  # check | soundness | dump-trace
    sources: list[str] = field(default_factory=list)
    stub_paths: list[str] = field(default_factory=list)
    output_format: str = "text"  # text | json
    depth: int = 3
    treat_any_subscribe_as_error: bool = True


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rxcheck",
        description="Refinement typechecker for UI-thread safety of stream pipelines.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--stubs",
            action="append",
            default=[],
            metavar="PATH",
            help="additional stub file; may repeat, shadows built-ins",
        )
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument(
            "--no-any-subscribe-error",
            dest="treat_any",
            action="store_false",
            help="accept UI callbacks on @AnyThread streams (unsound; for demos)",
        )

    p_check = sub.add_parser("check", help="typecheck MiniRx sources")
    p_check.add_argument("sources", nargs="+", metavar="FILE.mrx")
    common(p_check)

    p_sound = sub.add_parser("soundness", help="fuzz the checker against the oracle")
    p_sound.add_argument("--depth", type=int, default=3, metavar="N")
    common(p_sound)

    p_dump = sub.add_parser("dump-trace", help="print oracle traces for each pipeline")
    p_dump.add_argument("sources", nargs="+", metavar="FILE.mrx")
    common(p_dump)

    return parser


def _load_stubs(paths: list[str], stderr) -> StubEnv | None:
    """Built-ins first (unless disabled), then user stubs shadowing them."""
    env = empty_env() if os.environ.get(NO_BUILTIN_ENV_VAR) == "1" else builtin_env()
    for path in paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            print(f"rxcheck: cannot read stub file {path}: {e}", file=stderr)
            return None
        result = parse_stub_file(text, path)
        if result.diagnostics:
            for d in result.diagnostics:
                print(d.text_line(), file=stderr)
            return None
        try:
            env = merge(env, result.sigs)
        except StubConflict as e:
            print(e.diagnostic.text_line(), file=stderr)
            return None
    return env


def _read_sources(paths: list[str], stderr) -> list[tuple[str, str]] | None:
    sources = []
    for path in paths:
        try:
            sources.append((path, Path(path).read_text(encoding="utf-8")))
        except OSError as e:
            print(f"rxcheck: cannot read {path}: {e}", file=stderr)
            return None
    return sources


def _emit(diags: list[Diagnostic], fmt: str, stdout) -> None:
    if not diags:
        return
    text = render_json(diags) if fmt == "json" else render_text(diags)
    stdout.write(text)


def run_check(cfg: Config, stdout=sys.stdout, stderr=sys.stderr) -> int:
    env = _load_stubs(cfg.stub_paths, stderr)
    if env is None:
        return 2
    sources = _read_sources(cfg.sources, stderr)
    if sources is None:
        return 2
    parsed = parse_program(sources)
    if parsed.program is None:
        _emit(parsed.diagnostics, cfg.output_format, stdout)
        return 1
    rp = resolve_annotations(parsed.program, env)
    diags = check_program(rp, env, cfg.treat_any_subscribe_as_error)
    _emit(diags, cfg.output_format, stdout)
    return 1 if diags else 0


def run_soundness(cfg: Config, stdout=sys.stdout, stderr=sys.stderr) -> int:
    if cfg.depth < 0:
        print("rxcheck: --depth must be >= 0", file=stderr)
        return 2
    env = _load_stubs(cfg.stub_paths, stderr)
    if env is None:
        return 2
    report = run_soundness_fuzz(cfg.depth, env)
    for witness in report.witnesses:
        stdout.write(witness.describe() + "\n")
    stdout.write(
        f"programs: {report.programs}  accepted: {report.accepted}  "
        f"rejected: {report.rejected}  unsound: {report.unsound}  "
        f"false-positive-rate: {report.false_positive_rate:.3f}\n"
    )
    return 0 if report.unsound == 0 else 1


def run_dump_trace(cfg: Config, stdout=sys.stdout, stderr=sys.stderr) -> int:
    env = _load_stubs(cfg.stub_paths, stderr)
    if env is None:
        return 2
    sources = _read_sources(cfg.sources, stderr)
    if sources is None:
        return 2
    parsed = parse_program(sources)
    if parsed.program is None:
        _emit(parsed.diagnostics, cfg.output_format, stdout)
        return 1
    rp = resolve_annotations(parsed.program, env)
    try:
        irs = lower(rp, env)
    except OracleUnsupported as e:
        print(f"rxcheck: {e.span.file}:{e.span.line}: {e.message}", file=stderr)
        return 2
    for k, ir in enumerate(irs):
        stdout.write(f"pipeline {k}: {ir.describe()}\n")
        for res in enumerate_resolutions(ir):
            stdout.write(f"resolution {res.describe()}\n")
            trace = run(ir, res)
            violated = {i for i, _ in trace.violations}
            for i, thread in trace.stage_threads:
                marker = " [VIOLATION]" if i in violated else ""
                stdout.write(
                    f"stage {i} {ir.stages[i].label()} thread={thread}{marker}\n"
                )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; normalize other exits too.
        return int(e.code) if e.code else 0
    cfg = Config(
        mode=args.mode,
        sources=list(getattr(args, "sources", [])),
        stub_paths=list(args.stubs),
        output_format=args.format,
        depth=getattr(args, "depth", 3),
        treat_any_subscribe_as_error=args.treat_any,
    )
    if cfg.mode == "check":
        return run_check(cfg)
    if cfg.mode == "soundness":
        return run_soundness(cfg)
    return run_dump_trace(cfg)


if __name__ == "__main__":
    sys.exit(main())
