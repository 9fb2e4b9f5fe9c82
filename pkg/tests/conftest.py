from pathlib import Path

import pytest

from rxcheck import builtin_env, parse_program, resolve_annotations

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


@pytest.fixture(scope="session")
def env():
    return builtin_env()


def corpus_path(name: str) -> Path:
    return CORPUS / name


def load(name: str):
    """Parse a corpus file, asserting it is syntactically clean."""
    path = corpus_path(name)
    result = parse_program([(str(path), path.read_text(encoding="utf-8"))])
    assert result.program is not None, result.diagnostics
    return result.program


def load_resolved(name: str, env):
    return resolve_annotations(load(name), env)
