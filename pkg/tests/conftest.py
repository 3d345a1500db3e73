"""Shared fixtures: bundled corpus sources and parsed/lowered programs."""

from importlib import resources

import pytest

from streamify.checker import check
from streamify.lower import lower
from streamify.syntax import parse


def corpus_files() -> list[tuple[str, str]]:
    root = resources.files("streamify").joinpath("corpus")
    return sorted((e.name, e.read_text()) for e in root.iterdir()
                  if e.name.endswith(".minij"))


@pytest.fixture(scope="session")
def corpus_sources() -> list[tuple[str, str]]:
    return corpus_files()


@pytest.fixture(scope="session")
def corpus_programs(corpus_sources):
    """name -> (ast, lowered program) for every bundled file."""
    out = {}
    for name, src in corpus_sources:
        ast = parse(src)
        check(ast)
        out[name] = (ast, lower(ast))
    return out
