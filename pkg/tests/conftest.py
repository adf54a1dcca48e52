from __future__ import annotations

from pathlib import Path

import pytest

from rtlseek.verilog import parse_source

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(*parts: str) -> str:
    return FIXTURES.joinpath(*parts).read_text(encoding="utf-8")


def fixture_tree(*parts: str):
    return parse_source(fixture_text(*parts))


def corpus_files() -> list[Path]:
    return sorted(FIXTURES.rglob("*.v"))


def equiv_pairs(kind: str) -> list[tuple[str, Path, Path]]:
    folder = FIXTURES / "equiv" / kind
    out = []
    for a in sorted(folder.glob("*_a.v")):
        stem = a.name[: -len("_a.v")]
        out.append((stem, a, folder / f"{stem}_b.v"))
    return out


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
