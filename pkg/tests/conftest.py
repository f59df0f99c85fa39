"""Pytest configuration and fixtures."""

from pathlib import Path
from typing import Callable, Iterator

import pytest

from roundsos.config.settings import Settings, get_settings
from roundsos.engine.options import EngineOptions
from roundsos.program.parser import parse_program
from roundsos.program.spec import ProgramSpec
from roundsos.rounding.format import FpFormat

BENCH_DIR = Path(__file__).resolve().parents[1] / "bench"


@pytest.fixture(scope="session")
def bench_dir() -> Path:
    """Directory holding the shipped benchmark programs."""
    return BENCH_DIR


@pytest.fixture(scope="session")
def load_bench() -> Callable[[str], ProgramSpec]:
    """Parse a shipped benchmark by file stem."""

    def load(name: str) -> ProgramSpec:
        return parse_program((BENCH_DIR / f"{name}.prog").read_text())

    return load


@pytest.fixture
def double() -> FpFormat:
    return FpFormat(53)


@pytest.fixture
def single() -> FpFormat:
    return FpFormat(24)


@pytest.fixture
def options() -> EngineOptions:
    """Default engine options in double precision."""
    return EngineOptions()


@pytest.fixture
def fresh_settings(monkeypatch: pytest.MonkeyPatch) -> Iterator[Callable[..., Settings]]:
    """Build settings from ROUNDSOS_ environment overrides, restoring the cache afterwards."""

    def build(**env: str) -> Settings:
        for key, value in env.items():
            monkeypatch.setenv(f"ROUNDSOS_{key.upper()}", value)
        get_settings.cache_clear()
        return get_settings()

    yield build
    get_settings.cache_clear()


@pytest.fixture
def product_spec() -> ProgramSpec:
    """``x * y`` over ``[1, 2] x [1, 2]``."""
    return parse_program(
        """
        let box_product x y = [(1, 2); (1, 2)];;
        let obj_product x y = [(x * y, 0)];;
        """
    )


@pytest.fixture
def constant_spec() -> ProgramSpec:
    """A program with no rounding at all."""
    return parse_program(
        """
        let box_const x = [(0, 1)];;
        let obj_const x = [(2, 0)];;
        """
    )


@pytest.fixture
def write_program(tmp_path: Path) -> Callable[[str, str], Path]:
    """Write program text to ``tmp_path`` and return the file."""

    def write(name: str, text: str) -> Path:
        path = tmp_path / f"{name}.prog"
        path.write_text(text)
        return path

    return write
