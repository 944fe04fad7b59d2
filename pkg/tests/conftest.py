"""Shared fixtures: systems from the corpus, a clean settings cache and J^1 spaces."""

from pathlib import Path

import pytest

from config.settings import get_settings
from logic.contact import J1Space
from pipeline import loader

ROOT = Path(__file__).resolve().parent.parent
SYSTEMS = ROOT / "systems"


def system_path(name: str) -> str:
    return str(SYSTEMS / name)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are cached per process; every test starts from the defaults."""
    for name in ("CHARKIT_SEED", "CHARKIT_LOG_LEVEL", "CHARKIT_H", "CHARKIT_STEPS"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def load():
    """Load a system from the corpus by file name."""
    return lambda name: loader.load_system(system_path(name))


@pytest.fixture
def monge_strip(load):
    return load("monge_strip.pde")


@pytest.fixture
def plane_space():
    return J1Space(["x1", "x2"])

