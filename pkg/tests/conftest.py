"""Shared fixtures: fixture paths, a warm mock-LSP bridge, no-network guard."""

from __future__ import annotations

import socket
import sys
from pathlib import Path

import pytest

from proverkit.config import Config, ProjectConfig
from proverkit.leanbridge.bridge import LeanBridge

FIXTURES = Path(__file__).parent / "fixtures"
BENCHMARKS = Path(__file__).parent.parent / "benchmarks" / "putnam2025"

MOCK_COMMAND = [sys.executable, "-m", "proverkit.leanbridge.mockserver"]


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    """The suite is hermetic: any socket connection attempt fails loudly."""

    def blocked(self, *args, **kwargs):
        raise AssertionError("test attempted a network connection")

    monkeypatch.setattr(socket.socket, "connect", blocked)


@pytest.fixture
def leanproj() -> Path:
    return FIXTURES / "leanproj"


@pytest.fixture
def statusproj() -> Path:
    return FIXTURES / "statusproj"


def make_mock_bridge(project_root: Path, **overrides) -> LeanBridge:
    settings = dict(
        server_command=MOCK_COMMAND,
        settle_quiet=0.05,
        settle_max=5.0,
        run_code_timeout=5.0,
        attempt_timeout=5.0,
    )
    settings.update(overrides)
    return LeanBridge(project_root, **settings)


@pytest.fixture(scope="session")
def warm_bridge():
    """One mock-LSP session shared by read-only bridge tests."""
    bridge = make_mock_bridge(FIXTURES / "leanproj")
    yield bridge
    bridge.close()


@pytest.fixture
def mock_config(leanproj) -> Config:
    return Config(
        project=ProjectConfig(root=leanproj.resolve(), settle_quiet=0.05,
                              settle_max=10.0),
        use_mock_server=True,
    )


@pytest.fixture
def blueprint_text() -> str:
    return (FIXTURES / "blueprints" / "band.tex").read_text(encoding="utf-8")
