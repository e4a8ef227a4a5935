from __future__ import annotations

import contextlib

import numpy as np
import pytest

from bubblechain.model import ModelParams, Sector, identify_string_states, physical_subspace

ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Record a PASS/FAIL line for an acceptance criterion, re-raising failures."""
    notes: list[str] = []
    try:
        yield notes
    except BaseException as exc:
        ACCEPTANCE_RESULTS.append((number, title, False, f"{type(exc).__name__}: {exc}".splitlines()[0]))
        raise
    ACCEPTANCE_RESULTS.append((number, title, True, "; ".join(notes)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def breaking_params() -> ModelParams:
    """Adjoint-flux string breaking at x=1, g_perp2=0.8, g_par2=2.0."""
    return ModelParams(x=1.0, g_par2=2.0, g_perp2=0.8, n_plaquettes=3, sector=Sector.ONE)


@pytest.fixture(scope="session")
def fluct_params() -> ModelParams:
    """Fundamental-flux fluctuations at x=0.3, g_perp2=1, g_par2=1.5."""
    return ModelParams(x=0.3, g_par2=1.5, g_perp2=1.0, n_plaquettes=3, sector=Sector.HALF)


@pytest.fixture(scope="session")
def breaking_states(breaking_params):
    return identify_string_states(breaking_params)


@pytest.fixture(scope="session")
def fluct_states(fluct_params):
    return identify_string_states(fluct_params)


@pytest.fixture(scope="session")
def breaking_subspace(breaking_params, breaking_states):
    return physical_subspace(breaking_params, [breaking_states.straight])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
