from __future__ import annotations

import numpy as np
import pytest

from bubblechain.effective import (
    MAPPING_VERSION,
    analytic_populations_plus,
    build_heff,
    compare_to_full,
    derive_manifold_mapping,
    minus_state_check,
    numeric_populations_plus,
    oscillation_frequency,
    plus_state_residual,
)
from bubblechain.errors import MappingUnavailable
from bubblechain.model import ModelParams


def test_heff_entries():
    x = 0.7
    H = build_heff(x)
    assert H[0, 1] == pytest.approx(-x / np.sqrt(2))
    assert H[1, 3] == pytest.approx(-x / np.sqrt(2))
    assert H[0, 5] == 0
    np.testing.assert_array_equal(H, H.T)
    assert not np.any(np.diag(H))


def test_heff_spectrum_contains_frequency():
    x = 1.3
    w = np.linalg.eigvalsh(build_heff(x))
    omega = np.sqrt(5 / 2) * x
    assert np.min(np.abs(w - omega)) < 1e-12
    assert np.min(np.abs(w + omega)) < 1e-12


def test_analytic_initial_and_half_period():
    np.testing.assert_allclose(analytic_populations_plus(0.0, 0.4), [0, 0, 0.5, 0.5, 0, 0], atol=1e-15)
    x = 0.4
    t = np.pi / oscillation_frequency(x)
    P = analytic_populations_plus(t, x)
    np.testing.assert_allclose(P, [8 / 25, 0, 9 / 50, 9 / 50, 0, 8 / 25], atol=1e-15)


def test_analytic_symmetry_and_period():
    x = 0.9
    ts = np.linspace(0, 20, 401)
    P = analytic_populations_plus(ts, x)
    np.testing.assert_allclose(P[:, 0], P[:, 5])
    np.testing.assert_allclose(P[:, 1], P[:, 4])
    np.testing.assert_allclose(P[:, 2], P[:, 3])
    period = 2 * np.pi / oscillation_frequency(x)
    np.testing.assert_allclose(analytic_populations_plus(ts + period, x), P, atol=1e-10)


def test_minus_state_records_eigenvalue():
    check = minus_state_check(0.8)
    assert check.residual < 1e-14
    assert check.eigenvalue == 0.0
    assert minus_state_check(0.0).residual == 0.0
    assert plus_state_residual(0.8) > 0.1 * 0.8


def test_mapping_is_derived_and_versioned():
    m = derive_manifold_mapping()
    assert m.version == MAPPING_VERSION
    assert m.labels == ("011", "001", "000", "101", "100", "110")
    # effective states 2 and 3 are the superposed pair with equal sign
    assert m.signs[2] == m.signs[3] == 1


def test_compare_requires_resolved_mapping():
    with pytest.raises(MappingUnavailable):
        compare_to_full(ModelParams(x=0.1, g_par2=1.5, g_perp2=1.0, sector="ONE"), [0.0])
    with pytest.raises(MappingUnavailable):
        compare_to_full(ModelParams(x=0.1, g_par2=1.5, g_perp2=1.0, n_plaquettes=4, sector="HALF"), [0.0])


def test_compare_at_zero_time():
    p = ModelParams(x=0.3, g_par2=1.5, g_perp2=1.0, sector="HALF")
    assert compare_to_full(p, [0.0]) < 1e-14


def test_visible_deviation_at_moderate_coupling():
    p = ModelParams(x=0.3, g_par2=1.5, g_perp2=1.0, sector="HALF")
    dev = compare_to_full(p, np.linspace(0, 1 / p.x, 101))
    assert dev > 0.02
    assert dev == pytest.approx(0.1004, abs=2e-3)


def test_numeric_and_closed_form_agree_scalar():
    np.testing.assert_allclose(numeric_populations_plus(1.7, 0.6), analytic_populations_plus(1.7, 0.6), atol=1e-12)
