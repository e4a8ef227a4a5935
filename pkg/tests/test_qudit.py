from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubblechain.errors import InvalidBasisState, InvalidSitePair, InvalidState, ShapeError, TooLarge
from bubblechain.qudit import (
    BasisState,
    MixedRadixRegister,
    StateVector,
    apply_local,
    apply_two_site,
    check_dimension,
    decode,
    embed_local,
    embed_two_site,
    encode,
    populations,
)


def kron_all(ops):
    out = np.eye(1)
    for op in ops:
        out = np.kron(out, op)
    return out


def random_unitary(d, rng):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


dims_strategy = st.lists(st.integers(min_value=2, max_value=5), min_size=1, max_size=4)


def test_site_zero_is_most_significant():
    reg = MixedRadixRegister.uniform(8, 3)
    assert encode((4, 1, 3), reg) == 4 * 64 + 1 * 8 + 3
    assert decode(267, reg) == BasisState((4, 1, 3))
    assert reg.strides == (64, 8, 1)


@given(dims_strategy, st.data())
def test_encode_decode_roundtrip(dims, data):
    reg = MixedRadixRegister(tuple(dims))
    k = data.draw(st.integers(min_value=0, max_value=reg.dimension - 1))
    assert encode(decode(k, reg), reg) == k


def test_labels_and_parsing():
    s = BasisState.from_label("643")
    assert s.digits == (6, 4, 3)
    assert str(s) == "|643>"
    wide = BasisState((10, 2))
    assert wide.label == "10.2"
    assert BasisState.from_label("10.2") == wide


@pytest.mark.parametrize("digits", [(8, 0, 0), (0, 0), (-1, 0, 0)])
def test_encode_rejects_bad_digits(digits):
    with pytest.raises(InvalidBasisState):
        encode(digits, MixedRadixRegister.uniform(8, 3))


def test_decode_out_of_range():
    with pytest.raises(InvalidBasisState):
        decode(512, MixedRadixRegister.uniform(8, 3))


@pytest.mark.parametrize("dims", [(), (1, 4), (0,)])
def test_register_validation(dims):
    with pytest.raises(ShapeError):
        MixedRadixRegister(dims)


def test_mixed_radix_apply_local_matches_kron(rng):
    dims = (4, 8, 3)
    reg = MixedRadixRegister(dims)
    psi = rng.normal(size=reg.dimension) + 1j * rng.normal(size=reg.dimension)
    state = StateVector(psi / np.linalg.norm(psi), reg)
    for site, d in enumerate(dims):
        U = random_unitary(d, rng)
        full = kron_all([U if s == site else np.eye(dd) for s, dd in enumerate(dims)])
        np.testing.assert_allclose(apply_local(state, site, U).amplitudes, full @ state.amplitudes, atol=1e-12)


def test_two_site_matches_kron_for_adjacent_and_distant_sites(rng):
    dims = (3, 4, 2)
    reg = MixedRadixRegister(dims)
    psi = rng.normal(size=reg.dimension) + 0j
    state = StateVector(psi, reg)
    A, B = random_unitary(3, rng), random_unitary(2, rng)
    # product operator on sites 0 and 2, checked against explicit Kronecker form
    out = apply_two_site(state, 0, 2, np.kron(A, B))
    full = kron_all([A, np.eye(4), B])
    np.testing.assert_allclose(out.amplitudes, full @ psi, atol=1e-12)
    # reversed site order uses the (digit_a, digit_b) row convention
    out_rev = apply_two_site(state, 2, 0, np.kron(B, A))
    np.testing.assert_allclose(out_rev.amplitudes, full @ psi, atol=1e-12)
    G = random_unitary(12, rng)
    np.testing.assert_allclose(apply_two_site(state, 0, 1, G).amplitudes, np.kron(G, np.eye(2)) @ psi, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_unitary_application_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    reg = MixedRadixRegister((4, 8, 8))
    psi = rng.normal(size=reg.dimension) + 1j * rng.normal(size=reg.dimension)
    state = StateVector(psi / np.linalg.norm(psi), reg)
    out = apply_two_site(apply_local(state, 0, random_unitary(4, rng)), 1, 2, random_unitary(64, rng))
    assert abs(out.norm() - 1) < 1e-12


def test_two_site_errors(rng):
    reg = MixedRadixRegister.uniform(2, 3)
    state = StateVector.basis(reg, "000")
    with pytest.raises(InvalidSitePair):
        apply_two_site(state, 1, 1, np.eye(4))
    with pytest.raises(InvalidSitePair):
        apply_two_site(state, 0, 3, np.eye(4))
    with pytest.raises(ShapeError):
        apply_two_site(state, 0, 1, np.eye(8))
    with pytest.raises(ShapeError):
        apply_local(state, 0, np.eye(3))


def test_embedding_helpers():
    X = np.array([[0, 1], [1, 0]])
    E = embed_local(X, (2, 2), 1)
    np.testing.assert_array_equal(E, np.kron(np.eye(2), X))
    CZ = np.diag([1, 1, 1, -1])
    np.testing.assert_array_equal(embed_two_site(CZ, (2, 2, 2), 1, 2), np.kron(np.eye(2), CZ))


def test_superposition_and_populations():
    reg = MixedRadixRegister.uniform(8, 3)
    psi = StateVector.superposition(reg, {"643": 1.0, "436": 1.0})
    pops = populations(psi)
    assert set(p.label for p in pops) == {"643", "436"}
    assert all(abs(v - 0.5) < 1e-15 for v in pops.values())
    with pytest.raises(InvalidState):
        StateVector.superposition(reg, {"643": 0.0})


def test_dimension_guard(monkeypatch):
    check_dimension(512)
    monkeypatch.setenv("BUBBLECHAIN_MAX_DIM", "100")
    with pytest.raises(TooLarge):
        check_dimension(512)
