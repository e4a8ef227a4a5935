from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubblechain.compiler import (
    MS_XX,
    MS_ZZ,
    GateSequence,
    compile_trotter_circuit,
    decompose_pair_term,
    entangling_count_vs_time,
    lower_pair_term,
    ms_generator,
    ms_unitary,
    physical_distance,
    qubit_embedding_estimate,
    reduce_angle,
    restore_partner,
    trotter_step_unitary,
)
from bubblechain.errors import InvalidArgument, LoweringError, Unsupported
from bubblechain.evolution import TrotterPlan, evolve_trotter
from bubblechain.model import ModelParams, build_pair_electric, gauss_pair_set
from bubblechain.textio import load_matrices


def fragment_unitary(gates, dims):
    seq = GateSequence(tuple(dims), list(gates))
    return seq.unitary()


def test_xx_generator_pattern():
    G = ms_generator(MS_XX, 8, 8, ((1, 3), (1, 4)))
    nz = {(int(a), int(b)) for a, b in zip(*np.nonzero(G))}
    idx = lambda s: int(s[0]) * 8 + int(s[1])  # noqa: E731
    expected = {(idx("11"), idx("34")), (idx("14"), idx("31")), (idx("31"), idx("14")), (idx("34"), idx("11"))}
    assert nz == expected


def test_zz_generator_pattern():
    G = ms_generator(MS_ZZ, 4, 4, ((0, 1), (2, 3)))
    d = np.diag(G)
    assert d[0 * 4 + 2] == d[1 * 4 + 3] == 1
    assert d[0 * 4 + 3] == d[1 * 4 + 2] == -1
    assert np.count_nonzero(d) == 4


def test_toy_qubit_flip_needs_one_gate():
    term = np.zeros((4, 4))
    term[0, 3] = term[3, 0] = 1.0
    allowed = {(0, 0), (1, 1)}
    gates = lower_pair_term(term, allowed, 0.3, dims=(2, 2))
    assert sum(g.is_entangling for g in gates) == 1
    U = fragment_unitary(gates, (2, 2))
    target = np.eye(4, dtype=complex)
    c, s = math.cos(0.3), math.sin(0.3)
    target[np.ix_([0, 3], [0, 3])] = [[c, -1j * s], [-1j * s, c]]
    assert physical_distance(U, target, np.array([0, 3])) < 1e-12


def test_single_flip_without_partner(breaking_params):
    term = np.zeros((64, 64))
    p, q = 4 * 8 + 3, 6 * 8 + 6
    term[p, q] = term[q, p] = 0.4
    gates = lower_pair_term(term, gauss_pair_set("ONE"), 0.5)
    ent = [g for g in gates if g.is_entangling]
    assert len(ent) == 1 and ent[0].kind == MS_XX and ent[0].elided_partner


def test_flip_keeps_partner_when_odd_pairs_are_physical():
    term = np.zeros((4, 4))
    term[0, 3] = term[3, 0] = 1.0
    allowed = {(0, 0), (1, 1), (0, 1), (1, 0)}
    gates = lower_pair_term(term, allowed, 0.3, dims=(2, 2))
    assert sum(g.is_entangling for g in gates) == 2
    U = fragment_unitary(gates, (2, 2))
    target = np.eye(4, dtype=complex)
    c, s = math.cos(0.3), math.sin(0.3)
    target[np.ix_([0, 3], [0, 3])] = [[c, -1j * s], [-1j * s, c]]
    assert physical_distance(U, target, np.arange(4)) < 1e-12


def test_zero_time_gives_empty_fragment(breaking_params):
    P, _ = build_pair_electric("ONE", breaking_params, True)
    assert lower_pair_term(P, gauss_pair_set("ONE"), 0.0) == []


def test_lowering_errors():
    single_site = np.zeros((4, 4))
    single_site[0, 1] = single_site[1, 0] = 1.0
    with pytest.raises(LoweringError):
        lower_pair_term(single_site, {(0, 0), (0, 1)}, 0.1, dims=(2, 2))
    non_herm = np.zeros((4, 4))
    non_herm[0, 3] = 1.0
    with pytest.raises(LoweringError):
        lower_pair_term(non_herm, {(0, 0), (1, 1)}, 0.1, dims=(2, 2))
    clash = np.diag([0.0, 0, 0, 1.0])
    clash[0, 3] = clash[3, 0] = 1.0
    with pytest.raises(LoweringError):
        lower_pair_term(clash, {(0, 0), (1, 1)}, 0.1, dims=(2, 2))


def test_pair_decomposition_modes(breaking_params):
    P, _ = build_pair_electric("ONE", breaking_params, True)
    pairs = gauss_pair_set("ONE")
    counts = {m: len(decompose_pair_term(P, (8, 8), pairs, m).zz) for m in ("blockwise", "dont_care", "full")}
    assert (counts["blockwise"], counts["dont_care"]) == (10, 4)
    # the greedy fit over all 64 pairs is coupling dependent, but never cheaper than the restricted fits
    assert counts["full"] >= counts["blockwise"]
    assert len(decompose_pair_term(P, (8, 8), pairs).flips) == 4


def test_decomposition_is_exact_on_fit_pairs(breaking_params):
    P, _ = build_pair_electric("ONE", breaking_params, True)
    dec = decompose_pair_term(P, (8, 8), gauss_pair_set("ONE"))
    recon = dec.diagonal_on(dec.fit_pairs)
    for (a, b), v in recon.items():
        assert v == pytest.approx(P[a * 8 + b, a * 8 + b], abs=1e-12)


def test_reduce_angle_examples():
    assert reduce_angle(4 * math.pi) == (0.0, 0)
    eff, n = reduce_angle(3 * math.pi, math.pi / 2)
    assert eff == pytest.approx(-math.pi) and n == 2
    assert reduce_angle(2 * math.pi) == (pytest.approx(2 * math.pi), 4)
    assert reduce_angle(0.1) == (0.1, 1)
    with pytest.raises(InvalidArgument):
        reduce_angle(1.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-40, max_value=40, allow_nan=False))
def test_reduce_angle_preserves_gate(theta):
    eff, n = reduce_angle(theta)
    assert -2 * math.pi < eff <= 2 * math.pi + 1e-12
    for kind in (MS_XX, MS_ZZ):
        U = ms_unitary(kind, 4, 4, ((0, 1), (2, 3)), theta)
        V = ms_unitary(kind, 4, 4, ((0, 1), (2, 3)), eff)
        assert np.max(np.abs(U - V)) < 1e-9


def test_compiled_sector_half_matches_trotter(fluct_params):
    for t, count in ((1.0, 24), (1.0 / fluct_params.x, 32)):
        plan = TrotterPlan(t, 2)
        seq = compile_trotter_circuit(fluct_params, plan)
        assert physical_distance(seq.unitary(), trotter_step_unitary(fluct_params, plan), np.arange(64)) < 1e-8
        # six ZZ per bond and step; at the longer time some angles are split to respect the cap
        assert seq.breakdown() == {"pair-diagonal": count}


def test_zero_plaquette_coupling_structure(breaking_params):
    p = breaking_params.with_(x=0.0)
    seq = compile_trotter_circuit(p, TrotterPlan(1.0, 1))
    for g in seq.gates:
        if g.is_entangling:
            assert "bond" in g.provenance
        if g.category in ("plaquette", "local-electric"):
            assert g.kind == "LOCAL"


def test_compiled_program_matches_trotter_populations(breaking_params, breaking_states):
    psi = breaking_states.plus(breaking_params.register)
    for t in (0.6, 2.0):
        seq = compile_trotter_circuit(breaking_params, TrotterPlan(t, 2))
        out = seq.apply(psi.amplitudes)
        ref = evolve_trotter(breaking_params, psi, TrotterPlan(t, 2), times=[t])
        assert np.max(np.abs(np.abs(out) ** 2 - ref.populations[0])) < 1e-8


def test_elision_changes_only_unphysical_columns(breaking_params, breaking_subspace):
    seq = compile_trotter_circuit(breaking_params, TrotterPlan(2.0, 2))
    idx = breaking_subspace.indices()
    cols = np.eye(512, dtype=complex)[:, idx]
    base = seq.apply(cols)
    k = seq.elided_indices()[0]
    restored = restore_partner(seq, k)
    assert restored.entangling_count == seq.entangling_count + 1
    assert np.max(np.abs(restored.apply(cols) - base)) < 1e-10
    # the partner does act on unphysical states
    assert np.max(np.abs(restored.unitary() - seq.unitary())) > 1e-3
    with pytest.raises(InvalidArgument):
        restore_partner(seq, 0)


def test_counting_is_deterministic(breaking_params):
    a = compile_trotter_circuit(breaking_params, TrotterPlan(2.0, 2))
    b = compile_trotter_circuit(breaking_params, TrotterPlan(2.0, 2))
    assert a.to_text() == b.to_text()
    assert a.breakdown() == b.breakdown()


def test_text_serialization(breaking_params):
    seq = compile_trotter_circuit(breaking_params, TrotterPlan(2.0, 2))
    body, mats = seq.to_text()
    lines = body.splitlines()
    assert len(lines) == len(seq)
    assert lines[0].startswith("LOCAL site=0 matrix=m")
    ms = [ln for ln in lines if ln.startswith("MS ")]
    assert len(ms) == seq.entangling_count
    assert ms[0].split()[1] in ("kind=XX", "kind=ZZ")
    table = load_matrices(mats)
    ids = {ln.split("matrix=")[1] for ln in lines if ln.startswith("LOCAL")}
    assert ids == set(table)


def test_count_doubles_with_steps_before_reduction(breaking_params):
    one = entangling_count_vs_time(breaking_params, [2.0], n_steps=2, reduce=False)[0][1]
    two = entangling_count_vs_time(breaking_params, [2.0], n_steps=4, reduce=False)[0][1]
    assert two == 2 * one


def test_count_at_zero_time(breaking_params):
    assert entangling_count_vs_time(breaking_params, [0.0]) == [(0.0, 0)]


def test_qubit_estimate_geometry_guard():
    with pytest.raises(Unsupported):
        qubit_embedding_estimate(2, params=ModelParams(x=1.0, g_par2=1.0, g_perp2=1.0, n_plaquettes=4))
    with pytest.raises(Unsupported):
        qubit_embedding_estimate(2, params=ModelParams(x=1.0, g_par2=1.0, g_perp2=1.0, sector="HALF"))
