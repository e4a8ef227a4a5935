"""Six-state hopping model for the first excited manifold of the HALF sector.

At small x the fundamental string only fluctuates within the configurations
displaced on two perpendicular links. Projecting the plaquette term onto
them gives a nearest-neighbour hopping problem with amplitude ``-x/sqrt(2)``
that can be solved in closed form.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IdentificationError, MappingUnavailable
from .evolution import ExactPropagator
from .model import (
    ModelParams,
    Sector,
    build_plaquette_op,
    first_excited_manifold,
)
from .qudit import BasisState, StateVector, apply_local_array, encode

N_STATES = 6
MAPPING_VERSION = 1

ADJACENCY = np.array(
    [
        [0, 1, 0, 0, 0, 0],
        [1, 0, 1, 1, 0, 0],
        [0, 1, 0, 0, 1, 0],
        [0, 1, 0, 0, 1, 0],
        [0, 0, 1, 1, 0, 1],
        [0, 0, 0, 0, 1, 0],
    ],
    dtype=float,
)


def hopping_amplitude(x: float) -> float:
    return -x / np.sqrt(2.0)


def oscillation_frequency(x: float) -> float:
    return np.sqrt(2.5) * x


def build_heff(x: float) -> np.ndarray:
    return hopping_amplitude(x) * ADJACENCY


def effective_plus() -> np.ndarray:
    v = np.zeros(N_STATES)
    v[2] = v[3] = 1 / np.sqrt(2.0)
    return v


def effective_minus() -> np.ndarray:
    v = np.zeros(N_STATES)
    v[2], v[3] = 1 / np.sqrt(2.0), -1 / np.sqrt(2.0)
    return v


def analytic_populations_plus(t, x: float) -> np.ndarray:
    """Closed-form populations of states 0..5 starting from (|2> + |3>)/sqrt(2).

    Accepts scalar or array ``t``; the last axis indexes the six states.
    """
    c = np.cos(oscillation_frequency(x) * np.asarray(t, dtype=float))
    outer = 2 / 25 * (c - 1) ** 2
    hop = 2 / 5 * (1 - c**2)
    inner = (1 + 4 * c) ** 2 / 50
    return np.stack([outer, hop, inner, inner, hop, outer], axis=-1)


def numeric_populations_plus(t, x: float) -> np.ndarray:
    """Same observable from direct diagonalization of the 6x6 matrix."""
    w, V = np.linalg.eigh(build_heff(x))
    coeff = V.T @ effective_plus()
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    amps = V @ (coeff[:, None] * np.exp(-1j * np.outer(w, ts)))
    pops = (np.abs(amps) ** 2).T
    return pops[0] if np.ndim(t) == 0 else pops


@dataclass(frozen=True)
class EigenCheck:
    residual: float
    eigenvalue: float


def minus_state_check(x: float) -> EigenCheck:
    """Residual of (|2> - |3>)/sqrt(2) as an eigenvector, with its Rayleigh quotient."""
    H = build_heff(x)
    v = effective_minus()
    lam = float(v @ H @ v)
    return EigenCheck(float(np.linalg.norm(H @ v - lam * v)), lam)


def plus_state_residual(x: float) -> float:
    H = build_heff(x)
    v = effective_plus()
    lam = float(v @ H @ v)
    return float(np.linalg.norm(H @ v - lam * v))


# ---------------------------------------------------------------------------
# effective-to-full identification


@dataclass(frozen=True)
class ManifoldMapping:
    """Effective index k corresponds to ``signs[k] * |labels[k]>`` in the full basis."""

    version: int
    n_plaquettes: int
    labels: tuple[str, ...]
    signs: tuple[int, ...]

    def full_state(self, vec: np.ndarray, params: ModelParams) -> StateVector:
        reg = params.register
        amps = np.zeros(reg.dimension, dtype=np.complex128)
        for k, (lab, s) in enumerate(zip(self.labels, self.signs)):
            amps[encode(BasisState.from_label(lab), reg)] = s * vec[k]
        return StateVector(amps, reg)

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "n_plaquettes": self.n_plaquettes,
            "labels": list(self.labels),
            "signs": list(self.signs),
        }


def projected_plaquette_block(params: ModelParams, states: Sequence[BasisState]) -> np.ndarray:
    """Matrix elements of ``-sum_n U_n`` (unit x) between the given configurations."""
    reg = params.register
    U = build_plaquette_op(params.sector)
    idx = [encode(s, reg) for s in states]
    cols = np.zeros((reg.dimension, len(idx)))
    cols[idx, np.arange(len(idx))] = 1.0
    acc = np.zeros_like(cols)
    for site in range(reg.n_sites):
        acc -= apply_local_array(cols, reg.dims, site, U)
    return acc[idx, :]


def _sign_gauge(block: np.ndarray, target: np.ndarray, root: int) -> tuple[int, ...] | None:
    n = len(target)
    signs = [0] * n
    signs[root] = 1
    stack = [root]
    while stack:
        i = stack.pop()
        for j in range(n):
            if abs(target[i, j]) < 1e-12:
                continue
            want = int(np.sign(target[i, j] / block[i, j])) * signs[i]
            if signs[j] == 0:
                signs[j] = want
                stack.append(j)
            elif signs[j] != want:
                return None
    if 0 in signs:
        return None
    return tuple(signs)


def derive_manifold_mapping(params: ModelParams | None = None) -> ManifoldMapping:
    """Match the projected plaquette block to the hopping matrix up to relabeling and signs.

    All 720 orderings of the manifold are tried; the first valid ordering in
    lexicographic order of sorted labels is kept, with signs fixed so that
    effective state 2 carries a positive sign.
    """
    if params is None:
        params = ModelParams(x=1.0, g_par2=1.0, g_perp2=1.0, n_plaquettes=3, sector=Sector.HALF)
    if params.sector is not Sector.HALF:
        raise MappingUnavailable("the hopping model describes sector HALF only")
    states = first_excited_manifold(params)
    if len(states) != N_STATES:
        raise MappingUnavailable(
            f"first excited manifold has {len(states)} states for {params.n_plaquettes} plaquettes; six are required"
        )
    block = projected_plaquette_block(params, states)
    target = build_heff(1.0)
    for perm in itertools.permutations(range(N_STATES)):
        B = block[np.ix_(perm, perm)]
        if not np.allclose(np.abs(B), np.abs(target), atol=1e-12):
            continue
        signs = _sign_gauge(B, target, root=2)
        if signs is None:
            continue
        if not np.allclose(np.outer(signs, signs) * B, target, atol=1e-12):
            continue
        return ManifoldMapping(
            version=MAPPING_VERSION,
            n_plaquettes=params.n_plaquettes,
            labels=tuple(states[p].label for p in perm),
            signs=signs,
        )
    raise IdentificationError("no relabeling of the first excited manifold reproduces the hopping matrix")


def compare_to_full(params: ModelParams, t_grid: Sequence[float]) -> float:
    """Largest deviation between exact full-model and closed-form manifold populations."""
    full, analytic = compare_series(params, t_grid)
    return float(np.max(np.abs(full - analytic))) if len(t_grid) else 0.0


def compare_series(params: ModelParams, t_grid: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Full-model populations on the six mapped states and the closed-form prediction."""
    if params.sector is not Sector.HALF or params.n_plaquettes != 3:
        raise MappingUnavailable("manifold mapping is only resolved for sector HALF with 3 plaquettes")
    mapping = derive_manifold_mapping(params)
    psi0 = mapping.full_state(effective_plus(), params)
    amps = ExactPropagator(params).amplitudes(psi0.amplitudes, t_grid)
    reg = params.register
    idx = [encode(BasisState.from_label(lab), reg) for lab in mapping.labels]
    full = (np.abs(amps[idx, :]) ** 2).T
    return full, analytic_populations_plus(np.asarray(t_grid, dtype=float), params.x).reshape(full.shape)
