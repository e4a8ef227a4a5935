"""Exact and second-order Trotter time evolution plus population observables."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConfigError, EmptyPostSelection, GridError, InvalidPlan, InvalidState
from .model import ModelParams, PhysicalSubspace, assemble_hamiltonian, build_terms
from .qudit import (
    BasisState,
    MixedRadixRegister,
    StateVector,
    apply_local_array,
    apply_two_site_array,
    check_dimension,
)

NORM_TOL = 1e-10
BOND_ORDER = "left-to-right"


@dataclass(frozen=True)
class TrotterPlan:
    """``n_steps`` symmetric second-order steps of length ``t_total / n_steps``."""

    t_total: float
    n_steps: int = 2

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidPlan(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.t_total / self.n_steps

    def as_dict(self) -> dict:
        return {"t_total": self.t_total, "n_steps": self.n_steps, "bond_order": BOND_ORDER}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class TimeSeries:
    """Population vectors on a time grid.

    ``populations[k, i]`` is the probability of basis state ``labels[i]`` at
    ``times[k]``. Final amplitudes are kept in ``amplitudes`` when available.
    """

    times: np.ndarray
    labels: list[str]
    populations: np.ndarray
    metadata: dict = field(default_factory=dict)
    amplitudes: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.populations.shape != (len(self.times), len(self.labels)):
            raise GridError(
                f"populations shape {self.populations.shape} does not match "
                f"{len(self.times)} times x {len(self.labels)} labels"
            )

    @property
    def observables(self) -> dict[str, np.ndarray]:
        return {lab: self.populations[:, i] for i, lab in enumerate(self.labels)}

    def column(self, label: str | BasisState) -> np.ndarray:
        if isinstance(label, BasisState):
            label = label.label
        try:
            return self.populations[:, self.labels.index(label)]
        except ValueError:
            raise ConfigError(f"unknown state label {label!r}") from None

    def active_labels(self, tol: float = 1e-12) -> list[str]:
        keep = np.max(self.populations, axis=0) > tol
        return [lab for lab, k in zip(self.labels, keep) if k]

    def restrict(self, labels: Sequence[str]) -> TimeSeries:
        cols = [self.labels.index(lab) for lab in labels]
        return TimeSeries(self.times, list(labels), self.populations[:, cols], dict(self.metadata))

    def to_csv(self, labels: Sequence[str] | None = None, tol: float = 1e-12) -> str:
        """CSV with header ``t,<label>,...``; by default only columns that ever exceed ``tol``."""
        series = self.restrict(self.active_labels(tol) if labels is None else labels)
        return table_to_csv(series.times, series.observables)

    def write(self, path: str | Path, labels: Sequence[str] | None = None) -> tuple[Path, Path]:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(labels))
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return path, side


def table_to_csv(times: Sequence[float], columns: Mapping[str, Sequence[float]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(["t", *columns]) + "\n")
    cols = [np.asarray(v, dtype=float) for v in columns.values()]
    for k, t in enumerate(times):
        buf.write(",".join([_fmt(t), *(_fmt(c[k]) for c in cols)]) + "\n")
    return buf.getvalue()


def _check_initial(params: ModelParams, psi0: StateVector) -> np.ndarray:
    if psi0.register != params.register:
        raise InvalidState(f"state register {psi0.register.dims} does not match model {params.register.dims}")
    if not psi0.is_normalized(NORM_TOL):
        raise InvalidState(f"initial state has norm {psi0.norm():.12g}")
    return psi0.amplitudes


def _series(params, amps_cols: np.ndarray, times, method: str, extra: dict | None = None) -> TimeSeries:
    reg = params.register
    meta = {"method": method, "params": params.as_dict(), "bond_order": BOND_ORDER}
    if extra:
        meta.update(extra)
    return TimeSeries(
        times=np.asarray(times, dtype=float),
        labels=reg.labels(),
        populations=(np.abs(amps_cols) ** 2).T,
        metadata=meta,
        amplitudes=amps_cols.T.copy(),
    )


class ExactPropagator:
    """Diagonalizes H once and evolves any number of states and times."""

    def __init__(self, params: ModelParams):
        check_dimension(params.register.dimension)
        self.params = params
        self.hamiltonian = assemble_hamiltonian(params)
        self.energies, self.vectors = np.linalg.eigh(self.hamiltonian)

    def amplitudes(self, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
        """Columns are ``exp(-iHt) psi0`` for each time."""
        coeff = self.vectors.T @ psi0
        phases = np.exp(-1j * np.outer(self.energies, np.asarray(times, dtype=float)))
        return self.vectors @ (coeff[:, None] * phases)

    def energy(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.hamiltonian @ psi)))


def evolve_exact(params: ModelParams, psi0: StateVector, times: Sequence[float]) -> TimeSeries:
    amps = _check_initial(params, psi0)
    prop = ExactPropagator(params)
    return _series(params, prop.amplitudes(amps, times), times, "exact")


class TrotterStepper:
    """Factorized unitaries of one symmetric step for a given ``dt``.

    The step applies, in order: plaquette terms for dt/2 on every site, local
    electric terms for dt/2, bond terms for dt on bonds 0..N-2, local electric
    for dt/2, plaquette for dt/2.
    """

    def __init__(self, params: ModelParams, dt: float):
        self.params = params
        self.dims = params.register.dims
        terms = build_terms(params)
        self.plaquette = [expm_hermitian(-terms.x * U, dt / 2) for U in terms.plaquette_ops]
        self.local_phase = [np.exp(-0.5j * dt * e) for e in terms.electric_local]
        self.pair = [expm_hermitian(P, dt) for P in terms.electric_pair]

    def apply(self, arr: np.ndarray) -> np.ndarray:
        n = len(self.dims)
        for s in range(n):
            arr = apply_local_array(arr, self.dims, s, self.plaquette[s])
        for s in range(n):
            arr = apply_local_array(arr, self.dims, s, np.diag(self.local_phase[s]))
        for b in range(n - 1):
            arr = apply_two_site_array(arr, self.dims, b, b + 1, self.pair[b])
        for s in range(n):
            arr = apply_local_array(arr, self.dims, s, np.diag(self.local_phase[s]))
        for s in range(n):
            arr = apply_local_array(arr, self.dims, s, self.plaquette[s])
        return arr

    def unitary(self) -> np.ndarray:
        D = int(np.prod(self.dims))
        return self.apply(np.eye(D, dtype=np.complex128))


def expm_hermitian(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) for Hermitian H."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def trotter_amplitudes(params: ModelParams, psi0: np.ndarray, t: float, n_steps: int) -> np.ndarray:
    stepper = TrotterStepper(params, t / n_steps)
    psi = psi0.astype(np.complex128)
    for _ in range(n_steps):
        psi = stepper.apply(psi)
    return psi


def evolve_trotter(
    params: ModelParams,
    psi0: StateVector,
    plan: TrotterPlan,
    times: Sequence[float] | None = None,
) -> TimeSeries:
    """Trotterized evolution.

    Without ``times`` the state is recorded after every step of ``plan``
    (times ``0, dt, ..., t_total``). With ``times`` each grid point is an
    independent run of ``plan.n_steps`` steps of length ``t / n_steps``,
    the protocol used when a fixed-depth circuit is executed per time point.
    """
    if not isinstance(plan, TrotterPlan):
        raise InvalidPlan("plan must be a TrotterPlan")
    amps = _check_initial(params, psi0)
    check_dimension(params.register.dimension)
    if times is None:
        stepper = TrotterStepper(params, plan.dt)
        cols = [amps.astype(np.complex128)]
        for _ in range(plan.n_steps):
            cols.append(stepper.apply(cols[-1]))
        grid = [k * plan.dt for k in range(plan.n_steps + 1)]
        mode = "per-step"
    else:
        grid = list(times)
        cols = [trotter_amplitudes(params, amps, t, plan.n_steps) for t in grid]
        mode = "fixed-step-count"
    extra = {"plan": plan.as_dict(), "protocol": mode}
    return _series(params, np.stack(cols, axis=1), grid, "trotter", extra)


def state_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


# ---------------------------------------------------------------------------
# observables


def broken_string_population(series: TimeSeries, B: BasisState | str) -> np.ndarray:
    return series.column(B).copy()


def time_integrated_population(scan: Sequence[TimeSeries], target: BasisState | str) -> np.ndarray:
    """Trapezoid-rule integral of ``P_target`` per series, normalized to sum to one."""
    if not scan:
        raise GridError("empty scan")
    grid = scan[0].times
    for s in scan[1:]:
        if s.times.shape != grid.shape or not np.array_equal(s.times, grid):
            raise GridError("all series in a scan must share the same time grid")
    if len(grid) == 1:
        raw = np.array([s.column(target)[0] for s in scan])
    else:
        raw = np.array([trapezoid(s.column(target), grid) for s in scan])
    total = raw.sum()
    if total <= 0:
        return np.zeros_like(raw)
    return raw / total


def aggregate_symmetric(series: TimeSeries, pairs: Sequence[Sequence[str]]) -> TimeSeries:
    """Replace each group of columns by one summed column named ``a+b``."""
    if not pairs:
        return series
    labels = list(series.labels)
    pops = {lab: series.populations[:, i] for i, lab in enumerate(labels)}
    merged_into: dict[str, str] = {}
    for group in pairs:
        group = [g.label if isinstance(g, BasisState) else str(g) for g in group]
        for g in group:
            if g not in pops:
                raise ConfigError(f"unknown state label {g!r} in aggregation pair")
            if g in merged_into:
                raise ConfigError(f"state {g!r} appears in more than one aggregation group")
        name = "+".join(group)
        for g in group:
            merged_into[g] = name
        pops[name] = sum(pops[g] for g in group)
    out_labels, seen = [], set()
    for lab in labels:
        name = merged_into.get(lab, lab)
        if name not in seen:
            seen.add(name)
            out_labels.append(name)
    data = np.stack([pops[lab] for lab in out_labels], axis=1)
    meta = dict(series.metadata)
    meta["aggregated"] = [list(p) for p in pairs]
    return TimeSeries(series.times, out_labels, data, meta)


# ---------------------------------------------------------------------------
# sampling and post-selection


def sample_measurements(
    state: StateVector | np.ndarray,
    shots: int,
    seed: int,
    register: MixedRadixRegister | None = None,
) -> dict[str, int]:
    """Multinomial projective-measurement counts keyed by basis label."""
    if shots < 1:
        raise InvalidState("shots must be >= 1")
    if isinstance(state, StateVector):
        probs, register = state.probabilities(), state.register
    else:
        probs = np.asarray(state, dtype=float)
        if register is None:
            raise InvalidState("a register is needed when sampling from a probability vector")
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    return {register.decode(int(k)).label: int(draws[k]) for k in np.flatnonzero(draws)}


def _split_counts(counts: Mapping[str, int], subspace: PhysicalSubspace):
    phys = {lab: n for lab, n in counts.items() if BasisState.from_label(lab) in subspace.global_set}
    total = sum(counts.values())
    return phys, total


def physicality_fraction(counts: Mapping[str, int], subspace: PhysicalSubspace) -> float:
    phys, total = _split_counts(counts, subspace)
    kept = sum(phys.values())
    if kept == 0:
        raise EmptyPostSelection("no shots landed in the physical subspace")
    return kept / total


def post_select(counts: Mapping[str, int], subspace: PhysicalSubspace) -> dict[str, float]:
    """Renormalized distribution over physical outcomes."""
    phys, _ = _split_counts(counts, subspace)
    kept = sum(phys.values())
    if kept == 0:
        raise EmptyPostSelection("no shots landed in the physical subspace")
    return {lab: n / kept for lab, n in sorted(phys.items())}


def run_metadata(params: ModelParams, plan: TrotterPlan | None = None, seed: int | None = None, **extra) -> dict:
    meta = {"params": params.as_dict(), "bond_order": BOND_ORDER}
    if plan is not None:
        meta["plan"] = plan.as_dict()
    if seed is not None:
        meta["seed"] = seed
    meta.update(extra)
    return meta


__all__ = [
    "TrotterPlan",
    "TimeSeries",
    "ExactPropagator",
    "TrotterStepper",
    "evolve_exact",
    "evolve_trotter",
    "trotter_amplitudes",
    "state_error",
    "broken_string_population",
    "time_integrated_population",
    "aggregate_symmetric",
    "sample_measurements",
    "physicality_fraction",
    "post_select",
    "table_to_csv",
    "run_metadata",
]
