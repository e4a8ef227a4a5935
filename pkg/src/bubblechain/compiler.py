"""Lowering of Trotter steps to local qudit gates and two-subspace MS gates.

An MS gate acting on level pair ``(i, j)`` of site A and ``(k, l)`` of site B
is ``exp(-i theta/2 G)`` with ``G = X_ij (x) X_kl`` or ``G = Z_ij (x) Z_kl``,
where ``X_ij = |i><j| + |j><i|`` and ``Z_ij = |i><i| - |j><j|``. Since the
eigenvalues of ``G`` are 0 and +-1, the gate is 4*pi periodic in theta.

Pair terms are split into a diagonal part, written as local phases plus a
sum of ZZ generators, and flip terms ``c (|ik><jl| + h.c.)``. A flip equals
``(XX - YY)/2``; when the odd transitions ``il`` and ``jk`` are not
gauge-allowed neighbour pairs, a single XX gate acts as the flip on every
physical state and the YY partner is dropped.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, LoweringError, Unsupported
from .evolution import TrotterPlan, TrotterStepper, expm_hermitian
from .model import ModelParams, PhysicalSubspace, Sector, build_terms, gauss_pair_set
from .qudit import apply_local_array, apply_two_site_array, check_dimension
from .textio import dump_matrix

LOCAL = "LOCAL"
MS_XX = "MS_XX"
MS_ZZ = "MS_ZZ"
ENTANGLING = (MS_XX, MS_ZZ)

DEFAULT_MAX_ANGLE = math.pi / 2
DIAGONAL_MODES = ("blockwise", "dont_care", "full")
ANGLE_EPS = 1e-13
FIT_TOL = 1e-10


@dataclass(frozen=True)
class NativeGate:
    kind: str
    sites: tuple[int, ...]
    subspaces: tuple[tuple[int, int], tuple[int, int]] | None = None
    angle: float = 0.0
    matrix: np.ndarray | None = field(default=None, compare=False)
    provenance: str = ""
    category: str = ""
    elided_partner: bool = False

    @property
    def is_entangling(self) -> bool:
        return self.kind in ENTANGLING

    def operator(self, dims: Sequence[int]) -> np.ndarray:
        """Matrix on the gate's own sites (row index ``digit_a * d_b + digit_b`` for MS)."""
        if self.kind == LOCAL:
            return self.matrix
        da, db = dims[self.sites[0]], dims[self.sites[1]]
        w, V = _generator_eig(self.kind, da, db, self.subspaces)
        return (V * np.exp(-0.5j * self.angle * w)) @ V.conj().T

    def to_line(self, matrix_id: str | None = None) -> str:
        if self.kind == LOCAL:
            return f"LOCAL site={self.sites[0]} matrix={matrix_id}"
        (i, j), (k, l) = self.subspaces
        a, b = self.sites
        kind = "XX" if self.kind == MS_XX else "ZZ"
        return f"MS kind={kind} a={a}:{i},{j} b={b}:{k},{l} angle={float(self.angle)!r}"


def level_x(d: int, i: int, j: int) -> np.ndarray:
    X = np.zeros((d, d))
    X[i, j] = X[j, i] = 1.0
    return X


def level_z(d: int, i: int, j: int) -> np.ndarray:
    Z = np.zeros((d, d))
    Z[i, i], Z[j, j] = 1.0, -1.0
    return Z


def ms_generator(kind: str, da: int, db: int, subspaces) -> np.ndarray:
    (i, j), (k, l) = subspaces
    if kind == MS_XX:
        return np.kron(level_x(da, i, j), level_x(db, k, l))
    if kind == MS_ZZ:
        return np.kron(level_z(da, i, j), level_z(db, k, l))
    raise InvalidArgument(f"{kind} is not an entangling gate kind")


@lru_cache(maxsize=512)
def _generator_eig(kind: str, da: int, db: int, subspaces) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(ms_generator(kind, da, db, subspaces))


def ms_unitary(kind: str, da: int, db: int, subspaces, theta: float) -> np.ndarray:
    w, V = _generator_eig(kind, da, db, subspaces)
    return (V * np.exp(-0.5j * theta * w)) @ V.conj().T


def reduce_angle(theta: float, max_angle: float = DEFAULT_MAX_ANGLE) -> tuple[float, int]:
    """Smallest-magnitude equivalent angle in (-2pi, 2pi] and the number of gates needed."""
    if max_angle <= 0:
        raise InvalidArgument("max_angle must be positive")
    period = 4 * math.pi
    eff = theta - period * round(theta / period)
    if eff <= -2 * math.pi:
        eff += period
    if abs(eff) <= ANGLE_EPS:
        return 0.0, 0
    n = math.ceil(abs(eff) / max_angle - 1e-12)
    return eff, max(n, 1)


# ---------------------------------------------------------------------------
# gate sequences


@dataclass
class GateSequence:
    dims: tuple[int, ...]
    gates: list[NativeGate] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def extend(self, other: Iterable[NativeGate]) -> None:
        self.gates.extend(other)

    @property
    def entangling_count(self) -> int:
        return sum(g.is_entangling for g in self.gates)

    def breakdown(self) -> dict[str, int]:
        counts = Counter(g.category for g in self.gates if g.is_entangling)
        return dict(sorted(counts.items()))

    def elided_indices(self) -> list[int]:
        return [n for n, g in enumerate(self.gates) if g.elided_partner]

    def apply(self, arr: np.ndarray) -> np.ndarray:
        for g in self.gates:
            op = g.operator(self.dims)
            if g.kind == LOCAL:
                arr = apply_local_array(arr, self.dims, g.sites[0], op)
            else:
                arr = apply_two_site_array(arr, self.dims, g.sites[0], g.sites[1], op)
        return arr

    def unitary(self) -> np.ndarray:
        D = int(np.prod(self.dims))
        check_dimension(D)
        return self.apply(np.eye(D, dtype=np.complex128))

    def matrix_table(self) -> tuple[list[str], dict[str, np.ndarray]]:
        """Per-gate matrix ids (``None`` for MS gates) and the deduplicated table."""
        ids, table, seen = [], {}, {}
        for g in self.gates:
            if g.kind != LOCAL:
                ids.append(None)
                continue
            key = np.round(g.matrix, 15).tobytes() + bytes(str(g.matrix.shape), "ascii")
            if key not in seen:
                seen[key] = f"m{len(seen)}"
                table[seen[key]] = g.matrix
            ids.append(seen[key])
        return ids, table

    def to_text(self) -> tuple[str, str]:
        """Gate listing and the accompanying matrix table dump."""
        ids, table = self.matrix_table()
        lines = [g.to_line(mid) for g, mid in zip(self.gates, ids)]
        body = "\n".join(lines) + ("\n" if lines else "")
        mats = "".join(dump_matrix(m, name) for name, m in table.items())
        return body, mats


def _local(site: int, matrix: np.ndarray, provenance: str, category: str) -> NativeGate:
    return NativeGate(LOCAL, (site,), matrix=np.asarray(matrix, dtype=np.complex128),
                      provenance=provenance, category=category)


def _ms(kind, sites, subspaces, theta, max_angle, provenance, category, elided=False) -> list[NativeGate]:
    eff, n = reduce_angle(theta, max_angle)
    return [
        NativeGate(kind, tuple(sites), tuple(map(tuple, subspaces)), eff / n,
                   provenance=provenance, category=category, elided_partner=elided)
        for _ in range(n)
    ]


# ---------------------------------------------------------------------------
# pair-term lowering


@dataclass(frozen=True)
class Flip:
    """``coeff * (|ik><jl| + h.c.)`` between neighbour pairs ``(i,k)`` and ``(j,l)``."""

    i: int
    j: int
    k: int
    l: int
    coeff: float

    @property
    def label(self) -> str:
        return f"{self.i}{self.k}<->{self.j}{self.l}"

    def odd_pairs(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.i, self.l), (self.j, self.k)


@dataclass(frozen=True)
class ZZTerm:
    i: int
    j: int
    k: int
    l: int
    coeff: float


@dataclass
class PairDecomposition:
    """Diagonal part as local phases plus ZZ terms, off-diagonal part as flips."""

    dims: tuple[int, int]
    local_a: np.ndarray
    local_b: np.ndarray
    zz: list[ZZTerm]
    flips: list[Flip]
    fit_pairs: frozenset

    def diagonal_on(self, pairs) -> dict[tuple[int, int], float]:
        out = {}
        for a, b in pairs:
            v = self.local_a[a] + self.local_b[b]
            for t in self.zz:
                za = 1 if a == t.i else -1 if a == t.j else 0
                zb = 1 if b == t.k else -1 if b == t.l else 0
                v += t.coeff * za * zb
            out[(a, b)] = v
        return out


def _zz_vector(pairs, i, j, k, l) -> np.ndarray:
    return np.array(
        [(1 if a == i else -1 if a == j else 0) * (1 if b == k else -1 if b == l else 0) for a, b in pairs],
        dtype=float,
    )


def decompose_diagonal(
    values: dict[tuple[int, int], float],
    dims: tuple[int, int],
    fit_pairs,
    mode: str = "blockwise",
) -> tuple[np.ndarray, np.ndarray, list[ZZTerm]]:
    """Greedy sparse fit of a two-site diagonal by local terms plus ZZ generators.

    The fit is exact on ``fit_pairs``. Local (and constant) parts are projected
    out, ZZ candidates are added by orthogonal matching pursuit and redundant
    ones pruned afterwards. In ``blockwise`` mode a ZZ candidate on
    ``(i,j)x(k,l)`` is admitted only if all four pairs ``ik, il, jk, jl`` are
    in ``fit_pairs``.
    """
    if mode not in DIAGONAL_MODES:
        raise InvalidArgument(f"unknown diagonal mode {mode!r}; choose from {DIAGONAL_MODES}")
    da, db = dims
    pairs = sorted(fit_pairs)
    pair_set = set(pairs)
    y = np.array([values.get(p, 0.0) for p in pairs])
    L = np.array(
        [[1.0 if a == i else 0.0 for a, _ in pairs] for i in range(da)]
        + [[1.0 if b == k else 0.0 for _, b in pairs] for k in range(db)]
    ).T
    U_, s, _ = np.linalg.svd(L, full_matrices=False)
    Q = U_[:, s > 1e-10]

    def proj(v):
        return v - Q @ (Q.T @ v)

    keys, cols = [], []
    for i, j in itertools.combinations(range(da), 2):
        for k, l in itertools.combinations(range(db), 2):
            if mode == "blockwise" and not all(q in pair_set for q in ((i, k), (i, l), (j, k), (j, l))):
                continue
            v = proj(_zz_vector(pairs, i, j, k, l))
            if np.linalg.norm(v) > 1e-10:
                keys.append((i, j, k, l))
                cols.append(v)
    target = proj(y)
    selected: list[int] = []

    def fit(sel):
        if not sel:
            return np.zeros(0), target
        M = np.array([cols[n] for n in sel]).T
        coef, *_ = np.linalg.lstsq(M, target, rcond=None)
        return coef, target - M @ coef

    if cols:
        C = np.array(cols).T
        norms = np.linalg.norm(C, axis=0)
        _, resid = fit(selected)
        while np.linalg.norm(resid) > FIT_TOL:
            scores = np.abs(resid @ C) / norms
            scores[selected] = -1
            best = int(np.argmax(scores))
            if scores[best] <= FIT_TOL:
                break
            selected.append(best)
            _, resid = fit(selected)
        pruned = True
        while pruned:
            pruned = False
            for n in list(selected):
                trial = [m for m in selected if m != n]
                if np.linalg.norm(fit(trial)[1]) <= FIT_TOL:
                    selected, pruned = trial, True
                    break
    coef, resid = fit(selected)
    if np.linalg.norm(resid) > 1e-8:
        raise LoweringError(f"diagonal pair term has no exact local+ZZ form on the chosen pairs (residual {np.linalg.norm(resid):.3g})")
    zz = [ZZTerm(*keys[n], float(c)) for n, c in zip(selected, coef) if abs(c) > FIT_TOL]
    rest = y - sum((t.coeff * _zz_vector(pairs, t.i, t.j, t.k, t.l) for t in zz), np.zeros_like(y))
    beta, *_ = np.linalg.lstsq(L, rest, rcond=None)
    return beta[:da], beta[da:], zz


def decompose_pair_term(
    term: np.ndarray,
    dims: tuple[int, int],
    pair_set,
    mode: str = "blockwise",
) -> PairDecomposition:
    """Split a two-site Hermitian term into diagonal pieces and flip terms."""
    da, db = dims
    term = np.asarray(term)
    if term.shape != (da * db, da * db):
        raise LoweringError(f"pair term of shape {term.shape} does not match dims {dims}")
    if not np.allclose(term, term.conj().T, atol=1e-12):
        raise LoweringError("pair term is not Hermitian")
    if np.max(np.abs(term.imag)) > 1e-12 if np.iscomplexobj(term) else False:
        raise LoweringError("complex flip amplitudes are not supported by the native gate set")
    term = term.real
    flips = []
    for p, q in zip(*np.nonzero(np.triu(np.abs(term) > 1e-12, k=1))):
        (i, k), (j, l) = divmod(int(p), db), divmod(int(q), db)
        if i == j or k == l:
            raise LoweringError(
                f"off-diagonal element <{i}{k}|T|{j}{l}> changes only one site; "
                "it needs a controlled local gate, not a two-subspace MS gate"
            )
        flips.append(Flip(i, j, k, l, float(term[p, q])))
    # every flip must commute with the rest of the term for the product to be exact
    for f in flips:
        p, q = f.i * db + f.k, f.j * db + f.l
        if abs(term[p, p] - term[q, q]) > 1e-12:
            raise LoweringError(f"flip {f.label} connects pairs with different diagonal energies")
    touched = Counter()
    for f in flips:
        touched[(f.i, f.k)] += 1
        touched[(f.j, f.l)] += 1
    if any(n > 1 for n in touched.values()):
        raise LoweringError("flip terms share a neighbour pair and do not commute")
    fit_pairs = frozenset(itertools.product(range(da), range(db))) if mode == "full" else frozenset(pair_set)
    diag = {(a, b): float(term[a * db + b, a * db + b]) for a in range(da) for b in range(db)}
    la, lb, zz = decompose_diagonal(diag, dims, fit_pairs, mode)
    return PairDecomposition(dims, la, lb, zz, flips, fit_pairs)


def _resolve_pairs(subspace) -> frozenset:
    if isinstance(subspace, PhysicalSubspace):
        return subspace.pair_set
    return frozenset(tuple(p) for p in subspace)


def lower_pair_term(
    term: np.ndarray,
    subspace,
    dt: float,
    dims: tuple[int, int] | None = None,
    sites: tuple[int, int] = (0, 1),
    mode: str = "blockwise",
    elide: bool = True,
    max_angle: float = DEFAULT_MAX_ANGLE,
    tag: str = "pair",
) -> list[NativeGate]:
    """Gates implementing ``exp(-i term dt)`` on gauge-allowed neighbour pairs.

    ``subspace`` is either a ``PhysicalSubspace`` or an explicit set of allowed
    neighbour pairs ``(a, b)``.
    """
    term = np.asarray(term)
    if dims is None:
        d = int(round(math.sqrt(term.shape[0])))
        dims = (d, d)
    if dt == 0:
        return []
    pairs = _resolve_pairs(subspace)
    dec = decompose_pair_term(term, dims, pairs, mode)
    a, b = sites
    gates: list[NativeGate] = []
    if np.any(np.abs(dec.local_a) > 0):
        gates.append(_local(a, np.diag(np.exp(-1j * dt * dec.local_a)), f"{tag}/diagonal local", "pair-local"))
    if np.any(np.abs(dec.local_b) > 0):
        gates.append(_local(b, np.diag(np.exp(-1j * dt * dec.local_b)), f"{tag}/diagonal local", "pair-local"))
    for t in dec.zz:
        prov = f"{tag}/diagonal ZZ ({t.i},{t.j}|{t.k},{t.l}) c={t.coeff:.6g}"
        gates += _ms(MS_ZZ, sites, ((t.i, t.j), (t.k, t.l)), 2 * t.coeff * dt, max_angle, prov, "pair-diagonal")
    for f in dec.flips:
        theta = 2 * f.coeff * dt
        odd = f.odd_pairs()
        prov = f"{tag}/flip {f.label}"
        subs = ((f.i, f.j), (f.k, f.l))
        if elide and not any(p in pairs for p in odd):
            gates += _ms(MS_XX, sites, subs, theta, max_angle, prov + " (partner elided)", "pair-flip", elided=True)
        else:
            gates += _flip_with_partner(f, sites, dims, theta, max_angle, prov)
    return gates


def _yy_frame(f: Flip, dims) -> tuple[np.ndarray, np.ndarray]:
    """Local phases turning X_ij (x) X_kl into Y_ij (x) Y_kl by conjugation."""
    pa = np.ones(dims[0], dtype=np.complex128)
    pb = np.ones(dims[1], dtype=np.complex128)
    pa[f.j] = 1j
    pb[f.l] = 1j
    return np.diag(pa), np.diag(pb)


def _flip_with_partner(f: Flip, sites, dims, theta, max_angle, prov) -> list[NativeGate]:
    a, b = sites
    subs = ((f.i, f.j), (f.k, f.l))
    gates = _ms(MS_XX, sites, subs, theta / 2, max_angle, prov + " XX half", "pair-flip")
    yy = _ms(MS_XX, sites, subs, -theta / 2, max_angle, prov + " YY half", "pair-flip-partner")
    if yy:
        pa, pb = _yy_frame(f, dims)
        gates += [
            _local(a, pa.conj().T, prov + " YY frame", "pair-frame"),
            _local(b, pb.conj().T, prov + " YY frame", "pair-frame"),
            *yy,
            _local(a, pa, prov + " YY frame", "pair-frame"),
            _local(b, pb, prov + " YY frame", "pair-frame"),
        ]
    return gates


def restore_partner(seq: GateSequence, index: int) -> GateSequence:
    """Replace the elided flip gate at ``index`` by its exact XX/YY form."""
    g = seq.gates[index]
    if not g.elided_partner:
        raise InvalidArgument(f"gate {index} is not an elided flip")
    (i, j), (k, l) = g.subspaces
    dims = (seq.dims[g.sites[0]], seq.dims[g.sites[1]])
    f = Flip(i, j, k, l, 0.0)
    prov = g.provenance.replace(" (partner elided)", "")
    new = _flip_with_partner(f, g.sites, dims, g.angle, math.inf, prov + " restored")
    gates = seq.gates[:index] + new + seq.gates[index + 1:]
    return GateSequence(seq.dims, gates, dict(seq.metadata))


# ---------------------------------------------------------------------------
# full Trotter programs


def compile_trotter_circuit(
    params: ModelParams,
    plan: TrotterPlan,
    subspace: PhysicalSubspace | None = None,
    *,
    mode: str = "blockwise",
    elide: bool = True,
    max_angle: float = DEFAULT_MAX_ANGLE,
) -> GateSequence:
    """Native-gate program for ``plan.n_steps`` symmetric Trotter steps.

    Allowed neighbour pairs default to the local gauge-constraint set of the
    sector; an explicit ``subspace`` uses its observed pair set instead.
    """
    dims = params.register.dims
    pairs = subspace.pair_set if subspace is not None else gauss_pair_set(params.sector)
    terms = build_terms(params)
    dt = plan.dt
    n = params.n_plaquettes
    seq = GateSequence(dims, metadata={
        "params": params.as_dict(),
        "plan": plan.as_dict(),
        "diagonal_mode": mode,
        "elide_partners": elide,
        "max_angle": max_angle,
        "global_phase_offset": terms.offset,
    })
    if dt == 0:
        return seq
    half_u = [expm_hermitian(-terms.x * U, dt / 2) for U in terms.plaquette_ops]
    half_e = [np.diag(np.exp(-0.5j * dt * e)) for e in terms.electric_local]
    for step in range(plan.n_steps):
        tag = f"step{step}"
        outer = [_local(s, half_u[s], f"{tag}/plaquette site{s}", "plaquette") for s in range(n)]
        inner = [_local(s, half_e[s], f"{tag}/local electric site{s}", "local-electric") for s in range(n)]
        seq.extend(outer)
        seq.extend(inner)
        for bnd, P in enumerate(terms.electric_pair):
            seq.extend(lower_pair_term(
                P, pairs, dt, dims=(dims[bnd], dims[bnd + 1]), sites=(bnd, bnd + 1),
                mode=mode, elide=elide, max_angle=max_angle, tag=f"{tag}/bond{bnd}",
            ))
        seq.extend(inner)
        seq.extend(outer)
    return seq


def simulate_sequence(seq: GateSequence, psi0: np.ndarray) -> np.ndarray:
    return seq.apply(np.asarray(psi0, dtype=np.complex128))


def _depolarize_pair(rho: np.ndarray, dims, a: int, b: int, p: float) -> np.ndarray:
    n = len(dims)
    t = rho.reshape(tuple(dims) * 2)
    moved = np.moveaxis(t, [a, b, n + a, n + b], [-4, -3, -2, -1])
    reduced = np.einsum("...ijij->...", moved)
    da, db = dims[a], dims[b]
    mixed = np.einsum("ik,jl->ijkl", np.eye(da), np.eye(db)) / (da * db)
    repl = reduced[..., None, None, None, None] * mixed
    repl = np.moveaxis(repl, [-4, -3, -2, -1], [a, b, n + a, n + b]).reshape(rho.shape)
    return (1 - p) * rho + p * repl


def simulate_density(seq: GateSequence, psi0: np.ndarray, noise_p: float = 0.0) -> np.ndarray:
    """Density-matrix simulation with two-site depolarizing noise after each MS gate."""
    if not 0 <= noise_p <= 1:
        raise InvalidArgument("noise_p must lie in [0, 1]")
    dims = seq.dims
    psi0 = np.asarray(psi0, dtype=np.complex128)
    rho = np.outer(psi0, psi0.conj())
    for g in seq.gates:
        op = g.operator(dims)
        if g.kind == LOCAL:
            left = apply_local_array(rho, dims, g.sites[0], op)
            rho = apply_local_array(left.conj().T, dims, g.sites[0], op).conj().T
        else:
            left = apply_two_site_array(rho, dims, g.sites[0], g.sites[1], op)
            rho = apply_two_site_array(left.conj().T, dims, g.sites[0], g.sites[1], op).conj().T
            if noise_p > 0:
                rho = _depolarize_pair(rho, dims, g.sites[0], g.sites[1], noise_p)
    return rho


def trotter_step_unitary(params: ModelParams, plan: TrotterPlan) -> np.ndarray:
    stepper = TrotterStepper(params, plan.dt)
    U1 = stepper.unitary()
    return np.linalg.matrix_power(U1, plan.n_steps)


def physical_distance(U: np.ndarray, V: np.ndarray, indices: np.ndarray) -> float:
    """Distance between two unitaries on a coordinate subspace, up to a global phase."""
    A = U[np.ix_(indices, indices)]
    B = V[np.ix_(indices, indices)]
    overlap = np.vdot(B, A)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.max(np.abs(A - phase * B)))


# ---------------------------------------------------------------------------
# cost models


# CNOT costs on the qubit side: a boundary qudit maps to 2 qubits, a bulk one to 3
QUBIT_CNOT = {
    "diagonal_5q": 2**5 - 2,  # arbitrary diagonal on the 5-qubit pair register
    "generic_2q": 3,
    "generic_3q": 19,
    "local_diagonal": 18,
}


@dataclass(frozen=True)
class GateCountReport:
    native_entangling: int
    qubit_cnot_per_step: int
    qubit_cnot_total: int
    breakdown: dict
    overhead_factor: float
    n_steps: int = 1

    def as_dict(self) -> dict:
        return {
            "native_entangling": self.native_entangling,
            "qubit_cnot_per_step": self.qubit_cnot_per_step,
            "qubit_cnot_total": self.qubit_cnot_total,
            "overhead_factor": self.overhead_factor,
            "n_steps": self.n_steps,
            "breakdown": dict(self.breakdown),
        }

    def to_text(self) -> str:
        lines = [
            f"native_entangling = {self.native_entangling}",
            f"qubit_cnot_per_step = {self.qubit_cnot_per_step}",
            f"qubit_cnot_total = {self.qubit_cnot_total}",
            f"overhead_factor = {self.overhead_factor!r}",
            f"n_steps = {self.n_steps}",
            "[breakdown]",
        ]
        lines += [f"{k} = {v}" for k, v in self.breakdown.items()]
        return "\n".join(lines) + "\n"


REFERENCE_NATIVE_COUNT = 67


def qubit_embedding_estimate(
    n_steps: int,
    native_entangling: int = REFERENCE_NATIVE_COUNT,
    params: ModelParams | None = None,
) -> GateCountReport:
    """CNOT cost of a qubit encoding of the three-bubble sector-ONE chain.

    Bulk qudits take three qubits; the two boundary qudits are effectively
    four-dimensional and take two. The figures are fixed decomposition costs
    for this instance, not lower bounds.
    """
    if params is not None and (params.sector is not Sector.ONE or params.n_plaquettes != 3):
        raise Unsupported("the qubit cost model is only defined for three sector-ONE plaquettes")
    if n_steps < 1:
        raise InvalidArgument("n_steps must be >= 1")
    c = QUBIT_CNOT
    # one diagonal block plus four flips, each a 2q and a 3q basis change around a diagonal
    one_bond = c["diagonal_5q"] + 4 * (c["generic_2q"] + c["generic_3q"] + c["diagonal_5q"])
    pair = 2 * one_bond
    plaquette = 4 * c["generic_2q"] + 2 * c["generic_3q"]
    diagonal = c["local_diagonal"]
    per_step = pair + plaquette + diagonal
    total = per_step * n_steps
    return GateCountReport(
        native_entangling=native_entangling,
        qubit_cnot_per_step=per_step,
        qubit_cnot_total=total,
        breakdown={"pair": pair, "plaquette": plaquette, "diagonal": diagonal},
        overhead_factor=total / native_entangling if native_entangling else math.inf,
        n_steps=n_steps,
    )


def compiled_report(seq: GateSequence, n_steps: int) -> GateCountReport:
    """Native count of a compiled program next to the qubit cost model."""
    native = seq.entangling_count
    qubit = qubit_embedding_estimate(n_steps, native_entangling=max(native, 1))
    breakdown = {f"native.{k}": v for k, v in seq.breakdown().items()}
    breakdown.update({f"qubit.{k}": v for k, v in qubit.breakdown.items()})
    breakdown["native.elided_partners"] = len(seq.elided_indices())
    return replace(qubit, native_entangling=native, breakdown=breakdown,
                   overhead_factor=qubit.qubit_cnot_total / native if native else math.inf)


def entangling_count_vs_time(
    params: ModelParams,
    times: Sequence[float],
    n_steps: int = 2,
    *,
    mode: str = "blockwise",
    max_angle: float = DEFAULT_MAX_ANGLE,
    reduce: bool = True,
) -> list[tuple[float, int]]:
    """Native entangling count of the compiled program at each evolution time.

    With ``reduce=False`` each MS gate is counted once regardless of its angle.
    """
    rows = []
    for t in times:
        seq = compile_trotter_circuit(params, TrotterPlan(float(t), n_steps), mode=mode,
                                      max_angle=max_angle if reduce else math.inf)
        rows.append((float(t), seq.entangling_count))
    return rows
