"""SU(2)_2 bubble-chain Hamiltonian, gauge-physical subspace and named string states.

Two flux sectors are supported. ``Sector.HALF`` (fundamental boundary charges)
uses four levels per bubble, ``Sector.ONE`` (adjoint boundary charges) uses
eight. The Hamiltonian is

    H = sum_n E2_n + sum_n E2_{n,n+1} - x * sum_n U_n

with per-bubble plaquette operators ``U_n``, per-bubble electric diagonals
``E2_n`` (boundary bubbles carry an extra flux-continuity term) and a
nearest-neighbour electric term ``E2_{n,n+1}``.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import IdentificationError, InvalidArgument, NoResonance, UnsupportedOption
from .qudit import (
    BasisState,
    MixedRadixRegister,
    StateVector,
    apply_local_array,
    apply_two_site_array,
    check_dimension,
    encode,
)

SQRT2 = np.sqrt(2.0)
THRESHOLD = 1e-12


class Sector(str, Enum):
    HALF = "HALF"
    ONE = "ONE"

    @property
    def local_dim(self) -> int:
        return 4 if self is Sector.HALF else 8

    @classmethod
    def parse(cls, value) -> Sector:
        if isinstance(value, Sector):
            return value
        key = str(value).strip().upper()
        aliases = {"1/2": "HALF", "0.5": "HALF", "J=1/2": "HALF", "1": "ONE", "J=1": "ONE"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidArgument(f"unknown sector {value!r}; use HALF or ONE") from None


@dataclass(frozen=True)
class ModelParams:
    """Couplings and geometry of the plaquette ladder.

    ``simplified`` selects the offset-reduced nearest-neighbour electric term;
    ``None`` means the default for the sector (reduced for ONE, original for
    HALF, where no reduced form exists).
    """

    x: float
    g_par2: float
    g_perp2: float
    n_plaquettes: int = 3
    sector: Sector = Sector.ONE
    simplified: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "sector", Sector.parse(self.sector))
        if int(self.n_plaquettes) != self.n_plaquettes or self.n_plaquettes < 2:
            raise InvalidArgument(f"n_plaquettes must be an integer >= 2, got {self.n_plaquettes}")
        object.__setattr__(self, "n_plaquettes", int(self.n_plaquettes))
        if self.g_par2 < 0 or self.g_perp2 < 0:
            raise InvalidArgument("electric couplings must be non-negative")
        if self.simplified and self.sector is Sector.HALF:
            raise UnsupportedOption("the offset-reduced pair term exists only for sector ONE")

    @property
    def local_dim(self) -> int:
        return self.sector.local_dim

    @property
    def register(self) -> MixedRadixRegister:
        return MixedRadixRegister.uniform(self.local_dim, self.n_plaquettes)

    @property
    def use_simplified(self) -> bool:
        if self.simplified is None:
            return self.sector is Sector.ONE
        return bool(self.simplified)

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "x": self.x,
            "g_par2": self.g_par2,
            "g_perp2": self.g_perp2,
            "n_plaquettes": self.n_plaquettes,
            "sector": self.sector.value,
            "simplified": self.use_simplified,
        }


# ---------------------------------------------------------------------------
# term builders

_HALF_PLAQUETTE = np.array(
    [[0, -1, 0, 1], [-1, 0, 1, 0], [0, 1, 0, -1], [1, 0, -1, 0]], dtype=float
) / SQRT2

_LOCAL_DIAG = {
    Sector.HALF: np.array([3 / 4, 3 / 4, 11 / 4, 11 / 4]),
    Sector.ONE: np.array([0, 3 / 2, 4, 3 / 2, 3 / 2, 2, 3 / 2, 2]),
}
_BOUNDARY_DIAG = {
    Sector.HALF: np.array([3 / 4, 0, 3 / 4, 2]),
    Sector.ONE: np.array([0, 3 / 4, 2, 3 / 4, 3 / 4, 0, 3 / 4, 2]),
}

# nearest-neighbour electric term in units of g_perp2 / 2; keys are two-digit kets
_PAIR_DIAG = {
    Sector.HALF: {
        3 / 4: ("01", "10", "03", "30", "12", "21", "23", "32"),
        2.0: ("02", "20", "13", "31"),
    },
    Sector.ONE: {
        3 / 4: ("01", "03", "21", "23", "10", "12", "40", "42",
                "65", "67", "35", "37", "54", "56", "74", "76"),
        2.0: ("02", "20", "57", "75"),
        1.0: ("11", "13", "41", "43", "34", "36", "64", "66"),
    },
}
_PAIR_DIAG_SIMPLIFIED = {
    -3 / 4: ("00", "22", "55", "77"),
    5 / 4: ("02", "20", "57", "75"),
    1 / 4: ("11", "34", "13", "36", "41", "64", "43", "66"),
}
_PAIR_FLIPS = {
    Sector.HALF: (),
    Sector.ONE: (("11", "34"), ("13", "36"), ("41", "64"), ("43", "66")),
}
SIMPLIFIED_OFFSET = 3 / 4  # per bond, in units of g_perp2 / 2


def build_plaquette_op(sector: Sector | str) -> np.ndarray:
    """Single-bubble plaquette operator ``U_n`` (real symmetric)."""
    sector = Sector.parse(sector)
    if sector is Sector.HALF:
        return _HALF_PLAQUETTE.copy()
    U = np.zeros((8, 8))
    U[1, 0] = U[1, 2] = 1.0
    U[6, 5] = U[6, 7] = -1.0
    return U + U.T


def build_local_electric(sector: Sector | str, params: ModelParams, site: int) -> np.ndarray:
    """Diagonal of ``E2_n`` at ``site``; boundary bubbles get the extra g_perp2 term."""
    sector = Sector.parse(sector)
    n = params.n_plaquettes
    if not 0 <= site < n:
        raise IndexError(f"site {site} outside chain of {n} plaquettes")
    diag = params.g_par2 / 2 * _LOCAL_DIAG[sector]
    if site in (0, n - 1):
        diag = diag + params.g_perp2 / 2 * _BOUNDARY_DIAG[sector]
    return diag.astype(float)


def _pair_index(ket: str, d: int) -> int:
    return int(ket[0]) * d + int(ket[1])


def build_pair_electric(
    sector: Sector | str, params: ModelParams, simplified: bool = False
) -> tuple[np.ndarray, float]:
    """Nearest-neighbour electric term and the constant removed from it.

    With ``simplified=True`` (sector ONE only) the returned matrix equals the
    original one minus ``offset * I`` on the 32 gauge-allowed neighbour pairs;
    on unphysical pairs the two forms differ.
    """
    sector = Sector.parse(sector)
    if simplified and sector is not Sector.ONE:
        raise UnsupportedOption("offset-reduced pair term is only defined for sector ONE")
    d = sector.local_dim
    scale = params.g_perp2 / 2
    M = np.zeros((d * d, d * d))
    table = _PAIR_DIAG_SIMPLIFIED if simplified else _PAIR_DIAG[sector]
    for coeff, kets in table.items():
        for ket in kets:
            k = _pair_index(ket, d)
            M[k, k] += coeff
    for a, b in _PAIR_FLIPS[sector]:
        i, j = _pair_index(a, d), _pair_index(b, d)
        M[i, j] += 1.0
        M[j, i] += 1.0
    offset = scale * SIMPLIFIED_OFFSET if simplified else 0.0
    return scale * M, offset


@dataclass
class HamiltonianTerms:
    x: float
    plaquette_ops: list[np.ndarray]
    electric_local: list[np.ndarray]
    electric_pair: list[np.ndarray]
    offset: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.plaquette_ops)

    def local_hamiltonian(self, site: int) -> np.ndarray:
        return -self.x * self.plaquette_ops[site] + np.diag(self.electric_local[site])

    def max_hermiticity_error(self) -> float:
        mats = list(self.plaquette_ops) + list(self.electric_pair)
        return max(float(np.max(np.abs(m - m.conj().T))) for m in mats)


def build_terms(params: ModelParams, simplified: bool | None = None) -> HamiltonianTerms:
    use_simplified = params.use_simplified if simplified is None else simplified
    n = params.n_plaquettes
    U = build_plaquette_op(params.sector)
    pair, offset = build_pair_electric(params.sector, params, use_simplified)
    return HamiltonianTerms(
        x=params.x,
        plaquette_ops=[U.copy() for _ in range(n)],
        electric_local=[build_local_electric(params.sector, params, s) for s in range(n)],
        electric_pair=[pair.copy() for _ in range(n - 1)],
        offset=offset * (n - 1),
    )


def assemble_hamiltonian(params: ModelParams, simplified: bool | None = None) -> np.ndarray:
    """Dense real-symmetric Hamiltonian on the full product space.

    The subtracted constant of the reduced form is not added back; see
    ``HamiltonianTerms.offset``.
    """
    reg = params.register
    D = reg.dimension
    check_dimension(D)
    terms = build_terms(params, simplified)
    eye = np.eye(D)
    H = np.zeros((D, D))
    for s in range(terms.n_sites):
        H += apply_local_array(eye, reg.dims, s, terms.local_hamiltonian(s))
    for b, pair in enumerate(terms.electric_pair):
        H += apply_two_site_array(eye, reg.dims, b, b + 1, pair)
    return H


def _digit_table(reg: MixedRadixRegister) -> np.ndarray:
    idx = np.arange(reg.dimension)
    return np.stack(np.unravel_index(idx, reg.dims), axis=1)


def diagonal_energies(params: ModelParams, simplified: bool = False) -> np.ndarray:
    """Diagonal of H at x=0 for every basis state, computed configuration-wise."""
    reg = params.register
    check_dimension(reg.dimension)
    digits = _digit_table(reg)
    d = params.local_dim
    pair, _ = build_pair_electric(params.sector, params, simplified)
    pair_diag = np.diag(pair)
    E = np.zeros(reg.dimension)
    for s in range(params.n_plaquettes):
        E += build_local_electric(params.sector, params, s)[digits[:, s]]
    for b in range(params.n_plaquettes - 1):
        E += pair_diag[digits[:, b] * d + digits[:, b + 1]]
    return E


def diagonal_config_energy(state: BasisState | str, params: ModelParams, simplified: bool = False) -> float:
    """Electric (x=0) energy of one configuration, original pair form by default."""
    if isinstance(state, str):
        state = BasisState.from_label(state)
    encode(state, params.register)  # validates digits
    d = params.local_dim
    pair, _ = build_pair_electric(params.sector, params, simplified)
    E = sum(build_local_electric(params.sector, params, s)[a] for s, a in enumerate(state.digits))
    E += sum(pair[a * d + b, a * d + b] for a, b in zip(state.digits, state.digits[1:]))
    return float(E)


# ---------------------------------------------------------------------------
# gauge-physical subspace


def _neighbor_tables(sector: Sector):
    """Structural transitions of all term matrices at unit couplings."""
    d = sector.local_dim
    U = build_plaquette_op(sector)
    local = {a: [b for b in range(d) if b != a and abs(U[b, a]) > THRESHOLD] for a in range(d)}
    unit = ModelParams(x=1.0, g_par2=1.0, g_perp2=1.0, sector=sector)
    pair_tables = []
    for simplified in ((False, True) if sector is Sector.ONE else (False,)):
        P, _ = build_pair_electric(sector, unit, simplified)
        pair_tables.append(P)
    pair = {}
    for P in pair_tables:
        for k in range(d * d):
            for j in np.flatnonzero(np.abs(P[:, k]) > THRESHOLD):
                if j != k:
                    pair.setdefault(divmod(k, d), set()).add(divmod(int(j), d))
    return local, {k: sorted(v) for k, v in pair.items()}


def _successors(digits: tuple[int, ...], local, pair) -> Iterable[tuple[int, ...]]:
    n = len(digits)
    for s in range(n):
        for b in local[digits[s]]:
            yield digits[:s] + (b,) + digits[s + 1:]
    for s in range(n - 1):
        for a, b in pair.get((digits[s], digits[s + 1]), ()):
            yield digits[:s] + (a, b) + digits[s + 2:]


@dataclass(frozen=True)
class PhysicalSubspace:
    """Basis states reachable from gauge-physical seeds under every Hamiltonian term.

    ``bond_pairs[b]`` is the set of neighbour digit pairs seen on bond ``b``
    and ``pair_set`` their union. Boundary bubbles are effectively restricted,
    so on a three-bubble chain ``pair_set`` is smaller than the local
    Gauss-law pair set returned by :func:`gauss_pair_set`.
    """

    sector: Sector
    n_sites: int
    global_set: frozenset[BasisState]
    bond_pairs: tuple[frozenset[tuple[int, int]], ...]
    pair_set: frozenset[tuple[int, int]] = field(default=frozenset())

    def __contains__(self, state) -> bool:
        if isinstance(state, str):
            state = BasisState.from_label(state)
        return state in self.global_set

    def __len__(self) -> int:
        return len(self.global_set)

    def indices(self, reg: MixedRadixRegister | None = None) -> np.ndarray:
        reg = reg or MixedRadixRegister.uniform(self.sector.local_dim, self.n_sites)
        return np.array(sorted(encode(s, reg) for s in self.global_set), dtype=np.int64)

    def mask(self, reg: MixedRadixRegister | None = None) -> np.ndarray:
        reg = reg or MixedRadixRegister.uniform(self.sector.local_dim, self.n_sites)
        m = np.zeros(reg.dimension, dtype=bool)
        m[self.indices(reg)] = True
        return m

    def labels(self) -> list[str]:
        return sorted(s.label for s in self.global_set)


def physical_subspace(params: ModelParams, seeds: Sequence[BasisState | str]) -> PhysicalSubspace:
    if not seeds:
        raise InvalidArgument("physical_subspace needs at least one seed state")
    n = params.n_plaquettes
    start = []
    for s in seeds:
        if isinstance(s, str):
            s = BasisState.from_label(s)
        encode(s, params.register)
        start.append(s.digits)
    local, pair = _neighbor_tables(params.sector)
    seen = set(start)
    queue = deque(start)
    while queue:
        cur = queue.popleft()
        for nxt in _successors(cur, local, pair):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    bonds = tuple(frozenset((c[b], c[b + 1]) for c in seen) for b in range(n - 1))
    return PhysicalSubspace(
        sector=params.sector,
        n_sites=n,
        global_set=frozenset(BasisState(c) for c in seen),
        bond_pairs=bonds,
        pair_set=frozenset().union(*bonds),
    )


def reference_string(sector: Sector | str, n_plaquettes: int) -> BasisState:
    """Straight-string configuration found by the generic-coupling energy scan."""
    sector = Sector.parse(sector)
    probe = ModelParams(x=0.0, g_par2=1.0, g_perp2=1.0, n_plaquettes=n_plaquettes, sector=sector)
    return _find_straight_string(probe, seed=0)


def gauss_pair_set(sector: Sector | str) -> frozenset[tuple[int, int]]:
    """Neighbour pairs allowed by the local gauge constraint.

    Obtained as the projection onto the interior bond of the closure on a
    four-bubble chain, where neither bubble of that bond touches a boundary.
    """
    sector = Sector.parse(sector)
    chain = ModelParams(x=1.0, g_par2=1.0, g_perp2=1.0, n_plaquettes=4, sector=sector)
    sub = physical_subspace(chain, [reference_string(sector, 4)])
    return sub.bond_pairs[1]


# ---------------------------------------------------------------------------
# spatial reflection


@dataclass(frozen=True)
class Reflection:
    """Site reversal composed with a per-bubble digit relabeling."""

    digit_map: tuple[int, ...]

    def apply(self, state: BasisState | str) -> BasisState:
        if isinstance(state, str):
            state = BasisState.from_label(state)
        return BasisState(tuple(self.digit_map[a] for a in reversed(state.digits)))

    def permutation(self, reg: MixedRadixRegister) -> np.ndarray:
        """``perm[k]`` is the flat index of the mirror image of basis state ``k``."""
        digits = _digit_table(reg)
        mapped = np.asarray(self.digit_map)[digits[:, ::-1]]
        return np.ravel_multi_index(tuple(mapped.T), reg.dims)

    def matrix(self, reg: MixedRadixRegister) -> np.ndarray:
        D = reg.dimension
        R = np.zeros((D, D))
        R[self.permutation(reg), np.arange(D)] = 1.0
        return R


def derive_reflection(sector: Sector | str) -> Reflection:
    """Find the digit relabeling under which the term set is mirror symmetric.

    Candidates are permutations within classes of digits sharing the same
    bulk and boundary electric energy; a candidate is kept when it leaves the
    plaquette operator invariant and maps the neighbour term ``E[(a,b),(c,d)]``
    onto ``E[(pi b, pi a),(pi d, pi c)]`` for both pair forms.
    """
    sector = Sector.parse(sector)
    d = sector.local_dim
    U = build_plaquette_op(sector)
    unit = ModelParams(x=1.0, g_par2=1.0, g_perp2=1.0, sector=sector)
    pairs = [build_pair_electric(sector, unit, False)[0]]
    if sector is Sector.ONE:
        pairs.append(build_pair_electric(sector, unit, True)[0])
    signature = {}
    for a in range(d):
        key = (_LOCAL_DIAG[sector][a], _BOUNDARY_DIAG[sector][a])
        signature.setdefault(key, []).append(a)
    classes = list(signature.values())
    found = []
    for choice in itertools.product(*(itertools.permutations(c) for c in classes)):
        pi = np.empty(d, dtype=int)
        for cls, img in zip(classes, choice):
            pi[list(cls)] = img
        if not np.allclose(U[np.ix_(pi, pi)], U, atol=THRESHOLD):
            continue
        # mirrored pair index: (a, b) -> (pi[b], pi[a])
        a, b = np.divmod(np.arange(d * d), d)
        mirror = pi[b] * d + pi[a]
        if all(np.allclose(P[np.ix_(mirror, mirror)], P, atol=THRESHOLD) for P in pairs):
            found.append(tuple(int(v) for v in pi))
    if not found:
        raise IdentificationError(f"no mirror-symmetric digit relabeling exists for sector {sector.value}")
    found.sort(key=lambda p: (sum(i != v for i, v in enumerate(p)), p))
    return Reflection(found[0])


# ---------------------------------------------------------------------------
# named string configurations


def string_tension(params: ModelParams) -> float:
    return params.g_par2 if params.sector is Sector.ONE else 3 / 8 * params.g_par2


def broken_string_energy(params: ModelParams) -> float:
    return 1.5 * (params.g_perp2 + params.g_par2)


def _probe_params(params: ModelParams, seed: int, k: int) -> list[ModelParams]:
    rng = np.random.default_rng(seed + 7919 * k)
    out = []
    for _ in range(2):
        gp, gq = rng.uniform(0.5, 2.5, size=2)
        out.append(params.with_(x=0.0, g_par2=float(gp), g_perp2=float(gq), simplified=None))
    return out


def _match_all(probes: list[ModelParams], target, candidates=None, tol=1e-9) -> set[int]:
    hits = None
    for p in probes:
        E = diagonal_energies(p)
        idx = np.flatnonzero(np.abs(E - target(p)) <= tol * max(1.0, abs(target(p))))
        cur = set(int(i) for i in idx)
        if candidates is not None:
            cur &= candidates
        hits = cur if hits is None else hits & cur
    return hits or set()


def _find_straight_string(params: ModelParams, seed: int, attempts: int = 4) -> BasisState:
    reg = params.register
    n = params.n_plaquettes
    for k in range(attempts):
        probes = _probe_params(params, seed, k)
        hits = _match_all(probes, lambda p: string_tension(p) * n)
        uniform = [i for i in hits if len(set(reg.decode(i).digits[1:-1] or reg.decode(i).digits)) == 1]
        if len(uniform) == 1:
            return reg.decode(uniform[0])
    raise IdentificationError("straight string configuration is not unique")


def _distances_from(target: BasisState, sub: PhysicalSubspace) -> dict[BasisState, int]:
    local, pair = _neighbor_tables(sub.sector)
    dist = {target.digits: 0}
    queue = deque([target.digits])
    while queue:
        cur = queue.popleft()
        for nxt in _successors(cur, local, pair):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return {BasisState(k): v for k, v in dist.items()}


def first_excited_manifold(params: ModelParams, seed: int = 0) -> list[BasisState]:
    """Sector-HALF configurations displaced on exactly two perpendicular links.

    At x=0 their energy exceeds the straight string by ``2 * 3/4 * g_perp2/2``.
    """
    if params.sector is not Sector.HALF:
        raise UnsupportedOption("the first excited manifold is defined for sector HALF")
    n = params.n_plaquettes
    reg = params.register
    probes = _probe_params(params, seed, 0)
    hits = _match_all(probes, lambda p: string_tension(p) * n + 0.75 * p.g_perp2)
    return sorted((reg.decode(i) for i in hits), key=lambda s: s.label)


@dataclass(frozen=True)
class StringStates:
    """Named configurations of a sector.

    ``pair`` holds the two configurations whose symmetric and antisymmetric
    superpositions are the ``PLUS`` and ``MINUS`` presets.
    """

    sector: Sector
    straight: BasisState
    broken: BasisState | None
    dressed: tuple[BasisState, BasisState] | None
    pair: tuple[BasisState, BasisState] | None
    reflection: Reflection
    unresolved: dict = field(default_factory=dict, compare=False)

    def superposition(self, reg: MixedRadixRegister, sign: int) -> StateVector:
        if self.pair is None:
            raise IdentificationError(self.unresolved.get("pair", "superposition partners are unresolved"))
        a, b = self.pair
        return StateVector.superposition(reg, {a: 1.0, b: float(sign)})

    def plus(self, reg: MixedRadixRegister) -> StateVector:
        return self.superposition(reg, +1)

    def minus(self, reg: MixedRadixRegister) -> StateVector:
        return self.superposition(reg, -1)

    def preset(self, name: str, reg: MixedRadixRegister) -> StateVector:
        key = name.upper()
        if key in ("S", "S_ONE", "S_HALF", "STRAIGHT"):
            expected = {"S_ONE": Sector.ONE, "S_HALF": Sector.HALF}.get(key)
            if expected is not None and expected is not self.sector:
                raise InvalidArgument(f"preset {name} does not belong to sector {self.sector.value}")
            return StateVector.basis(reg, self.straight)
        if key == "B":
            if self.broken is None:
                raise IdentificationError(self.unresolved.get("broken", "broken-string state is unresolved"))
            return StateVector.basis(reg, self.broken)
        if key == "PLUS":
            return self.plus(reg)
        if key == "MINUS":
            return self.minus(reg)
        raise InvalidArgument(f"unknown preset {name!r}")


ALL_ROLES = ("straight", "broken", "pair")


def identify_string_states(
    params: ModelParams, seed: int = 0, require: Sequence[str] = ALL_ROLES
) -> StringStates:
    """Locate the straight string, broken string and superposition partners.

    Energies are matched at two random coupling pairs so accidental
    degeneracies at any single pair cannot produce a false match. Roles listed
    in ``require`` raise ``IdentificationError`` when ambiguous; other roles
    are left as ``None`` with the reason recorded in ``unresolved``.
    """
    unknown = set(require) - set(ALL_ROLES)
    if unknown:
        raise InvalidArgument(f"unknown string-state roles {sorted(unknown)}")
    reg = params.register
    reflection = derive_reflection(params.sector)
    straight = _find_straight_string(params, seed)
    unresolved: dict[str, str] = {}

    def fail(role: str, reason: str) -> None:
        if role in require:
            raise IdentificationError(reason)
        unresolved[role] = reason

    if params.sector is Sector.HALF:
        pair = None
        manifold = first_excited_manifold(params, seed)
        mirror_even = [s for s in manifold if reflection.apply(s) == s]
        if len(mirror_even) < 2:
            fail("pair", "first excited manifold has fewer than two mirror-symmetric states")
        else:
            # largest displacement (fewest bubbles agreeing with the straight string) first
            agree = lambda s: sum(a == b for a, b in zip(s.digits, straight.digits))  # noqa: E731
            ordered = sorted(mirror_even, key=lambda s: (agree(s), s.label))
            pair = (ordered[0], ordered[-1])
        unresolved["broken"] = "sector HALF has no broken-string configuration"
        return StringStates(params.sector, straight, None, None, pair, reflection, unresolved)

    sub = physical_subspace(params, [straight])
    members = {encode(s, reg) for s in sub.global_set}
    broken = dressed = None
    for k in range(4):
        probes = _probe_params(params, seed, k)
        hits = _match_all(probes, broken_string_energy, candidates=members)
        if len(hits) == 1:
            broken = reg.decode(hits.pop())
            break
    if broken is None:
        fail("broken", "broken-string configuration is not unique in the physical subspace")
        fail("pair", "superposition partners are defined relative to the broken string")
        return StringStates(params.sector, straight, None, None, None, reflection, unresolved)
    dist = _distances_from(broken, sub)
    asym = [s for s in sub.global_set if reflection.apply(s) != s and s in dist]
    if asym:
        dmin = min(dist[s] for s in asym)
        nearest = sorted((s for s in asym if dist[s] == dmin), key=lambda s: s.label, reverse=True)
        if len(nearest) == 2:
            dressed = (nearest[0], nearest[1])
        else:
            fail("pair", f"expected one mirror pair next to the broken string, found {len(nearest)} states")
    else:
        fail("pair", "no mirror-asymmetric configuration connects to the broken string")
    return StringStates(params.sector, straight, broken, dressed, dressed, reflection, unresolved)


# ---------------------------------------------------------------------------
# resonance condition


def resonance_ratio(n_plaquettes: int) -> float:
    """Coupling ratio g_perp2 / g_par2 at which straight and broken strings are degenerate."""
    if n_plaquettes < 2:
        raise NoResonance(f"no string-breaking resonance for {n_plaquettes} plaquettes")
    return 2.0 * n_plaquettes / 3.0 - 1.0


def ratio_to_plaquettes(ratio: float) -> float:
    return 1.5 * (ratio + 1.0)
