"""Mixed-radix basis indexing and dense operator kernels for qudit chains.

Site 0 is the most significant digit, so the ket ``|413>`` on a chain with
dims ``(8, 8, 8)`` is the flat index ``4*64 + 1*8 + 3``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidBasisState, InvalidSitePair, InvalidState, ShapeError, TooLarge

DEFAULT_MAX_DIM = 2**20
MAX_DIM_ENV = "BUBBLECHAIN_MAX_DIM"


def max_dimension() -> int:
    """Dense dimension guard, overridable through ``BUBBLECHAIN_MAX_DIM``."""
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise TooLarge(f"{MAX_DIM_ENV}={raw!r} is not an integer") from exc
    return value


def check_dimension(dim: int) -> None:
    limit = max_dimension()
    if dim > limit:
        raise TooLarge(f"dimension {dim} exceeds guard {limit} (set {MAX_DIM_ENV} to override)")


@dataclass(frozen=True)
class BasisState:
    """A computational basis configuration given by its per-site digits."""

    digits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))

    @classmethod
    def from_label(cls, label: str) -> BasisState:
        if "." in label:
            return cls(tuple(int(p) for p in label.split(".")))
        return cls(tuple(int(c) for c in label))

    @property
    def label(self) -> str:
        if all(d < 10 for d in self.digits):
            return "".join(str(d) for d in self.digits)
        return ".".join(str(d) for d in self.digits)

    def __len__(self) -> int:
        return len(self.digits)

    def __str__(self) -> str:
        return f"|{self.label}>"


@dataclass(frozen=True)
class MixedRadixRegister:
    """Per-site local dimensions of a qudit chain."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ShapeError("register needs at least one site")
        if any(d < 2 for d in dims):
            raise ShapeError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def uniform(cls, d: int, n_sites: int) -> MixedRadixRegister:
        return cls((d,) * n_sites)

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        acc = 1
        for d in reversed(self.dims):
            out.append(acc)
            acc *= d
        return tuple(reversed(out))

    def encode(self, digits: Sequence[int] | BasisState) -> int:
        return encode(digits, self)

    def decode(self, index: int) -> BasisState:
        return decode(index, self)

    def basis_states(self) -> Iterator[BasisState]:
        for k in range(self.dimension):
            yield decode(k, self)

    def labels(self) -> list[str]:
        return [s.label for s in self.basis_states()]


def encode(digits: Sequence[int] | BasisState, reg: MixedRadixRegister) -> int:
    if isinstance(digits, BasisState):
        digits = digits.digits
    if len(digits) != reg.n_sites:
        raise InvalidBasisState(f"expected {reg.n_sites} digits, got {len(digits)}")
    index = 0
    for digit, d in zip(digits, reg.dims):
        if not 0 <= digit < d:
            raise InvalidBasisState(f"digit {digit} out of range for local dimension {d}")
        index = index * d + int(digit)
    return index


def decode(index: int, reg: MixedRadixRegister) -> BasisState:
    if not 0 <= index < reg.dimension:
        raise InvalidBasisState(f"index {index} outside [0, {reg.dimension})")
    digits = []
    for d in reversed(reg.dims):
        index, r = divmod(index, d)
        digits.append(r)
    return BasisState(tuple(reversed(digits)))


class StateVector:
    """Complex amplitudes over the full product space of a register."""

    def __init__(self, amplitudes, register: MixedRadixRegister):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.shape != (register.dimension,):
            raise ShapeError(f"amplitudes of shape {amps.shape} do not match dimension {register.dimension}")
        self.amplitudes = amps
        self.register = register

    @classmethod
    def basis(cls, register: MixedRadixRegister, state: BasisState | Sequence[int] | str) -> StateVector:
        if isinstance(state, str):
            state = BasisState.from_label(state)
        amps = np.zeros(register.dimension, dtype=np.complex128)
        amps[encode(state, register)] = 1.0
        return cls(amps, register)

    @classmethod
    def superposition(
        cls,
        register: MixedRadixRegister,
        weights: Mapping[BasisState | str, complex],
        normalize: bool = True,
    ) -> StateVector:
        amps = np.zeros(register.dimension, dtype=np.complex128)
        for state, w in weights.items():
            if isinstance(state, str):
                state = BasisState.from_label(state)
            amps[encode(state, register)] += w
        out = cls(amps, register)
        if normalize:
            nrm = out.norm()
            if nrm == 0:
                raise InvalidState("superposition has zero norm")
            out.amplitudes /= nrm
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, atol: float = 1e-10) -> bool:
        return abs(self.norm() - 1.0) <= atol

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), self.register)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, state: BasisState | str) -> complex:
        if isinstance(state, str):
            state = BasisState.from_label(state)
        return complex(self.amplitudes[encode(state, self.register)])

    def __repr__(self) -> str:
        return f"StateVector(dims={self.register.dims}, norm={self.norm():.6g})"


# array-level kernels; leading axis is the register, trailing axes are batch columns

def apply_local_array(arr: np.ndarray, dims: Sequence[int], site: int, U: np.ndarray) -> np.ndarray:
    dims = tuple(dims)
    if not 0 <= site < len(dims):
        raise InvalidSitePair(f"site {site} outside chain of {len(dims)} sites")
    U = np.asarray(U)
    if U.shape != (dims[site], dims[site]):
        raise ShapeError(f"operator shape {U.shape} does not match local dimension {dims[site]}")
    tail = arr.shape[1:]
    t = arr.reshape(dims + tail)
    t = np.tensordot(U, t, axes=([1], [site]))
    t = np.moveaxis(t, 0, site)
    return t.reshape(arr.shape)


def apply_two_site_array(
    arr: np.ndarray, dims: Sequence[int], site_a: int, site_b: int, U: np.ndarray
) -> np.ndarray:
    dims = tuple(dims)
    if site_a == site_b:
        raise InvalidSitePair("two-site operator needs distinct sites")
    for s in (site_a, site_b):
        if not 0 <= s < len(dims):
            raise InvalidSitePair(f"site {s} outside chain of {len(dims)} sites")
    da, db = dims[site_a], dims[site_b]
    U = np.asarray(U)
    if U.shape != (da * db, da * db):
        raise ShapeError(f"operator shape {U.shape} does not match local dimensions ({da}, {db})")
    tail = arr.shape[1:]
    t = arr.reshape(dims + tail)
    t = np.tensordot(U.reshape(da, db, da, db), t, axes=([2, 3], [site_a, site_b]))
    t = np.moveaxis(t, [0, 1], [site_a, site_b])
    return t.reshape(arr.shape)


def apply_local(state: StateVector, site: int, U: np.ndarray) -> StateVector:
    """Apply ``U`` to one site; ``U`` need not be unitary."""
    amps = apply_local_array(state.amplitudes, state.register.dims, site, U)
    return StateVector(amps, state.register)


def apply_two_site(state: StateVector, site_a: int, site_b: int, U: np.ndarray) -> StateVector:
    """Apply a two-site operator whose row index is ``digit_a * d_b + digit_b``."""
    amps = apply_two_site_array(state.amplitudes, state.register.dims, site_a, site_b, U)
    return StateVector(amps, state.register)


def populations(state: StateVector, tol: float = 0.0) -> dict[BasisState, float]:
    """Born probabilities of every basis state whose probability exceeds ``tol``."""
    probs = state.probabilities()
    return {decode(int(k), state.register): float(probs[k]) for k in np.flatnonzero(probs > tol)}


def embed_local(op: np.ndarray, dims: Sequence[int], site: int) -> np.ndarray:
    """Dense matrix of ``op`` acting on one site of the chain."""
    D = int(np.prod(dims))
    return apply_local_array(np.eye(D, dtype=np.complex128), dims, site, op)


def embed_two_site(op: np.ndarray, dims: Sequence[int], site_a: int, site_b: int) -> np.ndarray:
    D = int(np.prod(dims))
    return apply_two_site_array(np.eye(D, dtype=np.complex128), dims, site_a, site_b, op)


def indices_of(states: Iterable[BasisState], reg: MixedRadixRegister) -> np.ndarray:
    return np.array(sorted(encode(s, reg) for s in states), dtype=np.int64)
