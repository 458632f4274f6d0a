"""Quantum registers of detector qubits and sparse labstates over them.

Basis indices are little-endian bitmasks: qubit ``k`` fired contributes
``2**k``. A signal monomial (a product of distinct creation operators
applied to the void) is stored as a strictly ascending tuple of qubit
indices and maps one-to-one onto a basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import (
    ArgumentError,
    DimensionError,
    NormalizationError,
    OutOfRangeError,
)

MAX_RANK = 64

#: Default tolerance on the norm of a state passed to :func:`born_probability`.
NORM_TOL = 1e-9

Monomial = tuple  # strictly ascending tuple[int, ...]


@dataclass(frozen=True)
class RegisterSpec:
    """A register of ``rank`` qubits, ``Q_0 .. Q_{rank-1}``."""

    rank: int

    def __post_init__(self):
        if isinstance(self.rank, bool) or not isinstance(self.rank, int):
            raise ArgumentError(f"register rank must be an int, got {self.rank!r}")
        if not 1 <= self.rank <= MAX_RANK:
            raise ArgumentError(f"register rank must be in [1, {MAX_RANK}], got {self.rank}")

    @property
    def dimension(self) -> int:
        return 1 << self.rank

    def check_qubit(self, k: int) -> None:
        if not 0 <= k < self.rank:
            raise OutOfRangeError(f"qubit index {k} out of range for rank {self.rank}")

    def check_index(self, a: int) -> None:
        if not 0 <= a < self.dimension:
            raise OutOfRangeError(f"basis index {a} out of range for rank {self.rank}")


def _as_register(register) -> RegisterSpec:
    if isinstance(register, RegisterSpec):
        return register
    return RegisterSpec(register)


def canonical_monomial(indices: Iterable[int]) -> Monomial:
    """Return ``indices`` as a canonical (strictly ascending) monomial.

    Raises ArgumentError on repeated or negative indices.
    """
    out = tuple(sorted(int(i) for i in indices))
    if any(i < 0 for i in out):
        raise ArgumentError(f"negative qubit index in monomial {out}")
    if len(set(out)) != len(out):
        raise ArgumentError(f"repeated qubit index in monomial {out}")
    return out


def encode_monomial(monomial: Sequence[int], register) -> int:
    register = _as_register(register)
    mask = 0
    for k in monomial:
        register.check_qubit(k)
        bit = 1 << k
        if mask & bit:
            raise ArgumentError(f"repeated qubit index {k} in monomial")
        mask |= bit
    return mask


def decode_index(index: int) -> Monomial:
    """Inverse of :func:`encode_monomial`: the fired qubits of a basis index."""
    if index < 0:
        raise OutOfRangeError(f"negative basis index {index}")
    out = []
    k = 0
    while index:
        if index & 1:
            out.append(k)
        index >>= 1
        k += 1
    return tuple(out)


def mask_of(monomial: Sequence[int]) -> int:
    """Bitmask of a monomial with no register bound check."""
    mask = 0
    for k in monomial:
        mask |= 1 << k
    return mask


@dataclass(frozen=True)
class Labstate:
    """Sparse complex amplitude vector over the basis of one register.

    Exact zeros are dropped on construction; nothing else is pruned.
    """

    register: RegisterSpec
    amplitudes: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        register = _as_register(self.register)
        clean = {}
        for a, c in self.amplitudes.items():
            register.check_index(a)
            c = complex(c)
            if c != 0:
                clean[int(a)] = c
        object.__setattr__(self, "register", register)
        object.__setattr__(self, "amplitudes", MappingProxyType(clean))

    @property
    def rank(self) -> int:
        return self.register.rank

    def amplitude(self, index: int) -> complex:
        return self.amplitudes.get(index, 0j)

    def norm_squared(self) -> float:
        return math.fsum(abs(c) ** 2 for c in self.amplitudes.values())

    def is_zero(self) -> bool:
        return not self.amplitudes

    def support(self) -> list[int]:
        return sorted(self.amplitudes)

    def __eq__(self, other):
        if not isinstance(other, Labstate):
            return NotImplemented
        return self.register == other.register and dict(self.amplitudes) == dict(other.amplitudes)

    def __hash__(self):
        return hash((self.register, frozenset(self.amplitudes.items())))

    def __add__(self, other: Labstate) -> Labstate:
        _same_register(self, other)
        out = dict(self.amplitudes)
        for a, c in other.amplitudes.items():
            out[a] = out.get(a, 0j) + c
        return Labstate(self.register, out)

    def __mul__(self, scalar) -> Labstate:
        scalar = complex(scalar)
        return Labstate(self.register, {a: scalar * c for a, c in self.amplitudes.items()})

    __rmul__ = __mul__

    def __repr__(self):
        terms = ", ".join(f"{a}: {c:.6g}" for a, c in sorted(self.amplitudes.items()))
        return f"Labstate(rank={self.rank}, {{{terms}}})"


def _same_register(x: Labstate, y: Labstate) -> None:
    if x.register != y.register:
        raise DimensionError(f"register mismatch: rank {x.rank} vs rank {y.rank}")


def void_state(register) -> Labstate:
    """The idle-apparatus state ``|0...0)``."""
    return Labstate(_as_register(register), {0: 1.0 + 0j})


def basis_state(register, monomial: Sequence[int], amplitude: complex = 1.0) -> Labstate:
    register = _as_register(register)
    return Labstate(register, {encode_monomial(monomial, register): amplitude})


def apply_creation(k: int, state: Labstate) -> Labstate:
    """Fire qubit ``k``: ``A+_k = |1)_k(0|`` tensored with identities.

    Terms where qubit ``k`` is already fired are annihilated, so the result
    may be the zero vector.
    """
    state.register.check_qubit(k)
    bit = 1 << k
    return Labstate(
        state.register,
        {a | bit: c for a, c in state.amplitudes.items() if not a & bit},
    )


def prepare(register, monomial: Sequence[int]) -> Labstate:
    """Apply the creation operators of ``monomial`` to the void state."""
    state = void_state(register)
    for k in monomial:
        state = apply_creation(k, state)
    return state


def inner_product(x: Labstate, y: Labstate) -> complex:
    """``(x|y)``, conjugate-linear in ``x``."""
    _same_register(x, y)
    if len(x.amplitudes) > len(y.amplitudes):
        small, large, flip = y.amplitudes, x.amplitudes, True
    else:
        small, large, flip = x.amplitudes, y.amplitudes, False
    total = 0j
    for a in sorted(small):
        if a in large:
            xa, ya = (large[a], small[a]) if flip else (small[a], large[a])
            total += xa.conjugate() * ya
    return total


def born_probability(state: Labstate, outcome: Sequence[int], tol: float = NORM_TOL) -> float:
    """Probability that exactly the qubits in ``outcome`` have fired."""
    index = encode_monomial(outcome, state.register)
    norm2 = state.norm_squared()
    if abs(norm2 - 1.0) > tol:
        raise NormalizationError(f"state has squared norm {norm2!r}, expected 1")
    return abs(state.amplitude(index)) ** 2


def rank_subset(register, p: int) -> list[int]:
    """All basis indices of ``register`` with exactly ``p`` fired qubits, ascending."""
    register = _as_register(register)
    if not 0 <= p <= register.rank:
        raise ArgumentError(f"p={p} out of range [0, {register.rank}]")
    return sorted(mask_of(c) for c in combinations(range(register.rank), p))


@dataclass(frozen=True)
class Outcome:
    monomial: Monomial
    basis_index: int
    amplitude: complex
    probability: float


@dataclass(frozen=True)
class ProbabilityTable:
    """Outcome monomials with their final amplitudes and Born probabilities.

    Entries are sorted by basis index.
    """

    rank: int
    entries: tuple

    @classmethod
    def from_state(cls, state: Labstate) -> ProbabilityTable:
        entries = tuple(
            Outcome(decode_index(a), a, c, abs(c) ** 2)
            for a, c in sorted(state.amplitudes.items())
        )
        return cls(state.rank, entries)

    def probability(self, monomial: Sequence[int]) -> float:
        index = mask_of(monomial)
        for e in self.entries:
            if e.basis_index == index:
                return e.probability
        return 0.0

    def as_dict(self) -> dict:
        return {e.monomial: e.probability for e in self.entries}

    def total(self) -> float:
        return math.fsum(e.probability for e in self.entries)

    def restrict(self, monomials: Iterable[Sequence[int]]) -> ProbabilityTable:
        """Table over exactly ``monomials``; absent outcomes get amplitude 0."""
        by_index = {e.basis_index: e for e in self.entries}
        out = {}
        for m in monomials:
            m = canonical_monomial(m)
            a = mask_of(m)
            out[a] = by_index.get(a, Outcome(m, a, 0j, 0.0))
        return ProbabilityTable(self.rank, tuple(out[a] for a in sorted(out)))

    def marginal(self, qubits: Iterable[int]) -> dict:
        """Sum probabilities over every qubit not in ``qubits``."""
        keep = mask_of(sorted(set(qubits)))
        acc: dict[int, list] = {}
        for e in self.entries:
            acc.setdefault(e.basis_index & keep, []).append(e.probability)
        return {decode_index(a): math.fsum(ps) for a, ps in sorted(acc.items())}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)
