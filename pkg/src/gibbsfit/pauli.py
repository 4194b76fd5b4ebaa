"""Symbolic n-qubit Pauli strings and their dense realizations.

Strings are stored symbolically as (qubit index, letter) pairs and only
materialized on demand: marginal reductions can involve hundreds of
strings, and deduplication across overlapping subsets has to be exact,
not numeric.

Qubit 0 is the leftmost tensor factor (most significant bit of the
basis index).  Indices are 0-based everywhere.  Text form: "X0 Z2",
letter+index tokens in ascending order; the empty string is the
identity.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

from . import linalg

_LETTERS = frozenset("XYZ")
_TOKEN = re.compile(r"^([XYZ])(\d+)$")


@dataclass(frozen=True, eq=False)
class PauliString:
    """A k-local Pauli operator on an n-qubit register.

    `letters` holds (qubit, letter) pairs in ascending qubit order;
    qubits not listed carry the identity.  Equality and hashing look at
    the letters only, so the same physical operator embedded in wider
    registers compares equal — that is what makes symbolic dedup across
    overlapping subsets work.
    """

    n: int
    letters: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        object.__setattr__(self, "letters", tuple((int(q), str(c)) for q, c in self.letters))
        prev = -1
        for q, c in self.letters:
            if c not in _LETTERS:
                raise ValueError(f"bad Pauli letter {c!r}")
            if q <= prev:
                raise ValueError(f"qubit indices must be strictly ascending, got {self.letters}")
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range for n={self.n}")
            prev = q

    @classmethod
    def make(cls, n: int, letters: Mapping[int, str] | Iterable[tuple[int, str]]) -> "PauliString":
        items = letters.items() if isinstance(letters, Mapping) else letters
        return cls(n, tuple(sorted((q, c) for q, c in items)))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.letters)

    @property
    def is_identity(self) -> bool:
        return not self.letters

    @property
    def weight(self) -> int:
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, PauliString) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __str__(self):
        return " ".join(f"{c}{q}" for q, c in self.letters)


def identity(n: int) -> PauliString:
    return PauliString(n)


def parse_label(text: str, n: int) -> PauliString:
    """Parse the canonical text form, e.g. "X0 Z2".  "" is the identity."""
    letters = []
    for token in text.split():
        m = _TOKEN.match(token)
        if m is None:
            raise ValueError(f"bad Pauli token {token!r} (expected letter+index like 'X0')")
        letters.append((int(m.group(2)), m.group(1)))
    indices = [q for q, _ in letters]
    if indices != sorted(set(indices)):
        raise ValueError(f"qubit indices must be ascending and unique in {text!r}")
    return PauliString(n, tuple(letters))


@lru_cache(maxsize=None)
def _perm_phase(n: int, letters: tuple[tuple[int, str], ...]):
    """Signed-permutation form: column j has its nonzero at row perm[j],
    value phase[j].  O(2^n) to build, cached per (n, letters)."""
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    phase = np.ones(dim, dtype=np.complex128)
    flip = 0
    for q, c in letters:
        shift = n - 1 - q
        bit = (idx >> shift) & 1
        if c == "X":
            flip |= 1 << shift
        elif c == "Y":
            flip |= 1 << shift
            phase = phase * (1j * (1 - 2 * bit))
        else:  # Z
            phase = phase * (1.0 - 2 * bit)
    perm = idx ^ flip
    perm.flags.writeable = False
    phase.flags.writeable = False
    return perm, phase


def perm_phase(p: PauliString):
    if p.n > linalg.MAX_QUBITS:
        raise ValueError(f"n={p.n} exceeds the {linalg.MAX_QUBITS}-qubit cap")
    return _perm_phase(p.n, p.letters)


def materialize(p: PauliString) -> np.ndarray:
    """Dense 2^n matrix of the string (Hermitian, unitary, involutory)."""
    perm, phase = perm_phase(p)
    d = perm.shape[0]
    m = np.zeros((d, d), dtype=np.complex128)
    m[perm, np.arange(d)] = phase
    return m


def pauli_trace(p: PauliString, a: np.ndarray) -> complex:
    """Tr(P A) without materializing P."""
    perm, phase = perm_phase(p)
    d = perm.shape[0]
    a = np.asarray(a)
    if a.shape != (d, d):
        raise ValueError(f"expected shape {(d, d)}, got {a.shape}")
    return complex(phase @ a[np.arange(d), perm])


def embed(p: PauliString, n: int) -> PauliString:
    """Widen the register to n qubits (P -> P tensor I), keeping letters."""
    if p.letters and p.letters[-1][0] >= n:
        raise ValueError(f"support {p.support} does not fit in n={n}")
    return PauliString(n, p.letters)


def relabel(p: PauliString, qubits, n: int) -> PauliString:
    """Map a local string on len(qubits) qubits onto the global indices
    `qubits` (strictly ascending) of an n-qubit register."""
    qubits = tuple(qubits)
    if len(qubits) != p.n:
        raise ValueError(f"expected {p.n} target qubits, got {len(qubits)}")
    return PauliString(n, tuple((qubits[q], c) for q, c in p.letters))


def restrict(p: PauliString, qubits) -> PauliString:
    """Inverse of relabel: re-index a string supported inside `qubits`
    onto the local register 0..len(qubits)-1."""
    qubits = tuple(qubits)
    pos = {q: i for i, q in enumerate(qubits)}
    if not set(p.support) <= set(qubits):
        raise ValueError(f"support {p.support} not contained in {qubits}")
    return PauliString(len(qubits), tuple((pos[q], c) for q, c in p.letters))


def strings_on(qubits, n: int, include_identity: bool = False) -> Iterator[PauliString]:
    """All Pauli strings supported on `qubits` of an n-qubit register,
    in a fixed deterministic order (last qubit varies fastest)."""
    qubits = tuple(qubits)
    for combo in itertools.product("IXYZ", repeat=len(qubits)):
        letters = tuple((q, c) for q, c in zip(qubits, combo) if c != "I")
        if letters or include_identity:
            yield PauliString(n, letters)


@dataclass(frozen=True, eq=False)
class PauliExpansion:
    n: int
    coefficients: dict  # PauliString -> float


def expand(rho) -> PauliExpansion:
    """Hilbert-Schmidt expansion: alpha_P = Tr(P rho)/2^k.

    Coefficients with |alpha| < 1e-14 are dropped; a coefficient with
    imaginary part above 1e-10 means the input was not Hermitian.
    """
    rho = linalg.as_hermitian(rho)
    d = rho.shape[0]
    k = d.bit_length() - 1
    if 1 << k != d:
        raise ValueError(f"dimension {d} is not a power of 2")
    if k > linalg.MAX_QUBITS:
        raise ValueError(f"n={k} exceeds the {linalg.MAX_QUBITS}-qubit cap")
    coeffs = {}
    for p in strings_on(tuple(range(k)), k, include_identity=True):
        val = pauli_trace(p, rho) / d
        if abs(val.imag) > 1e-10:
            raise ValueError(f"non-real coefficient {val!r} for {str(p) or 'identity'}")
        if abs(val.real) >= 1e-14:
            coeffs[p] = float(val.real)
    return PauliExpansion(k, coeffs)


def reconstruct(e: PauliExpansion) -> np.ndarray:
    """Dense sum_P alpha_P P; the inverse of expand."""
    d = 1 << e.n
    m = np.zeros((d, d), dtype=np.complex128)
    cols = np.arange(d)
    for p, alpha in e.coefficients.items():
        perm, phase = _perm_phase(e.n, p.letters)
        m[perm, cols] += alpha * phase
    return m


def marginal_from_expectations(targets: Mapping[PauliString, float], qubits) -> tuple[np.ndarray, bool]:
    """Build rho = sum_P (t_P/2^k) P on the subset `qubits` from Pauli
    expectation targets (identity coefficient fixed to 1).

    Keys may be global strings supported inside `qubits` or already
    local.  Returns (matrix, psd_flag): the matrix is Hermitian with
    unit trace by construction, but fails PSD when the targets are not
    realizable — the flag reports that.
    """
    qubits = tuple(qubits)
    if list(qubits) != sorted(set(qubits)):
        raise ValueError(f"qubits must be sorted and duplicate-free, got {qubits}")
    k = len(qubits)
    d = 1 << k
    rho = np.eye(d, dtype=np.complex128) / d
    cols = np.arange(d)
    for p, t in targets.items():
        if p.is_identity:
            if abs(float(t) - 1.0) > 1e-9:
                raise ValueError(f"identity target must be 1, got {t!r}")
            continue
        loc = restrict(p, qubits)
        perm, phase = perm_phase(loc)
        rho[perm, cols] += (float(t) / d) * phase
    wmin = float(np.linalg.eigvalsh(rho)[0])
    return rho, bool(wmin >= -linalg.PSD_FLOOR)
