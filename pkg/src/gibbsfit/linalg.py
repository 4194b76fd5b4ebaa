"""Dense Hermitian linear-algebra kernels.

Every matrix function here is computed through one eigendecomposition
path (`numpy.linalg.eigh`); there is no Pade or scaling-and-squaring
branch.  Dimensions are capped at 4096 (12 qubits), which keeps dense
eigensolves on a desk-scale budget.

Conventions: entropies are reported in bits (base 2); log-partition
quantities use the natural log.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_QUBITS = 12
MAX_DIM = 2**MAX_QUBITS

# Frobenius-norm gate on the anti-Hermitian part when accepting a
# matrix as Hermitian.
HERMITIAN_ATOL = 1e-8

# Eigenvalue floor for accepting a matrix as positive semidefinite.
PSD_FLOOR = 1e-10

# exp() of an eigenvalue above this overflows double precision; callers
# that need larger arguments must shift first (see log_trace_exp).
EXP_CAP = 700.0

# Spacing below which the divided-difference kernel switches to its
# confluent limit exp(lambda_i).
_DD_SWITCH = 1e-8


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # unitary, columns


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def as_hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return the Hermitian part (A+A')/2 of a square matrix.

    Rejects the input outright when the anti-Hermitian part exceeds
    `atol` in Frobenius norm: round-off is tolerated, user error is not.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    skew = 0.5 * (a - a.conj().T)
    drift = float(np.linalg.norm(skew))
    if drift > atol:
        raise ValueError(
            f"matrix is not Hermitian: anti-Hermitian part has Frobenius "
            f"norm {drift:.3e} (gate {atol:g})"
        )
    return a - skew


def as_density(rho, trace_atol: float = 1e-10) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD.

    Returns the symmetrized matrix.  Trace must be 1 within
    `trace_atol`; the smallest eigenvalue must be >= -1e-10.
    """
    rho = as_hermitian(rho)
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1 within {trace_atol:g}")
    wmin = float(np.linalg.eigvalsh(rho)[0])
    if wmin < -PSD_FLOOR:
        raise ValueError(f"density matrix has negative eigenvalue {wmin:.3e}")
    return rho


def eigh(h) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    h = as_hermitian(h)
    if h.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {h.shape[0]} exceeds the dense cap {MAX_DIM}")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        off = h - np.diag(np.diag(h))
        raise ValueError(
            f"eigendecomposition failed at dim {h.shape[0]} "
            f"(max off-diagonal {np.abs(off).max():.3e}): {exc}"
        ) from exc
    return EigDecomposition(w, v)


def matrix_exp(h) -> np.ndarray:
    """exp(H) for Hermitian H via eigendecomposition.

    Rejects max eigenvalue > 700: shifting exp(H) = e^c exp(H - cI) is
    the caller's job (log_trace_exp does exactly that for traces).
    """
    w, v = eigh(h)
    if w[-1] > EXP_CAP:
        raise OverflowError(
            f"matrix_exp would overflow: max eigenvalue {w[-1]:.6g} > {EXP_CAP:g}"
        )
    return _sym((v * np.exp(w)) @ v.conj().T)


def log_trace_exp(h) -> float:
    """log Tr exp(H), computed as lmax + log sum exp(l - lmax).

    Safe for eigenvalues anywhere in +-1e6; diag(1000, -1000) gives
    exactly 1000.0 at double precision.
    """
    w = eigh(h).eigenvalues
    m = w[-1]
    return float(m + np.log(np.exp(w - m).sum()))


def partial_trace(rho, n: int, keep) -> np.ndarray:
    """Trace out all qubits not in `keep` from a 2^n-dimensional matrix.

    `keep` is a sorted set of 0-based qubit indices; qubit 0 is the
    leftmost (most significant) tensor factor.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    d = 1 << n
    if rho.shape != (d, d):
        raise ValueError(f"expected shape {(d, d)} for n={n}, got {rho.shape}")
    keep = tuple(keep)
    if len(set(keep)) != len(keep) or list(keep) != sorted(keep):
        raise ValueError(f"keep must be sorted and duplicate-free, got {keep}")
    if keep and (keep[0] < 0 or keep[-1] >= n):
        raise ValueError(f"keep index out of range for n={n}: {keep}")
    out = rho.reshape([2] * (2 * n))
    left = n
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        out = np.trace(out, axis1=q, axis2=q + left)
        left -= 1
    dk = 1 << len(keep)
    return out.reshape(dk, dk)


def von_neumann_entropy(rho) -> float:
    """Entropy -sum l log2 l in bits, with 0 log 0 := 0."""
    rho = as_density(rho)
    w = np.linalg.eigvalsh(rho)
    w = w[w > 0.0]
    return float(-(w @ np.log2(w))) + 0.0  # +0.0 normalizes -0.0 for pure states


def psd_modulus(a) -> np.ndarray:
    """|A|: the PSD square root of A'A, defined for any square matrix."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    w, v = eigh(a.conj().T @ a)
    w = np.sqrt(np.clip(w, 0.0, None))
    return _sym((v * w) @ v.conj().T)


def psd_power(a, p: float) -> np.ndarray:
    """A^p for PSD A and real p > 0."""
    if not p > 0:
        raise ValueError(f"power must be positive, got {p!r}")
    w, v = eigh(a)
    if w[0] < -PSD_FLOOR:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None) ** p
    return _sym((v * w) @ v.conj().T)


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def hilbert_schmidt_inner(a, b) -> complex:
    """Tr(A'B)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def trace_distance(rho, sigma) -> float:
    """(1/2) Tr|rho - sigma|."""
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    w = eigh(rho - sigma).eigenvalues
    return float(0.5 * np.abs(w).sum())


def divided_difference_kernel(w: np.ndarray) -> np.ndarray:
    """First divided differences of exp over an eigenvalue vector.

    K[i,j] = (exp w_i - exp w_j)/(w_i - w_j), with the confluent limit
    exp(w_i) taken when |w_i - w_j| < 1e-8.
    """
    w = np.asarray(w, dtype=np.float64)
    ew = np.exp(w)
    dif = w[:, None] - w[None, :]
    close = np.abs(dif) < _DD_SWITCH
    num = ew[:, None] - ew[None, :]
    den = np.where(close, 1.0, dif)
    return np.where(close, np.broadcast_to(ew[:, None], dif.shape), num / den)


def expm_directional_derivative(h, e) -> np.ndarray:
    """d/ds exp(H + sE) at s=0 for Hermitian H, E.

    Computed in H's eigenbasis through the divided-difference kernel;
    equals the Duhamel integral of exp((1-u)H) E exp(uH) over u in [0,1].
    """
    e = as_hermitian(e)
    w, v = eigh(h)
    if e.shape != v.shape:
        raise ValueError(f"shape mismatch: {e.shape} vs {v.shape}")
    if w[-1] > EXP_CAP:
        raise OverflowError(
            f"directional derivative would overflow: max eigenvalue "
            f"{w[-1]:.6g} > {EXP_CAP:g}"
        )
    ep = v.conj().T @ e @ v
    return _sym(v @ (divided_difference_kernel(w) * ep) @ v.conj().T)
