"""Dense Hermitian kernel tests: closed forms first, then seeded sweeps."""

import numpy as np
import pytest

from gibbsfit import linalg

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def rand_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def rand_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_as_hermitian_symmetrizes_roundoff():
    rng = np.random.default_rng(0)
    h = rand_hermitian(rng, 6)
    dirty = h + 1e-12 * (rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    clean = linalg.as_hermitian(dirty)
    assert np.abs(clean - clean.conj().T).max() == 0.0


def test_as_hermitian_rejects():
    with pytest.raises(ValueError):
        linalg.as_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        linalg.as_hermitian(np.ones((2, 3)))


def test_as_density_gates():
    assert np.allclose(linalg.as_density(np.eye(2) / 2), np.eye(2) / 2)
    with pytest.raises(ValueError):
        linalg.as_density(np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        linalg.as_density(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_eigh_reconstruction_random():
    rng = np.random.default_rng(1)
    for d in (2, 4, 8, 16, 64):
        for _ in range(20):
            h = rand_hermitian(rng, d, scale=3.0)
            w, v = linalg.eigh(h)
            assert np.all(np.diff(w) >= 0)
            assert np.abs(v @ np.diag(w) @ v.conj().T - h).max() < 1e-12 * max(1, np.abs(w).max())
            assert np.abs(v.conj().T @ v - np.eye(d)).max() < 1e-13


def test_matrix_exp_closed_forms():
    # exp(a X) = cosh(a) I + sinh(a) X
    for a in (-2.0, 0.3, 1.7):
        e = linalg.matrix_exp(a * X)
        want = np.cosh(a) * np.eye(2) + np.sinh(a) * X
        assert np.abs(e - want).max() < 1e-13 * np.cosh(a)
    d = linalg.matrix_exp(np.diag([0.0, 1.0, -1.0]).astype(complex))
    assert np.abs(np.diag(d) - [1.0, np.e, 1 / np.e]).max() < 1e-15


def test_matrix_exp_overflow_rejected():
    with pytest.raises(OverflowError):
        linalg.matrix_exp(np.diag([800.0, 0.0]).astype(complex))


def test_log_trace_exp_values():
    assert linalg.log_trace_exp(np.zeros((8, 8))) == pytest.approx(3 * np.log(2), abs=1e-14)
    # log Tr exp(theta Z) = log 2cosh(theta)
    assert linalg.log_trace_exp(1.0 * Z) == pytest.approx(1.1269280110429725, abs=1e-14)
    # far beyond naive exp range: shift makes it exact
    assert linalg.log_trace_exp(np.diag([1000.0, -1000.0])) == 1000.0


def test_partial_trace_product_state():
    rng = np.random.default_rng(2)
    a, b, c = rand_density(rng, 2), rand_density(rng, 2), rand_density(rng, 2)
    rho = np.kron(np.kron(a, b), c)
    assert np.abs(linalg.partial_trace(rho, 3, (0,)) - a).max() < 1e-14
    assert np.abs(linalg.partial_trace(rho, 3, (1,)) - b).max() < 1e-14
    assert np.abs(linalg.partial_trace(rho, 3, (2,)) - c).max() < 1e-14
    assert np.abs(linalg.partial_trace(rho, 3, (0, 2)) - np.kron(a, c)).max() < 1e-14
    assert np.abs(linalg.partial_trace(rho, 3, (0, 1, 2)) - rho).max() == 0.0


def test_partial_trace_bell():
    bell = np.zeros((4, 4), dtype=complex)
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    for q in ((0,), (1,)):
        assert np.abs(linalg.partial_trace(bell, 2, q) - np.eye(2) / 2).max() < 1e-15


def brute_partial_trace(rho, n, keep):
    """Index-gymnastics oracle, O(4^n) loops."""
    keep = tuple(keep)
    drop = tuple(q for q in range(n) if q not in keep)
    k = len(keep)
    out = np.zeros((1 << k, 1 << k), dtype=complex)

    def bits(x, qubits):
        # qubit 0 is the most significant bit
        return tuple((x >> (n - 1 - q)) & 1 for q in qubits)

    def assemble(kept_bits, dropped_bits):
        x = 0
        for q, b in zip(keep, kept_bits):
            x |= b << (n - 1 - q)
        for q, b in zip(drop, dropped_bits):
            x |= b << (n - 1 - q)
        return x

    for r in range(1 << k):
        for c in range(1 << k):
            rb = tuple((r >> (k - 1 - i)) & 1 for i in range(k))
            cb = tuple((c >> (k - 1 - i)) & 1 for i in range(k))
            acc = 0.0
            for e in range(1 << len(drop)):
                eb = tuple((e >> (len(drop) - 1 - i)) & 1 for i in range(len(drop)))
                acc += rho[assemble(rb, eb), assemble(cb, eb)]
            out[r, c] = acc
    return out


def test_partial_trace_against_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        rho = rand_density(rng, 1 << n)
        size = int(rng.integers(1, n + 1))
        keep = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
        got = linalg.partial_trace(rho, n, keep)
        want = brute_partial_trace(rho, n, keep)
        assert np.abs(got - want).max() < 1e-12
        assert abs(np.trace(got).real - 1.0) < 1e-12


def test_entropy_bits():
    pure = np.zeros((4, 4), dtype=complex)
    pure[0, 0] = 1.0
    assert linalg.von_neumann_entropy(pure) == 0.0
    assert linalg.von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-14)
    assert linalg.von_neumann_entropy(np.eye(8) / 8) == pytest.approx(3.0, abs=1e-13)
    # additivity on product states
    rng = np.random.default_rng(4)
    a, b = rand_density(rng, 2), rand_density(rng, 4)
    s = linalg.von_neumann_entropy(np.kron(a, b))
    assert s == pytest.approx(
        linalg.von_neumann_entropy(a) + linalg.von_neumann_entropy(b), abs=1e-12
    )


def test_psd_modulus_and_power():
    m = linalg.psd_modulus(np.diag([3.0, -2.0]))
    assert np.abs(m - np.diag([3.0, 2.0])).max() < 1e-14
    rng = np.random.default_rng(5)
    a = rand_hermitian(rng, 5)
    p = a @ a.conj().T
    root = linalg.psd_power(p, 0.5)
    assert np.abs(root @ root - p).max() < 1e-12 * np.abs(p).max()
    with pytest.raises(ValueError):
        linalg.psd_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(ValueError):
        linalg.psd_power(np.eye(2), -1.0)


def test_norms_inner_distance():
    assert linalg.frobenius_norm(np.diag([3.0, 4.0])) == pytest.approx(5.0)
    assert linalg.hilbert_schmidt_inner(X, X) == pytest.approx(2.0)
    assert linalg.hilbert_schmidt_inner(X, Z) == pytest.approx(0.0)
    # orthogonal pure states are at trace distance 1
    assert linalg.trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
    assert linalg.trace_distance(np.eye(2) / 2, np.eye(2) / 2) == 0.0


def test_expm_directional_derivative_vs_finite_differences():
    rng = np.random.default_rng(6)
    eps = 1e-5
    for _ in range(30):
        d = int(rng.integers(2, 9))
        h = rand_hermitian(rng, d, scale=2.0)
        e = rand_hermitian(rng, d)
        got = linalg.expm_directional_derivative(h, e)
        fd = (linalg.matrix_exp(h + eps * e) - linalg.matrix_exp(h - eps * e)) / (2 * eps)
        rel = linalg.frobenius_norm(got - fd) / max(linalg.frobenius_norm(got), 1e-30)
        assert rel < 1e-6


def test_expm_directional_derivative_degenerate_and_trivial():
    # repeated eigenvalues take the confluent e^lambda branch
    h = np.diag([1.0, 1.0, 2.0]).astype(complex)
    e = linalg.as_hermitian(np.array([[0, 1, 0], [1, 0, 2], [0, 2, 0]], dtype=complex))
    got = linalg.expm_directional_derivative(h, e)
    fd = (linalg.matrix_exp(h + 1e-6 * e) - linalg.matrix_exp(h - 1e-6 * e)) / 2e-6
    assert np.abs(got - fd).max() < 1e-8
    # at H = 0 the derivative is the direction itself
    e4 = np.eye(4, dtype=complex)
    assert np.abs(linalg.expm_directional_derivative(np.zeros((4, 4)), e4) - e4).max() < 1e-14
    # commuting diagonal case: D = diag(e^h) * e entrywise on the diagonal
    hd = np.diag([0.5, -0.5]).astype(complex)
    ed = np.diag([2.0, 3.0]).astype(complex)
    want = np.diag([2.0 * np.exp(0.5), 3.0 * np.exp(-0.5)])
    assert np.abs(linalg.expm_directional_derivative(hd, ed) - want).max() < 1e-13


def schatten_norm(a, p):
    return float(np.trace(linalg.psd_power(linalg.psd_modulus(a), p)).real) ** (1.0 / p)


def test_trace_exponential_product_bound():
    # Tr e^{A+B} <= Tr e^A e^B, spot value 2cosh(sqrt 2) <= 2cosh(1)^2
    lhs = np.trace(linalg.matrix_exp(X + Z)).real
    rhs = np.trace(linalg.matrix_exp(X) @ linalg.matrix_exp(Z)).real
    assert lhs == pytest.approx(2 * np.cosh(np.sqrt(2)), abs=1e-12)
    assert rhs == pytest.approx(2 * np.cosh(1.0) ** 2, abs=1e-12)
    assert lhs <= rhs + 1e-9
    rng = np.random.default_rng(7)
    for _ in range(200):
        d = int(rng.integers(2, 7))
        a, b = rand_hermitian(rng, d), rand_hermitian(rng, d)
        l = np.trace(linalg.matrix_exp(a + b)).real
        r = np.trace(linalg.matrix_exp(a) @ linalg.matrix_exp(b)).real
        assert l <= r + 1e-9 * max(1.0, abs(r))


def test_trace_pairing_norm_bound():
    # |Tr(A B)| <= ||A||_p ||B||_q with 1/p + 1/q = 1
    rng = np.random.default_rng(8)
    for p in (1.5, 2.0, 3.0):
        q = p / (p - 1.0)
        for _ in range(60):
            d = int(rng.integers(2, 7))
            a, b = rand_hermitian(rng, d), rand_hermitian(rng, d)
            lhs = abs(np.trace(a @ b).real)
            rhs = schatten_norm(a, p) * schatten_norm(b, q)
            assert lhs <= rhs + 1e-9 * max(1.0, rhs)
