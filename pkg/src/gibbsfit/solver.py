"""Maximum-entropy fitting of Gibbs states to expectation targets.

The translated objective f(theta) = log Tr exp(sum theta_i (T_i - t_i I))
is smooth and convex with gradient <T_i> - t_i, so the minimizer (when
one exists) is exactly the theta whose Gibbs state reproduces the
targets.  Targets on the boundary of the achievable set push the
minimum off to infinity; those runs must terminate with a status that
says so rather than a bogus certificate.

Boundary detection is structural, not numeric: a target pinned to an
endpoint of its observable's spectral interval has no full-rank witness,
so such problems are flagged up front and never reported as Converged —
the iteration runs until the theta cap or until the gradient underflows
to exact zero.  Interior-infeasible problems drift to the cap on their
own because the residual stays bounded away from zero.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import linalg, pauli, problem as problem_mod
from .partition import GibbsState, ObservableSet
from .problem import (
    ExpectationProblem,
    IncompatibleMarginalsError,
    MarginalProblem,
    check_independence,
    check_local_compatibility,
    reduce_to_expectations,
    spectral_interval,
    translate_to_zero,
)

CONVERGED = "Converged"
BOUNDARY = "BoundaryOrInfeasible"
ITERATION_LIMIT = "IterationLimit"

_ARMIJO_C = 1e-4
_STEP_FLOOR = 1e-18
_CURVATURE_FLOOR = 1e-12
_MAX_RESTARTS = 3


class DependentObservablesError(ValueError):
    """{I, T_1..T_r} fails the Gram rank check; the fit is ill-posed."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            "observables are linearly dependent (with identity): Gram eigenvalue "
            f"range [{report.min_eigenvalue:.3e}, {report.max_eigenvalue:.3e}]"
        )


@dataclass(frozen=True)
class SolveOptions:
    grad_tol: float = 1e-8
    max_iter: int = 5000
    theta_cap: float = 50.0
    seed: int = 0
    memory: int = 10
    refine: bool = False
    keep_trace: bool = True
    theta0: np.ndarray | None = None

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not self.theta_cap > 1:
            raise ValueError("theta_cap must exceed 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SolveResult:
    status: str
    theta: np.ndarray
    residuals: np.ndarray
    iterations: int
    psi: float
    entropy_bits: float
    gibbs: GibbsState | None = None
    trace: list = field(default_factory=list)  # max |residual| per iteration
    local_terms: dict | None = None
    marginal_distances: tuple | None = None
    message: str = ""

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


@dataclass(frozen=True)
class VerificationReport:
    residuals: np.ndarray
    max_residual: float
    psi: float
    entropy_bits: float
    min_eigenvalue: float
    tol: float
    ok: bool
    marginal_distances: tuple | None = None


def _extreme_target_mask(ep: ExpectationProblem) -> np.ndarray:
    """True where t_i sits at (or beyond) an endpoint of spec(T_i).

    Endpoint targets admit no strictly positive witness: only singular
    states can reach them, so no Gibbs state ever will.
    """
    mask = np.zeros(ep.size, dtype=bool)
    for i, op in enumerate(ep.observables):
        lo, hi = spectral_interval(op, ep.shifts[i])
        scale = max(abs(lo), abs(hi), 1.0)
        tol = 1e-12 * scale
        t = ep.targets[i]
        if t >= hi - tol or t <= lo + tol:
            mask[i] = True
    return mask


def _armijo(theta, f, grad, direction, residual_fn):
    """Backtracking line search on f; returns (theta, f, grad, step) or
    None when the step floor is hit without decrease."""
    slope = float(grad @ direction)
    if slope >= 0:
        return None
    step = 1.0
    while step >= _STEP_FLOOR:
        cand = theta + step * direction
        f_new, g_new = residual_fn(cand)
        if f_new <= f + _ARMIJO_C * step * slope:
            return cand, f_new, g_new, step
        step *= 0.5
    return None


def solve_expectations(ep: ExpectationProblem, options: SolveOptions | None = None) -> SolveResult:
    """Minimize the translated log-partition f(theta) = psi(theta) - theta.t
    with L-BFGS; grad f_i = <T_i>_theta - t_i is the residual vector."""
    options = options or SolveOptions()
    rank = check_independence(ep)
    if not rank.independent:
        raise DependentObservablesError(rank)

    work = translate_to_zero(ep)  # grad of psi' IS the residual vector
    obset = ObservableSet(work.observables, shifts=work.shifts, dim=work.dim, n=work.n)
    original = ObservableSet(ep.observables, shifts=ep.shifts, dim=ep.dim, n=ep.n)
    targets = ep.targets
    flagged = bool(_extreme_target_mask(ep).any())
    r = ep.size

    def f_and_g(theta):
        psi, grad, _ = obset.psi_grad_state(theta)
        return psi, grad

    theta = (
        np.zeros(r)
        if options.theta0 is None
        else np.asarray(options.theta0, dtype=np.float64).copy()
    )
    f, grad = f_and_g(theta)
    trace: list[float] = []
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    restarts = 0
    rng = np.random.default_rng(options.seed)
    status = ITERATION_LIMIT
    message = ""
    iterations = 0

    for it in range(1, options.max_iter + 1):
        iterations = it
        gmax = float(np.max(np.abs(grad)))
        if options.keep_trace:
            trace.append(gmax)
        if gmax <= options.grad_tol and not flagged:
            status = CONVERGED
            iterations = it - 1
            break
        if flagged and gmax == 0.0:
            # Exponents saturated: the iterate is numerically singular and
            # the true optimum is at infinity.
            status = BOUNDARY
            message = "gradient underflowed to zero while chasing an extreme target"
            break
        if float(np.max(np.abs(theta))) > options.theta_cap:
            status = BOUNDARY
            message = f"|theta|_inf exceeded cap {options.theta_cap} with residual {gmax:.3e}"
            break

        direction = None
        if options.refine and not flagged and gmax < 1e-3:
            # near the optimum the Hessian is cheap insurance: one damped
            # Newton step per iteration finishes in a few rounds
            hess = obset.hessian(theta)
            try:
                direction = np.linalg.solve(hess + 1e-12 * np.eye(r), -grad)
            except np.linalg.LinAlgError:
                direction = None
        used_steepest = False
        if direction is None:
            # two-loop recursion over stored curvature pairs
            q = grad.copy()
            alphas = []
            for s, y in zip(reversed(s_hist), reversed(y_hist)):
                a = float(s @ q) / float(y @ s)
                alphas.append(a)
                q -= a * y
            if y_hist:
                gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
                q *= gamma
            for (s, y), a in zip(zip(s_hist, y_hist), reversed(alphas)):
                b = float(y @ q) / float(y @ s)
                q += s * (a - b)
            direction = -q
        if float(grad @ direction) >= 0:
            direction = -grad  # stale memory produced an ascent direction
            used_steepest = True

        moved = _armijo(theta, f, grad, direction, f_and_g)
        if moved is None and not used_steepest:
            moved = _armijo(theta, f, grad, -grad, f_and_g)
        if moved is None:
            if flagged:
                # An extreme target drives the optimum to infinity; the
                # objective has saturated at float resolution, which is as
                # much of a certificate as finite arithmetic produces.
                status = BOUNDARY
                message = (
                    "objective saturated at float resolution while chasing an "
                    f"extreme target (residual {gmax:.3e})"
                )
                break
            # restart ladder: drop memory, then perturb the iterate
            s_hist.clear()
            y_hist.clear()
            if restarts >= _MAX_RESTARTS:
                message = "line search stalled"
                break
            restarts += 1
            bump = rng.normal(scale=1e-6 * (1.0 + np.abs(theta)))
            theta = theta + bump
            f, grad = f_and_g(theta)
            continue

        theta_new, f_new, grad_new, _ = moved
        s = theta_new - theta
        y = grad_new - grad
        sy = float(s @ y)
        if sy > _CURVATURE_FLOOR * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > options.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        theta, f, grad = theta_new, f_new, grad_new

    psi_orig, expect, rho = original.psi_grad_state(theta)
    residuals = expect - targets
    entropy = linalg.von_neumann_entropy(rho)
    gibbs = original.gibbs(theta) if status == CONVERGED else None
    return SolveResult(
        status=status,
        theta=theta,
        residuals=residuals,
        iterations=iterations,
        psi=psi_orig,
        entropy_bits=entropy,
        gibbs=gibbs,
        trace=trace,
        message=message,
    )


def solve_marginals(mp: MarginalProblem, options: SolveOptions | None = None) -> SolveResult:
    """Reduce marginals to Pauli expectations and fit; attaches the
    per-subset Hamiltonian decomposition and achieved marginal distances
    on success."""
    report = check_local_compatibility(mp)
    if report.verdict != problem_mod.COMPATIBLE:
        raise IncompatibleMarginalsError(report)
    ep = reduce_to_expectations(mp)
    result = solve_expectations(ep, options)
    if result.status != CONVERGED:
        return result
    strings = [op for op in ep.observables]
    local = decompose_local_terms(result.theta, strings, mp.subsets)
    dists = []
    for qubits, rho_target in mp.constraints:
        achieved = linalg.partial_trace(result.gibbs.rho, mp.n, qubits)
        dists.append((qubits, float(linalg.trace_distance(achieved, rho_target))))
    return dataclasses.replace(result, local_terms=local, marginal_distances=tuple(dists))


def decompose_local_terms(theta, strings, subsets) -> dict:
    """Split H = sum theta_P P into per-subset local Hamiltonians.

    Each string lands in the lowest-indexed subset containing its
    support, so sum_i embed(H_i) == H exactly (same floats, no
    double-counting).
    """
    subsets = [tuple(s) for s in subsets]
    locals_: dict[tuple, np.ndarray] = {
        s: np.zeros((1 << len(s), 1 << len(s)), dtype=np.complex128) for s in subsets
    }
    for coeff, p in zip(theta, strings):
        support = set(p.support)
        home = None
        for s in subsets:
            if support <= set(s):
                home = s
                break
        if home is None:
            raise ValueError(f"string '{p}' is not supported on any subset")
        local = pauli.restrict(p, home)
        perm, phase = pauli.perm_phase(local)
        block = locals_[home]
        block[perm, np.arange(len(perm))] += coeff * phase
    return locals_


def verify(
    result_or_theta,
    prob,
    tol: float = 1e-8,
) -> VerificationReport:
    """Recompute everything from theta alone and compare against the
    problem's targets; trusts nothing else in the result."""
    theta = (
        result_or_theta.theta if isinstance(result_or_theta, SolveResult) else result_or_theta
    )
    theta = np.asarray(theta, dtype=np.float64)
    marginal = isinstance(prob, MarginalProblem)
    ep = reduce_to_expectations(prob) if marginal else prob
    obset = ObservableSet(ep.observables, shifts=ep.shifts, dim=ep.dim, n=ep.n)
    psi, expect, rho = obset.psi_grad_state(theta)
    residuals = expect - ep.targets
    entropy = linalg.von_neumann_entropy(rho)
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    dists = None
    if marginal:
        pairs = []
        for qubits, rho_target in prob.constraints:
            achieved = linalg.partial_trace(rho, prob.n, qubits)
            pairs.append((qubits, float(linalg.trace_distance(achieved, rho_target))))
        dists = tuple(pairs)
    max_res = float(np.max(np.abs(residuals)))
    return VerificationReport(
        residuals=residuals,
        max_residual=max_res,
        psi=psi,
        entropy_bits=entropy,
        min_eigenvalue=min_eig,
        tol=tol,
        ok=bool(max_res <= tol and min_eig >= -linalg.PSD_FLOOR),
        marginal_distances=dists,
    )
