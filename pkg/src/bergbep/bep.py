"""Bounded extremal problem solver in the truncated Bergman space.

Given a partition of the disc into K and J = D \\ closure(K), data h_K,
h_J and a budget M, the solver finds the degree-N analytic g0 minimizing
||h_K - g0|| on K subject to ||h_J - g0|| <= M on J.  The optimum solves

    (I + lambda T_J) g0 = P(h_K v (1 + lambda) h_J)

for the unique lambda in (-1, inf) saturating the constraint when the
data is not attainable; lambda is located by bracketed bisection on the
constraint error e(lambda), which is monotone non-increasing (verified
at runtime).  The discrete problem uses one consistent set of quadrature
Gram matrices and data moments, so the Karush-Kuhn-Tucker residual of a
returned solution is rounding-level by construction.

An independent oracle solves the same finite problem as a norm-
constrained least squares via eigendecomposition of the J-Gram and a
Brent root-find on the Karush-Kuhn-Tucker multiplier mu = 1 + lambda.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bergman import AnalyticCoeffs, basis_matrix
from .grid import GridFunction, Region

logger = logging.getLogger("bergbep")

_LAMBDA_FLOOR = -1.0 + 1e-9
_MAX_EXPANSIONS = 80
_MAX_BISECTIONS = 200


class InfeasibleProblemError(ValueError):
    """The constraint level M is below the distance of h_J to the span."""


class ConvergenceError(RuntimeError):
    """The multiplier search failed (bracket exhausted or non-monotone)."""


def _pinv_solve(matrix: np.ndarray, rhs: np.ndarray, rcond: float = 1e-12):
    """Hermitian positive-semidefinite solve with eigenvalue cutoff."""
    vals, vecs = np.linalg.eigh(matrix)
    top = vals.max(initial=0.0)
    keep = vals > rcond * top if top > 0.0 else np.zeros_like(vals, dtype=bool)
    y = vecs.conj().T @ rhs
    y = np.where(keep, y / np.where(keep, vals, 1.0), 0.0)
    return vecs @ y, int(np.count_nonzero(~keep))


@dataclass(eq=False)
class BepProblem:
    """Data for the bounded extremal problem on a partition K | J."""

    k_region: Region
    j_region: Region
    h_k: GridFunction
    h_j: GridFunction
    m: float
    degree: int

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError(f"constraint level M must be positive, got {self.m}")
        self.h_k._check_same_grid(self.h_j)
        grid = self.h_k.grid
        gap = np.max(
            np.abs(self.k_region.weights(grid) + self.j_region.weights(grid) - grid.weights)
        )
        if gap > 1e-12:
            raise ValueError(f"K and J do not partition the disc (defect {gap:.2e})")
        if self.k_region.node_count(grid) == 0:
            raise ValueError("region K carries no grid nodes")
        if self.j_region.node_count(grid) == 0:
            raise ValueError("region J carries no grid nodes")

    @property
    def grid(self):
        return self.h_k.grid


@dataclass(eq=False)
class BepSolution:
    """Approximant, saturation multiplier and diagnostics."""

    g0: AnalyticCoeffs
    lam: float
    err_k: float
    err_j: float
    kkt_residual: float
    iterations: int
    feasibility: float
    saturated: bool
    degree_gap: float | None = None


class _Discrete:
    """One consistent quadrature discretization of a BEP instance."""

    def __init__(self, problem: BepProblem):
        grid = problem.grid
        self.problem = problem
        self.e = basis_matrix(grid, problem.degree)
        self.w_k = problem.k_region.weights(grid).ravel()
        self.w_j = problem.j_region.weights(grid).ravel()
        self.hk = problem.h_k.values.ravel()
        self.hj = problem.h_j.values.ravel()
        self.b_k = self.e.conj().T @ (self.w_k * self.hk)
        self.b_j = self.e.conj().T @ (self.w_j * self.hj)
        g_k = self.e.conj().T @ (self.w_k[:, None] * self.e)
        g_j = self.e.conj().T @ (self.w_j[:, None] * self.e)
        self.g_k = (g_k + g_k.conj().T) / 2.0
        self.g_j = (g_j + g_j.conj().T) / 2.0
        self.eye = np.eye(problem.degree + 1)

    def coeffs_at(self, lam: float) -> np.ndarray:
        if lam <= -1.0:
            raise ValueError(f"lambda must exceed -1, got {lam}")
        return np.linalg.solve(self.eye + lam * self.g_j, self.b_k + (1.0 + lam) * self.b_j)

    def err_j(self, c: np.ndarray) -> float:
        resid = self.e @ c - self.hj
        return float(np.sqrt(np.sum(self.w_j * np.abs(resid) ** 2)))

    def err_k(self, c: np.ndarray) -> float:
        resid = self.e @ c - self.hk
        return float(np.sqrt(np.sum(self.w_k * np.abs(resid) ** 2)))

    def kkt_residual(self, c: np.ndarray, mu: float) -> float:
        vec = (self.g_k @ c - self.b_k) + mu * (self.g_j @ c - self.b_j)
        return float(np.linalg.norm(vec))

    def feasibility(self) -> float:
        c, dropped = _pinv_solve(self.g_j, self.b_j)
        if dropped:
            logger.info("feasibility solve regularized: dropped %d modes", dropped)
        return self.err_j(c)

    def unconstrained(self) -> np.ndarray:
        c, dropped = _pinv_solve(self.g_k, self.b_k)
        if dropped:
            logger.info("unconstrained solve regularized: dropped %d modes", dropped)
        return c


def feasibility_distance(h_j: GridFunction, j_region: Region, degree: int) -> float:
    """Distance of h_J to the degree-N analytic span restricted to J.

    Solves the normal equations with the J-Gram matrix; a numerically
    singular Gram is regularized by eigenvalue cutoff (logged).
    """
    grid = h_j.grid
    e = basis_matrix(grid, degree)
    w = j_region.weights(grid).ravel()
    b = e.conj().T @ (w * h_j.values.ravel())
    g = e.conj().T @ (w[:, None] * e)
    c, dropped = _pinv_solve((g + g.conj().T) / 2.0, b)
    if dropped:
        logger.info("feasibility solve regularized: dropped %d modes", dropped)
    return float(np.sqrt(np.sum(w * np.abs(e @ c - h_j.values.ravel()) ** 2)))


def solve_at_lambda(problem: BepProblem, lam: float) -> AnalyticCoeffs:
    """Solve (I + lambda Gram(J)) c = <h_K v (1+lambda) h_J, e_n> at fixed lambda."""
    return AnalyticCoeffs(_Discrete(problem).coeffs_at(lam))


def constraint_error(problem: BepProblem, lam: float) -> float:
    """Constraint error e(lambda) = ||g0(lambda) - h_J|| on J."""
    disc = _Discrete(problem)
    return disc.err_j(disc.coeffs_at(lam))


def _check_monotone(evals: list[tuple[float, float]], m: float) -> None:
    pts = sorted(evals)
    slack = 1e-9 * max(1.0, m)
    for (lam_a, e_a), (lam_b, e_b) in zip(pts, pts[1:]):
        if e_b > e_a + slack:
            raise ConvergenceError(
                "constraint error is not monotone on the bracket: "
                f"e({lam_a:.6g}) = {e_a:.9g} < e({lam_b:.6g}) = {e_b:.9g}"
            )


def _solve_bep_discrete(disc: _Discrete, hi0: float) -> BepSolution:
    problem = disc.problem
    m = problem.m
    feas = disc.feasibility()
    if feas > m + 1e-9:
        raise InfeasibleProblemError(
            f"M = {m:.6g} below feasibility distance {feas:.6g}"
        )

    c_unc = disc.unconstrained()
    e_unc = disc.err_j(c_unc)
    if e_unc <= m:
        mu = 1.0 + _LAMBDA_FLOOR
        return BepSolution(
            g0=AnalyticCoeffs(c_unc),
            lam=_LAMBDA_FLOOR,
            err_k=disc.err_k(c_unc),
            err_j=e_unc,
            kkt_residual=disc.kkt_residual(c_unc, mu),
            iterations=0,
            feasibility=feas,
            saturated=False,
        )

    tol_strict = 1e-12 * max(1.0, m)
    tol_contract = 1e-8 * max(1.0, m)
    lo, hi = _LAMBDA_FLOOR, float(hi0)
    e_lo = disc.err_j(disc.coeffs_at(lo))
    e_hi = disc.err_j(disc.coeffs_at(hi))
    evals = [(lo, e_lo), (hi, e_hi)]
    expansions = 0
    while e_hi > m:
        expansions += 1
        if expansions > _MAX_EXPANSIONS:
            _check_monotone(evals, m)
            raise ConvergenceError(
                f"bracket expansion exhausted: e({hi:.3g}) = {e_hi:.9g} > M = {m:.9g} "
                f"(feasibility distance {feas:.9g})"
            )
        hi = 2.0 * (1.0 + hi) - 1.0
        e_hi = disc.err_j(disc.coeffs_at(hi))
        evals.append((hi, e_hi))

    lam, e_lam = hi, e_hi
    iterations = 0
    for iterations in range(1, _MAX_BISECTIONS + 1):
        mid = 0.5 * (lo + hi)
        e_mid = disc.err_j(disc.coeffs_at(mid))
        evals.append((mid, e_mid))
        if abs(e_mid - m) <= tol_strict or hi - lo < 1e-15 * (1.0 + abs(hi)):
            lam, e_lam = mid, e_mid
            break
        if e_mid > m:
            lo = mid
        else:
            hi = mid
        lam, e_lam = mid, e_mid
    _check_monotone(evals, m)
    if abs(e_lam - m) > tol_contract:
        raise ConvergenceError(
            f"bisection stalled: |e(lambda) - M| = {abs(e_lam - m):.3e} at lambda = {lam:.6g}"
        )

    c = disc.coeffs_at(lam)
    return BepSolution(
        g0=AnalyticCoeffs(c),
        lam=lam,
        err_k=disc.err_k(c),
        err_j=e_lam,
        kkt_residual=disc.kkt_residual(c, 1.0 + lam),
        iterations=iterations,
        feasibility=feas,
        saturated=True,
    )


def solve_bep(problem: BepProblem, hi0: float = 1.0, degree_diagnostic: bool = True) -> BepSolution:
    """Solve the bounded extremal problem by multiplier bisection.

    If the unconstrained K-fit already satisfies the constraint it is
    returned with lambda at the lower bracket; otherwise lambda is
    bisected until the constraint saturates.  With degree_diagnostic the
    problem is re-solved at degree N - 4 and the coefficient gap stored
    as a truncation-convergence indicator.
    """
    solution = _solve_bep_discrete(_Discrete(problem), hi0)
    if degree_diagnostic and problem.degree >= 5:
        low = BepProblem(
            k_region=problem.k_region,
            j_region=problem.j_region,
            h_k=problem.h_k,
            h_j=problem.h_j,
            m=problem.m,
            degree=problem.degree - 4,
        )
        low_sol = _solve_bep_discrete(_Discrete(low), hi0)
        n_low = low.degree + 1
        gap = np.concatenate(
            (solution.g0.coeffs[:n_low] - low_sol.g0.coeffs, solution.g0.coeffs[n_low:])
        )
        solution.degree_gap = float(np.linalg.norm(gap))
    return solution


def solve_bep_oracle(problem: BepProblem) -> BepSolution:
    """Independent check: norm-constrained least squares via eigendecomposition.

    Diagonalizes the J-Gram, writes the multiplier equation through the
    secular denominators (1 - tau_k) + mu tau_k, and locates the
    saturating mu >= 0 with a Brent root-find on the constraint error
    evaluated directly on the grid.
    """
    disc = _Discrete(problem)
    m = problem.m
    feas = disc.feasibility()
    if feas > m + 1e-9:
        raise InfeasibleProblemError(f"M = {m:.6g} below feasibility distance {feas:.6g}")

    taus, vecs = np.linalg.eigh(disc.g_j)
    taus = np.clip(taus, 0.0, 1.0)  # compression of a [0,1]-spectrum operator
    bt_k = vecs.conj().T @ disc.b_k
    bt_j = vecs.conj().T @ disc.b_j

    def coeffs(mu: float) -> np.ndarray:
        denom = (1.0 - taus) + mu * taus
        keep = denom > 1e-12 * max(1.0, denom.max())
        y = np.where(keep, (bt_k + mu * bt_j) / np.where(keep, denom, 1.0), 0.0)
        return vecs @ y

    c0 = coeffs(0.0)
    if disc.err_j(c0) <= m:
        return BepSolution(
            g0=AnalyticCoeffs(c0),
            lam=_LAMBDA_FLOOR,
            err_k=disc.err_k(c0),
            err_j=disc.err_j(c0),
            kkt_residual=disc.kkt_residual(c0, 1.0 + _LAMBDA_FLOOR),
            iterations=0,
            feasibility=feas,
            saturated=False,
        )

    def secular(mu: float) -> float:
        return disc.err_j(coeffs(mu)) - m

    mu_lo, mu_hi = 0.0, 2.0
    expansions = 0
    while secular(mu_hi) > 0.0:
        mu_hi *= 2.0
        expansions += 1
        if expansions > _MAX_EXPANSIONS:
            raise ConvergenceError("oracle multiplier bracket exhausted")
    mu = brentq(secular, mu_lo, mu_hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
    c = coeffs(mu)
    return BepSolution(
        g0=AnalyticCoeffs(c),
        lam=mu - 1.0,
        err_k=disc.err_k(c),
        err_j=disc.err_j(c),
        kkt_residual=disc.kkt_residual(c, mu),
        iterations=expansions,
        feasibility=feas,
        saturated=True,
    )
