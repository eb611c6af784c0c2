"""Bounded extremal problem over a lifted Bergman-Vekua basis.

The Vekua space of a conductivity f is a real vector space; its
truncation is spanned by the lifts of e_0..e_N and i e_0..i e_N.  The
f-BEP minimizes the K-misfit over real combinations of the lifted
elements subject to the J-misfit budget, solved as a real
norm-constrained least squares: whiten by the full-disc Gram, then
eigendecompose the J-form and root-find the Karush-Kuhn-Tucker
multiplier mu >= 0 in the secular denominators (1 - tau) + mu tau.
The multiplier maps to the Bergman convention by lambda = mu - 1, and
with f identically 1 the lifted basis is exactly {e_n, i e_n} and the
solve reproduces the complex BEP solution.

The conjectured critical-point equation

    (lambda + 1) Pi(chi_J w - 0 v h_J) = -Pi(chi_K w - h_K v 0)

with Pi the span projection is exposed as a post-hoc residual check; at
the truncated level it coincides with the first-order optimality
condition of the real program.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bep import ConvergenceError, InfeasibleProblemError
from .grid import DiscGrid, GridFunction, Region, build_grid
from .bergman import AnalyticCoeffs
from .vekua import (
    Conductivity,
    LiftDivergenceError,
    VekuaBasis,
    alpha_from_f,
    teodorescu,
    vekua_lift,
    vekua_residual,
)

logger = logging.getLogger("bergbep")

_DROP_RCOND = 1e-10
_MAX_EXPANSIONS = 80


@dataclass(eq=False)
class FbepProblem:
    """Data for the f-BEP: conductivity, partition, data, budget, degree."""

    f: Conductivity
    k_region: Region
    j_region: Region
    h_k: GridFunction
    h_j: GridFunction
    m: float
    degree: int
    lift_tol: float = 1e-9

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError(f"constraint level M must be positive, got {self.m}")
        self.h_k._check_same_grid(self.h_j)
        if self.f.grid is not self.h_k.grid:
            raise ValueError("conductivity and data use different grids")
        grid = self.h_k.grid
        gap = np.max(
            np.abs(self.k_region.weights(grid) + self.j_region.weights(grid) - grid.weights)
        )
        if gap > 1e-12:
            raise ValueError(f"K and J do not partition the disc (defect {gap:.2e})")
        if self.k_region.node_count(grid) == 0 or self.j_region.node_count(grid) == 0:
            raise ValueError("degenerate region: K or J carries no grid nodes")

    @property
    def grid(self) -> DiscGrid:
        return self.h_k.grid


@dataclass(eq=False)
class FbepSolution:
    """Optimal Vekua approximant with saturation and defect diagnostics."""

    coeffs: np.ndarray
    w_star: GridFunction
    basis: VekuaBasis
    lam: float
    err_k: float
    err_j: float
    kkt_residual: float
    vekua_defect: float
    feasibility: float
    saturated: bool
    basis_min_eig: float
    dropped: int

    @property
    def mu(self) -> float:
        return self.lam + 1.0


def build_fbep_space(
    f: Conductivity, degree: int, tol: float = 1e-9, max_iter: int = 60
) -> VekuaBasis:
    """Lift {e_0..e_N, i e_0..i e_N} into the Vekua space of f."""
    alpha = alpha_from_f(f)
    elements = []
    for unit in (1.0, 1.0j):
        for n in range(degree + 1):
            seed = AnalyticCoeffs(unit * AnalyticCoeffs.unit(n, degree).coeffs)
            try:
                elements.append(vekua_lift(seed, alpha, tol=tol, max_iter=max_iter))
            except LiftDivergenceError as exc:
                raise ConvergenceError(
                    f"lift of seed {'i*' if unit == 1.0j else ''}e_{n} diverged: {exc}"
                ) from exc
    basis = VekuaBasis(alpha=alpha, elements=elements)
    logger.info(
        "fbep space: %d elements, Gram min eigenvalue %.3e",
        basis.size,
        basis.min_eigenvalue(),
    )
    return basis


class _RealDiscrete:
    """Real quadratic forms of an f-BEP over a lifted basis."""

    def __init__(self, problem: FbepProblem, basis: VekuaBasis):
        self.problem = problem
        self.basis = basis
        self.a_k = basis.real_gram(problem.k_region)
        self.a_j = basis.real_gram(problem.j_region)
        self.r_k = basis.real_rhs(problem.h_k, problem.k_region)
        self.r_j = basis.real_rhs(problem.h_j, problem.j_region)
        self.w_k = problem.k_region.weights(problem.grid).ravel()
        self.w_j = problem.j_region.weights(problem.grid).ravel()
        self.mat = basis.values_matrix()
        self.hk = problem.h_k.values.ravel()
        self.hj = problem.h_j.values.ravel()
        # rank-revealing pass on the full-disc Gram: near-dependent lifted
        # elements are dropped before solving
        s_full = self.a_k + self.a_j
        vals, vecs = np.linalg.eigh(s_full)
        keep = vals > _DROP_RCOND * vals.max()
        self.dropped = int(np.count_nonzero(~keep))
        if self.dropped:
            logger.info("dropping %d near-dependent basis directions", self.dropped)
        self.v = vecs[:, keep]
        self.whiten = self.v / np.sqrt(vals[keep])[None, :]
        b = self.whiten.T @ self.a_j @ self.whiten
        self.taus, self.q = np.linalg.eigh((b + b.T) / 2.0)
        self.taus = np.clip(self.taus, 0.0, 1.0)
        self.bt_k = self.q.T @ (self.whiten.T @ self.r_k)
        self.bt_j = self.q.T @ (self.whiten.T @ self.r_j)

    def coeffs_at(self, mu: float) -> np.ndarray:
        denom = (1.0 - self.taus) + mu * self.taus
        keep = denom > 1e-12 * max(1.0, denom.max())
        y = np.where(keep, (self.bt_k + mu * self.bt_j) / np.where(keep, denom, 1.0), 0.0)
        return self.whiten @ (self.q @ y)

    def err(self, coeffs: np.ndarray, side: str) -> float:
        w, h = (self.w_k, self.hk) if side == "k" else (self.w_j, self.hj)
        resid = self.mat @ coeffs - h
        return float(np.sqrt(np.sum(w * np.abs(resid) ** 2)))

    def kkt_vector(self, coeffs: np.ndarray, mu: float) -> np.ndarray:
        return (self.a_k @ coeffs - self.r_k) + mu * (self.a_j @ coeffs - self.r_j)

    def feasibility(self) -> float:
        return self.err(self.coeffs_at(1e14), "j")


def solve_fbep(problem: FbepProblem, basis: VekuaBasis | None = None) -> FbepSolution:
    """Solve the f-BEP as a real norm-constrained least squares.

    The basis is lifted from the problem's conductivity unless one is
    supplied; saturation locates the unique multiplier mu >= 0 with
    |err_J - M| within 1e-12 max(1, M), far inside the 1e-6 contract.
    """
    if basis is None:
        basis = build_fbep_space(problem.f, problem.degree, tol=problem.lift_tol)
    disc = _RealDiscrete(problem, basis)
    m = problem.m

    feas = disc.feasibility()
    if feas > m + 1e-9:
        raise InfeasibleProblemError(f"M = {m:.6g} below feasibility distance {feas:.6g}")

    coeffs = disc.coeffs_at(0.0)
    saturated = False
    mu = 0.0
    if disc.err(coeffs, "j") > m:
        saturated = True

        def secular(mu_val: float) -> float:
            return disc.err(disc.coeffs_at(mu_val), "j") - m

        mu_hi = 2.0
        expansions = 0
        while secular(mu_hi) > 0.0:
            mu_hi *= 2.0
            expansions += 1
            if expansions > _MAX_EXPANSIONS:
                raise ConvergenceError("f-BEP multiplier bracket exhausted")
        mu = brentq(secular, 0.0, mu_hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
        coeffs = disc.coeffs_at(mu)

    w_star = basis.synthesize(coeffs)
    defect = vekua_residual(w_star, basis.alpha, problem.degree)
    return FbepSolution(
        coeffs=coeffs,
        w_star=w_star,
        basis=basis,
        lam=mu - 1.0,
        err_k=disc.err(coeffs, "k"),
        err_j=disc.err(coeffs, "j"),
        kkt_residual=float(np.linalg.norm(disc.kkt_vector(coeffs, mu))),
        vekua_defect=defect,
        feasibility=feas,
        saturated=saturated,
        basis_min_eig=basis.min_eigenvalue(),
        dropped=disc.dropped,
    )


def fbep_conjecture_check(problem: FbepProblem, solution: FbepSolution) -> float:
    """Residual of the conjectured critical-point equation, relative to ||w_*||.

    Evaluates (lambda+1) Pi(chi_J w - 0 v h_J) + Pi(chi_K w - h_K v 0)
    in the span and returns its L^2 norm over ||w_*||; zero at the
    program's optimum up to root-finding precision.
    """
    disc = _RealDiscrete(problem, solution.basis)
    mu = solution.mu
    s_full = disc.a_k + disc.a_j
    vals, vecs = np.linalg.eigh(s_full)
    keep = vals > _DROP_RCOND * vals.max()
    rhs = vecs.T @ disc.kkt_vector(solution.coeffs, mu)
    rho = vecs @ np.where(keep, rhs / np.where(keep, vals, 1.0), 0.0)
    norm2 = float(rho @ (s_full @ rho))
    w_norm = solution.w_star.norm()
    return float(np.sqrt(max(norm2, 0.0))) / max(w_norm, 1e-300)


def directional_kkt_check(
    problem: FbepProblem,
    solution: FbepSolution,
    n_directions: int = 50,
    seed: int = 0,
) -> float:
    """Minimum of <grad(err_K^2), d> over random first-order feasible directions.

    Directions are drawn uniformly on the sphere and flipped to point
    into the feasible cone grad(err_J^2) . d <= 0; at an optimum the
    minimum is >= 0 up to multiplier precision.
    """
    disc = _RealDiscrete(problem, solution.basis)
    grad_k = 2.0 * (disc.a_k @ solution.coeffs - disc.r_k)
    grad_j = 2.0 * (disc.a_j @ solution.coeffs - disc.r_j)
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_directions):
        d = rng.standard_normal(solution.coeffs.size)
        d /= np.linalg.norm(d)
        if grad_j @ d > 0.0:
            d = -d
        worst = min(worst, float(grad_k @ d))
    return worst


def transformed_constraint_data(
    problem: FbepProblem, norm_grid_shape: tuple[int, int] = (12, 24)
) -> tuple[GridFunction, float]:
    """Diagnostic map of the constraint data into the Bergman setting.

    Returns h_J^* = h_J - T_J(alpha conj(h_J)) and M^* = M rho, where
    rho is the norm of h -> h - T_J(alpha conj(h)) on L^2(J), estimated
    densely on a coarse grid.
    """
    alpha = alpha_from_f(problem.f)
    zero_ext = GridFunction(
        problem.grid,
        np.where(
            problem.j_region.indicator(problem.grid),
            alpha.values * np.conj(problem.h_j.values),
            0.0,
        ),
    )
    h_star = problem.h_j - teodorescu(zero_ext)
    rho = restriction_map_norm(problem.f, problem.j_region, norm_grid_shape)
    return h_star, problem.m * rho


def restriction_map_norm(
    f: Conductivity, j_region: Region, grid_shape: tuple[int, int] = (12, 24)
) -> float:
    """Operator norm of h -> h - T_J(alpha conj(h)) on L^2(J), coarse-grid dense.

    The real-linear map is assembled column by column on a small grid
    (conjugation forces the realified representation) and the weighted
    operator norm is taken through its singular values.  With f constant
    the map is the identity and the norm is 1.
    """
    small = build_grid(*grid_shape)
    f_small = _rebuild_conductivity(f, small)
    alpha = alpha_from_f(f_small).values
    w_j = j_region.weights(small).ravel()
    idx = np.nonzero(w_j > 0.0)[0]
    if idx.size == 0:
        raise ValueError("region J carries no nodes on the norm-estimation grid")
    n = idx.size

    def apply_map(vec: np.ndarray) -> np.ndarray:
        full = np.zeros(small.shape, dtype=complex)
        full.ravel()[idx] = vec
        t = teodorescu(GridFunction(small, alpha * np.conj(full)))
        return (full - t.values).ravel()[idx]

    cols = np.empty((2 * n, 2 * n))
    sqw = np.sqrt(w_j[idx])
    for j in range(n):
        unit = np.zeros(n, dtype=complex)
        unit[j] = 1.0 / sqw[j]
        for block, vec in enumerate((unit, 1j * unit)):
            out = apply_map(vec) * sqw
            cols[:n, block * n + j] = out.real
            cols[n:, block * n + j] = out.imag
    return float(np.linalg.norm(cols, ord=2))


def _rebuild_conductivity(f: Conductivity, grid: DiscGrid) -> Conductivity:
    if f.kind == "const":
        return Conductivity.constant(grid, float(f.values.values.real.flat[0]))
    if f.kind == "exp_x":
        return Conductivity.exp_x(grid, f.eps)
    if f.kind == "exp_xy":
        return Conductivity.exp_xy(grid, f.eps)
    raise ValueError("grid-sampled conductivities cannot be rebuilt on another grid")
