"""Truncated Bergman space machinery on the unit disc.

Functions analytic on the disc are represented by their coefficients in
the orthonormal monomial basis e_n(z) = sqrt(n+1) z^n of A^2 (normalized
area measure).  The module provides the degree-N Bergman projection via
basis inner products, the reproducing kernel 1/(1 - conj(z) zeta)^2 as a
cross-check path, and Gram/Toeplitz matrices G_mn = <chi_Omega e_n, e_m>
for characteristic-function symbols, with closed forms for radial discs,
annuli and angular sectors.

Note on the radial spectrum convention: with J = a*D under the
normalized area measure, the truncated Toeplitz matrix is diagonal with
entries a^{2(n+1)} = (a^2)^{n+1}.  Sources that parameterize the symbol
by the disc a*D of *measure* a (radius sqrt(a)) quote the same spectrum
as {a^{n+1}}.  This package always uses the radius parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DiscGrid, GridFunction, Region


@dataclass(eq=False)
class AnalyticCoeffs:
    """Truncated element of A^2 in the basis e_n(z) = sqrt(n+1) z^n."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d array")
        if not np.all(np.isfinite(c.real)) or not np.all(np.isfinite(c.imag)):
            raise ValueError("coefficients must be finite")
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def unit(cls, n: int, degree: int) -> "AnalyticCoeffs":
        c = np.zeros(degree + 1, dtype=complex)
        c[n] = 1.0
        return cls(c)

    def norm(self) -> float:
        """A^2 norm, sqrt(sum |c_n|^2) by Parseval."""
        return float(np.linalg.norm(self.coeffs))

    def eval(self, z) -> complex | np.ndarray:
        """Evaluate sum c_n e_n(z) by Horner accumulation; z may be an array."""
        zv = np.asarray(z, dtype=complex)
        d = self.coeffs * np.sqrt(np.arange(self.coeffs.size) + 1.0)
        acc = np.full_like(zv, d[-1])
        for k in range(d.size - 2, -1, -1):
            acc = acc * zv + d[k]
        return acc if zv.ndim else complex(acc)

    def on_grid(self, grid: DiscGrid) -> GridFunction:
        return GridFunction(grid, self.eval(grid.nodes))


def basis_matrix(grid: DiscGrid, degree: int) -> np.ndarray:
    """Samples of e_0..e_N at the grid nodes, shape (n_nodes, N+1), flattened row-major."""
    z = grid.nodes.ravel()
    powers = z[:, None] ** np.arange(degree + 1)[None, :]
    return powers * np.sqrt(np.arange(degree + 1) + 1.0)[None, :]


def _check_degree(grid: DiscGrid, degree: int) -> None:
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if 2 * degree > grid.exactness_degree:
        raise ValueError(
            f"degree {degree} too large for grid exactness {grid.exactness_degree}"
        )


def project(g: GridFunction, degree: int) -> AnalyticCoeffs:
    """Degree-N Bergman projection of a grid function, c_n = <g, e_n>."""
    _check_degree(g.grid, degree)
    e = basis_matrix(g.grid, degree)
    return AnalyticCoeffs(e.conj().T @ (g.grid.weights.ravel() * g.values.ravel()))


def kernel_eval(z: complex, zeta: complex) -> complex:
    """Bergman reproducing kernel K(z, zeta) = 1 / (1 - conj(z) zeta)^2."""
    denom = 1.0 - np.conj(z) * zeta
    if np.any(np.abs(denom) < 1e-14):
        raise ValueError("kernel pole: conj(z) * zeta == 1")
    return 1.0 / denom**2


def kernel_project_eval(g: GridFunction, z: complex) -> complex:
    """Bergman projection of g evaluated at z through kernel quadrature.

    Cross-check path for project(); the kernel is singular near the
    boundary, so this is only accurate for z well inside the disc.
    """
    zeta = g.grid.nodes.ravel()
    return complex(
        np.sum(g.grid.weights.ravel() * g.values.ravel() / (1.0 - z * np.conj(zeta)) ** 2)
    )


@dataclass(eq=False)
class GramMatrix:
    """Matrix of the Toeplitz operator g -> P(chi_Omega g) in the basis e_n."""

    region: Region
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Gram matrix must be square")
        self.entries = m

    @property
    def degree(self) -> int:
        return self.entries.shape[0] - 1


def gram_quadrature(region: Region, degree: int, grid: DiscGrid) -> GramMatrix:
    """Gram matrix by grid quadrature over the region, G = E^H diag(w) E."""
    _check_degree(grid, degree)
    e = basis_matrix(grid, degree)
    g = e.conj().T @ (region.weights(grid).ravel()[:, None] * e)
    return GramMatrix(region, (g + g.conj().T) / 2.0)


def _gram_closed_base(region: Region, degree: int) -> np.ndarray | None:
    n = np.arange(degree + 1)
    if region.kind == "radial_disc":
        return np.diag(region.a ** (2.0 * (n + 1.0))).astype(complex)
    if region.kind == "annulus":
        return np.diag(1.0 - region.a ** (2.0 * (n + 1.0))).astype(complex)
    if region.kind == "sector":
        m, k = np.meshgrid(n, n, indexing="ij")
        diff = k - m
        with np.errstate(divide="ignore", invalid="ignore"):
            angular = 2.0 * np.sin(diff * region.theta) / (diff * np.pi)
        # removable singularity at m == n; the radial factor there is 1/2,
        # so the full diagonal entry comes out to theta / pi
        np.fill_diagonal(angular, 2.0 * region.theta / np.pi)
        radial = np.sqrt((m + 1.0) * (k + 1.0)) / (m + k + 2.0)
        return (radial * angular).astype(complex)
    if region.kind == "full":
        return np.eye(degree + 1, dtype=complex)
    return None


def gram(region: Region, degree: int, grid: DiscGrid | None = None) -> GramMatrix:
    """Gram matrix G_mn = <chi_Omega e_n, e_m>.

    Radial discs, annuli, sectors and the full disc use closed forms and
    are valid at any degree; mask regions fall back to grid quadrature
    and require a grid supporting the degree.
    """
    base = _gram_closed_base(region, degree)
    if base is None:
        if grid is None:
            raise ValueError("mask regions need a grid to assemble the Gram matrix")
        return gram_quadrature(region, degree, grid)
    if region.complement_flag:
        base = np.eye(degree + 1, dtype=complex) - base
    return GramMatrix(region, base)


def spectrum(g: GramMatrix) -> np.ndarray:
    """Real eigenvalues of a Hermitian Gram matrix, sorted descending."""
    herm_defect = np.max(np.abs(g.entries - g.entries.conj().T))
    if herm_defect > 1e-10:
        raise ValueError(f"matrix is not Hermitian (defect {herm_defect:.2e})")
    try:
        vals = np.linalg.eigvalsh(g.entries)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration failed: {exc}") from exc
    return vals[::-1]
