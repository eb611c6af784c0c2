import numpy as np
import pytest

from bergbep import (
    AnalyticCoeffs,
    GridFunction,
    Region,
    gram,
    gram_quadrature,
    inner_product,
    kernel_eval,
    kernel_project_eval,
    project,
    spectrum,
)
from bergbep.grid import eval_basis


class TestProject:
    def test_z_bar_projects_to_zero(self, grid_24_96):
        zb = GridFunction.from_function(grid_24_96, lambda z: np.conj(z))
        assert np.max(np.abs(project(zb, 16).coeffs)) <= 1e-12

    def test_abs_z_squared(self, grid_24_96):
        g = GridFunction.from_function(grid_24_96, lambda z: np.abs(z) ** 2)
        c = project(g, 16).coeffs
        assert abs(c[0] - 0.5) <= 1e-12
        assert np.max(np.abs(c[1:])) <= 1e-12

    @pytest.mark.parametrize("k", [0, 3, 7])
    def test_basis_element_projects_to_unit(self, grid_24_96, k):
        g = GridFunction.from_function(grid_24_96, lambda z: eval_basis(k, z))
        c = project(g, 8).coeffs
        expect = np.zeros(9)
        expect[k] = 1.0
        assert np.max(np.abs(c - expect)) <= 1e-13

    def test_idempotence(self, grid_24_96):
        rng = np.random.default_rng(0)
        for _ in range(5):
            g = GridFunction(
                grid_24_96,
                rng.standard_normal(grid_24_96.shape)
                + 1j * rng.standard_normal(grid_24_96.shape),
            )
            c1 = project(g, 12)
            c2 = project(c1.on_grid(grid_24_96), 12)
            assert np.max(np.abs(c1.coeffs - c2.coeffs)) <= 1e-12

    def test_self_adjoint(self, grid_24_96):
        rng = np.random.default_rng(1)
        for _ in range(5):
            g = GridFunction(grid_24_96, rng.standard_normal(grid_24_96.shape) * (1 + 1j))
            h = GridFunction(grid_24_96, rng.standard_normal(grid_24_96.shape) * (1 - 0.3j))
            pg = project(g, 10).on_grid(grid_24_96)
            ph = project(h, 10).on_grid(grid_24_96)
            assert abs(inner_product(pg, h) - inner_product(g, ph)) <= 1e-12

    def test_degree_too_large(self, grid_16_64):
        g = GridFunction.constant(grid_16_64)
        with pytest.raises(ValueError):
            project(g, grid_16_64.exactness_degree)

    def test_parseval(self, grid_24_96):
        c = AnalyticCoeffs(np.array([0.5, -0.25j, 0.0, 1.0 + 1.0j]))
        g = c.on_grid(grid_24_96)
        assert abs(inner_product(g, g).real - c.norm() ** 2) <= 1e-12


class TestEval:
    def test_constant(self, grid_16_64):
        c = AnalyticCoeffs(np.array([1.0]))
        assert np.max(np.abs(c.on_grid(grid_16_64).values - 1.0)) == 0.0

    def test_unit_degree_one(self):
        c = AnalyticCoeffs.unit(1, 1)
        assert abs(c.eval(0.5) - np.sqrt(2.0) * 0.5) <= 1e-15

    def test_projection_identity_on_polynomials(self, grid_24_96):
        rng = np.random.default_rng(5)
        coeffs = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        g = AnalyticCoeffs(coeffs).on_grid(grid_24_96)
        z = 0.3 - 0.2j
        assert abs(project(g, 6).eval(z) - AnalyticCoeffs(coeffs).eval(z)) <= 1e-13


class TestKernel:
    def test_at_origin(self):
        assert kernel_eval(0.0, 0.3 + 0.1j) == 1.0

    def test_half(self):
        assert abs(kernel_eval(0.5, 0.5) - 16.0 / 9.0) <= 1e-14

    def test_pole_guard(self):
        with pytest.raises(ValueError):
            kernel_eval(1.0, 1.0)

    def test_truncated_reproducing_sum(self):
        z, zeta = 0.3, 0.4
        total = sum(np.conj(eval_basis(n, z)) * eval_basis(n, zeta) for n in range(41))
        assert abs(total - kernel_eval(z, zeta)) <= 1e-10

    def test_kernel_quadrature_projection(self, grid_24_96):
        g = GridFunction.from_function(grid_24_96, lambda z: np.exp(0.9 * z) + 0.3 * np.conj(z))
        c = project(g, 30)
        for z0 in (0.1 + 0.2j, 0.5, -0.3 + 0.6j, 0.7j):
            assert abs(kernel_project_eval(g, z0) - c.eval(z0)) <= 1e-8


class TestGram:
    def test_radial_diagonal(self):
        g = gram(Region.radial_disc(0.5), 16)
        n = np.arange(17)
        assert np.max(np.abs(np.diag(g.entries) - 0.25 ** (n + 1))) <= 1e-12
        off = g.entries - np.diag(np.diag(g.entries))
        assert np.max(np.abs(off)) == 0.0

    def test_sector_diagonal(self):
        g = gram(Region.sector(np.pi / 2.0), 8)
        assert np.max(np.abs(np.diag(g.entries) - 0.5)) <= 1e-14

    def test_full_disc_identity(self):
        g = gram(Region.full_disc(), 12)
        assert np.max(np.abs(g.entries - np.eye(13))) == 0.0

    def test_closed_form_matches_quadrature(self, grid_24_96):
        for region in (Region.radial_disc(0.45), Region.sector(1.1), Region.annulus(0.6)):
            closed = gram(region, 10).entries
            quad = gram_quadrature(region, 10, grid_24_96).entries
            assert np.max(np.abs(closed - quad)) <= 2e-3

    def test_hermitian_exact(self, grid_24_96):
        mask = Region.mask(grid_24_96.nodes.real > 0.1)
        g = gram(mask, 10, grid_24_96)
        assert np.array_equal(g.entries, g.entries.conj().T)

    def test_mask_needs_grid(self, grid_16_64):
        with pytest.raises(ValueError):
            gram(Region.mask(np.ones(grid_16_64.shape, dtype=bool)), 4)

    @pytest.mark.parametrize(
        "region",
        [Region.radial_disc(0.5), Region.sector(1.0), Region.annulus(0.35)],
    )
    def test_complementarity(self, region):
        total = gram(region, 12).entries + gram(region.complement(), 12).entries
        assert np.max(np.abs(total - np.eye(13))) <= 1e-12

    def test_mask_complementarity(self, grid_24_96):
        mask = Region.mask(grid_24_96.nodes.imag > 0.0)
        total = gram(mask, 10, grid_24_96).entries + gram(mask.complement(), 10, grid_24_96).entries
        assert np.max(np.abs(total - np.eye(11))) <= 1e-12


class TestSpectrum:
    def test_radial_spectrum(self):
        vals = spectrum(gram(Region.radial_disc(0.6), 12))
        expect = np.sort(0.36 ** (np.arange(13) + 1.0))[::-1]
        assert np.max(np.abs(vals - expect)) <= 1e-12

    def test_full_disc_all_ones(self):
        vals = spectrum(gram(Region.full_disc(), 9))
        assert np.max(np.abs(vals - 1.0)) == 0.0

    @pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
    def test_sector_spectrum_range_and_trace(self, theta):
        g = gram(Region.sector(theta), 16)
        vals = spectrum(g)
        assert vals.min() >= -1e-10
        assert vals.max() <= 1.0 + 1e-10
        assert abs(vals.sum() - 17.0 * theta / np.pi) <= 1e-12

    def test_descending_order(self):
        vals = spectrum(gram(Region.sector(0.8), 10))
        assert np.all(np.diff(vals) <= 0.0)

    def test_rejects_non_hermitian(self):
        from bergbep import GramMatrix

        bad = GramMatrix(Region.full_disc(), np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(ValueError):
            spectrum(bad)


class TestUniquenessSurrogate:
    """No nonzero truncated analytic function vanishes on positive area."""

    @pytest.mark.parametrize(
        "region",
        [Region.radial_disc(0.3), Region.sector(0.5), Region.annulus(0.7)],
    )
    def test_region_gram_positive_definite(self, region):
        vals = spectrum(gram(region, 10))
        assert vals.min() > 0.0

    def test_quadratic_form_positive(self, grid_24_96):
        rng = np.random.default_rng(9)
        mask = Region.mask(np.abs(grid_24_96.nodes - 0.4) < 0.3)
        g = gram(mask, 8, grid_24_96).entries
        for _ in range(10):
            c = rng.standard_normal(9) + 1j * rng.standard_normal(9)
            assert (c.conj() @ g @ c).real > 0.0
