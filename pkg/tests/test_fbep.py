import numpy as np
import pytest

from bergbep import (
    AnalyticCoeffs,
    BepProblem,
    Conductivity,
    ConvergenceError,
    FbepProblem,
    GridFunction,
    InfeasibleProblemError,
    Region,
    VekuaBasis,
    build_fbep_space,
    directional_kkt_check,
    fbep_conjecture_check,
    restriction_map_norm,
    solve_bep,
    solve_fbep,
    transformed_constraint_data,
)


def make_problem(grid, f, m=0.1, degree=8, h_k_val=1.0):
    k = Region.radial_disc(0.5)
    return FbepProblem(
        f=f,
        k_region=k,
        j_region=k.complement(),
        h_k=GridFunction.constant(grid, h_k_val),
        h_j=GridFunction.constant(grid, 0.0),
        m=m,
        degree=degree,
    )


class TestBuildSpace:
    def test_identity_conductivity_gives_seeds(self, grid_32_64):
        f = Conductivity.constant(grid_32_64, 1.0)
        basis = build_fbep_space(f, 3)
        assert basis.size == 8
        for n in range(4):
            seed = AnalyticCoeffs.unit(n, 3)
            imag_seed = AnalyticCoeffs(1j * seed.coeffs)
            assert np.array_equal(
                basis.elements[n].w.values, seed.on_grid(grid_32_64).values
            )
            assert np.array_equal(
                basis.elements[4 + n].w.values, imag_seed.on_grid(grid_32_64).values
            )

    def test_all_lifts_converge(self, basis_exp01_n8):
        _, basis = basis_exp01_n8
        assert basis.size == 18
        for element in basis.elements:
            assert element.converged
            assert element.residual <= 1e-6

    def test_f_and_i_over_f_in_span(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        for target in (f.values, GridFunction(f.grid, 1j / f.values.values)):
            fitted = basis.synthesize(basis.project_span(target))
            assert (fitted - target).norm() / target.norm() <= 1e-4

    def test_divergent_lift_reported_with_seed(self, grid_16_64):
        f = Conductivity.exp_x(grid_16_64, 8.0)
        with pytest.raises(ConvergenceError, match="e_0"):
            build_fbep_space(f, 2)


class TestSolveFbep:
    def test_reduction_to_bep(self, grid_24_96):
        f = Conductivity.constant(grid_24_96, 1.0)
        k = Region.radial_disc(0.5)
        h_k = GridFunction.constant(grid_24_96, 1.0)
        h_j = GridFunction.constant(grid_24_96, 0.0)
        pf = FbepProblem(
            f=f, k_region=k, j_region=k.complement(), h_k=h_k, h_j=h_j, m=0.1, degree=16
        )
        pb = BepProblem(
            k_region=k, j_region=k.complement(), h_k=h_k, h_j=h_j, m=0.1, degree=16
        )
        sf = solve_fbep(pf)
        sb = solve_bep(pb, degree_diagnostic=False)
        as_complex = sf.coeffs[:17] + 1j * sf.coeffs[17:]
        assert np.max(np.abs(as_complex - sb.g0.coeffs)) <= 1e-8
        assert abs(sf.lam - sb.lam) <= 1e-7

    def test_attainable_data(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        rng = np.random.default_rng(4)
        coeffs = rng.standard_normal(basis.size) * 0.3
        member = basis.synthesize(coeffs)
        k = Region.radial_disc(0.5)
        p = FbepProblem(
            f=f,
            k_region=k,
            j_region=k.complement(),
            h_k=member,
            h_j=member,
            m=1.0,
            degree=8,
        )
        sol = solve_fbep(p, basis=basis)
        assert not sol.saturated
        assert sol.err_k <= 1e-8

    def test_saturation_and_kkt(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        p = make_problem(f.grid, f)
        sol = solve_fbep(p, basis=basis)
        assert sol.saturated
        assert abs(sol.err_j - p.m) <= 1e-6 * max(1.0, p.m)
        assert directional_kkt_check(p, sol, n_directions=50, seed=0) >= -1e-6

    def test_vekua_defect_bound(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        p = make_problem(f.grid, f)
        sol = solve_fbep(p, basis=basis)
        assert sol.vekua_defect <= 1e-9 * max(1.0, np.abs(sol.coeffs).sum())

    def test_homogeneity(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        p1 = make_problem(f.grid, f, m=0.1, h_k_val=1.0)
        t = 3.7
        p2 = make_problem(f.grid, f, m=t * 0.1, h_k_val=t)
        s1 = solve_fbep(p1, basis=basis)
        s2 = solve_fbep(p2, basis=basis)
        assert np.max(np.abs(s2.coeffs - t * s1.coeffs)) <= 1e-9 * t

    def test_infeasible(self, grid_32_64):
        f = Conductivity.exp_x(grid_32_64, 0.1)
        k = Region.radial_disc(0.5)
        p = FbepProblem(
            f=f,
            k_region=k,
            j_region=k.complement(),
            h_k=GridFunction.constant(grid_32_64, 0.0),
            h_j=GridFunction.from_function(grid_32_64, lambda z: np.conj(z)),
            m=1e-8,
            degree=4,
        )
        with pytest.raises(InfeasibleProblemError):
            solve_fbep(p)

    def test_duplicate_elements_dropped(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        doubled = VekuaBasis(alpha=basis.alpha, elements=basis.elements + basis.elements)
        p = make_problem(f.grid, f)
        sol = solve_fbep(p, basis=doubled)
        assert sol.dropped == basis.size
        assert abs(sol.err_j - p.m) <= 1e-6


class TestSelfAdjointSurrogate:
    @pytest.mark.parametrize("region_fn", [Region.radial_disc, lambda a: Region.sector(2 * a)])
    def test_region_form_symmetric(self, basis_exp01_n8, region_fn):
        _, basis = basis_exp01_n8
        region = region_fn(0.5)
        w = region.weights(basis.grid).ravel()
        mat = basis.values_matrix()
        raw = (mat.conj().T @ (w[:, None] * mat)).real
        assert np.max(np.abs(raw - raw.T)) <= 1e-10


class TestConjectureCheck:
    def test_identity_conductivity(self, grid_24_96):
        f = Conductivity.constant(grid_24_96, 1.0)
        p = make_problem(grid_24_96, f, degree=12)
        sol = solve_fbep(p)
        assert fbep_conjecture_check(p, sol) <= 1e-8

    def test_exp_conductivity(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        p = make_problem(f.grid, f)
        sol = solve_fbep(p, basis=basis)
        assert fbep_conjecture_check(p, sol) <= 1e-4

    def test_non_optimal_contrast(self, basis_exp01_n8):
        f, basis = basis_exp01_n8
        p = make_problem(f.grid, f)
        sol = solve_fbep(p, basis=basis)
        best = fbep_conjecture_check(p, sol)
        rng = np.random.default_rng(8)
        sol.coeffs = sol.coeffs + 0.05 * rng.standard_normal(sol.coeffs.size)
        sol.w_star = basis.synthesize(sol.coeffs)
        assert fbep_conjecture_check(p, sol) > 10.0 * max(best, 1e-12)


class TestRestrictionMapNorm:
    def test_identity_for_constant_f(self, grid_32_64):
        f = Conductivity.constant(grid_32_64, 1.0)
        rho = restriction_map_norm(f, Region.annulus(0.5))
        assert abs(rho - 1.0) <= 1e-12

    def test_exp_conductivity_near_one(self, grid_32_64):
        f = Conductivity.exp_x(grid_32_64, 0.1)
        rho = restriction_map_norm(f, Region.annulus(0.5))
        assert 0.9 <= rho <= 1.2

    def test_transformed_data_report(self, basis_exp01_n8):
        f, _ = basis_exp01_n8
        p = make_problem(f.grid, f)
        h_star, m_star = transformed_constraint_data(p)
        assert h_star.values.shape == f.grid.shape
        assert m_star > 0.0
