import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legpcg.coefficients import (CoefficientField, constant_field, preset,
                                 zero_field)
from legpcg.operator import (ProblemSpec, SpectralCoeffs, apply_A, apply_B,
                             apply_system, assemble_rhs)
from legpcg.oracle import dense_assemble, dense_solve
from legpcg.transforms import TransformPlan, transform_counter


def unit(k, n, dim=1):
    data = np.zeros((n,) * dim)
    data[(k,) * dim if dim > 1 else k] = 1.0
    return SpectralCoeffs(data)


def make_spec(dim, n, beta=None, alpha=None, **kw):
    return ProblemSpec(dim=dim, N=n,
                       beta=beta if beta is not None else constant_field(dim, 1.0),
                       alpha=alpha, **kw)


class TestApplyA:
    def test_constant_coefficient_diagonal(self):
        n = 10
        spec = make_spec(1, n)
        plan = TransformPlan(n + 1)
        for k in range(n - 1):
            out = apply_A(spec, plan, unit(k, n - 1))
            expected = np.zeros(n - 1)
            expected[k] = 4 * k + 6
            np.testing.assert_allclose(out.data, expected, atol=1e-11)

    def test_1d_variable_coefficient_oracle(self):
        n = 8
        spec = make_spec(1, n, beta=CoefficientField(
            1, lambda x: np.exp(2 * x), name="e^{2x}"))
        plan = TransformPlan(n + 1)
        a = dense_assemble(spec, which="A")
        rng = np.random.default_rng(1)
        for _ in range(20):
            u = rng.standard_normal(n - 1)
            out = apply_A(spec, plan, SpectralCoeffs(u))
            np.testing.assert_allclose(out.data, a @ u, atol=1e-11)

    def test_2d_variable_coefficient_oracle(self):
        n = 6
        spec = make_spec(2, n, beta=CoefficientField(
            2, lambda x, y: (2 * x ** 2 + 2 * y ** 2 + 1) ** 4,
            name="(2x^2+2y^2+1)^4"))
        plan = TransformPlan(n + 1)
        a = dense_assemble(spec, which="A")
        rng = np.random.default_rng(2)
        u = rng.standard_normal((n - 1, n - 1))
        out = apply_A(spec, plan, SpectralCoeffs(u))
        np.testing.assert_allclose(out.data.flatten(order="F"),
                                   a @ u.flatten(order="F"), atol=1e-10)

    def test_nonpositive_diffusion_rejected(self):
        n = 8
        spec = make_spec(1, n, beta=CoefficientField(
            1, lambda x: x, name="x"))
        plan = TransformPlan(n + 1)
        with pytest.raises(ValueError, match="not positive"):
            apply_A(spec, plan, unit(0, n - 1))

    def test_shape_and_plan_mismatch(self):
        spec = make_spec(1, 8)
        with pytest.raises(ValueError):
            apply_A(spec, TransformPlan(8), unit(0, 7))
        with pytest.raises(ValueError):
            apply_A(spec, TransformPlan(9), unit(0, 6))


class TestApplyB:
    def test_zero_reaction(self):
        n = 8
        spec = make_spec(1, n, alpha=zero_field(1))
        out = apply_B(spec, TransformPlan(n + 1), unit(2, n - 1))
        np.testing.assert_array_equal(out.data, np.zeros(n - 1))

    def test_unit_reaction_pentadiagonal_mass(self):
        n = 10
        spec = make_spec(1, n, alpha=constant_field(1, 1.0))
        plan = TransformPlan(n + 1)
        k_arr = np.arange(n - 1)
        diag = 2 / (2 * k_arr + 1) + 2 / (2 * k_arr + 5)
        mass = np.diag(diag)
        off = -2 / (2 * k_arr[:-2] + 5)
        mass += np.diag(off, 2) + np.diag(off, -2)
        for k in range(n - 1):
            out = apply_B(spec, plan, unit(k, n - 1))
            np.testing.assert_allclose(out.data, mass[:, k], atol=1e-12)

    def test_3d_oracle(self):
        n = 5
        spec = make_spec(3, n, alpha=CoefficientField(
            3, lambda x, y, z: np.cos(x + y + z), name="cos(x+y+z)"))
        plan = TransformPlan(n + 1)
        b = dense_assemble(spec, which="B")
        rng = np.random.default_rng(3)
        u = rng.standard_normal((n - 1,) * 3)
        out = apply_B(spec, plan, SpectralCoeffs(u))
        np.testing.assert_allclose(out.data.flatten(order="F"),
                                   b @ u.flatten(order="F"), atol=1e-10)


class TestApplySystem:
    def test_reduces_to_diffusion_without_reaction(self):
        n = 9
        spec = make_spec(1, n, beta=CoefficientField(
            1, lambda x: np.exp(x), name="e^x"), alpha=zero_field(1))
        plan = TransformPlan(n + 1)
        rng = np.random.default_rng(4)
        u = SpectralCoeffs(rng.standard_normal(n - 1))
        np.testing.assert_array_equal(apply_system(spec, plan, u).data,
                                      apply_A(spec, plan, u).data)

    def test_sum_of_parts(self):
        n = 7
        spec = make_spec(2, n, beta=CoefficientField(
            2, lambda x, y: np.exp(x + y), name="e^{x+y}"),
            alpha=CoefficientField(2, lambda x, y: np.cos(x + y),
                                   name="cos(x+y)"))
        plan = TransformPlan(n + 1)
        rng = np.random.default_rng(5)
        u = SpectralCoeffs(rng.standard_normal((n - 1, n - 1)))
        total = apply_system(spec, plan, u).data
        parts = apply_A(spec, plan, u).data + apply_B(spec, plan, u).data
        np.testing.assert_allclose(total, parts, atol=1e-13)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=20, deadline=None)
    def test_linearity(self, a, b):
        n = 8
        spec = make_spec(1, n, beta=CoefficientField(
            1, lambda x: 2 + np.sin(x), name="2+sin(x)"),
            alpha=constant_field(1, 1.0))
        plan = TransformPlan(n + 1)
        rng = np.random.default_rng(6)
        u = rng.standard_normal(n - 1)
        v = rng.standard_normal(n - 1)
        lhs = apply_system(spec, plan, SpectralCoeffs(a * u + b * v)).data
        rhs = a * apply_system(spec, plan, SpectralCoeffs(u)).data \
            + b * apply_system(spec, plan, SpectralCoeffs(v)).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-11)

    @pytest.mark.parametrize("case,n", [("example1a", 12), ("example2a", 8),
                                        ("example3a", 6)])
    def test_symmetry_and_positivity(self, case, n):
        p = preset(case)
        spec = ProblemSpec(dim=p["dim"], N=n, beta=p["beta"],
                           alpha=p["alpha"])
        plan = TransformPlan(n + 1)
        rng = np.random.default_rng(7)
        shape = (n - 1,) * p["dim"]
        for _ in range(5):
            u = rng.standard_normal(shape)
            v = rng.standard_normal(shape)
            au = apply_system(spec, plan, SpectralCoeffs(u)).data
            av = apply_system(spec, plan, SpectralCoeffs(v)).data
            scale = max(np.max(np.abs(au)), np.max(np.abs(av)), 1.0)
            assert abs(np.vdot(au, v) - np.vdot(u, av)) <= 1e-11 * scale * u.size
            assert np.vdot(au, u) > 0

    @pytest.mark.parametrize("dim,n", [(1, 12), (2, 8), (3, 6)])
    def test_transform_count(self, dim, n):
        spec = make_spec(dim, n, beta=constant_field(dim, 2.0),
                         alpha=constant_field(dim, 1.0))
        plan = TransformPlan(n + 1)
        u = SpectralCoeffs(np.ones((n - 1,) * dim))
        apply_system(spec, plan, u)  # populate coefficient caches
        with transform_counter() as tc:
            apply_system(spec, plan, u)
        # d backward + d forward for the diffusion part, 1 + 1 for reaction
        assert tc.count == 2 * dim + 2

    def test_anisotropic_matches_isotropic_when_betas_agree(self):
        n = 7
        iso = make_spec(2, n, beta=constant_field(2, 1.5),
                        alpha=zero_field(2))
        aniso = ProblemSpec(dim=2, N=n, alpha=zero_field(2),
                            axis_betas=(constant_field(1, 1.5),
                                        constant_field(1, 1.5)))
        plan = TransformPlan(n + 1)
        rng = np.random.default_rng(8)
        u = SpectralCoeffs(rng.standard_normal((n - 1, n - 1)))
        np.testing.assert_allclose(apply_system(iso, plan, u).data,
                                   apply_system(aniso, plan, u).data,
                                   atol=1e-12)


class TestAssembleRhs:
    def test_zero_rhs(self):
        n = 8
        spec = make_spec(1, n, rhs=zero_field(1))
        out = assemble_rhs(spec, TransformPlan(n + 1))
        np.testing.assert_array_equal(out.data, np.zeros(n - 1))

    def test_missing_rhs(self):
        spec = make_spec(1, 8)
        with pytest.raises(ValueError):
            assemble_rhs(spec, TransformPlan(9))

    def test_basis_function_rhs_gives_mass_column(self):
        # f = phi_3 pointwise: F_k = (phi_3, phi_k), a mass-matrix column
        n = 12

        def phi3(x):
            from legpcg.legendre import eval_legendre
            return eval_legendre(3, x) - eval_legendre(5, x)

        spec = make_spec(1, n, rhs=CoefficientField(1, phi3, name="phi_3"))
        out = assemble_rhs(spec, TransformPlan(n + 1))
        k_arr = np.arange(n - 1)
        expected = np.zeros(n - 1)
        expected[3] = 2 / (2 * 3 + 1) + 2 / (2 * 3 + 5)
        expected[1] = -2 / (2 * 1 + 5)
        expected[5] = -2 / (2 * 3 + 5)
        assert k_arr.size == n - 1
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    def test_manufactured_solution_2d(self):
        # -div(grad u*) = f with u* = sin(pi x) sin(pi y)
        n = 24
        spec = make_spec(
            2, n, beta=constant_field(2, 1.0), alpha=zero_field(2),
            rhs=CoefficientField(
                2, lambda x, y: 2 * np.pi ** 2 * np.sin(np.pi * x)
                * np.sin(np.pi * y), name="manufactured"))
        plan = TransformPlan(n + 1)
        f = assemble_rhs(spec, plan)
        sysmat = dense_assemble(spec, which="sum")
        u = dense_solve(sysmat, f.data.flatten(order="F"))
        uhat = u.reshape((n - 1, n - 1), order="F")

        # evaluate the spectral solution on the Gauss grid
        from legpcg.legendre import legendre_table, phi_to_legendre
        lc = phi_to_legendre(phi_to_legendre(uhat, axis=0), axis=1)
        tab = legendre_table(plan.rule.nodes, n)
        grid = tab @ lc @ tab.T
        x = plan.rule.nodes
        exact = np.outer(np.sin(np.pi * x), np.sin(np.pi * x))
        w = plan.rule.weights
        err = np.sqrt(np.einsum("i,j,ij->", w, w, (grid - exact) ** 2))
        assert err < 1e-10
