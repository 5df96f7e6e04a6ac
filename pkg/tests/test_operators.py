import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ipme.core import (GridSpec, Params, ScalarField, DomainError, RangeError,
                       SingularPointError)
from ipme import operators as ops


def quadratic_field(grid, A, b, c0):
    X = grid.points()
    vals = 0.5 * np.einsum("ni,ij,nj->n", X, A, X) + X @ b + c0
    return ScalarField(grid, vals, t=0.0, quantity="v")


GRID2 = GridSpec.box((-1.0, -1.0), (1.0, 1.0), (9, 9))
GRID3 = GridSpec.box((-1.0,) * 3, (1.0,) * 3, (7, 7, 7))


class TestBetaCutoff:
    @given(z=st.floats(-50.0, 50.0), c=st.floats(1e-6, 2.0))
    def test_dominates_abs_and_floor(self, z, c):
        val = ops.beta_c(z, c)
        assert val >= abs(z) - 1e-15
        assert val >= c / 2.0

    @given(z=st.floats(-50.0, 50.0), c=st.floats(1e-6, 2.0))
    def test_even(self, z, c):
        assert ops.beta_c(z, c) == ops.beta_c(-z, c)

    @given(c=st.floats(1e-6, 2.0))
    def test_pieces_meet_at_cutoff(self, c):
        assert ops.beta_c(c, c) == pytest.approx(c, rel=1e-12)
        # quadratic blend below, absolute value above
        assert ops.beta_c(0.0, c) == pytest.approx(c / 2.0, rel=1e-12)
        assert ops.beta_c(3.0 * c, c) == pytest.approx(3.0 * c, rel=1e-12)

    def test_vectorized(self):
        z = np.array([-2.0, 0.0, 0.5, 2.0])
        np.testing.assert_allclose(ops.beta_c(z, 1.0), [2.0, 0.5, 0.625, 2.0])


class TestStencilEval:
    def test_exact_on_quadratics(self):
        A = np.array([[1.3, -0.6], [-0.6, 0.8]])
        b = np.array([0.4, 1.1])
        u = quadratic_field(GRID2, A, b, 0.7)
        node = (4, 3)
        se = ops.stencil_eval(u, node)
        x = GRID2.node_point(node)
        np.testing.assert_allclose(se.grad, A @ x + b, atol=1e-12)
        np.testing.assert_allclose(se.hess, A, atol=1e-12)
        assert se.lap == pytest.approx(np.trace(A), abs=1e-12)
        np.testing.assert_allclose(se.eigs, np.linalg.eigvalsh(A), atol=1e-12)

    def test_exact_quotient_on_quadratics(self):
        A = np.array([[1.3, -0.6], [-0.6, 0.8]])
        b = np.array([0.4, 1.1])
        u = quadratic_field(GRID2, A, b, 0.7)
        node = (5, 2)
        se = ops.stencil_eval(u, node)
        g = A @ GRID2.node_point(node) + b
        want = (g @ A @ g) / (g @ g)
        assert se.inf_lap_reg(0.0) == pytest.approx(want, rel=1e-10)

    def test_three_d_mixed_terms(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(3, 3))
        A = 0.5 * (A + A.T)
        b = rng.normal(size=3)
        u = quadratic_field(GRID3, A, b, 0.2)
        se = ops.stencil_eval(u, (3, 2, 4))
        np.testing.assert_allclose(se.hess, A, atol=1e-10)

    def test_rejects_boundary_node(self):
        u = quadratic_field(GRID2, np.eye(2), np.zeros(2), 0.0)
        with pytest.raises(RangeError, match="not interior"):
            ops.stencil_eval(u, (0, 4))
        with pytest.raises(RangeError, match="not interior"):
            ops.stencil_eval(u, (4, 8))

    def test_singular_point_needs_delta(self):
        # radially symmetric about a node: centered gradient vanishes there
        u = quadratic_field(GRID2, np.eye(2), np.zeros(2), 0.0)
        se = ops.stencil_eval(u, (4, 4))
        assert se.grad @ se.grad == 0.0
        with pytest.raises(SingularPointError):
            se.inf_lap_reg(0.0)
        assert se.inf_lap_reg(1e-3) == 0.0


class TestPointwiseOperators:
    def test_composition(self):
        A = np.diag([0.9, -0.4])
        u = quadratic_field(GRID2, A, np.array([0.2, -0.1]), 1.0)
        params = Params(m=2.0, eps=1e-2, delta=1e-3, c=1e-3)
        node = (3, 6)
        se = ops.stencil_eval(u, node)
        val = float(u.values[node])
        want = params.eps * se.lap \
            + params.k * ops.beta_c(val, params.c) * se.inf_lap_reg(params.delta)
        assert ops.L_eps_delta(u, node, params) == pytest.approx(want, rel=1e-14)
        g2 = float(se.grad @ se.grad)
        assert ops.rhs_full(u, node, params) == pytest.approx(want + g2, rel=1e-14)

    def test_interpolated_op_endpoints(self):
        u = quadratic_field(GRID2, np.array([[1.0, 0.3], [0.3, -0.5]]),
                            np.array([0.6, 0.2]), 0.0)
        node = (2, 5)
        se = ops.stencil_eval(u, node)
        assert ops.interpolated_op(u, node, 1.0) == pytest.approx(se.lap, rel=1e-12)
        assert ops.interpolated_op(u, node, 0.0) == pytest.approx(
            se.inf_lap_reg(ops.INTERP_DELTA), rel=1e-12)

    def test_interpolated_op_rejects_bad_mix(self):
        u = quadratic_field(GRID2, np.eye(2), np.ones(2), 0.0)
        with pytest.raises(DomainError):
            ops.interpolated_op(u, (3, 3), 1.5)


class TestFieldKernels:
    def setup_method(self):
        rng = np.random.default_rng(42)
        self.vals = 1.0 + 0.2 * rng.random(GRID2.shape)
        self.params = Params(m=2.0, eps=1e-2, delta=1e-2, c=1e-3)

    def field(self):
        return ScalarField(GRID2, self.vals, t=0.0)

    def test_matches_pointwise_rhs(self):
        arr = ops.rhs_field(self.vals, GRID2, self.params)
        u = self.field()
        for node in [(1, 1), (4, 3), (7, 7), (2, 6)]:
            want = ops.rhs_full(u, node, self.params)
            assert arr[node[0] - 1, node[1] - 1] == pytest.approx(want, rel=1e-12)

    def test_quad_form_field_matches_stencil(self):
        num, g2, lap = ops.quad_form_field(self.vals, GRID2)
        u = self.field()
        node = (5, 4)
        se = ops.stencil_eval(u, node)
        i, j = node[0] - 1, node[1] - 1
        assert num[i, j] == pytest.approx(float(se.grad @ se.hess @ se.grad), rel=1e-12)
        assert g2[i, j] == pytest.approx(float(se.grad @ se.grad), rel=1e-12)
        assert lap[i, j] == pytest.approx(se.lap, rel=1e-12)

    def test_inf_lap_field_matches_pointwise(self):
        arr = ops.inf_lap_field(self.vals, GRID2, 1e-2)
        se = ops.stencil_eval(self.field(), (3, 3))
        assert arr[2, 2] == pytest.approx(se.inf_lap_reg(1e-2), rel=1e-12)

    def test_grad_norm_sq_consistent(self):
        g2 = ops.grad_norm_sq_field(self.vals, GRID2)
        gi = ops.gradient_field(self.vals, GRID2)
        np.testing.assert_allclose(g2, sum(g * g for g in gi), atol=1e-14)

    def test_rhs_core_returns_running_maxima(self):
        rhs, max_beta, max_g2 = ops.rhs_core(self.vals, GRID2, self.params)
        np.testing.assert_allclose(rhs, ops.rhs_field(self.vals, GRID2, self.params),
                                   atol=1e-14)
        interior = self.vals[GRID2.interior()]
        assert max_beta == pytest.approx(
            float(np.max(ops.beta_c(interior, self.params.c))), rel=1e-14)
        assert max_g2 == pytest.approx(
            float(np.max(ops.grad_norm_sq_field(self.vals, GRID2))), rel=1e-14)


class TestTravelingWaveIdentity:
    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
    def test_rhs_equals_speed_squared_on_wet_set(self, m):
        # planar wave u = c*(a + c*t - x.w)_+ : on the wet set the quotient
        # vanishes (flat along the wave) and |Du|^2 = c^2 exactly
        c_speed = 0.8
        w = np.array([1.0, 0.0])
        grid = GridSpec.box((0.0, 0.0), (1.0, 1.0), (17, 17))
        X = grid.points()
        vals = c_speed * np.maximum(0.9 - X @ w, 0.0)
        params = Params(m=m, eps=0.0, delta=0.0, c=0.0)
        rhs = ops.rhs_field(vals.reshape(grid.shape), grid, params)
        wet = (vals.reshape(grid.shape) > 1e-12)[grid.interior()]
        # one stencil inside the wet region so no difference crosses the kink
        x = grid.axes()[0][1:-1]
        strict = wet & (x[:, None] < 0.9 - 2.0 / 16.0)
        np.testing.assert_allclose(rhs[strict], c_speed**2, atol=1e-13)


class TestFaultInjection:
    def test_flip_changes_mixed_terms_only(self):
        A = np.array([[0.7, 0.5], [0.5, -0.2]])
        u = quadratic_field(GRID2, A, np.array([0.3, 0.1]), 0.0)
        clean = ops.stencil_eval(u, (4, 5))
        try:
            ops.set_fault_injection("stencil-sign-flip")
            bad = ops.stencil_eval(u, (4, 5))
        finally:
            ops.set_fault_injection(None)
        assert bad.hess[0, 1] == pytest.approx(-clean.hess[0, 1], rel=1e-12)
        assert bad.hess[0, 0] == clean.hess[0, 0]
        np.testing.assert_allclose(bad.grad, clean.grad)

    def test_rejects_unknown_mode(self):
        with pytest.raises(DomainError, match="unknown fault mode"):
            ops.set_fault_injection("bit-rot")
