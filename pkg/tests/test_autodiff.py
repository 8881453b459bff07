"""Second-order jets: dual numbers, compiled tapes, and the velocity
Hessian.

Gradients and Hessians are compared against hand-derived closed forms
and against central finite differences computed here, so the two
automatic-differentiation routes never certify each other.
"""

import math

import numpy as np
import pytest

from contactnh.autodiff import Dual2, JetProgram, jet2, velocity_hessian
from contactnh.errors import EvalDomainError, RegularityError
from contactnh.expr import parse
from contactnh.models import LagrangianModel


def fd_gradient(f, point, step=1e-6):
    point = np.asarray(point, dtype=float)
    grad = np.empty(point.size)
    for i in range(point.size):
        up, dn = point.copy(), point.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (f(up) - f(dn)) / (2 * step)
    return grad


def fd_hessian(f, point, step=1e-4):
    point = np.asarray(point, dtype=float)
    m = point.size
    hess = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            pp, pm, mp, mm = (point.copy() for _ in range(4))
            pp[i] += step; pp[j] += step
            pm[i] += step; pm[j] -= step
            mp[i] -= step; mp[j] += step
            mm[i] -= step; mm[j] -= step
            hess[i, j] = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * step * step)
    return hess


CORPUS = [
    ("x^2*y + sin(x*z)", ("x", "y", "z"), [0.7, -1.2, 0.4]),
    ("exp(x)*cos(y) - x/y", ("x", "y"), [0.3, 1.7]),
    ("log(x + 2)*sqrt(y + 3)", ("x", "y"), [0.5, 1.0]),
    ("tan(x)/(1 + y^2)", ("x", "y"), [0.4, -0.8]),
    ("x^3 - 2*x^2 + x - 7", ("x",), [1.3]),
    ("(x + y)^4", ("x", "y"), [0.2, 0.1]),
    ("x^y", ("x", "y"), [1.5, 2.3]),
    ("x^-3 + x^0 + 2^x", ("x",), [1.9]),
    ("sqrt(x^2 + y^2 + 1)", ("x", "y"), [-0.6, 0.9]),
]


@pytest.mark.parametrize("source,variables,point", CORPUS)
def test_jet_matches_finite_differences(source, variables, point):
    program = JetProgram(parse(source), variables)
    point = np.asarray(point)
    value, grad, hess = program.eval(point, order=2)

    def f(p):
        v, _, _ = program.eval(p, order=0)
        return v

    assert value == pytest.approx(f(point), rel=1e-15)
    np.testing.assert_allclose(grad, fd_gradient(f, point),
                               rtol=2e-6, atol=2e-8)
    np.testing.assert_allclose(hess, fd_hessian(f, point),
                               rtol=2e-4, atol=2e-5)


@pytest.mark.parametrize("source,variables,point", CORPUS)
def test_hessian_is_bitwise_symmetric(source, variables, point):
    program = JetProgram(parse(source), variables)
    _, _, hess = program.eval(np.asarray(point), order=2)
    assert np.array_equal(hess, hess.T)


@pytest.mark.parametrize("source,variables,point", CORPUS)
def test_dual_route_agrees_with_tape_route(source, variables, point):
    point = np.asarray(point, dtype=float)
    dual = jet2(parse(source), variables, point)
    value, grad, hess = JetProgram(parse(source), variables).eval(
        point, order=2
    )
    assert dual.value == value
    np.testing.assert_array_equal(dual.grad, grad)
    np.testing.assert_array_equal(dual.hess, hess)


class TestClosedFormJet:
    """f = x^2 y + sin(x z), differentiated by hand."""

    point = np.array([0.7, -1.2, 0.4])

    def jet(self):
        program = JetProgram(
            parse("x^2*y + sin(x*z)"), ("x", "y", "z")
        )
        return program.eval(self.point, order=2)

    def test_value(self):
        x, y, z = self.point
        value, _, _ = self.jet()
        assert value == pytest.approx(x * x * y + math.sin(x * z),
                                      rel=1e-15)

    def test_gradient(self):
        x, y, z = self.point
        _, grad, _ = self.jet()
        c = math.cos(x * z)
        np.testing.assert_allclose(
            grad, [2 * x * y + z * c, x * x, x * c], rtol=1e-14
        )

    def test_hessian(self):
        x, y, z = self.point
        _, _, hess = self.jet()
        s, c = math.sin(x * z), math.cos(x * z)
        expected = np.array(
            [
                [2 * y - z * z * s, 2 * x, c - x * z * s],
                [2 * x, 0.0, 0.0],
                [c - x * z * s, 0.0, -x * x * s],
            ]
        )
        np.testing.assert_allclose(hess, expected, rtol=1e-13, atol=1e-15)


class TestIntegerPowers:
    def test_negative_exponent(self):
        # f = x^-3: f' = -3 x^-4, f'' = 12 x^-5 at x = 2
        value, grad, hess = JetProgram(parse("x^-3"), ("x",)).eval(
            np.array([2.0]), order=2
        )
        assert value == 0.125
        assert grad[0] == -0.1875
        assert hess[0, 0] == 0.375

    def test_zeroth_power(self):
        value, grad, hess = JetProgram(parse("x^0"), ("x",)).eval(
            np.array([3.7]), order=2
        )
        assert value == 1.0
        assert grad[0] == 0.0
        assert hess[0, 0] == 0.0

    def test_first_power_at_zero(self):
        value, grad, _ = JetProgram(parse("x^1"), ("x",)).eval(
            np.array([0.0]), order=2
        )
        assert value == 0.0
        assert grad[0] == 1.0

    def test_zero_to_negative_integer(self):
        with pytest.raises(EvalDomainError):
            JetProgram(parse("x^-1"), ("x",)).eval(np.array([0.0]), order=0)


class TestDomainErrors:
    def test_log_negative(self):
        program = JetProgram(parse("log(x)"), ("x",))
        with pytest.raises(EvalDomainError):
            program.eval(np.array([-1.0]), order=1)

    def test_sqrt_at_zero_value_only(self):
        program = JetProgram(parse("sqrt(x)"), ("x",))
        value, _, _ = program.eval(np.array([0.0]), order=0)
        assert value == 0.0
        with pytest.raises(EvalDomainError):
            program.eval(np.array([0.0]), order=1)

    def test_division_by_zero(self):
        program = JetProgram(parse("1/x"), ("x",))
        with pytest.raises(EvalDomainError):
            program.eval(np.array([0.0]), order=0)

    def test_dual_sqrt_at_zero(self):
        with pytest.raises(EvalDomainError):
            Dual2.variable(0.0, 0, 1).sqrt()

    def test_exp_overflow_is_inf(self):
        value, _, _ = JetProgram(parse("exp(x)"), ("x",)).eval(
            np.array([1e4]), order=0
        )
        assert math.isinf(value)


class TestDual2:
    def test_variable_seeding(self):
        d = Dual2.variable(2.0, 1, 3)
        assert d.value == 2.0
        np.testing.assert_array_equal(d.grad, [0.0, 1.0, 0.0])

    def test_arithmetic_chain(self):
        x = Dual2.variable(1.5, 0, 1)
        f = (x * x + 1.0) / x  # f = x + 1/x, f' = 1 - x^-2, f'' = 2 x^-3
        assert f.value == pytest.approx(1.5 + 1 / 1.5, rel=1e-15)
        assert f.grad[0] == pytest.approx(1 - 1.5 ** -2, rel=1e-14)
        assert f.hess[0, 0] == pytest.approx(2 * 1.5 ** -3, rel=1e-14)

    def test_reverse_operators(self):
        x = Dual2.variable(0.7, 0, 1)
        f = 2.0 / (1.0 - x)
        assert f.value == pytest.approx(2.0 / 0.3, rel=1e-14)
        assert f.grad[0] == pytest.approx(2.0 / 0.3 ** 2, rel=1e-13)

    def test_params_substituted_as_constants(self):
        program = JetProgram(parse("a*x^2"), ("x",), params={"a": 3.0})
        value, grad, _ = program.eval(np.array([2.0]), order=1)
        assert value == 12.0
        assert grad[0] == 12.0


class TestVelocityHessian:
    def test_sledge_determinant_and_inverse(self, sledge):
        state = sledge.check_state
        W, Winv = velocity_hessian(sledge, state)
        assert np.linalg.det(W) == pytest.approx(2.0, abs=1e-12)
        # adjugate oracle for the 3x3 inverse
        adj = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                minor = np.delete(np.delete(W, i, axis=0), j, axis=1)
                adj[j, i] = (-1) ** (i + j) * np.linalg.det(minor)
        np.testing.assert_allclose(Winv, adj / 2.0, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(W @ Winv, np.eye(3), atol=1e-14)

    def test_degenerate_lagrangian_raises(self):
        model = LagrangianModel(
            name="degenerate",
            coords=("x", "y"),
            lagrangian="0.5*(dx + dy)^2",
        )
        state = np.array([0.0, 0.0, 0.1, 0.2, 0.0])
        with pytest.raises(RegularityError):
            velocity_hessian(model, state)
