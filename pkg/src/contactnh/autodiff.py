"""Second-order forward-mode automatic differentiation.

Gradients and Hessians here are exact to floating-point rounding; there is
no truncation error anywhere in the pipeline.  Two independent routes are
provided on purpose:

* :class:`Dual2` is a scalar carrying ``(value, grad, hess)`` through the
  generic evaluator in :mod:`contactnh.expr`;
* :func:`jet2` compiles the expression to a tape (see
  :mod:`contactnh.tape`) and runs it through the selected kernel backend.

Both produce bitwise symmetric Hessians; the test suite cross-checks one
against the other.  All of the geometry downstream (velocity Hessian,
contact form blocks, energy differential) is built from these jets.
"""

import math

import numpy as np

from . import backend
from .errors import EvalDomainError, RegularityError
from .tape import compile_tape, error_message

__all__ = ["Dual2", "jet2", "JetProgram", "velocity_hessian"]


def _sym_outer(a, b):
    # outer(a, b) + outer(b, a) is bitwise symmetric: entries (i, j) and
    # (j, i) are the same two products summed in the same order.
    return np.outer(a, b) + np.outer(b, a)


class Dual2:
    """A scalar with exact first and second derivatives attached.

    ``grad`` has one entry per active variable and ``hess`` is the
    matching bitwise-symmetric matrix of second partials.  Arithmetic
    follows the same domain rules as the tape kernels: division by an
    exact zero, ``log`` of a non-positive value, ``sqrt`` at or below
    zero, and powers with non-positive base and non-integer exponent all
    raise :class:`EvalDomainError`.
    """

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=np.float64)
        self.hess = np.asarray(hess, dtype=np.float64)

    @classmethod
    def constant(cls, value, n_vars):
        return cls(value, np.zeros(n_vars), np.zeros((n_vars, n_vars)))

    @classmethod
    def variable(cls, value, index, n_vars):
        grad = np.zeros(n_vars)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((n_vars, n_vars)))

    def _lift(self, other):
        if isinstance(other, Dual2):
            return other
        return Dual2.constant(float(other), len(self.grad))

    # -- arithmetic -------------------------------------------------------

    def __neg__(self):
        return Dual2(-self.value, -self.grad, -self.hess)

    def __add__(self, other):
        other = self._lift(other)
        return Dual2(
            self.value + other.value,
            self.grad + other.grad,
            self.hess + other.hess,
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Dual2(
            self.value - other.value,
            self.grad - other.grad,
            self.hess - other.hess,
        )

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        return Dual2(
            self.value * other.value,
            other.value * self.grad + self.value * other.grad,
            other.value * self.hess
            + self.value * other.hess
            + _sym_outer(self.grad, other.grad),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        if other.value == 0.0:
            raise EvalDomainError("division by zero")
        f = self.value / other.value
        fg = (self.grad - f * other.grad) / other.value
        fh = (
            (self.hess - f * other.hess) - _sym_outer(fg, other.grad)
        ) / other.value
        return Dual2(f, fg, fh)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, other):
        if isinstance(other, Dual2):
            return self._pow_dual(other)
        exponent = float(other)
        if exponent == math.floor(exponent) and abs(exponent) <= 2**31 - 1:
            return self._pow_int(int(exponent))
        return self._pow_const(exponent)

    def __rpow__(self, other):
        return self._lift(other)._pow_dual(self)

    def _pow_int(self, n):
        u = self.value
        if n == 0:
            return Dual2.constant(1.0, len(self.grad))
        if n == 1:
            return Dual2(u, self.grad.copy(), self.hess.copy())
        if u == 0.0 and n < 0:
            raise EvalDomainError("division by zero")
        fp = n * math.pow(u, n - 1)
        fpp = (n * (n - 1)) * math.pow(u, n - 2)
        return self._chain(math.pow(u, n), fp, fpp)

    def _pow_const(self, c):
        u = self.value
        if u <= 0.0:
            raise EvalDomainError("power outside its domain")
        fp = c * math.pow(u, c - 1.0)
        fpp = (c * (c - 1.0)) * math.pow(u, c - 2.0)
        return self._chain(math.pow(u, c), fp, fpp)

    def _pow_dual(self, other):
        u = self.value
        if u <= 0.0:
            raise EvalDomainError("power outside its domain")
        lu = math.log(u)
        f = _exp(other.value * lu)
        wu = other.value / u
        gg = lu * other.grad + wu * self.grad
        gh = (
            lu * other.hess
            + _sym_outer(other.grad, self.grad) / u
            + wu * self.hess
            - (other.value / (u * u)) * np.outer(self.grad, self.grad)
        )
        return Dual2(f, f * gg, f * (gh + np.outer(gg, gg)))

    def _chain(self, f, fp, fpp):
        # lift a scalar function with derivatives fp, fpp at self.value
        return Dual2(
            f,
            fp * self.grad,
            fp * self.hess + fpp * np.outer(self.grad, self.grad),
        )

    # -- primitive functions ----------------------------------------------

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(c, -s, -c)

    def tan(self):
        t = math.tan(self.value)
        sec2 = 1.0 + t * t
        return self._chain(t, sec2, (2.0 * t) * sec2)

    def exp(self):
        e = _exp(self.value)
        return self._chain(e, e, e)

    def log(self):
        u = self.value
        if u <= 0.0:
            raise EvalDomainError("log of a non-positive value")
        return self._chain(math.log(u), 1.0 / u, -1.0 / (u * u))

    def sqrt(self):
        u = self.value
        if u < 0.0:
            raise EvalDomainError("sqrt of a negative value")
        if u == 0.0:
            raise EvalDomainError(
                "sqrt is not differentiable at zero"
            )
        r = math.sqrt(u)
        return self._chain(r, 0.5 / r, -0.25 / (r * u))

    def __repr__(self):
        return f"Dual2({self.value!r}, grad={self.grad!r})"


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


_EMPTY_GRAD = np.empty((0, 0))
_EMPTY_HESS = np.empty((0, 0, 0))


class JetProgram:
    """An expression compiled once against a variable ordering.

    ``eval`` executes the tape through the active kernel backend and
    returns ``(value, gradient, hessian)``, the higher-order slots being
    ``None`` when a lower ``order`` was requested.  Instances are cheap to
    call repeatedly; this is the hot path under the integrator.
    """

    __slots__ = ("variables", "tape")

    def __init__(self, expression, variables, params=None):
        self.variables = tuple(variables)
        self.tape = compile_tape(expression, self.variables, params)

    def eval(self, point, order=2):
        tape = self.tape
        point = np.ascontiguousarray(point, dtype=np.float64)
        if point.shape != (tape.n_vars,):
            raise ValueError(
                f"point has shape {point.shape}, expected ({tape.n_vars},)"
            )
        val = np.empty(tape.n_slots)
        grad = (
            np.empty((tape.n_slots, tape.n_vars))
            if order >= 1
            else _EMPTY_GRAD
        )
        hess = (
            np.empty((tape.n_slots, tape.n_vars, tape.n_vars))
            if order >= 2
            else _EMPTY_HESS
        )
        status, instr = backend.eval_tape(
            tape.code, tape.consts, point, order, val, grad, hess
        )
        if status != 0:
            text, offset = error_message(tape, status, instr)
            raise EvalDomainError(text, offset=offset)
        return (
            float(val[-1]),
            grad[-1].copy() if order >= 1 else None,
            hess[-1].copy() if order >= 2 else None,
        )

    def value(self, point):
        return self.eval(point, order=0)[0]


_PROGRAM_CACHE = {}
_PROGRAM_CACHE_MAX = 512


def _cached_program(expression, variables, params):
    key = (
        expression._key(),
        tuple(variables),
        tuple(sorted(params.items())) if params else (),
    )
    program = _PROGRAM_CACHE.get(key)
    if program is None:
        if len(_PROGRAM_CACHE) >= _PROGRAM_CACHE_MAX:
            _PROGRAM_CACHE.clear()
        program = JetProgram(expression, variables, params)
        _PROGRAM_CACHE[key] = program
    return program


def jet2(e, order, point, params=None):
    """Value, gradient and Hessian of ``e`` at ``point``.

    ``order`` is the variable ordering fixing which slot of the gradient
    each name maps to.  Returns a :class:`Dual2`.
    """
    value, grad, hess = _cached_program(e, order, params).eval(
        point, order=2
    )
    return Dual2(value, grad, hess)


def velocity_hessian(model, state):
    """Velocity Hessian of the model's Lagrangian and its inverse.

    Raises :class:`RegularityError` when ``|det W|`` falls below the
    scale-aware threshold ``1e-12 * (1 + ||W||_inf^n)``.
    """
    vector = np.asarray(getattr(state, "vector", state), dtype=np.float64)
    n = model.n
    _, _, hess = model.lagrangian_jet(vector, order=2)
    W = np.ascontiguousarray(hess[n : 2 * n, n : 2 * n])
    det = float(np.linalg.det(W))
    scale = 1.0 + float(np.linalg.norm(W, np.inf)) ** n
    if abs(det) < 1e-12 * scale:
        raise RegularityError(
            f"velocity Hessian is singular (|det| = {abs(det):.3e}) at "
            f"state {vector.tolist()}"
        )
    return W, np.linalg.inv(W)
