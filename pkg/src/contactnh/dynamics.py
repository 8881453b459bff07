"""Herglotz vector fields, constrained and unconstrained.

The unconstrained field is the second-order field ``Gamma_L = (qdot, b, L)``
whose acceleration block solves ``W b = RHS`` with

    RHS_i = dL/dq^i + p_i dL/dz - qdot^k d2L/dq^k dqdot^i - L d2L/dz dqdot^i,

so that integral curves satisfy the generalized Euler-Lagrange equations
together with ``zdot = L``.  The constrained field is its projection
``Gamma_{L,Delta} = P(Gamma_L)``; the projection coefficients are exactly
the constraint multipliers of the constrained equations, which the
reports expose as ``lambdas``.
"""

from dataclasses import dataclass

import numpy as np

from .constraints import (
    _null_space_basis,
    constraint_frame,
    project_covector_adjoint,
    project_vector,
)
from .geometry import (
    State,
    contact_frame,
    hamiltonian_vf,
    sharp_apply,
    sharp_lambda,
)

__all__ = [
    "DynamicsReport",
    "herglotz_rhs",
    "gamma_unconstrained",
    "gamma_constrained",
    "reeb_delta",
    "constrained_hamiltonian_vf",
    "complement_tangency_residual",
]


@dataclass(frozen=True)
class DynamicsReport:
    """A computed vector field at one state, with its own diagnostics."""

    gamma: np.ndarray
    lambdas: np.ndarray
    sode_residual: float
    eta_pairing: float
    constraint_pairing: np.ndarray


def herglotz_rhs(model, frame):
    """Right-hand side of ``W b = RHS`` at the frame's state."""
    n = model.n
    vector = frame.state.vector
    L_value, grad, hess = model.lagrangian_jet(vector, order=2)
    p = grad[n : 2 * n]
    B = hess[n : 2 * n, 0:n]
    c = hess[n : 2 * n, 2 * n]
    return (
        grad[:n]
        + grad[2 * n] * p
        - B @ frame.state.qdot
        - L_value * c
    )


def _report(model, frame, gamma, lambdas):
    qdot = frame.state.qdot
    sode_residual = float(np.max(np.abs(gamma[: model.n] - qdot), initial=0.0))
    eta_pairing = float(frame.eta @ gamma + frame.E)
    if model.k:
        phi = model.constraint_set.coeff(frame.state.q)
        constraint_pairing = phi @ gamma[: model.n]
    else:
        constraint_pairing = np.zeros(0)
    return DynamicsReport(
        gamma=gamma,
        lambdas=lambdas,
        sode_residual=sode_residual,
        eta_pairing=eta_pairing,
        constraint_pairing=constraint_pairing,
    )


def gamma_unconstrained(model, frame, state=None):
    """The Herglotz field ``Gamma_L`` at the frame's state.

    ``state`` is accepted for signature symmetry and must match the
    frame's state when given.
    """
    frame = _check_state_argument(frame, state)
    rhs = herglotz_rhs(model, frame)
    b = np.linalg.solve(frame.W, rhs)
    gamma = np.concatenate([frame.state.qdot, b, [frame.L_value]])
    return _report(model, frame, gamma, np.zeros(0))


def gamma_constrained(model, frame, cf, state=None):
    """The constrained field ``Gamma_{L,Delta} = P(Gamma_L)``.

    ``lambdas`` holds the projection coefficients, which coincide with
    the multipliers of the constrained Herglotz equations
    ``W b_Delta = RHS + Phi^T lambda``.
    """
    frame = _check_state_argument(frame, state)
    unconstrained = gamma_unconstrained(model, frame)
    gamma, _, lambdas = project_vector(cf, frame, unconstrained.gamma)
    # the projection leaves the q and z blocks untouched; make the SODE
    # and Herglotz identities exact rather than exact-up-to-rounding
    gamma[: model.n] = frame.state.qdot
    gamma[2 * model.n] = frame.L_value
    return _report(model, frame, gamma, lambdas)


def _check_state_argument(frame, state):
    if state is not None:
        vector = state.vector if isinstance(state, State) else np.asarray(state)
        if not np.array_equal(vector, frame.state.vector):
            raise ValueError("state does not match the frame's state")
    return frame


def reeb_delta(frame, cf):
    """The projected Reeb field ``P(reeb)``."""
    projected, _, _ = project_vector(cf, frame, frame.reeb)
    return projected


def constrained_hamiltonian_vf(model, frame, cf, H_value, dH, route="lambda"):
    """Constrained Hamiltonian field of an observable.

    The three ``route`` values evaluate the three equivalent formulas

    * ``"lambda"``:    ``sharp_{Lambda_Delta}(dH) - H P(reeb)``
    * ``"flat"``:      ``P(sharp(Pstar dH)) - (reeb_Delta(H) + H) P(reeb)``
    * ``"projected"``: ``P(X_H - sharp_Lambda(Qstar dH))``

    which agree to rounding; the cross-check is part of the test suite.
    The result satisfies ``eta(X) = -H``.
    """
    dH = np.asarray(dH, dtype=np.float64)
    H_value = float(H_value)
    r_delta = reeb_delta(frame, cf)
    if route == "lambda":
        Pstar_dH, _ = project_covector_adjoint(cf, frame, dH)
        v, _, _ = project_vector(cf, frame, sharp_lambda(frame, Pstar_dH))
        return v - H_value * r_delta
    if route == "flat":
        Pstar_dH, _ = project_covector_adjoint(cf, frame, dH)
        v, _, _ = project_vector(cf, frame, sharp_apply(frame, Pstar_dH))
        reeb_H = float(dH @ r_delta)
        return v - (reeb_H + H_value) * r_delta
    if route == "projected":
        X_H = hamiltonian_vf(frame, H_value, dH)
        _, Qstar_dH = project_covector_adjoint(cf, frame, dH)
        v, _, _ = project_vector(
            cf, frame, X_H - sharp_lambda(frame, Qstar_dH)
        )
        return v
    raise ValueError(f"unknown route {route!r}")


def _rk4_flow(field, x, t_total, n_steps):
    dt = t_total / n_steps
    y = np.array(x, dtype=np.float64)
    for _ in range(n_steps):
        k1 = field(y)
        k2 = field(y + 0.5 * dt * k1)
        k3 = field(y + 0.5 * dt * k2)
        k4 = field(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def complement_tangency_residual(model, state, flow_time=1e-5, fd_eps=1e-6):
    """Lie-derivative tangency residual of the complement field.

    Flows along ``Q(Gamma_L)`` and measures, by central finite
    differences of pullbacks, how far the Lie derivative of the contact
    form along it is from annihilating a basis of the lifted constraint
    distribution ``{v : phi_tilde^a(v) = 0}``.  Two RK4 micro-steps per
    flow; the expected residual is below 1e-6 on constraint states.
    """
    if not isinstance(state, State):
        state = State.from_vector(np.asarray(state, dtype=np.float64), model.n)
    n = model.n
    dim = 2 * n + 1
    x = state.vector

    def complement_field(vector):
        frame = contact_frame(model, State.from_vector(vector, n))
        cf = constraint_frame(model, frame)
        gamma = gamma_unconstrained(model, frame).gamma
        _, Q_gamma, _ = project_vector(cf, frame, gamma)
        return Q_gamma

    null_q = _null_space_basis(model.constraint_set.coeff(state.q))
    basis = []
    for column in range(null_q.shape[1]):
        v = np.zeros(dim)
        v[:n] = null_q[:, column]
        basis.append(v)
    for i in range(n, dim):
        v = np.zeros(dim)
        v[i] = 1.0
        basis.append(v)

    eps = fd_eps * (1.0 + float(np.max(np.abs(x))))
    worst = 0.0
    for X in basis:
        pairings = []
        for sign in (1.0, -1.0):
            t = sign * flow_time
            y_plus = _rk4_flow(complement_field, x + eps * X, t, 2)
            y_minus = _rk4_flow(complement_field, x - eps * X, t, 2)
            y_base = _rk4_flow(complement_field, x, t, 2)
            eta_t = contact_frame(model, State.from_vector(y_base, n)).eta
            pushed = (y_plus - y_minus) / (2.0 * eps)
            pairings.append(float(eta_t @ pushed))
        residual = (pairings[0] - pairings[1]) / (2.0 * flow_time)
        worst = max(worst, abs(residual))
    return worst
