"""Herglotz fields, constrained projection dynamics, and multipliers.

The damped oscillator pins the unconstrained field against its textbook
equation of motion; constrained fields are validated against an
independently assembled saddle-point system whose multipliers must equal
the projection coefficients.
"""

import numpy as np
import pytest

from contactnh.constraints import constraint_frame, project_velocity
from contactnh.dynamics import (
    constrained_hamiltonian_vf,
    gamma_constrained,
    gamma_unconstrained,
    herglotz_rhs,
    complement_tangency_residual,
    reeb_delta,
)
from contactnh.geometry import contact_frame, flat_apply


def constrained_setup(model, rng, scale=1.0):
    q = scale * rng.uniform(-1, 1, size=model.n)
    qdot = project_velocity(
        model, q, scale * rng.uniform(-1, 1, size=model.n)
    )
    vector = np.concatenate([q, qdot, rng.uniform(-1, 1, size=1)])
    frame = contact_frame(model, vector)
    return frame, constraint_frame(model, frame)


class TestDampedOscillator:
    """L = q̇²/2 − q²/2 + γz obeys q̈ = −q + γq̇ and ż = L."""

    @pytest.mark.parametrize(
        "state", [[0.5, 0.0, 0.1], [1.0, -2.0, 0.0], [-0.3, 0.7, 2.0]]
    )
    def test_equation_of_motion(self, damped_oscillator, state):
        q, qdot, z = state
        gamma = float(damped_oscillator.params["gamma"])
        frame = contact_frame(damped_oscillator, state)
        report = gamma_unconstrained(damped_oscillator, frame)
        L = 0.5 * qdot**2 - 0.5 * q**2 + gamma * z
        np.testing.assert_allclose(
            report.gamma,
            [qdot, -q + gamma * qdot, L],
            rtol=1e-13,
            atol=1e-15,
        )

    def test_diagnostics_are_clean(self, damped_oscillator):
        frame = contact_frame(damped_oscillator, [0.5, 2.0, 0.1])
        report = gamma_unconstrained(damped_oscillator, frame)
        assert report.sode_residual == 0.0
        assert abs(report.eta_pairing) < 1e-14
        assert report.lambdas.size == 0
        assert report.constraint_pairing.size == 0


class TestFreeParticle:
    def test_straight_line_motion(self, free_particle, rng):
        vector = rng.uniform(-1, 1, size=5)
        frame = contact_frame(free_particle, vector)
        report = gamma_unconstrained(free_particle, frame)
        np.testing.assert_allclose(
            report.gamma[2:4], 0.0, atol=1e-14
        )
        assert report.gamma[4] == pytest.approx(
            0.5 * float(vector[2] ** 2 + vector[3] ** 2), rel=1e-14
        )


UNCONSTRAINED_IDS = ["damped_oscillator", "free_particle", "sledge"]


class TestHerglotzStructure:
    @pytest.fixture(params=UNCONSTRAINED_IDS)
    def report_frame(self, request, rng):
        model = request.getfixturevalue(request.param)
        vector = rng.uniform(-1, 1, size=2 * model.n + 1)
        frame = contact_frame(model, vector)
        return model, frame, gamma_unconstrained(model, frame)

    def test_rhs_solves_to_acceleration(self, report_frame):
        model, frame, report = report_frame
        rhs = herglotz_rhs(model, frame)
        np.testing.assert_allclose(
            frame.W @ report.gamma[model.n : 2 * model.n], rhs, atol=1e-12
        )

    def test_field_is_hamiltonian_for_energy(self, report_frame):
        # flat(Γ_L) = dE − (ℛ(E) + E) η
        model, frame, report = report_frame
        reeb_E = float(frame.dE @ frame.reeb)
        expected = frame.dE - (reeb_E + frame.E) * frame.eta
        np.testing.assert_allclose(
            flat_apply(frame, report.gamma), expected, atol=1e-11
        )

    def test_energy_dissipation_rate(self, report_frame):
        # dE(Γ_L) = −ℛ(E) E
        model, frame, report = report_frame
        lhs = float(frame.dE @ report.gamma)
        rhs = -float(frame.dE @ frame.reeb) * frame.E
        assert lhs == pytest.approx(rhs, abs=1e-11)

    def test_state_argument_must_match(self, report_frame):
        model, frame, _ = report_frame
        with pytest.raises(ValueError, match="does not match"):
            gamma_unconstrained(
                model, frame, frame.state.vector + 1.0
            )


CONSTRAINED_IDS = ["sledge", "knife_edge", "holonomic_flat",
                   "exact_differential"]


@pytest.fixture(params=CONSTRAINED_IDS)
def constrained_model(request):
    return request.getfixturevalue(request.param)


class TestConstrainedField:
    def test_tangent_to_distribution(self, constrained_model, rng):
        model = constrained_model
        frame, cf = constrained_setup(model, rng)
        report = gamma_constrained(model, frame, cf)
        # on-shell: the field preserves Phi = 0 along itself
        np.testing.assert_allclose(
            cf.dphibar @ report.gamma, 0.0, atol=1e-12
        )
        np.testing.assert_allclose(
            report.constraint_pairing, 0.0, atol=1e-12
        )

    def test_sode_and_eta_exact(self, constrained_model, rng):
        model = constrained_model
        frame, cf = constrained_setup(model, rng)
        report = gamma_constrained(model, frame, cf)
        assert report.sode_residual == 0.0
        assert report.gamma[2 * model.n] == frame.L_value
        assert abs(report.eta_pairing) < 1e-13

    def test_multiplier_saddle_oracle(self, constrained_model, rng):
        """Independent route: solve the constrained Herglotz equations
        W b − φᵀλ = RHS, φ b = −q̇ᵀ(∂φ/∂q)q̇ as one saddle system."""
        model = constrained_model
        n, k = model.n, model.k
        for _ in range(10):
            frame, cf = constrained_setup(model, rng)
            report = gamma_constrained(model, frame, cf)
            qdot = frame.state.qdot
            jac = model.constraint_set.coeff_jac(frame.state.q)
            M = np.zeros((n + k, n + k))
            M[:n, :n] = frame.W
            M[:n, n:] = -cf.phi.T
            M[n:, :n] = cf.phi
            rhs = np.concatenate(
                [
                    herglotz_rhs(model, frame),
                    [-qdot @ (jac[a] @ qdot) for a in range(k)],
                ]
            )
            solution = np.linalg.solve(M, rhs)
            np.testing.assert_allclose(
                report.gamma[n : 2 * n], solution[:n], atol=1e-10
            )
            np.testing.assert_allclose(
                report.lambdas, solution[n:], atol=1e-10
            )

    def test_reduces_to_unconstrained_when_tangent(self, holonomic_flat):
        # Γ_L of this model already satisfies dq1 = 0 when dq1 = 0
        model = holonomic_flat
        vector = np.array([0.5, 0.8, 0.1, 0.0, -0.4, 0.3, 0.0])
        frame = contact_frame(model, vector)
        cf = constraint_frame(model, frame)
        free = gamma_unconstrained(model, frame)
        held = gamma_constrained(model, frame, cf)
        np.testing.assert_allclose(held.gamma, free.gamma, atol=1e-12)
        np.testing.assert_allclose(held.lambdas, 0.0, atol=1e-12)


class TestReebDelta:
    def test_sledge_keeps_vertical_reeb(self, sledge):
        frame = contact_frame(sledge, sledge.check_state)
        cf = constraint_frame(sledge, frame)
        expected = np.zeros(7)
        expected[6] = 1.0
        np.testing.assert_allclose(
            reeb_delta(frame, cf), expected, atol=1e-14
        )

    def test_pairs_to_one_with_eta(self, constrained_model, rng):
        model = constrained_model
        frame, cf = constrained_setup(model, rng)
        assert frame.eta @ reeb_delta(frame, cf) == pytest.approx(
            1.0, abs=1e-12
        )


class TestConstrainedHamiltonianVF:
    def test_three_routes_agree(self, constrained_model, rng):
        model = constrained_model
        dim = 2 * model.n + 1
        for _ in range(5):
            frame, cf = constrained_setup(model, rng)
            H = float(rng.uniform(-1, 1))
            dH = rng.uniform(-1, 1, size=dim)
            fields = [
                constrained_hamiltonian_vf(
                    model, frame, cf, H, dH, route=route
                )
                for route in ("lambda", "flat", "projected")
            ]
            np.testing.assert_allclose(fields[0], fields[1], atol=1e-10)
            np.testing.assert_allclose(fields[0], fields[2], atol=1e-10)

    def test_eta_pairing(self, constrained_model, rng):
        model = constrained_model
        dim = 2 * model.n + 1
        frame, cf = constrained_setup(model, rng)
        H = float(rng.uniform(-1, 1))
        dH = rng.uniform(-1, 1, size=dim)
        X = constrained_hamiltonian_vf(model, frame, cf, H, dH)
        assert frame.eta @ X == pytest.approx(-H, abs=1e-10)

    def test_energy_field_is_gamma(self, constrained_model, rng):
        model = constrained_model
        frame, cf = constrained_setup(model, rng)
        report = gamma_constrained(model, frame, cf)
        X_E = constrained_hamiltonian_vf(
            model, frame, cf, frame.E, frame.dE
        )
        np.testing.assert_allclose(X_E, report.gamma, atol=1e-10)

    def test_unknown_route(self, sledge):
        frame = contact_frame(sledge, sledge.check_state)
        cf = constraint_frame(sledge, frame)
        with pytest.raises(ValueError, match="route"):
            constrained_hamiltonian_vf(
                sledge, frame, cf, 0.0, np.zeros(7), route="midpoint"
            )


class TestComplementTangency:
    @pytest.mark.parametrize("name", ["sledge", "knife_edge"])
    def test_residual_small_on_shell(self, request, name):
        model = request.getfixturevalue(name)
        assert complement_tangency_residual(model, model.check_state) < 1e-6
