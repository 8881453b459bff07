"""Fixed-step integration: accuracy, sampling grid, dissipation
diagnostics, drift, and abort behavior.

The damped oscillator has the closed-form solution

    q(t) = e^{γt/2} (q0 cos ωt + (v0 − γ q0/2)/ω sin ωt),  ω = √(1 − γ²/4)

(the contact damping enters with the opposite sign of the usual drag), so
endpoint errors and the energy-rate law dE/dt = γE are testable without a
second integrator.
"""

import math

import numpy as np
import pytest

from contactnh.integrate import Trajectory, convergence_order, integrate
from contactnh.models import LagrangianModel


def closed_form(t, q0, v0, gamma):
    omega = math.sqrt(1.0 - gamma * gamma / 4.0)
    ect = math.exp(0.5 * gamma * t)
    return ect * (
        q0 * math.cos(omega * t)
        + (v0 - 0.5 * gamma * q0) / omega * math.sin(omega * t)
    )


class TestClosedForm:
    def test_short_window_accuracy(self, damped_oscillator):
        gamma = float(damped_oscillator.params["gamma"])
        q0, v0 = 0.5, 0.0
        run = integrate(
            damped_oscillator, "unconstrained", [q0, v0, 0.1],
            0.0, 2.0, 1e-3,
        )
        assert not run.aborted
        worst = max(
            abs(state.q[0] - closed_form(t, q0, v0, gamma))
            for t, state in zip(run.times, run.states)
        )
        assert worst < 1e-10

    def test_energy_rate_along_run(self, damped_oscillator):
        gamma = float(damped_oscillator.params["gamma"])
        run = integrate(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.1],
            0.0, 1.0, 1e-3,
        )
        # E(t) = E(0) e^{γt}
        expected = run.energy[0] * np.exp(gamma * run.times)
        np.testing.assert_allclose(run.energy, expected, rtol=1e-9)

    def test_eta_residual_stays_zero(self, damped_oscillator):
        run = integrate(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.1],
            0.0, 1.0, 1e-2,
        )
        assert np.max(np.abs(run.eta_residual)) < 1e-12


class TestSamplingGrid:
    def test_exact_span_row_count(self, damped_oscillator):
        run = integrate(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.0],
            0.0, 1.0, 1e-1,
        )
        assert run.n_samples == 11
        np.testing.assert_allclose(run.times, np.arange(11) * 0.1,
                                   atol=1e-12)

    def test_partial_final_step(self, damped_oscillator):
        # floor(0.0105/0.001) + 1 = 11 grid samples plus the t1 landing
        run = integrate(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.0],
            0.0, 0.0105, 1e-3,
        )
        assert run.n_samples == 12
        assert run.times[-1] == pytest.approx(0.0105, abs=1e-15)
        assert run.times[-2] == pytest.approx(0.010, abs=1e-12)

    def test_zero_span(self, damped_oscillator):
        run = integrate(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.0],
            0.0, 0.0, 1e-3,
        )
        assert run.n_samples == 1
        assert run.times[0] == 0.0

    def test_offset_origin(self, damped_oscillator):
        run = integrate(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.0],
            2.0, 2.5, 1e-1,
        )
        assert run.times[0] == 2.0
        assert run.times[-1] == pytest.approx(2.5, abs=1e-12)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"t0": 0.0, "t1": 1.0, "dt": 0.0},
            {"t0": 0.0, "t1": 1.0, "dt": -0.1},
            {"t0": 1.0, "t1": 0.0, "dt": 0.1},
        ],
    )
    def test_grid_validation(self, damped_oscillator, kwargs):
        with pytest.raises(ValueError):
            integrate(
                damped_oscillator, "unconstrained", [0.5, 0.0, 0.0],
                **kwargs,
            )

    def test_unknown_field_kind(self, damped_oscillator):
        with pytest.raises(ValueError, match="field kind"):
            integrate(
                damped_oscillator, "leapfrog", [0.5, 0.0, 0.0],
                0.0, 1.0, 0.1,
            )

    def test_wrong_state_length(self, damped_oscillator):
        with pytest.raises(ValueError):
            integrate(
                damped_oscillator, "unconstrained", [0.5, 0.0],
                0.0, 1.0, 0.1,
            )


class TestConstrainedRuns:
    def test_sledge_drift_stays_at_rounding(self, sledge):
        run = integrate(
            sledge, "constrained", sledge.check_state, 0.0, 2.0, 1e-3
        )
        assert not run.aborted
        assert run.warnings == ()
        assert np.max(np.abs(run.constraint_residual)) < 1e-9

    def test_projection_flag_keeps_manifold(self, sledge):
        run = integrate(
            sledge, "constrained", sledge.check_state, 0.0, 2.0, 1e-3,
            project=True,
        )
        assert np.max(np.abs(run.constraint_residual)) < 1e-12

    def test_off_manifold_start_warns(self, sledge):
        state = sledge.check_state.vector.copy()
        state[3] += 0.25  # breaks the knife constraint
        run = integrate(sledge, "constrained", state, 0.0, 0.01, 1e-3)
        assert len(run.warnings) == 1
        assert "violates" in run.warnings[0]

    def test_knife_edge_conserves_shape(self, knife_edge):
        run = integrate(
            knife_edge, "constrained", knife_edge.check_state,
            0.0, 1.0, 1e-3,
        )
        assert not run.aborted
        assert np.max(np.abs(run.constraint_residual)) < 1e-9
        assert run.constraint_residual.shape == (run.n_samples, 1)

    def test_unconstrained_kind_ignores_constraints(self, sledge):
        run = integrate(
            sledge, "unconstrained", sledge.check_state, 0.0, 0.1, 1e-2
        )
        assert not run.aborted
        assert run.constraint_residual.shape == (run.n_samples, 1)


@pytest.fixture(scope="module")
def shrinking():
    """Velocity Hessian (1 − q) vanishes at q = 1."""
    return LagrangianModel(
        name="shrinking",
        coords=("q",),
        lagrangian="0.5*(1 - q)*dq^2",
    )


@pytest.fixture(scope="module")
def blowup():
    """q̈ = q³ escapes in finite time near t ≈ 0.63."""
    return LagrangianModel(
        name="blowup",
        coords=("q",),
        lagrangian="0.5*dq^2 + 0.25*q^4",
    )


class TestAbort:
    def test_abort_mid_run(self, blowup):
        run = integrate(
            blowup, "unconstrained", [2.0, 2.0, 0.0], 0.0, 2.0, 1e-2
        )
        assert run.aborted
        assert run.n_samples > 1
        assert math.isfinite(run.failure_time)
        assert "singular" in run.failure_message
        assert run.failure_time <= 2.0
        assert run.times[-1] <= run.failure_time + 1e-12

    def test_abort_at_start(self, shrinking):
        run = integrate(
            shrinking, "unconstrained", [1.0, 0.5, 0.0], 0.0, 1.0, 1e-2
        )
        assert run.aborted
        assert run.n_samples == 0
        assert run.failure_time == 0.0

    def test_partial_samples_are_usable(self, blowup):
        run = integrate(
            blowup, "unconstrained", [2.0, 2.0, 0.0], 0.0, 2.0, 1e-2
        )
        assert isinstance(run, Trajectory)
        assert len(run.states) == run.n_samples
        assert run.energy.shape == (run.n_samples,)
        assert np.all(np.isfinite(run.energy))


class TestConvergenceOrder:
    def test_unconstrained_is_fourth_order(self, damped_oscillator):
        order = convergence_order(
            damped_oscillator, "unconstrained", [0.5, 0.0, 0.1],
            0.5, [4e-2, 2e-2, 1e-2],
        )
        assert order == pytest.approx(4.0, abs=0.3)

    def test_constrained_is_fourth_order(self, sledge):
        order = convergence_order(
            sledge, "constrained", sledge.check_state,
            0.5, [4e-2, 2e-2, 1e-2],
        )
        assert order == pytest.approx(4.0, abs=0.3)

    def test_needs_three_steps(self, damped_oscillator):
        with pytest.raises(ValueError):
            convergence_order(
                damped_oscillator, "unconstrained", [0.5, 0.0, 0.1],
                0.5, [1e-2, 5e-3],
            )
