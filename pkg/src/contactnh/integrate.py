"""Fixed-step RK4 integration of the Herglotz fields with diagnostics.

The integrator is deliberately plain: classical fourth-order Runge-Kutta
with a fixed step, a final short step to land exactly on ``t1``, and no
post-step manifold projection by default (the constrained field is exactly
tangent to the constraint manifold, so drift is itself a diagnostic).  An
optional least-squares velocity projection is available for long runs.

Numerical breakdown (singular velocity Hessian, degenerate constraint
Gram matrix, non-finite state) aborts the run and returns the partial
trajectory together with the failing time.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constraints import constraint_frame, project_velocity
from .dynamics import gamma_constrained, gamma_unconstrained
from .errors import DegeneracyError, RegularityError
from .geometry import State, contact_frame

__all__ = ["Trajectory", "integrate", "convergence_order", "FIELD_KINDS"]

FIELD_KINDS = ("unconstrained", "constrained")


@dataclass(frozen=True)
class Trajectory:
    """Samples of one integration run with per-sample diagnostics.

    ``constraint_residual`` has one column per constraint; ``aborted``
    runs carry the failing time and message, and hold every sample
    accepted before the failure.
    """

    times: np.ndarray
    states: tuple
    energy: np.ndarray
    eta_residual: np.ndarray
    constraint_residual: np.ndarray
    lagrangian: np.ndarray
    aborted: bool
    failure_time: float
    failure_message: str
    warnings: tuple

    @property
    def n_samples(self):
        return len(self.times)


class _Recorder:
    def __init__(self, k):
        self.k = k
        self.times = []
        self.states = []
        self.energy = []
        self.eta_residual = []
        self.constraint_residual = []
        self.lagrangian = []

    def add(self, t, state, frame, report):
        self.times.append(t)
        self.states.append(state)
        self.energy.append(frame.E)
        self.eta_residual.append(report.eta_pairing)
        self.constraint_residual.append(report.constraint_pairing)
        self.lagrangian.append(frame.L_value)

    def finish(self, aborted, failure_time, failure_message, warnings):
        return Trajectory(
            times=np.array(self.times),
            states=tuple(self.states),
            energy=np.array(self.energy),
            eta_residual=np.array(self.eta_residual),
            constraint_residual=(
                np.array(self.constraint_residual).reshape(
                    len(self.times), self.k
                )
            ),
            lagrangian=np.array(self.lagrangian),
            aborted=aborted,
            failure_time=failure_time,
            failure_message=failure_message,
            warnings=tuple(warnings),
        )


def _field_report(model, kind, vector):
    state = State.from_vector(vector, model.n)
    frame = contact_frame(model, state)
    if kind == "constrained":
        cf = constraint_frame(model, frame)
        return frame, gamma_constrained(model, frame, cf)
    return frame, gamma_unconstrained(model, frame)


def integrate(model, field_kind, state0, t0, t1, dt, project=False):
    """Integrate ``model``'s field from ``t0`` to ``t1``.

    ``field_kind`` is ``"unconstrained"`` or ``"constrained"``.  Samples
    are taken at every step start and at ``t1``; the row count is
    ``floor((t1 - t0)/dt) + 1`` plus one more when a final partial step
    is needed.
    """
    if field_kind not in FIELD_KINDS:
        raise ValueError(f"unknown field kind {field_kind!r}")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if not isinstance(state0, State):
        state0 = State.from_vector(
            np.asarray(state0, dtype=np.float64), model.n
        )

    warnings = []
    if field_kind == "constrained" and model.k:
        residual = np.max(np.abs(model.constraint_set.values(state0)))
        if residual > 1e-8:
            warnings.append(
                f"initial state violates the constraints "
                f"(max |Phibar| = {residual:.3e})"
            )

    span = t1 - t0
    n_full = int(math.floor(span / dt + 1e-9))
    remainder = span - n_full * dt
    if remainder <= 1e-12 * (1.0 + abs(span)):
        remainder = 0.0
    step_sizes = [dt] * n_full + ([remainder] if remainder else [])

    recorder = _Recorder(model.k)
    y = state0.vector
    for i, h in enumerate(step_sizes + [None]):
        t = t1 if i == len(step_sizes) else t0 + i * dt
        try:
            state = State.from_vector(y, model.n)
            frame, report = _field_report(model, field_kind, y)
        except (RegularityError, DegeneracyError) as exc:
            return recorder.finish(True, t, str(exc), warnings)
        except ValueError:
            # non-finite state produced by the previous step
            return recorder.finish(True, t, "non-finite state", warnings)
        recorder.add(t, state, frame, report)
        if h is None:
            break
        try:
            k1 = report.gamma
            k2 = _field_report(model, field_kind, y + 0.5 * h * k1)[1].gamma
            k3 = _field_report(model, field_kind, y + 0.5 * h * k2)[1].gamma
            k4 = _field_report(model, field_kind, y + h * k3)[1].gamma
        except (RegularityError, DegeneracyError) as exc:
            return recorder.finish(True, t, str(exc), warnings)
        except ValueError:
            return recorder.finish(True, t, "non-finite state", warnings)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if project and model.k:
            n = model.n
            y[n : 2 * n] = project_velocity(model, y[:n], y[n : 2 * n])
    return recorder.finish(False, math.nan, "", warnings)


def convergence_order(model, field_kind, state0, t_end, dts):
    """Richardson estimate of the integrator's convergence order.

    Runs the same problem at each step size in ``dts`` (at least three,
    in rough geometric progression), measures endpoint errors against a
    reference run at one eighth of the smallest step, and returns the
    slope of log error against log step.
    """
    dts = [float(d) for d in dts]
    if len(dts) < 3:
        raise ValueError("need at least three step sizes")
    reference = integrate(
        model, field_kind, state0, 0.0, t_end, min(dts) / 8.0
    )
    if reference.aborted:
        raise RuntimeError(
            f"reference run aborted: {reference.failure_message}"
        )
    x_ref = reference.states[-1].vector
    errors = []
    for dt in dts:
        run = integrate(model, field_kind, state0, 0.0, t_end, dt)
        if run.aborted:
            raise RuntimeError(f"run at dt={dt} aborted: {run.failure_message}")
        errors.append(
            float(np.max(np.abs(run.states[-1].vector - x_ref)))
        )
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    return float(slope)
