"""Named residual checks over seeded random states.

Every check row measures one structural identity of the frame,
constraint, dynamics, or bracket layer and reports the worst residual
over a batch of random states.  Rows run on raw uniform states or on
velocity-projected states (projected rows exercise identities that only
hold on the constraint surface).  The registry is the single source of
truth for check names, default tolerances, and the auto-generated
``--tol-<name>`` command-line flags.
"""

import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bracket import Observable, evolution_check, nh_bracket, projected_structure
from .constraints import (
    constraint_frame,
    project_covector_adjoint,
    project_covector_flat,
    project_vector,
    project_velocity,
)
from .dynamics import (
    constrained_hamiltonian_vf,
    gamma_constrained,
    gamma_unconstrained,
    complement_tangency_residual,
    reeb_delta,
)
from .geometry import (
    State,
    contact_frame,
    flat_apply,
    hamiltonian_vf,
    hamiltonian_vf_via_lambda,
    sharp_apply,
    sharp_lambda,
)

__all__ = ["CheckRow", "CheckResult", "CheckReport", "CHECKS", "run_checks",
           "CRITERION2_NAMES"]


class _StateContext:
    """Everything the check functions may need at one state, built lazily."""

    def __init__(self, model, state, vector_sample, covector_sample):
        self.model = model
        self.state = state
        self.vector_sample = vector_sample
        self.covector_sample = covector_sample

    @cached_property
    def frame(self):
        return contact_frame(self.model, self.state)

    @cached_property
    def cf(self):
        return constraint_frame(self.model, self.frame, self.state)

    @cached_property
    def report_free(self):
        return gamma_unconstrained(self.model, self.frame, self.state)

    @cached_property
    def report_delta(self):
        return gamma_constrained(self.model, self.frame, self.cf, self.state)

    @cached_property
    def structure(self):
        return projected_structure(self.frame, self.cf)


def _observables(model):
    names = list(model.coords) + list(model.velocities) + ["z"]
    return [Observable(model, name) for name in names]


# -- geometry ------------------------------------------------------------------


def _check_eta_reeb(ctx):
    f = ctx.frame
    return abs(float(f.eta @ f.reeb) - 1.0)


def _check_reeb_deta(ctx):
    f = ctx.frame
    return float(np.max(np.abs(f.deta @ f.reeb)))


def _check_deta_antisym(ctx):
    f = ctx.frame
    return float(np.max(np.abs(f.deta + f.deta.T)))


def _check_flat_sharp(ctx):
    v = ctx.vector_sample
    w = sharp_apply(ctx.frame, flat_apply(ctx.frame, v))
    return float(np.max(np.abs(w - v)) / (1.0 + np.max(np.abs(v))))


def _check_sharp_lambda_kernel(ctx):
    a = ctx.covector_sample
    return abs(float(ctx.frame.eta @ sharp_lambda(ctx.frame, a)))


def _check_hvf_eta(ctx):
    f = ctx.frame
    field = hamiltonian_vf(f, f.E, f.dE)
    return abs(float(f.eta @ field) + f.E)


def _check_hvf_routes(ctx):
    f = ctx.frame
    a = hamiltonian_vf(f, f.E, f.dE)
    b = hamiltonian_vf_via_lambda(f, f.E, f.dE)
    return float(np.max(np.abs(a - b)))


def _check_energy_rate(ctx):
    f = ctx.frame
    gamma = ctx.report_free.gamma
    reeb_of_E = float(f.dE @ f.reeb)
    return abs(float(f.dE @ gamma) + reeb_of_E * f.E)


def _check_herglotz(ctx):
    # recompute the Herglotz residual from a raw jet, independently of
    # how the acceleration was assembled
    model, f = ctx.model, ctx.frame
    n = model.n
    gamma = ctx.report_free.gamma
    _, grad, hess = model.lagrangian_jet(ctx.state.vector, order=2)
    worst = 0.0
    for i in range(n):
        row = hess[n + i]
        lhs = (
            float(row[:n] @ gamma[:n])
            + float(row[n : 2 * n] @ gamma[n : 2 * n])
            + row[2 * n] * gamma[2 * n]
        )
        rhs = grad[i] + grad[2 * n] * grad[n + i]
        worst = max(worst, abs(lhs - rhs))
    return worst


def _check_sode(ctx):
    return ctx.report_free.sode_residual


# -- constraints ---------------------------------------------------------------


def _check_eta_Z(ctx):
    if not ctx.model.k:
        return 0.0
    return float(np.max(np.abs(ctx.cf.Z @ ctx.frame.eta)))


def _check_flat_Z(ctx):
    cf = ctx.cf
    if not ctx.model.k:
        return 0.0
    worst = 0.0
    for a in range(ctx.model.k):
        worst = max(
            worst,
            float(
                np.max(np.abs(flat_apply(ctx.frame, cf.Z[a]) - cf.phi_tilde[a]))
            ),
        )
    return worst


def _check_c_symmetric(ctx):
    C = ctx.cf.C
    return float(np.max(np.abs(C - C.T), initial=0.0))


def _check_p_idempotent(ctx):
    P = ctx.cf.P_matrix()
    return float(np.max(np.abs(P @ P - P)))


def _check_q_idempotent(ctx):
    Q = ctx.cf.Q_matrix()
    return float(np.max(np.abs(Q @ Q - Q)))


def _check_pq_identity(ctx):
    P = ctx.cf.P_matrix()
    Q = ctx.cf.Q_matrix()
    return float(np.max(np.abs(P + Q - np.eye(P.shape[0]))))


def _check_dphibar_kernel(ctx):
    if not ctx.model.k:
        return 0.0
    return float(np.max(np.abs(ctx.cf.dphibar @ ctx.cf.P_matrix())))


def _check_covector_adjoint(ctx):
    # the three-factor product must agree with transposing the assembled
    # complement projector, and the split must sum back to the input
    a = ctx.covector_sample
    pstar, qstar = project_covector_adjoint(ctx.cf, ctx.frame, a)
    direct = ctx.cf.Q_matrix().T @ a
    return float(
        max(
            np.max(np.abs(qstar - direct)),
            np.max(np.abs(pstar + qstar - a)),
        )
    )


def _check_qbar_span(ctx):
    # the flat-conjugated complement part of any covector lies in the
    # span of the lifted constraint forms
    if not ctx.model.k:
        return 0.0
    a = ctx.covector_sample
    _, qbar = project_covector_flat(ctx.cf, ctx.frame, a)
    coeffs, *_ = np.linalg.lstsq(ctx.cf.phi_tilde.T, qbar, rcond=None)
    return float(np.max(np.abs(ctx.cf.phi_tilde.T @ coeffs - qbar)))


def _check_qstar_de(ctx):
    _, qstar = project_covector_adjoint(ctx.cf, ctx.frame, ctx.frame.dE)
    return float(np.max(np.abs(qstar), initial=0.0))


# -- constrained dynamics --------------------------------------------------------


def _check_sode_constrained(ctx):
    return ctx.report_delta.sode_residual


def _check_eta_gamma(ctx):
    return abs(ctx.report_delta.eta_pairing)


def _check_phitilde_gamma(ctx):
    return float(np.max(np.abs(ctx.report_delta.constraint_pairing),
                        initial=0.0))


def _multiplier_oracle(ctx):
    """Accelerations and multipliers from the (n+k)-dimensional saddle
    system of the constrained Euler-Lagrange equations."""
    model, f, state = ctx.model, ctx.frame, ctx.state
    n, k = model.n, model.k
    from .dynamics import herglotz_rhs

    rhs_free = herglotz_rhs(model, f)
    phi = ctx.cf.phi
    M = np.zeros((n + k, n + k))
    M[:n, :n] = f.W
    M[:n, n:] = -phi.T
    M[n:, :n] = phi
    rhs = np.zeros(n + k)
    rhs[:n] = rhs_free
    for a in range(k):
        J = model.constraint_set.coeff_jac(state.q)[a]
        rhs[n + a] = -float(state.qdot @ (J @ state.qdot))
    solution = np.linalg.solve(M, rhs)
    return solution[:n], solution[n:]


def _check_multiplier_oracle(ctx):
    accel, _ = _multiplier_oracle(ctx)
    return float(
        np.max(np.abs(ctx.report_delta.gamma[ctx.model.n : 2 * ctx.model.n]
                      - accel))
    )


def _check_lambda_match(ctx):
    _, lambdas = _multiplier_oracle(ctx)
    return float(np.max(np.abs(ctx.report_delta.lambdas - lambdas),
                        initial=0.0))


def _check_gamma_hvf(ctx):
    f = ctx.frame
    field = constrained_hamiltonian_vf(
        ctx.model, f, ctx.cf, f.E, f.dE, route="lambda"
    )
    return float(np.max(np.abs(field - ctx.report_delta.gamma)))


def _check_hvf_delta_routes(ctx):
    f = ctx.frame
    fields = [
        constrained_hamiltonian_vf(ctx.model, f, ctx.cf, f.E, f.dE, route=r)
        for r in ("lambda", "flat", "projected")
    ]
    worst = 0.0
    for other in fields[1:]:
        worst = max(worst, float(np.max(np.abs(fields[0] - other))))
    return worst


def _check_complement_tangency(ctx):
    if not ctx.model.k:
        return 0.0
    return complement_tangency_residual(ctx.model, ctx.state)


# -- bracket -------------------------------------------------------------------


def _check_bracket_antisym(ctx):
    obs = _observables(ctx.model)
    pairs = [(obs[0], obs[ctx.model.n]), (obs[0], obs[-1]),
             (obs[ctx.model.n], obs[-1])]
    worst = 0.0
    for f, g in pairs:
        fg = nh_bracket(ctx.model, ctx.structure, f, g, ctx.state)
        gf = nh_bracket(ctx.model, ctx.structure, g, f, ctx.state)
        worst = max(worst, abs(fg + gf))
    return worst


def _check_casimir(ctx):
    model = ctx.model
    if not model.k:
        return 0.0
    worst = 0.0
    for name, expr in zip(model.constraint_set.names,
                          model.constraint_set.exprs):
        phibar = Observable(model, expr, name=name)
        for g in _observables(model):
            worst = max(
                worst,
                abs(nh_bracket(model, ctx.structure, phibar, g, ctx.state)),
            )
    return worst


def _check_evolution(ctx):
    worst = 0.0
    for g in _observables(ctx.model):
        worst = max(worst, evolution_check(ctx.model, ctx.structure, g,
                                           ctx.state))
    return worst


def _check_leibniz(ctx):
    model = ctx.model
    coord = model.coords[0]
    vel = model.velocities[0]
    f = Observable(model, vel)
    g = Observable(model, coord)
    h = Observable(model, "z")
    gh = Observable(model, f"{coord}*z")
    state = ctx.state
    lhs = nh_bracket(model, ctx.structure, f, gh, state)
    r = reeb_delta(ctx.frame, ctx.cf)
    _, df = f.differential(state)
    reeb_of_f = float(df @ r)
    rhs = (
        g.value(state) * nh_bracket(model, ctx.structure, f, h, state)
        + h.value(state) * nh_bracket(model, ctx.structure, f, g, state)
        - g.value(state) * h.value(state) * reeb_of_f
    )
    return abs(lhs - rhs)


def _check_k0_reduction(ctx):
    """With no constraints the bracket must equal the Jacobi bracket
    computed directly from the frame, bypassing the projector layer."""
    from .geometry import lambda_pair

    if ctx.model.k:
        return 0.0
    obs = _observables(ctx.model)
    f, g = obs[0], obs[ctx.model.n]
    state, frame = ctx.state, ctx.frame
    fv, df = f.differential(state)
    gv, dg = g.differential(state)
    direct = (
        lambda_pair(frame, df, dg)
        - fv * float(dg @ frame.reeb)
        + gv * float(df @ frame.reeb)
    )
    projected = nh_bracket(ctx.model, ctx.structure, f, g, state)
    return abs(direct - projected)


# -- registry ------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRow:
    """One named residual check.

    ``projected`` selects velocity-projected states; ``max_states``
    caps the batch for expensive rows; ``applies`` filters by model
    shape (constrained vs unconstrained).
    """

    name: str
    tolerance: float
    func: object
    projected: bool = False
    max_states: int = 0  # 0 means the full batch
    applies: object = None  # predicate on the model, None means always

    def applicable(self, model):
        return self.applies is None or self.applies(model)


def _needs_constraints(model):
    return model.k > 0


def _unconstrained_only(model):
    return model.k == 0


CHECKS = (
    CheckRow("eta-reeb", 1e-10, _check_eta_reeb),
    CheckRow("reeb-deta", 1e-10, _check_reeb_deta),
    CheckRow("deta-antisym", 1e-12, _check_deta_antisym),
    CheckRow("flat-sharp", 1e-10, _check_flat_sharp),
    CheckRow("sharp-lambda-kernel", 1e-10, _check_sharp_lambda_kernel),
    CheckRow("hvf-eta", 1e-10, _check_hvf_eta),
    CheckRow("hvf-routes", 1e-10, _check_hvf_routes),
    CheckRow("energy-rate", 1e-8, _check_energy_rate),
    CheckRow("herglotz", 1e-9, _check_herglotz),
    CheckRow("sode", 1e-12, _check_sode),
    CheckRow("eta-Z", 1e-12, _check_eta_Z, applies=_needs_constraints),
    CheckRow("flat-Z", 1e-10, _check_flat_Z, applies=_needs_constraints),
    CheckRow("c-symmetric", 1e-12, _check_c_symmetric,
             applies=_needs_constraints),
    CheckRow("p-idempotent", 1e-10, _check_p_idempotent),
    CheckRow("q-idempotent", 1e-10, _check_q_idempotent),
    CheckRow("pq-identity", 1e-12, _check_pq_identity),
    CheckRow("dphibar-kernel", 1e-10, _check_dphibar_kernel,
             applies=_needs_constraints),
    CheckRow("covector-adjoint", 1e-10, _check_covector_adjoint),
    CheckRow("qbar-span", 1e-10, _check_qbar_span,
             applies=_needs_constraints),
    CheckRow("qstar-de", 1e-9, _check_qstar_de, projected=True),
    CheckRow("sode-constrained", 1e-12, _check_sode_constrained,
             projected=True),
    CheckRow("eta-gamma", 1e-10, _check_eta_gamma, projected=True),
    CheckRow("phitilde-gamma", 1e-10, _check_phitilde_gamma, projected=True),
    CheckRow("multiplier-oracle", 1e-8, _check_multiplier_oracle,
             projected=True),
    CheckRow("lambda-match", 1e-8, _check_lambda_match, projected=True),
    CheckRow("gamma-hvf", 1e-9, _check_gamma_hvf, projected=True),
    CheckRow("hvf-delta-routes", 1e-9, _check_hvf_delta_routes,
             projected=True),
    CheckRow("bracket-antisym", 1e-12, _check_bracket_antisym,
             projected=True),
    CheckRow("casimir", 1e-9, _check_casimir, projected=True,
             applies=_needs_constraints),
    CheckRow("evolution", 1e-8, _check_evolution, projected=True),
    CheckRow("leibniz", 1e-8, _check_leibniz, projected=True),
    CheckRow("k0-reduction", 1e-10, _check_k0_reduction, projected=True,
             applies=_unconstrained_only),
    CheckRow("complement-tangency", 1e-6, _check_complement_tangency, projected=True, max_states=2,
             applies=_needs_constraints),
)

# the structural-invariant subset exercised per model by the acceptance gate
CRITERION2_NAMES = (
    "eta-reeb",
    "reeb-deta",
    "flat-sharp",
    "eta-Z",
    "flat-Z",
    "p-idempotent",
    "q-idempotent",
    "pq-identity",
    "qstar-de",
    "eta-gamma",
    "phitilde-gamma",
    "sode-constrained",
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    max_residual: float
    n_states: int
    worst_state: np.ndarray

    @property
    def passed(self):
        return self.max_residual <= self.tolerance


@dataclass(frozen=True)
class CheckReport:
    model_name: str
    seed: int
    results: tuple

    @property
    def all_passed(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return tuple(r for r in self.results if not r.passed)


def _draw_states(model, n_states, seed):
    rng = np.random.default_rng(seed)
    dim = 2 * model.n + 1
    raw = rng.uniform(-1.0, 1.0, (n_states, dim))
    vectors = rng.uniform(-1.0, 1.0, (n_states, dim))
    covectors = rng.uniform(-1.0, 1.0, (n_states, dim))
    projected = raw.copy()
    if model.k:
        for i in range(n_states):
            q = raw[i, : model.n]
            qdot = raw[i, model.n : 2 * model.n]
            projected[i, model.n : 2 * model.n] = project_velocity(
                model, q, qdot
            )
    return raw, projected, vectors, covectors


def run_checks(model, n_states=100, seed=42, tolerances=None, names=None):
    """Run the registry over seeded random states, worst residual wins.

    ``tolerances`` maps check names to overriding tolerances; ``names``
    restricts the run to a subset of the registry.
    """
    tolerances = tolerances or {}
    unknown = set(tolerances) - {row.name for row in CHECKS}
    if unknown:
        raise ValueError(f"unknown check names: {sorted(unknown)}")
    if names is not None:
        names = tuple(names)
        unknown = set(names) - {row.name for row in CHECKS}
        if unknown:
            raise ValueError(f"unknown check names: {sorted(unknown)}")

    raw, projected, vectors, covectors = _draw_states(model, n_states, seed)
    raw_ctx = [
        _StateContext(model, State.from_vector(raw[i], model.n),
                      vectors[i], covectors[i])
        for i in range(n_states)
    ]
    proj_ctx = [
        _StateContext(model, State.from_vector(projected[i], model.n),
                      vectors[i], covectors[i])
        for i in range(n_states)
    ]

    results = []
    for row in CHECKS:
        if names is not None and row.name not in names:
            continue
        if not row.applicable(model):
            continue
        contexts = proj_ctx if row.projected else raw_ctx
        if row.max_states:
            contexts = contexts[: row.max_states]
        worst = -1.0
        worst_state = contexts[0].state.vector
        for ctx in contexts:
            residual = float(row.func(ctx))
            if residual > worst:
                worst = residual
                worst_state = ctx.state.vector
        results.append(
            CheckResult(
                name=row.name,
                tolerance=float(tolerances.get(row.name, row.tolerance)),
                max_residual=worst,
                n_states=len(contexts),
                worst_state=worst_state,
            )
        )
    return CheckReport(model_name=model.name, seed=seed,
                       results=tuple(results))


def timed_run_checks(model, **kwargs):
    """``run_checks`` plus wall-clock seconds, for budget assertions."""
    start = time.perf_counter()
    report = run_checks(model, **kwargs)
    return report, time.perf_counter() - start
