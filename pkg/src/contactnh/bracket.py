"""The projected almost-Jacobi structure and the nonholonomic bracket.

On observables f, g the bracket is

    {f, g} = Lambda_Delta(df, dg) - f reeb_Delta(g) + g reeb_Delta(f),

with ``Lambda_Delta(a, b) = Lambda(Pstar a, Pstar b)`` and ``reeb_Delta =
P(reeb)``.  It is antisymmetric and admits every function vanishing on the
constraint manifold as a Casimir, but it satisfies the Jacobi identity
precisely when the constraint distribution is integrable; the measured
Jacobi defect is therefore the behavioral half of the semiholonomic
classification, next to the structural involutivity test.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .autodiff import JetProgram
from .constraints import (
    constraint_frame,
    involutivity_defect,
    project_covector_adjoint,
    project_vector,
    project_velocity,
)
from .dynamics import gamma_constrained, reeb_delta
from .expr import parse, to_source
from .geometry import State, contact_frame, lambda_pair, sharp_lambda

__all__ = [
    "Observable",
    "ProjectedStructure",
    "projected_structure",
    "nh_bracket",
    "evolution_check",
    "jacobi_defect",
    "classify",
    "Classification",
]


class Observable:
    """A scalar function of the phase variables, bound to a model.

    The expression may use the model's coordinates, their d-prefixed
    velocity names, ``z`` and the model parameters; unknown names are
    rejected at construction.
    """

    __slots__ = ("name", "expr", "_program")

    def __init__(self, model, expr, name=None):
        if isinstance(expr, str):
            expr = parse(expr)
        self.expr = expr
        self.name = name if name is not None else to_source(expr)
        self._program = JetProgram(expr, model.phase_order, model.params)

    def value(self, state):
        return self._program.eval(_vector_of(state), order=0)[0]

    def differential(self, state):
        """``(value, gradient)`` over the canonical (q, qdot, z) ordering."""
        value, grad, _ = self._program.eval(_vector_of(state), order=1)
        return value, grad

    def __repr__(self):
        return f"Observable({self.name!r})"


def _vector_of(state):
    if isinstance(state, State):
        return state.vector
    return np.asarray(state, dtype=np.float64)


def _as_observable(model, f):
    if isinstance(f, Observable):
        return f
    return Observable(model, f)


@dataclass(frozen=True)
class ProjectedStructure:
    """The pair ``(Lambda_Delta, reeb_delta)`` at one state."""

    frame: object
    cf: object
    reeb_delta: np.ndarray

    def lambda_delta(self, a, b):
        """``Lambda_Delta(a, b) = Lambda(Pstar a, Pstar b)``."""
        Pstar_a, _ = project_covector_adjoint(self.cf, self.frame, a)
        Pstar_b, _ = project_covector_adjoint(self.cf, self.frame, b)
        return lambda_pair(self.frame, Pstar_a, Pstar_b)

    def sharp_lambda_delta(self, a):
        """The vector with ``b(sharp_lambda_delta(a)) = lambda_delta(a, b)``."""
        Pstar_a, _ = project_covector_adjoint(self.cf, self.frame, a)
        v, _, _ = project_vector(
            self.cf, self.frame, sharp_lambda(self.frame, Pstar_a)
        )
        return v


def projected_structure(frame, cf):
    """Build the :class:`ProjectedStructure` from the two frames."""
    return ProjectedStructure(
        frame=frame, cf=cf, reeb_delta=reeb_delta(frame, cf)
    )


def nh_bracket(model, structure, f, g, state):
    """The nonholonomic bracket {f, g} at ``state``.

    ``f`` and ``g`` may be :class:`Observable` instances, expression
    sources, or parsed expressions.  The state should lie on the
    constraint manifold for the bracket theorems to apply; the value is
    computed regardless.
    """
    f = _as_observable(model, f)
    g = _as_observable(model, g)
    f_value, df = f.differential(state)
    g_value, dg = g.differential(state)
    r = structure.reeb_delta
    return (
        structure.lambda_delta(df, dg)
        - f_value * float(dg @ r)
        + g_value * float(df @ r)
    )


def evolution_check(model, structure, g, state):
    """Residual of the observable-evolution identity.

    Compares ``Gamma_{L,Delta}(g)`` against ``{E_L, g} - g
    reeb_Delta(E_L)`` at the state; both sides coincide on the constraint
    manifold.
    """
    g = _as_observable(model, g)
    g_value, dg = g.differential(state)
    frame, cf = structure.frame, structure.cf
    gamma = gamma_constrained(model, frame, cf).gamma
    lhs = float(dg @ gamma)
    rhs = structure.lambda_delta(frame.dE, dg) - frame.E * float(
        dg @ structure.reeb_delta
    )
    return abs(lhs - rhs)


def _structure_at(model, vector):
    state = State.from_vector(vector, model.n)
    frame = contact_frame(model, state)
    cf = constraint_frame(model, frame)
    return state, frame, cf, projected_structure(frame, cf)


def _bracket_function(model, f, g):
    """The map ``x -> {f, g}(x)`` over raw state vectors."""

    def value(vector):
        state, _, _, structure = _structure_at(model, vector)
        return nh_bracket(model, structure, f, g, state)

    return value


def jacobi_defect(model, f, g, h, state, fd_base_step=1e-5):
    """|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| at ``state``.

    The differentials of the inner brackets are taken by central finite
    differences with step ``fd_base_step * (1 + ||state||_inf)``; the
    outer brackets reuse the exact AD differentials of f, g, h.
    """
    f = _as_observable(model, f)
    g = _as_observable(model, g)
    h = _as_observable(model, h)
    x = _vector_of(state)
    state, frame, cf, structure = _structure_at(model, x)
    step = fd_base_step * (1.0 + float(np.max(np.abs(x))))
    r = structure.reeb_delta

    total = 0.0
    for outer, left, right in ((f, g, h), (g, h, f), (h, f, g)):
        inner = _bracket_function(model, left, right)
        inner_value = nh_bracket(model, structure, left, right, state)
        d_inner = np.empty(len(x))
        for i in range(len(x)):
            bump = np.zeros(len(x))
            bump[i] = step
            d_inner[i] = (inner(x + bump) - inner(x - bump)) / (2.0 * step)
        outer_value, d_outer = outer.differential(state)
        total += (
            structure.lambda_delta(d_outer, d_inner)
            - outer_value * float(d_inner @ r)
            + inner_value * float(d_outer @ r)
        )
    return abs(total)


@dataclass(frozen=True)
class Classification:
    """Verdict of the semiholonomic test with its witnesses."""

    verdict: str
    structural_max: float
    structural_tol: float
    structural_witness: dict
    behavioral_max: float
    behavioral_tol: float
    behavioral_witness: dict

    @property
    def semiholonomic(self):
        return self.verdict == "semiholonomic"


def classify(
    model,
    n_states=20,
    behavioral_states=3,
    seed=42,
    structural_tol=1e-8,
    behavioral_tol=1e-4,
):
    """Classify the constraint distribution of ``model``.

    Runs the structural involutivity test at ``n_states`` seeded random
    configurations and the behavioral Jacobi-defect scan over all
    coordinate/velocity observable triples at ``behavioral_states``
    on-constraint states; the model is semiholonomic exactly when both
    maxima stay below their tolerances.
    """
    n = model.n
    rng = np.random.default_rng(seed)

    structural_max = 0.0
    structural_witness = {}
    for _ in range(n_states):
        q = rng.uniform(-1.0, 1.0, n)
        if model.k == 0:
            continue
        table = involutivity_defect(model, q)
        if table.size and float(table.max()) > structural_max:
            a, pair = np.unravel_index(int(table.argmax()), table.shape)
            structural_max = float(table.max())
            structural_witness = {
                "q": q.tolist(),
                "constraint": model.constraint_set.names[a],
                "pair": int(pair),
            }

    names = list(model.coords) + [f"d{c}" for c in model.coords]
    observables = [Observable(model, name) for name in names]
    behavioral_max = 0.0
    behavioral_witness = {}
    for _ in range(behavioral_states):
        draw = rng.uniform(-1.0, 1.0, 2 * n + 1)
        q, qdot, z = draw[:n], draw[n : 2 * n], draw[2 * n]
        qdot = project_velocity(model, q, qdot)
        state = State(q, qdot, z)
        for fa, ga, ha in itertools.combinations(observables, 3):
            defect = jacobi_defect(model, fa, ga, ha, state)
            if defect > behavioral_max:
                behavioral_max = defect
                behavioral_witness = {
                    "triple": (fa.name, ga.name, ha.name),
                    "state": state.vector.tolist(),
                }

    semiholonomic = (
        structural_max <= structural_tol and behavioral_max <= behavioral_tol
    )
    return Classification(
        verdict="semiholonomic" if semiholonomic else "nonholonomic",
        structural_max=structural_max,
        structural_tol=structural_tol,
        structural_witness=structural_witness,
        behavioral_max=behavioral_max,
        behavioral_tol=behavioral_tol,
        behavioral_witness=behavioral_witness,
    )
