"""Linear velocity constraints, their distribution frame and projectors.

A constraint set holds k expressions ``Phi^a(q, qdot) = Phi^a_i(q) qdot^i``
linear in the velocities.  At a state the :class:`ConstraintFrame` collects
the lifted covectors ``phi_tilde^a = (Phi^a_i, 0, 0)``, the complement
generators ``Z_a`` (velocity block ``-W^{ik} Phi^a_k``, zero elsewhere),
the Gram matrix ``C_ab = dphibar^b(Z_a) = -Phi^a W^{-1} Phi^b`` and the
full differentials ``dphibar^b``.  The projector pair

    Q(Y) = lambda^a Z_a,  lambda^a = (C^{-1})_{ba} dphibar^b(Y),
    P(Y) = Y - Q(Y)

splits any vector into a part tangent to the constraint manifold and a
remainder inside the span of the ``Z_a``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, RankError
from .geometry import State, flat_apply, sharp_apply

__all__ = [
    "ConstraintSet",
    "ConstraintFrame",
    "constraint_frame",
    "project_vector",
    "project_covector_adjoint",
    "project_covector_flat",
    "project_velocity",
    "involutivity_defect",
]


class ConstraintSet:
    """k constraint expressions compiled over the phase ordering.

    ``programs`` are :class:`contactnh.autodiff.JetProgram` instances over
    the model's ``(q, qdot, z)`` ordering; linearity in the velocities is
    validated by the model loader, so one second-order jet per constraint
    yields the coefficient row, its configuration Jacobian and the
    constraint value simultaneously.
    """

    __slots__ = ("names", "exprs", "programs", "n")

    def __init__(self, names, exprs, programs, n):
        self.names = tuple(names)
        self.exprs = tuple(exprs)
        self.programs = tuple(programs)
        self.n = n

    @property
    def k(self):
        return len(self.programs)

    def _jets(self, vector):
        return [program.eval(vector, order=2) for program in self.programs]

    def coeff(self, q):
        """The k x n coefficient matrix ``Phi^a_i(q)``."""
        n = self.n
        vector = np.zeros(2 * n + 1)
        vector[:n] = q
        rows = [grad[n : 2 * n] for _, grad, _ in self._jets(vector)]
        return np.array(rows).reshape(self.k, n)

    def coeff_jac(self, q):
        """The k x n x n array ``dPhi^a_i/dq^j``."""
        n = self.n
        vector = np.zeros(2 * n + 1)
        vector[:n] = q
        rows = [hess[n : 2 * n, 0:n] for _, _, hess in self._jets(vector)]
        return np.array(rows).reshape(self.k, n, n)

    def values(self, state):
        """The k constraint values ``Phibar^a`` at a state."""
        vector = state.vector if isinstance(state, State) else np.asarray(state)
        return np.array(
            [program.eval(vector, order=0)[0] for program in self.programs]
        )


@dataclass(frozen=True)
class ConstraintFrame:
    """Constraint data evaluated at one state against one contact frame."""

    phi: np.ndarray        # k x n coefficient rows Phi^a_i(q)
    phi_tilde: np.ndarray  # k x (2n+1) lifted covectors (Phi^a_i, 0, 0)
    Z: np.ndarray          # k x (2n+1) complement generators
    C: np.ndarray          # k x k Gram matrix
    Cinv: np.ndarray
    dphibar: np.ndarray    # k x (2n+1) full differentials of Phibar^b
    values: np.ndarray     # k constraint values at the state

    @property
    def k(self):
        return self.phi.shape[0]

    def Q_matrix(self):
        """The matrix of Q acting on column vectors."""
        return self.Z.T @ self.Cinv.T @ self.dphibar

    def P_matrix(self):
        dim = self.Z.shape[1]
        return np.eye(dim) - self.Q_matrix()


def constraint_frame(model, frame, state=None):
    """Build the :class:`ConstraintFrame` of ``model`` at ``frame``'s state.

    The state need not satisfy the constraints; all fields are defined on
    a neighborhood.  Raises :class:`DegeneracyError` when the Gram matrix
    is singular, i.e. the complement span meets the constraint tangent.
    """
    if state is None:
        state = frame.state
    if not isinstance(state, State):
        state = State.from_vector(np.asarray(state, dtype=np.float64), model.n)
    cs = model.constraint_set
    n = model.n
    k = cs.k
    dim = 2 * n + 1
    vector = state.vector

    phi = np.empty((k, n))
    dphibar = np.empty((k, dim))
    values = np.empty(k)
    for b, (value, grad, _) in enumerate(cs._jets(vector)):
        values[b] = value
        dphibar[b] = grad
        phi[b] = grad[n : 2 * n]

    phi_tilde = np.zeros((k, dim))
    phi_tilde[:, :n] = phi

    Z = np.zeros((k, dim))
    Z[:, n : 2 * n] = -phi @ frame.Winv

    C = -phi @ frame.Winv @ phi.T
    if k:
        det = float(np.linalg.det(C))
        scale = 1.0 + float(np.linalg.norm(C, np.inf)) ** k
        if abs(det) < 1e-12 * scale:
            raise DegeneracyError(
                f"constraint Gram matrix is singular (|det| = {abs(det):.3e})"
                f" at state {vector.tolist()}"
            )
    Cinv = np.linalg.inv(C) if k else C.copy()

    return ConstraintFrame(
        phi=phi,
        phi_tilde=phi_tilde,
        Z=Z,
        C=C,
        Cinv=Cinv,
        dphibar=dphibar,
        values=values,
    )


def project_vector(cf, frame, Y):
    """Split ``Y`` into tangent and complement parts.

    Returns ``(P_Y, Q_Y, lambdas)`` with ``P_Y + Q_Y = Y`` exactly and
    ``Q_Y = lambdas @ Z``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    lambdas = cf.Cinv.T @ (cf.dphibar @ Y)
    Q_Y = lambdas @ cf.Z
    return Y - Q_Y, Q_Y, lambdas


def project_covector_adjoint(cf, frame, a):
    """Adjoint split of a covector: ``(Pstar_a, Qstar_a)``.

    ``Qstar(a)(v) = a(Q(v))`` for every vector ``v``, and symmetrically
    for ``Pstar``; the pair sums to ``a`` exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    Qstar_a = cf.dphibar.T @ (cf.Cinv @ (cf.Z @ a))
    return a - Qstar_a, Qstar_a


def project_covector_flat(cf, frame, a):
    """Flat-conjugated split ``(Pbar_a, Qbar_a)``.

    ``Pbar(a) = flat(P(sharp(a)))`` and ``Qbar(a) = flat(Q(sharp(a)))``;
    ``Qbar(a)`` lies in the span of the lifted constraint covectors.
    """
    a = np.asarray(a, dtype=np.float64)
    v = sharp_apply(frame, a)
    P_v, Q_v, _ = project_vector(cf, frame, v)
    return flat_apply(frame, P_v), flat_apply(frame, Q_v)


def project_velocity(model, q, qdot):
    """Least-squares projection of ``qdot`` onto the constraint null space.

    Returns the closest velocity satisfying ``Phi(q) qdot = 0``; used to
    place sampled states onto the constraint manifold and by the
    integrator's optional drift-removal step.
    """
    qdot = np.asarray(qdot, dtype=np.float64)
    phi = model.constraint_set.coeff(np.asarray(q, dtype=np.float64))
    if phi.shape[0] == 0:
        return qdot.copy()
    gram = phi @ phi.T
    try:
        multipliers = np.linalg.solve(gram, phi @ qdot)
    except np.linalg.LinAlgError:
        raise RankError(
            f"constraint coefficient matrix lost rank at q = "
            f"{np.asarray(q).tolist()}"
        ) from None
    return qdot - phi.T @ multipliers


def _null_space_basis(phi):
    """Unit-norm basis of the null space of a full-row-rank k x n matrix.

    Column-pivoted Householder factorization with deterministic
    tie-breaking (largest trailing column norm wins, lowest index on
    ties), so the returned basis is reproducible across platforms.
    """
    phi = np.asarray(phi, dtype=np.float64)
    k, n = phi.shape
    scale = 1.0 + float(np.abs(phi).max(initial=0.0))
    R = phi.copy()
    perm = np.arange(n)

    for j in range(k):
        norms = np.sqrt((R[j:, j:] ** 2).sum(axis=0))
        pivot = j + int(np.argmax(norms))
        if pivot != j:
            R[:, [j, pivot]] = R[:, [pivot, j]]
            perm[[j, pivot]] = perm[[pivot, j]]
        x = R[j:, j].copy()
        norm_x = float(np.linalg.norm(x))
        if norm_x <= 1e-12 * scale:
            raise RankError(
                f"constraint coefficient matrix lost rank (pivot "
                f"{norm_x:.3e} at column {j})"
            )
        alpha = -norm_x if x[0] >= 0.0 else norm_x
        x[0] -= alpha
        norm_v = float(np.linalg.norm(x))
        if norm_v > 0.0:
            v = x / norm_v
            R[j:, j:] -= 2.0 * np.outer(v, v @ R[j:, j:])
        R[j, j] = alpha
        R[j + 1 :, j] = 0.0

    for j in range(k):
        if abs(R[j, j]) <= 1e-12 * scale:
            raise RankError(
                f"constraint coefficient matrix lost rank (|R[{j},{j}]| = "
                f"{abs(R[j, j]):.3e})"
            )

    # null space of R * P^T: solve R1 y1 = -R2 y2 with y2 ranging over I
    r1 = R[:k, :k]
    r2 = R[:k, k:]
    top = -np.linalg.solve(r1, r2) if k else np.zeros((0, n - k))
    basis_perm = np.vstack([top, np.eye(n - k)])
    basis = np.zeros((n, n - k))
    basis[perm, :] = basis_perm
    basis /= np.linalg.norm(basis, axis=0)
    return basis


def involutivity_defect(model, q):
    """Exterior-derivative residuals of the constraint forms on null pairs.

    For a unit-norm basis ``{X_u}`` of the pointwise null space of the
    coefficient matrix at ``q``, returns the k x pairs table

        T[a, (u, v)] = |dPhi^a(X_u, X_v)|,   u < v lexicographic,

    where ``dPhi^a(X, Y) = X^j Y^i (dPhi^a_i/dq^j - dPhi^a_j/dq^i)``.  A
    table identically zero at all sampled configurations characterizes an
    integrable (semiholonomic) distribution.
    """
    q = np.asarray(q, dtype=np.float64)
    cs = model.constraint_set
    phi = cs.coeff(q)
    jac = cs.coeff_jac(q)
    k, n = phi.shape
    basis = _null_space_basis(phi)
    pairs = [(u, v) for u in range(n - k) for v in range(u + 1, n - k)]
    table = np.empty((k, len(pairs)))
    for a in range(k):
        K = jac[a].T - jac[a]
        for column, (u, v) in enumerate(pairs):
            table[a, column] = abs(float(basis[:, u] @ K @ basis[:, v]))
    return table
