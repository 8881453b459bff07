"""Contact frames of a Lagrangian contact structure.

At a state ``x = (q, qdot, z)`` the frame packages the contact form
``eta = dz - p_i dq^i`` (with momenta ``p_i = dL/dqdot^i``), its exterior
derivative ``deta``, the musical isomorphism ``flat`` defined by
``flat(v)(u) = deta(v, u) + eta(v) eta(u)``, the Reeb field, the energy
``E = qdot^i p_i - L`` and its differential.  All vectors and covectors
use the canonical component ordering ``(q^1..q^n, qdot^1..qdot^n, z)``.

The ``deta`` matrix holds ``deta[i, j] = deta(e_i, e_j)``; its blocks are
assembled from the Lagrangian jet as ``B - B^T`` (q-q), ``W`` (q-qdot)
and ``c`` (q-z), with ``B_ik = d2L/dqdot^i dq^k``, ``W`` the velocity
Hessian and ``c_i = d2L/dqdot^i dz``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RegularityError

__all__ = [
    "State",
    "ContactFrame",
    "contact_frame",
    "flat_apply",
    "sharp_apply",
    "lambda_pair",
    "sharp_lambda",
    "hamiltonian_vf",
    "hamiltonian_vf_via_lambda",
]


@dataclass(frozen=True)
class State:
    """A point of the extended phase space, dimension 2n+1."""

    q: np.ndarray
    qdot: np.ndarray
    z: float

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=np.float64))
        qdot = np.atleast_1d(np.asarray(self.qdot, dtype=np.float64))
        if q.shape != qdot.shape or q.ndim != 1:
            raise ValueError(
                f"q and qdot must be 1-d of equal length, got {q.shape} "
                f"and {qdot.shape}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)
        object.__setattr__(self, "z", float(self.z))
        if not (
            np.all(np.isfinite(q))
            and np.all(np.isfinite(qdot))
            and np.isfinite(self.z)
        ):
            raise ValueError("state entries must be finite")

    @property
    def n(self):
        return len(self.q)

    @property
    def vector(self):
        """Components in the canonical (q, qdot, z) ordering."""
        return np.concatenate([self.q, self.qdot, [self.z]])

    @classmethod
    def from_vector(cls, vector, n):
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (2 * n + 1,):
            raise ValueError(
                f"state vector has shape {vector.shape}, expected "
                f"({2 * n + 1},)"
            )
        return cls(vector[:n], vector[n : 2 * n], vector[2 * n])


@dataclass(frozen=True)
class ContactFrame:
    """The contact structure evaluated at one state of one model."""

    state: State
    p: np.ndarray
    eta: np.ndarray
    deta: np.ndarray
    flat: np.ndarray
    reeb: np.ndarray
    W: np.ndarray
    Winv: np.ndarray
    E: float
    dE: np.ndarray
    L_value: float

    @property
    def n(self):
        return len(self.p)


def contact_frame(model, state):
    """Build the :class:`ContactFrame` of ``model`` at ``state``.

    Raises :class:`RegularityError` when the velocity Hessian or the flat
    matrix is singular at the state.
    """
    if not isinstance(state, State):
        state = State.from_vector(np.asarray(state, dtype=np.float64), model.n)
    n = model.n
    vector = state.vector
    L_value, grad, hess = model.lagrangian_jet(vector, order=2)

    p = grad[n : 2 * n].copy()
    W = np.ascontiguousarray(hess[n : 2 * n, n : 2 * n])
    B = hess[n : 2 * n, 0:n]
    c = hess[n : 2 * n, 2 * n].copy()

    det = float(np.linalg.det(W))
    if abs(det) < 1e-12 * (1.0 + float(np.linalg.norm(W, np.inf)) ** n):
        raise RegularityError(
            f"velocity Hessian is singular (|det| = {abs(det):.3e}) at "
            f"state {vector.tolist()}"
        )
    Winv = np.linalg.inv(W)

    dim = 2 * n + 1
    eta = np.zeros(dim)
    eta[:n] = -p
    eta[2 * n] = 1.0

    deta = np.zeros((dim, dim))
    deta[:n, :n] = B - B.T
    deta[:n, n : 2 * n] = W
    deta[n : 2 * n, :n] = -W
    deta[:n, 2 * n] = c
    deta[2 * n, :n] = -c

    # flat(v) = deta^T v + eta(v) eta = (-deta + eta tensor eta) v
    flat = -deta + np.outer(eta, eta)
    det_flat = float(np.linalg.det(flat))
    if abs(det_flat) < 1e-12 * (
        1.0 + float(np.linalg.norm(flat, np.inf)) ** dim
    ):
        raise RegularityError(
            f"flat matrix is singular (|det| = {abs(det_flat):.3e}) at "
            f"state {vector.tolist()}"
        )

    reeb = np.zeros(dim)
    reeb[n : 2 * n] = -Winv @ c
    reeb[2 * n] = 1.0

    qdot = state.qdot
    E = float(qdot @ p - L_value)
    dE = np.empty(dim)
    dE[:n] = qdot @ B - grad[:n]
    dE[n : 2 * n] = W @ qdot
    dE[2 * n] = qdot @ c - grad[2 * n]

    return ContactFrame(
        state=state,
        p=p,
        eta=eta,
        deta=deta,
        flat=flat,
        reeb=reeb,
        W=W,
        Winv=Winv,
        E=E,
        dE=dE,
        L_value=float(L_value),
    )


def flat_apply(frame, v):
    """The covector ``flat(v)``, with ``flat(v)(u) = deta(v,u) + eta(v)eta(u)``."""
    return frame.flat @ np.asarray(v, dtype=np.float64)


def sharp_apply(frame, a):
    """The vector ``sharp(a)`` inverting :func:`flat_apply` (dense solve)."""
    return np.linalg.solve(frame.flat, np.asarray(a, dtype=np.float64))


def lambda_pair(frame, a, b):
    """The Jacobi bivector pairing ``Lambda(a, b) = -deta(sharp a, sharp b)``."""
    va = sharp_apply(frame, a)
    vb = sharp_apply(frame, b)
    return float(-(va @ frame.deta @ vb))


def sharp_lambda(frame, a):
    """The vector ``sharp_Lambda(a) = sharp(a) - a(reeb) reeb``."""
    a = np.asarray(a, dtype=np.float64)
    return sharp_apply(frame, a) - (a @ frame.reeb) * frame.reeb


def hamiltonian_vf(frame, H_value, dH):
    """Hamiltonian vector field ``X_H = sharp(dH - (reeb(H) + H) eta)``.

    Satisfies ``eta(X_H) = -H`` and the dissipation identity
    ``X_H(H) = -reeb(H) H``.
    """
    dH = np.asarray(dH, dtype=np.float64)
    reeb_H = float(dH @ frame.reeb)
    return sharp_apply(frame, dH - (reeb_H + float(H_value)) * frame.eta)


def hamiltonian_vf_via_lambda(frame, H_value, dH):
    """The equivalent form ``X_H = sharp_Lambda(dH) - H reeb``."""
    return sharp_lambda(frame, dH) - float(H_value) * frame.reeb
