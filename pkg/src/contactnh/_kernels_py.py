"""Pure-Python kernel executing evaluation tapes.

This mirrors the compiled extension ``contactnh._kernels`` instruction for
instruction and formula for formula, so both backends produce bitwise
identical values, gradients and Hessians.  It exists as the fallback when
the extension could not be built and as the reference the extension is
tested against.

Hessian updates only ever combine symmetric terms (``outer(a, b) +
outer(b, a)`` and scalar multiples of symmetric blocks), which keeps every
intermediate Hessian bitwise symmetric without a symmetrization pass.
"""

import math

import numpy as np

from .tape import (
    ERR_DIV_ZERO,
    ERR_LOG_DOMAIN,
    ERR_POW_DOMAIN,
    ERR_SQRT_DOMAIN,
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LOG,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_POWC,
    OP_POWI,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_TAN,
    OP_VAR,
)

__all__ = ["eval_tape", "BACKEND_NAME"]

BACKEND_NAME = "python"


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def eval_tape(code, consts, point, order, val, grad, hess):
    """Execute a tape, filling the slot buffers in place.

    Returns ``(0, -1)`` on success or ``(error_code, instruction_index)``
    on a domain violation; the caller owns the buffers and maps the pair
    back to source text via :func:`contactnh.tape.error_message`.
    """
    ops = code[:, 0].tolist()
    slot_a = code[:, 2].tolist()
    slot_b = code[:, 3].tolist()
    n = len(ops)

    for i in range(n):
        op = ops[i]
        a = slot_a[i]
        b = slot_b[i]

        if op == OP_CONST:
            val[i] = consts[a]
            if order >= 1:
                grad[i, :] = 0.0
                if order == 2:
                    hess[i, :, :] = 0.0
            continue
        if op == OP_VAR:
            val[i] = point[a]
            if order >= 1:
                grad[i, :] = 0.0
                grad[i, a] = 1.0
                if order == 2:
                    hess[i, :, :] = 0.0
            continue
        if op == OP_NEG:
            val[i] = -val[a]
            if order >= 1:
                np.negative(grad[a], out=grad[i])
                if order == 2:
                    np.negative(hess[a], out=hess[i])
            continue

        if op == OP_ADD:
            val[i] = val[a] + val[b]
            if order >= 1:
                np.add(grad[a], grad[b], out=grad[i])
                if order == 2:
                    np.add(hess[a], hess[b], out=hess[i])
            continue
        if op == OP_SUB:
            val[i] = val[a] - val[b]
            if order >= 1:
                np.subtract(grad[a], grad[b], out=grad[i])
                if order == 2:
                    np.subtract(hess[a], hess[b], out=hess[i])
            continue
        if op == OP_MUL:
            u = val[a]
            v = val[b]
            val[i] = u * v
            if order >= 1:
                grad[i] = v * grad[a] + u * grad[b]
                if order == 2:
                    hess[i] = (
                        v * hess[a]
                        + u * hess[b]
                        + (
                            np.outer(grad[a], grad[b])
                            + np.outer(grad[b], grad[a])
                        )
                    )
            continue
        if op == OP_DIV:
            u = val[a]
            v = val[b]
            if v == 0.0:
                return ERR_DIV_ZERO, i
            f = u / v
            val[i] = f
            if order >= 1:
                fg = (grad[a] - f * grad[b]) / v
                grad[i] = fg
                if order == 2:
                    hess[i] = (
                        (hess[a] - f * hess[b])
                        - (np.outer(fg, grad[b]) + np.outer(grad[b], fg))
                    ) / v
            continue

        if op == OP_SIN:
            u = val[a]
            s = math.sin(u)
            c = math.cos(u)
            val[i] = s
            if order >= 1:
                grad[i] = c * grad[a]
                if order == 2:
                    hess[i] = c * hess[a] - s * np.outer(grad[a], grad[a])
            continue
        if op == OP_COS:
            u = val[a]
            s = math.sin(u)
            c = math.cos(u)
            val[i] = c
            if order >= 1:
                grad[i] = -s * grad[a]
                if order == 2:
                    hess[i] = -s * hess[a] - c * np.outer(grad[a], grad[a])
            continue
        if op == OP_TAN:
            t = math.tan(val[a])
            sec2 = 1.0 + t * t
            val[i] = t
            if order >= 1:
                grad[i] = sec2 * grad[a]
                if order == 2:
                    hess[i] = sec2 * hess[a] + (2.0 * t * sec2) * np.outer(
                        grad[a], grad[a]
                    )
            continue
        if op == OP_EXP:
            e = _exp(val[a])
            val[i] = e
            if order >= 1:
                grad[i] = e * grad[a]
                if order == 2:
                    hess[i] = e * hess[a] + e * np.outer(grad[a], grad[a])
            continue
        if op == OP_LOG:
            u = val[a]
            if u <= 0.0:
                return ERR_LOG_DOMAIN, i
            val[i] = math.log(u)
            if order >= 1:
                grad[i] = grad[a] / u
                if order == 2:
                    hess[i] = hess[a] / u - np.outer(grad[a], grad[a]) / (
                        u * u
                    )
            continue
        if op == OP_SQRT:
            u = val[a]
            if u < 0.0 or (u == 0.0 and order >= 1):
                return ERR_SQRT_DOMAIN, i
            r = math.sqrt(u)
            val[i] = r
            if order >= 1:
                c1 = 0.5 / r
                grad[i] = c1 * grad[a]
                if order == 2:
                    c2 = -0.25 / (r * u)
                    hess[i] = c1 * hess[a] + c2 * np.outer(grad[a], grad[a])
            continue

        if op == OP_POWI:
            u = val[a]
            if b == 0:
                val[i] = 1.0
                if order >= 1:
                    grad[i, :] = 0.0
                    if order == 2:
                        hess[i, :, :] = 0.0
                continue
            if b == 1:
                val[i] = u
                if order >= 1:
                    grad[i] = grad[a]
                    if order == 2:
                        hess[i] = hess[a]
                continue
            if u == 0.0 and b < 0:
                return ERR_DIV_ZERO, i
            val[i] = math.pow(u, b)
            if order >= 1:
                fp = b * math.pow(u, b - 1)
                grad[i] = fp * grad[a]
                if order == 2:
                    fpp = (b * (b - 1)) * math.pow(u, b - 2)
                    hess[i] = fp * hess[a] + fpp * np.outer(grad[a], grad[a])
            continue
        if op == OP_POWC:
            u = val[a]
            c = consts[b]
            if u < 0.0 or (u == 0.0 and not (order == 0 and c > 0.0)):
                return ERR_POW_DOMAIN, i
            val[i] = math.pow(u, c)
            if order >= 1:
                fp = c * math.pow(u, c - 1.0)
                grad[i] = fp * grad[a]
                if order == 2:
                    fpp = (c * (c - 1.0)) * math.pow(u, c - 2.0)
                    hess[i] = fp * hess[a] + fpp * np.outer(grad[a], grad[a])
            continue
        if op == OP_POW:
            u = val[a]
            w = val[b]
            if u <= 0.0:
                return ERR_POW_DOMAIN, i
            lu = math.log(u)
            f = _exp(w * lu)
            val[i] = f
            if order >= 1:
                wu = w / u
                gg = lu * grad[b] + wu * grad[a]
                grad[i] = f * gg
                if order == 2:
                    gh = (
                        lu * hess[b]
                        + (
                            np.outer(grad[b], grad[a])
                            + np.outer(grad[a], grad[b])
                        )
                        / u
                        + wu * hess[a]
                        - (w / (u * u)) * np.outer(grad[a], grad[a])
                    )
                    hess[i] = f * (gh + np.outer(gg, gg))
            continue

        raise ValueError(f"unknown opcode {op}")

    return 0, -1
