# cython: language_level=3, boundscheck=False, wraparound=False
# cython: initializedcheck=False, cdivision=True
"""Compiled kernel executing evaluation tapes.

Formula-for-formula identical to ``contactnh._kernels_py`` so the two
backends agree bitwise; every arithmetic expression below reproduces the
exact evaluation-tree order of the pure-Python version.  Keep the two
files in sync when touching either.
"""

from libc.math cimport cos, exp, log, pow, sin, sqrt, tan, INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

DEF OP_CONST = 0
DEF OP_VAR = 1
DEF OP_NEG = 2
DEF OP_SIN = 3
DEF OP_COS = 4
DEF OP_TAN = 5
DEF OP_EXP = 6
DEF OP_LOG = 7
DEF OP_SQRT = 8
DEF OP_ADD = 9
DEF OP_SUB = 10
DEF OP_MUL = 11
DEF OP_DIV = 12
DEF OP_POW = 13
DEF OP_POWI = 14
DEF OP_POWC = 15

DEF ERR_LOG_DOMAIN = 1
DEF ERR_SQRT_DOMAIN = 2
DEF ERR_DIV_ZERO = 3
DEF ERR_POW_DOMAIN = 4


def eval_tape(
    cnp.int32_t[:, ::1] code,
    double[::1] consts,
    double[::1] point,
    int order,
    double[::1] val,
    double[:, ::1] grad,
    double[:, :, ::1] hess,
):
    """Execute a tape in place; returns ``(status, instruction_index)``."""
    cdef Py_ssize_t n = code.shape[0]
    cdef Py_ssize_t m = grad.shape[1] if order >= 1 else 0
    cdef Py_ssize_t i, a, b, j, k
    cdef int op
    cdef double u, v, f, s, c, t, sec2, e, r, c1, c2
    cdef double fp, fpp, lu, w, wu, uu, kk, gg_j, t1, t2

    for i in range(n):
        op = code[i, 0]
        a = code[i, 2]
        b = code[i, 3]

        if op == OP_CONST:
            val[i] = consts[a]
            if order >= 1:
                for j in range(m):
                    grad[i, j] = 0.0
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = 0.0
            continue
        if op == OP_VAR:
            val[i] = point[a]
            if order >= 1:
                for j in range(m):
                    grad[i, j] = 0.0
                grad[i, a] = 1.0
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = 0.0
            continue
        if op == OP_NEG:
            val[i] = -val[a]
            if order >= 1:
                for j in range(m):
                    grad[i, j] = -grad[a, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = -hess[a, j, k]
            continue

        if op == OP_ADD:
            val[i] = val[a] + val[b]
            if order >= 1:
                for j in range(m):
                    grad[i, j] = grad[a, j] + grad[b, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = hess[a, j, k] + hess[b, j, k]
            continue
        if op == OP_SUB:
            val[i] = val[a] - val[b]
            if order >= 1:
                for j in range(m):
                    grad[i, j] = grad[a, j] - grad[b, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = hess[a, j, k] - hess[b, j, k]
            continue
        if op == OP_MUL:
            u = val[a]
            v = val[b]
            val[i] = u * v
            if order >= 1:
                for j in range(m):
                    grad[i, j] = v * grad[a, j] + u * grad[b, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = (
                                v * hess[a, j, k] + u * hess[b, j, k]
                            ) + (
                                grad[a, j] * grad[b, k]
                                + grad[b, j] * grad[a, k]
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
                for j in range(m):
                    grad[i, j] = (grad[a, j] - f * grad[b, j]) / v
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            t1 = hess[a, j, k] - f * hess[b, j, k]
                            t2 = (
                                grad[i, j] * grad[b, k]
                                + grad[b, j] * grad[i, k]
                            )
                            hess[i, j, k] = (t1 - t2) / v
            continue

        if op == OP_SIN:
            u = val[a]
            s = sin(u)
            c = cos(u)
            val[i] = s
            if order >= 1:
                for j in range(m):
                    grad[i, j] = c * grad[a, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = c * hess[a, j, k] - s * (
                                grad[a, j] * grad[a, k]
                            )
            continue
        if op == OP_COS:
            u = val[a]
            s = sin(u)
            c = cos(u)
            val[i] = c
            if order >= 1:
                for j in range(m):
                    grad[i, j] = -s * grad[a, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = -s * hess[a, j, k] - c * (
                                grad[a, j] * grad[a, k]
                            )
            continue
        if op == OP_TAN:
            t = tan(val[a])
            sec2 = 1.0 + t * t
            val[i] = t
            if order >= 1:
                kk = (2.0 * t) * sec2
                for j in range(m):
                    grad[i, j] = sec2 * grad[a, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = sec2 * hess[a, j, k] + kk * (
                                grad[a, j] * grad[a, k]
                            )
            continue
        if op == OP_EXP:
            e = exp(val[a])
            val[i] = e
            if order >= 1:
                for j in range(m):
                    grad[i, j] = e * grad[a, j]
                if order == 2:
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = e * hess[a, j, k] + e * (
                                grad[a, j] * grad[a, k]
                            )
            continue
        if op == OP_LOG:
            u = val[a]
            if u <= 0.0:
                return ERR_LOG_DOMAIN, i
            val[i] = log(u)
            if order >= 1:
                for j in range(m):
                    grad[i, j] = grad[a, j] / u
                if order == 2:
                    uu = u * u
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = hess[a, j, k] / u - (
                                grad[a, j] * grad[a, k]
                            ) / uu
            continue
        if op == OP_SQRT:
            u = val[a]
            if u < 0.0 or (u == 0.0 and order >= 1):
                return ERR_SQRT_DOMAIN, i
            r = sqrt(u)
            val[i] = r
            if order >= 1:
                c1 = 0.5 / r
                for j in range(m):
                    grad[i, j] = c1 * grad[a, j]
                if order == 2:
                    c2 = -0.25 / (r * u)
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = c1 * hess[a, j, k] + c2 * (
                                grad[a, j] * grad[a, k]
                            )
            continue

        if op == OP_POWI:
            u = val[a]
            if b == 0:
                val[i] = 1.0
                if order >= 1:
                    for j in range(m):
                        grad[i, j] = 0.0
                    if order == 2:
                        for j in range(m):
                            for k in range(m):
                                hess[i, j, k] = 0.0
                continue
            if b == 1:
                val[i] = u
                if order >= 1:
                    for j in range(m):
                        grad[i, j] = grad[a, j]
                    if order == 2:
                        for j in range(m):
                            for k in range(m):
                                hess[i, j, k] = hess[a, j, k]
                continue
            if u == 0.0 and b < 0:
                return ERR_DIV_ZERO, i
            val[i] = pow(u, <double> b)
            if order >= 1:
                fp = b * pow(u, <double> (b - 1))
                for j in range(m):
                    grad[i, j] = fp * grad[a, j]
                if order == 2:
                    fpp = (b * (b - 1)) * pow(u, <double> (b - 2))
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = fp * hess[a, j, k] + fpp * (
                                grad[a, j] * grad[a, k]
                            )
            continue
        if op == OP_POWC:
            u = val[a]
            c = consts[b]
            if u < 0.0 or (u == 0.0 and not (order == 0 and c > 0.0)):
                return ERR_POW_DOMAIN, i
            val[i] = pow(u, c)
            if order >= 1:
                fp = c * pow(u, c - 1.0)
                for j in range(m):
                    grad[i, j] = fp * grad[a, j]
                if order == 2:
                    fpp = (c * (c - 1.0)) * pow(u, c - 2.0)
                    for j in range(m):
                        for k in range(m):
                            hess[i, j, k] = fp * hess[a, j, k] + fpp * (
                                grad[a, j] * grad[a, k]
                            )
            continue
        if op == OP_POW:
            u = val[a]
            w = val[b]
            if u <= 0.0:
                return ERR_POW_DOMAIN, i
            lu = log(u)
            f = exp(w * lu)
            val[i] = f
            if order >= 1:
                wu = w / u
                for j in range(m):
                    grad[i, j] = f * (lu * grad[b, j] + wu * grad[a, j])
                if order == 2:
                    uu = u * u
                    kk = w / uu
                    for j in range(m):
                        for k in range(m):
                            t1 = (
                                lu * hess[b, j, k]
                                + (
                                    grad[b, j] * grad[a, k]
                                    + grad[a, j] * grad[b, k]
                                )
                                / u
                            ) + wu * hess[a, j, k]
                            t2 = t1 - kk * (grad[a, j] * grad[a, k])
                            gg_j = lu * grad[b, j] + wu * grad[a, j]
                            hess[i, j, k] = f * (
                                t2
                                + gg_j
                                * (lu * grad[b, k] + wu * grad[a, k])
                            )
            continue

        raise ValueError(f"unknown opcode {op}")

    return 0, -1
