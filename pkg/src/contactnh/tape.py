"""Flat evaluation tapes for the numeric kernels.

A tape is the post-order serialization of an expression tree into an
``(n_instr, 4)`` int32 array of ``(opcode, dst, a, b)`` rows plus a float64
constant pool.  Both kernel backends (compiled and pure Python) execute the
same tape format, writing values, gradients and Hessians into caller-owned
slot buffers, so a tape compiled once drives zeroth, first and second order
evaluation at any point.

Instruction fields:

==========  =============================================================
opcode      operation, one of the ``OP_*`` constants
dst         slot index receiving the result (equals the row index)
a           slot of the operand / left operand; constant-pool or variable
            index for ``CONST`` / ``VAR``
b           slot of the right operand; literal integer exponent for
            ``POWI``; constant-pool index of the exponent for ``POWC``
==========  =============================================================

Kernels do not raise: they return ``(status, instruction)`` where a
non-zero status is one of the ``ERR_*`` codes and ``instruction`` locates
the failing row.  :func:`error_message` turns that pair back into the text
and byte offset of the responsible source fragment.
"""

import math

import numpy as np

from .errors import UnboundVariableError
from .expr import BinOp, Call, Const, Neg, Var

__all__ = ["Tape", "compile_tape", "error_message"]

(
    OP_CONST,
    OP_VAR,
    OP_NEG,
    OP_SIN,
    OP_COS,
    OP_TAN,
    OP_EXP,
    OP_LOG,
    OP_SQRT,
    OP_ADD,
    OP_SUB,
    OP_MUL,
    OP_DIV,
    OP_POW,
    OP_POWI,
    OP_POWC,
) = range(16)

_CALL_OPS = {
    "sin": OP_SIN,
    "cos": OP_COS,
    "tan": OP_TAN,
    "exp": OP_EXP,
    "log": OP_LOG,
    "sqrt": OP_SQRT,
}

_BIN_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}

ERR_LOG_DOMAIN = 1
ERR_SQRT_DOMAIN = 2
ERR_DIV_ZERO = 3
ERR_POW_DOMAIN = 4

_ERR_TEXT = {
    ERR_LOG_DOMAIN: "log of a non-positive value",
    ERR_SQRT_DOMAIN: "sqrt of a negative value",
    ERR_DIV_ZERO: "division by zero",
    ERR_POW_DOMAIN: "power outside its domain",
}

_MAX_POWI = 2**31 - 1


class Tape:
    """Compiled form of one expression over a fixed variable ordering."""

    __slots__ = ("code", "consts", "offsets", "n_vars", "n_slots")

    def __init__(self, code, consts, offsets, n_vars):
        self.code = code
        self.consts = consts
        self.offsets = offsets
        self.n_vars = n_vars
        self.n_slots = code.shape[0]


def compile_tape(expression, ordering, params=None):
    """Compile ``expression`` against ``ordering``, inlining ``params``.

    ``ordering`` fixes which variable each gradient component refers to.
    Names in ``params`` are substituted as constants at compile time.  A
    free variable in neither raises :class:`UnboundVariableError`.
    """
    params = params or {}
    index = {name: i for i, name in enumerate(ordering)}
    rows = []
    consts = []
    offsets = []

    def const_slot(value):
        consts.append(float(value))
        return len(consts) - 1

    def emit(op, a, b, offset):
        rows.append((op, len(rows), a, b))
        offsets.append(-1 if offset is None else offset)
        return len(rows) - 1

    def walk(node):
        if isinstance(node, Const):
            return emit(OP_CONST, const_slot(node.value), 0, node.offset)
        if isinstance(node, Var):
            if node.name in index:
                return emit(OP_VAR, index[node.name], 0, node.offset)
            if node.name in params:
                return emit(
                    OP_CONST, const_slot(params[node.name]), 0, node.offset
                )
            raise UnboundVariableError(
                f"unbound variable {node.name!r}", offset=node.offset
            )
        if isinstance(node, Neg):
            return emit(OP_NEG, walk(node.operand), 0, node.offset)
        if isinstance(node, Call):
            return emit(_CALL_OPS[node.func], walk(node.arg), 0, node.offset)
        if isinstance(node, BinOp):
            if node.op == "^":
                return walk_pow(node)
            a = walk(node.left)
            b = walk(node.right)
            return emit(_BIN_OPS[node.op], a, b, node.offset)
        raise TypeError(f"not an expression node: {node!r}")

    def walk_pow(node):
        exponent = node.right
        if isinstance(exponent, Neg) and isinstance(exponent.operand, Const):
            exponent = Const(-exponent.operand.value, offset=exponent.offset)
        if isinstance(exponent, Var) and exponent.name in params:
            exponent = Const(params[exponent.name], offset=exponent.offset)
        if isinstance(exponent, Const):
            value = exponent.value
            a = walk(node.left)
            if value == math.floor(value) and abs(value) <= _MAX_POWI:
                return emit(OP_POWI, a, int(value), node.offset)
            return emit(OP_POWC, a, const_slot(value), node.offset)
        a = walk(node.left)
        b = walk(node.right)
        return emit(OP_POW, a, b, node.offset)

    walk(expression)
    return Tape(
        np.array(rows, dtype=np.int32),
        np.array(consts, dtype=np.float64),
        np.array(offsets, dtype=np.int32),
        len(ordering),
    )


def error_message(tape, status, instruction):
    """Text and byte offset for a kernel ``(status, instruction)`` pair."""
    offset = int(tape.offsets[instruction])
    return _ERR_TEXT[status], (None if offset < 0 else offset)
