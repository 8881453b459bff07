"""Parser, printer and generic evaluator for scalar expressions.

The grammar is deliberately small.  In EBNF:

.. code-block:: text

    expr    :=  term (("+" | "-") term)*
    term    :=  factor (("*" | "/") factor)*
    factor  :=  "-" factor | power
    power   :=  atom ("^" factor)?
    atom    :=  NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

``+ - * /`` associate to the left, ``^`` to the right, and ``^`` binds
tighter than unary minus: ``-x^2`` is ``-(x^2)``.  The recognised functions
are ``sin cos tan exp log sqrt``; application always requires parentheses
and there is no implicit multiplication.  ``pi`` is a built-in constant,
any other bare name is a free variable.

Evaluation is generic over the scalar type: plain floats go through
:mod:`math`, any other operand is driven through its own arithmetic
methods, which is how the dual numbers in :mod:`contactnh.autodiff` reuse
this module unchanged.
"""

import math

from .errors import EvalDomainError, ParseError, UnboundVariableError

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Neg",
    "Call",
    "BinOp",
    "parse",
    "to_source",
    "evaluate",
    "free_variables",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")

_BINARY = frozenset("+-*/^")


class Expression:
    """A parsed expression: an immutable AST plus its source offsets.

    Structural equality (`==`) compares the tree shape, node kinds, names
    and numeric values; it ignores source offsets, so an expression equals
    the result of re-parsing its own printed form.
    """

    __slots__ = ("offset",)

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __str__(self):
        return to_source(self)

    def __repr__(self):
        return f"{type(self).__name__}({to_source(self)!r})"


class Const(Expression):
    __slots__ = ("value",)

    def __init__(self, value, offset=None):
        self.value = float(value)
        self.offset = offset

    def _key(self):
        return ("const", self.value)


class Var(Expression):
    __slots__ = ("name",)

    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset

    def _key(self):
        return ("var", self.name)


class Neg(Expression):
    __slots__ = ("operand",)

    def __init__(self, operand, offset=None):
        self.operand = operand
        self.offset = offset

    def _key(self):
        return ("neg", self.operand._key())


class Call(Expression):
    __slots__ = ("func", "arg")

    def __init__(self, func, arg, offset=None):
        self.func = func
        self.arg = arg
        self.offset = offset

    def _key(self):
        return ("call", self.func, self.arg._key())


class BinOp(Expression):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right, offset=None):
        self.op = op
        self.left = left
        self.right = right
        self.offset = offset

    def _key(self):
        return ("bin", self.op, self.left._key(), self.right._key())


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind, text, offset):
        self.kind = kind  # "num", "name", one of "+-*/^()", or "end"
        self.text = text
        self.offset = offset


_DIGITS = frozenset("0123456789")
_NAME_START = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_"
)
_NAME_CONT = _NAME_START | _DIGITS


def _tokenize(source):
    tokens = []
    offset = 0  # byte offset into the UTF-8 encoding of ``source``
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            offset += len(ch.encode("utf-8"))
            i += 1
            continue
        start = offset
        if ch in _DIGITS or (
            ch == "." and i + 1 < n and source[i + 1] in _DIGITS
        ):
            j = i
            while j < n and source[j] in _DIGITS:
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j] in _DIGITS:
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k] in _DIGITS:
                    j = k
                    while j < n and source[j] in _DIGITS:
                        j += 1
            text = source[i:j]
            tokens.append(_Token("num", text, start))
            offset += len(text.encode("utf-8"))
            i = j
        elif ch in _NAME_START:
            j = i
            while j < n and source[j] in _NAME_CONT:
                j += 1
            text = source[i:j]
            tokens.append(_Token("name", text, start))
            offset += len(text.encode("utf-8"))
            i = j
        elif ch in "+-*/^()":
            tokens.append(_Token(ch, ch, start))
            offset += len(ch.encode("utf-8"))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", offset=start)
    tokens.append(_Token("end", "", offset))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            what = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {kind!r}, found {what}", offset=tok.offset)
        return self.advance()

    def parse_expr(self):
        node = self.parse_term()
        while self.peek().kind in "+-":
            tok = self.advance()
            node = BinOp(tok.kind, node, self.parse_term(), offset=node.offset)
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek().kind in "*/":
            tok = self.advance()
            node = BinOp(tok.kind, node, self.parse_factor(), offset=node.offset)
        return node

    def parse_factor(self):
        tok = self.peek()
        if tok.kind == "-":
            self.advance()
            return Neg(self.parse_factor(), offset=tok.offset)
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().kind == "^":
            self.advance()
            # right associative, and the exponent may carry a unary minus
            return BinOp("^", base, self.parse_factor(), offset=base.offset)
        return base

    def parse_atom(self):
        tok = self.advance()
        if tok.kind == "num":
            return Const(float(tok.text), offset=tok.offset)
        if tok.kind == "name":
            if self.peek().kind == "(":
                if tok.text not in FUNCTIONS:
                    raise ParseError(
                        f"unknown function {tok.text!r}", offset=tok.offset
                    )
                self.advance()
                arg = self.parse_expr()
                self.expect(")")
                return Call(tok.text, arg, offset=tok.offset)
            if tok.text == "pi":
                return Const(math.pi, offset=tok.offset)
            return Var(tok.text, offset=tok.offset)
        if tok.kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"expected a value, found {what}", offset=tok.offset)


def parse(source):
    """Parse ``source`` into an :class:`Expression`.

    Raises :class:`ParseError` carrying the 0-based byte offset of the
    offending token on malformed input.
    """
    parser = _Parser(_tokenize(source))
    node = parser.parse_expr()
    end = parser.peek()
    if end.kind != "end":
        raise ParseError(f"unexpected {end.text!r}", offset=end.offset)
    return node


# Precedence levels used by the printer; higher binds tighter.
_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(node):
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _LEVEL_ADD
        if node.op in "*/":
            return _LEVEL_MUL
        return _LEVEL_POW
    if isinstance(node, Neg):
        return _LEVEL_NEG
    return _LEVEL_ATOM


def _format_number(value):
    if value == math.floor(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_source(node):
    """Print ``node`` with the minimal parentheses that re-parse to it."""
    if isinstance(node, Const):
        return _format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _LEVEL_NEG)
    if isinstance(node, BinOp):
        if node.op in "+-":
            # left associative: the right side needs parens at equal level
            left = _wrap(node.left, _LEVEL_ADD)
            right = _wrap(node.right, _LEVEL_ADD + 1)
            return f"{left} {node.op} {right}"
        if node.op in "*/":
            left = _wrap(node.left, _LEVEL_MUL)
            right = _wrap(node.right, _LEVEL_MUL + 1)
            return f"{left}{node.op}{right}"
        # right associative, and a negated exponent reprints without parens
        left = _wrap(node.left, _LEVEL_POW + 1)
        right = _wrap(node.right, _LEVEL_NEG)
        return f"{left}^{right}"
    raise TypeError(f"not an expression node: {node!r}")


def _wrap(node, minimum):
    text = to_source(node)
    if _level(node) < minimum:
        return f"({text})"
    return text


def free_variables(node):
    """Free variable names in first-appearance order."""
    seen = {}

    def walk(e):
        if isinstance(e, Var):
            seen.setdefault(e.name, None)
        elif isinstance(e, Neg):
            walk(e.operand)
        elif isinstance(e, Call):
            walk(e.arg)
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)

    walk(node)
    return tuple(seen)


def _is_integer_float(x):
    return x == math.floor(x) and abs(x) < 1e15


def _pow_floats(base, exponent, offset):
    if base > 0.0:
        return math.pow(base, exponent)
    if _is_integer_float(exponent):
        if base == 0.0:
            if exponent < 0.0:
                raise EvalDomainError("zero raised to a negative power", offset)
            return 0.0 if exponent > 0.0 else 1.0
        return math.pow(base, exponent)
    raise EvalDomainError(
        "negative base raised to a non-integer power", offset
    )


def evaluate(node, bindings):
    """Evaluate ``node`` with variables bound by the ``bindings`` mapping.

    Scalars may be plain floats or any object implementing the arithmetic
    dunders together with ``sin cos tan exp log sqrt`` methods.  Domain
    violations raise :class:`EvalDomainError` tagged with the byte offset
    of the responsible node.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return bindings[node.name]
        except KeyError:
            raise UnboundVariableError(
                f"unbound variable {node.name!r}", offset=node.offset
            ) from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, bindings)
    if isinstance(node, Call):
        arg = evaluate(node.arg, bindings)
        try:
            if isinstance(arg, float):
                return _call_float(node.func, arg, node.offset)
            return getattr(arg, node.func)()
        except EvalDomainError as exc:
            if exc.offset is None:
                raise EvalDomainError(exc.args[0], offset=node.offset) from None
            raise
    if isinstance(node, BinOp):
        left = evaluate(node.left, bindings)
        right = evaluate(node.right, bindings)
        try:
            return _apply_binary(node.op, left, right, node.offset)
        except EvalDomainError as exc:
            if exc.offset is None:
                raise EvalDomainError(exc.args[0], offset=node.offset) from None
            raise
    raise TypeError(f"not an expression node: {node!r}")


def _call_float(func, arg, offset):
    if func == "log":
        if arg <= 0.0:
            raise EvalDomainError("log of a non-positive value", offset)
        return math.log(arg)
    if func == "sqrt":
        if arg < 0.0:
            raise EvalDomainError("sqrt of a negative value", offset)
        return math.sqrt(arg)
    return getattr(math, func)(arg)


def _apply_binary(op, left, right, offset):
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if isinstance(right, float) and right == 0.0:
            raise EvalDomainError("division by zero", offset)
        return left / right
    if isinstance(left, float) and isinstance(right, float):
        return _pow_floats(left, right, offset)
    return left ** right
