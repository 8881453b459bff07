"""Exception taxonomy shared across the package.

Every error raised by the library derives from :class:`ContactError`, so
callers (in particular the command line driver) can distinguish problems in
the user's input from genuine numerical breakdown with two except clauses.
"""

__all__ = [
    "ContactError",
    "ExpressionError",
    "ParseError",
    "EvalDomainError",
    "UnboundVariableError",
    "RegularityError",
    "DegeneracyError",
    "RankError",
    "ModelError",
]


class ContactError(Exception):
    """Base class for all errors raised by this package."""


class ExpressionError(ContactError):
    """Problem with an expression, located by a 0-based byte offset.

    The ``offset`` points into the UTF-8 encoding of the source string the
    expression was parsed from; it is ``None`` for expressions built
    programmatically.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ParseError(ExpressionError):
    """The source string does not conform to the expression grammar."""


class EvalDomainError(ExpressionError):
    """Evaluation left the domain of a primitive.

    Raised for division by zero, ``log`` of a non-positive value, ``sqrt``
    of a negative value, differentiating ``sqrt`` at zero, and powers with
    a negative base and a non-integer exponent.
    """


class UnboundVariableError(ExpressionError):
    """Evaluation reached a variable with no binding."""


class RegularityError(ContactError):
    """The velocity Hessian of the Lagrangian is singular at this state."""


class DegeneracyError(ContactError):
    """The constraint Gram matrix is singular at this state."""


class RankError(ContactError):
    """The constraint coefficient matrix lost row rank at this state."""


class ModelError(ContactError):
    """A model definition failed validation.

    ``line`` is the 1-based line number in the model text the problem was
    traced to, when one is known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
