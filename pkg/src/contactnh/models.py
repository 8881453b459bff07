"""Model definitions: loading, validation, and the bundled library.

A model file is line-oriented with three sections::

    # comment
    [model]
    name = "sledge"
    description = "optional text"
    coords = ["x", "y", "phi"]
    lagrangian = "0.5*dx^2 + ..."
    check_state = [0.1, -0.2, 0.3, 0.76, 0.23, 0.4, 0.05]

    [params]
    alpha = 1.0

    [constraints]
    knife = "sin(phi)*dx - cos(phi)*dy"

Strings are double-quoted, lists bracketed and comma-separated, ``#``
starts a comment outside quotes.  Coordinates ``c`` bind velocity names
``dc``; ``z`` is always the action variable.  Constraints must be linear
in the velocities with no velocity-free term, must not involve ``z``,
and their count must stay below the coordinate count.
"""

import re
from importlib import resources

import numpy as np

from .autodiff import JetProgram
from .constraints import ConstraintSet, _null_space_basis
from .errors import ExpressionError, ModelError, ParseError
from .expr import FUNCTIONS, free_variables, parse
from .geometry import State

__all__ = ["LagrangianModel", "load", "loads", "bundled", "list_bundled"]

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")
_RESERVED = frozenset(("z", "pi") + FUNCTIONS)

_LINEARITY_SEED = 1801243153
_LINEARITY_SAMPLES = 4


class LagrangianModel:
    """An immutable, validated model ready for numerical work.

    Expressions are compiled against the phase ordering
    ``coords + velocities + ('z',)`` with parameters inlined as
    constants, so changing parameters goes through :meth:`with_params`,
    which rebuilds the model.
    """

    def __init__(
        self,
        name,
        coords,
        lagrangian,
        params=None,
        constraints=(),
        description="",
        check_state=None,
        source_text=None,
    ):
        self.name = str(name)
        self.description = str(description)
        self.coords = tuple(coords)
        self.params = dict(params or {})
        self.lagrangian = parse(lagrangian) if isinstance(
            lagrangian, str
        ) else lagrangian
        self.source_text = source_text
        if isinstance(constraints, dict):
            constraints = tuple(constraints.items())
        else:
            constraints = tuple(constraints)
        self._constraint_items = tuple(
            (label, parse(expr) if isinstance(expr, str) else expr)
            for label, expr in constraints
        )

        self._validate_names()
        self._validate_free_variables()

        self.n = len(self.coords)
        self.k = len(self._constraint_items)
        if self.k >= self.n:
            raise ModelError(
                f"{self.k} constraints over {self.n} coordinates; the "
                "constraint count must stay below the coordinate count"
            )
        self.velocities = tuple(f"d{c}" for c in self.coords)
        self.phase_order = self.coords + self.velocities + ("z",)

        self._lagrangian_program = JetProgram(
            self.lagrangian, self.phase_order, self.params
        )
        self.constraint_set = ConstraintSet(
            names=[label for label, _ in self._constraint_items],
            exprs=[expr for _, expr in self._constraint_items],
            programs=[
                JetProgram(expr, self.phase_order, self.params)
                for _, expr in self._constraint_items
            ],
            n=self.n,
        )
        if check_state is not None:
            vector = np.asarray(check_state, dtype=np.float64)
            if vector.shape != (2 * self.n + 1,):
                raise ModelError(
                    f"check_state has {vector.size} entries, expected "
                    f"{2 * self.n + 1}"
                )
            self.check_state = State.from_vector(vector, self.n)
        else:
            self.check_state = None

        self._validate_constraints()
        if self.check_state is not None:
            self._spot_check(self.check_state)

    # -- validation ---------------------------------------------------------

    def _validate_names(self):
        seen = set()
        for c in self.coords:
            if not _IDENTIFIER.match(c):
                raise ModelError(f"invalid coordinate name {c!r}")
            if c in _RESERVED:
                raise ModelError(f"coordinate name {c!r} is reserved")
            if c in seen:
                raise ModelError(f"duplicate coordinate {c!r}")
            seen.add(c)
        velocities = {f"d{c}" for c in self.coords}
        for c in self.coords:
            if c in velocities:
                raise ModelError(
                    f"coordinate {c!r} collides with the velocity name of "
                    f"coordinate {c[1:]!r}"
                )
        for p in self.params:
            if not _IDENTIFIER.match(p):
                raise ModelError(f"invalid parameter name {p!r}")
            if p in _RESERVED:
                raise ModelError(f"parameter name {p!r} is reserved")
            if p in seen or p in velocities:
                raise ModelError(
                    f"parameter {p!r} collides with a coordinate or "
                    "velocity name"
                )
        labels = set()
        for label, _ in self._constraint_items:
            if not _IDENTIFIER.match(label):
                raise ModelError(f"invalid constraint label {label!r}")
            if label in labels:
                raise ModelError(f"duplicate constraint label {label!r}")
            labels.add(label)

    def _validate_free_variables(self):
        allowed = set(self.coords)
        allowed.update(f"d{c}" for c in self.coords)
        allowed.update(self.params)
        for name in free_variables(self.lagrangian):
            if name != "z" and name not in allowed:
                raise ModelError(f"unknown name {name!r} in lagrangian")
        for label, expr in self._constraint_items:
            for name in free_variables(expr):
                if name == "z":
                    raise ModelError(
                        f"constraint {label!r} may not depend on z"
                    )
                if name not in allowed:
                    raise ModelError(
                        f"unknown name {name!r} in constraint {label!r}"
                    )

    def _linearity_sample_points(self):
        rng = np.random.default_rng(_LINEARITY_SEED)
        points = rng.uniform(
            -1.0, 1.0, (_LINEARITY_SAMPLES, 2 * self.n + 1)
        )
        if self.check_state is not None:
            points = np.vstack([points, self.check_state.vector])
        return points

    def _validate_constraints(self):
        if not self.k:
            return
        n = self.n
        checked_q = []
        for label, program in zip(
            self.constraint_set.names, self.constraint_set.programs
        ):
            validated = False
            for point in self._linearity_sample_points():
                try:
                    _, _, hess = program.eval(point, order=2)
                    at_rest = point.copy()
                    at_rest[n : 2 * n] = 0.0
                    rest_value, _, _ = program.eval(at_rest, order=0)
                except ExpressionError:
                    continue
                scale = 1.0 + float(np.max(np.abs(hess), initial=0.0))
                if np.max(np.abs(hess[n : 2 * n, n : 2 * n])) > 1e-12 * scale:
                    raise ModelError(
                        f"constraint {label!r} is not linear in the "
                        "velocities"
                    )
                if abs(rest_value) > 1e-12 * scale:
                    raise ModelError(
                        f"constraint {label!r} has a velocity-free term"
                    )
                validated = True
                checked_q.append(point[:n])
            if not validated:
                raise ModelError(
                    f"could not validate constraint {label!r}: every "
                    "sample point hit an expression domain error"
                )
        for q in checked_q:
            # full row rank at the sampled configurations
            _null_space_basis(self.constraint_set.coeff(q))

    def _spot_check(self, state):
        from .geometry import contact_frame

        contact_frame(self, state)
        if self.k:
            _null_space_basis(self.constraint_set.coeff(state.q))

    # -- behaviour ----------------------------------------------------------

    def lagrangian_jet(self, vector, order=2):
        """Jet of the Lagrangian at a raw state vector."""
        return self._lagrangian_program.eval(vector, order)

    def with_params(self, **overrides):
        """A copy of the model with some parameter values replaced."""
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise ModelError(
                f"unknown parameters {sorted(unknown)}; the model defines "
                f"{sorted(self.params)}"
            )
        params = dict(self.params)
        params.update({k: float(v) for k, v in overrides.items()})
        return LagrangianModel(
            name=self.name,
            coords=self.coords,
            lagrangian=self.lagrangian,
            params=params,
            constraints=[
                (label, expr) for label, expr in self._constraint_items
            ],
            description=self.description,
            check_state=(
                self.check_state.vector
                if self.check_state is not None
                else None
            ),
            source_text=None,
        )

    def __repr__(self):
        return (
            f"LagrangianModel({self.name!r}, n={self.n}, k={self.k})"
        )


# -- file format --------------------------------------------------------------

_SECTIONS = ("model", "params", "constraints")


def _strip_comment(line):
    out = []
    quoted = False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def _parse_scalar(text, line_no):
    text = text.strip()
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"') or '"' in text[1:-1]:
            raise ModelError(f"malformed string {text!r}", line=line_no)
        return text[1:-1]
    try:
        return float(text)
    except ValueError:
        raise ModelError(
            f"expected a number or a quoted string, got {text!r}",
            line=line_no,
        ) from None


def _parse_value(text, line_no):
    text = text.strip()
    if not text:
        raise ModelError("missing value", line=line_no)
    if text.startswith("["):
        if not text.endswith("]"):
            raise ModelError(f"unterminated list {text!r}", line=line_no)
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(item, line_no) for item in inner.split(",")]
    return _parse_scalar(text, line_no)


def _parse_model_text(text):
    sections = {name: {} for name in _SECTIONS}
    lines = {name: {} for name in _SECTIONS}
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ModelError(
                    f"malformed section header {line!r}", line=line_no
                )
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ModelError(
                    f"unknown section [{section}]", line=line_no
                )
            current = section
            continue
        if current is None:
            raise ModelError(
                "key outside of any section", line=line_no
            )
        if "=" not in line:
            raise ModelError(
                f"expected 'key = value', got {line!r}", line=line_no
            )
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ModelError("empty key", line=line_no)
        if key in sections[current]:
            raise ModelError(
                f"duplicate key {key!r} in [{current}]", line=line_no
            )
        sections[current][key] = _parse_value(value, line_no)
        lines[current][key] = line_no
    return sections, lines


def _require(sections, lines, key, kind, predicate):
    if key not in sections["model"]:
        raise ModelError(f"[model] is missing required key {key!r}")
    value = sections["model"][key]
    if not predicate(value):
        raise ModelError(
            f"[model] key {key!r} must be {kind}",
            line=lines["model"][key],
        )
    return value


def loads(text, origin="<string>"):
    """Parse and validate a model from the text of a model file.

    ``origin`` names the source in error messages; the default marks
    in-memory text.
    """
    try:
        return _loads(text)
    except ModelError as exc:
        if origin == "<string>":
            raise
        wrapped = ModelError(f"{origin}: {exc}")
        wrapped.line = exc.line
        raise wrapped from None


def _loads(text):
    sections, lines = _parse_model_text(text)

    name = _require(
        sections, lines, "name", "a string", lambda v: isinstance(v, str)
    )
    coords = _require(
        sections,
        lines,
        "coords",
        "a list of strings",
        lambda v: isinstance(v, list)
        and v
        and all(isinstance(c, str) for c in v),
    )
    lagrangian_src = _require(
        sections,
        lines,
        "lagrangian",
        "a string",
        lambda v: isinstance(v, str),
    )
    description = sections["model"].get("description", "")
    if not isinstance(description, str):
        raise ModelError(
            "[model] key 'description' must be a string",
            line=lines["model"]["description"],
        )
    check_state = sections["model"].get("check_state")
    if check_state is not None and (
        not isinstance(check_state, list)
        or not all(isinstance(x, float) for x in check_state)
    ):
        raise ModelError(
            "[model] key 'check_state' must be a list of numbers",
            line=lines["model"]["check_state"],
        )
    for key in sections["model"]:
        if key not in (
            "name",
            "coords",
            "lagrangian",
            "description",
            "check_state",
        ):
            raise ModelError(
                f"unknown key {key!r} in [model]", line=lines["model"][key]
            )

    for key, value in sections["params"].items():
        if not isinstance(value, float):
            raise ModelError(
                f"parameter {key!r} must be a number",
                line=lines["params"][key],
            )

    def parse_at(source, where, line_no):
        try:
            return parse(source)
        except ParseError as exc:
            raise ModelError(f"in {where}: {exc}", line=line_no) from None

    lagrangian = parse_at(
        lagrangian_src, "lagrangian", lines["model"]["lagrangian"]
    )
    constraints = []
    for label, source in sections["constraints"].items():
        if not isinstance(source, str):
            raise ModelError(
                f"constraint {label!r} must be a quoted expression",
                line=lines["constraints"][label],
            )
        constraints.append(
            (
                label,
                parse_at(
                    source,
                    f"constraint {label!r}",
                    lines["constraints"][label],
                ),
            )
        )

    return LagrangianModel(
        name=name,
        coords=coords,
        lagrangian=lagrangian,
        params=sections["params"],
        constraints=constraints,
        description=description,
        check_state=check_state,
        source_text=text,
    )


def load(path):
    """Load and validate the model file at ``path``."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return loads(text, origin=str(path))


def _data_root():
    return resources.files("contactnh").joinpath("models_data")


def list_bundled():
    """Names of the models shipped with the package, sorted."""
    names = []
    for entry in _data_root().iterdir():
        if entry.name.endswith(".model"):
            names.append(entry.name[: -len(".model")])
    return sorted(names)


def bundled(name):
    """Load a bundled model by name; see :func:`list_bundled`."""
    entry = _data_root().joinpath(f"{name}.model")
    if not entry.is_file():
        raise ModelError(
            f"no bundled model named {name!r}; available: "
            f"{', '.join(list_bundled())}"
        )
    return loads(entry.read_text(encoding="utf-8"), origin=f"bundled:{name}")


def bundled_source(name):
    """Raw text of a bundled model file."""
    entry = _data_root().joinpath(f"{name}.model")
    if not entry.is_file():
        raise ModelError(
            f"no bundled model named {name!r}; available: "
            f"{', '.join(list_bundled())}"
        )
    return entry.read_text(encoding="utf-8")
