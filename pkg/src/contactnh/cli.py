"""Command-line interface.

Commands::

    contactnh check MODEL           run the invariant suite at random states
    contactnh simulate MODEL        integrate and emit a CSV trajectory
    contactnh frame MODEL           dump the frame matrices as JSON
    contactnh bracket MODEL F G     evaluate one bracket entry
    contactnh jacobi MODEL F G H    evaluate one Jacobi-identity defect
    contactnh classify MODEL        semiholonomic / nonholonomic verdict
    contactnh export-model NAME     print a bundled model file

MODEL is a file path or a bundled model name.  All numbers are printed
with 17 significant digits so output round-trips exactly; identical
seeds give bit-identical output.  Exit codes: 0 success, 1 validation
failure, 2 numerical failure (the offending state is echoed).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bracket import Observable, classify, jacobi_defect, nh_bracket, projected_structure
from .checks import CHECKS, run_checks
from .constraints import constraint_frame
from .errors import (
    ContactError,
    DegeneracyError,
    ExpressionError,
    ModelError,
    RankError,
    RegularityError,
)
from .geometry import State, contact_frame
from .integrate import integrate
from .models import bundled, bundled_source, list_bundled, load

__all__ = ["main", "run"]


def _fmt(value):
    return format(float(value), ".17g")


def _use_color():
    if os.environ.get("CONTACT_NH_NO_COLOR"):
        return False
    return sys.stdout.isatty()


def _status(passed):
    text = "PASS" if passed else "FAIL"
    if not _use_color():
        return text
    color = "\x1b[32m" if passed else "\x1b[31m"
    return f"{color}{text}\x1b[0m"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; reserve 2 for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _ValidationExit(message)


class _ValidationExit(Exception):
    pass


def _resolve_model(name_or_path):
    if os.path.exists(name_or_path):
        return load(name_or_path)
    if name_or_path in list_bundled():
        return bundled(name_or_path)
    raise ModelError(
        f"{name_or_path!r} is neither a file nor a bundled model; "
        f"bundled models: {', '.join(list_bundled())}"
    )


def _parse_state(model, text):
    if text is None:
        if model.check_state is None:
            raise ModelError(
                f"model {model.name!r} has no check_state; pass --state"
            )
        return model.check_state
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise ModelError(f"malformed --state {text!r}") from None
    expected = 2 * model.n + 1
    if len(values) != expected:
        raise ModelError(
            f"--state has {len(values)} entries, expected {expected}"
        )
    return State.from_vector(np.asarray(values), model.n)


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


# -- JSON with fixed float formatting -------------------------------------------


def _json_value(value, parts):
    if isinstance(value, str):
        parts.append(json.dumps(value))
    elif isinstance(value, bool):
        parts.append("true" if value else "false")
    elif isinstance(value, (int, np.integer)):
        parts.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        parts.append(_fmt(value))
    elif isinstance(value, np.ndarray):
        _json_value(value.tolist(), parts)
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(", ")
            _json_value(item, parts)
        parts.append("]")
    elif isinstance(value, dict):
        parts.append("{")
        for i, (key, item) in enumerate(value.items()):
            if i:
                parts.append(", ")
            parts.append(json.dumps(str(key)) + ": ")
            _json_value(item, parts)
        parts.append("}")
    elif value is None:
        parts.append("null")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def _to_json(value):
    parts = []
    _json_value(value, parts)
    return "".join(parts)


# -- commands ------------------------------------------------------------------


def _cmd_check(args):
    model = _resolve_model(args.model)
    tolerances = {}
    for row in CHECKS:
        override = getattr(args, f"tol_{row.name.replace('-', '_')}")
        if override is not None:
            tolerances[row.name] = override
    report = run_checks(
        model, n_states=args.n_states, seed=args.seed, tolerances=tolerances
    )
    print(f"model: {report.model_name}")
    print(f"seed: {report.seed}  states: {args.n_states}")
    name_width = max(len(r.name) for r in report.results)
    header = (
        f"{'check':<{name_width}}  {'states':>6}  {'residual':>24}  "
        f"{'tolerance':>12}  status"
    )
    print(header)
    for r in report.results:
        print(
            f"{r.name:<{name_width}}  {r.n_states:>6}  "
            f"{_fmt(r.max_residual):>24}  {format(r.tolerance, '.6g'):>12}  "
            f"{_status(r.passed)}"
        )
    failed = report.failures
    if failed:
        print(f"{len(failed)} of {len(report.results)} checks failed")
        for r in failed:
            print(
                f"worst state for {r.name}: "
                + ",".join(_fmt(x) for x in r.worst_state)
            )
        return 1
    print(f"all {len(report.results)} checks passed")
    return 0


def _csv_header(model):
    columns = ["t"]
    columns += [f"q:{c}" for c in model.coords]
    columns += [f"dq:{c}" for c in model.coords]
    columns += ["z", "E", "eta_residual"]
    columns += [f"phi:{a + 1}" for a in range(model.k)]
    return columns


def _cmd_simulate(args):
    model = _resolve_model(args.model)
    state0 = _parse_state(model, args.state)
    kind = "unconstrained" if args.unconstrained or model.k == 0 else "constrained"
    trajectory = integrate(
        model,
        kind,
        state0,
        t0=args.t0,
        t1=args.t1,
        dt=args.dt,
        project=args.project,
    )
    out, close = _open_out(args.out)
    try:
        out.write(",".join(_csv_header(model)) + "\n")
        for i in range(trajectory.n_samples):
            state = trajectory.states[i]
            row = [trajectory.times[i]]
            row += list(state.q)
            row += list(state.qdot)
            row += [state.z, trajectory.energy[i], trajectory.eta_residual[i]]
            row += list(trajectory.constraint_residual[i])
            out.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if close:
            out.close()
    for warning in trajectory.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if trajectory.aborted:
        print(
            f"aborted at t={_fmt(trajectory.failure_time)}: "
            f"{trajectory.failure_message}",
            file=sys.stderr,
        )
        if trajectory.states:
            last = trajectory.states[-1]
            print(
                "last state: " + ",".join(_fmt(x) for x in last.vector),
                file=sys.stderr,
            )
        return 2
    return 0


def _cmd_frame(args):
    model = _resolve_model(args.model)
    state = _parse_state(model, args.state)
    frame = contact_frame(model, state)
    cf = constraint_frame(model, frame, state)
    payload = {
        "eta": frame.eta,
        "deta": frame.deta,
        "reeb": frame.reeb,
        "W": frame.W,
        "Winv": frame.Winv,
        "Z": cf.Z,
        "C": cf.C,
        "P_matrix": cf.P_matrix(),
        "Q_matrix": cf.Q_matrix(),
    }
    out, close = _open_out(args.out)
    try:
        out.write(_to_json(payload) + "\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_bracket(args):
    model = _resolve_model(args.model)
    state = _parse_state(model, args.state)
    frame = contact_frame(model, state)
    cf = constraint_frame(model, frame, state)
    structure = projected_structure(frame, cf)
    f = Observable(model, args.f)
    g = Observable(model, args.g)
    print(_fmt(nh_bracket(model, structure, f, g, state)))
    return 0


def _cmd_jacobi(args):
    model = _resolve_model(args.model)
    state = _parse_state(model, args.state)
    f = Observable(model, args.f)
    g = Observable(model, args.g)
    h = Observable(model, args.h)
    print(_fmt(jacobi_defect(model, f, g, h, state)))
    return 0


def _cmd_classify(args):
    model = _resolve_model(args.model)
    result = classify(model, n_states=args.n_states, seed=args.seed)
    print(f"verdict: {result.verdict}")
    print(
        f"structural max: {_fmt(result.structural_max)} "
        f"(tolerance {format(result.structural_tol, '.6g')})"
    )
    if result.structural_witness:
        w = result.structural_witness
        print(
            f"structural witness: constraint={w['constraint']} "
            f"pair={w['pair']} q=" + ",".join(_fmt(x) for x in w["q"])
        )
    print(
        f"behavioral max: {_fmt(result.behavioral_max)} "
        f"(tolerance {format(result.behavioral_tol, '.6g')})"
    )
    if result.behavioral_witness:
        w = result.behavioral_witness
        print(
            "behavioral witness: triple=" + ",".join(w["triple"])
            + " state=" + ",".join(_fmt(x) for x in w["state"])
        )
    return 0


def _cmd_export_model(args):
    text = bundled_source(args.name)
    out, close = _open_out(args.out)
    try:
        out.write(text)
    finally:
        if close:
            out.close()
    return 0


# -- argument wiring -------------------------------------------------------------


def _add_state_flag(parser):
    parser.add_argument(
        "--state",
        help="comma-separated state q...,dq...,z (default: the model's "
        "check_state)",
    )


def _build_parser():
    parser = _Parser(prog="contactnh", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"contactnh {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("model")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-states", type=int, default=100)
    for row in CHECKS:
        p.add_argument(
            f"--tol-{row.name}",
            type=float,
            default=None,
            dest=f"tol_{row.name.replace('-', '_')}",
            help=f"override tolerance (default {row.tolerance:g})",
        )
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("simulate", help="integrate and write CSV")
    p.add_argument("model")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    _add_state_flag(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument(
        "--unconstrained",
        action="store_true",
        help="integrate the unconstrained dynamics even if constraints exist",
    )
    p.add_argument(
        "--project",
        action="store_true",
        help="least-squares velocity projection after every step",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("frame", help="dump frame matrices as JSON")
    p.add_argument("model")
    _add_state_flag(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_frame)

    p = sub.add_parser("bracket", help="evaluate one bracket entry")
    p.add_argument("model")
    p.add_argument("f", help="observable expression")
    p.add_argument("g", help="observable expression")
    _add_state_flag(p)
    p.set_defaults(func=_cmd_bracket)

    p = sub.add_parser("jacobi", help="evaluate one Jacobi-identity defect")
    p.add_argument("model")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("h")
    _add_state_flag(p)
    p.set_defaults(func=_cmd_jacobi)

    p = sub.add_parser("classify", help="semiholonomic or nonholonomic")
    p.add_argument("model")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-states", type=int, default=20)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("export-model", help="print a bundled model file")
    p.add_argument("name")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_export_model)

    return parser


def run(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _ValidationExit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RegularityError, DegeneracyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ModelError, ExpressionError, RankError, ContactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(argv=None))


if __name__ == "__main__":
    main()
