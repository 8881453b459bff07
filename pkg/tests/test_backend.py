"""Compiled and pure-Python tape kernels must be interchangeable.

Parity here means bitwise equality of every output buffer and identical
error statuses, not closeness: the two kernels implement the same
instruction semantics formula for formula.
"""

import hashlib

import numpy as np
import pytest

from contactnh import _kernels_py, backend
from contactnh.expr import parse
from contactnh.tape import (
    ERR_DIV_ZERO,
    ERR_LOG_DOMAIN,
    ERR_SQRT_DOMAIN,
    compile_tape,
    error_message,
)

try:
    from contactnh import _kernels
except ImportError:  # pragma: no cover - source-only install
    _kernels = None

needs_compiled = pytest.mark.skipif(
    _kernels is None, reason="compiled kernel not built"
)


PARITY_SOURCES = [
    "x^2*y + sin(x*z)",
    "exp(x)*cos(y) - x/y",
    "log(x + 2)*sqrt(y + 3) + tan(z)",
    "x^-3 + (y + 1)^5 + z^0",
    "x^y + 2^z",
    "sqrt(x^2 + y^2 + z^2 + 1)",
    "(x - y)*(y - z)*(z - x)/(1 + x^2)",
    "-x + pi*y - -z",
]


def run_kernel(kernel, tape, point, order):
    val = np.empty(tape.n_slots)
    grad = np.empty((tape.n_slots, tape.n_vars))
    hess = np.empty((tape.n_slots, tape.n_vars, tape.n_vars))
    status, instr = kernel.eval_tape(
        tape.code, tape.consts, point, order, val, grad, hess
    )
    return status, instr, val, grad, hess


@needs_compiled
@pytest.mark.parametrize("source", PARITY_SOURCES)
@pytest.mark.parametrize("order", [0, 1, 2])
def test_bitwise_parity(source, order):
    tape = compile_tape(parse(source), ("x", "y", "z"))
    rng = np.random.default_rng(20260814)
    for _ in range(20):
        point = rng.uniform(0.1, 2.0, size=3)
        sp, ip, vp, gp, hp = run_kernel(_kernels_py, tape, point, order)
        sc, ic, vc, gc, hc = run_kernel(_kernels, tape, point, order)
        assert (sp, ip) == (sc, ic) == (0, -1)
        assert np.array_equal(vp, vc)
        if order >= 1:
            assert np.array_equal(gp, gc)
        if order >= 2:
            assert np.array_equal(hp, hc)


@needs_compiled
def test_parity_digest_over_random_frames():
    """One digest over a large corpus catches any stray ULP divergence."""
    digests = []
    for kernel in (_kernels_py, _kernels):
        sha = hashlib.sha256()
        for source in PARITY_SOURCES:
            tape = compile_tape(parse(source), ("x", "y", "z"))
            state = np.random.default_rng(99)
            for _ in range(20):
                point = state.uniform(0.05, 3.0, size=3)
                _, _, val, grad, hess = run_kernel(kernel, tape, point, 2)
                sha.update(val.tobytes())
                sha.update(grad.tobytes())
                sha.update(hess.tobytes())
        digests.append(sha.hexdigest())
    assert digests[0] == digests[1]


@needs_compiled
@pytest.mark.parametrize(
    "source,point,code",
    [
        ("log(x)", [-1.0], ERR_LOG_DOMAIN),
        ("log(x)", [0.0], ERR_LOG_DOMAIN),
        ("sqrt(x)", [-0.5], ERR_SQRT_DOMAIN),
        ("1/x", [0.0], ERR_DIV_ZERO),
    ],
)
def test_error_statuses_match(source, point, code):
    tape = compile_tape(parse(source), ("x",))
    point = np.asarray(point)
    sp, ip, *_ = run_kernel(_kernels_py, tape, point, 2)
    sc, ic, *_ = run_kernel(_kernels, tape, point, 2)
    assert sp == sc == code
    assert ip == ic
    text_p, off_p = error_message(tape, sp, ip)
    text_c, off_c = error_message(tape, sc, ic)
    assert (text_p, off_p) == (text_c, off_c)


def test_active_backend_is_reported():
    assert backend.backend_name() in ("compiled", "python")
    assert backend.backend_name() in backend.available_backends()
    assert "python" in backend.available_backends()


@needs_compiled
def test_compiled_preferred_by_default():
    assert backend.available_backends()[0] == "compiled"


def test_env_override_rejects_unknown(monkeypatch):
    monkeypatch.setenv("CONTACT_NH_BACKEND", "fortran")
    with pytest.raises(ImportError):
        backend._load()


def test_env_override_python(monkeypatch):
    monkeypatch.setenv("CONTACT_NH_BACKEND", "python")
    assert backend._load().BACKEND_NAME == "python"


@needs_compiled
def test_env_override_compiled(monkeypatch):
    monkeypatch.setenv("CONTACT_NH_BACKEND", "compiled")
    assert backend._load().BACKEND_NAME == "compiled"
