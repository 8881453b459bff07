"""Compare the compiled kernel against the pure-Python fallback.

Both backends execute the same tape format and must agree bitwise, so
this script first checks agreement on every workload and then reports
per-call timings.  The backend is fixed at import time, so the
end-to-end integration comparison runs in subprocesses with
``CONTACT_NH_BACKEND`` forced each way.

Usage::

    python benchmarks/bench_backends.py [--repeat N] [--skip-end-to-end]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from contactnh import _kernels_py
from contactnh.models import bundled

try:
    from contactnh import _kernels
except ImportError:
    _kernels = None

_END_TO_END = """
import time
from contactnh import backend
from contactnh.integrate import integrate
from contactnh.models import bundled

model = bundled("sledge")
start = time.perf_counter()
run = integrate(model, "constrained", model.check_state, 0.0, 1.0, 1e-3)
elapsed = time.perf_counter() - start
assert not run.aborted
print(f"{backend.backend_name()} {elapsed:.6f}")
"""


def _workloads():
    """(label, tape, point, order) cases covering the hot jet shapes."""
    sledge = bundled("sledge")
    oscillator = bundled("damped_oscillator")
    cases = []
    for model, label in ((sledge, "sledge"), (oscillator, "oscillator")):
        tape = model._lagrangian_program.tape
        point = model.check_state.vector
        for order in (0, 1, 2):
            cases.append((f"{label} L jet, order {order}", tape, point, order))
    knife = bundled("knife_edge")
    program = knife.constraint_set.programs[0]
    cases.append(
        ("knife constraint jet, order 2", program.tape,
         knife.check_state.vector, 2)
    )
    return cases


def _buffers(tape):
    return (
        np.empty(tape.n_slots),
        np.empty((tape.n_slots, tape.n_vars)),
        np.empty((tape.n_slots, tape.n_vars, tape.n_vars)),
    )


def _check_parity(tape, point, order):
    outs = []
    for kernel in (_kernels, _kernels_py):
        val, grad, hess = _buffers(tape)
        status, _ = kernel.eval_tape(
            tape.code, tape.consts, point, order, val, grad, hess
        )
        assert status == 0
        filled = [val.copy()]
        if order >= 1:
            filled.append(grad.copy())
        if order >= 2:
            filled.append(hess.copy())
        outs.append(filled)
    for left, right in zip(*outs):
        if not np.array_equal(left, right):
            raise AssertionError("backends disagree; benchmark is void")


def _time_per_call(kernel, tape, point, order, repeat):
    val, grad, hess = _buffers(tape)

    def call():
        kernel.eval_tape(
            tape.code, tape.consts, point, order, val, grad, hess
        )

    timer = timeit.Timer(call)
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--repeat", type=int, default=5,
        help="timing repeats per workload (best wins; default 5)",
    )
    parser.add_argument(
        "--skip-end-to-end", action="store_true",
        help="only run the kernel-level timings",
    )
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled kernel not installed; nothing to compare")
        return 1

    print("kernel-level eval_tape timings (per call, best of "
          f"{args.repeat}):")
    header = f"  {'workload':<32}{'compiled':>12}{'python':>12}{'speedup':>10}"
    print(header)
    for label, tape, point, order in _workloads():
        _check_parity(tape, point, order)
        fast = _time_per_call(_kernels, tape, point, order, args.repeat)
        slow = _time_per_call(_kernels_py, tape, point, order, args.repeat)
        print(
            f"  {label:<32}{fast * 1e6:>10.2f} us{slow * 1e6:>10.2f} us"
            f"{slow / fast:>9.1f}x"
        )

    if args.skip_end_to_end:
        return 0

    print("\nend-to-end: sledge constrained integration, 1000 steps:")
    times = {}
    for choice in ("compiled", "python"):
        env = dict(os.environ, CONTACT_NH_BACKEND=choice)
        out = subprocess.run(
            [sys.executable, "-c", _END_TO_END],
            capture_output=True, text=True, env=env, check=True,
        )
        name, elapsed = out.stdout.split()
        assert name == choice
        times[choice] = float(elapsed)
        print(f"  {choice:<10}{times[choice]:>8.3f} s")
    print(f"  speedup   {times['python'] / times['compiled']:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
