"""Kernel backend selection.

Hot inner loops (Loewner ODE flows, Metropolis sweeps, Markov episode
simulation) are written as numba-compilable functions.  By default they are
JIT compiled; setting the environment variable ``NCPROB_BACKEND=numpy``
selects the pure-Python/numpy fallback, which runs the *same* functions
uncompiled and therefore produces bit-identical results, just slower.
``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os

_choice = os.environ.get("NCPROB_BACKEND", "numba").strip().lower()

if _choice not in ("numba", "numpy"):
    raise RuntimeError(
        f"NCPROB_BACKEND must be 'numba' or 'numpy', got {_choice!r}"
    )

USING_NUMBA = _choice == "numba"

if USING_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False

if USING_NUMBA:
    def jit(func):
        return _njit(cache=True)(func)
else:
    def jit(func):
        return func


def backend_name():
    return "numba" if USING_NUMBA else "numpy"
