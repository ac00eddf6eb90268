"""Benchmark the hot kernels under the numba and numpy backends.

The backend is fixed at import time by NCPROB_BACKEND, so each timing runs
in a child interpreter.  Usage:

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys

WORKLOADS = {
    "loewner_flow(400 pts)": """
import numpy as np, time
from ncprob import loewner as lw
field = lw.HerglotzField.from_driving(lw.DrivingFunction.constant(0.5), 2.0)
z = np.linspace(-2, 2, 400) + 2.5e-3j
lw.evaluate_chain(field, 0.0, 2.0, z[:4], tol=1e-9)   # compile
t0 = time.perf_counter()
lw.evaluate_chain(field, 0.0, 2.0, z, tol=1e-9)
print(time.perf_counter() - t0)
""",
    "ising_metropolis(1e6 flips, 64x64)": """
import numpy as np, time
from ncprob import markov as mk
state = mk.IsingState.random((64, 64), seed=1, beta=0.4407)
mk.metropolis_ising(state, 1000, seed=2)              # compile
t0 = time.perf_counter()
mk.metropolis_ising(state, 10**6, seed=3)
print(time.perf_counter() - t0)
""",
    "markov_episodes(1e5)": """
import numpy as np, time
from ncprob import markov as mk
rng = np.random.default_rng(3)
p = rng.random((4, 4)) + 0.05
p = mk.TransitionMatrix(p / p.sum(axis=0))
mk.hitting_time_mc(p, 0, 100, seed=1)                 # compile
t0 = time.perf_counter()
mk.hitting_time_mc(p, 0, 100_000, seed=2)
print(time.perf_counter() - t0)
""",
}


def run(code, backend):
    env = dict(os.environ, NCPROB_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    rows = []
    for name, code in WORKLOADS.items():
        t_numba = run(code, "numba")
        t_numpy = run(code, "numpy")
        rows.append((name, t_numba, t_numpy))
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, a, b in rows:
        print(f"{name:<{width}}  {a:>9.4f}s  {b:>9.4f}s  {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
