import numpy as np
import pytest

from ncprob import loewner, markov
from ncprob import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so JIT time stays out of timings."""
    driving = loewner.DrivingFunction.constant(0.0)
    loewner.slit_chain(driving, 0.01, np.array([1j]), tol=1e-6)
    spins = np.ones((2, 2), dtype=np.int8)
    _kernels.ising_run(spins, np.zeros((2, 2), dtype=np.uint8), 1.0, 1.0,
                       0.0, np.zeros(4, dtype=np.int64), np.zeros(4))
    hist = np.zeros(16, dtype=np.int64)
    _kernels.ising_run_hist(spins, 1.0, 1.0, 0.0,
                            np.zeros(4, dtype=np.int64), np.ones(4), hist, 0)
    cum = np.cumsum(np.full((2, 2), 0.5), axis=0)
    _kernels.return_time_episodes(cum, 0, np.full(8, 0.3), 0, 0, 0, 0, 0)
