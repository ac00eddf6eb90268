"""Random-matrix oracles.

GUE sampling in the normalization where the empirical spectral
distribution tends to the standard semicircle law, Haar unitaries,
an asymptotic-freeness statistic over short alternating words, and the
free autoregressive toy model.
"""

import math
from dataclasses import dataclass

import numpy as np

from .measures import AtomicMeasure


class RandMatError(ValueError):
    pass


class GaussianStream:
    """Deterministic standard normals via Box-Muller over seeded uniforms."""

    def __init__(self, seed):
        self._rng = np.random.default_rng(seed)

    def normals(self, shape):
        n = int(np.prod(shape))
        half = (n + 1) // 2
        u1 = 1.0 - self._rng.random(half)  # avoid log(0)
        u2 = self._rng.random(half)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * math.pi * u2),
                            r * np.sin(2 * math.pi * u2)])[:n]
        return z.reshape(shape)


def trace_state(a):
    """Normalized trace expectation phi(A) = tr(A)/N."""
    a = np.asarray(a)
    return float(np.trace(a).real) / a.shape[0]


def sample_gue(n, seed, stream=None):
    """Hermitian matrix with independent N(0, 1/(2N)) real and imaginary
    entry components; phi(A^2) -> 1 as N grows."""
    if n < 1:
        raise RandMatError("need N >= 1")
    g = stream if stream is not None else GaussianStream(seed)
    sd = math.sqrt(1.0 / (2 * n))
    x = g.normals((n, n)) * sd
    y = g.normals((n, n)) * sd
    a = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    a[iu] = x[iu] + 1j * y[iu]
    a = a + a.conj().T
    a[np.diag_indices(n)] = np.diag(x)
    return a


def haar_unitary(n, seed, stream=None):
    """Haar-distributed unitary via QR of a complex Ginibre matrix with the
    phase fix making the R diagonal positive."""
    g = stream if stream is not None else GaussianStream(seed)
    z = (g.normals((n, n)) + 1j * g.normals((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q


def esd(a):
    """Empirical spectral distribution: uniform atoms at the eigenvalues."""
    a = np.asarray(a)
    if a.shape[0] > 4096:
        raise RandMatError("dense eigensolve limited to 4096")
    if np.abs(a - a.conj().T).max() > 1e-12:
        raise RandMatError("matrix must be Hermitian")
    evals = np.linalg.eigvalsh(a)
    n = evals.size
    return AtomicMeasure.from_pairs(
        [(float(x), 1.0 / n) for x in evals], merge_tol=0.0, renormalize=True
    )


def semicircle_cdf(x):
    t = np.clip(np.asarray(x, dtype=float) / 2.0, -1, 1)
    return 0.5 + (t * np.sqrt(1 - t**2) + np.arcsin(t)) / math.pi


def marchenko_pastur_cdf(x, grid_points=200_001):
    """CDF of MP(1) by quadrature of its closed-form density."""
    x = np.asarray(x, dtype=float)
    grid = np.linspace(0.0, 4.0, grid_points)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(grid > 0,
                        np.sqrt(np.clip(grid * (4 - grid), 0, None))
                        / (2 * math.pi * np.maximum(grid, 1e-300)), 0.0)
    cum = np.concatenate([[0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cum /= cum[-1]
    return np.interp(x, grid, cum, left=0.0, right=1.0)


def kolmogorov_distance(measure, cdf):
    """sup_x |F_emp(x) - F(x)| for an atomic measure against a smooth CDF."""
    xs = measure.positions
    ws = measure.weights
    emp = np.cumsum(ws)
    target = cdf(xs)
    return float(np.maximum(np.abs(emp - target),
                            np.abs(emp - ws - target)).max())


def wigner_check(n, seeds):
    """Kolmogorov distances of single-sample ESDs to Semicircle(0,1)."""
    return [kolmogorov_distance(esd(sample_gue(n, s)), semicircle_cdf)
            for s in seeds]


def freeness_statistic(a, b):
    """Largest |phi| over centered alternating words of length <= 4 in
    {A, A^2} and {B, B^2}; near zero for (asymptotically) free pairs."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise RandMatError("matrices must share a shape")
    n = a.shape[0]
    eye = np.eye(n)

    def centered(m):
        return [m - trace_state(m) * eye,
                m @ m - trace_state(m @ m) * eye]

    xa, xb = centered(a), centered(b)
    worst = 0.0
    for length in range(2, 5):
        for first in (xa, xb):
            second = xb if first is xa else xa
            letters = [first if i % 2 == 0 else second for i in range(length)]
            for choice in range(2**length):
                w = None
                for i, let in enumerate(letters):
                    m = let[(choice >> i) & 1]
                    w = m if w is None else w @ m
                worst = max(worst, abs(trace_state(w)))
    return worst


@dataclass(frozen=True)
class FreeAR1Result:
    mean_last: float
    var_last: float
    mixed_moment: float
    noise_var_last: float
    var_trajectory: tuple


def free_ar1(n, steps, c, noise="gue", seed=0):
    """X_0 = I, X_m = c X_{m-1} + eps_m with GUE or centered squared-GUE
    noise; reports phi(X_m), phi(X_m^2), and the alternating mixed moment
    phi(X_{m-1} eps_m X_{m-1} eps_m)."""
    if abs(c) >= 1:
        raise RandMatError("need |c| < 1 for stationarity")
    if steps < 1:
        raise RandMatError("need at least one step")
    if noise not in ("gue", "squared_gue"):
        raise RandMatError("noise must be 'gue' or 'squared_gue'")
    stream = GaussianStream(seed)
    x = np.eye(n, dtype=complex)
    traj = []
    prev = x
    eps = None
    for _ in range(steps):
        g = sample_gue(n, None, stream=stream)
        if noise == "squared_gue":
            g = g @ g
            g = g - trace_state(g) * np.eye(n)
        prev = x
        eps = g
        x = c * x + g
        traj.append(trace_state(x @ x))
    mixed = trace_state(prev @ eps @ prev @ eps)
    return FreeAR1Result(
        mean_last=trace_state(x),
        var_last=trace_state(x @ x) - trace_state(x) ** 2,
        mixed_moment=mixed,
        noise_var_last=trace_state(eps @ eps),
        var_trajectory=tuple(traj),
    )
