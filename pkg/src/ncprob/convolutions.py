"""The five additive convolutions and their limit-theorem drivers.

Moment-level arithmetic is exact (rational inputs stay rational): classical
via binomial sums, Boolean and free via cumulant addition, monotone via
composition of truncated F-series.  Measure-level convolutions of atomic
measures run through the transforms: numeric F-composition / B-addition
followed by Stieltjes inversion, and the free case through the cumulant
route realized as a moment-matched quadrature measure.
"""

import math
from fractions import Fraction

import numpy as np

from . import transforms as tr
from .measures import AtomicMeasure, MeasureError, MomentSequence
from .series import compose_power

KINDS = ("classical", "boolean", "free", "monotone", "antimonotone")


class TruncationError(ValueError):
    pass


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"unknown convolution kind {kind!r}; one of {KINDS}")


# ---------------------------------------------------------------------------
# moment level
# ---------------------------------------------------------------------------

def _convolve_moments(kind, a, b):
    if a.order != b.order:
        raise TruncationError(
            f"moment orders differ: {a.order} vs {b.order}"
        )
    k = a.order
    if kind == "classical":
        av, bv = [1] + list(a.values), [1] + list(b.values)
        vals = [sum(math.comb(n, j) * av[j] * bv[n - j] for j in range(n + 1))
                for n in range(1, k + 1)]
        return MomentSequence(tuple(vals))
    if kind == "boolean":
        ca = tr.moments_to_boolean_cumulants(a)
        cb = tr.moments_to_boolean_cumulants(b)
        return tr.boolean_cumulants_to_moments([x + y for x, y in zip(ca, cb)])
    if kind == "free":
        ca = tr.moments_to_free_cumulants(a)
        cb = tr.moments_to_free_cumulants(b)
        return tr.free_cumulants_to_moments([x + y for x, y in zip(ca, cb)])
    if kind == "antimonotone":
        return _convolve_moments("monotone", b, a)
    comp = tr.f_series(a).compose(tr.f_series(b))
    return tr.series_moments(comp, k)


# ---------------------------------------------------------------------------
# measure level (atomic inputs)
# ---------------------------------------------------------------------------

def _default_grid(mu, nu, points=2001):
    lo1, hi1 = mu.support_bounds()
    lo2, hi2 = nu.support_bounds()
    r = max(abs(lo1), abs(hi1)) + max(abs(lo2), abs(hi2))
    pad = 0.1 * r + 0.1
    return np.linspace(-(r + pad), r + pad, points)


def _convolve_measures(kind, mu, nu, order=8, grid=None):
    if not (isinstance(mu, AtomicMeasure) and isinstance(nu, AtomicMeasure)):
        raise MeasureError("measure-level convolution expects atomic inputs")
    if kind == "classical":
        pairs = {}
        for x, w in mu.atoms:
            for y, v in nu.atoms:
                key = x + y
                pairs[key] = pairs.get(key, 0) + w * v
        return AtomicMeasure.from_pairs(pairs.items(), merge_tol=1e-12)
    if kind == "free":
        m = _convolve_moments("free", mu.moments(order), nu.moments(order))
        return tr.moment_quadrature(m)
    if kind == "antimonotone":
        return _convolve_measures("monotone", nu, mu, order, grid)
    if grid is None:
        grid = _default_grid(mu, nu)
    if kind == "monotone":
        def fmap(z):
            return tr.f_transform(mu, tr.f_transform(nu, z))
    else:  # boolean
        def fmap(z):
            return z - tr.b_transform(mu, z) - tr.b_transform(nu, z)
    # atomic transforms evaluate exactly, so a fine ladder is cheap
    return tr.measure_from_ftransform(tr.HerglotzMap(fmap, "f"), grid,
                                      eps_ladder=(2e-3, 1e-3, 5e-4))


def convolve(kind, a, b, order=8, grid=None):
    """Convolution of two measures or two moment sequences.

    Moment sequences must share the same order.  Measure-level inputs must
    be atomic; the result is atomic for the classical kind, a quadrature
    measure matching 2*order moments for the free kind, and a recovered
    GridMeasure for the monotone/Boolean kinds.
    """
    _check_kind(kind)
    if isinstance(a, MomentSequence) or isinstance(b, MomentSequence):
        return _convolve_moments(kind, a, b)
    return _convolve_measures(kind, a, b, order=order, grid=grid)


def convolve_power(kind, m, n, order=None):
    """Moments of the n-fold self-convolution of a moment sequence."""
    _check_kind(kind)
    if not isinstance(m, MomentSequence):
        m = m.moments(order or 8)
    if n < 1:
        raise ValueError("need n >= 1")
    if kind == "classical":
        cum = tr.moments_to_classical_cumulants(m)
        return tr.classical_cumulants_to_moments([n * c for c in cum])
    if kind == "boolean":
        cum = tr.moments_to_boolean_cumulants(m)
        return tr.boolean_cumulants_to_moments([n * c for c in cum])
    if kind == "free":
        cum = tr.moments_to_free_cumulants(m)
        return tr.free_cumulants_to_moments([n * c for c in cum])
    comp = compose_power(tr.f_series(m), n)
    return tr.series_moments(comp, m.order)


def boolean_divisibility_root(m, n):
    """The n-th Boolean convolution root: B-transform divided by n."""
    if n < 1:
        raise ValueError("need n >= 1")
    cum = tr.moments_to_boolean_cumulants(m)
    return tr.boolean_cumulants_to_moments([_divide(c, n) for c in cum])


def _divide(c, n):
    if isinstance(c, (int, Fraction)):
        return Fraction(c) / n
    return c / n


def _sqrt_scale(n):
    r = math.isqrt(n)
    if r * r == n:
        return Fraction(1, r)
    return 1.0 / math.sqrt(n)


def _scale_cumulant(c, n, k):
    """c * n^(1 - k/2), exact whenever the power is an integer or c = 0."""
    if c == 0:
        return c
    if k % 2 == 0:
        power = 1 - k // 2
        factor = Fraction(n) ** power if isinstance(c, (int, Fraction)) \
            else float(n) ** power
        return c * factor
    return c * n ** (1 - k / 2)


def clt_iterate(kind, base, n):
    """Moments of the rescaled n-fold self-convolution (x -> x/sqrt(n)).

    The base sequence must be normalized to mean 0 and variance 1.  Exact
    rational arithmetic is preserved when n is a perfect square.
    """
    _check_kind(kind)
    if not isinstance(base, MomentSequence):
        raise MeasureError("clt_iterate expects a MomentSequence")
    if abs(float(base[1])) > 1e-12 or abs(float(base[2]) - 1) > 1e-12:
        raise MeasureError("base must have mean 0 and variance 1")
    lam = _sqrt_scale(n)
    if kind in ("monotone", "antimonotone"):
        f = tr.f_series(base)
        scaled = f.dilate(lam)
        return tr.series_moments(compose_power(scaled, n), base.order)
    if kind == "classical":
        to, back = (tr.moments_to_classical_cumulants,
                    tr.classical_cumulants_to_moments)
    elif kind == "boolean":
        to, back = (tr.moments_to_boolean_cumulants,
                    tr.boolean_cumulants_to_moments)
    else:
        to, back = (tr.moments_to_free_cumulants,
                    tr.free_cumulants_to_moments)
    cum = to(base)
    scaled = [_scale_cumulant(c, n, k) for k, c in enumerate(cum, start=1)]
    return back(scaled)
