"""Loewner evolutions on the upper half-plane.

A driving field is a time-indexed family of compactly supported measures
nu_t; the transition mappings f_{s,t} of the associated additive Loewner
chain are evaluated by integrating the characteristic ODE

    d/dtau f = G_{nu_tau}(f),    from tau = t down to tau = s,

whose solutions move upward in H.  The inverse flow integrates the same
equation forward in time and can collide with the growing hull.  Slit
chains are the special case nu_t = delta_{U(t)} for a real driving
function U.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, transforms
from .measures import AtomicMeasure
from .transforms import HerglotzMap


class LoewnerError(Exception):
    pass


class StepUnderflow(LoewnerError):
    pass


class DomainEscape(LoewnerError):
    """Trajectory left H during a chain evaluation; indicates misuse."""


class HullCollision(LoewnerError):
    """Inverse flow hit the hull before the requested time."""


class NoConvergence(LoewnerError):
    pass


class BoundError(LoewnerError):
    pass


# ---------------------------------------------------------------------------
# driving functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DrivingFunction:
    """Real driving function of a slit chain.

    kind 'constant' uses ``values[0]``; 'piecewise_constant' holds values
    on the intervals between ``times``; 'sampled' interpolates linearly.
    """

    kind: str
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "piecewise_constant", "sampled"):
            raise ValueError(f"unknown driving kind {self.kind!r}")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "constant":
            if len(self.values) != 1:
                raise ValueError("constant driving needs exactly one value")
        elif self.kind == "piecewise_constant":
            if len(self.times) != len(self.values) + 1:
                raise ValueError("need len(times) == len(values) + 1")
        else:
            if len(self.times) != len(self.values) or len(self.times) < 2:
                raise ValueError("sampled driving needs matching times/values")
        if self.times and any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def constant(cls, u):
        return cls("constant", (), (u,))

    @classmethod
    def piecewise(cls, times, values):
        return cls("piecewise_constant", tuple(times), tuple(values))

    @classmethod
    def sampled(cls, times, values):
        return cls("sampled", tuple(times), tuple(values))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.values[0])
        if self.kind == "sampled":
            return np.interp(t, self.times, self.values)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1,
                      0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def bound(self):
        return max(abs(v) for v in self.values)

    def horizon(self):
        return self.times[-1] if self.times else math.inf

    def to_json(self):
        out = {"kind": self.kind, "values": list(self.values)}
        if self.times:
            out["times"] = list(self.times)
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], tuple(obj.get("times", ())),
                   tuple(obj["values"]))


# ---------------------------------------------------------------------------
# Herglotz fields
# ---------------------------------------------------------------------------

class HerglotzField:
    """Time-indexed family of finite atomic measures driving a chain.

    Tabulated fields store per-segment atom positions (moving linearly in
    time), weights, and time breaks; generic fields wrap an evaluator
    ``t -> AtomicMeasure``.  Weights may sum to a rate other than 1 (used
    by the scaling lemma); probability fields have rate 1.
    """

    def __init__(self, tbreaks, pos, slope, wts, horizon, support_bound,
                 evaluator=None, rate_factor=1.0):
        self.tbreaks = np.asarray(tbreaks, dtype=float)
        self.pos = np.asarray(pos, dtype=float)
        self.slope = np.asarray(slope, dtype=float)
        self.wts = np.asarray(wts, dtype=float)
        self.horizon = float(horizon)
        self.support_bound = float(support_bound)
        self.evaluator = evaluator
        self.rate_factor = float(rate_factor)

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, measure, horizon):
        if not isinstance(measure, AtomicMeasure):
            raise LoewnerError("constant fields take an AtomicMeasure")
        p = measure.positions[None, :]
        w = measure.weights[None, :]
        bound = max(abs(x) for x, _ in measure.atoms)
        return cls([0.0, horizon], p, np.zeros_like(p), w, horizon, bound)

    @classmethod
    def piecewise(cls, tbreaks, measures):
        tbreaks = [float(t) for t in tbreaks]
        if len(measures) != len(tbreaks) - 1:
            raise LoewnerError("need one measure per time segment")
        na = max(len(m.atoms) for m in measures)
        ns = len(measures)
        pos = np.zeros((ns, na))
        wts = np.zeros((ns, na))
        for j, m in enumerate(measures):
            pos[j, :len(m.atoms)] = m.positions
            wts[j, :len(m.atoms)] = m.weights
        bound = max(max(abs(x) for x, _ in m.atoms) for m in measures)
        return cls(tbreaks, pos, np.zeros_like(pos), wts, tbreaks[-1], bound)

    @classmethod
    def from_driving(cls, driving, horizon=None):
        if horizon is None:
            horizon = driving.horizon()
        if not math.isfinite(horizon):
            raise LoewnerError("constant drivings need an explicit horizon")
        if driving.kind == "constant":
            return cls.constant(AtomicMeasure.dirac(driving.values[0]), horizon)
        if driving.kind == "piecewise_constant":
            times = np.asarray(driving.times)
            vals = np.asarray(driving.values)
            pos = vals[:, None]
            return cls(times, pos, np.zeros_like(pos),
                       np.ones_like(pos), horizon, driving.bound())
        times = np.asarray(driving.times)
        vals = np.asarray(driving.values)
        pos = vals[:-1, None]
        slope = ((vals[1:] - vals[:-1]) / np.diff(times))[:, None]
        return cls(times, pos, slope, np.ones_like(pos), horizon,
                   driving.bound())

    @classmethod
    def from_evaluator(cls, evaluator, horizon, support_bound, segments=256):
        """Tabulate a generic ``t -> AtomicMeasure`` evaluator on a uniform
        time partition (atoms held constant within each segment, sampled at
        midpoints)."""
        tbreaks = np.linspace(0.0, horizon, segments + 1)
        measures = [evaluator(0.5 * (a + b))
                    for a, b in zip(tbreaks[:-1], tbreaks[1:])]
        field = cls.piecewise(tbreaks, measures)
        field.evaluator = evaluator
        field.support_bound = float(support_bound)
        return field

    # -- queries -------------------------------------------------------------

    def atoms(self, t):
        """Field atoms (positions, weights) at time t."""
        if self.evaluator is not None:
            m = self.evaluator(t)
            return m.positions, m.weights * self.rate_factor
        j = int(np.clip(np.searchsorted(self.tbreaks, t, side="right") - 1,
                        0, self.pos.shape[0] - 1))
        dt = t - self.tbreaks[j]
        live = self.wts[j] > 0
        return (self.pos[j, live] + self.slope[j, live] * dt,
                self.wts[j, live])

    def rate(self, t):
        return float(self.atoms(t)[1].sum())

    def scaled(self, c, d):
        """Field of the rescaled chain h_t(z) = f_{d t}(c z) / c."""
        if c <= 0 or d <= 0:
            raise LoewnerError("scaling parameters must be positive")
        out = HerglotzField(
            self.tbreaks / d, self.pos / c, self.slope * (d / c),
            self.wts * (d / c**2), self.horizon / d, self.support_bound / c,
            rate_factor=self.rate_factor * d / c**2,
        )
        if self.evaluator is not None:
            ev = self.evaluator

            def scaled_ev(t):
                m = ev(d * t)
                return AtomicMeasure(tuple((x / c, w) for x, w in m.atoms))

            out.evaluator = scaled_ev
        return out


# ---------------------------------------------------------------------------
# chain evaluation
# ---------------------------------------------------------------------------

_STATUS_ERRORS = {
    _kernels.FLOW_UNDERFLOW: StepUnderflow,
}


@dataclass(frozen=True)
class ChainPoint:
    """One chain evaluation with its trajectory diagnostics."""

    s: float
    t: float
    z: complex
    value: complex
    min_imag: float
    steps: int


def _flow(field, tau0, tau1, z, tol, im_floor, escape_error):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out, status, min_im, steps = _kernels.flow_batch(
        z, float(tau0), float(tau1), field.tbreaks, field.pos, field.slope,
        field.wts, float(tol), float(im_floor),
    )
    if np.any(status == _kernels.FLOW_UNDERFLOW):
        raise StepUnderflow("required step below 1e-14 of the time span")
    if np.any(status == _kernels.FLOW_ESCAPE):
        raise escape_error("trajectory imaginary part fell below the floor")
    if np.any(status == _kernels.FLOW_STRANGLED):
        # the singularity clamp strangled the step: the trajectory ran into
        # the field support
        if escape_error is HullCollision:
            raise HullCollision("trajectory ran into the hull")
        raise StepUnderflow("step strangled near the field support")
    return out, min_im, steps


def evaluate_chain(field, s, t, z, tol=1e-9):
    """Transition mapping f_{s,t}(z) of the chain driven by the field."""
    if not 0 <= s <= t <= field.horizon + 1e-12:
        raise LoewnerError("need 0 <= s <= t <= horizon")
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise LoewnerError("chain evaluation requires Im(z) > 0")
    out, _, _ = _flow(field, t, s, z, tol, 1e-12, DomainEscape)
    return out[0] if z.ndim == 0 else out


def evaluate_chain_point(field, s, t, z, tol=1e-9):
    """Like evaluate_chain for a single point, with step diagnostics."""
    z = complex(z)
    if z.imag <= 0:
        raise LoewnerError("chain evaluation requires Im(z) > 0")
    out, min_im, steps = _flow(field, t, s, np.array([z]), tol, 1e-12,
                               DomainEscape)
    return ChainPoint(s=float(s), t=float(t), z=z, value=complex(out[0]),
                      min_imag=float(min_im[0]), steps=int(steps[0]))


def slit_chain(driving, t, z, tol=1e-9):
    """f_t(z) = f_{0,t}(z) for the slit field nu_s = delta_{U(s)}."""
    field = HerglotzField.from_driving(driving, horizon=max(t, 1e-300))
    return evaluate_chain(field, 0.0, t, z, tol)


def inverse_flow(field, t, w, tol=1e-9):
    """g_t(w) with f_{0,t}(g_t(w)) = w; raises HullCollision inside the hull."""
    if not 0 <= t <= field.horizon + 1e-12:
        raise LoewnerError("need 0 <= t <= horizon")
    w = np.asarray(w, dtype=complex)
    if np.any(w.imag <= 0):
        raise LoewnerError("inverse flow requires Im(w) > 0")
    out, _, _ = _flow(field, 0.0, t, w, tol, 1e-9, HullCollision)
    return out[0] if w.ndim == 0 else out


def chain_fmap(field, t, tol=1e-9):
    """The chain map f_{0,t} packaged as a vectorized HerglotzMap."""
    return HerglotzMap(lambda z: evaluate_chain(field, 0.0, t, z, tol), "f")


def chain_measure(field, t, grid, tol=1e-9, eps_ladder=None):
    """Recover the measure mu_t with F_{mu_t} = f_{0,t} by inversion."""
    kwargs = {}
    if eps_ladder is not None:
        kwargs["eps_ladder"] = eps_ladder
    return transforms.measure_from_ftransform(chain_fmap(field, t, tol),
                                              grid, **kwargs)


def scale_chain(field, c, d):
    """Field whose chain satisfies h_t(z) = f_{d t}(c z) / c (scaling lemma)."""
    return field.scaled(c, d)


def capacity_fit(fmap, ys=(1e3, 3e3, 1e4)):
    """Half-plane capacity from the 1/z coefficient at the hydrodynamic
    normalization: least-squares fit of Im f(iy) - y against 1/y and 1/y^3.
    """
    ys = np.asarray(ys, dtype=float)
    vals = np.asarray(fmap(1j * ys))
    rhs = vals.imag - ys
    basis = np.stack([1.0 / ys, 1.0 / ys**3], axis=1)
    coef, *_ = np.linalg.lstsq(basis, rhs, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# slit approximation of a general field (time-weaving construction)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlitApproximation:
    driving: DrivingFunction
    max_deviation: float
    probes: tuple


def approximate_field_by_slits(field, horizon, m, probe_points=None,
                               tol=1e-8):
    """Piecewise-constant driving function approximating a field with
    support in [0, M].

    The support is split into m bins, each represented by the mass centroid
    of the field atoms it contains (so a field that already is a slit comes
    back unchanged); time is split into m slabs, and within each slab the
    driving function dwells on each bin representative for a duration
    proportional to the bin's field mass at the slab's right endpoint.
    """
    M = field.support_bound
    TT = float(horizon)
    edges = np.linspace(0.0, M, m + 1)
    breaks = [0.0]
    values = []
    slab = TT / m
    for j in range(1, m + 1):
        tj = j * TT / m
        p, w = field.atoms(min(tj, field.horizon))
        if np.any(p < -1e-9) or np.any(p > M + 1e-9):
            raise BoundError("field support leaves [0, M]")
        total = w.sum()
        lam = np.zeros(m)
        centroid = np.zeros(m)
        idx = np.clip(np.searchsorted(edges, p, side="right") - 1, 0, m - 1)
        for i, pi, wi in zip(idx, p, w):
            lam[i] += wi / total
            centroid[i] += wi / total * pi
        for k in range(m):
            if lam[k] <= 1e-12:
                continue
            breaks.append(breaks[-1] + slab * lam[k])
            values.append(centroid[k] / lam[k])
    breaks[-1] = TT  # guard float drift
    driving = DrivingFunction.piecewise(breaks, values)

    if probe_points is None:
        probe_points = (2j, 1 + 2j, -1 + 3j, 0.5 + 1.5j, M / 2 + 2.5j)
    probe_points = tuple(complex(p) for p in probe_points)
    zs = np.array(probe_points)
    target = evaluate_chain(field, 0.0, TT, zs, tol)
    got = slit_chain(driving, TT, zs, tol)
    dev = float(np.abs(target - got).max())
    return SlitApproximation(driving, dev, probe_points)


# ---------------------------------------------------------------------------
# nonlinear resolvents
# ---------------------------------------------------------------------------

def nonlinear_resolvent(gen, t, w, tol=1e-12, max_steps=200):
    """Solve w = z - t*G(z) for z in H by damped Newton iteration.

    ``gen`` is a Herglotz generator (maps H into H union R).  The iteration
    starts at z = w, halves its step until the residual decreases, and
    polishes to |z - t G(z) - w| <= tol.
    """
    if t < 0:
        raise LoewnerError("resolvent time must be >= 0")
    w = complex(w)
    if w.imag <= 0:
        raise LoewnerError("resolvent requires Im(w) > 0")
    if t == 0:
        return w

    def phi(z):
        return z - t * np.asarray(gen(np.array([z])))[0] - w

    z = w
    r = phi(z)
    for _ in range(max_steps):
        if abs(r) <= tol:
            return z
        h = 1e-7 * max(1.0, abs(z))
        dphi = (phi(z + h) - phi(z - h)) / (2 * h)
        if dphi == 0:
            raise NoConvergence("vanishing derivative in Newton step")
        step = r / dphi
        lam = 1.0
        for _ in range(60):
            znew = z - lam * step
            if znew.imag > 0:
                rnew = phi(znew)
                if abs(rnew) < abs(r):
                    z, r = znew, rnew
                    break
            lam *= 0.5
        else:
            raise NoConvergence("damping failed to reduce the residual")
    if abs(r) <= tol:
        return z
    raise NoConvergence(f"residual {abs(r):.2e} after {max_steps} steps")


def resolvent_fmap(gen, t, tol=1e-12):
    """J_t packaged as a vectorized HerglotzMap (F-transform of a freely
    infinitely divisible law when gen is time-independent).

    Runs plain Newton on the whole array and falls back to the damped
    scalar iteration on entries that fail to converge.
    """
    def ev(w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        if t == 0:
            return w.copy()
        z = w.copy()
        for _ in range(60):
            r = z - t * np.asarray(gen(z)) - w
            done = np.abs(r) <= tol
            if done.all():
                break
            h = 1e-7 * np.maximum(1.0, np.abs(z))
            dphi = ((z + h) - t * np.asarray(gen(z + h))
                    - (z - h) + t * np.asarray(gen(z - h))) / (2 * h)
            step = np.where(done, 0.0, r / np.where(dphi == 0, 1.0, dphi))
            znew = z - step
            # keep iterates in H; bad entries get the damped fallback later
            z = np.where(znew.imag > 0, znew, z)
        bad = np.abs(z - t * np.asarray(gen(z)) - w) > tol
        for i in np.nonzero(bad)[0]:
            z[i] = nonlinear_resolvent(gen, t, w[i], tol)
        return z

    return HerglotzMap(ev, "f")


# ---------------------------------------------------------------------------
# SLE driving
# ---------------------------------------------------------------------------

def sle_driving(kappa, horizon, dt, seed):
    """Sampled driving function with independent N(0, (kappa/2) dt)
    increments, U(0) = 0; deterministic per seed."""
    if kappa < 0 or dt <= 0:
        raise LoewnerError("need kappa >= 0 and dt > 0")
    steps = max(1, int(round(horizon / dt)))
    times = np.linspace(0.0, steps * dt, steps + 1)
    rng = np.random.default_rng(seed)
    incr = rng.standard_normal(steps) * math.sqrt(kappa / 2 * dt)
    vals = np.concatenate([[0.0], np.cumsum(incr)])
    return DrivingFunction.sampled(times, vals)
