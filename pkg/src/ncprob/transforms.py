"""Holomorphic transforms of measures and moment/cumulant calculus.

The Cauchy transform G(z) = integral of 1/(z - x), its reciprocal F = 1/G,
the difference B = z - F, Stieltjes-Perron inversion with Richardson
extrapolation in the regularization parameter, Nevanlinna data extraction,
and the bijections between moments and free/Boolean/classical cumulants.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .measures import AtomicMeasure, GridMeasure, MomentSequence
from .series import LaurentSeries


class TransformError(ValueError):
    pass


class NormalizationError(TransformError):
    """iy*G(iy) does not tend to 1: not a Cauchy transform of a probability."""


class MassError(TransformError):
    """Recovered mass too far from 1 to renormalize honestly."""


class NotHerglotz(TransformError):
    """Map leaves the closed upper half-plane at a probe point."""


class AtomCollision(TransformError):
    """Evaluation point coincides with an atom."""


DEFAULT_EPS_LADDER = (1e-2, 5e-3, 2.5e-3)
ATOM_THRESHOLD = 1e-4


def sqrt_upper(zeta):
    """Branch of the square root mapping C minus [0, inf) into H."""
    return 1j * np.sqrt(-np.asarray(zeta, dtype=complex))


# ---------------------------------------------------------------------------
# transforms of measures
# ---------------------------------------------------------------------------

def _require_upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise TransformError("evaluation requires Im(z) > 0")
    return z


def cauchy(measure, z):
    """Cauchy transform of an atomic or gridded measure at points of H.

    Atom sums are exact; the density part integrates the piecewise-linear
    interpolant in closed form, so accuracy is O(h^2) uniformly in Im(z).
    """
    z = _require_upper(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.zeros_like(z)
    if isinstance(measure, AtomicMeasure):
        atoms = measure.atoms
        grid = dens = None
    elif isinstance(measure, GridMeasure):
        atoms = measure.atoms
        grid, dens = measure.grid, measure.density
    else:
        raise TransformError(f"cannot transform {type(measure).__name__}")
    for a, w in atoms:
        out += float(w) / (z - float(a))
    if grid is not None:
        out += _cauchy_linear_density(grid, dens, z)
    return out[0] if scalar else out


def _cauchy_linear_density(grid, dens, z, chunk=128):
    x0, x1 = grid[:-1], grid[1:]
    h = x1 - x0
    slope = (dens[1:] - dens[:-1]) / h
    intercept = dens[:-1] - slope * x0
    out = np.empty_like(z)
    for start in range(0, z.size, chunk):
        zz = z[start:start + chunk, None]
        w = h / (zz - x1)
        # log((z-x0)/(z-x1)) = log1p(w); series branch avoids cancellation
        small = np.abs(w) < 1e-2
        ws = np.where(small, w, 0.0)
        series = ws * (1 + ws * (-1 / 2 + ws * (1 / 3 + ws * (
            -1 / 4 + ws * (1 / 5 + ws * (-1 / 6))))))
        logs = np.where(small, series, np.log(np.where(small, 1.0, 1.0 + w)))
        vals = (intercept + slope * zz) * logs - slope * h
        out[start:start + chunk] = vals.sum(axis=1)
    return out


def f_transform(measure, z):
    """F = 1/G; maps H into H with Im F(z) >= Im z."""
    g = cauchy(measure, z)
    if np.any(np.abs(g) < 1e-300):
        raise TransformError("degenerate Cauchy transform value")
    return 1.0 / g


def b_transform(measure, z):
    """B = z - F; maps H into the closed lower half-plane."""
    return np.asarray(z, dtype=complex) - f_transform(measure, z)


@dataclass(frozen=True)
class HerglotzMap:
    """A numerically evaluable holomorphic map on the upper half-plane.

    ``kind`` is one of 'cauchy', 'f', 'b', 'generator', 'generic' and only
    records what normalization the map is supposed to satisfy.  The
    evaluator must accept complex numpy arrays.
    """

    evaluator: object
    kind: str = "generic"

    def __call__(self, z):
        return self.evaluator(np.asarray(z, dtype=complex))

    @classmethod
    def from_measure(cls, measure, kind="cauchy"):
        if kind == "cauchy":
            return cls(lambda z: cauchy(measure, z), "cauchy")
        if kind == "f":
            return cls(lambda z: f_transform(measure, z), "f")
        if kind == "b":
            return cls(lambda z: b_transform(measure, z), "b")
        raise TransformError(f"unknown transform kind {kind!r}")

    def reciprocal(self, kind="generic"):
        return HerglotzMap(lambda z: 1.0 / self.evaluator(z), kind)


# ---------------------------------------------------------------------------
# extrapolation helpers
# ---------------------------------------------------------------------------

def extrapolate_to_zero(xs, values):
    """Polynomial (Neville) extrapolation of values(x) to x = 0.

    ``values`` may be a list of numbers or of equal-shaped arrays.
    """
    xs = [float(x) for x in xs]
    tab = [np.asarray(v, dtype=float) if np.ndim(v) else v for v in values]
    n = len(tab)
    for m in range(1, n):
        new = []
        for i in range(n - m):
            xi, xim = xs[i], xs[i + m]
            new.append((xi * tab[i + 1] - xim * tab[i]) / (xi - xim))
        tab = new
    return tab[0]


# ---------------------------------------------------------------------------
# Stieltjes-Perron inversion
# ---------------------------------------------------------------------------

def check_cauchy_normalization(g, y=1e6, tol=1e-3):
    val = 1j * y * np.asarray(g(np.array([1j * y])))[0]
    if abs(val - 1.0) > tol:
        raise NormalizationError(
            f"iy*G(iy) = {val:.6g} at y={y:.0e}; not a probability Cauchy transform"
        )


def atom_mass(g, position, ladder=DEFAULT_EPS_LADDER):
    """Extrapolated iy*G(a+iy) as y -> 0."""
    ys = np.array([position + 1j * y for y in ladder])
    vals = np.asarray(g(ys))
    masses = [(1j * y * v).real for y, v in zip(ladder, vals)]
    return float(extrapolate_to_zero(ladder, masses))


def _spike_candidates(grid, density, eps_min, limit=8):
    """Positions of narrow density spikes that look like smeared atoms."""
    h = float(np.median(np.diff(grid)))
    w = max(2, int(math.ceil(3 * eps_min / h)))
    n = density.size
    out = []
    order = np.argsort(density)[::-1]
    for i in order[: 4 * limit]:
        if density[i] < 1e-3:
            break
        left = density[max(i - w, 0)]
        right = density[min(i + w, n - 1)]
        if density[i] > 4 * max(left, right, 1e-12):
            if all(abs(grid[i] - x) > w * h for x in out):
                out.append(float(grid[i]))
        if len(out) >= limit:
            break
    return out


def _refine_pole(g, a, halfwidth, eps=1e-7, iters=50):
    """Sharpen an atom position: Re G(x + i*eps) changes sign at a pole."""
    lo, hi = a - halfwidth, a + halfwidth
    flo = np.asarray(g(np.array([lo + 1j * eps])))[0].real
    fhi = np.asarray(g(np.array([hi + 1j * eps])))[0].real
    if flo * fhi >= 0:
        return a
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = np.asarray(g(np.array([mid + 1j * eps])))[0].real
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _vetted_atom(g, a, eps_ladder):
    m = atom_mass(g, a, eps_ladder)
    if m < ATOM_THRESHOLD:
        return None
    # branch-point veto: a genuine atom keeps its mass at much smaller
    # regularization, while square-root edges decay
    probe = atom_mass(g, a, (1e-6, 3e-7, 1e-7))
    if probe < 0.5 * m:
        return None
    return float(a), float(m)


def stieltjes_invert(g, grid, atom_candidates=(), eps_ladder=DEFAULT_EPS_LADDER,
                     refine_passes=2, auto_atoms=True):
    """Recover a measure from its Cauchy transform.

    Density via -Im G(x + i*eps)/pi extrapolated over the eps ladder; atom
    masses via the iy*G(a+iy) limit at the supplied candidates plus any
    narrow spikes the first density pass exposes.  Cells with steep density
    jumps (square-root support edges) are locally refined so the trapezoid
    mass stays accurate.  The result is renormalized to unit mass if the
    recovered mass lies within 2 percent of 1.
    """
    if isinstance(g, (AtomicMeasure, GridMeasure)):
        g = HerglotzMap.from_measure(g, "cauchy")
    grid = np.asarray(grid, dtype=float)
    check_cauchy_normalization(g)

    atoms = []
    for a in atom_candidates:
        hit = _vetted_atom(g, a, eps_ladder)
        if hit:
            atoms.append(hit)
    atoms.sort()

    def density_at(xs):
        layers = []
        for eps in eps_ladder:
            vals = np.asarray(g(xs + 1j * eps))
            for a, w in atoms:
                vals = vals - w / (xs + 1j * eps - a)
            layers.append(-vals.imag / math.pi)
        return extrapolate_to_zero(eps_ladder, layers)

    density = density_at(grid)
    if auto_atoms:
        eps_min = min(eps_ladder)
        h = float(np.median(np.diff(grid)))
        found = False
        for a in _spike_candidates(grid, density, eps_min):
            if any(abs(a - x) <= 5 * max(eps_min, h) for x, _ in atoms):
                continue
            a = _refine_pole(g, a, halfwidth=3 * max(eps_min, h))
            hit = _vetted_atom(g, a, eps_ladder)
            if hit:
                atoms.append(hit)
                found = True
        if found:
            atoms.sort()
            density = density_at(grid)

    for _ in range(refine_passes):
        scale = max(np.abs(density).max(), 1e-12)
        jump = np.abs(np.diff(density))
        flagged = np.nonzero(jump > 0.2 * scale)[0]
        if flagged.size == 0:
            break
        cells = set()
        for i in flagged:  # pad so the smeared edge lobes get resolved too
            cells.update(range(max(i - 2, 0), min(i + 3, grid.size - 1)))
        extra = np.concatenate([
            np.linspace(grid[i], grid[i + 1], 9)[1:-1] for i in sorted(cells)
        ])
        grid = np.concatenate([grid, extra])
        density = np.concatenate([density, density_at(extra)])
        order = np.argsort(grid)
        grid, density = grid[order], density[order]

    # renormalize on the signed mass (small negative extrapolation lobes
    # legitimately cancel smeared edge surplus), then clip for output
    mass = float(np.trapezoid(density, grid)) + sum(w for _, w in atoms)
    if not 0.98 <= mass <= 1.02:
        raise MassError(f"recovered mass {mass:.4f} outside [0.98, 1.02]")
    density = np.clip(density / mass, 0.0, None)
    atoms = [(a, w / mass) for a, w in atoms]
    atom_total = sum(w for _, w in atoms)
    dens_mass = float(np.trapezoid(density, grid))
    if atom_total >= 1.0 or dens_mass <= 1e-12:
        # purely atomic recovery; absorb clip residue into the atoms
        density = np.zeros_like(density)
        atoms = [(a, w / atom_total) for a, w in atoms]
    else:
        density *= (1.0 - atom_total) / dens_mass
    return GridMeasure(grid, density, tuple(atoms))


def scan_real_zeros(f, grid, eps=1e-6, refine=40):
    """Real-axis zero candidates of a holomorphic map from a sign scan.

    Looks for sign changes of Re f(x + i*eps) along the grid and refines by
    bisection; used to locate poles of 1/F, i.e. atom candidates.
    """
    vals = np.asarray(f(grid + 1j * eps))
    re = vals.real
    roots = []
    sign = np.sign(re)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        flo = re[i]
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            fm = np.asarray(f(np.array([mid + 1j * eps])))[0].real
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
        roots.append(0.5 * (lo + hi))
    return roots


def measure_from_ftransform(f, grid, atom_candidates=None,
                            eps_ladder=DEFAULT_EPS_LADDER):
    """Stieltjes inversion of 1/F for an F-transform evaluator."""
    if not isinstance(f, HerglotzMap):
        f = HerglotzMap(f, "f")
    if atom_candidates is None:
        atom_candidates = scan_real_zeros(f, np.asarray(grid, dtype=float))
    return stieltjes_invert(f.reciprocal("cauchy"), grid, atom_candidates,
                            eps_ladder)


# ---------------------------------------------------------------------------
# Nevanlinna data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NevanlinnaData:
    a: float
    b: float

    def __post_init__(self):
        if self.b < -1e-12:
            raise TransformError("Nevanlinna slope b must be nonnegative")


def nevanlinna_extract(f, probe_ys=(1e3, 1e4, 1e5, 1e6)):
    """Extract (a, b): a = Re f(i), b = lim f(iy)/(iy), Richardson in 1/y."""
    check_zs = np.array([1j, 1 + 1j, -2 + 0.5j, 3j])
    vals = np.asarray(f(check_zs))
    if np.any(vals.imag < -1e-9):
        raise NotHerglotz("Im f < 0 at a probe point")
    ratios = []
    for y in probe_ys:
        v = np.asarray(f(np.array([1j * y])))[0]
        ratios.append((v / (1j * y)).real)
    b = float(extrapolate_to_zero([1.0 / y for y in probe_ys], ratios))
    a = float(np.asarray(f(np.array([1j])))[0].real)
    return NevanlinnaData(a=a, b=b)


# ---------------------------------------------------------------------------
# Hilbert transform
# ---------------------------------------------------------------------------

def hilbert_transform(measure, x, eps=1e-2):
    """(1/pi) Re G(x + i*eps) extrapolated to eps -> 0.

    Agrees with the principal-value integral for continuous densities.
    """
    if isinstance(measure, (AtomicMeasure, GridMeasure)):
        for a, _ in measure.atoms:
            if abs(x - a) < 1e-9:
                raise AtomCollision(f"x = {x} collides with atom at {a}")
        g = HerglotzMap.from_measure(measure, "cauchy")
    else:
        g = measure
    ladder = (eps, eps / 2, eps / 4)
    vals = [np.asarray(g(np.array([x + 1j * e])))[0].real / math.pi
            for e in ladder]
    return float(extrapolate_to_zero(ladder, vals))


# ---------------------------------------------------------------------------
# moment <-> cumulant calculus
# ---------------------------------------------------------------------------

def _values(m):
    if isinstance(m, MomentSequence):
        return list(m.values)
    return list(m)


def _poly_mul(p, q, order):
    out = [0] * (order + 1)
    for i, a in enumerate(p):
        if a == 0 or i > order:
            continue
        for j, b in enumerate(q):
            if i + j > order:
                break
            out[i + j] = out[i + j] + a * b
    return out


def moments_to_free_cumulants(m):
    """Free cumulants (kappa_1..kappa_K) from raw moments.

    Inverts m_n = sum_k kappa_k [z^(n-k)] M(z)^k with M = 1 + m_1 z + ...
    """
    mom = _values(m)
    n = len(mom)
    mpoly = [1] + mom
    powers = [[1]]  # M^0
    for _ in range(n):
        powers.append(_poly_mul(powers[-1], mpoly, n))
    kappa = []
    for k in range(1, n + 1):
        acc = mom[k - 1]
        for j in range(1, k):
            acc = acc - kappa[j - 1] * powers[j][k - j]
        kappa.append(acc)
    return kappa


def free_cumulants_to_moments(kappa):
    kappa = _values(kappa)
    n = len(kappa)
    mom = []
    for k in range(1, n + 1):
        mpoly = [1] + mom
        powers = [[1]]
        for _ in range(k):
            powers.append(_poly_mul(powers[-1], mpoly, k))
        acc = 0
        for j in range(1, k + 1):
            acc = acc + kappa[j - 1] * powers[j][k - j]
        mom.append(acc)
    return MomentSequence(tuple(mom))


def moments_to_boolean_cumulants(m):
    """Boolean cumulants: the 1/z^(k-1) coefficients of B = z - 1/G."""
    mom = _values(m)
    beta = []
    for k in range(1, len(mom) + 1):
        acc = mom[k - 1]
        for j in range(1, k):
            acc = acc - beta[j - 1] * ([1] + mom)[k - j]
        beta.append(acc)
    return beta


def boolean_cumulants_to_moments(beta):
    beta = _values(beta)
    mom = []
    for k in range(1, len(beta) + 1):
        acc = beta[k - 1]
        for j in range(1, k):
            acc = acc + beta[j - 1] * mom[k - j - 1]
        mom.append(acc)
    return MomentSequence(tuple(mom))


def moments_to_classical_cumulants(m):
    mom = _values(m)
    cum = []
    for k in range(1, len(mom) + 1):
        acc = mom[k - 1]
        for j in range(1, k):
            acc = acc - math.comb(k - 1, j - 1) * cum[j - 1] * mom[k - j - 1]
        cum.append(acc)
    return cum


def classical_cumulants_to_moments(cum):
    cum = _values(cum)
    mom = []
    for k in range(1, len(cum) + 1):
        acc = cum[k - 1]
        for j in range(1, k):
            acc = acc + math.comb(k - 1, j - 1) * cum[j - 1] * mom[k - j - 1]
        mom.append(acc)
    return MomentSequence(tuple(mom))


# ---------------------------------------------------------------------------
# series-level transforms
# ---------------------------------------------------------------------------

def cauchy_series(m):
    """Truncated Laurent series of G from moments."""
    mom = _values(m)
    return LaurentSeries.from_moments(mom)


def f_series(m):
    """Truncated Laurent series of F = 1/G from moments.

    With K input moments the coefficients of z, z^0, ..., z^(-(K-1)) are
    exact; rational inputs stay rational.
    """
    return cauchy_series(m).reciprocal()


def b_series(m):
    return LaurentSeries.identity(-f_series(m).valid) - f_series(m)


def r_series(m):
    """Truncated R-transform polynomial kappa_1 + kappa_2 z + ... ; its
    coefficients are the free cumulants, and free convolution adds it."""
    kappa = moments_to_free_cumulants(m)
    return LaurentSeries(len(kappa) - 1, list(reversed(kappa)), 0)


def series_moments(f, order):
    """Moments encoded by an F-type series (via 1/F)."""
    return MomentSequence(f.reciprocal().moments(order))


def free_meixner_f_series(n, u, order):
    """Exact series of sqrt((z-u)^2 - 4n) + u down to z^(-order)."""
    pol = LaurentSeries(2, [1, -2 * Fraction(u), Fraction(u) ** 2 - 4 * n]
                        + [0] * order, -order)
    return pol.sqrt() + LaurentSeries.constant(Fraction(u), order)


# ---------------------------------------------------------------------------
# free Meixner transforms and realization
# ---------------------------------------------------------------------------

def free_meixner_fmap(a, c, u):
    """F-transform of the free Meixner law m_{a,c,u}.

    Continued-fraction tail w solves c*w^2 - (z-u)*w + 1 = 0 with w ~ 1/z;
    then F(z) = z - a*w(z).  For a = 2c this is sqrt((z-u)^2 - 4c) + u.
    """
    def ev(z):
        z = np.asarray(z, dtype=complex)
        s = sqrt_upper((z - u) ** 2 - 4 * c)
        w = ((z - u) - s) / (2 * c)
        return z - a * w

    return HerglotzMap(ev, "f")


def _free_meixner_atom_candidates(a, c, u):
    # real solutions of z - a*w(z) = 0 via the quadratic for w = z/a
    aa = Fraction(c - a, a * a) if all(isinstance(t, int) for t in (a, c)) \
        else (c - a) / a**2
    bb = Fraction(u, a) if isinstance(u, int) else u / a
    disc = float(bb) ** 2 - 4 * float(aa)
    if disc < 0 or aa == 0:
        return []
    r = math.sqrt(disc)
    return [(-float(bb) + s * r) / (2 * float(aa)) for s in (1, -1)]


def free_meixner_measure(a, c, u, resolution=4096):
    edge = 2 * math.sqrt(c)
    lo, hi = u - edge, u + edge
    margin = 0.05 * (hi - lo)
    grid = np.linspace(lo - margin, hi + margin, resolution)
    fmap = free_meixner_fmap(a, c, u)
    cands = _free_meixner_atom_candidates(a, c, u)
    return measure_from_ftransform(fmap, grid, atom_candidates=cands,
                                   eps_ladder=(1e-4, 5e-5, 2.5e-5))


# ---------------------------------------------------------------------------
# Gaussian quadrature realization of a moment sequence
# ---------------------------------------------------------------------------

def jacobi_recurrence(m):
    """Monic three-term recurrence coefficients from raw moments.

    Chebyshev's algorithm in exact arithmetic when the moments are exact.
    Returns (alpha, beta) with len(alpha) = n for n-point quadrature, where
    2n - 1 <= order of the input.  Stops early if the Hankel rank drops
    (finitely supported measure).
    """
    mom = [_to_exact(v) for v in _values(m)]
    full = [Fraction(1)] + mom
    n = (len(full)) // 2  # nodes supported by available moments
    sigma_prev = [Fraction(0)] * (2 * n)
    sigma = full[: 2 * n]
    alpha = [sigma[1] / sigma[0]]
    beta = [sigma[0]]
    for k in range(1, n):
        new = [Fraction(0)] * (2 * n)
        for l in range(k, 2 * n - k):
            new[l] = (sigma[l + 1] - alpha[k - 1] * sigma[l]
                      - beta[k - 1] * sigma_prev[l])
        if new[k] == 0:
            break
        alpha.append(new[k + 1] / new[k] - sigma[k] / sigma[k - 1])
        beta.append(new[k] / sigma[k - 1])
        if beta[-1] <= 0:
            alpha.pop()
            beta.pop()
            break
        sigma_prev, sigma = sigma, new
    return alpha, beta


def _to_exact(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return Fraction(v).limit_denominator(10**15) if isinstance(v, float) \
        else Fraction(v)


def moment_quadrature(m):
    """Atomic measure matching the given moments (Golub-Welsch nodes).

    With n recurrence coefficients the atoms reproduce m_1..m_{2n-1}
    exactly (up to float rounding in the eigensolve).
    """
    alpha, beta = jacobi_recurrence(m)
    n = len(alpha)
    d = np.array([float(a) for a in alpha])
    e = np.sqrt(np.array([float(b) for b in beta[1:]]))
    jac = np.diag(d)
    if n > 1:
        jac += np.diag(e, 1) + np.diag(e, -1)
    evals, evecs = np.linalg.eigh(jac)
    weights = evecs[0, :] ** 2
    pairs = [(float(x), float(w)) for x, w in zip(evals, weights) if w > 1e-15]
    return AtomicMeasure.from_pairs(pairs, merge_tol=1e-12, renormalize=True)
