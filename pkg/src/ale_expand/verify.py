"""Kelvin transform of expansions and floating-point checks of truncated metrics.

The numeric side compiles expansions into numpy arrays once and evaluates
them at sample points; derivatives are taken symbolically before compiling,
so only the final contraction happens in floating point.
"""
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .metric import MetricExpansion
from .poly import Poly, norm_sq_power
from .terms import Expansion, exp_diff, exp_laplacian

NOISE_FLOOR = 1e-300
ZERO_PROXY = "identically-zero proxy"


class KelvinError(ValueError):
    pass


class NotPositiveDefiniteError(ValueError):
    pass


# -- Kelvin transform -------------------------------------------------------------

def _log_inventory(a):
    return sorted({(t.sigma, t.logpow) for t in a.terms if t.logpow}, reverse=True)


def kelvin_expansion(a):
    """K[r^s G_m] = r^(2-n-s) G_m, termwise; log terms are rejected."""
    logs = _log_inventory(a)
    if logs:
        raise KelvinError(f"log terms have no Kelvin image here: {logs}")
    n = a.dim
    return Expansion._from_dict(n, {(2 - n - s, i, m): dict(c) for (s, i, m), c in a._t.items()})


@dataclass(frozen=True)
class NotPolynomial:
    """Terms r^s G_m whose Kelvin image r^(2-n-s-m) h_m is not a polynomial."""

    offending: tuple

    def __bool__(self):
        return False


def _check_kelvin_dim(n):
    if n % 2:
        raise KelvinError(f"odd dimension n={n}: the Kelvin image is not expected to be polynomial")
    if n <= 4:
        raise KelvinError(f"dimension n={n} is not covered: only even n > 4")


def kelvin_polynomial_check(a, n):
    """Kelvin image of ``a`` as an exact Poly, or NotPolynomial listing bad terms.

    ``a`` is the expansion at infinity; each term r^s G_m maps to
    |x|^(2-n-s-m) h_m, a polynomial exactly when that exponent is even and
    nonnegative.
    """
    _check_kelvin_dim(n)
    if a.dim != n:
        raise KelvinError(f"expansion has dimension {a.dim}, expected {n}")
    logs = _log_inventory(a)
    if logs:
        raise KelvinError(f"log terms present: {logs}")
    bad = []
    out = Poly.zero(n)
    for t in a.terms:
        power = 2 - n - t.sigma - t.m
        if power < 0 or power % 2:
            bad.append((t.sigma, t.m))
            continue
        out = out + norm_sq_power(n, power // 2) * t.harm.scale(t.coeff)
    if bad:
        return NotPolynomial(tuple(bad))
    return out


@dataclass(frozen=True)
class KelvinImage:
    """Per-entry Kelvin polynomials (i <= j) or the offending terms."""

    n: int
    entries: dict

    @property
    def is_polynomial(self):
        return all(isinstance(v, Poly) for v in self.entries.values())

    def vanishes_at_origin(self):
        zero = (0,) * self.n
        return self.is_polynomial and all(p.coefficient(zero) == 0 for p in self.entries.values())

    def degree(self):
        return max((p.degree for p in self.entries.values() if p), default=None)

    def to_json(self):
        if self.is_polynomial:
            return {"n": self.n, "polynomial": True,
                    "entries": [{"i": i, "j": j, "poly": p.to_json()} for (i, j), p in self.entries.items()]}
        return {"n": self.n, "polynomial": False,
                "offending": [{"i": i, "j": j, "terms": [{"sigma": s, "m": m} for s, m in v.offending]}
                              for (i, j), v in self.entries.items() if isinstance(v, NotPolynomial)]}


def kelvin_metric(metric, n=None):
    n = metric.dim if n is None else n
    logs = sorted({(t.sigma, t.logpow) for _, t in metric.all_terms() if t.logpow}, reverse=True)
    if logs:
        raise KelvinError(f"log terms present (sigma, logpow): {logs}")
    _check_kelvin_dim(n)
    return KelvinImage(n, {(i, j): kelvin_polynomial_check(metric[i, j], n)
                           for i in range(n) for j in range(i, n)})


# -- numeric evaluation ------------------------------------------------------------

class CompiledExpansion:
    """Vectorized float evaluator for one expansion."""

    __slots__ = ("exps", "coeffs", "rpow", "logpow")

    def __init__(self, a):
        exps, coeffs, rpow, logpow = [], [], [], []
        for t in a.terms:
            for e, c in t.harm.items():
                exps.append(e)
                coeffs.append(float(c * t.coeff))
                rpow.append(t.sigma - t.m)
                logpow.append(t.logpow)
        self.exps = np.array(exps, dtype=float).reshape(len(exps), a.dim)
        self.coeffs = np.array(coeffs)
        self.rpow = np.array(rpow, dtype=float)
        self.logpow = np.array(logpow, dtype=float)

    def __call__(self, x):
        if not len(self.coeffs):
            return 0.0
        x = np.asarray(x, dtype=float)
        r = math.sqrt(float(x @ x))
        mono = np.prod(x ** self.exps, axis=1)
        return float(np.sum(self.coeffs * r ** self.rpow * math.log(r) ** self.logpow * mono))


def numeric_eval(a, x):
    """sum c r^s (log r)^i h_m(x) / r^m in double precision."""
    if len(x) != a.dim:
        raise ValueError(f"point has {len(x)} coordinates, expected {a.dim}")
    return CompiledExpansion(a)(x)


class NumericMetric:
    """U, its symbolic first and second derivatives and Laplacian, compiled once."""

    def __init__(self, metric):
        n = self.n = metric.dim
        u = metric.matrix()
        self.flat = not any(True for _ in metric.all_terms())
        du = [[[exp_diff(u[i][j], p) for j in range(n)] for i in range(n)] for p in range(n)]
        self.u = [[CompiledExpansion(u[i][j]) for j in range(n)] for i in range(n)]
        self.du = [[[CompiledExpansion(du[p][i][j]) for j in range(n)] for i in range(n)] for p in range(n)]
        self.ddu = {}
        for k in range(n):
            for l in range(k, n):
                self.ddu[k, l] = [[CompiledExpansion(exp_diff(du[k][i][j], l)) for j in range(n)]
                                  for i in range(n)]
        self.lap = [[CompiledExpansion(exp_laplacian(u[i][j])) for j in range(n)] for i in range(n)]

    def _fill(self, table, x):
        n = self.n
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = table[i][j](x)
        return out

    def values(self, x):
        return self._fill(self.u, x)

    def first(self, x):
        """d[p, i, j] = d_p U_ij at x."""
        return np.stack([self._fill(self.du[p], x) for p in range(self.n)])

    def second(self, x):
        """dd[k, l, i, j] = d_k d_l U_ij at x."""
        n = self.n
        out = np.empty((n, n, n, n))
        for (k, l), table in self.ddu.items():
            out[k, l] = out[l, k] = self._fill(table, x)
        return out

    def proxy_matrix(self, x):
        """g^{kl} d_k d_l g_ij - Q_ij at x (equal to -2 Ric_ij in harmonic coordinates)."""
        n = self.n
        x = np.asarray(x, dtype=float)
        if self.flat:
            return np.zeros((n, n))
        g = np.eye(n) + self.values(x)
        if np.linalg.eigvalsh(g).min() <= 0:
            raise NotPositiveDefiniteError(f"metric is not positive definite at |x|={np.linalg.norm(x):.3g}")
        gi = np.linalg.inv(g)
        dg = self.first(x)
        dgi = -np.einsum("ab,pbc,cd->pad", gi, dg, gi)
        # the flat part of g^{kl} d_k d_l is the Laplacian, taken symbolically
        box = self._fill(self.lap, x) + np.einsum("kl,klij->ij", gi - np.eye(n), self.second(x))
        gamma = 0.5 * np.einsum("km,rpm->kpr", gi, dg) + 0.5 * np.einsum("km,pmr->kpr", gi, dg) \
            - 0.5 * np.einsum("km,mpr->kpr", gi, dg)
        q1 = -np.einsum("pq,lj,pik,qkl->ij", gi, g, dg, dgi)
        q2 = -2 * np.einsum("ik,lj,pq,rs,kpr,lqs->ij", g, g, gi, gi, gamma, gamma, optimize=True)
        return box - (q1 + q2)


def numeric_ricci_proxy(metric, x, fd_ratio=None):
    """max_ij |g^{kl} d_k d_l g_ij - Q_ij| at x.

    With ``fd_ratio`` set, the symbolic derivatives are first cross-checked
    against central differences with step h = fd_ratio * |x|.
    """
    num = metric if isinstance(metric, NumericMetric) else NumericMetric(metric)
    if fd_ratio is not None:
        err = fd_crosscheck(num, x, fd_ratio)
        if err > fd_tolerance(x, fd_ratio):
            raise AssertionError(f"finite differences disagree with symbolic derivatives: {err:.3g}")
    return float(np.abs(num.proxy_matrix(x)).max())


def fd_tolerance(x, fd_ratio):
    """Allowed relative error 10 h^2 for the step h = fd_ratio * |x|."""
    h = fd_ratio * float(np.linalg.norm(x))
    return 10 * h * h


def fd_crosscheck(metric, x, fd_ratio):
    """Normwise relative error of central differences against the symbolic derivatives.

    Returns the worse of the first- and second-derivative errors, each relative
    to the largest symbolic entry; central differences are accurate to
    O(fd_ratio^2) in this relative sense.
    """
    num = metric if isinstance(metric, NumericMetric) else NumericMetric(metric)
    x = np.asarray(x, dtype=float)
    n = num.n
    h = fd_ratio * float(np.linalg.norm(x))
    steps = np.eye(n) * h
    d1 = np.stack([(num.values(x + steps[p]) - num.values(x - steps[p])) / (2 * h) for p in range(n)])
    dd = np.empty((n, n, n, n))
    for k in range(n):
        dplus, dminus = num.first(x + steps[k]), num.first(x - steps[k])
        for l in range(n):
            dd[k, l] = (dplus[l] - dminus[l]) / (2 * h)
    errs = []
    for fd, exact in ((d1, num.first(x)), (dd, num.second(x))):
        scale = np.abs(exact).max()
        if scale:
            errs.append(float(np.abs(fd - exact).max() / scale))
    return max(errs, default=0.0)


# -- decay slopes ------------------------------------------------------------------

def default_directions(n):
    """Coordinate axes and the all-ones diagonal."""
    axes = [tuple(int(a == b) for b in range(n)) for a in range(n)]
    return axes + [(1,) * n]


@dataclass(frozen=True)
class SamplePlan:
    radii: tuple = (10.0, 20.0, 40.0, 80.0)
    directions: tuple = None
    fd_ratio: float = 1e-3

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if len(radii) < 3:
            raise ValueError("a sample plan needs at least 3 radii")
        if any(r <= 0 for r in radii) or any(a >= b for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", radii)
        if self.directions is not None:
            dirs = tuple(tuple(Fraction(c) for c in d) for d in self.directions)
            if any(not any(d) for d in dirs):
                raise ValueError("directions must be nonzero")
            object.__setattr__(self, "directions", dirs)
        if not self.fd_ratio > 0:
            raise ValueError("fd_ratio must be positive")

    def unit_directions(self, n):
        dirs = self.directions if self.directions is not None else default_directions(n)
        out = []
        for d in dirs:
            if len(d) != n:
                raise ValueError(f"direction {d} has the wrong dimension")
            v = np.array([float(c) for c in d])
            out.append(v / np.linalg.norm(v))
        return out

    def points(self, n):
        """(r, direction index, point) for every sample."""
        return [(r, k, r * d) for k, d in enumerate(self.unit_directions(n)) for r in self.radii]


@dataclass(frozen=True)
class SlopeResult:
    """Fitted exponent, or ``None`` with status ZERO_PROXY when nothing is above the floor."""

    slope: float
    per_direction: tuple
    status: str = "ok"

    def within(self, bound):
        return self.slope is None or self.slope <= bound


def fit_slope(radii, values):
    """Least-squares slope of log|f| against log r."""
    lr = np.log(np.asarray(radii, dtype=float))
    lv = np.log(np.abs(np.asarray(values, dtype=float)))
    return float(np.polyfit(lr, lv, 1)[0])


def _slope_over(radii, series):
    per = []
    for vals in series:
        if all(abs(v) < NOISE_FLOOR for v in vals):
            per.append(None)
        elif any(abs(v) < NOISE_FLOOR for v in vals):
            raise ValueError("samples below the noise floor along a direction with nonzero values")
        else:
            per.append(fit_slope(radii, vals))
    fitted = [s for s in per if s is not None]
    if not fitted:
        return SlopeResult(None, tuple(per), ZERO_PROXY)
    return SlopeResult(max(fitted), tuple(per))


def decay_slope(f, plan, n):
    """Worst (largest) log-log slope of |f| along the plan's directions."""
    return _slope_over(plan.radii, [[f(r * d) for r in plan.radii] for d in plan.unit_directions(n)])


@dataclass
class ProxySamples:
    """Ricci proxy entries over a sample plan, plus the resulting slope."""

    n: int
    rows: list = field(default_factory=list)
    slope: SlopeResult = None
    fd_error: float = 0.0
    fd_ok: bool = True

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "direction_id", "entry_i", "entry_j", "value"])
            for row in self.rows:
                w.writerow([repr(row[0]), row[1], row[2], row[3], repr(row[4])])


def sample_proxy(metric, plan):
    """Evaluate the proxy matrix on the plan, fit the decay slope, run the FD check."""
    if isinstance(metric, MetricExpansion):
        metric = NumericMetric(metric)
    n = metric.n
    out = ProxySamples(n)
    cache = {}
    for r, k, x in plan.points(n):
        p = metric.proxy_matrix(x)
        cache[k, r] = float(np.abs(p).max())
        for i in range(n):
            for j in range(i, n):
                out.rows.append((r, k, i, j, float(p[i, j])))
    ndirs = len(plan.unit_directions(n))
    out.slope = _slope_over(plan.radii, [[cache[k, r] for r in plan.radii] for k in range(ndirs)])
    if not metric.flat:
        for _, _, x in plan.points(n):
            err = fd_crosscheck(metric, x, plan.fd_ratio)
            out.fd_error = max(out.fd_error, err)
            out.fd_ok = out.fd_ok and err <= fd_tolerance(x, plan.fd_ratio)
    return out
