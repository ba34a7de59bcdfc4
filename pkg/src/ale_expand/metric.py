"""Matrix-of-expansions algebra and the order-by-order bootstrap.

The metric is carried as U = g - delta, its inverse as V = g^{-1} - delta.
Contractions with g or g^{-1} are written out as (delta + U) so the identity
part is a copy rather than a product.  Intermediates stay in raw
(non-canonical) form and are truncated; since every factor decays, a dropped
term can never feed back into a kept one, so truncated results are exact
through the requested order.
"""
import time
from dataclasses import dataclass, field
from itertools import product

from .poisson import is_exceptional, solve_expansion
from .poly import DimensionError, HarmonicPoly
from .rational import Rational
from .terms import Expansion, RawExpansion, _Raw, exp_laplacian, leading_order, truncate

HALF = Rational(1, 2)


class BootstrapError(RuntimeError):
    pass


class LogDepthError(BootstrapError):
    pass


# -- matrices -----------------------------------------------------------------

def zeros(n):
    z = Expansion.zero(n)
    return [[z] * n for _ in range(n)]


def symmetric(n, fn):
    """n x n nested list with m[i][j] = m[j][i] = fn(i, j) for i <= j."""
    m = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            m[i][j] = m[j][i] = fn(i, j)
    return m


def is_symmetric(m):
    n = len(m)
    return all(m[i][j] == m[j][i] for i in range(n) for j in range(i + 1, n))


def matmul(a, b, order, sym=False):
    """Raw matrix product; with ``sym`` only i <= j is formed and mirrored."""
    n = len(a)
    dim = a[0][0].dim
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in (range(i, n) if sym else range(n)):
            raw = _Raw(dim)
            for k in range(n):
                raw.add_product(a[i][k], b[k][j], order)
            out[i][j] = raw.freeze(order)
            if sym:
                out[j][i] = out[i][j]
    return out


def canonical(m, order=None):
    """Canonicalize a nested list (any depth) of raw or canonical expansions."""
    if isinstance(m, list):
        return [canonical(x, order) for x in m]
    return m.canonical(order)


def _scaled(x, factor, order):
    raw = _Raw(x.dim)
    raw.add_expansion(x, factor)
    return raw.freeze(order)


def _as_raw(x, order):
    if isinstance(x, RawExpansion):
        return x.truncate(order)
    return _scaled(x, 1, order)


def decay(u):
    """Smallest -sigma over the leading terms of a matrix (None if all zero)."""
    leads = [-next(iter(e._t))[0] for row in u for e in row if e._t]
    return min(leads) if leads else None


@dataclass(frozen=True)
class MetricExpansion:
    """g - delta as a symmetric matrix of expansions."""

    dim: int
    entries: tuple

    def __post_init__(self):
        n = self.dim
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise DimensionError(f"metric entries must form a {n}x{n} matrix")
        object.__setattr__(self, "entries", tuple(tuple(row) for row in self.entries))
        if not is_symmetric(self.entries):
            raise ValueError("metric expansion is not symmetric")

    @classmethod
    def zero(cls, n):
        return cls(n, zeros(n))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def matrix(self):
        return [list(row) for row in self.entries]

    def truncate(self, order):
        return MetricExpansion(self.dim, symmetric(self.dim, lambda i, j: truncate(self.entries[i][j], order)))

    def term_count(self):
        n = self.dim
        return sum(len(self.entries[i][j]) for i in range(n) for j in range(i, n))

    def all_terms(self):
        n = self.dim
        for i in range(n):
            for j in range(i, n):
                for t in self.entries[i][j].terms:
                    yield (i, j), t

    def max_logpow(self):
        return max((e.max_logpow() for row in self.entries for e in row), default=0)

    def __add__(self, other):
        return MetricExpansion(self.dim, symmetric(self.dim, lambda i, j: self.entries[i][j] + other.entries[i][j]))

    def to_json(self):
        n = self.dim
        return [
            {"i": i, "j": j, "terms": self.entries[i][j].to_json()}
            for i in range(n)
            for j in range(i, n)
        ]

    @classmethod
    def from_json(cls, n, data):
        m = zeros(n)
        seen = set()
        for entry in data:
            i, j = int(entry["i"]), int(entry["j"])
            if not 0 <= i <= j < n:
                raise ValueError(f"entry ({i},{j}) must satisfy 0 <= i <= j < {n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate entry ({i},{j})")
            seen.add((i, j))
            m[i][j] = m[j][i] = Expansion.from_json(n, entry["terms"])
        return cls(n, m)


@dataclass(frozen=True)
class SeedData:
    """Free harmonic data, level k -> {(i, j): h}.

    Entry (i, j) at level k contributes r^{2-n-k} G_k with G_k = h / r^k, h a
    harmonic polynomial of degree k.  Only i <= j is stored.
    """

    dim: int
    levels: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, entries in self.levels.items():
            k = int(k)
            if k < 1:
                raise ValueError("seed levels start at 1")
            lvl = {}
            for (i, j), h in entries.items():
                if i > j:
                    i, j = j, i
                if not 0 <= i <= j < self.dim:
                    raise ValueError(f"seed index ({i},{j}) out of range")
                if not isinstance(h, HarmonicPoly):
                    h = HarmonicPoly(h)
                if h.dim != self.dim:
                    raise DimensionError("seed polynomial has the wrong dimension")
                if h and h.m != k:
                    raise ValueError(f"seed at level {k} has degree {h.m}")
                if (i, j) in lvl:
                    raise ValueError(f"duplicate seed entry ({i},{j}) at level {k}")
                if h:
                    lvl[(i, j)] = h
            if lvl:
                clean[k] = lvl
        object.__setattr__(self, "levels", dict(sorted(clean.items())))

    def sigma(self, k):
        return 2 - self.dim - k

    def matrix(self, max_level):
        """Sum of seed atoms with level <= max_level, as a nested list."""
        n = self.dim
        m = zeros(n)
        for k, entries in self.levels.items():
            if k > max_level:
                continue
            for (i, j), h in entries.items():
                m[i][j] = m[j][i] = m[i][j] + Expansion.atom(self.sigma(k), h)
        return m


# -- inverse --------------------------------------------------------------------

def reciprocal(v, order):
    """w with (1 + v)(1 + w) = 1 through sigma >= -order; v must decay."""
    lead = leading_order(v)
    if lead is not None and lead[0] >= 0:
        raise ValueError("reciprocal needs an expansion without constant or growing terms")
    neg = _scaled(v, -1, order)
    power = neg
    total = _Raw(v.dim)
    while power:
        total.add_expansion(power)
        raw = _Raw(v.dim)
        raw.add_product(power, neg, order)
        power = raw.freeze(order)
    return total.result(order)


def _neumann(u, order):
    n = len(u)
    neg = symmetric(n, lambda i, j: _scaled(u[i][j], -1, order))
    totals = symmetric(n, lambda i, j: _Raw(u[0][0].dim))
    power = neg
    while any(e for row in power for e in row):
        for i in range(n):
            for j in range(i, n):
                totals[i][j].add_expansion(power[i][j])
        power = matmul(power, neg, order, sym=True)
    return symmetric(n, lambda i, j: totals[i][j].freeze(order))


def metric_inverse(u, order):
    """V = g^{-1} - delta via the Neumann series sum_{k>=1} (-U)^k."""
    return canonical(_neumann(u, order))


def _with_identity(u):
    n = len(u)
    dim = u[0][0].dim
    one = Expansion.one(dim)
    return [[u[i][j] + one if i == j else u[i][j] for j in range(n)] for i in range(n)]


def determinant(m, order):
    """Determinant of a matrix of expansions by memoized Laplace expansion.

    Returns the determinant and the memoized minor function
    ``det(rows, cols)`` (sorted index tuples) for cofactor reuse.
    """
    n = len(m)
    dim = m[0][0].dim
    memo = {}

    def det(rows, cols):
        if not rows:
            return Expansion.one(dim)
        key = (rows, cols)
        hit = memo.get(key)
        if hit is not None:
            return hit
        r0, rest = rows[0], rows[1:]
        raw = _Raw(dim)
        for pos, c in enumerate(cols):
            entry = m[r0][c]
            if not entry:
                continue
            minor = det(rest, cols[:pos] + cols[pos + 1:])
            raw.add_product(entry, minor, order, -1 if pos % 2 else 1)
        out = memo[key] = raw.result(order)
        return out

    return det(tuple(range(n)), tuple(range(n))), det


def metric_inverse_adjugate(u, order):
    """Independent inverse: adjugate over determinant, with 1/det from ``reciprocal``."""
    n = len(u)
    dim = u[0][0].dim
    g = _with_identity([[truncate(e, order) for e in row] for row in u])
    full, det = determinant(g, order)
    one = Expansion.one(dim)
    inv_det = reciprocal(full - one, order) + one
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = tuple(r for r in range(n) if r != j)
            cols = tuple(c for c in range(n) if c != i)
            cof = det(rows, cols)
            if (i + j) % 2:
                cof = -cof
            raw = _Raw(dim)
            raw.add_product(cof, inv_det, order)
            entry = raw.result(order)
            out[i][j] = entry - one if i == j else entry
    return out


# -- geometry -------------------------------------------------------------------

def _derivs(u, order):
    n = len(u)
    src = symmetric(n, lambda i, j: _as_raw(u[i][j], order - 1))
    return [symmetric(n, lambda i, j, p=p: src[i][j].diff(p)) for p in range(n)]


def derivatives(u, order):
    """du[p][i][j] = d_p U_ij, truncated at ``order``."""
    return canonical(_derivs(u, order))


def _christoffel(v, du, order, v_order):
    n = len(v)
    dim = v[0][0].dim
    half = [[[None] * n for _ in range(n)] for _ in range(n)]
    for m, p in product(range(n), repeat=2):
        for r in range(p, n):
            raw = _Raw(dim)
            raw.add_expansion(du[r][p][m], HALF)
            raw.add_expansion(du[p][m][r], HALF)
            raw.add_expansion(du[m][p][r], -HALF)
            half[m][p][r] = half[m][r][p] = raw.freeze(order)
    vt = [[_as_raw(e, v_order) for e in row] for row in v]
    gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
    for k, p in product(range(n), repeat=2):
        for r in range(p, n):
            raw = _Raw(dim)
            raw.add_expansion(half[k][p][r])
            for m in range(n):
                raw.add_product(vt[k][m], half[m][p][r], order)
            gamma[k][p][r] = gamma[k][r][p] = raw.freeze(order)
    return gamma


def christoffel(v, du, order):
    """Gamma[k][p][r] = 1/2 g^{km}(d_r g_pm + d_p g_mr - d_m g_pr)."""
    return canonical(_christoffel(v, du, order, order))


def _q(u, v, du, dv, gamma, order, inner, full=False):
    # ``inner`` is the depth needed for factors that always meet a derivative
    n = len(u)
    dim = u[0][0].dim
    rng = range(n)

    # Q1
    w = [[[None] * n for _ in rng] for _ in rng]
    for p in rng:
        for k in rng:
            for l in range(k, n):
                raw = _Raw(dim)
                raw.add_expansion(dv[p][k][l])
                for q in rng:
                    raw.add_product(v[p][q], dv[q][k][l], inner)
                w[p][k][l] = w[p][l][k] = raw.freeze(inner)
    y = [[None] * n for _ in rng]
    for i in rng:
        for l in rng:
            raw = _Raw(dim)
            for p in rng:
                for k in rng:
                    raw.add_product(du[p][i][k], w[p][k][l], order)
            y[i][l] = raw.freeze(order)

    # Q2: lower with g, raise twice with g^{-1}
    low = [[[None] * n for _ in rng] for _ in rng]
    for i, p in product(rng, repeat=2):
        for r in range(p, n):
            raw = _Raw(dim)
            raw.add_expansion(gamma[i][p][r])
            for k in rng:
                raw.add_product(u[i][k], gamma[k][p][r], inner)
            low[i][p][r] = low[i][r][p] = raw.freeze(inner)
    b = [[[None] * n for _ in rng] for _ in rng]
    for i, q, r in product(rng, repeat=3):
        raw = _Raw(dim)
        raw.add_expansion(low[i][q][r])
        for p in rng:
            raw.add_product(v[p][q], low[i][p][r], inner)
        b[i][q][r] = raw.freeze(inner)
    a = [[[None] * n for _ in rng] for _ in rng]
    for i, q, s in product(rng, repeat=3):
        raw = _Raw(dim)
        raw.add_expansion(b[i][q][s])
        for r in rng:
            raw.add_product(b[i][q][r], v[r][s], inner)
        a[i][q][s] = raw.freeze(inner)

    out = [[None] * n for _ in rng]
    for i in rng:
        for j in (rng if full else range(i, n)):
            raw = _Raw(dim)
            raw.add_expansion(y[i][j], -1)
            for l in rng:
                raw.add_product(y[i][l], u[l][j], order, -1)
            for q, s in product(rng, repeat=2):
                raw.add_product(a[i][q][s], low[j][q][s], order, -2)
            out[i][j] = raw
            if not full:
                out[j][i] = raw
    return out


def q_term(u, v, du, dv, gamma, order, full=False):
    """Q_ij = -g^{pq} g_lj d_p g_ik d_q g^{kl} - 2 g_ik g_lj g^{pq} g^{rs} Gamma^k_pr Gamma^l_qs.

    With ``full`` every (i, j) is computed independently; otherwise only i <= j
    is formed and mirrored.
    """
    q = _q(u, v, du, dv, gamma, order, order, full)
    return [[e.result(order) for e in row] for row in q]


def rhs(u, order, parts=None):
    """-(g^{kl} - delta^{kl}) d_k d_l U_ij + Q_ij through sigma >= -order.

    The right-hand side is quadratic with every factor decaying at least like
    the metric itself, so each intermediate is only formed as deep as its
    partners allow; for U of decay n-1 that means U is read to order-(n+1).
    ``parts``, if a dict, receives the intermediates.
    """
    n = len(u)
    a = decay(u)
    if a is None:
        return zeros(n)
    if a < 1:
        raise ValueError("metric deviation must decay")
    deep = order - a - 2
    if deep < 0:
        return zeros(n)
    ut = [[_scaled(e, 1, deep) for e in row] for row in u]
    v = _neumann(ut, deep)
    du = _derivs(ut, order - a - 1)
    dv = _derivs(v, order - a - 1)
    gamma = _christoffel(v, du, order - a - 1, order - 2 * a - 2)
    q = _q(ut, v, du, dv, gamma, order, order - a - 1)
    out = [[None] * n for _ in range(n)]
    ddu = {}
    for k in range(n):
        for l in range(k, n):
            ddu[k, l] = symmetric(n, lambda i, j: du[k][i][j].truncate(order - a - 1).diff(l))
    for i in range(n):
        for j in range(i, n):
            raw = q[i][j]
            for (k, l), dd in ddu.items():
                raw.add_product(v[k][l], dd[i][j], order, -1 if k == l else -2)
            out[i][j] = out[j][i] = raw.result(order)
    if parts is not None:
        parts.update(v=v, du=du, dv=dv, gamma=gamma, ddu=ddu)
    return out


def symbolic_residual(u, order):
    """Delta U_ij - RHS_ij, truncated at order + 2."""
    n = len(u)
    r = rhs(u, order + 2)
    return symmetric(n, lambda i, j: truncate(exp_laplacian(u[i][j]) - r[i][j], order + 2))


def gauge_residual(u, order):
    """sum_ij g^{ij} Gamma^k_ij for each k, truncated."""
    n = len(u)
    dim = u[0][0].dim
    a = decay(u)
    if a is None:
        return [Expansion.zero(dim) for _ in range(n)]
    v = _neumann(u, order - a - 1)
    gamma = _christoffel(v, _derivs(u, order), order, order - a - 1)
    out = []
    for k in range(n):
        raw = _Raw(dim)
        for i in range(n):
            raw.add_expansion(gamma[k][i][i])
            for j in range(n):
                raw.add_product(v[i][j], gamma[k][i][j], order)
        out.append(raw.result(order))
    return out


def early_terms_harmonic(metric):
    """True when every term with sigma >= 3 - 2n is annihilated by the Laplacian."""
    n = metric.dim
    return all(not exp_laplacian(Expansion(n, [t])) for _, t in metric.all_terms() if t.sigma >= 3 - 2 * n)


# -- bootstrap ------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapState:
    n: int
    metric: MetricExpansion
    q: int
    target: int
    log: tuple = ()

    def __post_init__(self):
        if self.q > self.target:
            raise ValueError("certified order exceeds target")


def _in_product_set_4(t):
    # products of two n=4 log-set members: sigma = -2l-k with l >= 2, k >= l+i
    for l in range(2, -t.sigma // 3 + 1):
        k = -t.sigma - 2 * l
        if k >= l + t.logpow and k >= t.m and (k - t.m) % 2 == 0:
            return True
    return False


def _make_check(n):
    if n > 4:
        def check(t):
            if t.logpow or is_exceptional(t, n):
                raise BootstrapError(f"exceptional or log right-hand side r^{t.sigma} log^{t.logpow} G{t.m} at n={n}")
    else:
        def check(t):
            if not _in_product_set_4(t):
                raise BootstrapError(f"right-hand side r^{t.sigma} log^{t.logpow} G{t.m} is not a product of log-set terms")
    return check


def initial_state(n, target, seeds):
    if n < 4:
        raise ValueError("dimension must be at least 4")
    if target < n - 1:
        raise ValueError(f"target order must be at least n-1 = {n - 1}")
    if seeds.dim != n:
        raise DimensionError("seed dimension does not match n")
    first = seeds.matrix(1)
    return BootstrapState(n, MetricExpansion(n, first), n - 1, target,
                          ({"N": 1, "q_N": n - 1, "term_count": MetricExpansion(n, first).term_count(),
                            "wall_ms": 0.0, "exceptional_terms": 0},))


def bootstrap_step(state, seeds, log_depth=None):
    """Advance the certified order by n - 1 (capped at the target)."""
    n = state.n
    if state.q >= state.target:
        raise ValueError("state already certified at its target order")
    t0 = time.perf_counter()
    q_next = min(state.target, state.q + n - 1)
    order = q_next + 2
    r = rhs(state.metric.matrix(), order)
    check = _make_check(n)
    exceptional = 0
    solved = zeros(n)
    for i in range(n):
        for j in range(i, n):
            for t in r[i][j].terms:
                if is_exceptional(t, n):
                    exceptional += 1
            solved[i][j] = solved[j][i] = solve_expansion(r[i][j], check)
    seed = seeds.matrix(q_next - n + 2)
    new = MetricExpansion(n, symmetric(n, lambda i, j: solved[i][j] + seed[i][j]))
    if log_depth is not None and new.max_logpow() > log_depth:
        raise LogDepthError(f"log power {new.max_logpow()} exceeds the guard {log_depth}")
    entry = {
        "N": len(state.log) + 1,
        "q_N": q_next,
        "term_count": new.term_count(),
        "wall_ms": (time.perf_counter() - t0) * 1e3,
        "exceptional_terms": exceptional,
    }
    return BootstrapState(n, new, q_next, state.target, state.log + (entry,))


def run_bootstrap(n, target, seeds, log_depth=None, on_stage=None):
    """Iterate bootstrap steps from the level-1 seeds up to ``target``.

    Returns the final metric expansion and the list of per-stage records.
    """
    state = initial_state(n, target, seeds)
    if on_stage:
        on_stage(state)
    while state.q < target:
        state = bootstrap_step(state, seeds, log_depth)
        if on_stage:
            on_stage(state)
    return state.metric, list(state.log)
