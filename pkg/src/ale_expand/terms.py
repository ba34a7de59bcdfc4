"""Finite sums of atoms  c * r^sigma (log r)^i G_m.

An atom is stored through the harmonic polynomial h_m = r^m G_m, so the
function it represents is  r^(sigma - m) (log r)^i h_m(x).  Every nonlinear
operation first produces *raw* pieces  r^(sigma - d) (log r)^i P(x)  with P
homogeneous of degree d but not necessarily harmonic; those are accumulated
per (sigma, i, d) and split into harmonic components once, at the end.
"""
from dataclasses import dataclass

from .poly import (
    BITS,
    DimensionError,
    HarmonicPoly,
    Poly,
    _units,
    add_into,
    decompose_raw,
    mul_into,
    prune,
)
from .rational import ONE, Rational, as_rational


@dataclass(frozen=True)
class Term:
    sigma: int
    logpow: int
    harm: HarmonicPoly
    coeff: Rational = ONE

    @property
    def m(self):
        return self.harm.m

    @property
    def dim(self):
        return self.harm.dim


class _Raw:
    """Mutable accumulator of raw pieces keyed by (sigma, logpow, degree)."""

    __slots__ = ("dim", "d")

    def __init__(self, dim):
        self.dim = dim
        self.d = {}

    def slot(self, key):
        s = self.d.get(key)
        if s is None:
            s = self.d[key] = {}
        return s

    def add_expansion(self, e, factor=1):
        if e.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {e.dim} vs {self.dim}")
        for key, c in e._t.items():
            add_into(self.slot(key), c, factor)

    def add_product(self, a, b, order=None, factor=1):
        if a.dim != self.dim or b.dim != self.dim:
            raise DimensionError("dimension mismatch in product")
        if not a._t or not b._t:
            return
        bt = list(b._t.items())
        for (s1, i1, m1), c1 in a._t.items():
            for (s2, i2, m2), c2 in bt:
                s = s1 + s2
                if order is not None and s < -order:
                    break
                mul_into(self.slot((s, i1 + i2, m1 + m2)), c1, c2, factor)

    def freeze(self, order=None):
        """Non-canonical snapshot, sorted by descending sigma."""
        out = {}
        for key, c in self.d.items():
            if order is not None and key[0] < -order:
                continue
            c = prune(c)
            if c:
                out[key] = c
        return RawExpansion(self.dim, out)

    def result(self, order=None):
        out = {}
        for (s, i, d), c in self.d.items():
            if order is not None and s < -order:
                continue
            c = prune(c)
            if not c:
                continue
            for a, h in decompose_raw(c, self.dim, d).items():
                key = (s, i, d - 2 * a)
                slot = out.get(key)
                if slot is None:
                    out[key] = h
                else:
                    add_into(slot, h)
        return Expansion._from_dict(self.dim, out)


def _sort_key(key):
    s, i, m = key
    return (-s, i, m)


class RawExpansion:
    """Sum of r^(sigma-d) (log r)^i P_d with P_d homogeneous of degree d but
    not necessarily harmonic.  Not canonical (zero test is not reliable);
    used for intermediates that are only multiplied and differentiated."""

    __slots__ = ("dim", "_t")

    def __init__(self, dim, d):
        self.dim = dim
        self._t = {k: d[k] for k in sorted(d, key=_sort_key)}

    def __bool__(self):
        return bool(self._t)

    def canonical(self, order=None):
        raw = _Raw(self.dim)
        raw.add_expansion(self)
        return raw.result(order)

    def truncate(self, order):
        return RawExpansion(self.dim, {k: c for k, c in self._t.items() if k[0] >= -order})

    def diff(self, axis):
        return _diff_raw(self, axis).freeze()


class Expansion:
    """Canonical finite sum of terms, sorted by descending sigma, then
    ascending log power, then ascending harmonic degree."""

    __slots__ = ("dim", "_t")

    def __init__(self, dim, terms=()):
        raw = _Raw(dim)
        for t in terms:
            if t.dim != dim:
                raise DimensionError(f"term of dimension {t.dim} in a dimension-{dim} expansion")
            c = t.harm._c if t.coeff == 1 else {k: v * t.coeff for k, v in t.harm._c.items()}
            add_into(raw.slot((t.sigma, t.logpow, t.m)), c)
        self.dim = dim
        self._t = raw.result()._t

    @classmethod
    def _from_dict(cls, dim, d):
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._t = {k: d[k] for k in sorted(d, key=_sort_key) if d[k]}
        return obj

    @classmethod
    def zero(cls, dim):
        return cls._from_dict(dim, {})

    @classmethod
    def one(cls, dim):
        return cls._from_dict(dim, {(0, 0, 0): {0: ONE}})

    @classmethod
    def atom(cls, sigma, harm, logpow=0, coeff=1):
        """Single term r^sigma (log r)^logpow G_m with h_m = ``harm``."""
        if not isinstance(harm, HarmonicPoly):
            harm = HarmonicPoly(harm)
        return cls(harm.dim, [Term(sigma, logpow, harm, as_rational(coeff))])

    # -- inspection ---------------------------------------------------------
    @property
    def terms(self):
        return [Term(s, i, HarmonicPoly._trusted(self.dim, c, m)) for (s, i, m), c in self._t.items()]

    def keys(self):
        return list(self._t)

    def component(self, sigma, logpow, m):
        c = self._t.get((sigma, logpow, m))
        return HarmonicPoly._trusted(self.dim, c or {}, m)

    def __len__(self):
        return len(self._t)

    def __bool__(self):
        return bool(self._t)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Expansion):
            return NotImplemented
        return self.dim == other.dim and self._t == other._t

    def __hash__(self):
        return hash((self.dim, tuple((k, frozenset(c.items())) for k, c in self._t.items())))

    def __repr__(self):
        if not self._t:
            return f"Expansion(dim={self.dim}, 0)"
        body = ", ".join(f"r^{s}" + (f" log^{i}" if i else "") + f" G{m}[{len(c)}]"
                         for (s, i, m), c in self._t.items())
        return f"Expansion(dim={self.dim}, {body})"

    def sigmas(self):
        return sorted({s for s, _, _ in self._t}, reverse=True)

    def max_logpow(self):
        return max((i for _, i, _ in self._t), default=0)

    def is_log_free(self):
        return all(i == 0 for _, i, _ in self._t)

    def monomial_count(self):
        return sum(len(c) for c in self._t.values())

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def _combine(self, other, factor):
        self._check(other)
        out = {k: dict(c) for k, c in self._t.items()}
        for k, c in other._t.items():
            slot = out.get(k)
            if slot is None:
                out[k] = {kk: v * factor for kk, v in c.items()} if factor != 1 else dict(c)
            else:
                add_into(slot, c, factor)
        return Expansion._from_dict(self.dim, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, factor):
        f = as_rational(factor)
        if not f:
            return Expansion.zero(self.dim)
        return Expansion._from_dict(self.dim, {k: {kk: v * f for kk, v in c.items()} for k, c in self._t.items()})

    def __mul__(self, other):
        if isinstance(other, Expansion):
            return exp_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def canonical(self, order=None):
        return self if order is None else truncate(self, order)

    # -- serialization ------------------------------------------------------
    def to_json(self):
        return [
            {"sigma": s, "logpow": i, "harmonic": Poly._raw(self.dim, c).to_json()}
            for (s, i, m), c in self._t.items()
        ]

    @classmethod
    def from_json(cls, dim, data):
        terms = []
        for entry in data:
            harm = HarmonicPoly(Poly.from_json(dim, entry["harmonic"]))
            terms.append(Term(int(entry["sigma"]), int(entry["logpow"]), harm))
        out = cls(dim, terms)
        if out.keys() != [(t.sigma, t.logpow, t.m) for t in terms]:
            raise ValueError("serialized expansion is not canonical (order, duplicates or zero terms)")
        return out


# -- operations ---------------------------------------------------------------

def canonicalize(raw_terms, dim=None):
    raw_terms = list(raw_terms)
    if dim is None:
        if not raw_terms:
            raise ValueError("dimension required for an empty term list")
        dim = raw_terms[0].dim
    return Expansion(dim, raw_terms)


def exp_add(a, b):
    return a + b


def exp_mul(a, b, order=None):
    """Product with every term of sigma < -order dropped during accumulation."""
    raw = _Raw(a.dim)
    raw.add_product(a, b, order)
    return raw.result(order)


def _diff_raw(a, axis):
    # d/dx_axis of r^(s-d) log^i P_d for each piece; P need not be harmonic
    dim = a.dim
    if not 0 <= axis < dim:
        raise ValueError(f"axis {axis} out of range for dimension {dim}")
    unit = _units(dim)[axis]
    shift = BITS * axis
    mask = (1 << BITS) - 1
    raw = _Raw(dim)
    for (s, i, d), c in a._t.items():
        radial = s - d
        shifted = {k + unit: v for k, v in c.items()}
        if radial:
            add_into(raw.slot((s - 1, i, d + 1)), shifted, radial)
        if i:
            add_into(raw.slot((s - 1, i - 1, d + 1)), shifted, i)
        if d:
            dp = {}
            for k, v in c.items():
                e = (k >> shift) & mask
                if e:
                    dp[k - unit] = v * e
            if dp:
                add_into(raw.slot((s - 1, i, d - 1)), dp)
    return raw


def exp_diff(a, axis):
    """Partial derivative along coordinate ``axis`` (0-based)."""
    return _diff_raw(a, axis).result()


def lam(k, n):
    return k * (k + n - 2)


def exp_laplacian(a):
    n = a.dim
    out = {}

    def put(key, c, f):
        if not f:
            return
        slot = out.get(key)
        if slot is None:
            out[key] = {k: v * f for k, v in c.items()}
        else:
            add_into(slot, c, f)

    for (s, j, m), c in a._t.items():
        put((s - 2, j, m), c, lam(s, n) - lam(m, n))
        if j >= 1:
            put((s - 2, j - 1, m), c, j * (n + 2 * s - 2))
        if j >= 2:
            put((s - 2, j - 2, m), c, j * (j - 1))
    return Expansion._from_dict(n, {k: prune(c) for k, c in out.items()})


def truncate(a, order):
    """Keep exactly the terms with sigma >= -order."""
    return Expansion._from_dict(a.dim, {k: c for k, c in a._t.items() if k[0] >= -order})


def leading_order(a):
    """(sigma, logpow) of the slowest-decaying term, or ``None`` when empty."""
    if not a._t:
        return None
    top = next(iter(a._t))[0]
    return top, max(i for s, i, _ in a._t if s == top)


def membership_T(term, n):
    """Smallest witness (j, l, k) in (l, j, k) order placing ``term`` in T, else None.

    Conditions: sigma = 2j - (n-2)l - k, k >= l >= j+1, k >= m, k = m mod 2,
    no logarithm.
    """
    if n <= 4:
        raise ValueError("the set T is defined for n > 4")
    if term.logpow:
        return None
    sigma, m = term.sigma, term.m
    # k >= l and j <= l-1 give (n-3) l <= -sigma - 2
    lmax = (-sigma - 2) // (n - 3)
    for l in range(1, lmax + 1):
        for j in range(0, l):
            k = 2 * j - (n - 2) * l - sigma
            if k >= l and k >= m and (k - m) % 2 == 0:
                return j, l, k
    return None


def membership_Ttilde(term):
    """Smallest-l witness (l, k, i) placing ``term`` in the n=4 log set, else None.

    Conditions: sigma = -2l - k, l >= 1, k >= l + i, k >= m, k = m mod 2.
    """
    sigma, m, i = term.sigma, term.m, term.logpow
    lmax = (-sigma) // 3
    for l in range(1, lmax + 1):
        k = -sigma - 2 * l
        if k >= l + i and k >= m and (k - m) % 2 == 0:
            return l, k, i
    return None
