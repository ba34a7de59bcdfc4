"""Sparse exact polynomials in the coordinates x_0..x_{n-1}.

Monomials are packed into a single integer key, ``BITS`` bits per variable,
so multiplying monomials is integer addition.  Exponents must stay below
``2**BITS``; at the degrees reached by the bootstrap this is never close.

The harmonic decomposition follows the classical splitting of homogeneous
polynomials into |x|^{2a} times harmonic pieces, computed by back-substitution
on the chain of iterated Laplacians rather than by a dense linear solve.
"""
from functools import lru_cache

from .rational import ONE, Rational, as_rational

BITS = 8
_MASK = (1 << BITS) - 1


class DimensionError(ValueError):
    pass


class NotHomogeneousError(ValueError):
    pass


def pack(exps):
    key = 0
    for i, e in enumerate(exps):
        if e < 0 or e > _MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= e << (BITS * i)
    return key


def unpack(key, dim):
    return tuple((key >> (BITS * i)) & _MASK for i in range(dim))


def _degree(key):
    d = 0
    while key:
        d += key & _MASK
        key >>= BITS
    return d


@lru_cache(maxsize=None)
def _units(dim):
    return tuple(1 << (BITS * i) for i in range(dim))


class Poly:
    """Immutable sparse polynomial with exact rational coefficients.

    ``coeffs`` maps exponent tuples (length ``dim``) to coefficients.  Zero
    coefficients are dropped on construction.
    """

    __slots__ = ("dim", "_c", "_hash", "_ft")

    def __init__(self, dim, coeffs=None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        packed = {}
        for exps, c in (coeffs or {}).items():
            if len(exps) != dim:
                raise DimensionError(f"monomial {exps} does not have {dim} exponents")
            c = as_rational(c)
            if c:
                key = pack(exps)
                packed[key] = packed.get(key, 0) + c
        self._c = {k: v for k, v in packed.items() if v}
        self._hash = None
        self._ft = None

    @classmethod
    def _raw(cls, dim, packed):
        # trusted constructor: packed keys, nonzero Rational values
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._c = packed
        obj._hash = None
        obj._ft = None
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, dim):
        return cls._raw(dim, {})

    @classmethod
    def constant(cls, dim, value):
        c = as_rational(value)
        return cls._raw(dim, {0: c} if c else {})

    @classmethod
    def monomial(cls, dim, exps, coeff=1):
        return cls(dim, {tuple(exps): coeff})

    @classmethod
    def variable(cls, dim, axis):
        return cls._raw(dim, {_units(dim)[axis]: ONE})

    @classmethod
    def norm_sq(cls, dim):
        """|x|^2 = sum of x_i^2."""
        return norm_sq_power(dim, 1)

    # -- inspection ---------------------------------------------------------
    def __bool__(self):
        return bool(self._c)

    def __len__(self):
        return len(self._c)

    def is_zero(self):
        return not self._c

    def items(self):
        """(exponents, coefficient) pairs in graded-lex order, highest first."""
        out = [(unpack(k, self.dim), c) for k, c in self._c.items()]
        out.sort(key=lambda t: (sum(t[0]), t[0]), reverse=True)
        return out

    def coefficient(self, exps):
        return self._c.get(pack(exps), Rational(0))

    def degrees(self):
        return {_degree(k) for k in self._c}

    @property
    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        return max(self.degrees(), default=-1)

    def is_homogeneous(self, k=None):
        ds = self.degrees()
        if not ds:
            return True
        if len(ds) != 1:
            return False
        return k is None or ds == {k}

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.dim == other.dim and self._c == other._c

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._c.items())))
        return self._hash

    def __repr__(self):
        if not self._c:
            return "Poly(0)"
        parts = []
        for exps, c in self.items():
            mono = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}" for i, e in enumerate(exps) if e)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return "Poly(" + " + ".join(parts) + ")"

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, Poly):
            return self + Poly.constant(self.dim, other)
        self._check(other)
        out = dict(self._c)
        add_into(out, other._c)
        return Poly._raw(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.dim, {k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        if not isinstance(other, Poly):
            return self + (-as_rational(other))
        self._check(other)
        out = dict(self._c)
        add_into(out, other._c, -1)
        return Poly._raw(self.dim, out)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            self._check(other)
            out = {}
            mul_into(out, self._c, other._c)
            return Poly._raw(self.dim, out)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor):
        f = as_rational(factor)
        if not f:
            return Poly.zero(self.dim)
        return Poly._raw(self.dim, {k: v * f for k, v in self._c.items()})

    def diff(self, axis):
        unit = _units(self.dim)[axis]
        shift = BITS * axis
        out = {}
        for k, c in self._c.items():
            e = (k >> shift) & _MASK
            if e:
                out[k - unit] = c * e
        return Poly._raw(self.dim, out)

    def laplacian(self):
        return Poly._raw(self.dim, laplacian_raw(self._c, self.dim))

    def evaluate(self, x):
        if len(x) != self.dim:
            raise DimensionError(f"point has {len(x)} coordinates, expected {self.dim}")
        total = 0.0
        for exps, c in self._float_terms():
            v = c
            for xi, e in zip(x, exps):
                if e:
                    v *= xi ** e
            total += v
        return total

    __call__ = evaluate

    def _float_terms(self):
        if self._ft is None:
            self._ft = [(unpack(k, self.dim), float(c)) for k, c in self._c.items()]
        return self._ft

    # -- serialization ------------------------------------------------------
    def to_json(self):
        return [{"exponents": list(e), "coeff": str(c)} for e, c in self.items()]

    @classmethod
    def from_json(cls, dim, data):
        coeffs = {}
        for entry in data:
            exps = tuple(int(e) for e in entry["exponents"])
            if exps in coeffs:
                raise ValueError(f"duplicate monomial {exps}")
            coeffs[exps] = as_rational(entry["coeff"])
        return cls(dim, coeffs)


# -- dict-level kernels (hot paths) ------------------------------------------

def add_into(acc, other, factor=1):
    """acc += factor * other, dropping cancelled entries."""
    get = acc.get
    if factor == 1:
        for k, c in other.items():
            v = get(k, 0) + c
            if v:
                acc[k] = v
            else:
                acc.pop(k, None)
    else:
        for k, c in other.items():
            v = get(k, 0) + c * factor
            if v:
                acc[k] = v
            else:
                acc.pop(k, None)


def mul_into(acc, a, b, factor=1):
    """acc += factor * a * b.  Zero entries may survive; callers prune."""
    get = acc.get
    if len(a) > len(b):
        a, b = b, a
    bi = list(b.items())
    for ka, ca in a.items():
        if factor != 1:
            ca = ca * factor
        for kb, cb in bi:
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb


def prune(acc):
    return {k: v for k, v in acc.items() if v}


def laplacian_raw(c, dim):
    out = {}
    get = out.get
    units = _units(dim)
    for k, v in c.items():
        for i in range(dim):
            e = (k >> (BITS * i)) & _MASK
            if e >= 2:
                nk = k - 2 * units[i]
                out[nk] = get(nk, 0) + v * (e * (e - 1))
    return prune(out)


@lru_cache(maxsize=None)
def _norm_sq_power_raw(dim, power):
    if power == 0:
        return ((0, ONE),)
    prev = dict(_norm_sq_power_raw(dim, power - 1))
    out = {}
    mul_into(out, prev, {2 * u: ONE for u in _units(dim)})
    return tuple(sorted(prune(out).items()))


def norm_sq_power(dim, power):
    """|x|^{2*power} as a Poly."""
    return Poly._raw(dim, dict(_norm_sq_power_raw(dim, power)))


# -- harmonic polynomials ----------------------------------------------------

class HarmonicPoly(Poly):
    """A homogeneous polynomial of fixed degree with zero Laplacian.

    ``HarmonicPoly(poly)`` validates; arithmetic on it returns plain ``Poly``.
    """

    __slots__ = ("m",)

    def __init__(self, poly, degree=None):
        if not isinstance(poly, Poly):
            raise TypeError("HarmonicPoly wraps a Poly")
        ds = poly.degrees()
        if len(ds) > 1:
            raise NotHomogeneousError("harmonic polynomial must be homogeneous")
        m = ds.pop() if ds else degree
        if m is None:
            raise ValueError("degree of the zero polynomial must be given")
        if degree is not None and degree != m:
            raise ValueError(f"polynomial has degree {m}, expected {degree}")
        if poly.laplacian():
            raise ValueError("polynomial is not harmonic")
        self.dim = poly.dim
        self._c = poly._c
        self._hash = None
        self._ft = None
        self.m = m

    @classmethod
    def _trusted(cls, dim, packed, m):
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._c = packed
        obj._hash = None
        obj._ft = None
        obj.m = m
        return obj

    @property
    def degree(self):
        return self.m

    def __repr__(self):
        return f"HarmonicPoly[m={self.m}]" + Poly.__repr__(self)[4:]


def _contraction(a, j, m, dim):
    # Δ^j (|x|^{2a} h_m) = c * |x|^{2(a-j)} h_m for harmonic h_m of degree m
    c = 1
    for t in range(j):
        s = 2 * (a - t)
        c *= s * (s + dim - 2 + 2 * m)
    return c


def decompose_raw(c, dim, k):
    """Split a homogeneous degree-k coefficient dict into harmonic pieces.

    Returns ``{a: dict}`` with p = sum_a |x|^{2a} h_{k-2a}; zero pieces omitted.
    """
    if not c:
        return {}
    top = k // 2
    chain = [c]
    for _ in range(top):
        nxt = laplacian_raw(chain[-1], dim)
        chain.append(nxt)
    # highest nonvanishing Laplacian bounds the largest a present
    while top > 0 and not chain[top]:
        top -= 1
    if top == 0 and not laplacian_raw(c, dim):
        return {0: c}
    pieces = {}
    for a in range(top, -1, -1):
        acc = dict(chain[a])
        for b, h in pieces.items():
            coeff = _contraction(b, a, k - 2 * b, dim)
            mul_into(acc, dict(_norm_sq_power_raw(dim, b - a)), h, -coeff)
        acc = prune(acc)
        if acc:
            d = _contraction(a, a, k - 2 * a, dim)
            if d != 1:
                inv = Rational(1, d)
                acc = {key: v * inv for key, v in acc.items()}
            pieces[a] = acc
    return pieces


# -- module-level operations --------------------------------------------------

def poly_arith(a, b, op, factor=None):
    """Apply ``op`` in {"add", "sub", "mul", "scale"}; ``scale`` uses ``factor``."""
    if op == "scale":
        return a.scale(factor)
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def poly_laplacian(p):
    return p.laplacian()


def harmonic_decompose(p, k=None):
    """Return ``[(a, h)]`` with p = sum |x|^{2a} h and each h harmonic of degree k-2a."""
    ds = p.degrees()
    if k is None:
        if len(ds) > 1:
            raise NotHomogeneousError("polynomial is not homogeneous")
        k = ds.pop() if ds else 0
    elif ds and ds != {k}:
        raise NotHomogeneousError(f"polynomial is not homogeneous of degree {k}")
    pieces = decompose_raw(p._c, p.dim, k)
    return [(a, HarmonicPoly._trusted(p.dim, pieces[a], k - 2 * a)) for a in sorted(pieces)]


def reassemble(dim, components):
    out = Poly.zero(dim)
    for a, h in components:
        out = out + norm_sq_power(dim, a) * h
    return out


def poly_eval(p, x):
    return p.evaluate(x)
