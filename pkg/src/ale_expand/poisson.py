"""Exact inverse of the flat Laplacian on single terms and on expansions.

For a right-hand side r^s (log r)^i G_m the ansatz
    u = r^(s+2) * sum_j c_j (log r)^j G_m
turns Delta u = rhs into an upper-triangular system in the c_j with diagonal
lambda_{s+2} - lambda_m, first superdiagonal j (n + 2s + 2) and second
superdiagonal j (j - 1), where lambda_k = k (k + n - 2).  The diagonal
vanishes exactly when s + n + m = 0; then one more log power is needed and
the harmonic mode c_0 is fixed to zero.
"""
from dataclasses import dataclass

from .poly import add_into
from .rational import Rational
from .terms import Expansion, lam


class PoissonError(ValueError):
    pass


def is_exceptional(term, n=None):
    n = term.dim if n is None else n
    return term.sigma + n + term.m == 0


@dataclass(frozen=True)
class TriangularSystem:
    """Coefficient matrix of the log-power ansatz, entries as Rationals."""

    n: int
    sigma: int
    m: int
    size: int

    @classmethod
    def for_term(cls, term):
        """System solved for ``term``; one size larger when the diagonal vanishes.

        Besides the exceptional case this happens only for sigma = -2, m = 0,
        where the preimage is log r itself.
        """
        n = term.dim
        singular = lam(term.sigma + 2, n) == lam(term.m, n)
        return cls(n, term.sigma, term.m, term.logpow + 1 + int(singular))

    @property
    def diag(self):
        return lam(self.sigma + 2, self.n) - lam(self.m, self.n)

    @property
    def nstar(self):
        return self.n + 2 * self.sigma + 2

    def matrix(self):
        a = [[Rational(0)] * self.size for _ in range(self.size)]
        for j in range(self.size):
            a[j][j] = Rational(self.diag)
            if j >= 1:
                a[j - 1][j] = Rational(j * self.nstar)
            if j >= 2:
                a[j - 2][j] = Rational(j * (j - 1))
        return a

    def rank(self):
        # zero diagonal: the first superdiagonal n + 2 sigma + 2 is still nonzero
        # (2 - n - 2m in the exceptional case, n - 2 at sigma = -2, m = 0)
        if self.diag:
            return self.size
        return self.size - 1


def solve_coefficients(n, sigma, m, i):
    """c_0..c_top with Delta(r^(sigma+2) sum c_j log^j G_m) = r^sigma log^i G_m."""
    d = lam(sigma + 2, n) - lam(m, n)
    ns = n + 2 * sigma + 2
    if d:
        c = [Rational(0)] * (i + 3)
        for p in range(i, -1, -1):
            rhs = (1 if p == i else 0) - (p + 1) * ns * c[p + 1] - (p + 2) * (p + 1) * c[p + 2]
            c[p] = Rational(rhs) / d
        return c[: i + 1]
    if not ns:
        raise PoissonError(f"degenerate system at sigma={sigma}, m={m}, n={n}")
    c = [Rational(0)] * (i + 3)
    # equation for log^p: (p+1) ns c_{p+1} + (p+2)(p+1) c_{p+2} = [p == i]
    for p in range(i, -1, -1):
        rhs = (1 if p == i else 0) - (p + 2) * (p + 1) * c[p + 2]
        c[p + 1] = Rational(rhs) / ((p + 1) * ns)
    c[0] = Rational(0)
    return c[: i + 2]


def solve_term(term):
    """Particular solution of Delta u = term, as an Expansion."""
    if term.sigma > -2:
        raise PoissonError(f"right-hand side r^{term.sigma} is outside the decaying regime (sigma <= -2)")
    n = term.dim
    c = solve_coefficients(n, term.sigma, term.m, term.logpow)
    out = {}
    base = term.harm._c
    f0 = term.coeff
    for j, cj in enumerate(c):
        if cj:
            f = cj * f0
            out[(term.sigma + 2, j, term.m)] = {k: v * f for k, v in base.items()}
    return Expansion._from_dict(n, out)


def solve_expansion(rhs, check=None):
    """Termwise solve; ``check`` is an optional callable run on each term first."""
    out = {}
    for t in rhs.terms:
        if check is not None:
            check(t)
        for key, c in solve_term(t)._t.items():
            slot = out.get(key)
            if slot is None:
                out[key] = dict(c)
            else:
                add_into(slot, c)
    return Expansion._from_dict(rhs.dim, out)

