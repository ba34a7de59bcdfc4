"""Random generators for harmonic data, members of the term sets, and seeds.

Used by the property tests and the experiment scripts; ``expand`` never
touches randomness.
"""
import random

from .metric import SeedData
from .poly import HarmonicPoly, Poly, harmonic_decompose
from .terms import Expansion, Term


def random_homogeneous(rng, dim, degree, n_terms=4, coeff_range=5):
    coeffs = {}
    for _ in range(n_terms):
        exps = [0] * dim
        for _ in range(degree):
            exps[rng.randrange(dim)] += 1
        coeffs[tuple(exps)] = coeffs.get(tuple(exps), 0) + rng.randint(-coeff_range, coeff_range)
    return Poly(dim, coeffs)


def random_harmonic(rng, dim, degree, n_terms=4, coeff_range=5):
    """Nonzero harmonic polynomial of the given degree (harmonic part of a random one)."""
    for _ in range(100):
        p = random_homogeneous(rng, dim, degree, n_terms, coeff_range)
        comps = harmonic_decompose(p, degree)
        if comps and comps[0][0] == 0:
            return comps[0][1]
    if degree == 0:
        return HarmonicPoly(Poly.constant(dim, 1))
    raise RuntimeError("could not draw a harmonic polynomial")  # pragma: no cover


def random_T_term(rng, n, max_l=3):
    """A term r^sigma G_m of T (n > 4) from random admissible (j, l, k, m)."""
    l = rng.randint(1, max_l)
    j = rng.randint(0, l - 1)
    k = rng.randint(l, l + 3)
    m = rng.choice(range(k % 2, k + 1, 2))
    sigma = 2 * j - (n - 2) * l - k
    return Term(sigma, 0, random_harmonic(rng, n, m, n_terms=3, coeff_range=3))


def random_Ttilde_term(rng, max_l=3, max_i=2):
    """A term r^sigma (log r)^i G_m of the n = 4 log set."""
    l = rng.randint(1, max_l)
    i = rng.randint(0, max_i)
    k = rng.randint(l + i, l + i + 3)
    m = rng.choice(range(k % 2, k + 1, 2))
    return Term(-2 * l - k, i, random_harmonic(rng, 4, m, n_terms=3, coeff_range=3))


def random_seeds(rng, n, levels=(1, 2, 3), density=1.0, n_terms=3, coeff_range=3):
    data = {}
    for k in levels:
        entries = {}
        for i in range(n):
            for j in range(i, n):
                if rng.random() < density:
                    entries[(i, j)] = random_harmonic(rng, n, k, n_terms, coeff_range)
        data[k] = entries
    return SeedData(n, data)


def random_state(rng, n, order, n_terms=3):
    """A symmetric matrix of decaying expansions with terms at sigma <= 1 - n."""
    m = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            terms = []
            for _ in range(rng.randint(0, n_terms)):
                sigma = -rng.randint(n - 1, max(n - 1, order))
                deg = rng.randint(0, 2)
                terms.append(Term(sigma, 0, random_harmonic(rng, n, deg, 2, 3)))
            m[i][j] = m[j][i] = Expansion(n, terms)
    return m


def rng_from(seed):
    return random.Random(seed)
