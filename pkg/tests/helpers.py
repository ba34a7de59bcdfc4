"""Shared builders for metric-level tests."""
from ale_expand.metric import MetricExpansion, SeedData, symbolic_residual, zeros
from ale_expand.poly import HarmonicPoly, Poly
from ale_expand.rational import Rational
from ale_expand.terms import Expansion, exp_laplacian


def x(n, a):
    return Poly.variable(n, a)


def single_seed(n, entry=(0, 0), axis=0, scale=1):
    return SeedData(n, {1: {entry: HarmonicPoly(x(n, axis).scale(scale))}})


def gauge_seed(n):
    """Level-2 seed U_ij = d_i d_j r^(2-n): linearized harmonic gauge holds exactly."""
    r2 = Poly.norm_sq(n)
    entries = {}
    for i in range(n):
        for j in range(i, n):
            p = x(n, i) * x(n, j) * (-n)
            if i == j:
                p = p + r2
            entries[(i, j)] = HarmonicPoly(p.scale(2 - n))
    return SeedData(n, {2: entries})


def residual_is_zero(metric, order):
    n = metric.dim
    res = symbolic_residual(metric.matrix(), order)
    return all(not res[i][j] for i in range(n) for j in range(n))


def mutations(metric):
    """Yield (label, mutated metric, harmonic?) with one term scaled by 1 + 1/1000."""
    n = metric.dim
    bump = Rational(1, 1000)
    for (i, j), t in metric.all_terms():
        single = Expansion(n, [t])
        m = [row[:] for row in metric.matrix()]
        m[i][j] = m[j][i] = m[i][j] + single.scale(bump)
        yield (i, j, t.sigma, t.logpow, t.m), MetricExpansion(n, m), not exp_laplacian(single)


def matrix_of(n, entries):
    m = zeros(n)
    for (i, j), e in entries.items():
        m[i][j] = m[j][i] = e
    return m
