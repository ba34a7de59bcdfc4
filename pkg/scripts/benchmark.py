"""Time the bootstrap at Q = 3(n-1) with dense random seeds at levels 1-3."""
import argparse
import time

from ale_expand.metric import run_bootstrap, symbolic_residual
from ale_expand.sampling import random_seeds, rng_from


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[4, 5, 6])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--residual", action="store_true", help="also time the final residual check")
    args = ap.parse_args(argv)
    print(f"{'n':>2} {'Q':>3} {'terms':>6} {'monomials':>10} {'logs':>4} {'stage ms':>24} {'residual s':>10}")
    for n in args.dims:
        q = 3 * (n - 1)
        seeds = random_seeds(rng_from(args.seed), n)
        metric, log = run_bootstrap(n, q, seeds)
        mono = sum(e.monomial_count() for row in metric.entries for e in row)
        stages = "/".join(f"{s['wall_ms']:.0f}" for s in log[1:])
        rtime = ""
        if args.residual:
            t0 = time.perf_counter()
            symbolic_residual(metric.matrix(), q)
            rtime = f"{time.perf_counter() - t0:.2f}"
        print(f"{n:>2} {q:>3} {metric.term_count():>6} {mono:>10} {metric.max_logpow():>4} {stages:>24} {rtime:>10}")


if __name__ == "__main__":
    main()
