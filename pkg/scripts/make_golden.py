"""Regenerate the frozen single-seed n=5, Q=12 expansion used by the golden test.

The expansion is cross-checked before it is written: the symbolic residual
must vanish through the certified order, and the Neumann-series inverse of
the result must agree with the adjugate/determinant inverse.
"""
import argparse
import sys
from pathlib import Path

from ale_expand.cli import config_from_dict, dump_json, expansion_document
from ale_expand.metric import metric_inverse, metric_inverse_adjugate, run_bootstrap, symbolic_residual

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

CONFIG = {
    "n": 5,
    "target_order": 12,
    "seeds": {"1": [{"i": 0, "j": 0, "harmonic": [{"exponents": [1, 0, 0, 0, 0], "coeff": "1"}]}]},
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DATA)
    args = ap.parse_args(argv)
    cfg = config_from_dict(CONFIG)
    metric, _ = run_bootstrap(cfg.n, cfg.target_order, cfg.seeds)
    u = metric.matrix()
    n, q = cfg.n, cfg.target_order

    res = symbolic_residual(u, q)
    if any(res[i][j] for i in range(n) for j in range(n)):
        sys.exit("residual does not cancel; refusing to freeze")
    if metric_inverse(u, q) != metric_inverse_adjugate(u, q):
        sys.exit("inverse oracles disagree; refusing to freeze")

    args.out.mkdir(parents=True, exist_ok=True)
    dump_json(CONFIG, args.out / "golden_n5_q12_config.json")
    dump_json(expansion_document(metric, q), args.out / "golden_n5_q12.json")
    print(f"wrote {metric.term_count()} terms to {args.out}")


if __name__ == "__main__":
    main()
