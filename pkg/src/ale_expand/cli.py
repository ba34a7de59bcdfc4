"""Command-line front end: ``expand``, ``verify`` and ``kelvin``.

Exit codes: 0 when every reported invariant holds, 1 when one fails, 2 for
invalid input.
"""
import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .metric import (
    BootstrapError,
    MetricExpansion,
    SeedData,
    early_terms_harmonic,
    gauge_residual,
    is_symmetric,
    run_bootstrap,
    symbolic_residual,
)
from .poly import HarmonicPoly, Poly
from .terms import leading_order, membership_T, membership_Ttilde
from .verify import KelvinError, SamplePlan, kelvin_metric, sample_proxy

DEFAULT_LOG_DEPTH = 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class VerifyConfig:
    plan: SamplePlan = field(default_factory=SamplePlan)
    slope_tolerance: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    n: int
    target_order: int
    seeds: SeedData
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    log_depth: int = DEFAULT_LOG_DEPTH


def _parse_seeds(n, raw):
    levels = {}
    for key, entries in (raw or {}).items():
        try:
            k = int(key)
        except ValueError as exc:
            raise ConfigError(f"seed level {key!r} is not an integer") from exc
        if k < 1:
            raise ConfigError(f"seed level {k} must be at least 1")
        lvl = {}
        for e in entries:
            i, j = int(e["i"]), int(e["j"])
            if not 0 <= i <= j < n:
                raise ConfigError(f"seed entry ({i},{j}) must satisfy 0 <= i <= j < {n}")
            if (i, j) in lvl:
                raise ConfigError(f"duplicate seed entry ({i},{j}) at level {k}")
            p = Poly.from_json(n, e["harmonic"])
            if not p:
                continue
            if not p.is_homogeneous(k):
                raise ConfigError(f"seed ({i},{j}) at level {k} is not homogeneous of degree {k}")
            if p.laplacian():
                raise ConfigError(f"seed ({i},{j}) at level {k} is not harmonic")
            lvl[(i, j)] = HarmonicPoly(p, k)
        levels[k] = lvl
    return SeedData(n, levels)


def max_log_power(n, order):
    """Largest log power the n = 4 term set allows at order -``order``."""
    # sigma = -2l - k with l >= 1 and k >= l + i gives i <= order - 3
    return max(order - 3, 0) if n == 4 else 0


def config_from_dict(data):
    try:
        n = int(data["n"])
        q = int(data["target_order"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"config needs integer 'n' and 'target_order': {exc}") from exc
    if n < 4:
        raise ConfigError("n must be at least 4")
    if q < n - 1:
        raise ConfigError(f"target_order must be at least n-1 = {n - 1}")
    log_depth = int(data.get("log_depth", DEFAULT_LOG_DEPTH))
    if n == 4 and max_log_power(n, q) > log_depth:
        raise ConfigError(f"target_order {q} admits log powers up to {max_log_power(n, q)}, "
                          f"above the log-depth guard {log_depth}; raise 'log_depth' to allow it")
    try:
        seeds = _parse_seeds(n, data.get("seeds"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid seed: {exc}") from exc
    v = data.get("verify") or {}
    try:
        plan = SamplePlan(**{k: v[k] for k in ("radii", "directions", "fd_ratio") if k in v})
    except ValueError as exc:
        raise ConfigError(f"invalid verify plan: {exc}") from exc
    return RunConfig(n, q, seeds, VerifyConfig(plan, float(v.get("slope_tolerance", 0.1))), log_depth)


def parse_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(data)


# -- file formats ------------------------------------------------------------------

def expansion_document(metric, order):
    return {"n": metric.dim, "order": order, "entries": metric.to_json()}


def read_expansion(path):
    try:
        data = json.loads(Path(path).read_text())
        return MetricExpansion.from_json(int(data["n"]), data["entries"]), int(data["order"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read expansion {path}: {exc}") from exc


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def _lead(e):
    lo = leading_order(e)
    return None if lo is None else list(lo)


def build_report(metric, order, log, timing=False):
    """Invariant checks and diagnostics for a finished expansion."""
    n = metric.dim
    u = metric.matrix()
    res = symbolic_residual(u, order)
    gauge = gauge_residual(u, order)
    terms = list(metric.all_terms())

    if n > 4:
        member = all(membership_T(t, n) is not None for _, t in terms)
    else:
        member = all(membership_Ttilde(t) is not None for _, t in terms)
    inventory = {}
    for _, t in terms:
        if t.logpow:
            inventory[(t.sigma, t.logpow)] = inventory.get((t.sigma, t.logpow), 0) + 1
    invariants = {
        "residual_cancels": all(not res[i][j] for i in range(n) for j in range(i, n)),
        "symmetric": is_symmetric(u) and is_symmetric(res),
        "decay": all(t.sigma <= 1 - n for _, t in terms),
        "early_terms_harmonic": early_terms_harmonic(metric),
        "term_set_membership": member,
    }
    if n > 4:
        invariants["log_free"] = not inventory
        invariants["no_exceptional_solves"] = all(s["exceptional_terms"] == 0 for s in log)
    stages = [{k: (v if k != "wall_ms" or timing else None) for k, v in s.items()} for s in log]
    return {
        "n": n,
        "Q": order,
        "stages": stages,
        "residual_checked_through": -(order + 2),
        "residual_leading_order": [{"i": i, "j": j, "leading": _lead(res[i][j])}
                                   for i in range(n) for j in range(i, n)],
        "gauge_leading_order": [{"k": k, "leading": _lead(g)} for k, g in enumerate(gauge)],
        "log_terms": [{"sigma": s, "logpow": i, "count": c} for (s, i), c in sorted(inventory.items(), reverse=True)],
        "invariants": invariants,
    }


# -- commands ----------------------------------------------------------------------

def cmd_expand(args):
    cfg = parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    log_depth = cfg.log_depth if cfg.n == 4 else None
    try:
        metric, log = run_bootstrap(cfg.n, cfg.target_order, cfg.seeds, log_depth=log_depth)
    except BootstrapError as exc:
        print(f"expand failed: {exc}", file=sys.stderr)
        return 1
    report = build_report(metric, cfg.target_order, log, timing=args.timing)
    if args.timing:
        report["total_ms"] = (time.perf_counter() - t0) * 1e3
    dump_json(expansion_document(metric, cfg.target_order), out / "expansion.json")
    dump_json(report, out / "report.json")
    failed = [k for k, ok in report["invariants"].items() if not ok]
    if failed:
        print(f"invariants failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print(f"n={cfg.n} Q={cfg.target_order}: {metric.term_count()} terms, all invariants hold -> {out}")
    return 0


def cmd_verify(args):
    cfg = parse_config(args.config)
    metric, order = read_expansion(args.expansion)
    if metric.dim != cfg.n:
        raise ConfigError(f"expansion has n={metric.dim}, config has n={cfg.n}")
    samples = sample_proxy(metric, cfg.verify.plan)
    bound = -(order + 2) + cfg.verify.slope_tolerance
    slope = samples.slope
    ok_slope = slope.within(bound)
    summary = {
        "n": metric.dim,
        "order": order,
        "slope": slope.slope if slope.slope is not None else slope.status,
        "per_direction": list(slope.per_direction),
        "bound": bound,
        "fd_max_relative_error": samples.fd_error,
        "passed": ok_slope and samples.fd_ok,
    }
    out = Path(args.out) if args.out else Path(args.expansion).parent
    out.mkdir(parents=True, exist_ok=True)
    samples.write_csv(out / "samples.csv")
    dump_json(summary, out / "slopes.json")
    if slope.slope is None:
        print(f"slope: {slope.status}")
    else:
        print(f"slope {slope.slope:.4f} (bound {bound:.2f})")
    if not ok_slope:
        worst = max((s, k) for k, s in enumerate(slope.per_direction) if s is not None)
        print(f"slope violation: direction {worst[1]} has slope {worst[0]:.4f} > {bound:.2f}", file=sys.stderr)
        return 1
    if not samples.fd_ok:
        print(f"finite-difference cross-check failed: {samples.fd_error:.3g}", file=sys.stderr)
        return 1
    return 0


def cmd_kelvin(args):
    metric, _ = read_expansion(args.expansion)
    if metric.dim != args.n:
        raise ConfigError(f"expansion has n={metric.dim}, --n is {args.n}")
    try:
        img = kelvin_metric(metric, args.n)
    except KelvinError as exc:
        print(f"kelvin rejected: {exc}", file=sys.stderr)
        return 2
    doc = img.to_json()
    if args.out:
        dump_json(doc, args.out)
    else:
        print(json.dumps(doc))
    if not img.is_polynomial:
        print("Kelvin image is not polynomial", file=sys.stderr)
        return 1
    if not img.vanishes_at_origin():
        print("Kelvin polynomial does not vanish at the origin", file=sys.stderr)
        return 1
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ale-expand", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", help="run the bootstrap and write expansion.json and report.json")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--timing", action="store_true", help="record wall-clock times (breaks byte-identical output)")
    e.set_defaults(func=cmd_expand)

    v = sub.add_parser("verify", help="numeric decay check of an expansion")
    v.add_argument("--config", required=True)
    v.add_argument("--expansion", required=True)
    v.add_argument("--out", help="directory for samples.csv and slopes.json (default: next to the expansion)")
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("kelvin", help="Kelvin image of an expansion as exact polynomials")
    k.add_argument("--expansion", required=True)
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--out")
    k.set_defaults(func=cmd_kelvin)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
