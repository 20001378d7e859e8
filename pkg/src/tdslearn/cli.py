"""Command line entry point: ``run``, ``gen-hard`` and ``verify``.

Exit codes: 0 success, 1 contract violation (or failed re-verification),
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, TdsError
from .gaussian import SeededSampler, gaussian_moment_1d
from .hard_instances import (build_hard_instance_1d, build_mass_relocated_1d, exact_moment_match_lp_full,
                             perturbed_quadrature)
from .harness import load_config, run_scenario, verify_records, write_records

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
HARD_KINDS = ("mass-relocated", "lp-moment-match")

log = logging.getLogger("tdslearn")


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seeds([args.seed])

    def progress(r):
        err = "" if r["holdout_error"] is None else f" err={r['holdout_error']:.4f}"
        log.info("%s seed=%d %s%s%s", cfg.name, r["seed"], r["verdict"],
                 f"({r['reason']})" if r["reason"] else "", err)

    records = run_scenario(cfg, workers=args.workers, progress=progress)
    summary = write_records(args.out, cfg, records)
    print(json.dumps({key: v for key, v in summary.items() if key != "type"}, sort_keys=True))
    return EXIT_OK


def _cmd_gen_hard(args) -> int:
    seed = 0 if args.seed is None else args.seed
    s = SeededSampler(seed, (0,))
    if args.kind == "mass-relocated":
        mr = build_mass_relocated_1d(args.eps)
        inst = build_hard_instance_1d(args.eps, args.K, s, K_cap=args.K_cap)
        rec = {"kind": args.kind, "seed": seed, "tau": mr.tau, "k0_raw": mr.k0_raw,
               "continuous_tail_mass": mr.tail_mass(), **inst.to_record()}
        ok = inst.tail_mass >= 12.0 * args.eps
    else:
        # quadrature nodes jittered in proportion to eps, then matched exactly
        D0 = perturbed_quadrature(args.nodes, s, node_noise=args.eps / 100.0)
        res = exact_moment_match_lp_full(D0, args.degree)
        D1 = res.dist
        errs = [abs(D1.moment(i) - gaussian_moment_1d(i)) for i in range(args.degree + 1)]
        rec = {"kind": args.kind, "seed": seed, "eps": args.eps, "degree": args.degree,
               "dist": D1.to_record(), "mu": res.mu.tolist(), "moment_errors": errs,
               "min_mu": float(res.mu.min())}
        ok = max(errs) <= 1e-8 and res.mu.min() >= 0.9 - 1e-9
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(rec, sort_keys=True) + "\n")
    print(f"{args.kind}: wrote {args.out} ({'verified' if ok else 'FAILED re-verification'})")
    return EXIT_OK if ok else EXIT_VIOLATION


def _cmd_verify(args) -> int:
    report = verify_records(args.records)
    for v in report.violations:
        print(f"VIOLATION {v}")
    print(f"checked {report.n_checked} accepted of {report.n_records} records: "
          f"{'ok' if report.ok else f'{len(report.violations)} violation(s)'}")
    return EXIT_OK if report.ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdslearn", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None, help="run a single seed instead of the config's list")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario config across seeds")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=_cmd_run)

    g = sub.add_parser("gen-hard", help="build and re-verify a hard 1-D instance")
    g.add_argument("--kind", required=True, choices=HARD_KINDS)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--K", type=int, default=1_000_000, help="discretization size (mass-relocated)")
    g.add_argument("--K-cap", type=int, default=16_000_000)
    g.add_argument("--degree", type=int, default=8, help="matched degree (lp-moment-match)")
    g.add_argument("--nodes", type=int, default=10, help="quadrature nodes (lp-moment-match)")
    g.set_defaults(func=_cmd_gen_hard)

    v = sub.add_parser("verify", help="re-check the soundness contract on a records file")
    v.add_argument("--records", required=True)
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TdsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
