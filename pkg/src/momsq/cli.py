"""Command-line front end: reproducible experiment runs with hashed,
machine-readable reports.

Every report embeds the tool version, the canonical config and its hash, and
a hash of the payload; `momsq replay report.json` verifies integrity and
recomputes a sample of entries.  Exit codes: 0 ok, 1 acceptance-check
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__

SAMPLE_FRACTION = 0.1
REPLAY_TOL = 1e-9


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _hash(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()[:16]


def _out_dir(args) -> Path:
    base = args.out_dir or os.environ.get("MOMSQ_OUT", ".")
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_report(args, kind: str, config: dict, payload: dict,
                 name: str = None) -> Path:
    report = {
        "kind": kind,
        "version": __version__,
        "config": config,
        "config_hash": _hash(config),
        "payload": payload,
        "payload_hash": _hash(payload),
    }
    path = Path(args.out) if args.out else _out_dir(args) / (
        name or f"{kind}_{report['config_hash']}.json")
    path.write_text(json.dumps(report, indent=2, sort_keys=True))
    print(f"wrote {path}")
    return path


def _fail(msg: str, code: int = 2):
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(code)


# ---------------------------------------------------------------------------
# subcommands

def cmd_exponents(args):
    from .exponents import ExponentTable, verify_pprops
    config = {"n_max": args.n_max, "format": args.format}
    table = ExponentTable(args.n_max)
    checks = verify_pprops(args.n_max) if args.n_max >= 2 else []
    rows = [{"n": n, "p": str(p), "p_tilde": pt} for n, p, pt in table.rows()]
    payload = {
        "table": rows,
        "properties": [{"name": c.name, "passed": c.passed,
                        "checked": c.checked,
                        "witnesses": [str(w) for w in c.witnesses]}
                       for c in checks],
    }
    if args.format == "csv":
        path = Path(args.out) if args.out else _out_dir(args) / "exponents.csv"
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["n", "p", "p_tilde"])
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {path}")
    else:
        write_report(args, "exponents", config, payload)
    if any(not c.passed for c in checks):
        raise SystemExit(1)


def cmd_geometry(args):
    from . import geometry as geo
    if args.mode == "census":
        config = {"mode": "census", "n": args.n, "R": args.R}
        mx, hist, pairs = geo.sumset_overlap_census(args.n, args.R)
        payload = {"max_overlap": mx, "pairs": pairs,
                   "histogram": {str(k): v for k, v in hist.items()}}
    elif args.mode == "nesting":
        config = {"mode": "nesting", "n": args.n, "R": args.R, "r": args.r,
                  "samples": args.samples, "seed": args.seed}
        rep = geo.cone_nesting_check(args.n, args.R, args.r,
                                     samples=args.samples, seed=args.seed)
        rep.pop("witnesses", None) if args.brief else None
        payload = json.loads(json.dumps(rep, default=str))
        if rep["m0_violations"]:
            write_report(args, "geometry", config, payload)
            raise SystemExit(1)
    else:   # l2tech
        config = {"mode": "l2tech", "n": args.n, "r": args.r,
                  "lam": args.lam, "trials": args.trials, "seed": args.seed}
        payload = geo.l2tech_overlap_probe(args.n, args.r, args.lam,
                                           trials=args.trials, seed=args.seed)
    write_report(args, "geometry", config, payload)


def cmd_weights(args):
    from .weights import verify_weight_calculus
    config = {"n": args.n, "kappa": args.kappa, "sides": args.sides,
              "halfwidth": args.halfwidth}
    rep = verify_weight_calculus(args.n, kappa=args.kappa, sides=args.sides,
                                 halfwidth=args.halfwidth)
    write_report(args, "weights", config, rep)
    if max(rep["drift"].values()) > 0.10:
        raise SystemExit(1)


def _build_field(n, R, sides, profile, seed):
    from .field import synthesize
    from .geometry import partition_moment
    from .grid import curve_grid, suggested_sides
    part = partition_moment(n, R)
    sides = tuple(sides) if sides else suggested_sides(n, R)
    return synthesize(part, profile, seed=seed, grid=curve_grid(n, sides))


def cmd_ratio_scan(args):
    from .functionals import sq_constant, slope_fit
    config = {"n": args.n, "p": args.p, "R_list": args.R_list,
              "profile": args.profile, "seeds": args.seeds,
              "sides": args.sides}
    rows = []
    means = []
    for R in args.R_list:
        vals = []
        for seed in range(args.seeds):
            f = _build_field(args.n, R, args.sides, args.profile, seed)
            ratio = sq_constant(f, args.p)
            vals.append(ratio)
            rows.append({"R": R, "seed": seed, "ratio": ratio})
        means.append(float(np.mean(vals)))
    payload = {"rows": rows, "means": means,
               "slope": slope_fit(args.R_list, means)
               if len(args.R_list) > 1 else None}
    if args.csv:
        path = Path(args.csv)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["R", "seed", "ratio"])
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {path}")
    if args.svg:
        _plot_svg(args.svg, args.R_list, means,
                  f"n={args.n} p={args.p} {args.profile}")
    write_report(args, "ratio-scan", config, payload)


def cmd_optimize(args):
    from .functionals import maximize_ratio
    config = {"n": args.n, "p": args.p, "R": args.R, "budget": args.budget,
              "seed": args.seed, "sides": args.sides}
    f = _build_field(args.n, args.R, args.sides, "random-phase", args.seed)
    res = maximize_ratio(f, args.p, budget=args.budget, seed=args.seed)
    payload = {"ratio": res.ratio, "converged": res.converged,
               "iterations": len(res.trace), "trace": res.trace}
    write_report(args, "optimize", config, payload)


def cmd_highlow(args):
    from .field import synthesize
    from .geometry import partition_moment
    from .grid import curve_grid, suggested_sides
    from .highlow import (build_ladder, important_sets, low_lemma_ratio,
                          prune, unwind_cascade)
    config = {"n": args.n, "R": args.R, "epsilon": args.epsilon, "p": args.p,
              "profile": args.profile, "seed": args.seed, "sides": args.sides}
    sides = tuple(args.sides) if args.sides else suggested_sides(args.n, args.R)
    grid = curve_grid(args.n, sides)
    f = synthesize(partition_moment(args.n, args.R), args.profile,
                   seed=args.seed, grid=grid)
    ladder = build_ladder(args.n, args.R, args.epsilon, K=args.K)
    fa = np.abs(f.spatial())
    alpha = 0.3 * fa.max()
    probe = prune(f, ladder, alpha=alpha, beta=fa.max() ** 2, A=10.0)
    dtilde = max(low_lemma_ratio(probe, k) for k in range(ladder.N))
    A = 10.0 * dtilde
    h = probe.g(ladder.N, kappa=ladder.kappa_target)
    beta = float(np.exp(np.median(np.log(np.maximum(h[fa >= alpha], 1e-300)))))
    state = prune(f, ladder, alpha=alpha, beta=beta, A=A)
    sets = important_sets(state)
    trace = unwind_cascade(state, ladder.N0, args.p, step_cap=args.step_cap)
    payload = {
        "ladder": {"R_k": list(ladder.R_k),
                   "widths": [ladder.width(k) for k in range(ladder.N + 1)]},
        "alpha": alpha, "beta": beta, "A": A, "measured_low_constant": dtilde,
        "set_sizes": {"U": int(sets.U.sum()),
                      "omegas": {str(k): int(v.sum())
                                 for k, v in sets.omegas.items()},
                      "L": int(sets.L.sum())},
        "cascade": {"steps": trace.as_records(),
                    "final_constant": trace.final_constant,
                    "terminated": trace.terminated,
                    "guard_triggered": trace.guard_triggered},
    }
    write_report(args, "highlow", config, payload)
    if trace.guard_triggered:
        raise SystemExit(1)


def cmd_certify(args):
    from . import certify as ct
    if args.mode == "snmm":
        config = {"mode": "snmm", "epsilon": args.epsilon, "n": args.n,
                  "C1": args.C1, "C2": args.C2}
        ok, log2k, wit = ct.snmm_halting_check(
            ct.RecursionConfig(epsilon=args.epsilon, n=args.n,
                               C1=args.C1, C2=args.C2))
        payload = {"passed": ok, "log2_K_min": log2k,
                   "witnesses": [list(w) for w in wit]}
        write_report(args, "certify", config, payload)
        if not ok:
            raise SystemExit(1)
    elif args.mode == "s1bd":
        config = {"mode": "s1bd", "eta": args.eta}
        payload = ct.s1bd_closure_check(args.eta)
        write_report(args, "certify", config, payload)
        if not payload.get("feasible"):
            raise SystemExit(1)
    elif args.mode == "fixed-point":
        config = {"mode": "fixed-point", "epsilon": args.epsilon,
                  "delta": args.delta}
        payload = ct.multiscale_fixed_point(args.epsilon, delta=args.delta)
        payload["trajectory"] = payload["trajectory"][-10:]
        write_report(args, "certify", config, payload)
    else:   # ingredients
        config = {"mode": "ingredients", "epsilon": args.epsilon,
                  "base": args.base, "progress": args.progress,
                  "levels": args.levels}
        payload = ct.ingredient_composition_check(
            args.base, args.progress, args.levels, epsilon=args.epsilon)
        write_report(args, "certify", config, payload)
        if not payload["bounded"]:
            raise SystemExit(1)


# ---------------------------------------------------------------------------
# replay

def _replay_exponents(report, rng):
    from .exponents import critical_exponent, even_exponent
    rows = report["payload"]["table"]
    sample = rng.choice(len(rows), max(1, int(SAMPLE_FRACTION * len(rows))),
                        replace=False)
    for i in sample:
        row = rows[int(i)]
        if str(critical_exponent(row["n"])) != row["p"] or \
                even_exponent(row["n"]) != row["p_tilde"]:
            return False, f"table row n={row['n']}"
    return True, None


def _replay_ratio_scan(report, rng):
    from .functionals import sq_constant
    cfg = report["config"]
    rows = report["payload"]["rows"]
    sample = rng.choice(len(rows), max(1, int(SAMPLE_FRACTION * len(rows))),
                        replace=False)
    for i in sample:
        row = rows[int(i)]
        f = _build_field(cfg["n"], row["R"], cfg.get("sides"),
                         cfg["profile"], row["seed"])
        if abs(sq_constant(f, cfg["p"]) - row["ratio"]) > REPLAY_TOL:
            return False, f"row R={row['R']} seed={row['seed']}"
    return True, None


def _replay_certify(report, rng):
    from . import certify as ct
    cfg = report["config"]
    if cfg.get("mode") != "snmm":
        return True, None
    wit = report["payload"]["witnesses"]
    sample = rng.choice(len(wit), max(1, int(SAMPLE_FRACTION * len(wit))),
                        replace=False)
    rcfg = ct.RecursionConfig(epsilon=cfg["epsilon"], n=cfg["n"],
                              C1=cfg["C1"], C2=cfg["C2"])
    for i in sample:
        k, logk, val = wit[int(i)]
        if abs(ct._halting_log_value(rcfg, logk, int(k)) - val) > REPLAY_TOL:
            return False, f"witness k={k}"
    return True, None


def _replay_geometry(report, rng):
    from . import geometry as geo
    cfg = report["config"]
    if cfg.get("mode") != "census":
        return True, None
    mx, hist, pairs = geo.sumset_overlap_census(cfg["n"], cfg["R"])
    pl = report["payload"]
    if mx != pl["max_overlap"] or pairs != pl["pairs"]:
        return False, "census totals"
    return True, None


RECOMPUTE = {
    "exponents": _replay_exponents,
    "ratio-scan": _replay_ratio_scan,
    "certify": _replay_certify,
    "geometry": _replay_geometry,
}


def cmd_replay(args):
    path = Path(args.report)
    if not path.exists():
        _fail(f"no such report: {path}")
    report = json.loads(path.read_text())
    for section in ("config", "payload"):
        want = report.get(f"{section}_hash")
        got = _hash(report.get(section))
        if want != got:
            print(f"FAIL: {section} hash mismatch in {path} "
                  f"(stored {want}, recomputed {got})")
            raise SystemExit(1)
    handler = RECOMPUTE.get(report.get("kind"))
    if handler is not None:
        rng = np.random.default_rng(0)
        ok, where = handler(report, rng)
        if not ok:
            print(f"FAIL: recomputation mismatch at {where}")
            raise SystemExit(1)
        print(f"pass: hashes verified, sampled entries recomputed "
              f"({report['kind']})")
    else:
        print("pass: hashes verified (no recompute handler for "
              f"{report.get('kind')})")


def _plot_svg(path, R_values, ratios, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(np.log2(R_values), np.log(ratios), "o-")
    ax.set_xlabel("log2 R")
    ax.set_ylabel("log ratio")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    print(f"wrote {path}")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="momsq")
    ap.add_argument("--out", help="explicit output path for the report")
    ap.add_argument("--out-dir", help="output directory (default $MOMSQ_OUT "
                                      "or cwd)")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker count; 1 guarantees bit-exact reproducibility"
                         " (computation is single-process either way)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("geometry")
    p.add_argument("mode", choices=("census", "nesting", "l2tech"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=float, default=64)
    p.add_argument("--r", type=float, default=16)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--brief", action="store_true")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("weights")
    p.add_argument("mode", choices=("verify",))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--sides", type=int, default=64)
    p.add_argument("--halfwidth", type=float, default=16.0)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("ratio-scan")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--R-list", type=lambda s: [int(x) for x in s.split(",")],
                   required=True)
    p.add_argument("--profile", default="random-phase")
    p.add_argument("--seeds", type=int, default=8)
    p.add_argument("--sides", type=lambda s: [int(x) for x in s.split(",")],
                   default=None)
    p.add_argument("--csv", help="also write the sweep table as CSV")
    p.add_argument("--svg", help="also write a log-log SVG plot")
    p.set_defaults(func=cmd_ratio_scan)

    p = sub.add_parser("optimize")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--budget", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sides", type=lambda s: [int(x) for x in s.split(",")],
                   default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("highlow")
    p.add_argument("mode", choices=("run",))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--K", type=float, default=4.0)
    p.add_argument("--profile", default="random-phase")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-cap", type=int, default=64)
    p.add_argument("--sides", type=lambda s: [int(x) for x in s.split(",")],
                   default=None)
    p.set_defaults(func=cmd_highlow)

    p = sub.add_parser("certify")
    p.add_argument("mode", choices=("snmm", "s1bd", "fixed-point",
                                    "ingredients"))
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--C1", type=float, default=2.0)
    p.add_argument("--C2", type=float, default=2.0)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--base", type=float, default=2.0)
    p.add_argument("--progress", type=float, default=2.0)
    p.add_argument("--levels", type=int, default=30)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("replay")
    p.add_argument("report")
    p.set_defaults(func=cmd_replay)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, ZeroDivisionError) as exc:
        _fail(str(exc))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
