"""Command line: ``run``, ``sweep``, ``mms``, ``oracle`` and ``check``.

Exit codes: 0 when every executed check passed, 1 when a check failed,
2 for usage or configuration errors and aborted runs.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import _kernels as K
from .config import DEMOS, RunConfig, demo_config, load_config, parse_config, validate
from .diagnostics import AuditTolerances, audit
from .errors import ConfigError, FluxlimError
from .integrator import RunAborted, run
from .output import read_diag_csv, write_diag_csv, write_snapshot

log = logging.getLogger("fluxlim")


def _load(spec: str) -> RunConfig:
    if spec in DEMOS:
        return parse_config(demo_config(spec))
    return load_config(spec)


def execute(cfg: RunConfig, out_dir: Path | None = None, quiet: bool = False) -> tuple[int, dict]:
    """Run ``cfg`` and write its outputs; returns ``(exit code, summary)``."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    v = validate(cfg)
    for w in v.warnings:
        log.warning(w)
        if not quiet:
            print(f"warning: {w}", file=sys.stderr)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    snap_dir = out / "snapshots"
    counter = [0]

    def on_snapshot(state):
        write_snapshot(state, snap_dir, counter[0], cfg.snapshot_format)
        counter[0] += 1

    meta = {"volume": cfg.grid.volume, "eps_conv": cfg.audit.eps_conv}
    summary = {"theta": cfg.limiter.theta}
    try:
        res = run(
            v.state, cfg.scheme, cfg.limiter, cfg.phi, cfg.t_end,
            record_every=cfg.record_every, snapshot_every=cfg.snapshot_every,
            guard=cfg.guard, on_snapshot=on_snapshot if cfg.snapshot_every else None,
        )
    except RunAborted as exc:
        meta.update({"status": "aborted"})
        write_diag_csv(exc.records, out / "diag.csv", meta)
        reason = f"{type(exc.cause).__name__}: {exc.cause}"
        (out / "dump.txt").write_text(
            f"run aborted at t={exc.state.t!r}\n{reason}\n"
            f"max n = {float(exc.state.n.values.max())!r}\nmin n = {float(exc.state.n.values.min())!r}\n"
        )
        if not quiet:
            print(f"aborted: {reason}", file=sys.stderr)
        summary.update({"status": "aborted", "reason": str(exc.cause), "records": exc.records})
        return 2, summary
    n_inf, m_inf = res.targets
    meta.update({"n_inf": n_inf, "m_inf": m_inf})
    write_diag_csv(res.records, out / "diag.csv", meta)
    report = audit(res.records, cfg.audit, res.targets)
    (out / "audit.json").write_text(report.to_json() + "\n")
    (out / "audit.txt").write_text(report.to_text())
    if not quiet:
        print(report.to_text(), end="")
        print(f"{res.steps} steps, outputs in {out}")
    summary.update({"status": "ok" if report.passed else "failed", "report": report, "records": res.records})
    return (0 if report.passed else 1), summary


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.t_end is not None:
        d = cfg.to_dict()
        d["t_end"] = args.t_end
        cfg = parse_config(d, cfg.base_dir)
    code, _ = execute(cfg, args.output_dir)
    return code


def _parse_list(text: str, conv=float) -> list:
    items = [s for s in (text or "").split(",") if s.strip()]
    return [conv(s) for s in items]


def cmd_sweep(args) -> int:
    thetas = _parse_list(args.theta)
    if not thetas:
        print("usage error: --theta needs at least one value", file=sys.stderr)
        return 2
    base = _load(args.config)
    root = Path(args.output_dir or base.output_dir)
    rows = []
    ok = True
    for theta in thetas:
        cfg = base.with_theta(theta)
        try:
            code, summary = execute(cfg, root / f"theta_{theta:g}", quiet=True)
        except (ConfigError, FluxlimError) as exc:
            code, summary = 2, {"records": []}
            print(f"theta={theta:g}: {exc}", file=sys.stderr)
        recs = summary.get("records") or []
        final = recs[-1] if recs else None
        row = {
            "theta": theta,
            "sup_linf_n": max((r.linf_n for r in recs), default=math.nan),
            "dist_n": final.dist_n if final else math.nan,
            "dist_c": final.dist_c if final else math.nan,
            "dist_m": final.dist_m if final else math.nan,
            "dist_u": final.dist_u if final else math.nan,
            "all_pass": code == 0,
        }
        rows.append(row)
        ok &= code == 0
        print(f"theta={theta:g}: {'pass' if code == 0 else 'FAIL'}  sup|n|={row['sup_linf_n']:.6g}")
    with open(root / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return 0 if ok else 1


def cmd_mms(args) -> int:
    from .oracles import mms_cases, mms_study, write_error_csv

    cases = mms_cases()
    if args.case not in cases:
        print(f"unknown case {args.case!r}; known: {', '.join(cases)}", file=sys.stderr)
        return 2
    grids = _parse_list(args.grids, int) or [32, 64, 128]
    study = mms_study(args.case, grids)
    out = Path(args.output_dir or "out/mms")
    out.mkdir(parents=True, exist_ok=True)
    write_error_csv(study.rows, out / f"{args.case}.csv")
    for r in study.rows:
        print(f"h={r.h:.5g} dt={r.dt:.3g} {r.field} {r.norm} {r.error:.6e}")
    for (f, nrm), order in study.orders.items():
        print(f"observed order {f} {nrm}: {order:.3f}")
    status = "pass" if study.passed else "FAIL"
    print(f"{args.case}: {status} (threshold {study.threshold})")
    return 0 if study.passed else 1


def cmd_oracle(args) -> int:
    from . import oracles

    if args.case not in oracles.ORACLE_CASES:
        print(f"unknown case {args.case!r}; known: {', '.join(oracles.ORACLE_CASES)}", file=sys.stderr)
        return 2
    if args.case == "homogeneous":
        data = (2.0, 0.5, 1.0)  # (n0, c0, m0)
        n0, c0, m0 = data
        exact = oracles.homogeneous_exact(n0, m0, c0, 1.0)
        _, ys = oracles.ode_reference(n0, m0, c0, 1.0, 1e-5)
        rk4 = tuple(ys[-1])
        pde = oracles.homogeneous_pde(n0, m0, c0, 1.0, 1e-4)
        print(f"{'field':<6}{'closed form':>22}{'RK4':>22}{'PDE':>22}")
        ok = True
        for i, name in enumerate("ncm"):
            print(f"{name:<6}{exact[i]:>22.15f}{rk4[i]:>22.15f}{pde[i]:>22.15f}")
            ok &= abs(rk4[i] - exact[i]) <= 1e-9 and abs(pde[i] - exact[i]) <= 1e-5
        print("pass" if ok else "FAIL")
        return 0 if ok else 1
    res = oracles.poiseuille_study(_parse_list(args.grids, int) or [16, 32, 64])
    ok = True
    for (N, e), nxt in zip(res, res[1:] + [None]):
        ratio = e / nxt[1] if nxt else math.nan
        print(f"N={N:<5d} sup error {e:.6e}" + (f"  ratio {ratio:.3f}" if nxt else ""))
        if nxt:
            ok &= ratio >= 3.5
    print("pass" if ok else "FAIL")
    return 0 if ok else 1


def cmd_check(args) -> int:
    records, meta = read_diag_csv(args.diag)
    if args.tolerances:
        tol = AuditTolerances.from_dict(json.loads(Path(args.tolerances).read_text()))
    else:
        # default to the convergence tolerance the run was audited with
        tol = AuditTolerances(eps_conv=float(meta.get("eps_conv", AuditTolerances.eps_conv)))
    report = audit(records, tol)
    print(report.to_text(), end="")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluxlim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--backend", choices=("cython", "numpy"), help="kernel back end")
    p.add_argument("--threads", type=int, help="OpenMP threads for compiled kernels")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config file or a built-in demo")
    r.add_argument("config", help=f"JSON config or one of {', '.join(DEMOS)}")
    r.add_argument("--output-dir")
    r.add_argument("--t-end", type=float)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="repeat a run over limiter exponents")
    s.add_argument("config")
    s.add_argument("--theta", required=True, help="comma separated, e.g. 0.1,0.5,1")
    s.add_argument("--output-dir")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("mms", help="manufactured-solution order study")
    m.add_argument("case")
    m.add_argument("--grids", default="32,64,128")
    m.add_argument("--output-dir")
    m.set_defaults(func=cmd_mms)

    o = sub.add_parser("oracle", help="reference comparisons (homogeneous, poiseuille)")
    o.add_argument("case")
    o.add_argument("--grids", default="")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("check", help="re-audit an existing diag.csv")
    c.add_argument("diag")
    c.add_argument("tolerances", nargs="?")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.backend:
        K.set_backend(args.backend)
    if args.threads:
        K.set_threads(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except (FluxlimError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
