"""``greenlab`` command line: check-operator, build-green, verify, report."""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy

from .. import __version__
from ..errors import ConfigError, GreenLabError
from ..fem import check_coercivity, export_field
from ..green import build_averaged_green, get_system, load_green, save_green
from ..operator import validate_spec, vmo_modulus
from ..verify.report import CheckResult, EstimateReport, bound_check, failed_check, load_report
from ..verify.suites import SUITES, suite_members
from .config import load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _ensure_writable(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out_dir):
            pass
    except OSError as exc:
        raise ConfigError("--out", f"output directory {out_dir!r} is not writable: {exc.strerror}") from None


def _provenance(cfg, command):
    return {"command": command, "config": cfg.as_dict(), "version": __version__,
            "seeds": dict(cfg.seeds), "grid": {"box": cfg.box, "cells": list(cfg.cells)}}


def _write_manifest(out_dir, cfg, command, timings, written, extra=None):
    manifest = {
        "command": command, "config": cfg.as_dict(), "version": __version__, "seeds": dict(cfg.seeds),
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
        "files": sorted(os.path.relpath(p, out_dir) for p in written),
        "environment": {"python": platform.python_version(), "numpy": np.__version__,
                        "scipy": scipy.__version__},
    }
    manifest.update(extra or {})
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _print_checks(report, stream=None):
    stream = sys.stdout if stream is None else stream
    for cid, c in sorted(report.checks.items()):
        val = "error" if c.value is None else f"{c.value:.4g}"
        print(f"{'PASS' if c.passed else 'FAIL'}  {cid:34s} {val:>10s}  {c.reference}", file=stream)
    print(f"{sum(c.passed for c in report.checks.values())}/{len(report.checks)} checks passed", file=stream)


def _context(cfg):
    ctx = cfg.context()
    if cfg.green["load"]:
        G = load_green(cfg.green["load"], ctx.spec, ctx.mask)
        ctx.pole = G.pole
        ctx._memo[("green", False)] = G
    return ctx


def cmd_verify(cfg, out_dir, threads):
    _ensure_writable(out_dir)
    ctx = _context(cfg)
    members = suite_members(cfg.suite)
    timings = {}

    def run(name):
        t0 = time.perf_counter()
        checks = SUITES[name](ctx)
        timings[name] = time.perf_counter() - t0
        return checks

    if threads > 1 and len(members) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, members))
    else:
        results = [run(m) for m in members]
    report = EstimateReport(provenance=_provenance(cfg, "verify"))
    for checks in results:
        report.extend(checks)
    written = report.write(out_dir, cfg.output["formats"])
    if cfg.output["fields"] and ("green", False) in ctx._memo:
        written.append(save_green(ctx._memo[("green", False)], os.path.join(out_dir, "fields")))
    written.append(_write_manifest(out_dir, cfg, "verify", timings, written))
    _print_checks(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_check_operator(cfg, out_dir, threads):
    _ensure_writable(out_dir)
    t0 = time.perf_counter()
    spec = cfg.build_spec()
    mask = cfg.build_mask()
    report = EstimateReport(provenance=_provenance(cfg, "check-operator"))
    ref = "Legendre ellipticity lambda|xi|^2 <= A xi . xi and |A| <= Lambda at sampled cell centres"
    try:
        lam, Lam = validate_spec(spec, mask.grid.cell_centers().reshape(-1, 3))
        report.add(CheckResult("operator.ellipticity", ref, lam, lam > 0, spec.lam, None, "lower-bound",
                               details={"claimed_lambda": spec.lam, "claimed_Lambda": spec.Lam,
                                        "observed_Lambda": Lam}))
    except GreenLabError as exc:
        report.add(failed_check("operator.ellipticity", ref, exc))
    ref_c = "coercivity B(u,u) >= lambda ||Du||^2 of the discrete form"
    try:
        cc = check_coercivity(get_system(spec, mask), seed=cfg.seeds["sampling"] or 0)
        report.add(bound_check("operator.coercivity", ref_c, cc.ratio_min, cc.lam, upper=False,
                               details={"samples": cc.samples}))
    except GreenLabError as exc:
        report.add(failed_check("operator.coercivity", ref_c, exc))
    if not spec.constant:
        h = float(np.max(mask.grid.h))
        rng = np.random.default_rng(cfg.seeds["sampling"] or 0)
        g = mask.grid
        centers = rng.uniform(np.asarray(g.lo) + 0.25 * np.asarray(g.extent),
                              np.asarray(g.hi) - 0.25 * np.asarray(g.extent), size=(16, 3))
        mods = {}
        for d in (2 * h, 4 * h, 8 * h):
            mods[f"{d:.6g}"] = vmo_modulus(spec.sample, d, centers, [d / 2, d], h=h / 2).value
        report.add(CheckResult("operator.vmo_modulus", "mean-oscillation modulus M_delta (diagnostic only)",
                               max(mods.values()), True, kind="diagnostic", details={"M_delta": mods}))
    written = report.write(out_dir, cfg.output["formats"])
    written.append(_write_manifest(out_dir, cfg, "check-operator", {"total": time.perf_counter() - t0}, written))
    _print_checks(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_build_green(cfg, out_dir, threads):
    _ensure_writable(out_dir)
    t0 = time.perf_counter()
    ctx = cfg.context()
    G = build_averaged_green(ctx.spec, ctx.mask, ctx.center, ctx.rho, ctx.settings, ctx.exterior_levels)
    fields_dir = os.path.join(out_dir, "fields")
    written = [save_green(G, fields_dir)]
    if cfg.output["fields"]:
        for k, col in enumerate(G.columns):
            export_field(col, os.path.join(fields_dir, f"column_{k}"))
    extra = {"green": {"pole": list(G.pole), "rho": G.rho, "spec_id": G.spec_id, "mask_id": G.mask_id,
                       "energy": G.info.get("energy"), "dump": os.path.relpath(fields_dir, out_dir)}}
    written.append(_write_manifest(out_dir, cfg, "build-green", {"total": time.perf_counter() - t0},
                                   written, extra))
    print(f"averaged Green matrix with pole {G.pole} written to {fields_dir}")
    return EXIT_OK


def cmd_report(args):
    path = args.out if args.out else "."
    if os.path.isdir(path):
        path = os.path.join(path, "report.json")
    try:
        data = load_report(path)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read report {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    checks = data.get("checks", {})
    for cid, c in sorted(checks.items()):
        val = "error" if c.get("value") is None else f"{c['value']:.4g}"
        print(f"{'PASS' if c.get('pass') else 'FAIL'}  {cid:34s} {val:>10s}  {c.get('reference', '')}")
    print(f"{sum(bool(c.get('pass')) for c in checks.values())}/{len(checks)} checks passed")
    return EXIT_OK if data.get("all_pass") else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "check-operator": cmd_check_operator, "build-green": cmd_build_green}


def build_parser():
    p = argparse.ArgumentParser(prog="greenlab", description="Averaged Green matrices of elliptic systems "
                                "and empirical checks of their estimates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("check-operator", "validate coefficients, ellipticity and coercivity"),
                           ("build-green", "build and dump an averaged Green matrix"),
                           ("verify", "run a verification suite"),
                           ("report", "summarise an existing report")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=name != "report", help="TOML experiment file")
        sp.add_argument("--out", help="output directory (defaults to output.dir of the config)")
        if name != "report":
            sp.add_argument("--threads", type=int, default=1, help="worker threads for independent suites")
            sp.add_argument("--seed", type=int, help="override every seed of the config")
            sp.add_argument("--suite", help="override the suite of the config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return cmd_report(args)
    try:
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        cfg = load_config(args.config, suite=args.suite, seed=args.seed)
        out_dir = args.out or cfg.output["dir"]
        return COMMANDS[args.command](cfg, out_dir, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GreenLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
