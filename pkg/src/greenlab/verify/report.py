"""Check results and their byte-stable JSON / CSV / plot-data serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

SIG_DIGITS = 9


def fmt(x):
    """Round to 9 significant digits; non-finite values become ``None``."""
    if x is None:
        return None
    if isinstance(x, bool):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return x
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if hasattr(obj, "item"):
        obj = obj.item()
    if isinstance(obj, (int, float)):
        return fmt(obj)
    return str(obj)


@dataclass
class CheckResult:
    """One verified claim: a fitted exponent or a ratio compared with a target.

    ``reference`` names the estimate or identity under test in words.
    ``passed`` is decided by the producer; fits additionally need
    ``r_squared >= r2_min``.
    """

    check_id: str
    reference: str
    value: float | None
    passed: bool
    target: float | None = None
    tolerance: float | None = None
    kind: str = "ratio"
    window: tuple | None = None
    r_squared: float | None = None
    fit_points: tuple = ()
    details: dict = field(default_factory=dict)
    error: str | None = None

    def as_dict(self):
        d = {
            "reference": self.reference,
            "kind": self.kind,
            "value": self.value,
            "target": self.target,
            "tolerance": self.tolerance,
            "window": list(self.window) if self.window else None,
            "r_squared": self.r_squared,
            "pass": bool(self.passed),
            "details": self.details,
        }
        if self.error:
            d["error"] = self.error
        return _clean(d)


def within(value, target, tol):
    return value is not None and math.isfinite(value) and abs(value - target) <= tol


def fit_check(check_id, reference, fit, target, tol, r2_min=0.95, details=None):
    ok = within(fit.exponent, target, tol) and fit.r_squared >= r2_min
    return CheckResult(check_id, reference, fit.exponent, ok, target, tol, "exponent",
                       fit.window, fit.r_squared, fit.data, dict(details or {}, r2_min=r2_min))


def bound_check(check_id, reference, value, limit, upper=True, details=None):
    ok = value is not None and math.isfinite(value) and (value <= limit if upper else value >= limit)
    return CheckResult(check_id, reference, value, ok, limit, None, "upper-bound" if upper else "lower-bound",
                       details=dict(details or {}))


def failed_check(check_id, reference, exc):
    return CheckResult(check_id, reference, None, False, kind="error",
                       error=f"{type(exc).__name__}: {exc}")


@dataclass
class EstimateReport:
    provenance: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def add(self, check):
        if check.check_id in self.checks:
            raise ValueError(f"duplicate check id {check.check_id!r}")
        self.checks[check.check_id] = check
        return check

    def extend(self, checks):
        for c in checks:
            self.add(c)

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def pass_vector(self):
        return {k: bool(c.passed) for k, c in sorted(self.checks.items())}

    def to_json(self):
        payload = {"provenance": _clean(self.provenance),
                   "checks": {k: c.as_dict() for k, c in sorted(self.checks.items())},
                   "all_pass": self.passed}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "reference", "kind", "value", "target", "tolerance",
                    "window_lo", "window_hi", "r_squared", "pass"])
        for k, c in sorted(self.checks.items()):
            d = c.as_dict()
            win = d["window"] or [None, None]
            w.writerow([k, c.reference, c.kind] + [_csv(v) for v in
                       (d["value"], d["target"], d["tolerance"], win[0], win[1], d["r_squared"])]
                       + [int(c.passed)])
        return buf.getvalue()

    def fit_tables(self):
        """``{check_id: text}`` of whitespace-separated ``s v`` columns for every fit."""
        out = {}
        for k, c in sorted(self.checks.items()):
            if c.fit_points:
                lines = ["# s v"] + [f"{fmt(s)!r} {fmt(v)!r}" for s, v in c.fit_points]
                out[k] = "\n".join(lines) + "\n"
        return out

    def write(self, out_dir, formats=("json", "csv", "dat")):
        os.makedirs(out_dir, exist_ok=True)
        written = []
        if "json" in formats:
            written.append(_write(os.path.join(out_dir, "report.json"), self.to_json()))
        if "csv" in formats:
            written.append(_write(os.path.join(out_dir, "report.csv"), self.to_csv()))
        if "dat" in formats:
            fits = os.path.join(out_dir, "fits")
            os.makedirs(fits, exist_ok=True)
            for k, text in self.fit_tables().items():
                written.append(_write(os.path.join(fits, f"{k}.dat"), text))
        return written


def _csv(v):
    return "" if v is None else repr(v)


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def load_report(path):
    with open(path) as fh:
        return json.load(fh)
