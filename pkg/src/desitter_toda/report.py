"""Verification bundles: named checks with residuals, tolerances and pass flags."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["Check", "VerificationBundle", "dumps_json", "export", "load_bundle"]

FLOAT_FMT = "%.12e"


@dataclass
class Check:
    """One verification item.  Timing is kept for display but never exported."""

    name: str
    residual: float
    tol: float
    passed: bool
    detail: str = ""
    timing: float = field(default=0.0, compare=False)

    @classmethod
    def below(cls, name: str, residual: float, tol: float, detail: str = "", timing: float = 0.0) -> "Check":
        residual = float(residual)
        return cls(name, residual, float(tol), bool(residual < tol), detail, timing)

    @classmethod
    def equal(cls, name: str, value, expected, detail: str = "", timing: float = 0.0) -> "Check":
        """Exact comparison; the residual is |value - expected| and the tolerance 0.5."""
        note = detail or f"value {value}, expected {expected}"
        return cls(name, float(abs(value - expected)), 0.5, bool(value == expected), note, timing)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tol": self.tol,
            "passed": self.passed,
            "detail": self.detail,
        }

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}: residual {self.residual:.3e} (tol {self.tol:.1e}) {self.detail}".rstrip()


@dataclass
class VerificationBundle:
    name: str
    checks: list[Check] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "values": self.values,
        }

    def summary(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {sum(c.passed for c in self.checks)}/{len(self.checks)} checks")
        return "\n".join(lines)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return FLOAT_FMT % x


def _encode(obj, indent: int) -> str:
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag], indent)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "tolist"):
        return _encode(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(obj[k], indent + 2)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(_encode(v, indent + 2) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON with sorted keys and every float written as %.12e."""
    return _encode(obj, 0) + "\n"


def _csv_text(bundle: VerificationBundle) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "residual", "tol", "passed", "detail"])
    for c in bundle.checks:
        w.writerow([c.name, FLOAT_FMT % c.residual, FLOAT_FMT % c.tol, int(c.passed), c.detail])
    return buf.getvalue()


def export(bundle: VerificationBundle, path, fmt: str = "json") -> Path:
    """Write the bundle as json or csv.  Output is byte-stable for equal bundles."""
    path = Path(path)
    if fmt == "json":
        text = dumps_json(bundle.as_dict())
    elif fmt == "csv":
        text = _csv_text(bundle)
    else:
        raise ValueError(f"unknown format {fmt!r}; use json or csv")
    path.write_text(text)
    return path


def _parse_float(x) -> float:
    return float(x) if not isinstance(x, str) else float(x.replace('"', ""))


def load_bundle(path) -> VerificationBundle:
    """Read a bundle written by :func:`export` in json format."""
    d = json.loads(Path(path).read_text())
    checks = [
        Check(c["name"], _parse_float(c["residual"]), _parse_float(c["tol"]), bool(c["passed"]), c.get("detail", ""))
        for c in d.get("checks", [])
    ]
    return VerificationBundle(d["name"], checks, d.get("values", {}))
