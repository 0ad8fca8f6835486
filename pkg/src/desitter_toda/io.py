"""Grid containers on disk: a JSON header plus a CSV or .npy payload.

CSV payload rows are one node each with columns s, t, re0, im0, re1, im1, ...
The header records the lattice, grid size, component count and the kind of
data ("map" for TorusMap values, "immersion" for real samples in S^3,
"toda" for omega coefficients).  Constant loop polynomials are stored as a
single JSON document.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .frame import LoopPolynomial
from .lattice import Lattice
from .seq import TorusMap
from .toda import TodaField

__all__ = [
    "write_container",
    "read_container",
    "save_map",
    "load_map",
    "save_immersion",
    "load_immersion",
    "save_toda_field",
    "load_toda_field",
    "save_loop_field",
    "load_loop_field",
]

PAYLOAD_FMT = "%.17e"


def write_container(path, lattice: Lattice, values: np.ndarray, kind: str, payload: str = "csv", extra=None) -> Path:
    """Write header `path` (json) and its payload next to it."""
    path = Path(path)
    values = np.asarray(values, dtype=complex)
    N, M, d = values.shape
    if payload not in ("csv", "npy"):
        raise ValueError(f"unknown payload format {payload!r}")
    data_path = path.with_suffix("." + payload)
    if data_path == path:
        raise ValueError("header and payload paths coincide")
    header = {
        "kind": kind,
        "lattice": lattice.to_json(),
        "grid": [N, M],
        "components": d,
        "payload": data_path.name,
        "format": payload,
    }
    if extra:
        header.update(extra)
    if payload == "npy":
        np.save(data_path, values)
    else:
        s, t = np.meshgrid(np.arange(N), np.arange(M), indexing="ij")
        cols = [s.ravel(), t.ravel()]
        for k in range(d):
            cols += [values[..., k].real.ravel(), values[..., k].imag.ravel()]
        names = ["s", "t"] + [f"{p}{k}" for k in range(d) for p in ("re", "im")]
        fmt = ["%d", "%d"] + [PAYLOAD_FMT] * (2 * d)
        np.savetxt(data_path, np.column_stack(cols), fmt=fmt, delimiter=",", header=",".join(names), comments="")
    path.write_text(json.dumps(header, sort_keys=True, indent=2) + "\n")
    return path


def read_container(path) -> tuple[dict, Lattice, np.ndarray]:
    path = Path(path)
    header = json.loads(path.read_text())
    for key in ("kind", "lattice", "grid", "components", "payload", "format"):
        if key not in header:
            raise ValueError(f"container header {path} lacks {key!r}")
    lat = Lattice.from_json(header["lattice"])
    N, M = header["grid"]
    d = header["components"]
    data_path = path.parent / header["payload"]
    if header["format"] == "npy":
        values = np.load(data_path)
    else:
        raw = np.loadtxt(data_path, delimiter=",", skiprows=1, ndmin=2)
        if raw.shape != (N * M, 2 + 2 * d):
            raise ValueError(f"payload has shape {raw.shape}, header expects {(N * M, 2 + 2 * d)}")
        values = np.zeros((N, M, d), complex)
        s = raw[:, 0].astype(int)
        t = raw[:, 1].astype(int)
        values[s, t] = raw[:, 2::2] + 1j * raw[:, 3::2]
    if values.shape != (N, M, d):
        raise ValueError(f"payload has shape {values.shape}, header expects {(N, M, d)}")
    return header, lat, values


def save_map(f: TorusMap, path, payload: str = "csv") -> Path:
    return write_container(path, f.lattice, f.values, "map", payload, {"n": f.n})


def load_map(path, norm_tol: float = 1e-10) -> TorusMap:
    header, lat, values = read_container(path)
    if header["kind"] != "map":
        raise ValueError(f"container holds {header['kind']!r}, not a map")
    n = header.get("n", (header["components"] - 1) // 2)
    return TorusMap(n, lat, values, norm_tol=norm_tol)


def save_immersion(lattice: Lattice, upsilon: np.ndarray, path, payload: str = "csv") -> Path:
    return write_container(path, lattice, np.asarray(upsilon, float), "immersion", payload)


def load_immersion(path) -> tuple[Lattice, np.ndarray]:
    """Lattice and real (N, M, 4) samples of an immersion into S^3."""
    header, lat, values = read_container(path)
    if header["kind"] != "immersion" or header["components"] != 4:
        raise ValueError("container does not hold 4-component immersion samples")
    if np.abs(values.imag).max() > 0:
        raise ValueError("immersion samples must be real")
    return lat, values.real


def save_toda_field(field: TodaField, path, payload: str = "csv") -> Path:
    if field.lattice is None:
        raise ValueError("only lattice fields can be stored")
    return write_container(path, field.lattice, field.omega, "toda", payload)


def load_toda_field(path) -> TodaField:
    header, lat, values = read_container(path)
    if header["kind"] != "toda":
        raise ValueError(f"container holds {header['kind']!r}, not a Toda field")
    if np.abs(values.imag).max() > 0:
        raise ValueError("Toda coefficients must be real")
    return TodaField(values.real, lat)


def save_loop_field(xi: LoopPolynomial, path) -> Path:
    """Constant coefficients as {"coefficients": {power: [[[re, im], ...], ...]}}."""
    coeffs = {}
    for k, c in sorted(xi.coeffs.items()):
        c = np.asarray(c, dtype=complex)
        if c.ndim != 2:
            raise ValueError("only constant coefficients can be stored")
        coeffs[str(k)] = np.stack([c.real, c.imag], -1).tolist()
    path = Path(path)
    path.write_text(json.dumps({"kind": "loop", "coefficients": coeffs}, sort_keys=True) + "\n")
    return path


def load_loop_field(path) -> LoopPolynomial:
    d = json.loads(Path(path).read_text())
    if d.get("kind") != "loop":
        raise ValueError(f"{path} does not hold a loop polynomial")
    coeffs = {}
    for k, c in d["coefficients"].items():
        a = np.asarray(c, dtype=float)
        if a.ndim != 3 or a.shape[0] != a.shape[1] or a.shape[2] != 2:
            raise ValueError(f"coefficient {k} must be a square matrix of [re, im] pairs")
        coeffs[int(k)] = a[..., 0] + 1j * a[..., 1]
    return LoopPolynomial(coeffs)
