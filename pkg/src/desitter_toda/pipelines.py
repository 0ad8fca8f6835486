"""End-to-end pipelines driven by a validated run configuration."""
from __future__ import annotations

import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .catalog import boost_map, boosted_clifford_gauss_map, clifford_gauss_map, elliptic_sphere_map
from .frame import (
    FramedMap,
    LoopPolynomial,
    extract_primitive_frame,
    finite_type_certificate,
    integrate_frame,
    max_extended_curvature,
    reconstruct_map,
    vacuum,
    vacuum_connection,
    vacuum_frame,
    vacuum_killing_field,
)
from .io import save_map
from .mink import bilinear, upsilon
from .report import Check, VerificationBundle, export
from .rootsys import build_root_system
from .seq import TorusMap, harmonic_residual, harmonic_sequence, isotropy_order, pairing_grid
from .toda import default_cyclic
from .willmore import (
    area_density_check,
    clifford_torus,
    conformal_gauss_map,
    homogeneous_torus,
    verify_map,
    verify_willmore,
    willmore_energy,
)
from .lattice import xy_derivative

__all__ = [
    "ConfigError",
    "RunConfig",
    "PIPELINES",
    "parse_config_text",
    "load_config_file",
    "run_pipeline",
    "top_pairing_prediction",
    "sequence_entry_residual",
    "adapted_frame_residual",
    "dichotomy_examples",
    "random_loop_field",
    "vacuum_reconstruct",
    "clifford_willmore",
    "dichotomy",
]

MAX_RANK = 5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for a pipeline run.

    Unknown keys are rejected, tolerances must be positive and the rank is
    capped at 5.
    """

    pipeline: str = "vacuum-reconstruct"
    rank: int = 2
    grid: tuple = (32, 32)
    tol: float = 1e-8
    seed: int = 0
    output: str | None = None
    substeps: int | None = None

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}; choose from {sorted(PIPELINES)}")
        if not isinstance(self.rank, (int, np.integer)) or not 1 <= self.rank <= MAX_RANK:
            raise ConfigError(f"rank must be an integer in 1..{MAX_RANK}, got {self.rank!r}")
        grid = tuple(int(g) for g in np.atleast_1d(self.grid))
        if len(grid) == 1:
            grid = grid * 2
        if len(grid) != 2 or min(grid) < 8 or grid[0] % 2 or grid[1] % 2:
            raise ConfigError(f"grid must be two even sizes >= 8, got {self.grid!r}")
        object.__setattr__(self, "grid", grid)
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError(f"tolerances must be positive, got tol={self.tol!r}")
        if self.substeps is not None and self.substeps < 1:
            raise ConfigError("substeps must be at least 1")

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**values)


_CASTS = {
    "pipeline": str,
    "rank": int,
    "grid": lambda s: tuple(int(x) for x in s.replace(",", " ").split()),
    "tol": float,
    "seed": int,
    "output": str,
    "substeps": int,
}


def parse_config_text(text: str) -> dict:
    """Parse key=value lines; blank lines and '#' comments are ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _CASTS:
            raise ConfigError(f"line {lineno}: unknown configuration key {key!r}")
        try:
            out[key] = _CASTS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    return out


def load_config_file(path) -> dict:
    return parse_config_text(Path(path).read_text())


# Shared checks

def top_pairing_prediction(c: np.ndarray, power: int) -> complex:
    """2^power c_1^2 ... c_{n-1}^2 c_n c_0 for coefficients c = (c_0, ..., c_n)."""
    c = np.asarray(c)
    n = len(c) - 1
    return complex(2.0**power * np.prod(c[1:n] ** 2) * c[n] * c[0])


def sequence_entry_residual(F: FramedMap, fj: np.ndarray, c: np.ndarray, j: int) -> float:
    """max |f_j - 2^{j-1} c_1 ... c_j F (e_{2j} + i e_{2j+1})| over the grid."""
    e = np.zeros(F.F.shape[-1], complex)
    e[2 * j - 1], e[2 * j] = 1, 1j
    coef = 2.0 ** (j - 1) * np.prod(np.asarray(c)[1 : j + 1])
    return float(np.abs(coef * (F.F @ e) - fj).max())


def adapted_frame_residual(F: FramedMap, f: TorusMap) -> tuple[float, float]:
    """(|F e_1 - f|, part of f_x, f_y outside span(F e_2, F e_3)) relative to |df|."""
    first = float(np.abs(F.F[..., 0] - f.values).max())
    worst = 0.0
    for px, py in ((1, 0), (0, 1)):
        t = xy_derivative(f.values.real, f.lattice, px, py)
        r = t.copy()
        for k in (1, 2):
            col = F.F[..., k].real
            r = r - bilinear(t, col)[..., None] * col
        worst = max(worst, float(np.linalg.norm(r, axis=-1).max() / np.linalg.norm(t, axis=-1).max()))
    return first, worst


def random_loop_field(n: int, rng: np.random.Generator) -> LoopPolynomial:
    """Constant polynomial field with a random real so(2n,1) coefficient."""
    d = 2 * n + 1
    K = rng.normal(size=(d, d))
    return LoopPolynomial({0: upsilon(n) @ (K - K.T) + 0j})


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


# Pipelines

def vacuum_reconstruct(cfg: RunConfig) -> tuple[VerificationBundle, dict]:
    """Vacuum Toda solution -> frame -> map -> harmonic sequence checks."""
    n = cfg.rank
    N, M = cfg.grid
    b = VerificationBundle("vacuum-reconstruct")
    rs = build_root_system(n)
    W = default_cyclic(n)
    vac, dt = _timed(vacuum, W, rs)
    b.values.update(rank=n, grid=[N, M], omega=vac.omega, c=vac.c, periods=vac.lattice.to_json())
    conn = vacuum_connection(vac, N, M, rs)
    b.add(Check.below("pattern", conn.pattern_residual, cfg.tol, timing=dt))
    b.add(Check.below("flatness", conn.curvature(), cfg.tol))
    b.add(Check.below("extended_flatness", max_extended_curvature(conn, rs=rs), cfg.tol))
    F, dt = _timed(integrate_frame, conn, substeps=cfg.substeps)
    b.add(Check.below("group_membership", F.group_residual(), cfg.tol, timing=dt))
    b.add(Check.below("mixed_path", F.mixed_path_residual, cfg.tol))
    closed = vacuum_frame(vac.A, vac.lattice, N, M)
    b.add(Check.below("frame_closed_form", np.abs(closed.F - F.F).max(), cfg.tol))
    f = reconstruct_map(F)
    b.add(Check.below("harmonicity", harmonic_residual(f), cfg.tol))
    iso = isotropy_order(f)
    b.add(Check.equal("isotropy_order", iso.order, n - 1))
    s = harmonic_sequence(f, n, isotropy=iso)
    c = vac.c
    for j in range(1, n):
        b.add(Check.below(f"sequence_entry_{j}", sequence_entry_residual(F, s.entries[j], c, j), cfg.tol))
    P = pairing_grid(f, n, n)
    pred = top_pairing_prediction(c, 2 * n)
    b.values.update(top_pairing_mean=complex(P.mean()), top_pairing_prediction=pred)
    b.add(Check.below("norm_formula", abs(P.mean() - pred) / abs(pred), cfg.tol, "relative to 2^(2n) c1^2..c(n-1)^2 cn c0"))
    b.add(Check.below("norm_constancy", float(np.abs(P - P.mean()).std()), cfg.tol))
    xi = vacuum_killing_field(conn, rs)
    b.add(Check.below("killing_field", finite_type_certificate(xi, conn, rs=rs).residual, cfg.tol))
    return b, {"map": f}


def clifford_willmore(cfg: RunConfig) -> tuple[VerificationBundle, dict]:
    """Clifford torus -> Willmore energy -> conformal Gauss map -> adapted frame."""
    N, M = cfg.grid
    b = VerificationBundle("clifford-willmore")
    p, dt = _timed(clifford_torus, N, M)
    E = willmore_energy(p)
    b.values.update(grid=[N, M], willmore_energy=E, area=p.area())
    b.add(Check.below("willmore_energy", abs(E - 2 * np.pi**2), 1e-6, "target 2 pi^2", timing=dt))
    rep = verify_willmore(p, cfg.tol)
    b.values.update(classification=rep.classification, pairing_mean=rep.pairing_mean, pairing_std=rep.pairing_std)
    b.add(Check.below("harmonicity", rep.harmonic, cfg.tol))
    b.add(Check.below("conformality", rep.conformality, cfg.tol))
    b.add(Check.equal("classification", int(rep.classification == "superconformal"), 1, rep.classification))
    b.add(Check.below("pairing_value", abs(rep.pairing_mean - 1 / 16), cfg.tol, "target 1/16"))
    b.add(Check.below("pairing_constancy", rep.pairing_std, cfg.tol))
    f = conformal_gauss_map(p)
    induced, expected = area_density_check(p, f)
    b.add(Check.below("area_identity", np.abs(induced - expected).max(), 1e-7))
    s = harmonic_sequence(f, 2)
    F = extract_primitive_frame(f, s)
    first, tangent = adapted_frame_residual(F, f)
    b.add(Check.below("adapted_frame_first_column", first, cfg.tol))
    b.add(Check.below("adapted_frame_tangent_plane", tangent, cfg.tol))
    return b, {"map": f}


def dichotomy_examples(N: int = 64) -> list[tuple[str, TorusMap]]:
    """Doubly periodic maps into S^4_1 with known harmonicity and conformality."""
    rs = build_root_system(2)
    vac = vacuum(default_cyclic(2), rs)
    Fv = vacuum_frame(vac.A, vac.lattice, N, N)
    ell = elliptic_sphere_map(2 * N, 2 * N)
    return [
        ("clifford", clifford_gauss_map(N, N)),
        ("clifford_boosted", boosted_clifford_gauss_map(N, N, 0.6)),
        ("vacuum_toda", reconstruct_map(Fv)),
        ("vacuum_toda_boosted", boost_map(reconstruct_map(Fv), 0.4, axis=2)),
        ("elliptic_sphere", ell),
        ("elliptic_sphere_boosted", boost_map(ell, 0.5, axis=0)),
        ("homogeneous_torus", conformal_gauss_map(homogeneous_torus(N, N, 0.5))),
    ]


def dichotomy(cfg: RunConfig) -> tuple[VerificationBundle, dict]:
    """Every verified example must be isotropic or superconformal, never mixed."""
    b = VerificationBundle("dichotomy")
    classes = {}
    for name, f in dichotomy_examples(cfg.grid[0]):
        rep = verify_map(f, cfg.tol)
        classes[name] = {"verified": rep.passed, "class": rep.classification}
        if rep.passed:
            b.add(Check.equal(f"{name}_class", int(rep.classification != "mixed"), 1, rep.classification))
    b.values["examples"] = classes
    return b, {}


PIPELINES = {
    "vacuum-reconstruct": vacuum_reconstruct,
    "clifford-willmore": clifford_willmore,
    "dichotomy": dichotomy,
}


def run_pipeline(cfg: RunConfig) -> VerificationBundle:
    """Run the configured pipeline; write report and map artifacts when output is set."""
    np.random.seed(cfg.seed)
    bundle, artifacts = PIPELINES[cfg.pipeline](cfg)
    bundle.values["config"] = {
        "pipeline": cfg.pipeline,
        "rank": cfg.rank,
        "grid": list(cfg.grid),
        "tol": cfg.tol,
        "seed": cfg.seed,
    }
    if cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        export(bundle, out / "report.json", "json")
        export(bundle, out / "report.csv", "csv")
        if "map" in artifacts:
            save_map(artifacts["map"], out / "map.json")
    return bundle
