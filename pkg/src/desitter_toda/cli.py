"""Command-line entry point.

Every subcommand prints a verification bundle and exits 0 iff all of its
checks pass.  ``--report PATH`` additionally writes the bundle as JSON.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import frame, rootsys, toda
from .io import load_immersion, load_loop_field, load_map, load_toda_field, save_immersion, save_map
from .lattice import BandwidthWarning
from .pipelines import (
    PIPELINES,
    ConfigError,
    RunConfig,
    load_config_file,
    random_loop_field,
    run_pipeline,
)
from .report import Check, VerificationBundle, export, load_bundle
from .seq import harmonic_residual, isotropy_order
from .willmore import clifford_torus, immersion_patch, verify_map, verify_willmore, willmore_energy

SANITY_GAP = 1e-2


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _complexes(text: str) -> list[complex]:
    return [complex(x.replace(" ", "")) for x in text.split(",") if x.strip()]


def _cyclic(args, n: int) -> toda.CyclicElement:
    if getattr(args, "r", None):
        return toda.CyclicElement(tuple(_complexes(args.r)), n)
    return toda.default_cyclic(n)


def _grid(values) -> tuple[int, int]:
    return (values[0], values[0]) if len(values) == 1 else (values[0], values[1])


def _rank(text: str) -> int:
    n = int(text)
    if not 1 <= n <= 5:
        raise argparse.ArgumentTypeError(f"rank must be in 1..5, got {n}")
    return n


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"tolerance must be positive, got {text}")
    return x


# Subcommands

def cmd_roots(args) -> VerificationBundle:
    b = VerificationBundle(f"roots(n={args.rank})")
    rep = rootsys.verify_exact(args.rank)
    for name in ("root_action", "conjugation", "cartan_brackets", "eta_duality"):
        b.add(Check.equal(name, float(getattr(rep, name)), 0.0, "exact"))
    b.add(Check.equal("lowest_root", int(rep.lowest_root_ok), 1))
    b.add(Check.equal("root_count", rep.count, 2 * args.rank**2))
    rs = rootsys.build_root_system(args.rank)
    if args.rank >= 2:
        b.add(Check.below("coxeter_closed_form", rootsys.coxeter_deviation(rs), args.tol))
    if args.table:
        b.values["roots"] = rootsys.root_table(rs)
    return b


def cmd_toda(args) -> VerificationBundle:
    rs = rootsys.build_root_system(args.rank)
    W = _cyclic(args, args.rank)
    if args.mode == "vacuum":
        b = VerificationBundle(f"toda vacuum(n={args.rank})")
        sol = toda.vacuum_solve(W, rs, tol=args.tol)
        closed, _ = toda.vacuum_closed_form(W, rs)
        b.values.update(omega=sol.omega, iterations=sol.iterations)
        b.add(Check.below("newton_residual", sol.residual, args.tol))
        b.add(Check.below("closed_form", np.abs(sol.omega - closed).max(), 1e-10))
        return b
    b = VerificationBundle(f"toda integrate(n={args.rank})")
    omega0 = _floats(args.omega0) if args.omega0 else toda.vacuum_solve(W, rs).omega
    domega0 = _floats(args.domega0) if args.domega0 else np.zeros(args.rank)
    if len(omega0) != args.rank or len(domega0) != args.rank:
        raise ValueError(f"initial data must have {args.rank} components")
    traj = toda.integrate_1d(omega0, domega0, W, rs, args.length, args.step)
    if args.output:
        traj.to_csv(args.output)
    b.values.update(steps=len(traj.x) - 1, final_omega=traj.omega[-1], message=traj.message)
    b.add(Check.equal("complete", int(not traj.truncated), 1, traj.message or "reached requested length"))
    b.add(Check.below("energy_drift", traj.energy_drift(), args.drift_tol))
    return b


def _connection(args):
    """Toda connection of the vacuum (default) or of a stored omega field."""
    if args.omega_file:
        field_ = load_toda_field(args.omega_file)
        n = field_.n
        if args.rank is not None and args.rank != n:
            raise ValueError(f"--rank {args.rank} disagrees with the stored field (rank {n})")
        rs = rootsys.build_root_system(n)
        return rs, frame.toda_connection(field_, _cyclic(args, n), rs), {"source": str(args.omega_file)}
    n = 2 if args.rank is None else args.rank
    rs = rootsys.build_root_system(n)
    vac = frame.vacuum(_cyclic(args, n), rs)
    conn = frame.vacuum_connection(vac, *_grid(args.grid), rs)
    return rs, conn, {"source": "vacuum", "c": vac.c, "periods": vac.lattice.to_json()}


def cmd_reconstruct(args) -> VerificationBundle:
    rs, conn, info = _connection(args)
    b = VerificationBundle(f"reconstruct(n={rs.n})")
    b.add(Check.below("pattern", conn.pattern_residual, args.tol))
    F = frame.integrate_frame(conn)
    f = frame.reconstruct_map(F)
    b.values.update(info, substeps=F.substeps, reprojections=F.reprojections)
    b.add(Check.below("group_membership", F.group_residual(), args.tol))
    b.add(Check.below("mixed_path", F.mixed_path_residual, args.tol))
    b.add(Check.below("harmonicity", harmonic_residual(f), args.tol))
    if args.output:
        save_map(f, args.output, args.payload)
    return b


def cmd_certify(args) -> VerificationBundle:
    rs, conn, info = _connection(args)
    b = VerificationBundle(f"certify(n={rs.n})")
    b.values.update(info)
    if args.xi_file:
        xi, label = load_loop_field(args.xi_file), "supplied_field"
    elif info["source"] == "vacuum":
        xi, label = frame.vacuum_killing_field(conn, rs), "vacuum_killing_field"
    else:
        raise ValueError("a stored omega field needs --xi-file")
    rep = frame.finite_type_certificate(xi, conn, rs=rs)
    b.add(Check.below(label, rep.residual, args.tol))
    b.add(Check.equal("nontrivial", int(not rep.trivial), 1, "zero field certifies nothing" if rep.trivial else ""))
    b.add(Check.below("reality", rep.reality, args.tol))
    b.add(Check.below("twisting", rep.twisting, args.tol))
    rng = np.random.default_rng(args.seed)
    bad = frame.finite_type_certificate(random_loop_field(rs.n, rng), conn, rs=rs)
    b.add(Check(f"random_field_rejected(seed={args.seed})", bad.residual, SANITY_GAP, bad.residual > SANITY_GAP, "must exceed tol"))
    return b


def cmd_verify_map(args) -> VerificationBundle:
    f = load_map(args.input, norm_tol=args.norm_tol)
    b = VerificationBundle(f"verify-map({Path(args.input).name})")
    rep = verify_map(f, args.tol)
    b.values.update(rep.as_dict())
    b.add(Check.below("harmonicity", rep.harmonic, args.tol))
    b.add(Check.below("conformality", rep.conformality, args.tol))
    b.add(Check.equal("dichotomy", int(rep.classification != "mixed"), 1, rep.classification))
    b.values["isotropy_order"] = isotropy_order(f).order
    return b


def cmd_willmore(args) -> VerificationBundle:
    if args.mode == "clifford":
        p = clifford_torus(*_grid(args.grid))
        if args.output:
            save_immersion(p.lattice, p.upsilon, args.output)
        b = VerificationBundle("willmore clifford")
        b.add(Check.below("willmore_energy", abs(willmore_energy(p) - 2 * np.pi**2), 1e-6, "target 2 pi^2"))
    else:
        if not args.mesh:
            raise ValueError("willmore verify needs --mesh")
        lat, values = load_immersion(args.mesh)
        p = immersion_patch(lat, values)
        b = VerificationBundle(f"willmore verify({Path(args.mesh).name})")
    rep = verify_willmore(p, args.tol)
    b.values.update(rep.as_dict())
    b.add(Check.below("harmonicity", rep.harmonic, args.tol))
    b.add(Check.below("conformality", rep.conformality, args.tol))
    return b


def cmd_pipeline(args) -> VerificationBundle:
    values = load_config_file(args.config) if args.config else {}
    for key in ("rank", "tol", "seed", "output", "substeps"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if args.grid is not None:
        values["grid"] = _grid(args.grid)
    values["pipeline"] = args.name
    return run_pipeline(RunConfig.from_mapping(values))


def cmd_export(args) -> VerificationBundle:
    b = load_bundle(args.input)
    export(b, args.output, args.format)
    return VerificationBundle(f"export({b.name})", [Check.equal("written", 1, 1, str(args.output))])


# Parser

def _source_args(s: argparse.ArgumentParser, grid: int) -> None:
    src = s.add_mutually_exclusive_group()
    src.add_argument("--vacuum", action="store_true", help="use the vacuum solution (default)")
    src.add_argument("--omega-file", help="stored Toda field container (.json)")
    s.add_argument("--rank", type=_rank, help="rank of the vacuum (default 2)")
    s.add_argument("--r", help="comma separated complex r_0..r_n")
    s.add_argument("--grid", type=int, nargs="+", default=[grid])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="desitter-toda", description=__doc__.splitlines()[0])
    p.add_argument("--report", help="write the verification bundle as JSON")
    p.add_argument("--quiet", action="store_true", help="print only the overall line")
    # the same options after the subcommand; SUPPRESS keeps the top-level values
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, **kw) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], **kw)

    s = add("roots", help="exact root-system checks")
    s.add_argument("--rank", type=_rank, default=2)
    s.add_argument("--tol", type=_positive, default=1e-10)
    s.add_argument("--table", action="store_true", help="include the root table in the report")
    s.set_defaults(func=cmd_roots)

    s = add("toda", help="vacuum solve or 1-D integration of the Toda equation")
    s.add_argument("mode", choices=["vacuum", "integrate"])
    s.add_argument("--rank", type=_rank, default=2)
    s.add_argument("--r", help="comma separated complex r_0..r_n (default: 1, sqrt 2, ..., sqrt 2, 1)")
    s.add_argument("--tol", type=_positive, default=1e-12)
    s.add_argument("--length", type=float, default=10.0)
    s.add_argument("--step", type=_positive, default=1e-3)
    s.add_argument("--omega0", help="comma separated initial omega (default: vacuum)")
    s.add_argument("--domega0", help="comma separated initial derivative (default: 0)")
    s.add_argument("--drift-tol", type=_positive, default=1e-10)
    s.add_argument("--output", help="trajectory CSV")
    s.set_defaults(func=cmd_toda)

    s = add("reconstruct", help="integrate a Toda frame and write the map")
    _source_args(s, 32)
    s.add_argument("--tol", type=_positive, default=1e-8)
    s.add_argument("--output", help="map container header (.json)")
    s.add_argument("--payload", choices=["csv", "npy"], default="csv")
    s.set_defaults(func=cmd_reconstruct)

    s = add("certify", help="finite-type certificate of a polynomial Killing field")
    _source_args(s, 16)
    s.add_argument("--xi-file", help="constant loop polynomial (default: the vacuum Killing field)")
    s.add_argument("--tol", type=_positive, default=1e-9)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_certify)

    s = add("verify-map", help="harmonicity, conformality and class of a stored map")
    s.add_argument("--input", required=True)
    s.add_argument("--tol", type=_positive, default=1e-8)
    s.add_argument("--norm-tol", type=_positive, default=1e-10)
    s.set_defaults(func=cmd_verify_map)

    s = add("willmore", help="Willmore checks through the conformal Gauss map")
    s.add_argument("mode", choices=["clifford", "verify"])
    s.add_argument("--grid", type=int, nargs="+", default=[64])
    s.add_argument("--mesh", help="immersion container header (.json)")
    s.add_argument("--tol", type=_positive, default=1e-9)
    s.add_argument("--output", help="write the Clifford samples as an immersion container")
    s.set_defaults(func=cmd_willmore)

    s = add("pipeline", help="run a named end-to-end pipeline")
    s.add_argument("name", choices=sorted(PIPELINES))
    s.add_argument("--config", help="key=value file; flags override it")
    s.add_argument("--rank", type=int)
    s.add_argument("--grid", type=int, nargs="+")
    s.add_argument("--tol", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--substeps", type=int)
    s.add_argument("--output", help="directory for report.json, report.csv and map.json")
    s.set_defaults(func=cmd_pipeline)

    s = add("export", help="rewrite a JSON report as json or csv")
    s.add_argument("--input", required=True)
    s.add_argument("--format", choices=["json", "csv"], default="csv")
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default", BandwidthWarning)
            bundle = args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.quiet:
        print(bundle.summary().splitlines()[-1])
    else:
        print(bundle.summary())
    if args.report:
        export(bundle, args.report, "json")
    return 0 if bundle.passed else 1


if __name__ == "__main__":
    sys.exit(main())
