"""End-to-end acceptance criteria 1-8, one printed PASS/FAIL line each."""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from desitter_toda import frame, seq, toda, willmore as wm
from desitter_toda.lattice import Lattice
from desitter_toda.mink import upsilon
from desitter_toda.pipelines import dichotomy_examples, random_loop_field, sequence_entry_residual, top_pairing_prediction
from desitter_toda.rootsys import build_root_system, coxeter_deviation, verify_exact


def _record(k: int, ok: bool, text: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[k] = line
    print(line)


def test_criterion_1_exact_root_action():
    t0 = time.perf_counter()
    reports = [verify_exact(n) for n in range(1, 6)]
    dt = time.perf_counter() - t0
    worst = max(r.root_action for r in reports)
    ok = worst == 0 and all(r.passed for r in reports) and dt < 5
    _record(1, ok, f"exact root action residual {worst} for n = 1..5 in {dt:.2f} s (limit 5 s)")
    assert ok


def test_criterion_2_coxeter_closed_form():
    t0 = time.perf_counter()
    dev = max(coxeter_deviation(build_root_system(n)) for n in range(2, 6))
    dt = time.perf_counter() - t0
    ok = dev < 1e-10 and dt < 1
    _record(2, ok, f"max entrywise deviation {dev:.2e} (tol 1e-10) for n = 2..5 in {dt:.2f} s (limit 1 s)")
    assert ok


def test_criterion_3_toda_vacuum():
    newton = max(toda.vacuum_solve(toda.default_cyclic(n), build_root_system(n)).residual for n in (2, 3))
    W = toda.default_cyclic(2)
    w0 = toda.vacuum_solve(W).omega
    traj = toda.integrate_1d(w0, np.array([0.1, 0.2]), W, None, 10.0, 1e-3)
    drift = traj.energy_drift()
    ratio = toda.richardson_ratio(w0, np.array([0.1, 0.2]), W, 5.0, 0.1)
    ok = newton < 1e-12 and drift < 1e-10 and not traj.truncated and abs(ratio - 16) <= 0.2 * 16
    _record(3, ok, f"Newton residual {newton:.2e} (tol 1e-12), energy drift {drift:.2e} (tol 1e-10), Richardson ratio {ratio:.2f} (16 +- 20%)")
    assert ok


def test_criterion_4_frame_integration(vacuum2):
    group = vacuum2.F.group_residual()
    flat = frame.max_extended_curvature(vacuum2.conn, frame.unit_roots(8), vacuum2.rs)
    # O(h^4) needs a flat connection whose frame is not a single exponential
    rng = np.random.default_rng(0)
    P, Q = (upsilon(2) @ (K - K.T) for K in rng.normal(size=(2, 5, 5)))
    lat = Lattice.rectangle(1.0, 1.0)
    res = []
    for N in (32, 64, 128):
        conn, _ = frame.product_connection(P, Q, lat, N, N)
        res.append(frame.integrate_frame(conn, substeps=1, reproject=False).mixed_path_residual)
    ratios = [res[0] / res[1], res[1] / res[2]]
    ok = group < 1e-8 and flat < 1e-8 and all(abs(r - 16) <= 0.2 * 16 for r in ratios)
    _record(
        4,
        ok,
        f"group residual {group:.2e} (tol 1e-8) on 32x32, extended flatness {flat:.2e} (tol 1e-8) at 8 roots of unity, "
        f"mixed-path ratios {ratios[0]:.2f}, {ratios[1]:.2f} (16 +- 20%)",
    )
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="the stated factor 4 = 2^(2n-2) is off by 4; the measured pairing equals 16 c1^2 c2 c0",
)
def test_criterion_5_round_trip():
    t0 = time.perf_counter()
    rs = build_root_system(2)
    vac = frame.vacuum(toda.default_cyclic(2), rs)
    conn = frame.vacuum_connection(vac, 32, 32, rs)
    F = frame.integrate_frame(conn)
    f = frame.reconstruct_map(F)
    harm = seq.harmonic_residual(f)
    iso = seq.isotropy_order(f)
    s = seq.harmonic_sequence(f, 2, isotropy=iso)
    entry = sequence_entry_residual(F, s.entries[1], vac.c, 1)
    P = seq.pairing_grid(f, 2, 2)
    stated = top_pairing_prediction(vac.c, 2)
    corrected = top_pairing_prediction(vac.c, 4)
    rel = abs(P.mean() - stated) / abs(stated)
    spread = float(np.abs(P - P.mean()).std())
    dt = time.perf_counter() - t0
    parts = {
        "a": harm < 1e-8,
        "b": iso.order == 1,
        "c": entry < 1e-7,
        "d": rel < 1e-7 and spread < 1e-8,
    }
    ok = all(parts.values()) and dt < 30
    _record(
        5,
        ok,
        f"(a) harmonic {harm:.2e} (b) isotropy {iso.order} (c) f1 residual {entry:.2e} "
        f"(d) <f_zz,f_zz> = {P.mean().real:.10g} vs 4c1^2c2c0 = {stated.real:.10g} "
        f"(ratio {P.mean().real / stated.real:.6f}; 16c1^2c2c0 = {corrected.real:.10g}), stddev {spread:.2e}; {dt:.1f} s",
    )
    # (a)-(c) and constancy must hold regardless of the constant in (d)
    assert parts["a"] and parts["b"] and parts["c"] and spread < 1e-8
    assert abs(P.mean() - corrected) / abs(corrected) < 1e-7
    assert ok


def test_criterion_6_willmore_anchor():
    t0 = time.perf_counter()
    p = wm.clifford_torus(64, 64)
    E = wm.willmore_energy(p)
    rep = wm.verify_willmore(p, 1e-9)
    dt = time.perf_counter() - t0
    ok = (
        abs(E - 2 * np.pi**2) < 1e-6
        and rep.harmonic < 1e-9
        and rep.conformality < 1e-9
        and rep.classification == wm.SUPERCONFORMAL
        and abs(rep.pairing_mean - 1 / 16) < 1e-9
        and rep.pairing_std < 1e-8
        and dt < 10
    )
    _record(
        6,
        ok,
        f"energy {E:.10f} vs 2pi^2 {2 * np.pi**2:.10f}, harmonic {rep.harmonic:.2e}, conformality {rep.conformality:.2e}, "
        f"{rep.classification} with <f_zz,f_zz> = {rep.pairing_mean.real:.12f} (std {rep.pairing_std:.1e}); {dt:.2f} s",
    )
    assert ok


def test_criterion_7_finite_type_certificate(vacuum2):
    xi = frame.vacuum_killing_field(vacuum2.conn, vacuum2.rs)
    good = frame.finite_type_certificate(xi, vacuum2.conn, rs=vacuum2.rs)
    rng = np.random.default_rng(0)
    bad = frame.finite_type_certificate(random_loop_field(2, rng), vacuum2.conn, rs=vacuum2.rs)
    ok = good.passed(1e-9) and bad.residual > 1e-2
    _record(7, ok, f"vacuum Killing field residual {good.residual:.2e} (tol 1e-9), random field residual {bad.residual:.2e} (> 1e-2)")
    assert ok


def test_criterion_8_dichotomy():
    reports = {name: wm.verify_map(f, 1e-8) for name, f in dichotomy_examples(64)}
    verified = {name: r.classification for name, r in reports.items() if r.passed}
    ok = len(verified) >= 5 and all(c in (wm.ISOTROPIC, wm.SUPERCONFORMAL) for c in verified.values())
    skipped = sorted(set(reports) - set(verified))
    _record(
        8,
        ok,
        f"{len(verified)} verified examples: " + ", ".join(f"{k}={v}" for k, v in verified.items())
        + (f"; failed verification, excluded: {', '.join(skipped)}" if skipped else ""),
    )
    assert ok
