import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import settings

from desitter_toda import frame, seq, toda
from desitter_toda.lattice import BandwidthWarning
from desitter_toda.rootsys import build_root_system

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=25)
settings.load_profile("repro")


@pytest.fixture(autouse=True)
def _quiet_bandwidth():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandwidthWarning)
        yield


def _vacuum_run(n: int, N: int):
    rs = build_root_system(n)
    W = toda.default_cyclic(n)
    vac = frame.vacuum(W, rs)
    conn = frame.vacuum_connection(vac, N, N, rs)
    F = frame.integrate_frame(conn)
    f = frame.reconstruct_map(F)
    iso = seq.isotropy_order(f)
    s = seq.harmonic_sequence(f, n, isotropy=iso)
    return SimpleNamespace(n=n, N=N, rs=rs, W=W, vac=vac, conn=conn, F=F, f=f, iso=iso, s=s)


@pytest.fixture(scope="session")
def vacuum2():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandwidthWarning)
        return _vacuum_run(2, 32)


@pytest.fixture(scope="session")
def vacuum3():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandwidthWarning)
        return _vacuum_run(3, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# Acceptance lines are collected here and printed in the terminal summary.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
