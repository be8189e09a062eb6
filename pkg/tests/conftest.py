from __future__ import annotations

import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from vortexmorse.model import VortexSystem, min_separation

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")


def random_system(rng: np.random.Generator, n: int, gamma_range=(0.1, 2.0),
                  min_sep: float = 0.1) -> VortexSystem:
    g = rng.uniform(*gamma_range, size=n)
    while True:
        pos = rng.uniform(-1.0, 1.0, size=(n, 2))
        if min_separation(pos) >= min_sep:
            return VortexSystem(g, pos)


@st.composite
def systems(draw, n_min=2, n_max=5, positive=True):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    lo = 0.1 if positive else -2.0
    sys = random_system(rng, n, (lo, 2.0))
    if not positive and abs(sys.circulations.total) < 1e-3:
        sys = VortexSystem(np.abs(sys.gamma), sys.positions)
    return sys


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def central_gradient(f, z, h=1e-6):
    out = np.empty_like(z)
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = h
        out[k] = (f(z + e) - f(z - e)) / (2 * h)
    return out


def random_equilibria(rng: np.random.Generator, n: int, count: int, gamma_range=(0.1, 2.0)):
    """Relative equilibria refined from random starts with random circulations."""
    from vortexmorse.errors import VortexError
    from vortexmorse.model import Circulations
    from vortexmorse.solver import refine, sample_start

    out = []
    while len(out) < count:
        circ = Circulations(rng.uniform(*gamma_range, size=n))
        try:
            out.append(refine(sample_start(circ, rng), descent_steps=20))
        except VortexError:
            continue
    return out


@functools.lru_cache(maxsize=None)
def cached_census(gamma: tuple, restarts: int, seed: int = 0):
    """Census results shared across test modules (the full runs take ~20 s each)."""
    from vortexmorse.solver import census

    return census(list(gamma), restarts, seed=seed)


CENSUS_SECONDS: dict = {}


def timed_census(gamma: tuple, restarts: int, seed: int = 0):
    """``cached_census`` plus the wall time of the first (uncached) run."""
    import time

    if (gamma, restarts, seed) not in CENSUS_SECONDS:
        t0 = time.perf_counter()
        cached_census(gamma, restarts, seed)
        CENSUS_SECONDS[(gamma, restarts, seed)] = time.perf_counter() - t0
    return cached_census(gamma, restarts, seed), CENSUS_SECONDS[(gamma, restarts, seed)]


@functools.lru_cache(maxsize=None)
def random_circulation_census(count: int = 50, restarts: int = 60, seed: int = 2024):
    """Census outputs for ``count`` random circulation vectors in (0.1, 2]^n,
    alternating n = 3 and n = 4; returns a list of RelativeEquilibrium."""
    from vortexmorse.solver import census

    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = 3 + k % 2
        gamma = 0.1 + 1.9 * (1.0 - rng.random(n))
        rep = census(gamma.tolist(), restarts, seed=k)
        out.extend(c.equilibrium for c in rep.classes)
    return out


# ----------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    ok = rep.passed if rep.when == "call" else False
    prev = _CRITERIA.get(number, (True, title))[0]
    _CRITERIA[number] = (prev and ok, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, title = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title}")
