"""Acceptance criteria 1-11 at their stated tolerances.

Each test carries a ``criterion`` marker; the session summary prints one
PASS/FAIL line per criterion.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import central_gradient, random_circulation_census, random_system, timed_census
from vortexmorse.dynamics import growth_rate, integrate, rigid_rotation_error, unstable_directions
from vortexmorse.families import (
    KITE_VARIANTS,
    asymmetric,
    asymmetric_positions,
    kite,
    kite_parameters,
    pitchfork_parameter,
    rhombus,
)
from vortexmorse.hessian import (
    anticommutator_residual,
    c4_appendix,
    c4_appendix_terms,
    c4_c6_trace,
    hessian_H,
    stability_matrix,
)
from vortexmorse.model import (
    cluster_momentum,
    gradient_H,
    hamiltonian,
    invariants,
    re_residual,
)
from vortexmorse.morse import (
    certificate_threshold,
    certificate_vanishes,
    morse_audit,
    nondegeneracy_certificate,
    poincare_polynomial,
)
from vortexmorse.solver import COLLINEAR, CONCAVE, CONVEX, analyze, census
from vortexmorse.spectral import real_pair_threshold, spectral_report

SQ3 = math.sqrt(3.0)
CENSUS_M = (0.2, 0.4, 0.6, 0.8)
RESTARTS = 5000


def census_at(m):
    return timed_census((1.0, 1.0, m, m), RESTARTS, 0)


def family_members():
    """Kite and asymmetric members sampled across their windows."""
    out = []
    for m in np.linspace(0.05, 1.0, 20):
        for b in ("plus", "minus"):
            out.append(kite(m, b))
    for m in list(np.linspace(-0.45, -0.05, 9)) + list(np.linspace(-1.95, -1.70, 6)) + [-2.5, -4.0, -10.0]:
        out.append(kite(m, "minus"))
    for m in np.linspace(-0.95, 1.0, 40):
        if abs(m) > 1e-9:
            out.append(asymmetric(m))
    return out


# ----------------------------------------------------------------------------

@pytest.mark.criterion(1, "census at m = 0.2, 0.4, 0.6, 0.8: 34 classes, gamma (6,16,12), 6/16/12, Q = (5,6)")
@pytest.mark.parametrize("m", CENSUS_M)
def test_criterion_01_census(m):
    rep, seconds = census_at(m)
    print(f"m = {m}: {rep.count} classes, gamma {rep.gamma}, geometry {rep.counts_by_geometry}, "
          f"last discovery at restart {max(rep.discovery)}, {seconds:.1f} s")
    assert seconds <= 300.0
    assert rep.saturated(0.4)
    assert rep.count == 34
    assert rep.gamma == [6, 16, 12, 0, 0]
    assert rep.counts_by_geometry == {CONVEX: 6, CONCAVE: 16, COLLINEAR: 12}
    assert rep.audit is not None and rep.audit.satisfied
    assert rep.audit.q_coefficients == [5, 6]
    assert rep.failures == 0


@pytest.mark.criterion(2, "Morse index equals real pairs of B over 200 random equilibria")
def test_criterion_02_index_equals_real_pairs():
    eqs = random_circulation_census()
    assert len(eqs) >= 200
    assert {eq.system.n for eq in eqs} == {3, 4}
    for eq in eqs:
        rep = eq.spectral
        L = eq.omega
        # independent route: full spectrum of B from the general eigensolver
        lam = np.linalg.eigvals(stability_matrix(eq.system, L))
        thr = real_pair_threshold(L)
        real = int(np.sum((np.abs(lam.real) > thr) & (np.abs(lam.imag) <= thr))) // 2
        assert rep.morse_index == real
        assert rep.route_deviation <= 1e-8 * max(1.0, L)


@pytest.mark.criterion(3, "trivial spectra {L, L, 2L, 0} and {0, 0, +-iL}")
def test_criterion_03_trivial_spectrum():
    eqs = list(random_circulation_census())
    for m in CENSUS_M:
        eqs += [c.equilibrium for c in census_at(m)[0].classes]
    eqs += [analyze(fm.system) for fm in family_members() if fm.system.circulations.all_positive]
    worst_s = worst_b = 0.0
    for eq in eqs:
        rep = eq.spectral
        tol = 1e-7 * max(1.0, rep.multiplier)
        worst_s = max(worst_s, max(t.residual for t in rep.trivial_eigenvalues) / tol)
        worst_b = max(worst_b, max(t.residual for t in rep.trivial_stability) / tol)
    print(f"{len(eqs)} equilibria; worst trivial residual / tolerance: "
          f"modified Hessian {worst_s:.3g}, stability matrix {worst_b:.3g}")
    assert worst_s <= 1.0
    assert worst_b <= 1.0


@pytest.mark.criterion(4, "closed-form kite and asymmetric families and spot values")
def test_criterion_04_families():
    for fm in family_members():
        assert re_residual(fm.system, fm.omega) <= 1e-10
    for v in KITE_VARIANTS:
        for b in ("plus", "minus"):
            assert re_residual(kite(0.6, b, v).system, kite(0.6, b, v).omega) <= 1e-10
    y3, y4 = kite_parameters(1.0, "minus").roots
    assert abs(y3 - SQ3) <= 1e-12 and abs(y4 - 1 / SQ3) <= 1e-12
    y3, y4 = kite_parameters(1.0, "plus").roots
    assert abs(y3 - SQ3) <= 1e-12 and abs(y4 - 1 / SQ3) <= 1e-12
    assert sorted(kite_parameters(0.0, "minus").roots) == pytest.approx([0.0, SQ3], abs=1e-14)
    p = asymmetric_positions(0.0)
    assert np.allclose(p[2], [0.0, SQ3], atol=1e-14) and np.allclose(p[3], [math.sqrt(5), 0.0], atol=1e-14)
    for m in np.linspace(-0.95, 0.95, 39):
        if abs(m) < 1e-9:
            continue
        fm = asymmetric(m)
        inv = invariants(fm.system)
        L = m * m + 4 * m + 1
        assert abs(inv.omega - 0.5) <= 1e-12
        assert abs(inv.angular_impulse - 2 * L) <= 1e-12
        assert abs(inv.momentum - L) <= 1e-12
    assert abs(5 * pitchfork_parameter() ** 3 + 7 * pitchfork_parameter() ** 2
               + 3 * pitchfork_parameter() + 9) <= 1e-12


@pytest.mark.criterion(5, "certificate nonzero on (0,1), zero at m = 1, nullity three at m = 1")
def test_criterion_05_certificate():
    for m in np.round(np.arange(0.05, 0.951, 0.05), 10):
        for s in (kite(m, "plus").system, kite(m, "minus").system, asymmetric(m).system):
            assert not certificate_vanishes(s), (m, nondegeneracy_certificate(s))
    for s in (kite(1.0).system, asymmetric(1.0).system):
        assert abs(nondegeneracy_certificate(s)) <= certificate_threshold(s)
    rep = spectral_report(kite(1.0).system)
    print(f"m = 1 kite: nontrivial nu {rep.nontrivial_nu}, hessian nullity {rep.hessian_nullity}")
    assert rep.hessian_nullity == 3
    assert rep.nullity == 2


@pytest.mark.criterion(6, "c4 appendix sum agrees with the trace route on 50 family configurations")
def test_criterion_06_appendix():
    configs = []
    for m in np.linspace(0.1, 1.0, 10):
        configs += [kite(m, "plus").system, kite(m, "minus").system, asymmetric(m).system]
    for m in np.linspace(-0.45, -0.05, 5):
        configs += [kite(m, "minus").system, asymmetric(m).system]
    for m in np.linspace(0.1, 0.9, 10):
        configs.append(rhombus(m).system)
    assert len(configs) == 50
    for s in configs:
        c4, _ = c4_c6_trace(s)
        app = c4_appendix(s)
        if abs(app - c4) > 1e-8 * abs(c4):
            terms = c4_appendix_terms(s)
            print(f"disagreement: trace {c4!r} appendix {app!r} terms {terms.values}")
        assert abs(app - c4) <= 1e-8 * abs(c4)


@pytest.mark.criterion(7, "index <= n - 2 and |beta| <= omega for every equilibrium")
def test_criterion_07_bounds():
    eqs = list(random_circulation_census())
    for m in CENSUS_M:
        eqs += [c.equilibrium for c in census_at(m)[0].classes]
    eqs += [analyze(fm.system) for fm in family_members() if fm.system.circulations.all_positive]
    eqs += [c.equilibrium for c in census([1, 1, 1], 500, seed=0).classes]
    for eq in eqs:
        rep = eq.spectral
        assert rep.morse_index <= eq.system.n - 2
        for beta in rep.imaginary_pairs():
            assert beta <= rep.multiplier + 1e-9


@pytest.mark.criterion(8, "rigid rotation, conservation and growth rates at m = 0.6")
@pytest.mark.parametrize("make", [lambda: kite(0.6, "minus"), lambda: kite(0.6, "plus"),
                                  lambda: asymmetric(0.6)], ids=["kite-minus", "kite-plus", "asymmetric"])
def test_criterion_08_dynamics(make):
    fm = make()
    traj = integrate(fm.system, 2 * math.pi / fm.omega, rtol=1e-10)
    err = rigid_rotation_error(traj, fm.omega)
    assert err <= 1e-6
    assert np.max(traj.drift_H) <= 1e-9
    assert np.max(traj.drift_I) <= 1e-9
    eq = analyze(fm.system)
    dirs = unstable_directions(eq)
    assert dirs
    for lam, w in dirs:
        rate = growth_rate(eq, w, eps=1e-7)
        print(f"{fm.family_tag}: rigid error {err:.2e}, lambda {lam:.6f}, fitted {rate:.6f}")
        assert abs(rate - lam) <= 0.05 * lam


@pytest.mark.criterion(9, "three-vortex census and Poincare polynomials")
def test_criterion_09_small_n():
    rep = census([1, 1, 1], 500, seed=0)
    assert rep.count == 5
    idx = sorted(c.equilibrium.index for c in rep.classes)
    assert idx == [0, 0, 1, 1, 1]
    for c in rep.classes:
        eq = c.equilibrium
        assert eq.geometry.kind == (COLLINEAR if eq.index == 1 else CONVEX)
    assert rep.audit.satisfied and rep.audit.q_coefficients == [1]
    assert morse_audit([2, 3], 3).q_coefficients == [1]
    assert poincare_polynomial(3) == [1, 2]
    assert poincare_polynomial(4) == [1, 5, 6]


@pytest.mark.criterion(10, "positive minimum separation per m and vanishing cluster momentum")
def test_criterion_10_separation():
    for m in CENSUS_M:
        rep, _ = census_at(m)
        print(f"m = {m}: min separation {rep.min_separation:.6f}")
        assert rep.min_separation > 0
    g = [1, 1, 1, 1, -0.5]
    assert cluster_momentum(g, {1, 2, 5}) == 0.0
    assert cluster_momentum(g, {3, 4, 5}) == 0.0


@pytest.mark.criterion(11, "finite-difference gradient and Hessian, anticommutation, Euler identity")
def test_criterion_11_calculus():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        s = random_system(rng, int(rng.integers(2, 7)))
        z = s.z.copy()
        g = gradient_H(s)
        f = lambda x: hamiltonian(s.with_positions(x.reshape(-1, 2)))
        assert np.linalg.norm(central_gradient(f, z, 1e-6) - g) <= 1e-6 * np.linalg.norm(g)
        D = hessian_H(s)
        gf = lambda x: gradient_H(s.with_positions(x.reshape(-1, 2)))
        fd = np.empty_like(D)
        h = 1e-6
        for k in range(z.size):
            e = np.zeros_like(z)
            e[k] = h
            fd[:, k] = (gf(z + e) - gf(z - e)) / (2 * h)
        assert np.linalg.norm(fd - D) <= 1e-5 * np.linalg.norm(D)
        assert anticommutator_residual(s) <= 1e-12 * np.linalg.norm(D)
        inv = invariants(s)
        euler = g @ (s.positions - inv.center).ravel()
        assert abs(euler + inv.momentum) <= 1e-10 * max(1.0, abs(inv.momentum))
