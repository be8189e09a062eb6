from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given

from conftest import central_gradient, random_system, systems
from vortexmorse.errors import (
    BadSubset,
    CollisionError,
    DegenerateCirculation,
    NonNormalizable,
    ValidationError,
)
from vortexmorse.families import asymmetric, kite
from vortexmorse.model import (
    Circulations,
    VortexSystem,
    angular_impulse_mutual,
    cluster_momentum,
    gradient_H,
    hamiltonian,
    invariants,
    normalize,
    re_residual,
    rotate,
    translation_vectors,
)

SQ3 = math.sqrt(3.0)


def equilateral(side=1.0, gamma=(1.0, 1.0, 1.0)):
    return VortexSystem(gamma, side * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQ3 / 2]]))


class TestConstruction:
    def test_rejects_zero_circulation(self):
        with pytest.raises(ValidationError):
            Circulations([1.0, 0.0, 1.0])

    def test_rejects_tiny_circulation(self):
        with pytest.raises(ValidationError):
            Circulations([1.0, 1e-15])

    def test_rejects_collision(self):
        with pytest.raises(CollisionError):
            VortexSystem([1, 1], [[0, 0], [0, 1e-13]])

    def test_rejects_single_vortex(self):
        with pytest.raises(ValidationError):
            VortexSystem([1.0], [[0.0, 0.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            VortexSystem([1, 1, 1], [[0, 0], [1, 0]])

    def test_positions_are_read_only(self):
        s = equilateral()
        with pytest.raises(ValueError):
            s.positions[0, 0] = 5.0

    def test_round_trip_dict(self):
        s = equilateral(gamma=(1, 2, 3))
        t = VortexSystem.from_dict(s.to_dict())
        assert np.array_equal(t.positions, s.positions)
        assert t.circulations == s.circulations


class TestInvariants:
    def test_equilateral(self):
        inv = invariants(equilateral())
        assert inv.hamiltonian == pytest.approx(0.0, abs=1e-15)
        assert inv.momentum == 3.0
        assert inv.angular_impulse == pytest.approx(1.0, rel=1e-14)
        assert inv.omega == pytest.approx(3.0, rel=1e-14)
        np.testing.assert_allclose(inv.center, [0.5, SQ3 / 6], atol=1e-15)

    def test_momentum_pair_sum(self):
        assert Circulations([1, 1, 0.6, 0.6]).momentum == pytest.approx(3.76, abs=1e-15)

    @pytest.mark.parametrize("m", [-0.7, -0.2, 0.3, 0.6, 0.95])
    def test_asymmetric_omega_and_impulse(self, m):
        fm = asymmetric(m)
        inv = invariants(fm.system)
        L = m * m + 4 * m + 1
        assert inv.momentum == pytest.approx(L, abs=1e-14)
        assert inv.omega == pytest.approx(0.5, abs=1e-12)
        assert inv.angular_impulse == pytest.approx(2 * L, abs=1e-12)

    def test_zero_total_circulation_returns_partial(self):
        s = VortexSystem([1.0, -1.0], [[0, 0], [1, 0]])
        inv = invariants(s)
        assert inv.degenerate and inv.center is None
        assert math.isnan(inv.omega) and math.isnan(inv.angular_impulse)
        assert inv.momentum == -1.0
        assert inv.hamiltonian == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(DegenerateCirculation):
            angular_impulse_mutual(s)

    def test_vanishing_impulse_gives_undefined_omega(self):
        s = VortexSystem([2.0, 2.0, -1.0], [[-1.0, 0.0], [1.0, 0.0], [1.0, math.sqrt(2.0)]])
        inv = invariants(s)
        assert inv.angular_impulse == 0.0
        assert math.isnan(inv.omega)

    @given(systems())
    def test_omega_times_impulse_is_momentum(self, s):
        inv = invariants(s)
        assert inv.omega == inv.momentum / inv.angular_impulse
        assert inv.omega * inv.angular_impulse == pytest.approx(inv.momentum, rel=1e-15)


class TestAngularImpulseMutual:
    def test_two_vortices(self):
        d = 1.7
        s = VortexSystem([1, 1], [[0, 0], [d, 0]])
        assert angular_impulse_mutual(s) == pytest.approx(d * d / 2, rel=1e-15)

    def test_equilateral(self):
        assert angular_impulse_mutual(equilateral()) == pytest.approx(1.0, rel=1e-15)

    def test_matches_definition_on_many_systems(self, rng):
        for _ in range(1000):
            s = random_system(rng, int(rng.integers(2, 7)))
            I = invariants(s).angular_impulse
            assert angular_impulse_mutual(s) == pytest.approx(I, rel=1e-12)


class TestGradient:
    def test_two_vortex_pair(self):
        s = VortexSystem([1, 1], [[0.5, 0.0], [-0.5, 0.0]])
        g = gradient_H(s)
        # dH/dz1 points from vortex 1 towards vortex 2
        np.testing.assert_allclose(g, [-1.0, 0.0, 1.0, 0.0], atol=1e-15)

    @given(systems(positive=False))
    def test_euler_identity(self, s):
        inv = invariants(s)
        z = (s.positions - inv.center).ravel()
        assert abs(gradient_H(s) @ z + inv.momentum) <= 1e-10 * (1 + abs(inv.momentum))

    @given(systems())
    def test_translation_invariance(self, s):
        sv, Ksv = translation_vectors(s.n)
        g = gradient_H(s)
        scale = np.linalg.norm(g) + 1
        assert abs(g @ sv) <= 1e-12 * scale
        assert abs(g @ Ksv) <= 1e-12 * scale

    def test_finite_differences(self, rng):
        for _ in range(100):
            s = random_system(rng, 4)
            f = lambda z: hamiltonian(VortexSystem(s.circulations, z.reshape(-1, 2)))
            fd = central_gradient(f, s.z.copy(), 1e-6)
            g = gradient_H(s)
            assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g)


class TestResidual:
    def test_kite(self):
        fm = kite(0.6, "minus")
        assert re_residual(fm.system, fm.omega) <= 1e-10

    def test_asymmetric(self):
        assert re_residual(asymmetric(0.4).system, 0.5) <= 1e-10

    def test_equilateral_wrong_omega(self):
        s = equilateral()
        assert re_residual(s, 3.0) <= 1e-14
        assert re_residual(s, 0.0) > 0.1


class TestNormalize:
    def test_equilateral_side_two(self):
        s = equilateral(side=2.0)
        t = normalize(s)
        assert invariants(t).angular_impulse == pytest.approx(1.0, abs=1e-14)
        d = np.linalg.norm(t.positions[0] - t.positions[1])
        assert d == pytest.approx(1.0, abs=1e-14)

    def test_already_normalized_is_identity(self):
        t = normalize(equilateral())
        np.testing.assert_allclose(normalize(t).positions, t.positions, atol=1e-15)

    @given(systems())
    def test_center_and_impulse(self, s):
        t = normalize(s)
        inv = invariants(t)
        assert np.linalg.norm(inv.center) <= 1e-14
        assert inv.angular_impulse == pytest.approx(1.0, abs=1e-14)
        assert inv.omega == pytest.approx(inv.momentum, rel=1e-14)

    @given(systems())
    def test_idempotent(self, s):
        t = normalize(s)
        np.testing.assert_allclose(normalize(t).positions, t.positions, atol=1e-14)

    @given(systems())
    def test_hamiltonian_shift(self, s):
        inv = invariants(s)
        kappa = 1.0 / math.sqrt(inv.angular_impulse)
        t = normalize(s)
        expected = inv.hamiltonian - inv.momentum * math.log(kappa)
        assert hamiltonian(t) == pytest.approx(expected, abs=1e-11 * (1 + abs(expected)))

    def test_kite_normalized_rotates_at_L(self):
        fm = kite(0.6, "plus")
        t = normalize(fm.system)
        assert re_residual(t, t.circulations.momentum) <= 1e-10

    def test_non_normalizable(self):
        # I about the center is negative for this mixed-sign pair
        s = VortexSystem([1.0, -0.5], [[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(NonNormalizable):
            normalize(s)


class TestClusterMomentum:
    def test_cited_subsets_vanish(self):
        g = [1, 1, 1, 1, -0.5]
        assert cluster_momentum(g, {1, 2, 5}) == 0.0
        assert cluster_momentum(g, {3, 4, 5}) == 0.0

    def test_pair(self):
        assert cluster_momentum([1, 1], [1, 2]) == 1.0

    @pytest.mark.parametrize("subset", [[1], [0, 1], [1, 7], []])
    def test_bad_subset(self, subset):
        with pytest.raises(BadSubset):
            cluster_momentum([1, 1, 1], subset)


def test_rotation_is_counter_clockwise():
    p = rotate(np.array([[1.0, 0.0]]), math.pi / 2)
    np.testing.assert_allclose(p, [[0.0, 1.0]], atol=1e-15)
