import math

import numpy as np
import pytest

from robustmerton import (
    Box,
    ConsumptionBand,
    FullSpace,
    NonnegativeOrthant,
    clamp_consumption,
    distance_sq,
    project,
    scale_set,
)

N_RANDOM = 10_000


def sets_and_samplers():
    rng = np.random.default_rng(314)
    box = Box([-1.0, 0.0, -math.inf], [1.0, 2.0, 0.5])

    def sample_box_member(size):
        lo = np.array([-1.0, 0.0, -4.0])
        hi = np.array([1.0, 2.0, 0.5])
        return lo + (hi - lo) * rng.random((size, 3))

    return [
        (FullSpace(), lambda size: rng.normal(size=(size, 3)) * 3),
        (NonnegativeOrthant(), lambda size: np.abs(rng.normal(size=(size, 3)) * 3)),
        (box, sample_box_member),
    ]


class TestProjectExamples:
    def test_full_space_identity(self):
        v = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(project(FullSpace(), v), v)

    def test_orthant_positive_part(self):
        v = np.array([4.7396, 0.8333, -3.0729])
        np.testing.assert_array_equal(project(NonnegativeOrthant(), v), [4.7396, 0.8333, 0.0])

    def test_box_clamp(self):
        out = project(Box([0.0, 0.0], [1.0, 1.0]), [2.0, -1.0])
        np.testing.assert_array_equal(out, [1.0, 0.0])


class TestDistanceExamples:
    def test_member_has_zero_distance(self):
        assert distance_sq(NonnegativeOrthant(), [1.0, 2.0]) == 0.0
        assert distance_sq(FullSpace(), [9.0, -9.0]) == 0.0

    def test_single_negative_coordinate(self):
        assert distance_sq(NonnegativeOrthant(), [1.0, -2.0]) == 4.0

    def test_box_corner(self):
        assert distance_sq(Box([0.0, 0.0], [1.0, 1.0]), [2.0, -1.0]) == 2.0


class TestScaleSet:
    def test_orthant_invariant(self):
        s = scale_set(NonnegativeOrthant(), [1.25, 1.75, 2.25])
        assert isinstance(s, NonnegativeOrthant)

    def test_full_space_invariant(self):
        assert isinstance(scale_set(FullSpace(), [4.0]), FullSpace)

    def test_box_bounds_scaled_by_root(self):
        s = scale_set(Box([0.0], [1.0]), [4.0])
        np.testing.assert_array_equal(s.lower, [0.0])
        np.testing.assert_array_equal(s.upper, [2.0])

    def test_infinite_bounds_preserved(self):
        s = scale_set(Box([-math.inf], [math.inf]), [9.0])
        assert s.lower[0] == -math.inf and s.upper[0] == math.inf

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            scale_set(NonnegativeOrthant(), [1.0, 0.0, 2.0])


class TestBand:
    def test_clamp_interior_and_bounds(self):
        band = ConsumptionBand(0.2, 1.0)
        assert clamp_consumption(band, 0.5) == 0.5
        assert clamp_consumption(band, 2.0) == 1.0
        assert clamp_consumption(band, 0.1) == 0.2

    def test_reciprocal_bounds_with_infinities(self):
        assert ConsumptionBand(0.0, math.inf).reciprocal_bounds() == (0.0, math.inf)
        assert ConsumptionBand(0.2, 1.0).reciprocal_bounds() == (1.0, 5.0)

    def test_invalid_band_rejected(self):
        with pytest.raises(ValueError):
            ConsumptionBand(-0.1, 1.0)
        with pytest.raises(ValueError):
            ConsumptionBand(1.0, 1.0)

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            Box([1.0], [0.0])


@pytest.mark.parametrize("exposure_set,sample_member", sets_and_samplers())
class TestProjectionAxioms:
    """Projection axioms on batches of randomized vectors."""

    def _points(self):
        rng = np.random.default_rng(2718)
        return rng.normal(size=(N_RANDOM, 3)) * 4

    def test_idempotent_exactly(self, exposure_set, sample_member):
        v = self._points()
        once = np.array([project(exposure_set, row) for row in v])
        twice = np.array([project(exposure_set, row) for row in once])
        np.testing.assert_array_equal(once, twice)

    def test_nonexpansive(self, exposure_set, sample_member):
        rng = np.random.default_rng(99)
        u = rng.normal(size=(N_RANDOM, 3)) * 4
        v = rng.normal(size=(N_RANDOM, 3)) * 4
        pu = np.array([project(exposure_set, row) for row in u])
        pv = np.array([project(exposure_set, row) for row in v])
        lhs = np.sum((pu - pv) ** 2, axis=1)
        rhs = np.sum((u - v) ** 2, axis=1)
        assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-15)

    def test_variational_inequality(self, exposure_set, sample_member):
        v = self._points()
        w = sample_member(N_RANDOM)
        pv = np.array([project(exposure_set, row) for row in v])
        inner = np.sum((v - pv) * (w - pv), axis=1)
        assert inner.max() <= 1e-12

    def test_distance_matches_projection(self, exposure_set, sample_member):
        v = self._points()
        for row in v[:1000]:
            gap = row - project(exposure_set, row)
            direct = distance_sq(exposure_set, row)
            np.testing.assert_allclose(direct, gap @ gap, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("cone", [FullSpace(), NonnegativeOrthant()])
def test_cone_pythagoras(cone):
    rng = np.random.default_rng(1618)
    v = rng.normal(size=(N_RANDOM, 3)) * 4
    pv = np.array([project(cone, row) for row in v])
    norms = np.sum(v ** 2, axis=1)
    split = np.sum(pv ** 2, axis=1) + np.array([distance_sq(cone, row) for row in v])
    np.testing.assert_allclose(split, norms, rtol=1e-12, atol=0)
