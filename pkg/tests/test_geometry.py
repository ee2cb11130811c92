import math

import numpy as np
import pytest

from momsq import geometry as geo


class TestCurves:
    def test_moment_points(self):
        assert np.allclose(geo.moment_curve(3, 0.0), [0, 0, 0])
        assert np.allclose(geo.moment_curve(2, 1.0), [1, 1])
        assert np.allclose(geo.moment_curve(4, 0.5), [0.5, 0.25, 0.125, 0.0625])

    def test_phi_points(self):
        assert np.allclose(geo.phi_curve(2, 0.0), [1, 0, 0])
        assert np.allclose(geo.phi_curve(2, 1.0), [1, 1, 0.5])

    def test_phi_derivative_column(self):
        assert np.allclose(geo.phi_deriv(2, 1, 0.0), [0, 1, 0])

    def test_frame_determinants_uniform(self):
        # moment frame det is prod(i!) for every t; phi frame det is 1
        for n in (2, 3, 4):
            target = float(np.prod([math.factorial(i) for i in range(1, n + 1)]))
            dets = [np.linalg.det(geo.moment_frame(n, t))
                    for t in np.linspace(0, 1, 21)]
            assert max(dets) / min(dets) < math.exp(3)
            assert np.allclose(dets, target)
            pdets = [np.linalg.det(geo.phi_frame(n, t))
                     for t in np.linspace(0, 1, 21)]
            assert np.allclose(pdets, 1.0)


class TestPartition:
    def test_counts(self):
        part = geo.partition_moment(2, 16)
        assert len(part) == 4
        assert np.allclose([b.t0 for b in part.blocks], [0, 0.25, 0.5, 0.75])
        assert len(geo.partition_moment(3, 8 ** 3)) == 8

    def test_tiling(self):
        part = geo.partition_moment(2, 64)
        starts = [b.t0 for b in part.blocks]
        ends = [b.t0 + b.width for b in part.blocks]
        assert starts[0] == 0.0 and np.isclose(ends[-1], 1.0)
        assert np.allclose(ends[:-1], starts[1:])

    def test_inadmissible_scale(self):
        with pytest.raises(ValueError):
            geo.partition_moment(2, 15)


class TestBlockMembership:
    def test_center_and_arc(self):
        part = geo.partition_moment(2, 64)
        b = part.blocks[2]
        assert geo.block_contains(b, b.center)
        on_arc = geo.moment_curve(2, b.t0 + b.width / 2)
        assert geo.block_contains(b, on_arc)

    def test_outside_first_axis(self):
        part = geo.partition_moment(2, 64)
        b = part.blocks[1]
        pt = b.center + 2 * b.width * b.frame[:, 0]
        assert not geo.block_contains(b, pt)

    def test_vectorized(self):
        part = geo.partition_moment(3, 64)
        b = part.blocks[0]
        pts = np.stack([b.center, b.center + 10 * b.frame @ b.half_widths])
        got = geo.block_contains(b, pts)
        assert got.tolist() == [True, False]


class TestDualBox:
    def test_axes_at_origin(self):
        b = geo.partition_moment(2, 16).blocks[0]
        d = geo.dual_box(b)
        assert np.allclose(np.abs(d.axes), np.eye(2), atol=1e-12)
        assert np.allclose(d.half_lengths, [4, 16])

    def test_n3(self):
        b = geo.partition_moment(3, 64).blocks[0]
        d = geo.dual_box(b)
        assert np.allclose(np.abs(d.axes), np.eye(3), atol=1e-12)
        assert np.allclose(d.half_lengths, [4, 16, 64])

    def test_orthonormal_everywhere(self):
        for blk in geo.partition_moment(3, 8 ** 3).blocks:
            d = geo.dual_box(blk)
            g = d.axes @ d.axes.T
            assert np.abs(g - np.eye(3)).max() < 1e-10
            assert np.all(np.diff(d.half_lengths) > 0)


class TestConeSectors:
    def test_counts(self):
        assert len(geo.partition_cone(2, 0, 16, 1.0)) == 4
        assert len(geo.partition_cone(2, 1, 16, 0.5)) == 8

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            geo.partition_cone(2, 2, 16)

    def test_membership_needs_lower_bound(self):
        sec = geo.partition_cone(2, 0, 64)[1]
        # phi(a) itself has lam = (1, 0, 0): passes box and lower bound
        assert geo.sector_contains(sec, geo.phi_curve(2, sec.a))
        # tiny multiple fails the max-lower-bound condition
        assert not geo.sector_contains(sec, 0.01 * geo.phi_curve(2, sec.a))


class TestSumsetCensus:
    def test_diagonal_self_overlap(self):
        mx, hist, pairs = geo.sumset_overlap_census(2, 16)
        assert pairs == 4 * 4
        assert mx >= 1
        assert min(hist) >= 1

    def test_constant_once_saturated(self):
        # the observed constant is R-independent once the index range stops
        # clipping it (R = 16 has only 16 pairs in total)
        m64 = geo.sumset_overlap_census(2, 64)[0]
        m256 = geo.sumset_overlap_census(2, 256)[0]
        m1024 = geo.sumset_overlap_census(2, 1024, max_pairs=10 ** 7)[0]
        assert m64 == m256 == m1024
        assert geo.sumset_overlap_census(2, 16)[0] <= m64

    def test_n3_concentrated(self):
        mx, hist, _ = geo.sumset_overlap_census(3, 64)
        bulk = sum(c for v, c in hist.items() if v <= mx)
        assert mx <= 64   # O(1) compared with the 16 pairs squared
        assert bulk == sum(hist.values())

    def test_resource_cap(self):
        with pytest.raises(ValueError):
            geo.sumset_overlap_census(2, 2 ** 20, max_pairs=100)


class TestConeNesting:
    def test_order0_containment(self):
        rep = geo.cone_nesting_check(2, 256, 16, samples=2000, seed=1)
        assert rep["m0_violations"] == 0

    def test_witnesses(self):
        rep = geo.cone_nesting_check(3, 8 ** 4, 8, samples=200, seed=2)
        for m, entry in rep["witnesses"].items():
            big = entry["in_R_not_r"]
            assert big["member_R"] and big["decisive"] and not big["member_r"]
            small = entry["in_r_not_R"]
            assert small["member_r"] and not small["member_R"]

    def test_equal_scales(self):
        rep = geo.cone_nesting_check(2, 16, 16, samples=100)
        assert rep["symmetric_difference"] == "empty (r == R)"


class TestL2TechProbe:
    def test_n1_scaling(self):
        out = geo.l2tech_overlap_probe(1, 4096, 1.0, trials=100, seed=0)
        assert out["max_T"] <= 20.0 / 4096

    def test_zero_always_admissible(self):
        out = geo.l2tech_overlap_probe(2, 256, 1.0, trials=50, seed=3)
        assert out["max_T"] >= 0.0

    def test_n2_bound(self):
        out = geo.l2tech_overlap_probe(2, 4096, 1.0, trials=200, seed=4)
        assert out["max_T"] <= 10.0 * 4096 ** (-0.5)
