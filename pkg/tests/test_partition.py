"""Leaf growth, conditional densities, strip crossings, pre-atom splits."""
import dataclasses
import math

import numpy as np
import pytest

from lyapshear.cocycle import apply_lift
from lyapshear.errors import ConeLoss, PoorFit, TooFewStrips
from lyapshear.geometry import (EPS_M, Region, RegionSpec, classify_points,
                                condition_report, fit_constants)
from lyapshear.partition import (CROSSING_WINDOW, SPLIT_MIN_CROSSINGS,
                                 atom_split, count_bad_crossings,
                                 crossing_lengths, density_ratio,
                                 fit_partition_constants,
                                 grow_unstable_segment,
                                 grow_unstable_segments, unstable_directions)
from lyapshear.rng import orbit_generator
from lyapshear.system import default_system

S3 = default_system(3)
S4 = default_system(4)
C3 = fit_constants(S3)
ALPHA = 0.25
ANCHOR = np.array([0.15, 0.62, 0.38])
T_DESK = S3.t_theorem_a(8, 0.5)
REG800 = RegionSpec(ALPHA, 800.0)

SEG0 = grow_unstable_segment(S3, 6, 0.0, ANCHOR, 18.0)
SEG_DESK = grow_unstable_segment(S3, 8, T_DESK, ANCHOR, 18.0)
SEG800 = grow_unstable_segment(S3, 8, 800.0, ANCHOR, 18.0)
SPLIT800 = atom_split(S3, SEG800, ALPHA)


def report_gamma(n, t):
    return condition_report(S3, n, t, ALPHA, C3).gamma


def cone_ratios(seg):
    cu = seg.directions @ S3.phi_u
    w = seg.directions - cu[:, None] * S3.v_u
    return np.linalg.norm(w, axis=1) / np.abs(cu)


class TestDirections:
    def test_linear_field_is_the_eigendirection(self):
        pts = orbit_generator(0, 11).random((64, 3))
        dirs = unstable_directions(S3, 6, 0.0, pts)
        assert np.abs(dirs - S3.v_u).max() < 1e-12

    def test_single_point_keeps_shape(self):
        d = unstable_directions(S3, 8, 800.0, ANCHOR)
        assert d.shape == (3,)
        assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)

    def test_field_sits_inside_reported_cone(self):
        # the grown directions must respect the fitted invariant-cone size,
        # far below the structural cap used during growth
        for seg, gamma in ((SEG_DESK, report_gamma(8, T_DESK)),
                           (SEG800, report_gamma(8, 800.0))):
            assert float(cone_ratios(seg).max()) < gamma

    def test_positive_dual_orientation(self):
        assert np.all(SEG800.directions @ S3.phi_u > 0.0)
        assert np.all(SEG_DESK.directions @ S3.phi_u > 0.0)

    def test_matches_segment_directions(self):
        dirs = unstable_directions(S3, 8, 800.0, SEG800.nodes)
        assert np.abs(dirs - SEG800.directions).max() < 1e-8

    def test_cone_loss_outside_perturbative_regime(self):
        with pytest.raises(ConeLoss):
            unstable_directions(S3, 2, 1000.0, ANCHOR)

    def test_cone_loss_under_tiny_cap(self):
        with pytest.raises(ConeLoss):
            unstable_directions(S3, 8, 800.0, ANCHOR, gamma=1e-9)


class TestLeafGrowth:
    def test_linear_leaf_is_a_straight_line(self):
        line = ANCHOR + np.outer(SEG0.arc_positions(), S3.v_u)
        assert np.abs(SEG0.nodes - line).max() < 1e-12
        assert np.abs(SEG0.directions - S3.v_u).max() < 1e-12
        assert SEG0.length == pytest.approx(18.0, abs=1e-12)

    def test_length_and_step_bookkeeping(self):
        arcs = SEG800.arc_positions()
        assert SEG800.length == pytest.approx(float(arcs[-1]), abs=1e-12)
        assert SEG800.nodes.shape[0] == round(18.0 / SEG800.step) + 1
        assert SEG800.length == pytest.approx(18.0, abs=1e-3)

    def test_growth_is_refinement_stable(self):
        fine = grow_unstable_segment(S3, 8, 800.0, ANCHOR, 18.0,
                                     max_step=0.25)
        interp = np.stack([np.interp(SEG800.arc_positions(),
                                     fine.arc_positions(), fine.nodes[:, k])
                           for k in range(3)], axis=1)
        assert np.abs(interp - SEG800.nodes).max() < 1e-8
        assert abs(fine.length - SEG800.length) < 1e-6 * 18.0

    def test_batch_matches_single_growth(self):
        anchors = np.array([[0.15, 0.62, 0.38],
                            [0.70, 0.10, 0.90],
                            [0.33, 0.85, 0.05]])
        segs = grow_unstable_segments(S3, 8, 800.0, anchors, 18.0)
        assert len(segs) == 3
        assert np.abs(segs[0].nodes - SEG800.nodes).max() < 1e-8
        for seg, a in zip(segs, anchors):
            assert np.array_equal(seg.anchor, a)

    def test_image_length_in_expansion_window(self):
        # pushing a leaf through the word multiplies arc length by the
        # expansion rate up to the invariant-cone distortion
        for seg, t in ((SEG800, 800.0), (SEG_DESK, T_DESK)):
            img = apply_lift(S3.engine_word(8, t), seg.nodes)
            ilen = float(np.sum(np.linalg.norm(np.diff(img, axis=0),
                                               axis=1)))
            gamma = report_gamma(8, t)
            factor = ilen / seg.length / S3.lam_u ** 8
            assert (1.0 - gamma) / (1.0 + gamma) < factor
            assert factor < (1.0 + gamma) / (1.0 - gamma)


class TestDensity:
    def test_weights_are_the_closed_form(self):
        want = 1.0 / np.abs(SEG800.directions @ S3.phi_u)
        assert np.abs(SEG800.weights - want).max() < 1e-14

    def test_linear_density_is_uniform(self):
        assert np.abs(SEG0.weights - 1.0).max() < 1e-12

    def test_ratio_identity_and_inverse(self):
        assert density_ratio(SEG800, 5, 5) == pytest.approx(1.0, abs=1e-15)
        ij = density_ratio(SEG800, 3, 40) * density_ratio(SEG800, 40, 3)
        assert ij == pytest.approx(1.0, abs=1e-12)

    def test_ratio_accepts_index_arrays(self):
        i = np.arange(10)
        out = density_ratio(SEG800, i, i[::-1])
        assert out.shape == (10,)

    def test_ratios_inside_distortion_window(self):
        for seg, gamma in ((SEG_DESK, report_gamma(8, T_DESK)),
                           (SEG800, report_gamma(8, 800.0))):
            hi = (1.0 + gamma) / (1.0 - gamma)
            spread = float(seg.weights.max() / seg.weights.min())
            assert 1.0 / hi < spread < hi


class TestStripCrossings:
    def test_count_in_designed_window(self):
        k = count_bad_crossings(SEG800, REG800)
        assert CROSSING_WINDOW[0] <= k <= CROSSING_WINDOW[1]
        assert k == SPLIT800.crossings

    def test_crossing_lengths_in_tolerance_band(self):
        ells = crossing_lengths(SEG800)
        per = 0.5 / math.sin(S3.theta_u)
        assert ells.size >= SPLIT800.crossings - 1
        assert float(ells.min()) > (1.0 - EPS_M) * per
        assert float(ells.max()) < (1.0 + EPS_M) * per

    def test_linear_crossing_lengths_are_exact(self):
        ells = crossing_lengths(SEG0)
        per = 0.5 / math.sin(S3.theta_u)
        assert np.abs(ells - per).max() < 1e-12

    def test_short_segment_has_no_complete_crossing(self):
        seg = grow_unstable_segment(S3, 8, 800.0, ANCHOR, 0.2)
        assert crossing_lengths(seg).size == 0

    def test_non_monotone_segment_rejected(self):
        nodes = SEG0.nodes.copy()
        nodes[:, 0] = np.abs(nodes[:, 0] - nodes[len(nodes) // 2, 0])
        bent = dataclasses.replace(SEG0, nodes=nodes)
        with pytest.raises(ValueError):
            crossing_lengths(bent)


class TestAtomSplit:
    def test_masses_sum_to_one(self):
        assert sum(SPLIT800.masses.values()) == pytest.approx(1.0,
                                                              abs=1e-12)
        assert SPLIT800.child_masses.sum() == pytest.approx(1.0, abs=1e-9)

    def test_good_classes_hold_majority(self):
        assert SPLIT800.masses[Region.GOOD_PLUS] > 1.0 / 3.0
        assert SPLIT800.masses[Region.GOOD_MINUS] > 1.0 / 3.0

    def test_bad_mass_tracks_strip_fraction(self):
        (a, b), _ = REG800.bad_intervals()
        assert abs(SPLIT800.masses[Region.BAD] - 2.0 * (b - a)) < 0.02

    def test_child_count_matches_expansion(self):
        assert SPLIT800.n_children == SPLIT800.child_masses.size
        assert SPLIT800.n_children == pytest.approx(S3.lam_u ** 8,
                                                    rel=1e-3)

    def test_child_labels_are_truthful(self):
        # re-derive the label of sampled children from their x footprint
        # with independent lattice arithmetic
        arcs = SEG800.arc_positions()
        xb = np.interp(SPLIT800.child_bounds, arcs, SEG800.nodes[:, 0])
        a = np.minimum(xb[:-1], xb[1:])
        b = np.maximum(xb[:-1], xb[1:])
        (lo, hi), _ = REG800.bad_intervals()
        w = 0.5 * (hi - lo)
        idx = orbit_generator(2, 0).integers(0, SPLIT800.n_children, 500)
        for i in idx:
            j_lo = math.ceil((a[i] - w - 0.25) / 0.5)
            j_hi = math.floor((b[i] + w - 0.25) / 0.5)
            touches = j_hi >= j_lo
            if SPLIT800.labels[i] == 0:
                assert touches
            else:
                assert not touches
                mid = ((a[i] + b[i]) / 2.0) % 1.0
                assert classify_points(mid, REG800) == SPLIT800.labels[i]

    def test_linear_split_matches_lattice_oracle(self):
        split0 = atom_split(S3, SEG0, ALPHA, region=REG800)
        lam6 = S3.lam_u ** 6
        img_total = 18.0 * lam6
        cuts = np.arange(1.0, img_total / 18.0) * 18.0
        cuts = cuts[cuts < img_total * (1.0 - 1e-12)]
        bounds = np.concatenate([[0.0], cuts / lam6, [18.0]])
        xs = ANCHOR[0] + bounds * float(S3.v_u[0])
        a = np.minimum(xs[:-1], xs[1:])
        b = np.maximum(xs[:-1], xs[1:])
        (lo, hi), _ = REG800.bad_intervals()
        w = 0.5 * (hi - lo)
        bad = (np.floor((b + w - 0.25) / 0.5)
               >= np.ceil((a - w - 0.25) / 0.5))
        codes = classify_points(((a + b) / 2.0) % 1.0, REG800)
        labels = np.where(bad, np.int8(0), codes)
        masses = np.diff(bounds) / 18.0
        assert split0.n_children == labels.size
        for region, code in ((Region.BAD, 0), (Region.GOOD_PLUS, 1),
                             (Region.GOOD_MINUS, -1)):
            want = float(masses[labels == code].sum())
            assert split0.masses[region] == pytest.approx(want, abs=1e-9)

    def test_masses_stable_under_refinement(self):
        fine = grow_unstable_segment(S3, 8, 800.0, ANCHOR, 18.0,
                                     max_step=0.25)
        other = atom_split(S3, fine, ALPHA)
        for key in SPLIT800.masses:
            assert abs(other.masses[key] - SPLIT800.masses[key]) < 1e-4

    def test_image_cut_override_doubles_children(self):
        half = atom_split(S3, SEG800, ALPHA,
                          image_atom_length=SEG800.length / 2.0)
        assert abs(half.n_children - 2 * SPLIT800.n_children) <= 2

    def test_rejects_too_few_crossings(self):
        short = grow_unstable_segment(S3, 8, 800.0, ANCHOR, 6.0)
        with pytest.raises(TooFewStrips):
            atom_split(S3, short, ALPHA)

    def test_rejects_length_outside_window(self):
        for bad_length in (3.0, 35.0):
            fake = dataclasses.replace(SEG800, length=bad_length)
            with pytest.raises(ValueError, match="outside"):
                atom_split(S3, fake, ALPHA)

    def test_row_record(self):
        row = SPLIT800.row()
        assert set(row) == {"n", "t", "alpha", "length", "mass_B",
                            "mass_Gplus", "mass_Gminus",
                            "density_ratio_max"}
        assert row["n"] == 8 and row["t"] == 800.0
        assert row["mass_B"] == SPLIT800.masses[Region.BAD]
        assert row["density_ratio_max"] >= 1.0

    def test_dimension_four_split(self):
        anchor = np.array([0.15, 0.62, 0.38, 0.71])
        length = 27.0 * 0.5 / math.sin(S4.theta_u)
        seg = grow_unstable_segment(S4, 4, 800.0, anchor, length)
        split = atom_split(S4, seg, ALPHA)
        assert sum(split.masses.values()) == pytest.approx(1.0, abs=1e-9)
        assert split.masses[Region.GOOD_PLUS] > 1.0 / 3.0
        assert split.masses[Region.GOOD_MINUS] > 1.0 / 3.0
        assert SPLIT_MIN_CROSSINGS <= split.crossings <= CROSSING_WINDOW[1]


class TestFitPartitionConstants:
    stats = fit_partition_constants(S3)

    def test_keys_and_fit_quality(self):
        assert set(self.stats) == {"d_L", "D_L", "delta_L", "delta_L_slope"}
        assert self.stats["delta_L"][1] > 0.99
        assert self.stats["delta_L_slope"][0] == pytest.approx(1.0, abs=0.1)

    def test_atom_length_bounds(self):
        per = 0.5 / math.sin(S3.theta_u)
        k_lo, k_hi = CROSSING_WINDOW
        assert self.stats["d_L"][0] == pytest.approx((k_lo - 1) * per,
                                                     rel=EPS_M)
        assert self.stats["D_L"][0] == pytest.approx((k_hi + 1) * per,
                                                     rel=EPS_M)
        assert self.stats["d_L"][0] < self.stats["D_L"][0]

    def test_bad_mass_coefficient_band(self):
        assert 0.5 < self.stats["delta_L"][0] < 0.9

    def test_feeds_fitted_constants(self):
        merged = fit_constants(S3, partition_stats=self.stats)
        for key in ("d_L", "D_L", "delta_L"):
            assert merged[key] == self.stats[key]

    def test_poor_fit_raises(self):
        with pytest.raises(PoorFit):
            fit_partition_constants(S3, r2_floor=1.0)

    def test_dimension_four_band(self):
        stats = fit_partition_constants(S4)
        per = 0.5 / math.sin(S4.theta_u)
        assert stats["d_L"][0] == pytest.approx(9.0 * per, rel=EPS_M)
        assert 0.5 < stats["delta_L"][0] < 0.9
        assert stats["delta_L"][1] > 0.99
