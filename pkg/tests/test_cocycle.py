"""Composed-word engine: spectra, restrictions, projective action."""
import numpy as np
import pytest

from lyapshear.cocycle import (ComposedSystem, LinearFactor, ProjectivePoint,
                               ShearFactor, StablePlane, angle_distance,
                               lyapunov_spectrum, orbit, projective_step,
                               push_angle, restricted_matrix, restricted_step,
                               restricted_stable_cocycle, top_stable_exponent)
from lyapshear.errors import (NumericalBlowup, PlaneNotInvariant, ZeroVector)
from lyapshear.lattice import ToralAutomorphism, frame_by_role
from lyapshear.shear import ShearMap
from lyapshear.system import default_system

S3 = default_system(3)
IDENTITY3 = ToralAutomorphism(((1, 0, 0), (0, 1, 0), (0, 0, 1)))


def composed(n=2, t=0.5, phase=0.0):
    return S3.engine_word(n, t, phase)


class TestWordBasics:
    def test_empty_word_rejected(self):
        with pytest.raises(ValueError):
            ComposedSystem(())

    def test_mixed_dims_rejected(self):
        f2 = LinearFactor(ToralAutomorphism(((2, 1), (1, 1))), 1)
        f3 = LinearFactor(S3.engine, 1)
        with pytest.raises(ValueError):
            ComposedSystem((f2, f3))

    def test_power_overflow_guard(self):
        with pytest.raises(OverflowError):
            LinearFactor(S3.engine, 25)

    def test_apply_matches_manual_composition(self):
        sys_ = composed()
        gen = np.random.Generator(np.random.Philox(1))
        p = gen.random(3)
        sh = sys_.factors[0].shear
        manual = (S3.engine.power(2).matrix() @ sh.apply(p)) % 1.0
        assert np.allclose(sys_.apply(p), manual % 1.0, atol=1e-12)

    def test_inverse_roundtrip(self):
        sys_ = composed(n=3, t=1.7)
        inv = sys_.inverse()
        gen = np.random.Generator(np.random.Philox(2))
        pts = gen.random((50, 3))
        back = inv.apply(sys_.apply(pts))
        err = np.abs(back - pts)
        err = np.minimum(err, 1.0 - err)
        assert err.max() < 1e-9

    def test_chain_rule_against_factor_jets(self):
        # full-word derivative == ordered product of per-factor jets
        sys_ = composed(n=2, t=2.3)
        gen = np.random.Generator(np.random.Philox(3))
        for p in gen.random((20, 3)):
            cur = p.copy()
            total = np.eye(3)
            for f in sys_.factors:
                if isinstance(f, LinearFactor):
                    total = f.matrix @ total
                    cur = (f.matrix @ cur) % 1.0
                else:
                    j = f.shear.jet(cur)
                    total = j.derivative @ total
                    cur = j.image
            _, deriv = sys_.jet(p)
            assert np.abs(deriv - total).max() <= 1e-10 * np.abs(total).max()

    def test_jet_batch_shape(self):
        sys_ = composed()
        pts = np.random.default_rng(0).random((7, 3))
        imgs, derivs = sys_.jet(pts)
        assert imgs.shape == (7, 3) and derivs.shape == (7, 3, 3)
        img1, d1 = sys_.jet(pts[0])
        assert img1.shape == (3,) and np.allclose(d1, derivs[0])


class TestOrbit:
    def test_identity_word_constant(self):
        sys_ = ComposedSystem((LinearFactor(IDENTITY3, 1),))
        p0 = np.array([0.3, 0.6, 0.9])
        out = orbit(sys_, p0, 10)
        assert np.allclose(out, p0)

    def test_origin_fixed_by_linear(self):
        out = orbit(S3.linear_word(3), np.zeros(3), 20)
        assert np.allclose(out, 0.0)

    def test_orbit_matches_apply_and_stays_on_torus(self):
        # the word stretches rounding differences by ~25x per step, so only
        # a short horizon is comparable across the two evaluation paths
        sys_ = composed(n=2, t=3.0)
        p0 = np.array([0.123, 0.456, 0.789])
        out = orbit(sys_, p0, 4)
        p = p0
        for k in range(1, 5):
            p = sys_.apply(p)
            assert np.allclose(out[k], p, atol=1e-10)
        assert out.min() >= 0.0 and out.max() < 1.0

    def test_orbit_matches_apply_nonexpanding_word(self):
        sys_ = ComposedSystem((ShearFactor(S3.shear(0.8)),))
        p0 = np.array([0.123, 0.456, 0.789])
        out = orbit(sys_, p0, 40)
        p = p0
        for k in range(1, 41):
            p = sys_.apply(p)
            assert np.allclose(out[k], p, atol=1e-12)


class TestSpectrum:
    def test_linear_word_matches_certified_eigenvalues(self):
        n = 4
        est = lyapunov_spectrum(S3.linear_word(n), n_steps=20000, n_orbits=2,
                                seed=0)
        target = n * np.log([S3.lam_u, S3.lam_ws, S3.lam_ss])
        assert np.abs(est.exponents / target - 1).max() < 1e-8

    def test_identity_word_zero_exponents(self):
        sys_ = ComposedSystem((LinearFactor(IDENTITY3, 1),))
        est = lyapunov_spectrum(sys_, n_steps=5000, n_orbits=2, seed=0,
                                burn_in=10)
        assert np.abs(est.exponents).max() < 1e-14

    def test_conservative_word_sum_zero(self):
        est = lyapunov_spectrum(composed(n=2, t=1.3), n_steps=20000,
                                n_orbits=4, seed=1)
        slack = 3 * np.sqrt((est.std_errors ** 2).sum()) + 1e-9
        assert abs(est.exponents.sum()) <= slack

    def test_inverse_word_spectrum_negated_reversed(self):
        sys_ = composed(n=2, t=0.8)
        est_f = lyapunov_spectrum(sys_, n_steps=40000, n_orbits=8, seed=2)
        est_b = lyapunov_spectrum(sys_.inverse(), n_steps=40000, n_orbits=8,
                                  seed=9)
        diff = est_f.exponents + est_b.exponents[::-1]
        slack = 3 * np.sqrt(est_f.std_errors ** 2
                            + est_b.std_errors[::-1] ** 2) + 1e-9
        assert np.all(np.abs(diff) <= slack)

    def test_top_exponent_reorth_invariance(self):
        sys_ = composed(n=2, t=0.9)
        tops = []
        for period in (1, 8, 32):
            est = lyapunov_spectrum(sys_, n_steps=20000, n_orbits=2, k=1,
                                    seed=4, reorth_period=period)
            tops.append(est.exponents[0])
        assert max(tops) - min(tops) < 1e-6

    def test_reorth_period_validated(self):
        for bad in (0, 65):
            with pytest.raises(ValueError):
                lyapunov_spectrum(composed(), 100, n_orbits=1,
                                  reorth_period=bad)

    def test_blowup_detected_for_long_period(self):
        # one column grows ~ e^(16.2 * 64) between reorthonormalizations,
        # overflowing the representable window
        with pytest.raises(NumericalBlowup):
            lyapunov_spectrum(S3.linear_word(10), n_steps=2000, n_orbits=1,
                              k=1, seed=0, reorth_period=64)

    def test_deterministic_across_threads(self):
        sys_ = composed(n=2, t=1.1)
        a = lyapunov_spectrum(sys_, n_steps=5000, n_orbits=6, seed=5,
                              threads=1)
        b = lyapunov_spectrum(sys_, n_steps=5000, n_orbits=6, seed=5,
                              threads=3)
        assert a.exponents.tobytes() == b.exponents.tobytes()
        assert a.per_orbit.tobytes() == b.per_orbit.tobytes()

    def test_linear_case_concentrates(self):
        # constant derivative: per-orbit estimates agree to rounding noise
        est = lyapunov_spectrum(S3.linear_word(2), n_steps=10000, n_orbits=6,
                                seed=6)
        assert est.std_errors.max() < 1e-9

    def test_std_error_shrinks_with_n(self):
        sys_ = composed(n=2, t=1.3)
        se = []
        for n_steps in (10000, 160000):
            est = lyapunov_spectrum(sys_, n_steps=n_steps, n_orbits=16, k=1,
                                    seed=7)
            se.append(est.std_errors[0])
        assert se[1] < 0.6 * se[0]

    def test_explicit_points_override(self):
        pts = np.full((3, 3), 0.25)
        est = lyapunov_spectrum(composed(), n_steps=2000, n_orbits=99,
                                points=pts, seed=0)
        assert est.n_orbits == 3
        assert np.allclose(est.per_orbit[0], est.per_orbit[1])


class TestRestricted:
    def test_shear_fixes_translation_direction(self):
        word = ComposedSystem((ShearFactor(S3.shear(4.0)),))
        p = np.array([0.37, 0.11, 0.52])
        _, v = restricted_step(word, S3.plane, p, np.array([0.0, 1.0]))
        assert np.allclose(v, [0.0, 1.0], atol=1e-12)

    def test_word_restriction_determinant(self):
        # restriction determinant = product of in-plane rates; the shear
        # contributes determinant one exactly
        word = S3.engine_word(1, 2.5)
        gen = np.random.Generator(np.random.Philox(8))
        mats = restricted_stable_cocycle(word, S3.plane, gen.random((100, 3)))
        dets = np.linalg.det(mats)
        assert np.abs(dets - S3.lam_ws * S3.lam_ss).max() < 1e-8

    def test_linear_restriction_diagonal_in_eigenbasis(self):
        ws = frame_by_role(S3.frames, "weak-stable").vector
        ss = frame_by_role(S3.frames, "strong-stable").vector
        eig_plane = StablePlane(np.column_stack([ws, ss]))
        n = 3
        m_orth = restricted_matrix(S3.engine.power(n).matrix(), eig_plane)
        m_eig = eig_plane.from_plane @ m_orth @ eig_plane.to_plane
        lam_ws = frame_by_role(S3.frames, "weak-stable").eigenvalues[0]
        lam_ss = frame_by_role(S3.frames, "strong-stable").eigenvalues[0]
        assert np.allclose(m_eig, np.diag([lam_ws ** n, lam_ss ** n]),
                           atol=1e-9)

    def test_non_invariant_plane_rejected(self):
        tilted = StablePlane(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(PlaneNotInvariant):
            restricted_matrix(S3.engine.matrix(), tilted)

    def test_shear_direction_outside_plane_rejected(self):
        vu = frame_by_role(S3.frames, "unstable").vector
        ws = frame_by_role(S3.frames, "weak-stable").vector
        wrong = StablePlane(np.column_stack([vu, ws]))
        word = ComposedSystem((ShearFactor(S3.shear(1.0)),))
        with pytest.raises(PlaneNotInvariant):
            restricted_stable_cocycle(word, wrong, np.zeros(3))

    def test_top_stable_exponent_linear(self):
        n = 2
        est = top_stable_exponent(S3.linear_word(n), S3.plane, n_steps=20000,
                                  n_orbits=4, seed=3)
        assert abs(est.exponents[0] - n * np.log(S3.lam_ws)) < 1e-4

    def test_top_stable_lower_bounded_by_min_expansion(self):
        word = S3.engine_word(2, 1.5)
        gen = np.random.Generator(np.random.Philox(9))
        mats = restricted_stable_cocycle(word, S3.plane, gen.random((500, 3)))
        min_sv = np.linalg.svd(mats, compute_uv=False)[:, 1]
        est = top_stable_exponent(word, S3.plane, n_steps=20000, n_orbits=4,
                                  seed=3)
        assert est.exponents[0] >= np.log(min_sv).mean() - 0.1


class TestProjective:
    def test_push_angle_diagonal_fixed_lines(self):
        m = np.diag([0.7, 0.2])
        for fixed in (0.0, np.pi / 2):
            ang, growth = push_angle(m, fixed)
            assert angle_distance(ang, fixed) < 1e-12
        _, g0 = push_angle(m, 0.0)
        assert abs(g0 - np.log(0.7)) < 1e-12

    def test_push_angle_antipodal_same_line(self):
        m = np.array([[1.2, 0.3], [-0.5, 0.9]])
        a1, _ = push_angle(m, 0.4)
        a2, _ = push_angle(m, 0.4 + np.pi)
        assert angle_distance(a1, a2) < 1e-12

    def test_push_angle_zero_vector(self):
        with pytest.raises(ZeroVector):
            push_angle(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.0)

    def test_angle_distance_wraps(self):
        assert abs(angle_distance(0.05, np.pi - 0.05) - 0.1) < 1e-12
        assert angle_distance(1.0, 1.0) == 0.0

    def test_projective_point_normalizes(self):
        q = ProjectivePoint(np.array([1.2, -0.3, 0.5]), 4.0)
        assert 0 <= q.angle < np.pi
        assert q.base.min() >= 0 and q.base.max() < 1

    def test_projective_step_advances_base(self):
        word = composed(n=1, t=0.7)
        q = ProjectivePoint(np.array([0.2, 0.4, 0.6]), 0.3)
        q2 = projective_step(word, S3.plane, q)
        assert np.allclose(q2.base, word.apply(q.base))
        mat = restricted_stable_cocycle(word, S3.plane, q.base)
        expect, _ = push_angle(mat, q.angle)
        assert angle_distance(q2.angle, expect) < 1e-12

    def test_projective_lipschitz_below_word_bound(self):
        # sampled step ratios stay below the sup of ||A(m)||*||A(fm)^-1||
        word = S3.engine_word(4, 2.0)
        gen = np.random.Generator(np.random.Philox(10))
        pts = gen.random((2000, 3))
        mats = restricted_stable_cocycle(word, S3.plane, pts)
        mats_f = restricted_stable_cocycle(word, S3.plane, word.apply(pts))
        svs = np.linalg.svd(mats, compute_uv=False)
        svs_f = np.linalg.svd(mats_f, compute_uv=False)
        b_word = np.max(svs[:, 0] / svs_f[:, 1])
        th1 = gen.random(2000) * np.pi
        th2 = th1 + 10 ** gen.uniform(-6, -1, 2000)
        worst = 0.0
        for i in range(2000):
            a1, _ = push_angle(mats[i], th1[i])
            a2, _ = push_angle(mats[i], th2[i])
            ratio = angle_distance(a1, a2) / angle_distance(th1[i], th2[i])
            worst = max(worst, ratio)
        assert worst <= b_word * (1 + 1e-6)


class TestPlaneCharts:
    def test_chart_roundtrip(self):
        gen = np.random.Generator(np.random.Philox(11))
        v = gen.standard_normal((40, 2))
        back = S3.plane.orth_to_oblique(S3.plane.oblique_to_orth(v))
        assert np.abs(back - v).max() < 1e-12

    def test_embed_matches_basis_combination(self):
        v_ab = np.array([0.4, -1.1])
        ambient = S3.plane.embed(S3.plane.oblique_to_orth(v_ab))
        direct = v_ab[0] * S3.a_bar + v_ab[1] * S3.b_bar
        assert np.abs(ambient - direct).max() < 1e-12

    def test_orthonormal_frame(self):
        f = S3.plane.frame
        assert np.allclose(f.T @ f, np.eye(2), atol=1e-12)

    def test_bad_basis_shape_rejected(self):
        with pytest.raises(ValueError):
            StablePlane(np.eye(3))
