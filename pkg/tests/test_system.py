"""Standard system construction: defaults, normal form, word factories."""
import numpy as np
import pytest

from lyapshear.cocycle import LinearFactor, ShearFactor
from lyapshear.errors import EigenvalueOnUnitCircle
from lyapshear.lattice import ToralAutomorphism, frame_by_role
from lyapshear.system import (DEFAULT_T3_CONTINUITY, DEFAULT_T3_STATEMENT,
                              build_standard_system, companion,
                              continuity_system, default_system,
                              default_t4_engine, search_strong_ph_matrix)

# independently computed with 50-digit arithmetic from the characteristic
# polynomials of the default matrices
T3_ENGINE_RATES = (5.0489173395223053, 0.6431041321077906, 0.3079785283699041)
T4_ENGINE_RATES = (22.8807827419435566, 0.5583650395238060,
                   0.2995571455553919, 0.2612950729772455)
CONTINUITY_STATEMENT_RATES = (3.5320888862379561, 2.3472963553338607,
                              0.1206147584281831)
T3_A_COEFF = 0.8019377358048383
T3_B_COEFF = 0.3568958678922094


class TestDefaults:
    def test_t3_engine_is_inverse_of_statement_default(self):
        s = default_system(3)
        stmt = ToralAutomorphism(DEFAULT_T3_STATEMENT)
        assert s.raw.rows == stmt.inverse().rows

    def test_t3_rates(self):
        s = default_system(3)
        got = (s.lam_u, s.lam_ws, s.lam_ss)
        assert np.allclose(got, T3_ENGINE_RATES, atol=1e-10)
        assert s.lam_ms is None

    def test_t3_normal_form(self):
        s = default_system(3)
        assert abs(s.a_bar[0] - 1) < 1e-12 and abs(s.a_bar[1]) < 1e-12
        assert abs(s.b_bar[0]) < 1e-12 and abs(s.b_bar[1] - 1) < 1e-12
        assert abs(s.a_bar[2] - T3_A_COEFF) < 1e-9
        assert abs(s.b_bar[2] - T3_B_COEFF) < 1e-9
        assert 0 < s.a_bar[2] < 1 and 0 < s.b_bar[2] < 1

    def test_t3_angle_conditions(self):
        s = default_system(3)
        nb = s.normalized
        assert np.pi / 3 < nb.angle_ab < np.pi / 2
        assert nb.angle_a_weak < nb.angle_ab / 2
        assert nb.theta0 > 0

    def test_t4_is_squared_inverse_companion(self):
        c = companion((1, 4, -4, -1))
        assert c.char_poly() == [1, 4, -4, -1, 1]
        m4 = default_t4_engine()
        assert m4.rows == ((20, -4, 1, 0), (-15, 4, 0, 1),
                           (-5, 1, 0, 0), (4, -1, 0, 0))

    def test_t4_rates_and_strong_ph(self):
        s = default_system(4)
        got = (s.lam_u, s.lam_ws, s.lam_ms, s.lam_ss)
        assert np.allclose(got, T4_ENGINE_RATES, atol=1e-10)
        assert s.strong_ph is False
        assert abs(s.nu_max_b() - 0.4343615667915902) < 1e-9

    def test_continuity_statement_rates(self):
        s = continuity_system()
        got = (1 / s.lam_ss, 1 / s.lam_ws, 1 / s.lam_u)
        assert np.allclose(got, CONTINUITY_STATEMENT_RATES, atol=1e-10)
        lam_su, lam_wu = 1 / s.lam_ss, 1 / s.lam_ws
        assert lam_wu ** 2 > lam_su

    def test_default_statement_fails_bunching_at_linear_point(self):
        # the plain default has lam_wu^2 < lam_su, which is why the
        # continuity scans need their own matrix
        s = default_system(3)
        lam_su, lam_wu = 1 / s.lam_ss, 1 / s.lam_ws
        assert lam_wu ** 2 < lam_su


class TestBuild:
    def test_either_orientation_gives_same_engine(self):
        stmt = build_standard_system(DEFAULT_T3_STATEMENT)
        eng = build_standard_system(
            ToralAutomorphism(DEFAULT_T3_STATEMENT).inverse())
        assert stmt.engine.rows == eng.engine.rows
        assert np.allclose(stmt.a_bar, eng.a_bar)

    def test_plane_restriction_rates(self):
        s = default_system(3)
        eigs = np.sort(np.abs(np.linalg.eigvals(s.restricted_linear(1))))[::-1]
        assert np.allclose(eigs, (s.lam_ws, s.lam_ss), atol=1e-9)

    def test_dual_unstable_covector(self):
        s = default_system(3)
        lam = frame_by_role(s.frames, "unstable").eigenvalues[0]
        res = s.phi_u @ s.engine.matrix() - lam * s.phi_u
        assert np.abs(res).max() < 1e-9
        assert abs(s.phi_u @ s.v_u - 1) < 1e-12
        assert abs(s.phi_u @ s.a_bar) < 1e-8
        assert abs(s.phi_u @ s.b_bar) < 1e-8

    def test_theta_u_is_x_advance_rate(self):
        s = default_system(3)
        assert abs(np.sin(s.theta_u) - abs(s.v_u[0])) < 1e-12
        assert 0 < s.theta_u < np.pi / 2

    def test_non_hyperbolic_rejected(self):
        with pytest.raises(EigenvalueOnUnitCircle):
            build_standard_system(((1, 1, 0), (0, 1, 0), (0, 0, 1)))

    def test_small_dimension_rejected(self):
        with pytest.raises(ValueError):
            build_standard_system(((2, 1), (1, 1)))


class TestWordFactories:
    def test_engine_word_order(self):
        s = default_system(3)
        w = s.engine_word(4, 1.5)
        assert isinstance(w.factors[0], ShearFactor)
        assert isinstance(w.factors[1], LinearFactor)
        assert w.factors[0].shear.t == 1.5
        assert w.factors[1].power == 4

    def test_statement_word_is_inverse(self):
        s = default_system(3)
        w = s.engine_word(3, 2.0)
        ws = s.statement_word(3, 2.0)
        p = np.array([0.21, 0.52, 0.83])
        back = ws.apply(w.apply(p))
        err = np.abs(back - p)
        assert np.minimum(err, 1 - err).max() < 1e-9

    def test_outer_shear_factor(self):
        s = default_system(3)
        w = s.engine_word(4, 2.0, outer_eps=0.002)
        assert len(w.factors) == 3
        assert isinstance(w.factors[2], ShearFactor)
        assert w.factors[2].shear.t == 0.002
        assert w.factors[2].shear.phase == 0.5

    def test_shear_direction_from_normal_form(self):
        s = default_system(3)
        sh = s.shear(1.0)
        assert np.allclose(sh.direction, s.b_bar, atol=1e-12)

    def test_t_laws(self):
        s = default_system(3)
        assert abs(s.t_theorem_a(8, 0.5) - s.lam_ws ** -4.0) < 1e-12
        with pytest.raises(ValueError):
            s.t_theorem_a(8, 0.7)
        s4 = default_system(4)
        t = s4.t_theorem_b(4, 0.4)
        assert abs(t - s4.lam_ws ** (-4 * 1.4)) < 1e-12
        with pytest.raises(ValueError):
            s4.t_theorem_b(4, 0.44)


class TestStrongPhSearch:
    def test_search_finds_certified_matrix(self):
        s = search_strong_ph_matrix()
        assert s.strong_ph is True
        assert s.lam_ws * s.lam_ms > s.lam_ss
        assert s.lam_u > 1 > s.lam_ws > s.lam_ms > s.lam_ss
        # deterministic enumeration pins the result
        assert s.raw.rows == ((0, 0, 0, -1), (1, 0, 0, -2),
                              (0, 1, 0, 2), (0, 0, 1, 3))
