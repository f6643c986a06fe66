"""Standard sheared-automorphism systems: defaults, charts, and word builders.

A `StandardSystem` packages one hyperbolic automorphism in engine orientation
(single expanding eigenvalue), the unimodular change of basis that puts its
invariant plane into shear normal form, certified eigen-data, and factories
for the composed words.  The engine word applies the shear first and then the
matrix power; the statement word is its inverse, which carries the raised
exponents with the opposite sign.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cocycle import (ComposedSystem, LinearFactor, ShearFactor, StablePlane,
                      restricted_matrix)
from .errors import (ComplexSpectrumUnsupported, EigenvalueOnUnitCircle,
                     NormalizationFailed)
from .lattice import (NormalizedBasis, Spectrum, ToralAutomorphism,
                      certify_spectrum, frame_by_role, invariant_frames,
                      left_eigenvector, normalize_basis)
from .shear import ShearMap

DEFAULT_T3_STATEMENT = ((2, 1, 0), (1, 2, 1), (0, 1, 1))

# statement matrix whose two expanding rates satisfy lam_wu**2 > lam_su,
# leaving the fiber-bunching inequality a nonempty region to scan
DEFAULT_T3_CONTINUITY = ((0, 0, 1), (1, 0, -9), (0, 1, 6))

_QUARTIC = (1, 4, -4, -1)  # x^4 - x^3 - 4x^2 + 4x + 1, constant term first


def companion(coeffs):
    """Companion matrix of the monic polynomial with given low-order coeffs.

    ``coeffs = (c0, .., c_{d-1})`` encodes x^d + c_{d-1} x^{d-1} + .. + c0.
    """
    d = len(coeffs)
    rows = [[0] * d for _ in range(d)]
    for i in range(1, d):
        rows[i][i - 1] = 1
    for i in range(d):
        rows[i][d - 1] = -coeffs[i]
    return ToralAutomorphism(tuple(tuple(r) for r in rows))


def default_t4_engine():
    """Square of the inverse companion of the standard totally real quartic."""
    c = companion(_QUARTIC)
    return c.inverse() @ c.inverse()


@dataclass(frozen=True)
class StandardSystem:
    """One normalized sheared-automorphism construction."""

    raw: ToralAutomorphism
    engine: ToralAutomorphism
    normalized: NormalizedBasis
    spectrum: Spectrum
    plane: StablePlane
    frames: tuple
    lam_u: float
    lam_ws: float
    lam_ss: float
    lam_ms: float | None
    theta_u: float
    v_u: np.ndarray
    phi_u: np.ndarray

    @property
    def dim(self):
        return self.engine.dim

    @property
    def theta0(self):
        return self.normalized.theta0

    @property
    def change_of_basis(self):
        return self.normalized.change_of_basis

    @property
    def a_bar(self):
        return self.normalized.a_bar

    @property
    def b_bar(self):
        return self.normalized.b_bar

    @property
    def in_plane_rates(self):
        """Moduli of the two eigenvalues of the restriction to the plane."""
        if self.dim == 3:
            return self.lam_ws, self.lam_ss
        return self.lam_ws, self.lam_ms

    @property
    def strong_ph(self):
        """Whether lam_ws * lam_ms > lam_ss (dim 4 extra conclusion)."""
        if self.lam_ms is None:
            return None
        return self.lam_ws * self.lam_ms > self.lam_ss

    def shear(self, t, phase=0.0):
        return ShearMap(t, tuple(self.normalized.b_coeffs), phase)

    def engine_word(self, n, t, phase=0.0, outer_eps=0.0):
        """Shear then matrix power, optionally followed by a second shear.

        The optional outer shear has strength ``outer_eps`` and its sine
        argument shifted by half a period, giving an independent conservative
        perturbation for robustness scans.
        """
        factors = [ShearFactor(self.shear(t, phase)),
                   LinearFactor(self.engine, n)]
        if outer_eps:
            factors.append(ShearFactor(self.shear(outer_eps, phase + 0.5)))
        return ComposedSystem(tuple(factors))

    def statement_word(self, n, t, phase=0.0, outer_eps=0.0):
        return self.engine_word(n, t, phase, outer_eps).inverse()

    def linear_word(self, n):
        return ComposedSystem((LinearFactor(self.engine, n),))

    def restricted_linear(self, n):
        """2x2 orthonormal-chart restriction of the engine power to the plane."""
        return np.linalg.matrix_power(
            restricted_matrix(self.engine.matrix(), self.plane), n)

    def t_theorem_a(self, n, nu):
        """Shear strength law t = lam_ws^(-n*nu), nu in (0, 2/3)."""
        if not 0 < nu < 2.0 / 3.0:
            raise ValueError("nu must lie in (0, 2/3)")
        return self.lam_ws ** (-n * nu)

    def t_theorem_b(self, n, nu):
        """Shear strength law t = lam_ws^(-n*(1+nu)) with nu below nu_max_b."""
        if not 0 < nu < self.nu_max_b():
            raise ValueError(f"nu must lie in (0, {self.nu_max_b():.4f})")
        return self.lam_ws ** (-n * (1.0 + nu))

    def nu_max_b(self):
        ws = -np.log(self.lam_ws)
        return min(np.log(self.lam_u) / ws, (-np.log(self.lam_ss) / ws - 1) / 3)


def _orientation(spectrum):
    return sum(1 for iv in spectrum.intervals
               for _ in range(iv.multiplicity) if abs(iv.mid) > 1)


def build_standard_system(matrix=None, dim=3):
    """Build the normalized system for a matrix (defaults per dimension).

    Accepts either orientation: a matrix with a single expanding eigenvalue
    is used directly as the engine, one with a single contracting eigenvalue
    is inverted first.
    """
    if matrix is None:
        if dim == 3:
            auto = ToralAutomorphism(DEFAULT_T3_STATEMENT).inverse()
        elif dim == 4:
            auto = default_t4_engine()
        else:
            raise ValueError("defaults exist only for dimensions 3 and 4")
    elif isinstance(matrix, ToralAutomorphism):
        auto = matrix
    else:
        auto = ToralAutomorphism(matrix)
    if auto.dim < 3:
        raise ValueError("the construction needs dimension >= 3")
    raw = auto
    spectrum = certify_spectrum(auto, require_hyperbolic=True)
    n_exp = _orientation(spectrum)
    if n_exp == auto.dim - 1:
        auto = auto.inverse()
        spectrum = certify_spectrum(auto, require_hyperbolic=True)
        n_exp = _orientation(spectrum)
    if n_exp != 1:
        raise EigenvalueOnUnitCircle(
            "need exactly one expanding eigenvalue in some orientation, "
            f"got {n_exp} of {auto.dim}")

    frames = invariant_frames(auto, spectrum)
    normalized = normalize_basis(auto, frames)
    conj = normalized.conjugated
    conj_spectrum = certify_spectrum(conj)
    conj_frames = invariant_frames(conj, conj_spectrum)

    abs_lams = [abs(iv.mid) for iv in conj_spectrum.intervals]
    lam_u = abs_lams[0]
    lam_ws = abs_lams[1]
    lam_ss = abs_lams[-1]
    lam_ms = abs_lams[2] if conj.dim == 4 else None

    plane = StablePlane(np.column_stack([normalized.a_bar, normalized.b_bar]))
    r_lin = restricted_matrix(conj.matrix(), plane)
    got = np.sort(np.abs(np.linalg.eigvals(r_lin)))[::-1]
    want = (lam_ws, lam_ss) if conj.dim == 3 else (lam_ws, lam_ms)
    if not np.allclose(got, want, rtol=1e-8):
        raise NormalizationFailed(
            f"plane restriction rates {got} do not match {want}")

    uf = frame_by_role(conj_frames, "unstable")
    v_u = uf.vector
    lam_u_signed = uf.eigenvalues[0]
    phi_u = left_eigenvector(conj, lam_u_signed)
    phi_u = phi_u / float(phi_u @ v_u)
    theta_u = float(np.arcsin(min(1.0, abs(v_u[0]))))
    return StandardSystem(
        raw=raw,
        engine=conj,
        normalized=normalized,
        spectrum=conj_spectrum,
        plane=plane,
        frames=tuple(conj_frames),
        lam_u=lam_u,
        lam_ws=lam_ws,
        lam_ss=lam_ss,
        lam_ms=lam_ms,
        theta_u=theta_u,
        v_u=v_u,
        phi_u=phi_u,
    )


@lru_cache(maxsize=8)
def default_system(dim=3):
    return build_standard_system(dim=dim)


@lru_cache(maxsize=2)
def continuity_system():
    """Engine system for the exponent-continuity scans."""
    return build_standard_system(DEFAULT_T3_CONTINUITY)


def search_strong_ph_matrix(coeff_bound=12):
    """Small-coefficient search for a dim-4 engine with lam_ws*lam_ms > lam_ss.

    The default dim-4 matrix fails the strong partial-hyperbolicity
    inequality, so runs requesting it need a replacement.  Since the
    eigenvalue product is +-1, the inequality is equivalent to
    lam_u * lam_ss^2 < 1.  Candidates are companion matrices of integer
    quartics x^4 + a3 x^3 + a2 x^2 + a1 x +- 1, enumerated by increasing
    coefficient shell so the result is deterministic, prefiltered by float
    spectra, then certified and normalized before being returned.
    """
    import itertools

    for shell in range(1, coeff_bound + 1):
        for a3, a2, a1 in itertools.product(
                range(-shell, shell + 1), repeat=3):
            if max(abs(a3), abs(a2), abs(a1)) != shell:
                continue
            for a0 in (1, -1):
                roots = np.roots([1.0, a3, a2, a1, a0])
                if np.any(np.abs(roots.imag) > 1e-9):
                    continue
                mods = np.sort(np.abs(roots.real))[::-1]
                if mods[0] <= 1.01 or mods[1] >= 0.99:
                    continue
                if np.min(-np.diff(mods)) < 1e-4:
                    continue
                if mods[0] * mods[3] ** 2 >= 0.98:
                    continue
                try:
                    sysm = build_standard_system(
                        companion((a0, a1, a2, a3)))
                except (NormalizationFailed, EigenvalueOnUnitCircle,
                        ComplexSpectrumUnsupported):
                    continue
                if sysm.strong_ph:
                    return sysm
    raise NormalizationFailed(
        f"no strong-PH companion with coefficients within {coeff_bound}")
