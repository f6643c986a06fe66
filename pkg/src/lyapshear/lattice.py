"""Integer toral automorphisms: certified spectra, eigenframes, basis normalization.

The linear part of every composed system studied here is an element of
GL(d, Z) acting on the torus R^d / Z^d.  Everything downstream (shear
directions, cone geometry, condition checking) keys off certified eigenvalue
intervals and unit eigenvectors of that matrix, so the spectrum is isolated
with exact integer Sturm sequences rather than floating root finders.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np

from . import sturm
from .errors import (
    ComplexSpectrumUnsupported,
    EigenvalueOnUnitCircle,
    NormalizationFailed,
    NotUnimodular,
)

_INTERVAL_WIDTH = Fraction(1, 10**12)


def _as_int_rows(rows):
    out = []
    for row in rows:
        r = []
        for v in row:
            iv = int(v)
            if iv != v:
                raise NotUnimodular(f"non-integer entry {v!r}")
            r.append(iv)
        out.append(tuple(r))
    return tuple(out)


def det_int(rows):
    """Exact determinant of a small integer matrix (cofactor expansion)."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = 0
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = tuple(tuple(r[k] for k in range(n) if k != j) for r in rows[1:])
        total += (-1) ** j * rows[0][j] * det_int(minor)
    return total


def _matmul_int(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(m)) for j in range(p))
        for i in range(n)
    )


def _adjugate_int(rows):
    n = len(rows)
    cof = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = tuple(
                tuple(rows[r][c] for c in range(n) if c != j)
                for r in range(n)
                if r != i
            )
            cof[i][j] = (-1) ** (i + j) * det_int(minor)
    return tuple(tuple(cof[j][i] for j in range(n)) for i in range(n))


def _identity_int(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


@dataclass(frozen=True)
class ToralAutomorphism:
    """Element of GL(d, Z) acting on the d-torus.

    Parameters
    ----------
    rows : sequence of sequences of int
        Matrix rows.  The determinant must be +1 or -1, otherwise the map
        does not preserve the lattice bijectively and `NotUnimodular` is
        raised.
    """

    rows: tuple = field()

    def __init__(self, rows):
        object.__setattr__(self, "rows", _as_int_rows(rows))
        d = det_int(self.rows)
        if d not in (1, -1):
            raise NotUnimodular(f"determinant {d}, must be +-1")

    @property
    def dim(self):
        return len(self.rows)

    @property
    def det(self):
        return det_int(self.rows)

    def matrix(self):
        """Float matrix copy."""
        return np.array(self.rows, dtype=float)

    def inverse(self):
        """Exact integer inverse (adjugate divided by the +-1 determinant)."""
        adj = _adjugate_int(self.rows)
        d = self.det
        return ToralAutomorphism(tuple(tuple(v * d for v in row) for row in adj))

    def power(self, k):
        """Exact integer k-th power; negative k goes through the inverse."""
        if k == 0:
            return ToralAutomorphism(_identity_int(self.dim))
        base = self.rows if k > 0 else self.inverse().rows
        out = _identity_int(self.dim)
        for _ in range(abs(k)):
            out = _matmul_int(out, base)
        return ToralAutomorphism(out)

    def __matmul__(self, other):
        return ToralAutomorphism(_matmul_int(self.rows, other.rows))

    def char_poly(self):
        """Coefficients of det(xI - M), exact ints, index = degree."""
        # Faddeev-LeVerrier; every division by k is exact over the integers
        n = self.dim
        rows = [list(r) for r in self.rows]
        coeffs = [0] * (n + 1)
        coeffs[n] = 1
        mk = [row[:] for row in rows]
        for k in range(1, n + 1):
            tr = sum(mk[i][i] for i in range(n))
            assert tr % k == 0
            c = -tr // k
            coeffs[n - k] = c
            if k < n:
                for i in range(n):
                    mk[i][i] += c
                mk = [
                    [sum(rows[i][l] * mk[l][j] for l in range(n)) for j in range(n)]
                    for i in range(n)
                ]
        return coeffs


@dataclass(frozen=True)
class CertifiedInterval:
    """Rational bracket [lo, hi] certified to contain exactly one real root."""

    lo: Fraction
    hi: Fraction
    multiplicity: int

    @property
    def mid(self):
        return float((self.lo + self.hi) / 2)

    @property
    def width(self):
        return float(self.hi - self.lo)

    def contains(self, x):
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class Spectrum:
    """Certified real spectrum of an integer matrix.

    ``intervals`` is sorted by decreasing midpoint absolute value.  When the
    characteristic polynomial has non-real roots only the real part of the
    spectrum is listed and ``complex_pairs`` is positive.
    """

    char_poly: tuple
    intervals: tuple
    complex_pairs: int
    hyperbolic: bool
    det: int

    @property
    def values(self):
        return np.array([iv.mid for iv in self.intervals])

    @property
    def abs_values(self):
        return np.abs(self.values)


def certify_spectrum(auto, width=_INTERVAL_WIDTH, require_hyperbolic=False):
    """Isolate all real eigenvalues of ``auto`` with exact Sturm sequences.

    Parameters
    ----------
    auto : ToralAutomorphism
    width : Fraction or float
        Maximum width of each certified interval.
    require_hyperbolic : bool
        When set, raise `EigenvalueOnUnitCircle` if any certified interval
        touches -1 or +1 (within the interval, hence within ``width``).

    Returns
    -------
    Spectrum
    """
    coeffs = auto.char_poly()
    poly = [Fraction(c) for c in coeffs]
    width = Fraction(width).limit_denominator(10**18) if not isinstance(width, Fraction) else width
    intervals = []
    for factor, mult in sturm.squarefree_decomposition(poly):
        for a, b in sturm.isolate_real_roots(factor):
            lo, hi = sturm.refine_root(factor, a, b, width)
            intervals.append(CertifiedInterval(lo, hi, mult))
    n_real = sum(iv.multiplicity for iv in intervals)
    deg = auto.dim
    assert (deg - n_real) % 2 == 0
    complex_pairs = (deg - n_real) // 2
    on_circle = any(iv.contains(1) or iv.contains(-1) for iv in intervals)
    hyperbolic = (not on_circle) and complex_pairs == 0
    if require_hyperbolic and on_circle:
        raise EigenvalueOnUnitCircle(
            "certified root interval touches the unit circle"
        )
    intervals.sort(key=lambda iv: abs(iv.mid), reverse=True)
    spec = Spectrum(
        char_poly=tuple(coeffs),
        intervals=tuple(intervals),
        complex_pairs=complex_pairs,
        hyperbolic=hyperbolic,
        det=auto.det,
    )
    # containment cross-check: the product of all roots equals +-det
    prod_lo, prod_hi = Fraction(1), Fraction(1)
    for iv in spec.intervals:
        for _ in range(iv.multiplicity):
            cands = [prod_lo * iv.lo, prod_lo * iv.hi, prod_hi * iv.lo, prod_hi * iv.hi]
            prod_lo, prod_hi = min(cands), max(cands)
    if complex_pairs == 0 and not (prod_lo - width <= auto.det <= prod_hi + width):
        raise AssertionError("certified intervals inconsistent with determinant")
    return spec


@dataclass(frozen=True)
class SubspaceFrame:
    """Invariant subspace with a unit basis, eigenvalues, and a role tag."""

    vectors: np.ndarray
    eigenvalues: tuple
    role: str
    residual: float

    @property
    def vector(self):
        if self.vectors.shape[0] != 1:
            raise ValueError("frame spans a plane, not a line")
        return self.vectors[0]


_RESIDUAL_TOL = 1e-10


def _unit_eigenvector(mat, lam):
    d = mat.shape[0]
    _, _, vt = np.linalg.svd(mat - lam * np.eye(d))
    v = vt[-1]
    # deterministic orientation: largest-magnitude component positive
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    v = v / np.linalg.norm(v)
    residual = float(np.linalg.norm(mat @ v - lam * v))
    return v, residual


def invariant_frames(auto, spectrum=None):
    """Unit eigenvectors for every certified simple real eigenvalue.

    Returns one single-vector `SubspaceFrame` per eigenvalue plus, when the
    matrix has exactly one expanding direction, a two-vector ``stable-plane``
    frame spanning the plane the shears will translate along (weak stable
    direction paired with the next-weakest contracting direction).

    Raises
    ------
    ComplexSpectrumUnsupported
        If the spectrum has complex pairs or repeated real roots.
    """
    if spectrum is None:
        spectrum = certify_spectrum(auto)
    if spectrum.complex_pairs:
        raise ComplexSpectrumUnsupported(
            f"{spectrum.complex_pairs} complex pair(s) present"
        )
    if any(iv.multiplicity > 1 for iv in spectrum.intervals):
        raise ComplexSpectrumUnsupported("repeated eigenvalues present")
    mat = auto.matrix()
    d = auto.dim
    lams = [iv.mid for iv in spectrum.intervals]
    vecs = []
    residuals = []
    for lam in lams:
        v, res = _unit_eigenvector(mat, lam)
        if res > _RESIDUAL_TOL:
            raise AssertionError(f"eigenvector residual {res:.3e} too large")
        vecs.append(v)
        residuals.append(res)
    n_expanding = sum(1 for lam in lams if abs(lam) > 1)
    frames = []
    if n_expanding == 1 and spectrum.hyperbolic and d >= 3:
        roles3 = ["unstable", "weak-stable", "strong-stable"]
        roles4 = ["unstable", "weak-stable", "medium-stable", "strong-stable"]
        roles = roles3 if d == 3 else roles4 if d == 4 else None
        if roles is None:
            roles = ["unstable"] + [f"stable-{i}" for i in range(1, d)]
        for v, lam, role, res in zip(vecs, lams, roles, residuals):
            frames.append(SubspaceFrame(v[None, :].copy(), (lam,), role, res))
        # plane translated by the shear family: weak + next-weakest contraction
        plane = np.vstack([vecs[1], vecs[2]])
        frames.append(
            SubspaceFrame(plane, (lams[1], lams[2]), "stable-plane",
                          max(residuals[1], residuals[2]))
        )
    else:
        for i, (v, lam, res) in enumerate(zip(vecs, lams, residuals)):
            frames.append(SubspaceFrame(v[None, :].copy(), (lam,), f"eig-{i}", res))
    return frames


def frame_by_role(frames, role):
    for fr in frames:
        if fr.role == role:
            return fr
    raise KeyError(role)


def left_eigenvector(auto, lam):
    """Unit left eigenvector for ``lam``; dual to the complementary subspace."""
    v, res = _unit_eigenvector(auto.matrix().T, lam)
    if res > _RESIDUAL_TOL:
        raise AssertionError(f"left eigenvector residual {res:.3e}")
    return v


@dataclass(frozen=True)
class NormalizedBasis:
    """Stable-plane normal form reached by a unimodular change of basis.

    After conjugating by ``change_of_basis`` the shear plane is spanned by
    ``a_bar = (1, 0, a, ...)`` and ``b_bar = (0, 1, b, ...)`` with every
    trailing coefficient in (0, 1).  ``theta0`` is the angle between
    ``b_bar`` and the strongest contracting direction inside the plane.
    """

    change_of_basis: ToralAutomorphism
    conjugated: ToralAutomorphism
    a_bar: np.ndarray
    b_bar: np.ndarray
    angle_ab: float
    angle_a_weak: float
    theta0: float

    @property
    def a_coeffs(self):
        return self.a_bar[2:]

    @property
    def b_coeffs(self):
        return self.b_bar[2:]


def _line_angle(u, v):
    c = abs(float(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return float(np.arccos(np.clip(c, 0.0, 1.0)))


def _plane_normal_form(tw):
    """Express the transformed plane as span{(1,0,a..), (0,1,b..)} or None.

    ``tw`` has the plane's two spanning vectors as columns.
    """
    top = tw[:2, :]
    det = top[0, 0] * top[1, 1] - top[0, 1] * top[1, 0]
    if abs(det) < 1e-10:
        return None
    sol = tw @ np.linalg.inv(top)
    a_bar = sol[:, 0]
    b_bar = sol[:, 1]
    return a_bar, b_bar


def _check_candidate(t_arr, plane_cols, v_weak, v_strong, open_margin):
    """Return (a_bar, b_bar, swapped, angles) if T satisfies all conditions."""
    tw = t_arr @ plane_cols
    nf = _plane_normal_form(tw)
    if nf is None:
        return None
    a_bar, b_bar = nf
    coeffs = np.concatenate([a_bar[2:], b_bar[2:]])
    if not np.all((coeffs > open_margin) & (coeffs < 1.0 - open_margin)):
        return None
    angle_ab = _line_angle(a_bar, b_bar)
    if not (np.pi / 3 + open_margin < angle_ab < np.pi / 2 - open_margin):
        return None
    tv_weak = t_arr @ v_weak
    tv_strong = t_arr @ v_strong
    for swapped in (False, True):
        aa, bb = (b_bar, a_bar) if swapped else (a_bar, b_bar)
        angle_aw = _line_angle(aa, tv_weak)
        if angle_aw >= angle_ab / 2 - open_margin:
            continue
        theta0 = _line_angle(bb, tv_strong)
        if theta0 <= open_margin:
            continue
        return aa, bb, swapped, angle_ab, angle_aw, theta0
    return None


def _generators(d):
    gens = []
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            for s in (1, -1):
                g = [[1 if r == c else 0 for c in range(d)] for r in range(d)]
                g[i][j] = s
                gens.append(tuple(tuple(r) for r in g))
    for i, j in permutations(range(d), 2):
        if i < j:
            g = [[1 if r == c else 0 for c in range(d)] for r in range(d)]
            g[i][i] = g[j][j] = 0
            g[i][j] = g[j][i] = 1
            gens.append(tuple(tuple(r) for r in g))
    for i in range(d):
        g = [[1 if r == c else 0 for c in range(d)] for r in range(d)]
        g[i][i] = -1
        gens.append(tuple(tuple(r) for r in g))
    return gens


def normalize_basis(auto, frames=None, entry_bound=16, max_states=400_000,
                    open_margin=1e-9):
    """Search GL(d, Z) for a change of basis putting the shear plane in normal form.

    Breadth-first search over products of elementary unimodular matrices
    (row additions, swaps, sign flips) starting from the identity, pruned by
    ``entry_bound`` on matrix entries.  The first matrix satisfying

    * plane spanned by (1,0,a,..), (0,1,b,..) with all coefficients in (0,1)
      (this pins the plane angle into (pi/3, pi/2)),
    * angle(a_bar, weak direction) < angle(a_bar, b_bar) / 2, trying both
      orderings of the two spanning vectors,
    * positive angle between b_bar and the strongest in-plane contraction,

    is returned.  `NormalizationFailed` reports which condition blocked the
    deepest candidates when the search space is exhausted.
    """
    if frames is None:
        frames = invariant_frames(auto)
    plane = frame_by_role(frames, "stable-plane")
    v_weak = plane.vectors[0]
    v_strong = plane.vectors[1]
    plane_cols = plane.vectors.T
    d = auto.dim
    gens = _generators(d)
    start = _identity_int(d)
    seen = {start}
    queue = [start]
    best_stage = 0
    while queue and len(seen) < max_states:
        next_queue = []
        for state in queue:
            t_arr = np.array(state, dtype=float)
            got = _check_candidate(t_arr, plane_cols, v_weak, v_strong, open_margin)
            if got is not None:
                aa, bb, swapped, angle_ab, angle_aw, theta0 = got
                t_final = state
                if swapped:
                    # switching a_bar and b_bar is itself a coordinate swap,
                    # so fold it into the change of basis and permute the
                    # first two entries of the returned spanning vectors
                    swap = [[1 if r == c else 0 for c in range(d)] for r in range(d)]
                    swap[0][0] = swap[1][1] = 0
                    swap[0][1] = swap[1][0] = 1
                    t_final = _matmul_int(tuple(tuple(r) for r in swap), state)
                    aa = np.concatenate([[aa[1], aa[0]], aa[2:]])
                    bb = np.concatenate([[bb[1], bb[0]], bb[2:]])
                t_auto = ToralAutomorphism(t_final)
                conj = t_auto @ auto @ t_auto.inverse()
                return NormalizedBasis(
                    change_of_basis=t_auto,
                    conjugated=conj,
                    a_bar=np.asarray(aa),
                    b_bar=np.asarray(bb),
                    angle_ab=angle_ab,
                    angle_a_weak=angle_aw,
                    theta0=theta0,
                )
            tw = t_arr @ plane_cols
            nf = _plane_normal_form(tw)
            if nf is not None:
                coeffs = np.concatenate([nf[0][2:], nf[1][2:]])
                if np.all((coeffs > 0) & (coeffs < 1)):
                    best_stage = max(best_stage, 1)
            for g in gens:
                new = _matmul_int(g, state)
                if new in seen:
                    continue
                if max(abs(v) for row in new for v in row) > entry_bound:
                    continue
                seen.add(new)
                next_queue.append(new)
                if len(seen) >= max_states:
                    break
            if len(seen) >= max_states:
                break
        queue = next_queue
    reason = (
        "no candidate reached the plane normal form"
        if best_stage == 0
        else "plane normal form reached but the eigenvector angle conditions failed"
    )
    raise NormalizationFailed(
        f"{reason} (explored {len(seen)} states, entry bound {entry_bound})"
    )
