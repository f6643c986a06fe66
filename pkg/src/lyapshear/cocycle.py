"""Composed-word dynamics and Lyapunov spectrum estimation.

A `ComposedSystem` is a word of factors applied first to last, each factor a
toral automorphism power or a shear.  Exponents come from the standard
QR/reorthonormalization scheme with per-orbit accumulators, block-resampled
standard errors, and deterministic per-orbit random streams, so runs are
reproducible for a fixed (seed, orbit count) regardless of threading.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rng
from .errors import NumericalBlowup, PlaneNotInvariant, ZeroVector
from .lattice import ToralAutomorphism
from .shear import ShearMap, wrap01

_MAX_EXACT_FLOAT = 2.0**53


@dataclass(frozen=True)
class LinearFactor:
    """Exact integer power of a toral automorphism."""

    auto: ToralAutomorphism
    power: int = 1
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = self.auto.power(self.power)
        if max(abs(v) for row in m.rows for v in row) >= _MAX_EXACT_FLOAT:
            raise OverflowError("matrix power entries exceed exact float range")
        object.__setattr__(self, "matrix", m.matrix())

    @property
    def dim(self):
        return self.auto.dim

    def inverse(self):
        return LinearFactor(self.auto, -self.power)


@dataclass(frozen=True)
class ShearFactor:
    """Shear map factor."""

    shear: ShearMap

    @property
    def dim(self):
        return self.shear.dim

    def inverse(self):
        return ShearFactor(self.shear.inverse())


@dataclass(frozen=True)
class ComposedSystem:
    """Word of factors applied first to last: word (g0, g1) is the map g1(g0(p))."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("empty word")
        dims = {f.dim for f in self.factors}
        if len(dims) != 1:
            raise ValueError(f"mixed dimensions in word: {dims}")

    @property
    def dim(self):
        return self.factors[0].dim

    @classmethod
    def linear_then_shear(cls, auto, n, shear):
        """The composition shear(auto^n(p)): linear factor first."""
        return cls((LinearFactor(auto, n), ShearFactor(shear)))

    @classmethod
    def shear_then_linear(cls, auto, n, shear):
        """The composition auto^n(shear(p)): shear factor first."""
        return cls((ShearFactor(shear), LinearFactor(auto, n)))

    def inverse(self):
        return ComposedSystem(tuple(f.inverse() for f in reversed(self.factors)))

    def kernel_arrays(self):
        n = len(self.factors)
        d = self.dim
        kinds = np.zeros(n, dtype=np.int64)
        mats = np.zeros((n, d, d))
        ts = np.zeros(n)
        phases = np.zeros(n)
        bdirs = np.zeros((n, d))
        for i, f in enumerate(self.factors):
            if isinstance(f, LinearFactor):
                mats[i] = f.matrix
            else:
                kinds[i] = 1
                mats[i] = np.eye(d)
                ts[i] = f.shear.t
                phases[i] = f.shear.phase
                bdirs[i] = f.shear.direction
        return kinds, mats, ts, phases, bdirs

    def apply(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        out = wrap01(p)
        for f in self.factors:
            if isinstance(f, LinearFactor):
                out = wrap01(out @ f.matrix.T)
            else:
                out = f.shear.apply(out)
        return out.reshape(np.shape(points))

    def jet(self, points):
        """Image and chain-rule derivative at each point, shape (..., d, d)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        cur = wrap01(p)
        d = self.dim
        deriv = np.broadcast_to(np.eye(d), cur.shape[:-1] + (d, d)).copy()
        for f in self.factors:
            if isinstance(f, LinearFactor):
                deriv = np.einsum("ij,...jk->...ik", f.matrix, deriv)
                cur = wrap01(cur @ f.matrix.T)
            else:
                jets = f.shear.jet(cur)
                deriv = np.einsum("...ij,...jk->...ik", jets.derivative, deriv)
                cur = jets.image
        if np.ndim(points) == 1:
            return cur[0], deriv[0]
        return cur, deriv


def orbit(system, p0, n_steps):
    """Forward orbit positions, shape (n_steps + 1, d), p0 included."""
    arrays = system.kernel_arrays()
    p = wrap01(np.asarray(p0, dtype=float))
    return _kernels.orbit_positions(*arrays, p, n_steps)


def tangent_apply(system, points, vectors):
    """Push (point, tangent vector) batches through the word.

    Same chain rule as `ComposedSystem.jet` without materializing full
    Jacobians, so it scales to millions of samples.  Returns the pair
    (image points, image vectors), both shaped like the batch inputs.
    """
    cur = wrap01(np.atleast_2d(np.asarray(points, dtype=float)))
    vec = np.atleast_2d(np.asarray(vectors, dtype=float)).copy()
    for f in system.factors:
        if isinstance(f, LinearFactor):
            vec = vec @ f.matrix.T
            cur = wrap01(cur @ f.matrix.T)
        else:
            sh = f.shear
            tau = (2 * np.pi * sh.t
                   * np.cos(2 * np.pi * (cur[:, 0] + sh.phase)))
            vec = vec + (tau * vec[:, 0])[:, None] * np.asarray(sh.direction)
            cur = sh.apply(cur)
    return cur, vec


def apply_lift(system, points):
    """Apply the word to lifted (unwrapped) covering-space coordinates.

    The shear amplitude is periodic in x, so it reads the lifted x
    directly; positions are never wrapped and distances along one
    covering-space segment survive the map.
    """
    cur = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    for f in system.factors:
        if isinstance(f, LinearFactor):
            cur = cur @ f.matrix.T
        else:
            sh = f.shear
            amp = sh.t * np.sin(2 * np.pi * (cur[:, 0] + sh.phase))
            cur = cur + amp[:, None] * np.asarray(sh.direction)
    return cur


@dataclass(frozen=True)
class LyapunovEstimate:
    """Pooled and per-orbit exponent estimates.

    ``exponents`` are log-growth rates per word application, sorted output of
    the QR scheme (descending).  ``std_errors`` are across-orbit standard
    errors of the pooled means; ``per_orbit_se`` holds block-resampled
    in-orbit standard errors, used when single orbits need a verdict.
    """

    exponents: np.ndarray
    std_errors: np.ndarray
    per_orbit: np.ndarray
    per_orbit_se: np.ndarray
    n_steps: int
    burn_in: int
    reorth_period: int
    seed: int | None

    @property
    def n_orbits(self):
        return self.per_orbit.shape[0]


def _run_chunks(worker, n_orbits, threads):
    if threads <= 1:
        worker(0, n_orbits)
        return
    bounds = np.linspace(0, n_orbits, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [
            pool.submit(worker, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        for fut in futs:
            fut.result()


def lyapunov_spectrum(system, n_steps, n_orbits=100, k=None, seed=0,
                      burn_in=1000, reorth_period=1, n_blocks=10, threads=1,
                      points=None):
    """Full (or partial) Lyapunov spectrum over a batch of random orbits.

    Parameters
    ----------
    system : ComposedSystem
    n_steps : int
        Word applications per orbit after burn-in (rounded down to a
        multiple of ``n_blocks``).
    k : int
        Number of exponents (frame columns); defaults to the dimension.
    reorth_period : int
        Steps between reorthonormalizations, in [1, 64].  The default 1 is
        correct for any word; longer periods are cheaper but lose subordinate
        exponents once the expansion gap over one period approaches 1/eps
        (only the top exponent is period-independent).
    points : ndarray, optional
        Explicit starting points overriding the seeded draw.

    Raises
    ------
    NumericalBlowup
        If any orbit's accumulated norms left [1e-300, 1e300] between
        reorthonormalizations, a sign the period is too long for this word.
    """
    if not 1 <= reorth_period <= 64:
        raise ValueError("reorth_period must be in [1, 64]")
    d = system.dim
    if k is None:
        k = d
    if points is None:
        points = rng.initial_points(seed, n_orbits, d)
    else:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n_orbits = points.shape[0]
    arrays = system.kernel_arrays()
    exps = np.zeros((n_orbits, k))
    block_rates = np.zeros((n_orbits, k, n_blocks))
    status = np.full(n_orbits, _kernels.STATUS_BLOWUP, dtype=np.int64)

    def worker(lo, hi):
        _kernels.spectrum_kernel(*arrays, points[lo:hi], k, n_steps, burn_in,
                                 reorth_period, n_blocks, exps[lo:hi],
                                 block_rates[lo:hi], status[lo:hi])

    _run_chunks(worker, n_orbits, threads)
    if np.any(status == _kernels.STATUS_BLOWUP):
        bad = int(np.argmax(status == _kernels.STATUS_BLOWUP))
        raise NumericalBlowup(f"orbit {bad}: cocycle norm left [1e-250, 1e250]")
    per_orbit_se = block_rates.std(axis=2, ddof=1) / np.sqrt(n_blocks)
    pooled = exps.mean(axis=0)
    if n_orbits > 1:
        se = exps.std(axis=0, ddof=1) / np.sqrt(n_orbits)
    else:
        se = per_orbit_se[0]
    return LyapunovEstimate(
        exponents=pooled,
        std_errors=se,
        per_orbit=exps,
        per_orbit_se=per_orbit_se,
        n_steps=(n_steps // n_blocks) * n_blocks,
        burn_in=burn_in,
        reorth_period=reorth_period,
        seed=seed if points is None else None,
    )


@dataclass(frozen=True)
class StablePlane:
    """Shared invariant plane with simultaneous oblique and orthonormal charts.

    ``basis`` has a_bar and b_bar as columns; ``frame`` is the orthonormal
    basis obtained from them by Gram-Schmidt.  ``to_plane`` maps oblique
    (a_bar, b_bar) coordinates to orthonormal ones, so norms of plane vectors
    are ambient norms of their orthonormal coordinates.
    """

    basis: np.ndarray
    frame: np.ndarray = field(init=False, repr=False)
    to_plane: np.ndarray = field(init=False, repr=False)
    from_plane: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("basis must have two column vectors")
        q, r = np.linalg.qr(b)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        q = q * signs
        r = signs[:, None] * r
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "frame", q)
        object.__setattr__(self, "to_plane", r)
        object.__setattr__(self, "from_plane", np.linalg.inv(r))

    def embed(self, coords_orth):
        """Orthonormal plane coordinates -> ambient vectors."""
        return np.asarray(coords_orth) @ self.frame.T

    def oblique_to_orth(self, coords_ab):
        return np.asarray(coords_ab) @ self.to_plane.T

    def orth_to_oblique(self, coords_orth):
        return np.asarray(coords_orth) @ self.from_plane.T


_PLANE_TOL = 1e-8


def restricted_matrix(matrix, plane):
    """2x2 restriction of ``matrix`` to the plane, in orthonormal coordinates.

    Raises `PlaneNotInvariant` when the image of the plane leaves it.
    """
    me = matrix @ plane.frame
    r = plane.frame.T @ me
    residual = np.linalg.norm(me - plane.frame @ r)
    if residual > _PLANE_TOL * max(1.0, np.linalg.norm(me)):
        raise PlaneNotInvariant(f"restriction residual {residual:.3e}")
    return r


def shear_restriction_data(shear, plane):
    """Rank-one data of the shear's plane restriction in orthonormal coordinates.

    In (a_bar, b_bar) coordinates the shear derivative acts as
    [[1, 0], [tau, 1]] with tau = 2*pi*t*cos(2*pi*(x + phase)); conjugating
    by the chart change gives I + tau * outer(col_b, dual_a).
    """
    bvec = shear.direction
    coords = plane.from_plane @ (plane.frame.T @ bvec)
    if np.linalg.norm(plane.frame @ (plane.to_plane @ coords) - bvec) > _PLANE_TOL:
        raise PlaneNotInvariant("shear direction not inside the plane")
    col_b = plane.to_plane[:, 1].copy()
    dual_a = plane.from_plane[0, :].copy()
    return col_b, dual_a


def restricted_power(factor, plane):
    """Plane restriction of a linear factor, powered after restricting.

    Restricting the one-step matrix keeps the invariance residual at the
    rounding scale; restricting a large matrix power instead would amplify
    basis rounding by the expanding rate and trip the invariance guard.
    """
    base = restricted_matrix(factor.auto.matrix(), plane)
    return np.linalg.matrix_power(base, factor.power)


def restricted_stable_cocycle(system, plane, points):
    """Evaluate the plane-restricted derivative word at given points.

    Returns an array of 2x2 matrices (orthonormal plane coordinates), one per
    point, for the full word.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cur = wrap01(pts)
    out = np.broadcast_to(np.eye(2), cur.shape[:-1] + (2, 2)).copy()
    for f in system.factors:
        if isinstance(f, LinearFactor):
            r = restricted_power(f, plane)
            out = np.einsum("ij,...jk->...ik", r, out)
            cur = wrap01(cur @ f.matrix.T)
        else:
            col_b, dual_a = shear_restriction_data(f.shear, plane)
            tau = (2 * np.pi * f.shear.t
                   * np.cos(2 * np.pi * (cur[..., 0] + f.shear.phase)))
            step = np.eye(2) + tau[..., None, None] * np.einsum(
                "i,j->ij", col_b, dual_a)
            out = np.einsum("...ij,...jk->...ik", step, out)
            cur = f.shear.apply(cur)
    if np.ndim(points) == 1:
        return out[0]
    return out


def restricted_step(system, plane, point, v_ab):
    """One full-word step of (point, plane vector in (a_bar, b_bar) coords).

    Returns (image point, image vector in (a_bar, b_bar) coordinates).
    """
    mat = restricted_stable_cocycle(system, plane, np.asarray(point, float))
    w_orth = mat @ plane.oblique_to_orth(v_ab)
    return system.apply(np.asarray(point, float)), plane.orth_to_oblique(w_orth)


def push_angle(matrix2, angle):
    """Push a projective angle through a 2x2 matrix.

    Returns (new angle in [0, pi), log of the vector growth).
    """
    v = np.array([np.cos(angle), np.sin(angle)])
    w = matrix2 @ v
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ZeroVector("matrix collapsed the direction")
    ang = np.arctan2(w[1], w[0]) % np.pi
    return float(ang), float(np.log(nrm))


@dataclass(frozen=True)
class ProjectivePoint:
    """Base point plus a line in the stable plane (orthonormal coordinates).

    The line is represented by its angle in [0, pi).
    """

    base: np.ndarray
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "base", wrap01(np.asarray(self.base, float)))
        object.__setattr__(self, "angle", float(self.angle) % np.pi)

    @property
    def line(self):
        return np.array([np.cos(self.angle), np.sin(self.angle)])


def projective_step(system, plane, q):
    """Advance a projective point: base by the word, line by the restriction."""
    mat = restricted_stable_cocycle(system, plane, q.base)
    ang, _ = push_angle(mat, q.angle)
    return ProjectivePoint(system.apply(q.base), ang)


def angle_distance(a, b):
    """Distance between projective angles (circle of circumference pi)."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % np.pi
    return np.minimum(d, np.pi - d)


def top_stable_exponent(system, plane, n_steps, n_orbits=100, seed=0,
                        burn_in=1000, n_blocks=10, threads=1, points=None,
                        angles=None):
    """Top exponent of the stable-plane restricted cocycle over random orbits.

    Tracks a unit plane vector (orthonormal coordinates) along each orbit of
    the full system and accumulates its log growth; with random starting
    directions this converges to the larger restricted exponent.
    """
    d = system.dim
    if points is None:
        points = rng.initial_points(seed, n_orbits, d)
    else:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n_orbits = points.shape[0]
    if angles is None:
        angles = rng.initial_angles(seed, n_orbits)
    arrays = system.kernel_arrays()
    n_factors = len(system.factors)
    lin2 = np.zeros((n_factors, 2, 2))
    shear_flag = np.zeros(n_factors, dtype=np.int64)
    shear_amp = np.zeros(n_factors)
    shear_phase = np.zeros(n_factors)
    col_b = np.zeros(2)
    dual_a = np.zeros(2)
    seen_shear = False
    for i, f in enumerate(system.factors):
        if isinstance(f, LinearFactor):
            lin2[i] = restricted_power(f, plane)
        else:
            shear_flag[i] = 1
            shear_amp[i] = 2 * np.pi * f.shear.t
            shear_phase[i] = f.shear.phase
            cb, da = shear_restriction_data(f.shear, plane)
            if seen_shear and not (np.allclose(cb, col_b)
                                   and np.allclose(da, dual_a)):
                raise ValueError("shear factors with different directions")
            col_b[:] = cb
            dual_a[:] = da
            seen_shear = True
    tops = np.zeros(n_orbits)
    block_rates = np.zeros((n_orbits, n_blocks))
    status = np.full(n_orbits, _kernels.STATUS_BLOWUP, dtype=np.int64)

    def worker(lo, hi):
        _kernels.stable_top_kernel(*arrays, lin2, shear_flag, shear_amp,
                                   shear_phase, col_b, dual_a, points[lo:hi],
                                   angles[lo:hi], n_steps, burn_in, n_blocks,
                                   tops[lo:hi], block_rates[lo:hi],
                                   status[lo:hi])

    _run_chunks(worker, n_orbits, threads)
    if np.any(status == _kernels.STATUS_BLOWUP):
        bad = int(np.argmax(status == _kernels.STATUS_BLOWUP))
        raise NumericalBlowup(f"orbit {bad}: restricted norm not representable")
    per_orbit_se = block_rates.std(axis=1, ddof=1) / np.sqrt(n_blocks)
    pooled = tops.mean()
    se = tops.std(ddof=1) / np.sqrt(n_orbits) if n_orbits > 1 else per_orbit_se[0]
    return LyapunovEstimate(
        exponents=np.array([pooled]),
        std_errors=np.array([se]),
        per_orbit=tops[:, None],
        per_orbit_se=per_orbit_se[:, None],
        n_steps=(n_steps // n_blocks) * n_blocks,
        burn_in=burn_in,
        reorth_period=1,
        seed=seed,
    )
