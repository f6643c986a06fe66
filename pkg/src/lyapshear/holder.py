"""Hölder cocycle families over expanding interval maps.

Models live on [0, 1] with the full-branch linear expanding map of large
integer slope; the cocycle matrix is a fixed-eccentricity symmetric form
whose frame winds linearly across the space, modulated by a smooth scalar
gain.  An atom of the coarse partition spans many frame turns, so every
projective direction finds children whose frames swallow it back into the
common good sector: the classical recovery mechanism of strongly
expanding systems.  All sector memberships reduce to frame-offset
windows, and child masses follow from integer counts, so the hypothesis
checks are exact; the Hölder budgets are measured on discretized fields
and the certified bound is compared with a backward-orbit exponent.
"""
import math
from dataclasses import dataclass

import numpy as np

from .adapted import (BoundInputs, lower_bound, _arc_margin, _image_arc,
                      _min_expansion, _pangle, _pdist, _unit)
from .errors import DomainError, HypothesisViolated, NotConverged
from .rng import orbit_generator

_HALF_TURN = math.pi


@dataclass(frozen=True)
class ExpandingCocycleModel:
    """Winding-frame cocycle over the d-fold linear expanding map.

    The base map is f(x) = slope * x mod 1 on [0, 1] with the partition
    into ``n_atoms`` equal intervals; every atom has ``slope`` children
    of conditional mass 1/slope.  The matrix at x is the symmetric form
    R(frame) diag(g, g/bolicity) R(frame)^T with frame(x) linear in x and
    scalar gain g(x) = exp(log_gain + gain_amp sin(2 pi x)).  The good
    sector is shared by all atoms; the complement splits into ``pieces``
    (center, half width), each recovered by children whose frame offset
    from the sector center lies in the matching entry of ``windows``.
    """

    n_atoms: int
    slope: int
    theta: float
    frame_offset: float
    frame_rate: float
    log_gain: float
    bolicity: float
    gain_amp: float
    sector_center: float
    sector_width: float
    alpha: float
    pieces: tuple
    windows: tuple
    good_rho: float
    delta: float
    lam: float
    k: int
    ratio_amp: float = 0.0

    def frame(self, x):
        return self.frame_offset + self.frame_rate * np.asarray(x)

    def gain(self, x):
        return np.exp(self.log_gain
                      + self.gain_amp * np.sin(2.0 * _HALF_TURN
                                               * np.asarray(x)))

    def ratio(self, x):
        return self.bolicity * np.exp(
            self.ratio_amp * np.sin(2.0 * _HALF_TURN * np.asarray(x)))

    def matrices(self, x):
        """Cocycle matrices at the given points, stacked (n, 2, 2)."""
        phi = np.atleast_1d(self.frame(x))
        g = np.atleast_1d(self.gain(x))
        r = np.atleast_1d(self.ratio(x))
        c, s = np.cos(phi), np.sin(phi)
        rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        core = np.zeros((len(phi), 2, 2))
        core[:, 0, 0] = g
        core[:, 1, 1] = g / r
        return rot @ core @ np.swapaxes(rot, -1, -2)

    def ratio_extremes(self, samples=5):
        """Eccentricity ratios sampled between their extremes."""
        return self.bolicity * np.exp(
            self.ratio_amp * np.linspace(-1.0, 1.0, samples))

    def inv_norm(self):
        """Exact sup of inverse-matrix norms.

        The smallest singular value is gain/ratio, and both factors share
        the same phase, so the sup of its reciprocal is attained at a
        sine extreme.
        """
        return self.bolicity * math.exp(
            abs(self.ratio_amp - self.gain_amp) - self.log_gain)

    def rho(self, x):
        """Signed frame offset from the sector center, in (-pi/2, pi/2]."""
        raw = (self.frame(x) - self.sector_center) % _HALF_TURN
        return np.where(raw > _HALF_TURN / 2.0, raw - _HALF_TURN, raw)

    def child_bounds(self, atom, idx):
        """Interval and target atom of one child of one atom."""
        n, d = self.n_atoms, self.slope
        lo = (atom * d + idx) / (n * d)
        return lo, lo + 1.0 / (n * d), (atom * d + idx) % n

    def child_midpoints(self, atom):
        n, d = self.n_atoms, self.slope
        return (atom * d + np.arange(d) + 0.5) / (n * d)

    def count_children_in_offset_window(self, atom, lo, hi):
        """Number of children of one atom whose frame offset is in [lo, hi].

        The frame is linear in the child index, so the count is exact
        integer arithmetic over the wrapped residues; no enumeration of
        the (possibly enormous) child family is needed.
        """
        n, d = self.n_atoms, self.slope
        h = self.frame_rate / (n * d)
        base = self.frame((atom * d + 0.5) / (n * d)) - self.sector_center
        # child c sits in the window when base + h c = lo + m pi + u,
        # 0 <= u <= hi - lo, for some integer m
        width = hi - lo
        total = 0
        c_span = h * (d - 1)
        m_min = math.floor((base - lo - width) / _HALF_TURN) - 1
        m_max = math.ceil((base + c_span - lo) / _HALF_TURN) + 1
        for m in range(m_min, m_max + 1):
            c_lo = (lo + m * _HALF_TURN - base) / h
            c_hi = (lo + width + m * _HALF_TURN - base) / h
            a = max(0, math.ceil(c_lo - 1e-12))
            b = min(d - 1, math.floor(c_hi + 1e-12))
            if b >= a:
                total += b - a + 1
        return total

    def child_index_at_offset(self, atom, target_rho):
        """A child of the atom whose frame offset is nearest the target."""
        n, d = self.n_atoms, self.slope
        h = self.frame_rate / (n * d)
        base = self.frame((atom * d + 0.5) / (n * d)) - self.sector_center
        m_lo = math.floor((base - target_rho) / _HALF_TURN)
        m_hi = math.ceil((base + h * (d - 1) - target_rho) / _HALF_TURN)
        best, best_err = None, math.inf
        for m in range(m_lo, m_hi + 1):
            c = round((target_rho + m * _HALF_TURN - base) / h)
            c = min(max(c, 0), d - 1)
            err = _pdist(base + h * c, target_rho)
            if err < best_err:
                best, best_err = c, float(err)
        return best


# ---------------------------------------------------------------------------
# exact frame-offset window geometry (unit gain; scalars drop out)


def _offset_image_arcs(bolicity, sector_center, rhos, piece_c, piece_w):
    """Image arcs of a projective piece under frames at given offsets.

    Returns (centers, half widths) of the images; the matrices are the
    unit-gain forms R(g+rho) diag(1, 1/bol) R(g+rho)^T, whose projective
    action at frame-relative angle u is atan2(sin(u)/bol, cos(u)).
    """
    ang = sector_center + np.asarray(rhos)
    out = []
    for e in (piece_c - piece_w, piece_c + piece_w):
        u = e - ang
        out.append(ang + np.arctan2(np.sin(u) / bolicity, np.cos(u)))
    lo, hi = out
    span = (hi - lo) % _HALF_TURN
    return (lo + span / 2.0) % _HALF_TURN, span / 2.0


def _offset_margins(model_like, rhos, piece_c, piece_w, guard):
    """Containment margin of the piece image inside the good sector.

    Margin of the image arc inside (sector_center, sector_width) for each
    candidate frame offset, minimized over the sampled eccentricity
    ratios and masked to -inf when the piece comes within ``guard`` of
    the frame's blind direction (offset + pi/2), where the projective
    action explodes.
    """
    bols, gamma, omega = (np.atleast_1d(model_like["bolicity"]),
                          model_like["center"], model_like["width"])
    rhos = np.asarray(rhos, dtype=float)
    margins = np.full(len(rhos), np.inf)
    for bol in bols:
        ic, iw = _offset_image_arcs(float(bol), gamma, rhos,
                                    piece_c, piece_w)
        off = ((ic - gamma + _HALF_TURN / 2.0) % _HALF_TURN
               - _HALF_TURN / 2.0)
        margins = np.minimum(margins, omega - iw - np.abs(off))
    blind = gamma + rhos + _HALF_TURN / 2.0
    bdist = _pdist(blind, piece_c)
    return np.where(bdist >= piece_w + guard, margins, -np.inf)


def _sector_expansion_floor(bolicity, omega, rho):
    """Unit-gain minimum expansion over the sector at a frame offset."""
    u = omega + abs(rho)
    return math.sqrt(math.cos(u) ** 2
                     + (math.sin(u) / bolicity) ** 2)


def _widest_feasible_window(margins, rhos, floor):
    """Longest contiguous run of offsets whose margin clears the floor."""
    ok = margins >= floor
    if not ok.any():
        return None
    edges = np.flatnonzero(np.diff(np.concatenate([[0], ok.view(np.int8),
                                                   [0]])))
    starts, ends = edges[::2], edges[1::2]
    best = np.argmax(ends - starts)
    lo, hi = starts[best], ends[best] - 1
    if hi - lo < 2:
        return None
    # shrink by one grid step so the interior certifies with slack
    return float(rhos[lo + 1]), float(rhos[hi - 1])


# ---------------------------------------------------------------------------
# model construction


def _split_complement(geom, alpha_eff, w_min=0.08, du_min=0.015):
    """Greedy split of one side of the bad arc into recoverable pieces.

    Walks outward from the sector edge toward the repelling direction,
    taking the largest piece that some frame-offset window of width at
    least ``w_min`` swallows into the sector with margin ``alpha_eff``;
    the mirrored side is handled by symmetry at the call site.
    """
    gamma, omega = geom["center"], geom["width"]
    rhos = np.linspace(-_HALF_TURN / 2.0 + 1e-3,
                       _HALF_TURN / 2.0 - 1e-3, 2200)
    pieces, windows = [], []
    u0 = omega
    top = _HALF_TURN / 2.0
    while u0 < top - 1e-9:
        u1 = top
        found = None
        for _ in range(60):
            c = gamma + (u0 + u1) / 2.0
            w = (u1 - u0) / 2.0
            margins = _offset_margins(geom, rhos, c, w, guard=0.06)
            win = _widest_feasible_window(margins, rhos, alpha_eff)
            if win is not None and win[1] - win[0] >= w_min:
                found = (c, w, win)
                break
            u1 = u0 + (u1 - u0) * 0.72
            if u1 - u0 < du_min:
                break
        if found is None:
            return None
        pieces.append((found[0], found[1]))
        windows.append(found[2])
        u0 = u1
    return pieces, windows


def random_holder_model(seed, max_tries=40):
    """Random compliant winding-frame model.

    Draws the geometry, splits the complement on a feasibility-checked
    grid, sizes the slope so the expansion dominates both the bolicity
    and the squared projective Hölder constant, and fits (delta, lam, k)
    strictly inside the measured extremes.
    """
    gen = orbit_generator(seed, 29)
    for _ in range(max_tries):
        n_atoms = int(gen.integers(3, 6))
        omega = gen.uniform(0.30, 0.42)
        alpha = gen.uniform(0.03, 0.06)
        theta = gen.uniform(0.8, 1.0)
        bol = gen.uniform(35.0, 75.0)
        log_gain = gen.uniform(math.log(1.8), math.log(3.2))
        gain_amp = gen.uniform(0.0, 0.05)
        ratio_amp = gen.uniform(0.0, 0.08)
        gamma = gen.random() * _HALF_TURN
        phi0 = gen.random() * _HALF_TURN
        rate = n_atoms * (_HALF_TURN + gen.uniform(0.25, 0.6))

        bols = bol * np.exp(ratio_amp * np.linspace(-1.0, 1.0, 5))
        geom = {"bolicity": bols, "center": gamma, "width": omega}
        alpha_eff = alpha + 0.02
        split = _split_complement(geom, alpha_eff)
        if split is None:
            continue
        right_pieces, right_windows = split
        pieces = list(right_pieces)
        windows = list(right_windows)
        for (c, w), _ in zip(right_pieces, right_windows):
            mc = (2.0 * gamma - c) % _HALF_TURN
            margins = _offset_margins(
                geom, np.linspace(-_HALF_TURN / 2 + 1e-3,
                                  _HALF_TURN / 2 - 1e-3, 2200), mc, w,
                guard=0.06)
            win = _widest_feasible_window(
                margins, np.linspace(-_HALF_TURN / 2 + 1e-3,
                                     _HALF_TURN / 2 - 1e-3, 2200),
                alpha_eff)
            if win is None:
                break
            pieces.append((mc, w))
            windows.append(win)
        else:
            s = len(pieces)

            # good window: every offset whose sector image re-enters with
            # margin alpha_eff and whose blind direction stays clear
            rhos = np.linspace(-_HALF_TURN / 2 + 1e-3,
                               _HALF_TURN / 2 - 1e-3, 2200)
            margins = _offset_margins(geom, rhos, gamma, omega, guard=0.1)
            win = _widest_feasible_window(margins, rhos, alpha_eff)
            if win is None:
                continue
            good_rho = min(-win[0], win[1]) * 0.98
            if good_rho <= 0.05:
                continue

            # slope: expansion must dominate bolicity and the projective
            # Hoelder constant squared (frame winding times eccentricity)
            cp_est = 1.15 * rate * (bol - 1.0)
            r_diam = 1.0 / n_atoms
            need_q = (2.0 * bol) ** (1.0 / theta)
            need_c = (3.0 * cp_est ** 2 * r_diam ** theta
                      / alpha) ** (1.0 / theta)
            slope = int(max(need_q, need_c, 64.0)) + 1

            model = ExpandingCocycleModel(
                n_atoms=n_atoms, slope=slope, theta=theta,
                frame_offset=phi0, frame_rate=rate, log_gain=log_gain,
                bolicity=bol, gain_amp=gain_amp, sector_center=gamma,
                sector_width=omega, alpha=alpha, pieces=tuple(pieces),
                windows=tuple(windows), good_rho=good_rho,
                delta=0.5, lam=1.0, k=s + 1, ratio_amp=ratio_amp)

            good_masses = [model.count_children_in_offset_window(
                i, -good_rho, good_rho) / slope
                for i in range(n_atoms)]
            rec_masses = [model.count_children_in_offset_window(
                i, lo, hi) / slope
                for i in range(n_atoms) for lo, hi in windows]
            if min(rec_masses) <= 0.0:
                continue
            bad_max = 1.0 - min(good_masses)
            delta = bad_max + (1.0 - bad_max) * gen.uniform(0.05, 0.3)
            k = max(s + 1, math.ceil(1.0 / min(rec_masses) - 1e-9))
            lam = (math.exp(log_gain - gain_amp)
                   * _sector_expansion_floor(bol * math.exp(ratio_amp),
                                             omega, good_rho)
                   * (1.0 - 1e-9))
            if delta >= 1.0 or lam * model.inv_norm() <= 1.0:
                continue
            return ExpandingCocycleModel(
                n_atoms=n_atoms, slope=slope, theta=theta,
                frame_offset=phi0, frame_rate=rate, log_gain=log_gain,
                bolicity=bol, gain_amp=gain_amp, sector_center=gamma,
                sector_width=omega, alpha=alpha, pieces=tuple(pieces),
                windows=tuple(windows), good_rho=good_rho,
                delta=float(delta), lam=float(lam), k=int(k),
                ratio_amp=ratio_amp)
    raise DomainError(f"no compliant model found in {max_tries} draws")


# ---------------------------------------------------------------------------
# measured Hölder budgets


def measure_projective_constant(model, grid=2048, n_dirs=8):
    """Measured Hölder constant of x -> projective action of A(x).

    Sup over strided grid pairs and probe directions of the angular
    displacement divided by the base distance to the Hölder power.
    """
    xs = (np.arange(grid) + 0.5) / grid
    mats = model.matrices(xs)
    dirs = (np.arange(n_dirs) + 0.3) * _HALF_TURN / n_dirs
    vecs = np.stack([np.cos(dirs), np.sin(dirs)])
    images = mats @ vecs
    angles = np.arctan2(images[:, 1, :], images[:, 0, :]) % _HALF_TURN
    best = 0.0
    stride = 1
    while stride < grid:
        da = np.abs(angles[stride:] - angles[:-stride]) % _HALF_TURN
        da = np.minimum(da, _HALF_TURN - da)
        dx = (stride / grid) ** model.theta
        best = max(best, float(da.max()) / dx)
        stride *= 2
    return best


def measure_bolicity(model, grid=512):
    """Measured sup of norm(A) * norm(A^-1) over the space."""
    xs = (np.arange(grid) + 0.5) / grid
    svals = np.linalg.svd(model.matrices(xs), compute_uv=False)
    return float((svals[:, 0] / svals[:, 1]).max())


def _holder_constant(xs, angles, theta):
    """Grid Hölder constant of an angle-valued field."""
    best = 0.0
    stride = 1
    while stride < len(xs):
        da = np.abs(angles[stride:] - angles[:-stride]) % _HALF_TURN
        da = np.minimum(da, _HALF_TURN - da)
        dx = np.abs(xs[stride:] - xs[:-stride]) ** theta
        best = max(best, float((da / dx).max()))
        stride *= 2
    return best


class _SmoothField:
    """Direction field from a few trig modes, scaled to a target constant.

    Sampling the field on a reference grid calibrates the amplitude so
    the measured grid Hölder constant matches the target; the field can
    then be evaluated at arbitrary points, in particular at the pull-back
    points of an inverse branch deep inside an atom.
    """

    def __init__(self, gen, theta, target_c, base_angle, grid=1000):
        self.modes = [(gen.normal() / j, j, gen.random() * _HALF_TURN)
                      for j in range(1, 5)]
        self.scale = 1.0
        self.base = base_angle
        xs = (np.arange(grid) + 0.5) / grid
        c_now = _holder_constant(xs, self(xs), theta)
        if c_now > 0.0 and target_c > 0.0:
            self.scale = target_c / c_now

    def __call__(self, x):
        x = np.asarray(x)
        out = np.zeros_like(x, dtype=float)
        for amp, freq, phase in self.modes:
            out += amp * np.sin(2.0 * _HALF_TURN * freq * x + phase)
        return (self.base + self.scale * out) % _HALF_TURN


def pushforward_field(model, atom, child_idx, xs_target, field):
    """Push a direction field on an atom through one inverse branch.

    ``field`` maps source points to angles; returns the transported
    field on the target atom: x -> angle of A(g x) applied to the field
    at the pull-back g x.
    """
    lo, hi, target = model.child_bounds(atom, child_idx)
    t0 = target / model.n_atoms
    g_xs = lo + (xs_target - t0) * model.n_atoms * (hi - lo)
    mats = model.matrices(g_xs)
    angles = field(g_xs)
    vecs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    images = np.einsum("nij,nj->ni", mats, vecs)
    return np.arctan2(images[:, 1], images[:, 0]) % _HALF_TURN


def measure_pushforward_ratio(model, c0, grid=1000, n_fields=6, seed=0):
    """Largest ratio of pushed to admissible Hölder constants.

    Random fields at the admissible constant are pushed through sampled
    inverse branches; the invariance statement says the measured constant
    of every pushed field stays within the admissible class (ratio <= 1).
    """
    gen = orbit_generator(seed, 37)
    worst = 0.0
    for _ in range(n_fields):
        atom = int(gen.integers(0, model.n_atoms))
        child = int(gen.integers(0, min(model.slope, 1 << 30)))
        _, _, target = model.child_bounds(atom, child)
        t0 = target / model.n_atoms
        xs = t0 + (np.arange(grid) + 0.5) / (grid * model.n_atoms)
        field = _SmoothField(gen, model.theta,
                             c0 * gen.uniform(0.4, 0.95),
                             gen.random() * _HALF_TURN)
        pushed = pushforward_field(model, atom, child, xs, field)
        c_out = _holder_constant(xs, pushed, model.theta)
        worst = max(worst, c_out / c0)
    return worst


# ---------------------------------------------------------------------------
# the full hypothesis check


@dataclass(frozen=True)
class HolderReport:
    """Measured budgets, exact margins and the certified bound."""

    q: float
    c0: float
    c_proj: float
    bolicity: float
    margins: dict
    pushforward_ratio: float
    recovery_clearance: float
    good_mass_min: float
    recovery_mass_min: float
    bound: float


def holder_family_check(model, grid=1024, seed=0):
    """Verify the expansion, sector and Hölder hypotheses of a model.

    Checks the base expansion (H6), the sector/recovery structure with
    its clearances and masses (H7) and the Hölder budget inequalities
    (H8); measures the pushforward invariance of admissible fields and
    the recovery clearance of bad fields; returns the report with the
    certified exponent bound.  Raises HypothesisViolated naming the
    failing hypothesis and its margin.
    """
    if model.slope <= 1:
        raise HypothesisViolated(
            f"H6: base expansion factor {model.slope} is not above one "
            f"(margin {model.slope - 1.0})")

    bol = measure_bolicity(model)
    c_proj = measure_projective_constant(model, grid=grid)
    d_theta = float(model.slope) ** model.theta
    q = bol / d_theta
    if q >= 1.0:
        raise HypothesisViolated(
            f"H8: bolicity/expansion ratio q = {q:.6g} is not below one "
            f"(margin {1.0 - q:.6g})")
    r_diam = 1.0 / model.n_atoms
    lhs = c_proj ** 2 * r_diam ** model.theta / ((1.0 - q) * d_theta)
    if lhs >= model.alpha / 2.0:
        raise HypothesisViolated(
            f"H8: squared Hölder budget {lhs:.6g} reaches alpha/2 = "
            f"{model.alpha / 2.0:.6g} (margin {model.alpha / 2 - lhs:.6g})")
    c0 = c_proj / ((1.0 - q) * d_theta)

    geom = {"bolicity": model.ratio_extremes(),
            "center": model.sector_center,
            "width": model.sector_width}
    h_child = model.frame_rate / (model.n_atoms * model.slope)
    eps_var = 2.0 * h_child * model.bolicity

    # H7 part (a): every good-window offset keeps the sector inside
    # itself with clearance alpha and expands by at least lam
    rhos = np.linspace(-model.good_rho, model.good_rho, 501)
    margins = _offset_margins(geom, rhos, model.sector_center,
                              model.sector_width, guard=0.05)
    good_margin = float(margins.min()) - eps_var
    if good_margin < model.alpha:
        raise HypothesisViolated(
            f"H7: good-sector clearance {good_margin:.6g} falls below "
            f"alpha = {model.alpha} (margin {good_margin - model.alpha:.6g})")
    gain_floor = math.exp(model.log_gain - model.gain_amp)
    exp_floor = gain_floor * _sector_expansion_floor(
        model.bolicity * math.exp(model.ratio_amp),
        model.sector_width, model.good_rho)
    if exp_floor < model.lam:
        raise HypothesisViolated(
            f"H7: good-sector expansion {exp_floor:.6g} falls below "
            f"lam = {model.lam} (margin {exp_floor - model.lam:.6g})")

    # H7 part (b): recovery windows swallow their pieces with clearance,
    # every piece has designated mass >= 1/k on every atom, and the
    # pieces tile the complement of the sector
    rec_margin = math.inf
    for (c, w), (lo, hi) in zip(model.pieces, model.windows):
        win = np.linspace(lo, hi, 301)
        m = float(_offset_margins(geom, win, c, w, guard=0.05).min())
        rec_margin = min(rec_margin, m - eps_var)
    if rec_margin < model.alpha:
        raise HypothesisViolated(
            f"H7: recovery clearance {rec_margin:.6g} falls below alpha "
            f"(margin {rec_margin - model.alpha:.6g})")
    covered = sum(2.0 * w for _, w in model.pieces)
    gap = abs(covered - (_HALF_TURN - 2.0 * model.sector_width))
    if gap > 1e-6:
        raise HypothesisViolated(
            f"H7: complement pieces leave {gap:.3g} of the bad arc "
            f"uncovered")
    if len(model.pieces) >= model.k:
        raise HypothesisViolated(
            f"H7: piece count {len(model.pieces)} must stay below "
            f"k = {model.k}")

    good_masses, rec_masses = [], []
    for i in range(model.n_atoms):
        good_masses.append(model.count_children_in_offset_window(
            i, -model.good_rho, model.good_rho) / model.slope)
        for lo, hi in model.windows:
            rec_masses.append(model.count_children_in_offset_window(
                i, lo, hi) / model.slope)
    if min(good_masses) <= 1.0 - model.delta:
        raise HypothesisViolated(
            f"H7: good-children mass {min(good_masses):.6g} is not above "
            f"1 - delta = {1.0 - model.delta:.6g}")
    if min(rec_masses) < 1.0 / model.k:
        raise HypothesisViolated(
            f"H7: recovery mass {min(rec_masses):.6g} falls below "
            f"1/k = {1.0 / model.k:.6g}")

    push_ratio = measure_pushforward_ratio(model, c0, seed=seed)
    if push_ratio > 1.0 + 1e-9:
        raise HypothesisViolated(
            f"H8: pushed field Hölder constant exceeds the admissible "
            f"class by factor {push_ratio:.6g}")

    rec_clear = _measure_bad_field_recovery(model, c0, seed=seed)
    if rec_clear < model.alpha / 2.0:
        raise HypothesisViolated(
            f"H7: measured bad-field recovery clearance {rec_clear:.6g} "
            f"falls below alpha/2 (margin "
            f"{rec_clear - model.alpha / 2.0:.6g})")

    bound = lower_bound(BoundInputs(
        beta=1.0 / model.k, delta=model.delta, lam=model.lam,
        inv_norm=model.inv_norm()))
    return HolderReport(
        q=q, c0=c0, c_proj=c_proj, bolicity=bol,
        margins={"H6": float(model.slope - 1),
                 "H8_q": 1.0 - q,
                 "H8_budget": model.alpha / 2.0 - lhs,
                 "H7_good": good_margin - model.alpha,
                 "H7_recovery": rec_margin - model.alpha,
                 "H7_expansion": exp_floor - model.lam},
        pushforward_ratio=push_ratio,
        recovery_clearance=rec_clear,
        good_mass_min=min(good_masses),
        recovery_mass_min=min(rec_masses),
        bound=bound)


def _measure_bad_field_recovery(model, c0, n_fields=6, grid=400, seed=0):
    """Worst measured clearance of recovered bad fields, over samples.

    For each sampled complement piece, a near-constant admissible field
    inside the piece is pushed through a designated recovery child of
    each atom; the pushed field must sit inside the good sector with
    clearance at least alpha/2.
    """
    gen = orbit_generator(seed, 41)
    worst = math.inf
    for _ in range(n_fields):
        idx = int(gen.integers(0, len(model.pieces)))
        c, w = model.pieces[idx]
        lo, hi = model.windows[idx]
        base = c + w * gen.uniform(-0.8, 0.8)
        for atom in range(model.n_atoms):
            child = model.child_index_at_offset(atom,
                                                0.5 * (lo + hi))
            _, _, target = model.child_bounds(atom, child)
            t0 = target / model.n_atoms
            xs = t0 + (np.arange(grid) + 0.5) / (grid * model.n_atoms)
            field = _SmoothField(gen, model.theta, c0 * 0.5, base)
            pushed = pushforward_field(model, atom, child, xs, field)
            clear = model.sector_width - _pdist(pushed,
                                                model.sector_center)
            worst = min(worst, float(clear.min()))
    return worst


# ---------------------------------------------------------------------------
# brute-force exponent by backward orbits


def holder_brute_force(model, depth=300, n_chains=256, seed=0):
    """Top exponent of the cocycle by stationary backward chains.

    Endpoints are uniform (the Lebesgue measure is invariant); preimage
    chains are drawn uniformly over inverse branches, which keeps float
    precision because every step divides by the slope.  Vectors seeded at
    the sector center are pushed forward along the reversed chain with
    renormalization; returns the mean chain exponent and its standard
    error.
    """
    gen = orbit_generator(seed, 43)
    x = gen.random(n_chains)
    chain = np.empty((depth, n_chains))
    for t in range(depth):
        j = gen.integers(0, model.slope, n_chains)
        x = (x + j) / model.slope
        chain[t] = x
    v = np.tile(_unit(model.sector_center), (n_chains, 1))
    log_norm = np.zeros(n_chains)
    for t in range(depth - 1, -1, -1):
        mats = model.matrices(chain[t])
        v = np.einsum("nij,nj->ni", mats, v)
        norms = np.linalg.norm(v, axis=1)
        log_norm += np.log(norms)
        v /= norms[:, None]
    vals = log_norm / depth
    return float(vals.mean()), float(vals.std(ddof=1)
                                     / math.sqrt(n_chains))


def holder_bound_rows(models, depth=300, n_chains=256, seed=0):
    """Certified bound versus brute-force comparison rows."""
    rows = []
    for i, model in enumerate(models):
        report = holder_family_check(model, seed=seed)
        brute, se = holder_brute_force(model, depth, n_chains,
                                       seed=seed + i)
        rows.append({
            "model_id": i,
            "k": model.k,
            "delta": model.delta,
            "lambda": model.lam,
            "inv_norm": model.inv_norm(),
            "bound": report.bound,
            "brute_force": brute,
            "brute_se": se,
            "slack": brute - report.bound,
        })
    return rows
