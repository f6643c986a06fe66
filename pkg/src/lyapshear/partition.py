"""Subordinated partitions along grown unstable leaf segments.

Leaf segments of the composed map are grown by integrating the measured
expanding direction field.  Atoms are segments whose length is calibrated
to a designed window of bad-strip crossings; cutting the image leaf into
equal reference atoms and pulling the cuts back yields the pre-atom grid,
and each pre-atom is weighed with the closed-form conditional density and
labeled by the region its own footprint occupies.
"""
import math
from dataclasses import dataclass

import numpy as np

from .cocycle import apply_lift, tangent_apply
from .errors import ConeLoss, PoorFit, TooFewStrips
from .geometry import (Region, RegionSpec, _default_partition_lengths,
                       _power_fit, classify_points)
from .rng import orbit_generator

# Designed bad-strip crossing window for atom lengths: with k crossings an
# atom spans between k - 1 and k + 1 half-width vertical strips.
CROSSING_WINDOW = (10, 40)
# Splitting needs enough strips for the mass combinatorics to average out.
SPLIT_MIN_CROSSINGS = 20
# Structural cone cap: grown directions further than this from the expanding
# eigendirection mean the perturbative regime is gone.
CONE_CAP = 0.4


# ---------------------------------------------------------------------------
# the expanding direction field


def _push_chain(word, chain, v_u):
    """Push the seed direction down a precomputed inverse orbit chain."""
    v = np.broadcast_to(v_u, chain[0].shape).copy()
    for j in range(len(chain) - 1, 0, -1):
        _, v = tangent_apply(word, chain[j], v)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v


def _orient_and_check(dirs, v_u, phi_u, gamma):
    """Orient unit directions to positive dual pairing and test the cone."""
    cu = dirs @ phi_u
    dirs = dirs * np.where(cu >= 0.0, 1.0, -1.0)[:, None]
    cu = np.abs(cu)
    w = dirs - cu[:, None] * v_u[None, :]
    if np.any(np.linalg.norm(w, axis=1) >= gamma * cu):
        raise ConeLoss(
            f"direction field left the size-{gamma:g} expanding cone")
    return dirs


def _adaptive_directions(system, word, inv, points, gamma, tol, max_depth):
    """Expanding directions with the pull-back depth grown until stable.

    Returns (unit directions, depth used).  The composed word contracts
    pushed-forward directions toward its own expanding line, so one more
    pull-back step moving nothing by more than ``tol`` certifies
    convergence.
    """
    chain = [np.atleast_2d(np.asarray(points, dtype=float)) % 1.0]
    prev = None
    for depth in range(1, max_depth + 1):
        chain.append(inv.apply(chain[-1]))
        v = _push_chain(word, chain, system.v_u)
        if prev is not None:
            perp = v - np.sum(v * prev, axis=1, keepdims=True) * prev
            if float(np.max(np.linalg.norm(perp, axis=1))) < tol:
                return (_orient_and_check(v, system.v_u, system.phi_u,
                                          gamma), depth)
        prev = v
    raise ConeLoss("expanding direction did not converge; "
                   "the word has no dominated expanding line here")


def unstable_directions(system, n, t, points, phase=0.0, gamma=CONE_CAP,
                        tol=1e-10, max_depth=48):
    """Unit field spanning the expanding line of the composed word.

    The seed is the linear expanding eigendirection, pulled back along the
    inverse orbit and pushed forward through the word until the direction
    stabilizes to ``tol``.  Raises ConeLoss when the field leaves the
    ``gamma`` cone around the eigendirection or fails to converge.
    """
    pts = np.asarray(points, dtype=float)
    word = system.engine_word(n, t, phase)
    dirs, _ = _adaptive_directions(system, word, word.inverse(),
                                   np.atleast_2d(pts), gamma, tol, max_depth)
    return dirs.reshape(pts.shape) if pts.ndim == 1 else dirs


def _field_at_depth(system, word, inv, depth, gamma):
    """Fixed-depth direction evaluator reused across integrator stages."""
    def field(pts):
        chain = [pts % 1.0]
        for _ in range(depth):
            chain.append(inv.apply(chain[-1]))
        v = _push_chain(word, chain, system.v_u)
        return _orient_and_check(v, system.v_u, system.phi_u, gamma)
    return field


# ---------------------------------------------------------------------------
# leaf growth


@dataclass(frozen=True)
class UnstableSegment:
    """Polyline sample of one leaf of the composed map's expanding foliation.

    ``nodes`` are covering-space coordinates (never wrapped) at uniform
    unit-speed parameter spacing ``step``; ``directions`` are the unit
    expanding field at the nodes; ``weights`` are the conditional-density
    values, the norms of the field rescaled to unit dual pairing with the
    linear expanding direction.
    """

    n: int
    t: float
    phase: float
    anchor: np.ndarray
    nodes: np.ndarray
    directions: np.ndarray
    weights: np.ndarray
    step: float
    length: float

    def arc_positions(self):
        """Cumulative polyline arc length at each node."""
        gaps = np.linalg.norm(np.diff(self.nodes, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(gaps)])


def _rk4_polyline(field, anchors, target_length, steps):
    """Classical fourth-order integration of the unit direction field."""
    h = target_length / steps
    bsz, d = anchors.shape
    nodes = np.empty((bsz, steps + 1, d))
    dirs = np.empty_like(nodes)
    p = anchors.copy()
    k1 = field(p)
    nodes[:, 0], dirs[:, 0] = p, k1
    for i in range(steps):
        k2 = field(p + (0.5 * h) * k1)
        k3 = field(p + (0.5 * h) * k2)
        k4 = field(p + h * k3)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        k1 = field(p)
        nodes[:, i + 1], dirs[:, i + 1] = p, k1
    return nodes, dirs


def grow_unstable_segments(system, n, t, anchors, target_length, phase=0.0,
                           gamma=CONE_CAP, max_step=0.5, tol_length=1e-6,
                           tol_gap=1e-8, max_refine=4):
    """Grow one leaf segment per anchor, all in lockstep.

    Integrates the expanding field with fourth-order steps, then
    re-integrates with halved steps until the polyline is refinement
    stable: shared-grid node distance within ``tol_gap`` of the length and
    relative length change within ``tol_length``.
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    word = system.engine_word(n, t, phase)
    inv = word.inverse()
    _, depth = _adaptive_directions(system, word, inv, anchors, gamma,
                                    1e-10, 48)

    # The probe measures convergence at the anchors only; points met later
    # along the leaf can need a deeper pull-back chain.  When halving the
    # step stalls against a depth-limited noise floor, deepen and restart.
    converged = False
    base_steps = max(1, math.ceil(target_length / max_step))
    for boost in (0, 3, 6, 9):
        field = _field_at_depth(system, word, inv, depth + 1 + boost, gamma)
        steps = base_steps
        prev = None
        for _ in range(max_refine + 1):
            nodes, dirs = _rk4_polyline(field, anchors, float(target_length),
                                        steps)
            lengths = np.sum(np.linalg.norm(np.diff(nodes, axis=1), axis=2),
                             axis=1)
            if prev is not None:
                p_nodes, p_lengths = prev
                gap = float(np.max(np.linalg.norm(p_nodes - nodes[:, ::2],
                                                  axis=2)))
                drift = float(np.max(np.abs(lengths - p_lengths))) \
                    / target_length
                if gap <= tol_gap * target_length and drift <= tol_length:
                    converged = True
                    break
            prev = (nodes, lengths)
            steps *= 2
        if converged:
            break
    if not converged:
        raise ValueError("leaf integration did not stabilise under "
                         f"{max_refine} refinements")

    out = []
    for b in range(anchors.shape[0]):
        weights = 1.0 / np.abs(dirs[b] @ system.phi_u)
        out.append(UnstableSegment(
            n=int(n), t=float(t), phase=float(phase),
            anchor=anchors[b].copy(), nodes=nodes[b], directions=dirs[b],
            weights=weights, step=float(target_length) / steps,
            length=float(lengths[b])))
    return out


def grow_unstable_segment(system, n, t, anchor, target_length, **kwargs):
    """Single-anchor version of `grow_unstable_segments`."""
    anchors = np.asarray(anchor, dtype=float)[None, :]
    return grow_unstable_segments(system, n, t, anchors, target_length,
                                  **kwargs)[0]


# ---------------------------------------------------------------------------
# densities and strip combinatorics


def density_ratio(seg, i, j):
    """Conditional-density ratio between nodes ``i`` and ``j``, closed form.

    The disintegration density at a node is the norm of the expanding
    direction rescaled to unit dual pairing, so the ratio needs no orbit
    averaging.  Index arrays give an array of ratios.
    """
    out = seg.weights[np.asarray(i)] / seg.weights[np.asarray(j)]
    return float(out) if out.ndim == 0 else out


def _bad_halfwidth(region):
    (a, b), _ = region.bad_intervals()
    return 0.5 * (b - a)


def count_bad_crossings(seg, region):
    """Complete bad-strip crossings of the segment in the covering space."""
    w = _bad_halfwidth(region)
    xs = seg.nodes[:, 0]
    xlo, xhi = float(xs.min()), float(xs.max())
    first = math.ceil((xlo + w - 0.25) / 0.5)
    last = math.floor((xhi - w - 0.25) / 0.5)
    return max(0, last - first + 1)


def crossing_lengths(seg, width=0.5):
    """Arc lengths of complete crossings of width-``width`` vertical strips."""
    arcs = seg.arc_positions()
    xs = seg.nodes[:, 0].copy()
    dx = np.diff(xs)
    if np.all(dx < 0.0):
        xs = -xs
    elif not np.all(dx > 0.0):
        raise ValueError("segment is not monotone across vertical strips")
    lo = math.ceil(xs[0] / width)
    hi = math.floor(xs[-1] / width)
    if hi - lo < 1:
        return np.zeros(0)
    bounds = np.arange(lo, hi + 1) * width
    return np.diff(np.interp(bounds, xs, arcs))


# ---------------------------------------------------------------------------
# pre-atom splitting


@dataclass(frozen=True)
class AtomSplit:
    """Pre-atom decomposition of one atom with class masses.

    ``child_bounds`` are arc positions along the atom (endpoints included);
    ``labels`` hold +1 / -1 for children strictly inside the signed good
    regions and 0 for children touching the bad strips; ``masses`` are the
    density-weighted class fractions.
    """

    atom: UnstableSegment
    alpha: float
    child_bounds: np.ndarray
    labels: np.ndarray
    child_masses: np.ndarray
    masses: dict
    crossings: int

    def __post_init__(self):
        total = sum(self.masses.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class masses sum to {total!r}, not 1")

    @property
    def n_children(self):
        return self.labels.size

    def row(self):
        """Flat record for CSV reporting."""
        wmax = float(self.atom.weights.max() / self.atom.weights.min())
        return {
            "n": self.atom.n,
            "t": self.atom.t,
            "alpha": self.alpha,
            "length": self.atom.length,
            "mass_B": self.masses[Region.BAD],
            "mass_Gplus": self.masses[Region.GOOD_PLUS],
            "mass_Gminus": self.masses[Region.GOOD_MINUS],
            "density_ratio_max": wmax,
        }


def atom_split(system, seg, alpha, region=None, image_atom_length=None,
               min_crossings=SPLIT_MIN_CROSSINGS):
    """Cut an atom into image-pulled-back pre-atoms and weigh the classes.

    The image leaf is cut into equal reference atoms; pulling the cuts back
    gives the pre-atom grid.  A pre-atom is labeled by its own footprint:
    strictly inside one signed good region, or bad as soon as it touches a
    bad strip.  Class masses integrate the conditional density along the
    atom.
    """
    if region is None:
        region = RegionSpec(alpha, seg.t)
    d_l, big_l = _default_partition_lengths(system)
    if not d_l < seg.length < big_l:
        raise ValueError(
            f"atom length {seg.length:.3f} outside ({d_l:.3f}, {big_l:.3f})")
    crossings = count_bad_crossings(seg, region)
    if crossings < min_crossings:
        raise TooFewStrips(f"{crossings} complete bad-strip crossings, "
                           f"need {min_crossings}")

    word = system.engine_word(seg.n, seg.t, seg.phase)
    img = apply_lift(word, seg.nodes)
    img_arcs = np.concatenate(
        [[0.0], np.cumsum(np.linalg.norm(np.diff(img, axis=0), axis=1))])
    l_ref = seg.length if image_atom_length is None else float(
        image_atom_length)
    cuts = np.arange(1.0, img_arcs[-1] / l_ref) * l_ref
    cuts = cuts[cuts < img_arcs[-1] * (1.0 - 1e-12)]

    arcs = seg.arc_positions()
    bounds = np.concatenate([[0.0], np.interp(cuts, img_arcs, arcs),
                             [arcs[-1]]])
    x_bounds = np.interp(bounds, arcs, seg.nodes[:, 0])
    a = np.minimum(x_bounds[:-1], x_bounds[1:])
    b = np.maximum(x_bounds[:-1], x_bounds[1:])

    # a child is bad as soon as its x interval touches the strip lattice
    # {0.25 + j/2 +- w}; in strip-grid coordinates that is a start inside
    # the leading half, or an end reaching the trailing half.
    w = _bad_halfwidth(region)
    u0 = (a - 0.25) % 0.5
    bad = (u0 <= w) | (u0 + (b - a) >= 0.5 - w)
    codes = classify_points(((a + b) / 2.0) % 1.0, region)
    labels = np.where(bad, np.int8(0), codes).astype(np.int8)

    cells = 0.5 * (seg.weights[1:] + seg.weights[:-1]) * np.diff(arcs)
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    child_masses = np.diff(np.interp(bounds, arcs, cum)) / cum[-1]
    masses = {
        Region.BAD: float(child_masses[labels == 0].sum()),
        Region.GOOD_PLUS: float(child_masses[labels == 1].sum()),
        Region.GOOD_MINUS: float(child_masses[labels == -1].sum()),
    }
    return AtomSplit(atom=seg, alpha=float(alpha), child_bounds=bounds,
                     labels=labels, child_masses=child_masses, masses=masses,
                     crossings=int(crossings))


# ---------------------------------------------------------------------------
# measured partition statistics


def fit_partition_constants(system, n_values=None,
                            t_values=(50.0, 200.0, 800.0, 3200.0),
                            alpha=0.25, target_length=None, seed=0,
                            r2_floor=0.9):
    """Measured partition statistics in `fit_constants(partition_stats=...)`
    form.

    Grows one atom per grid point along a cross through the largest n and
    the smallest t, splits each atom, and fits the bad-class mass against
    the stated t^-alpha + lambda_u^-n scale; the atom-length bounds apply
    the designed crossing window to measured strip-crossing lengths.
    """
    if n_values is None:
        # An atom splits into about lam_u^n children, so the n range must
        # keep that count in memory; the larger expansion rate in dimension
        # four forces smaller n.
        n_values = (5, 6, 8) if system.dim == 3 else (3, 4, 5)
    ns = sorted(set(int(v) for v in n_values))
    ts = sorted(float(v) for v in t_values)
    n_ref = ns[-1]
    if target_length is None:
        # 27 strip crossings: mid way into the admissible atom window.
        target_length = 27.0 * 0.5 / math.sin(system.theta_u)
    # Small n only tolerates small t: the expanding field roughens as the
    # shear strength outruns the transverse contraction, so the n sweep
    # runs at the gentlest t while the t sweep runs at the largest n.
    pairs = [(n_ref, t) for t in ts]
    pairs += [(n, ts[0]) for n in ns if n != n_ref]

    gen = orbit_generator(seed, 7)
    b_masses, scales, lengths = [], [], []
    for n, t in pairs:
        seg = grow_unstable_segment(system, n, t, gen.random(system.dim),
                                    target_length)
        split = atom_split(system, seg, alpha)
        b_masses.append(split.masses[Region.BAD])
        scales.append(t ** -alpha + system.lam_u ** -n)
        lengths.append(crossing_lengths(seg))

    b_masses = np.asarray(b_masses)
    scales = np.asarray(scales)
    slope, _, r2 = _power_fit(np.log(scales), np.log(b_masses))
    if r2 < r2_floor:
        raise PoorFit(f"bad-mass fit quality r2 = {r2:.3f}")
    delta_l = float(np.max(b_masses / scales))

    ells = np.concatenate(lengths)
    k_lo, k_hi = CROSSING_WINDOW
    return {
        "d_L": ((k_lo - 1) * float(ells.min()), 1.0),
        "D_L": ((k_hi + 1) * float(ells.max()), 1.0),
        "delta_L": (delta_l, r2),
        "delta_L_slope": (float(slope), r2),
    }
