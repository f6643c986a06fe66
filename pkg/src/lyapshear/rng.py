"""Deterministic per-orbit random streams.

Every orbit draws from its own counter-based Philox stream keyed by
(master seed, orbit index), so results do not depend on scheduling order or
on how orbits are grouped into batches.
"""
from __future__ import annotations

import numpy as np

U64 = np.uint64


def orbit_generator(seed, orbit_index):
    """Generator for one orbit; independent of every other orbit's stream."""
    key = np.array([seed, orbit_index], dtype=U64)
    return np.random.Generator(np.random.Philox(key=key))


def initial_points(seed, n_orbits, dim):
    """Uniform starting points, one per orbit, shape (n_orbits, dim)."""
    pts = np.empty((n_orbits, dim))
    for i in range(n_orbits):
        pts[i] = orbit_generator(seed, i).random(dim)
    return pts


def initial_angles(seed, n_orbits, offset=2**32):
    """Uniform projective angles in [0, pi), keyed away from the point streams."""
    out = np.empty(n_orbits)
    for i in range(n_orbits):
        out[i] = orbit_generator(seed, offset + i).random() * np.pi
    return out
