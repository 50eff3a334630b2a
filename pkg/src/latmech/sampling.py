"""Seedable random sampling for directions, displacements, and rotations.

All randomness in the package flows through counter-based Philox streams
keyed by ``(seed, domain, index)``, so any draw is reproducible from its
key alone, independent of draw order, platform, and thread count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Domain tags keep the streams for different purposes disjoint even when
# the same user seed is reused across them.
DOMAIN_PERTURBATION = 1
DOMAIN_DIRECTION = 2
DOMAIN_ROTATION = 3


def keyed_generator(seed: int, domain: int, index: int = 0) -> np.random.Generator:
    """Philox generator for stream ``(seed, domain, index)``."""
    if not 0 <= index < (1 << 48):
        raise ValueError(f"stream index {index} out of range")
    key = np.array(
        [seed & _MASK64, ((domain & 0xFFFF) << 48) | index],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def unit_vector(seed: int, index: int, domain: int = DOMAIN_PERTURBATION) -> np.ndarray:
    """One uniformly random unit 3-vector from stream ``(seed, domain, index)``."""
    rng = keyed_generator(seed, domain, index)
    while True:
        v = rng.standard_normal(3)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def unit_directions(n: int, seed: int) -> np.ndarray:
    """``(n, 3)`` array of uniformly random unit vectors (normalized Gaussians)."""
    if n < 0:
        raise ValueError("direction count must be nonnegative")
    rng = keyed_generator(seed, DOMAIN_DIRECTION)
    out = np.empty((n, 3))
    for q in range(n):
        while True:
            v = rng.standard_normal(3)
            norm = np.linalg.norm(v)
            if norm > 1e-12:
                out[q] = v / norm
                break
    return out


def random_rotation(seed: int, index: int = 0) -> np.ndarray:
    """Uniformly random proper rotation (unit-quaternion method)."""
    rng = keyed_generator(seed, DOMAIN_ROTATION, index)
    while True:
        q = rng.standard_normal(4)
        norm = np.linalg.norm(q)
        if norm > 1e-12:
            q /= norm
            break
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_rotations(count: int, seed: int) -> np.ndarray:
    """``(count, 3, 3)`` array of independent uniformly random rotations."""
    return np.array([random_rotation(seed, s) for s in range(count)])


def axis_angle_rotation(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` radians about ``axis`` (Rodrigues formula)."""
    a = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(a)
    if norm < 1e-12:
        raise ValueError("rotation axis must be nonzero")
    a = a / norm
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)
