"""Evaluation metrics for predicted vs. target stiffness tensors.

Per-lattice component loss operates on the 36 Mandel entries; the
aggregate training-style loss normalizes each pair by the mean-square of
the target entries.  Directional losses probe the tensors along random
unit directions, and the rotation-consistency loss measures how far a
predictor is from commuting with rigid rotations of its input lattice.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import sampling
from .lattice import Lattice, rotate_lattice
from .tensor4 import (
    ElasticTensor4,
    MandelMatrix,
    directional_moduli,
    kelvin_spectrum,
    rotate,
    to_mandel,
)


@dataclass(frozen=True)
class DirectionSet:
    """Deterministic set of unit directions on the sphere."""

    directions: np.ndarray
    seed: int
    n: int = 250

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[1] != 3 or d.shape[0] != self.n:
            raise ValueError("directions must be an (n, 3) array")
        if d.size and np.abs(np.linalg.norm(d, axis=1) - 1.0).max() > 1e-12:
            raise ValueError("directions must be unit length")
        object.__setattr__(self, "directions", d)

    @classmethod
    def sample(cls, n: int = 250, seed: int = 0) -> "DirectionSet":
        return cls(directions=sampling.unit_directions(n, seed), seed=seed, n=n)


@dataclass(frozen=True)
class MetricReport:
    l_comp: float
    l_dir: float
    l_dir_rel: float
    negative_eig_fraction: float
    l_equiv: float | None = None

    def __post_init__(self):
        for name in ("l_comp", "l_dir", "l_dir_rel", "negative_eig_fraction"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.l_equiv is not None and self.l_equiv < 0.0:
            raise ValueError("l_equiv must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "l_comp": self.l_comp,
            "l_dir": self.l_dir,
            "l_dir_rel": self.l_dir_rel,
            "l_equiv": self.l_equiv,
            "negative_eig_fraction": self.negative_eig_fraction,
        }


def _entries(m: MandelMatrix | np.ndarray) -> np.ndarray:
    return m.entries if isinstance(m, MandelMatrix) else np.asarray(m, dtype=float)


def l_comp(pred: MandelMatrix, target: MandelMatrix) -> float:
    """Sum of squared deviations over the 36 Mandel entries (one lattice)."""
    diff = _entries(pred) - _entries(target)
    return float(np.sum(diff * diff))


def target_mean_square(target: MandelMatrix) -> float:
    """Normalizer: mean square of the 36 target entries."""
    t = _entries(target)
    return float(np.sum(t * t) / 36.0)


def aggregate_training_loss(pairs: Sequence[tuple[MandelMatrix, MandelMatrix]]) -> float:
    """Batch-mean of per-lattice component losses, each normalized by the
    target mean square; invariant to jointly rescaling pred and target."""
    if not pairs:
        raise ValueError("needs at least one (pred, target) pair")
    total = 0.0
    for index, (pred, target) in enumerate(pairs):
        gamma = target_mean_square(target)
        if gamma == 0.0:
            raise ValueError(f"pair {index}: zero target stiffness (normalizer undefined)")
        total += l_comp(pred, target) / gamma
    return total / len(pairs)


def _project_directions(components: np.ndarray, directions: np.ndarray) -> np.ndarray:
    d = directions
    return np.einsum("ijkl,qi,qj,qk,ql->q", components, d, d, d, d, optimize=True)


def l_dir(
    pred: ElasticTensor4, target: ElasticTensor4, dirs: DirectionSet
) -> tuple[float, float]:
    """Mean absolute directional-stiffness deviation, raw and target-relative."""
    diff = pred.components - target.components
    values = _project_directions(diff, dirs.directions)
    raw = float(np.mean(np.abs(values)))
    gamma = target_mean_square(to_mandel(target))
    if gamma == 0.0:
        raise ValueError("zero target stiffness (relative directional loss undefined)")
    return raw, raw / np.sqrt(gamma)


def l_equiv(
    predict: Callable[[Lattice], ElasticTensor4],
    lattices: Sequence[Lattice],
    rotations: Sequence[np.ndarray],
    dirs: DirectionSet,
    threads: int = 1,
) -> float:
    """Rotation self-consistency of a predictor, from predictions alone.

    Mean absolute directional projection of
    ``rotate(predict(L), R) - predict(rotate_lattice(L, R))`` over all
    (lattice, rotation, direction) triples.  Predictor calls run in a
    thread pool when the predictor advertises ``concurrency_safe = True``.
    """
    if len(rotations) < 1:
        raise ValueError("needs at least one rotation")
    if not lattices:
        raise ValueError("needs at least one lattice")

    def base_prediction(lat: Lattice) -> ElasticTensor4:
        try:
            return predict(lat)
        except Exception as exc:
            raise RuntimeError(f"predictor failed on lattice {lat.name!r}: {exc}") from exc

    jobs = [(lat, np.asarray(r, dtype=float)) for lat in lattices for r in rotations]

    def rotated_prediction(job):
        lat, r = job
        return base_prediction(rotate_lattice(lat, r))

    base = {id(lat): base_prediction(lat) for lat in lattices}
    parallel = threads > 1 and getattr(predict, "concurrency_safe", False)
    if parallel:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rotated = list(pool.map(rotated_prediction, jobs))
    else:
        rotated = [rotated_prediction(job) for job in jobs]

    total = 0.0
    for (lat, r), pred_of_rotated in zip(jobs, rotated):
        reference = rotate(base[id(lat)], r)
        diff = reference.components - pred_of_rotated.components
        total += float(np.mean(np.abs(_project_directions(diff, dirs.directions))))
    return total / len(jobs)


def negative_eig_fraction(preds: Sequence[ElasticTensor4]) -> float:
    """Fraction of tensors whose smallest Kelvin eigenvalue is strictly negative.

    The threshold is exactly zero; PSD projections keep their eigenvalues
    above the -1e-10 relative floor, so strictness is safe.
    """
    if not preds:
        raise ValueError("needs at least one tensor")
    negative = sum(1 for c in preds if kelvin_spectrum(c).eigenvalues.min() < 0.0)
    return negative / len(preds)


def negative_modulus_penalty(
    c: ElasticTensor4, dirs: DirectionSet, multiplier: float
) -> float:
    """Mean hinge penalty ``k * relu(-c_q)`` on directional stiffness samples."""
    values = directional_moduli(c, dirs.directions)
    return float(multiplier * np.mean(np.maximum(-values, 0.0)))
