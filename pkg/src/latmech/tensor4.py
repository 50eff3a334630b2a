"""Fourth-order elasticity tensors and their 6x6 matrix representations.

The stiffness tensor ``C_ijkl`` carries minor (``ij``/``ji``, ``kl``/``lk``)
and major (``ij``/``kl``) index symmetries, leaving 21 independent
components.  This module provides:

* construction and symmetry projection of such tensors,
* the orthonormal Mandel matrix form (slot order 11, 22, 33, 23, 13, 12,
  with sqrt(2) weights on the shear slots) and its exact inverse,
* the conventional Voigt matrix form (kept for comparison; its rotation
  rule is conjugation by a non-orthogonal matrix),
* the 6x6 representation of SO(3) acting on Mandel space,
* rotation in both the Cartesian and Mandel pictures,
* directional stiffness, strain energy, and the Kelvin eigendecomposition.

All values are pure data; every function is side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Mandel/Voigt slot order: 11, 22, 33, 23, 13, 12 (0-based pairs).
SLOT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
_SQRT2 = math.sqrt(2.0)
_WEIGHTS = np.array([1.0, 1.0, 1.0, _SQRT2, _SQRT2, _SQRT2])
# Pairwise weight products with the shear-shear block pinned to exactly 2.
_WEIGHT_PRODUCTS = np.outer(_WEIGHTS, _WEIGHTS)
_WEIGHT_PRODUCTS[3:, 3:] = 2.0
# SLOT_OF[i, j] = Mandel slot of the (i, j) component of a symmetric tensor.
_SLOT_OF = np.array([[0, 5, 4], [5, 1, 3], [4, 3, 2]])
_I6 = np.arange(6)
_PAIR_I = np.array([p[0] for p in SLOT_PAIRS])
_PAIR_J = np.array([p[1] for p in SLOT_PAIRS])

ROTATION_TOL = 1e-10


def _as_square(a, n: int, what: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape != (n, n):
        raise ValueError(f"{what} must be {n}x{n}, got shape {arr.shape}")
    return arr


def rotation_defect(r) -> float:
    """Max of the orthonormality defect ``|R^T R - I|`` and ``|det R - 1|``."""
    r = _as_square(r, 3, "rotation")
    ortho = np.abs(r.T @ r - np.eye(3)).max()
    return max(ortho, abs(np.linalg.det(r) - 1.0))


def check_rotation(r, tol: float = ROTATION_TOL) -> np.ndarray:
    """Validate that ``r`` is a proper rotation; returns it as an array."""
    r = _as_square(r, 3, "rotation")
    defect = rotation_defect(r)
    if not defect <= tol:
        raise ValueError(f"not a proper rotation: orthonormality defect {defect:.3e}")
    return r


@dataclass(frozen=True)
class ElasticTensor4:
    """Fourth-order stiffness tensor with minor and major symmetries."""

    components: np.ndarray

    _SYM_TOL = 1e-8

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.shape != (3, 3, 3, 3):
            raise ValueError(f"stiffness tensor must be 3x3x3x3, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("stiffness tensor has non-finite entries")
        scale = max(np.abs(c).max(), 1e-30)
        for axes in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            defect = np.abs(c - c.transpose(axes)).max() / scale
            if defect > self._SYM_TOL:
                raise ValueError(
                    f"tensor violates index symmetry {axes}: relative defect {defect:.3e}"
                )
        object.__setattr__(self, "components", c)

    @classmethod
    def zero(cls) -> "ElasticTensor4":
        return cls(np.zeros((3, 3, 3, 3)))

    @classmethod
    def isotropic(cls, lam: float, mu: float) -> "ElasticTensor4":
        """C_ijkl = lam d_ij d_kl + mu (d_ik d_jl + d_il d_jk)."""
        eye = np.eye(3)
        c = (
            lam * np.einsum("ij,kl->ijkl", eye, eye)
            + mu * np.einsum("ik,jl->ijkl", eye, eye)
            + mu * np.einsum("il,jk->ijkl", eye, eye)
        )
        return cls(c)


@dataclass(frozen=True)
class MandelMatrix:
    """Symmetric 6x6 stiffness matrix in the orthonormal Mandel basis."""

    entries: np.ndarray

    _SYM_TOL = 1e-10

    def __post_init__(self):
        m = _as_square(self.entries, 6, "Mandel matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("Mandel matrix has non-finite entries")
        scale = max(np.abs(m).max(), 1.0)
        defect = np.abs(m - m.T).max() / scale
        if defect > self._SYM_TOL:
            raise ValueError(f"Mandel matrix not symmetric: relative defect {defect:.3e}")
        object.__setattr__(self, "entries", m)

    def __array__(self, dtype=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class VoigtMatrix:
    """6x6 stiffness matrix in conventional (stress-form) Voigt notation."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_square(self.entries, 6, "Voigt matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("Voigt matrix has non-finite entries")
        object.__setattr__(self, "entries", m)

    def __array__(self, dtype=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class RotationPair:
    """A proper rotation together with its 6x6 Mandel-space representation."""

    r: np.ndarray
    r_mandel: np.ndarray

    _TOL = 1e-12

    def __post_init__(self):
        r = _as_square(self.r, 3, "rotation")
        rm = _as_square(self.r_mandel, 6, "Mandel rotation")
        if rotation_defect(r) > 1e-10:
            raise ValueError("RotationPair.r is not a proper rotation")
        defect = np.abs(rm.T @ rm - np.eye(6)).max()
        if defect > 1e-10:
            raise ValueError(f"Mandel rotation not orthonormal: defect {defect:.3e}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "r_mandel", rm)


@dataclass(frozen=True)
class KelvinSpectrum:
    """Eigenvalues (descending) and orthonormal strain eigentensors of a stiffness."""

    eigenvalues: np.ndarray
    eigentensors: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        e = np.asarray(self.eigentensors, dtype=float)
        if w.shape != (6,) or e.shape != (6, 3, 3):
            raise ValueError("Kelvin spectrum needs 6 eigenvalues and 6 3x3 eigentensors")
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigentensors", e)


def symmetrize(raw) -> ElasticTensor4:
    """Orthogonal projection of a raw 3x3x3x3 array onto the symmetric subspace.

    Averages the 8 index permutations generated by ij<->ji, kl<->lk and
    ij<->kl; idempotent, and the identity on already-symmetric tensors.
    """
    c = np.asarray(raw, dtype=float)
    if c.shape != (3, 3, 3, 3):
        raise ValueError(f"expected a 3x3x3x3 array, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("non-finite entries in raw tensor")
    minor = (
        c
        + c.transpose(1, 0, 2, 3)
        + c.transpose(0, 1, 3, 2)
        + c.transpose(1, 0, 3, 2)
    ) / 4.0
    full = (minor + minor.transpose(2, 3, 0, 1)) / 2.0
    return ElasticTensor4(full)


def to_mandel(c: ElasticTensor4) -> MandelMatrix:
    """6x6 Mandel matrix: sqrt(2) on normal-shear blocks, 2 on shear-shear."""
    comp = c.components
    gathered = comp[
        _PAIR_I[:, None], _PAIR_J[:, None], _PAIR_I[None, :], _PAIR_J[None, :]
    ]
    return MandelMatrix(_WEIGHT_PRODUCTS * gathered)


def from_mandel(m: MandelMatrix | np.ndarray) -> ElasticTensor4:
    """Exact inverse of :func:`to_mandel`."""
    if not isinstance(m, MandelMatrix):
        m = MandelMatrix(m)
    entries = m.entries
    slot_left = _SLOT_OF[:, :, None, None]
    slot_right = _SLOT_OF[None, None, :, :]
    comp = entries[slot_left, slot_right] / _WEIGHT_PRODUCTS[slot_left, slot_right]
    return ElasticTensor4(comp)


def to_voigt(c: ElasticTensor4) -> VoigtMatrix:
    """6x6 Voigt stiffness: raw components, no weight factors."""
    comp = c.components
    gathered = comp[
        _PAIR_I[:, None], _PAIR_J[:, None], _PAIR_I[None, :], _PAIR_J[None, :]
    ]
    return VoigtMatrix(gathered)


def _mandel_rotation_entries(r: np.ndarray) -> np.ndarray:
    rm = np.empty((6, 6))
    for a, (i, j) in enumerate(SLOT_PAIRS):
        for b, (k, l) in enumerate(SLOT_PAIRS):
            term = r[i, k] * r[j, l] + r[i, l] * r[j, k]
            if a < 3 and b < 3:  # squared entries
                rm[a, b] = 0.5 * term
            elif a >= 3 and b >= 3:  # sum-of-products shear block, factor 1
                rm[a, b] = term
            else:  # mixed blocks carry the sqrt(2)
                rm[a, b] = term / _SQRT2
    return rm


def mandel_rotation(r) -> RotationPair:
    """6x6 representation of a rotation on Mandel space.

    Block structure: squared entries in the normal block, sqrt(2)-weighted
    products in the mixed blocks, and sums of products in the shear block.
    The result is orthonormal, so stiffness rotates by plain conjugation.
    """
    r = check_rotation(r)
    return RotationPair(r, _mandel_rotation_entries(r))


def voigt_rotation(r) -> np.ndarray:
    """6x6 stress-side Voigt rotation matrix (not orthonormal).

    Voigt stiffness rotates as ``R_v C_v R_v^T`` with this matrix; because
    ``R_v^T R_v != I`` the rule does not commute with matrix powers.
    """
    r = check_rotation(r)
    rv = np.empty((6, 6))
    for a, (i, j) in enumerate(SLOT_PAIRS):
        for b, (k, l) in enumerate(SLOT_PAIRS):
            rv[a, b] = (r[i, k] * r[j, l] + r[i, l] * r[j, k]) / (1.0 + (k == l))
    return rv


def rotate(c: ElasticTensor4, r) -> ElasticTensor4:
    """Cartesian rotation C'_ijkl = R_ia R_jb R_kc R_ld C_abcd."""
    r = check_rotation(r)
    rotated = np.einsum("ia,jb,kc,ld,abcd->ijkl", r, r, r, r, c.components, optimize=True)
    return ElasticTensor4(rotated)


def rotate_mandel(m: MandelMatrix, rp: RotationPair) -> MandelMatrix:
    """Mandel-space rotation by conjugation with the orthonormal 6x6 matrix."""
    rm = rp.r_mandel
    out = rm @ m.entries @ rm.T
    return MandelMatrix(0.5 * (out + out.T))


def directional_modulus(c: ElasticTensor4, d) -> float:
    """Stiffness along unit direction d: C_ijkl d_i d_j d_k d_l."""
    d = np.asarray(d, dtype=float)
    if d.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    if abs(np.linalg.norm(d) - 1.0) > 1e-10:
        raise ValueError(f"direction must be unit length, |d| = {np.linalg.norm(d):.12g}")
    return float(np.einsum("ijkl,i,j,k,l->", c.components, d, d, d, d))


def directional_moduli(c: ElasticTensor4, directions) -> np.ndarray:
    """Vectorized :func:`directional_modulus` over an ``(n, 3)`` direction array."""
    d = np.asarray(directions, dtype=float)
    if d.ndim != 2 or d.shape[1] != 3:
        raise ValueError("directions must be an (n, 3) array")
    norms = np.linalg.norm(d, axis=1)
    if np.abs(norms - 1.0).max(initial=0.0) > 1e-10:
        raise ValueError("all directions must be unit length")
    return np.einsum("ijkl,qi,qj,qk,ql->q", c.components, d, d, d, d, optimize=True)


def to_mandel_vector(t) -> np.ndarray:
    """Symmetric 3x3 tensor -> 6-vector with sqrt(2)-weighted shear slots."""
    t = _as_square(t, 3, "symmetric tensor")
    return _WEIGHTS * t[_PAIR_I, _PAIR_J]


def from_mandel_vector(v) -> np.ndarray:
    """Inverse of :func:`to_mandel_vector`."""
    v = np.asarray(v, dtype=float)
    if v.shape != (6,):
        raise ValueError("Mandel vector must have 6 entries")
    return (v / _WEIGHTS)[_SLOT_OF]


def strain_energy(c: ElasticTensor4, eps) -> float:
    """Deformation energy 0.5 * eps_ij C_ijkl eps_kl for a symmetric strain."""
    eps = _as_square(eps, 3, "strain")
    scale = max(np.abs(eps).max(), 1e-30)
    if np.abs(eps - eps.T).max() / scale > 1e-10:
        raise ValueError("strain tensor must be symmetric")
    return 0.5 * float(np.einsum("ij,ijkl,kl->", eps, c.components, eps))


def kelvin_spectrum(c: ElasticTensor4) -> KelvinSpectrum:
    """Eigenvalues and strain eigentensors of the stiffness.

    The six eigenvalues are those of the Mandel matrix; each eigenvector is
    rearranged back into a symmetric 3x3 strain tensor (shear slots divided
    by sqrt(2)), giving pairwise orthonormal eigentensors under double
    contraction and the reconstruction C = sum_i lambda_i E_i (x) E_i.
    """
    m = to_mandel(c).entries
    eigvals, eigvecs = np.linalg.eigh(m)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    tensors = np.array([from_mandel_vector(eigvecs[:, k]) for k in order])
    return KelvinSpectrum(eigvals, tensors)
