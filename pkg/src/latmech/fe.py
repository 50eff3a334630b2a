"""Periodic beam-frame finite elements and unit-cell homogenization.

Struts are modelled as 3D two-node Euler-Bernoulli frame elements with a
circular cross-section (A = pi r^2, I = pi r^4 / 4, J = pi r^4 / 2; no
shear deformation).  Periodicity is imposed on the fundamental
representation directly: an element along edge (i, j, t) couples the
degrees of freedom of nodes i and j, and the macroscopic strain enters
through the affine jump eps . A t in the element kinematics, which is
equivalent to windowed master-slave constraints without duplicating
nodes.  Displacement jumps follow u_B - u_A = eps (x_B - x_A); rotation
jumps across the boundary are zero.

The homogenized Mandel matrix is filled from the energy bilinear form,
C_ab = 2 Psi(eps_a, eps_b) / det(A), which is symmetric and positive
semi-definite by construction.  Joint overlap at nodes is ignored
(slender-strut assumption).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .lattice import Lattice, WindowedLattice, edge_matrix, relative_density, window
from .tensor4 import ElasticTensor4, MandelMatrix, from_mandel, from_mandel_vector

_PIVOT_REL_TOL = 1e-12


class DisconnectedLatticeError(ValueError):
    """Raised when a node cannot be reached through the periodic edge graph."""

    def __init__(self, name: str, node: int):
        super().__init__(f"lattice {name!r}: node {node} unreachable from node 0")
        self.node = node


class SingularSystemError(ValueError):
    """Raised when the pinned stiffness system still has a null space."""

    def __init__(self, name: str, null_dim: int):
        super().__init__(
            f"lattice {name!r}: singular stiffness beyond rigid-body pinning "
            f"(null-space dimension {null_dim})"
        )
        self.null_dim = null_dim


@dataclass(frozen=True)
class BeamMaterial:
    """Linear elastic strut material (modulus normalized to 1 by default)."""

    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.3

    def __post_init__(self):
        if not self.youngs_modulus > 0.0:
            raise ValueError("Young's modulus must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ValueError("Poisson ratio must lie in (-1, 0.5)")

    @property
    def shear_modulus(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))


@dataclass(frozen=True)
class HomogenizationResult:
    stiffness: ElasticTensor4
    relative_density: float
    dof_count: int
    residual: float


@dataclass(frozen=True)
class BatchItem:
    """One (lattice, radius) outcome; exactly one of result/error is set."""

    name: str
    radius: float
    result: HomogenizationResult | None
    error: str | None
    seconds: float = 0.0


def _local_frame(axis: np.ndarray) -> np.ndarray:
    """Rows are the local (x, y, z) axes; x is the beam axis."""
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    y = np.cross(ref, axis)
    y /= np.linalg.norm(y)
    z = np.cross(axis, y)
    return np.vstack([axis, y, z])


def beam_stiffness(length: float, radius: float, axis, mat: BeamMaterial) -> np.ndarray:
    """12x12 global-frame stiffness of one circular Euler-Bernoulli beam.

    DOF order per node: (ux, uy, uz, rx, ry, rz).  The circular section
    makes the result independent of the choice of transverse axes.
    """
    if not length > 0.0:
        raise ValueError("beam length must be positive")
    if not radius > 0.0:
        raise ValueError("beam radius must be positive")
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ValueError("beam axis must be a unit vector")

    e_mod, g_mod = mat.youngs_modulus, mat.shear_modulus
    area = math.pi * radius**2
    inertia = math.pi * radius**4 / 4.0
    torsion = math.pi * radius**4 / 2.0
    length2, length3 = length**2, length**3

    k = np.zeros((12, 12))
    ea = e_mod * area / length
    gj = g_mod * torsion / length
    b12 = 12.0 * e_mod * inertia / length3
    b6 = 6.0 * e_mod * inertia / length2
    b4 = 4.0 * e_mod * inertia / length
    b2 = 2.0 * e_mod * inertia / length

    k[0, 0] = k[6, 6] = ea
    k[0, 6] = -ea
    k[3, 3] = k[9, 9] = gj
    k[3, 9] = -gj
    # bending in the local x-y plane (v, rz)
    k[1, 1] = k[7, 7] = b12
    k[1, 7] = -b12
    k[1, 5] = k[1, 11] = b6
    k[5, 7] = k[7, 11] = -b6
    k[5, 5] = k[11, 11] = b4
    k[5, 11] = b2
    # bending in the local x-z plane (w, ry); opposite sign on the 6EI terms
    k[2, 2] = k[8, 8] = b12
    k[2, 8] = -b12
    k[2, 4] = k[2, 10] = -b6
    k[4, 8] = k[8, 10] = b6
    k[4, 4] = k[10, 10] = b4
    k[4, 10] = b2

    k = np.triu(k) + np.triu(k, 1).T
    lam = _local_frame(axis)
    t = np.kron(np.eye(4), lam)
    return t.T @ k @ t


def _check_connected(lat: Lattice) -> None:
    parent = list(range(lat.node_count))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, *_ in lat.edges:
        ra, rb = find(int(i)), find(int(j))
        if ra != rb:
            parent[ra] = rb
    root = find(0)
    for node in range(lat.node_count):
        if find(node) != root:
            raise DisconnectedLatticeError(lat.name, node)


def _mandel_unit_strains() -> np.ndarray:
    """(6, 3, 3) strain tensors of the six unit Mandel basis vectors."""
    strains = np.zeros((6, 3, 3))
    for a in range(6):
        v = np.zeros(6)
        v[a] = 1.0
        strains[a] = from_mandel_vector(v)
    return strains


_UNIT_STRAINS = _mandel_unit_strains()


def _solve_pinned(k: np.ndarray, rhs: np.ndarray, name: str):
    """Solve K u = rhs with node-0 translations pinned to zero.

    Returns (u_full, residual).  Raises SingularSystemError when the
    reduced matrix has pivots below the relative tolerance.
    """
    n = k.shape[0]
    free = np.arange(3, n)
    k_red = k[np.ix_(free, free)]
    rhs_red = rhs[free]
    pivot_floor = _PIVOT_REL_TOL * max(np.abs(np.diag(k)).max(), 1e-300)
    try:
        chol = scipy.linalg.cho_factor(k_red, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        chol = None
    if chol is not None and np.min(np.diag(chol[0])) ** 2 <= pivot_floor:
        chol = None
    if chol is None:
        eigvals = np.linalg.eigvalsh(k_red)
        null_dim = int(np.sum(eigvals <= pivot_floor))
        raise SingularSystemError(name, max(null_dim, 1))
    u_red = scipy.linalg.cho_solve(chol, rhs_red, check_finite=False)
    res_norm = np.linalg.norm(k_red @ u_red - rhs_red, axis=0)
    rhs_norm = np.linalg.norm(rhs_red, axis=0)
    residual = float(np.max(res_norm / np.maximum(rhs_norm, 1e-300))) if rhs_red.size else 0.0
    if residual >= 1e-8:
        raise ValueError(
            f"lattice {name!r}: linear solve residual {residual:.3e} exceeds 1e-8"
        )
    u_full = np.zeros_like(rhs)
    u_full[free] = u_red
    return u_full, residual


def homogenize(lat: Lattice, mat: BeamMaterial = BeamMaterial()) -> HomogenizationResult:
    """Macroscopic stiffness tensor of the periodic beam frame.

    Solves the unit-cell problem for the six unit macroscopic strains in
    the Mandel basis and assembles the 6x6 stiffness from cross energies.
    """
    _check_connected(lat)
    density = relative_density(lat)
    if density >= 1.0:
        raise ValueError(
            f"lattice {lat.name!r}: relative density {density:.3f} >= 1 (struts too thick)"
        )

    n_dof = 6 * lat.node_count
    positions = lat.transformed_nodes()
    vectors = edge_matrix(lat)
    volume = float(np.linalg.det(lat.cell))

    k_global = np.zeros((n_dof, n_dof))
    rhs = np.zeros((n_dof, 6))
    elements = []
    for e, (i, j, *t) in enumerate(lat.edges):
        i, j = int(i), int(j)
        vec = vectors[e]
        length = float(np.linalg.norm(vec))
        k_e = beam_stiffness(length, lat.radius, vec / length, mat)
        dofs = np.concatenate([np.arange(6 * i, 6 * i + 6), np.arange(6 * j, 6 * j + 6)])
        # add.at accumulates over the repeated indices of self-edges
        np.add.at(k_global, (dofs[:, None], dofs[None, :]), k_e)
        # Affine end displacements for each unit strain: eps . x at both
        # ends, with the head evaluated at the shifted image position.
        x_tail = positions[i]
        x_head = positions[j] + lat.cell @ np.asarray(t, dtype=float)
        d_aff = np.zeros((12, 6))
        d_aff[0:3] = np.einsum("aij,j->ia", _UNIT_STRAINS, x_tail)
        d_aff[6:9] = np.einsum("aij,j->ia", _UNIT_STRAINS, x_head)
        rhs_e = k_e @ d_aff
        for row, dof in enumerate(dofs):
            rhs[dof] -= rhs_e[row]
        elements.append((dofs, k_e, d_aff))

    u_full, residual = _solve_pinned(k_global, rhs, lat.name)

    c_mandel = np.zeros((6, 6))
    for dofs, k_e, d_aff in elements:
        d_total = d_aff + u_full[dofs]
        c_mandel += d_total.T @ k_e @ d_total
    c_mandel /= volume

    return HomogenizationResult(
        stiffness=from_mandel(MandelMatrix(c_mandel)),
        relative_density=density,
        dof_count=n_dof,
        residual=residual,
    )


def homogenize_windowed(lat: Lattice, mat: BeamMaterial = BeamMaterial()) -> HomogenizationResult:
    """Homogenization through the windowed view with master-slave elimination.

    Slave (image) degrees of freedom are condensed onto their masters with
    the affine offset eps . separation on displacements and zero jump on
    rotations.  Exists to cross-check :func:`homogenize`; both paths agree
    to solver precision.
    """
    win = window(lat)
    return _homogenize_windowed(win, lat, mat)


def _resolve_master(win: WindowedLattice):
    """Map every windowed node to (root master, accumulated separation)."""
    link = {int(s): (int(m), np.asarray(v, dtype=float)) for m, s, v in win.periodic_pairs}
    resolved: dict[int, tuple[int, np.ndarray]] = {}

    def resolve(node: int) -> tuple[int, np.ndarray]:
        if node not in link:
            return node, np.zeros(3)
        if node in resolved:
            return resolved[node]
        master, sep = link[node]
        root, extra = resolve(master)
        resolved[node] = (root, sep + extra)
        return resolved[node]

    return [resolve(k) for k in range(win.nodes.shape[0])]


def _homogenize_windowed(
    win: WindowedLattice, lat: Lattice, mat: BeamMaterial
) -> HomogenizationResult:
    masters = _resolve_master(win)
    master_nodes = sorted({root for root, _sep in masters})
    master_index = {node: k for k, node in enumerate(master_nodes)}
    n_dof = 6 * len(master_nodes)
    volume = float(np.linalg.det(win.cell))

    k_global = np.zeros((n_dof, n_dof))
    rhs = np.zeros((n_dof, 6))
    elements = []
    for tail, head in win.elements:
        vec = win.nodes[head] - win.nodes[tail]
        length = float(np.linalg.norm(vec))
        k_e = beam_stiffness(length, lat.radius, vec / length, mat)
        dofs = []
        d_aff = np.zeros((12, 6))
        for slot, node in enumerate((int(tail), int(head))):
            root, sep = masters[node]
            base = 6 * master_index[root]
            dofs.extend(range(base, base + 6))
            # Total displacement of an image node: master DOFs plus the
            # affine jump across the recorded separation, plus eps . x_master
            # for the macroscopic part carried by every node.
            x_master = win.nodes[root]
            d_aff[6 * slot : 6 * slot + 3] = np.einsum(
                "aij,j->ia", _UNIT_STRAINS, x_master + sep
            )
        dofs = np.asarray(dofs)
        np.add.at(k_global, (dofs[:, None], dofs[None, :]), k_e)
        rhs_e = k_e @ d_aff
        for row, dof in enumerate(dofs):
            rhs[dof] -= rhs_e[row]
        elements.append((dofs, k_e, d_aff))

    u_full, residual = _solve_pinned(k_global, rhs, lat.name)

    c_mandel = np.zeros((6, 6))
    for dofs, k_e, d_aff in elements:
        d_total = d_aff + u_full[dofs]
        c_mandel += d_total.T @ k_e @ d_total
    c_mandel /= volume

    return HomogenizationResult(
        stiffness=from_mandel(MandelMatrix(c_mandel)),
        relative_density=relative_density(lat),
        dof_count=n_dof,
        residual=residual,
    )


def homogenize_batch(
    catalogue,
    radii,
    mat: BeamMaterial = BeamMaterial(),
    threads: int = 1,
) -> list[BatchItem]:
    """Homogenize every (lattice, radius) pair, collecting per-item errors.

    Output order follows the input nesting (lattice-major, then radius);
    failures are reported as ``BatchItem.error`` without aborting the rest.
    """
    jobs = []
    for lat in catalogue:
        for radius in radii:
            jobs.append((lat, float(radius)))

    def run(job) -> BatchItem:
        lat, radius = job
        started = time.perf_counter()
        try:
            variant = replace(lat, radius=radius)
            result = homogenize(variant, mat)
            return BatchItem(lat.name, radius, result, None, time.perf_counter() - started)
        except Exception as exc:  # noqa: BLE001 - error-collection contract
            return BatchItem(lat.name, radius, None, str(exc), time.perf_counter() - started)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]
