"""Gradient-based design of nodal positions toward a target stiffness.

The objective is the component loss between the homogenized and target
Mandel matrices.  Gradients come from central finite differences of the
full homogenization (this toolkit has no automatic differentiation), and
the descent loop defaults to backtracking so the objective history is
nonincreasing; a plain fixed-step mode is available.  Nodes move in
transformed coordinates with the cell held fixed, and any step that would
collapse a strut below the minimum length is rejected and halved.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fe import BeamMaterial, homogenize
from .lattice import Lattice, displace_nodes, edge_lengths
from .metrics import l_comp
from .tensor4 import ElasticTensor4, to_mandel

MIN_EDGE_LENGTH = 1e-3
GRADIENT_STOP = 1e-8
MAX_HALVINGS = 20
# Found on the tessellated simple-cubic demo: large because the component
# loss of slender lattices is O(rho^2) while coordinates are O(1).
DEFAULT_STEP_SIZE = 3.0e3
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class DesignProblem:
    base: Lattice
    target: ElasticTensor4
    free_nodes: tuple = ()
    step_size: float = DEFAULT_STEP_SIZE
    max_steps: int = 50
    fd_step: float = DEFAULT_FD_STEP
    backtracking: bool = True

    def __post_init__(self):
        free = tuple(int(k) for k in self.free_nodes) or tuple(range(self.base.node_count))
        if any(not 0 <= k < self.base.node_count for k in free):
            raise ValueError("free_nodes contains an index outside the lattice")
        if len(set(free)) != len(free):
            raise ValueError("free_nodes contains duplicates")
        if not self.step_size > 0.0:
            raise ValueError("step_size must be positive")
        if not self.fd_step > 0.0:
            raise ValueError("fd_step must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")
        object.__setattr__(self, "free_nodes", free)


@dataclass(frozen=True)
class DesignTrace:
    objective_history: list[float]
    final_lattice: Lattice
    final_stiffness: ElasticTensor4


def objective(lat: Lattice, target: ElasticTensor4, mat: BeamMaterial = BeamMaterial()) -> float:
    """Component loss between the homogenized and target Mandel matrices."""
    return l_comp(to_mandel(homogenize(lat, mat).stiffness), to_mandel(target))


def _displace_one(lat: Lattice, node: int, delta: np.ndarray) -> Lattice:
    deltas = np.zeros((lat.node_count, 3))
    deltas[node] = delta
    return displace_nodes(lat, deltas)


def fd_gradient(
    lat: Lattice,
    target: ElasticTensor4,
    free_nodes,
    fd_step: float,
    mat: BeamMaterial = BeamMaterial(),
    threads: int = 1,
) -> dict[int, np.ndarray]:
    """Central-difference gradient of :func:`objective` per free node.

    Returns a transformed-coordinate 3-vector for each index in
    ``free_nodes``; other nodes are absent from the output.
    """
    if not fd_step > 0.0:
        raise ValueError("fd_step must be positive")
    free = [int(k) for k in free_nodes]

    probes = []
    for node in free:
        for axis in range(3):
            delta = np.zeros(3)
            delta[axis] = fd_step
            probes.append((node, delta))
            probes.append((node, -delta))

    def evaluate(probe) -> float:
        node, delta = probe
        return objective(_displace_one(lat, node, delta), target, mat)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(evaluate, probes))
    else:
        values = [evaluate(p) for p in probes]

    grad: dict[int, np.ndarray] = {}
    for slot, node in enumerate(free):
        g = np.empty(3)
        for axis in range(3):
            plus = values[6 * slot + 2 * axis]
            minus = values[6 * slot + 2 * axis + 1]
            g[axis] = (plus - minus) / (2.0 * fd_step)
        grad[node] = g
    return grad


def _gradient_array(lat: Lattice, grad: dict[int, np.ndarray]) -> np.ndarray:
    full = np.zeros((lat.node_count, 3))
    for node, g in grad.items():
        full[node] = g
    return full


def solve(
    prob: DesignProblem, mat: BeamMaterial = BeamMaterial(), threads: int = 1
) -> DesignTrace:
    """Run the descent loop and re-verify the final stiffness by a fresh solve.

    Stops at ``max_steps`` or when the gradient norm falls below 1e-8.
    With backtracking enabled, a step that would increase the objective
    (or collapse a strut) halves the step size, up to 20 times; if no
    acceptable step remains the loop terminates.
    """
    lat = prob.base
    current = objective(lat, prob.target, mat)
    history = [current]

    for _ in range(prob.max_steps):
        grad = fd_gradient(lat, prob.target, prob.free_nodes, prob.fd_step, mat, threads)
        direction = -_gradient_array(lat, grad)
        grad_norm = float(np.linalg.norm(direction))
        if grad_norm < GRADIENT_STOP:
            break

        step = prob.step_size
        accepted = None
        for _halving in range(MAX_HALVINGS + 1):
            candidate = displace_nodes(lat, step * direction)
            if edge_lengths(candidate).min(initial=np.inf) < MIN_EDGE_LENGTH:
                step *= 0.5
                continue
            value = objective(candidate, prob.target, mat)
            if prob.backtracking and value > current:
                step *= 0.5
                continue
            accepted = (candidate, value)
            break
        if accepted is None:
            break
        lat, current = accepted
        history.append(current)

    final = homogenize(lat, mat)
    return DesignTrace(
        objective_history=history,
        final_lattice=lat,
        final_stiffness=final.stiffness,
    )
