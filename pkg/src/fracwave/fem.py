"""1-D linear finite elements with a lumped, symmetrically normalized mass.

The semi-discrete model is written without a mass matrix,

    p'' + D p' + c^2 K p = g(t),

so the stiffness is normalized as K = M^(-1/2) K_fem M^(-1/2) with the
lumped mass M.  This keeps K symmetric, which the modal decomposition and
the fractional power both rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidMatrix

BOUNDARY_KINDS = ("fixed", "free")


@dataclass(frozen=True)
class Mesh:
    length: float
    n_elements: int
    node_coords: np.ndarray
    boundary: tuple[str, str]

    @property
    def h(self) -> float:
        return self.length / self.n_elements

    @property
    def n_nodes(self) -> int:
        return self.n_elements + 1


@dataclass(frozen=True)
class AssembledSystem:
    mesh: Mesh
    K: np.ndarray
    free_dofs: np.ndarray
    mass_scaling: np.ndarray

    @property
    def n(self) -> int:
        return len(self.free_dofs)

    def dof_of(self, node_index: int) -> int:
        """Position of a global node in the reduced (free) numbering."""
        hits = np.flatnonzero(self.free_dofs == node_index)
        if node_index < 0 or node_index >= self.mesh.n_nodes:
            raise InvalidArgument(f"node {node_index} outside mesh (0..{self.mesh.n_nodes - 1})")
        if hits.size == 0:
            raise InvalidArgument(f"node {node_index} is a fixed boundary node")
        return int(hits[0])


def build_uniform_mesh(length: float, n_elements: int, boundary=("fixed", "fixed")) -> Mesh:
    if not np.isfinite(length) or length <= 0:
        raise InvalidArgument(f"length must be positive, got {length}")
    if int(n_elements) != n_elements or n_elements < 2:
        raise InvalidArgument(f"n_elements must be an integer >= 2, got {n_elements}")
    boundary = tuple(boundary)
    if len(boundary) != 2 or any(b not in BOUNDARY_KINDS for b in boundary):
        raise InvalidArgument(f"boundary must be a pair from {BOUNDARY_KINDS}, got {boundary}")
    n_elements = int(n_elements)
    h = length / n_elements
    coords = h * np.arange(n_elements + 1, dtype=float)
    coords[-1] = length
    coords.setflags(write=False)
    return Mesh(float(length), n_elements, coords, boundary)


def lumped_mass(mesh: Mesh) -> np.ndarray:
    m = np.full(mesh.n_nodes, mesh.h)
    m[0] = m[-1] = 0.5 * mesh.h
    return m


def assemble(mesh: Mesh) -> AssembledSystem:
    n = mesh.n_nodes
    h = mesh.h
    k_fem = np.zeros((n, n))
    idx = np.arange(mesh.n_elements)
    # element matrix (1/h) [[1, -1], [-1, 1]]
    np.add.at(k_fem, (idx, idx), 1.0 / h)
    np.add.at(k_fem, (idx + 1, idx + 1), 1.0 / h)
    k_fem[idx, idx + 1] = -1.0 / h
    k_fem[idx + 1, idx] = -1.0 / h

    mass = lumped_mass(mesh)
    s = 1.0 / np.sqrt(mass)
    # outer product is exactly symmetric, so K is too
    K_full = k_fem * np.outer(s, s)

    keep = np.ones(n, dtype=bool)
    if mesh.boundary[0] == "fixed":
        keep[0] = False
    if mesh.boundary[1] == "fixed":
        keep[-1] = False
    free = np.flatnonzero(keep)
    K = np.ascontiguousarray(K_full[np.ix_(free, free)])
    for a in (K, free, mass):
        a.setflags(write=False)
    return AssembledSystem(mesh, K, free, mass)


def point_source_vector(system: AssembledSystem, node_index: int) -> np.ndarray:
    """Load vector for a unit point force at ``node_index`` in the normalized system."""
    dof = system.dof_of(node_index)
    g = np.zeros(system.n)
    g[dof] = 1.0 / np.sqrt(system.mass_scaling[node_index])
    return g


def check_spd(A, definiteness_tol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    """Validate a dense symmetric positive-semidefinite matrix and return it as an array.

    Symmetry is checked to 1e-12 relative; the smallest eigenvalue must be
    at least ``-definiteness_tol * lambda_max``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidMatrix(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale > 0 and np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise InvalidMatrix(f"{name} is not symmetric")
    if A.size:
        lam = np.linalg.eigvalsh(A)
        if lam[0] < -definiteness_tol * max(abs(lam[-1]), np.finfo(float).tiny):
            raise InvalidMatrix(
                f"{name} is indefinite: smallest eigenvalue {lam[0]:.3e}, largest {lam[-1]:.3e}"
            )
    return A
