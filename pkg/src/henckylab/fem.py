"""Planar elastostatics by direct energy minimization.

P1 triangles carry a constant deformation gradient, so the discrete
functional is the exact restriction of the continuum energy to
piecewise-affine maps: no quadrature error anywhere. The minimizer search
is a descent loop (gradient, limited-memory secant, or finite-difference
Newton) behind a backtracking line search that rejects any step leaving
the det > 0 domain before evaluating sufficient decrease.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from . import kernels
from .energy import MaterialParams, tangent_fd
from .errors import (
    DomainError,
    InfeasibleState,
    InvalidDimensions,
    NoFeasibleStart,
)

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 60
_LBFGS_MEMORY = 10
_BLEND_ATTEMPTS = 50


class BoundaryTag(Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class SolveMethod(Enum):
    GRADIENT_DESCENT = "gd"
    QUASI_NEWTON = "qn"
    NEWTON_FD = "newton"


@dataclass
class Mesh:
    """Triangulated planar reference domain.

    nodes: (n, 2) coordinates. triangles: (m, 3) node indices, counter-
    clockwise. boundary: one (i, j, tag) entry per boundary edge; together
    they must cover exactly the edges owned by a single triangle.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary: Tuple[Tuple[int, int, BoundaryTag], ...]

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise InvalidDimensions("nodes must be (n, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise InvalidDimensions("triangles must be (m, 3)")
        if not np.isfinite(self.nodes).all():
            raise DomainError("node coordinates must be finite")
        if self.triangles.min(initial=0) < 0 or self.triangles.max(initial=-1) >= len(self.nodes):
            raise DomainError("triangle indices out of range")

        a = self.nodes[self.triangles[:, 0]]
        b = self.nodes[self.triangles[:, 1]]
        c = self.nodes[self.triangles[:, 2]]
        two_area = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
            c[:, 0] - a[:, 0]
        )
        if np.any(two_area <= 0.0):
            worst = int(np.argmin(two_area))
            raise DomainError(f"triangle {worst} has non-positive area")
        self._area = 0.5 * two_area

        # reference shape-function gradients: columns grad N_0, N_1, N_2
        X = np.empty((len(self.triangles), 2, 2))
        X[:, :, 0] = b - a
        X[:, :, 1] = c - a
        self._x_inv = np.linalg.inv(X)
        grad_bc = np.swapaxes(self._x_inv, 1, 2)  # rows of X^-T
        self._grad_n = np.empty((len(self.triangles), 2, 3))
        self._grad_n[:, :, 1] = grad_bc[:, :, 0]
        self._grad_n[:, :, 2] = grad_bc[:, :, 1]
        self._grad_n[:, :, 0] = -grad_bc[:, :, 0] - grad_bc[:, :, 1]

        edge_count: dict = {}
        tri_of_edge: dict = {}
        for t, (i, j, k) in enumerate(self.triangles):
            for e in ((int(i), int(j)), (int(j), int(k)), (int(k), int(i))):
                key = (min(e), max(e))
                edge_count[key] = edge_count.get(key, 0) + 1
                tri_of_edge[key] = t
        hull = {e for e, cnt in edge_count.items() if cnt == 1}
        if any(cnt > 2 for cnt in edge_count.values()):
            raise DomainError("an edge is shared by more than two triangles")
        tagged = []
        for i, j, tag in self.boundary:
            if not isinstance(tag, BoundaryTag):
                raise DomainError(f"boundary tag {tag!r} is not a BoundaryTag")
            tagged.append((min(int(i), int(j)), max(int(i), int(j))))
        if sorted(tagged) != sorted(hull):
            raise DomainError("boundary tags must cover exactly the hull edges")
        self.boundary = tuple(
            (int(i), int(j), tag) for (i, j, tag) in self.boundary
        )
        self._tri_of_edge = tri_of_edge

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def areas(self) -> np.ndarray:
        return self._area

    def total_area(self) -> float:
        return float(self._area.sum())

    def dirichlet_nodes(self) -> np.ndarray:
        """Sorted indices of nodes touching a dirichlet-tagged edge."""
        idx = sorted(
            {i for i, j, tag in self.boundary if tag is BoundaryTag.DIRICHLET}
            | {j for i, j, tag in self.boundary if tag is BoundaryTag.DIRICHLET}
        )
        return np.asarray(idx, dtype=np.int64)

    def diameter(self) -> float:
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(span[0], span[1]))


def make_rect_mesh(nx: int, ny: int, width: float, height: float) -> Mesh:
    """Structured rectangle mesh: each cell split along its up diagonal.

    (nx+1)(ny+1) nodes, 2 nx ny triangles, all boundary edges tagged
    dirichlet until the caller retags them.
    """
    if nx < 1 or ny < 1:
        raise InvalidDimensions("need nx, ny >= 1")
    if not (width > 0.0 and height > 0.0):
        raise InvalidDimensions("need width, height > 0")
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    nodes = np.array([[x, y] for y in ys for x in xs])

    def nid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    boundary = []
    for i in range(nx):
        boundary.append((nid(i, 0), nid(i + 1, 0), BoundaryTag.DIRICHLET))
        boundary.append((nid(i, ny), nid(i + 1, ny), BoundaryTag.DIRICHLET))
    for j in range(ny):
        boundary.append((nid(0, j), nid(0, j + 1), BoundaryTag.DIRICHLET))
        boundary.append((nid(nx, j), nid(nx, j + 1), BoundaryTag.DIRICHLET))
    return Mesh(nodes, np.asarray(tris), tuple(boundary))


def retag_boundary(mesh: Mesh, selector: Callable[[np.ndarray, np.ndarray], BoundaryTag]) -> Mesh:
    """New mesh with each boundary edge retagged by selector(x_i, x_j)."""
    new = tuple(
        (i, j, selector(mesh.nodes[i], mesh.nodes[j])) for i, j, _ in mesh.boundary
    )
    return Mesh(mesh.nodes.copy(), mesh.triangles.copy(), new)


def _check_field(mesh: Mesh, field: np.ndarray) -> np.ndarray:
    field = np.ascontiguousarray(field, dtype=float)
    if field.shape != (mesh.n_nodes, 2):
        raise InvalidDimensions(
            f"field shape {field.shape} does not match mesh ({mesh.n_nodes}, 2)"
        )
    if not np.isfinite(field).all():
        raise DomainError("field entries must be finite")
    return field


def element_gradients(mesh: Mesh, field: np.ndarray) -> np.ndarray:
    """Per-triangle deformation gradient of the piecewise-affine map."""
    field = _check_field(mesh, field)
    a = field[mesh.triangles[:, 0]]
    b = field[mesh.triangles[:, 1]]
    c = field[mesh.triangles[:, 2]]
    Y = np.empty((len(mesh.triangles), 2, 2))
    Y[:, :, 0] = b - a
    Y[:, :, 1] = c - a
    return Y @ mesh._x_inv


def total_energy(mesh: Mesh, field: np.ndarray, params: MaterialParams) -> float:
    """Integral of the exponentiated energy; +inf once any element flips."""
    F = element_gradients(mesh, field)
    W = kernels.energy_eh(F, params.mu, params.kappa, params.k, params.khat, params.m)
    if not np.isfinite(W).all():
        return math.inf
    return float(mesh._area @ W)


def energy_gradient(
    mesh: Mesh, field: np.ndarray, params: MaterialParams, zero_dirichlet: bool = True
) -> np.ndarray:
    """Nodal energy gradient assembled from element stresses.

    Entry p is sum over elements of area * S1 grad N_p; rows of
    dirichlet-tagged nodes are zeroed unless asked otherwise.
    """
    if params.m != 2:
        raise DomainError("stress assembly needs the quadratic volumetric exponent")
    F = element_gradients(mesh, field)
    _, _, det = kernels.log_strain(F)
    if np.any(det <= 0.0):
        raise InfeasibleState("gradient requested at a field with flipped elements")
    S = kernels.piola_2d(F, params.mu, params.kappa, params.k, params.khat)
    contrib = mesh._area[:, None, None] * np.einsum("eij,ejl->eli", S, mesh._grad_n)
    out = np.zeros((mesh.n_nodes, 2))
    np.add.at(out, mesh.triangles.ravel(), contrib.reshape(-1, 2))
    if zero_dirichlet:
        out[mesh.dirichlet_nodes()] = 0.0
    return out


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 200
    gradient_tolerance: Optional[float] = None  # None: 1e-8 (1+|I0|) / diam
    shrink: float = 0.5
    initial_step: float = 1.0
    method: SolveMethod = SolveMethod.QUASI_NEWTON

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if self.gradient_tolerance is not None and not self.gradient_tolerance > 0.0:
            raise DomainError("gradient_tolerance must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise DomainError("shrink factor must lie in (0, 1)")
        if not self.initial_step > 0.0:
            raise DomainError("initial_step must be positive")
        if not isinstance(self.method, SolveMethod):
            raise DomainError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_energy: float
    final_gradient_norm: float
    min_det: float
    converged: bool
    energy_history: Tuple[float, ...]

    def __post_init__(self):
        if any(b > a for a, b in zip(self.energy_history, self.energy_history[1:])):
            raise DomainError("energy history must be nonincreasing")
        if not self.min_det > 0.0:
            raise DomainError("an accepted iterate had a non-positive element det")

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_energy": self.final_energy,
            "final_gradient_norm": self.final_gradient_norm,
            "min_det": self.min_det,
            "converged": self.converged,
            "energy_history": list(self.energy_history),
        }


DirichletData = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


def _dirichlet_values(mesh: Mesh, data: DirichletData, d_nodes: np.ndarray) -> np.ndarray:
    if callable(data):
        vals = np.array([np.asarray(data(x), dtype=float) for x in mesh.nodes[d_nodes]])
    else:
        arr = np.asarray(data, dtype=float)
        if arr.shape != (mesh.n_nodes, 2):
            raise InvalidDimensions(
                "array dirichlet data must be a full (n_nodes, 2) field"
            )
        vals = arr[d_nodes]
    if vals.shape != (len(d_nodes), 2) or not np.isfinite(vals).all():
        raise DomainError("dirichlet data must give finite 2-vectors on the boundary")
    return vals


def _feasible_start(
    mesh: Mesh, d_nodes: np.ndarray, d_vals: np.ndarray, params: MaterialParams
) -> np.ndarray:
    """Affine extension of the boundary data, blended toward identity until
    the energy is finite."""
    ones = np.ones((len(d_nodes), 1))
    design = np.hstack([mesh.nodes[d_nodes], ones])
    coeffs, *_ = np.linalg.lstsq(design, d_vals, rcond=None)
    affine = np.hstack([mesh.nodes, np.ones((mesh.n_nodes, 1))]) @ coeffs

    t = 1.0
    for _ in range(_BLEND_ATTEMPTS):
        start = (1.0 - t) * mesh.nodes + t * affine
        start[d_nodes] = d_vals
        if math.isfinite(total_energy(mesh, start, params)):
            return start
        t *= 0.5
    raise NoFeasibleStart(
        f"no finite-energy start after {_BLEND_ATTEMPTS} blending attempts"
    )


def solve(
    mesh: Mesh,
    dirichlet_data: DirichletData,
    params: Optional[MaterialParams] = None,
    options: Optional[SolveOptions] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """Minimize the discrete energy subject to pinned boundary positions.

    Returns the deformed nodal positions and a report. Every accepted
    iterate keeps all element determinants positive: candidate steps with
    infinite energy are shrunk before the sufficient-decrease test ever
    sees them.
    """
    params = params or MaterialParams()
    options = options or SolveOptions()
    d_nodes = mesh.dirichlet_nodes()
    if len(d_nodes) == 0:
        raise DomainError("a dirichlet solve needs a nonempty dirichlet boundary")
    d_vals = _dirichlet_values(mesh, dirichlet_data, d_nodes)

    field = _feasible_start(mesh, d_nodes, d_vals, params)
    energy = total_energy(mesh, field, params)
    history = [energy]
    min_det = float(np.min(kernels.log_strain(element_gradients(mesh, field))[2]))

    tol = options.gradient_tolerance
    if tol is None:
        tol = 1e-8 * (1.0 + abs(energy)) / mesh.diameter()

    free = np.setdiff1d(np.arange(mesh.n_nodes), d_nodes)
    pairs: List[Tuple[np.ndarray, np.ndarray, float]] = []  # (s, y, rho)
    grad = energy_gradient(mesh, field, params)
    gnorm = float(np.linalg.norm(grad))
    iterations = 0
    converged = gnorm <= tol

    while not converged and iterations < options.max_iterations:
        direction = _descent_direction(mesh, field, grad, params, options, free, pairs)
        slope = float(np.sum(direction * grad))
        if slope >= 0.0:
            pairs.clear()
            direction = -grad
            slope = -gnorm * gnorm

        step = options.initial_step
        accepted = None
        for _ in range(_MAX_BACKTRACKS):
            cand = field + step * direction
            cand_energy = total_energy(mesh, cand, params)
            if not math.isfinite(cand_energy):
                step *= options.shrink  # barrier: shrink, never compare
                continue
            if cand_energy <= energy + _ARMIJO_C1 * step * slope:
                accepted = (cand, cand_energy)
                break
            step *= options.shrink
        if accepted is None:
            break  # the line search stalled at this tolerance

        new_field, new_energy = accepted
        new_grad = energy_gradient(mesh, new_field, params)
        s_vec = (new_field - field).ravel()
        y_vec = (new_grad - grad).ravel()
        curv = float(s_vec @ y_vec)
        if curv > 1e-12 * float(s_vec @ s_vec):
            pairs.append((s_vec, y_vec, 1.0 / curv))
            if len(pairs) > _LBFGS_MEMORY:
                pairs.pop(0)

        field, energy, grad = new_field, new_energy, new_grad
        gnorm = float(np.linalg.norm(grad))
        history.append(energy)
        min_det = min(
            min_det, float(np.min(kernels.log_strain(element_gradients(mesh, field))[2]))
        )
        iterations += 1
        converged = gnorm <= tol

    report = SolveReport(
        iterations=iterations,
        final_energy=energy,
        final_gradient_norm=gnorm,
        min_det=min_det,
        converged=converged,
        energy_history=tuple(history),
    )
    return field, report


def _descent_direction(mesh, field, grad, params, options, free, pairs) -> np.ndarray:
    if options.method is SolveMethod.GRADIENT_DESCENT:
        return -grad
    if options.method is SolveMethod.QUASI_NEWTON:
        if not pairs:
            return -grad
        q = grad.ravel().copy()
        alphas = []
        for s_vec, y_vec, rho in reversed(pairs):
            a = rho * float(s_vec @ q)
            alphas.append(a)
            q -= a * y_vec
        s_last, y_last, _ = pairs[-1]
        gamma = float(s_last @ y_last) / float(y_last @ y_last)
        r = gamma * q
        for (s_vec, y_vec, rho), a in zip(pairs, reversed(alphas)):
            b = rho * float(y_vec @ r)
            r += (a - b) * s_vec
        return -r.reshape(grad.shape)

    # finite-difference Newton with symmetric assembly; gradient fallback
    n = mesh.n_nodes
    K = np.zeros((2 * n, 2 * n))
    F = element_gradients(mesh, field)
    for e, tri in enumerate(mesh.triangles):
        A = tangent_fd(F[e], params)
        G = mesh._grad_n[e]  # (2, 3)
        block = mesh._area[e] * np.einsum("Jp,iJkL,Lq->ipkq", G, A, G)
        for p_loc, p in enumerate(tri):
            for q_loc, q in enumerate(tri):
                K[2 * p : 2 * p + 2, 2 * q : 2 * q + 2] += block[:, p_loc, :, q_loc]
    K = 0.5 * (K + K.T)
    dof = np.stack([2 * free, 2 * free + 1], axis=1).ravel()
    K_ff = K[np.ix_(dof, dof)]
    g_f = grad[free].ravel()
    try:
        L = np.linalg.cholesky(K_ff)
    except np.linalg.LinAlgError:
        return -grad
    d_f = -np.linalg.solve(L.T, np.linalg.solve(L, g_f))
    direction = np.zeros_like(grad)
    direction[free] = d_f.reshape(-1, 2)
    return direction


def neumann_residual(
    mesh: Mesh,
    field: np.ndarray,
    traction: Callable[[np.ndarray, np.ndarray], np.ndarray],
    params: MaterialParams,
) -> float:
    """Max traction defect over neumann edges, ||S1 n - s_hat||.

    traction(midpoint, outward_normal) gives the prescribed vector; normals
    and midpoints live in the reference configuration, matching the stress.
    First-order accurate in mesh size; 0.0 when no edge is tagged neumann.
    """
    if params.m != 2:
        raise DomainError("stress assembly needs the quadratic volumetric exponent")
    field = _check_field(mesh, field)
    edges = [(i, j) for i, j, tag in mesh.boundary if tag is BoundaryTag.NEUMANN]
    if not edges:
        return 0.0
    F = element_gradients(mesh, field)
    S = kernels.piola_2d(F, params.mu, params.kappa, params.k, params.khat)
    worst = 0.0
    for i, j in edges:
        t = mesh._tri_of_edge[(min(i, j), max(i, j))]
        xi, xj = mesh.nodes[i], mesh.nodes[j]
        e = xj - xi
        n_vec = np.array([e[1], -e[0]]) / np.hypot(e[0], e[1])
        third = [v for v in mesh.triangles[t] if v not in (i, j)][0]
        mid = 0.5 * (xi + xj)
        if float(n_vec @ (mesh.nodes[third] - mid)) > 0.0:
            n_vec = -n_vec
        s_hat = np.asarray(traction(mid, n_vec), dtype=float)
        worst = max(worst, float(np.linalg.norm(S[t] @ n_vec - s_hat)))
    return worst
