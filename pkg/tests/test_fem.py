"""Triangulated planar elastostatics: meshes, assembly, descent solvers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import henckylab as hl
from henckylab.errors import (
    DomainError,
    InfeasibleState,
    InvalidDimensions,
    NoFeasibleStart,
)

P0 = hl.MaterialParams()


def _warp(x):
    # non-affine boundary data: radial swell plus a transverse wiggle
    r2 = x[0] * x[0] + x[1] * x[1]
    return np.array([x[0] * (1.0 + 0.15 * r2), x[1] + 0.1 * np.sin(2.0 * x[0])])


# ---------------------------------------------------------------------------
# meshes


def test_rect_mesh_unit():
    mesh = hl.make_rect_mesh(1, 1, 1.0, 1.0)
    assert mesh.n_nodes == 4
    assert len(mesh.triangles) == 2
    assert mesh.total_area() == pytest.approx(1.0, abs=1e-12)
    assert len(mesh.boundary) == 4


def test_rect_mesh_counts():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    assert mesh.n_nodes == 9
    assert len(mesh.triangles) == 8


@given(
    nx=st.integers(1, 6),
    ny=st.integers(1, 6),
    w=st.floats(0.1, 50.0),
    h=st.floats(0.1, 50.0),
)
@settings(deadline=None, max_examples=40)
def test_rect_mesh_area_partition(nx, ny, w, h):
    mesh = hl.make_rect_mesh(nx, ny, w, h)
    assert len(mesh.triangles) == 2 * nx * ny
    assert mesh.total_area() == pytest.approx(w * h, rel=1e-12)
    assert np.all(mesh.areas > 0.0)


def test_rect_mesh_rejects_bad_args():
    with pytest.raises(InvalidDimensions):
        hl.make_rect_mesh(0, 1, 1.0, 1.0)
    with pytest.raises(InvalidDimensions):
        hl.make_rect_mesh(1, 1, -1.0, 1.0)


def test_mesh_validation():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tags = lambda: ((0, 1, hl.BoundaryTag.DIRICHLET), (1, 2, hl.BoundaryTag.DIRICHLET), (2, 0, hl.BoundaryTag.DIRICHLET))
    with pytest.raises(DomainError):  # clockwise orientation
        hl.Mesh(nodes, np.array([[0, 2, 1]]), tags())
    with pytest.raises(DomainError):  # missing one hull edge
        hl.Mesh(nodes, np.array([[0, 1, 2]]), tags()[:2])
    with pytest.raises(DomainError):  # index out of range
        hl.Mesh(nodes, np.array([[0, 1, 3]]), tags())
    with pytest.raises(DomainError):  # tag is not the enum
        hl.Mesh(nodes, np.array([[0, 1, 2]]), ((0, 1, "dirichlet"),) + tags()[1:])
    ok = hl.Mesh(nodes, np.array([[0, 1, 2]]), tags())
    assert ok.total_area() == pytest.approx(0.5)
    assert list(ok.dirichlet_nodes()) == [0, 1, 2]


def test_retag_boundary():
    mesh = hl.make_rect_mesh(3, 3, 1.0, 1.0)
    mesh = hl.retag_boundary(
        mesh,
        lambda xi, xj: hl.BoundaryTag.NEUMANN
        if xi[0] > 0.999 and xj[0] > 0.999
        else hl.BoundaryTag.DIRICHLET,
    )
    neumann = [e for e in mesh.boundary if e[2] is hl.BoundaryTag.NEUMANN]
    assert len(neumann) == 3
    d = set(mesh.dirichlet_nodes())
    assert 7 not in d and 11 not in d  # interior right-edge nodes released
    assert 3 in d and 15 in d  # corners still held by bottom/top edges


# ---------------------------------------------------------------------------
# energy and gradient assembly


def test_identity_energy_is_rest_energy():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    assert hl.total_energy(mesh, mesh.nodes, P0) == pytest.approx(
        P0.rest_energy, rel=1e-14
    )


def test_flipped_element_energy_infinite():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    field = mesh.nodes.copy()
    field[4] = [10.0, 10.0]  # drag the center node far past the far corner
    assert math.isinf(hl.total_energy(mesh, field, P0))


def test_affine_energy_matches_pointwise():
    A = np.array([[1.2, 0.0], [0.0, 1.0]])
    for nx, ny, w, h in ((2, 2, 1.0, 1.0), (5, 3, 2.0, 0.5)):
        mesh = hl.make_rect_mesh(nx, ny, w, h)
        want = mesh.total_area() * hl.energy_eH(A, P0)
        assert hl.total_energy(mesh, mesh.nodes @ A.T, P0) == pytest.approx(
            want, rel=1e-12
        )


@given(
    a11=st.floats(0.7, 1.5),
    a22=st.floats(0.7, 1.5),
    a12=st.floats(-0.3, 0.3),
)
@settings(deadline=None, max_examples=30)
def test_affine_energy_property(a11, a22, a12):
    A = np.array([[a11, a12], [0.0, a22]])
    mesh = hl.make_rect_mesh(3, 2, 1.0, 1.0)
    want = mesh.total_area() * hl.energy_eH(A, P0)
    assert hl.total_energy(mesh, mesh.nodes @ A.T, P0) == pytest.approx(want, rel=1e-11)


def test_field_shape_is_checked():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    with pytest.raises(InvalidDimensions):
        hl.total_energy(mesh, mesh.nodes[:-1], P0)
    with pytest.raises(DomainError):
        bad = mesh.nodes.copy()
        bad[0, 0] = math.nan
        hl.total_energy(mesh, bad, P0)


def test_identity_gradient_is_exactly_zero():
    # power-of-two spacing keeps F = I exact, so the stress is exactly zero
    mesh = hl.make_rect_mesh(4, 4, 1.0, 1.0)
    g = hl.energy_gradient(mesh, mesh.nodes, P0, zero_dirichlet=False)
    assert np.all(g == 0.0)
    odd = hl.make_rect_mesh(3, 3, 1.0, 1.0)
    g = hl.energy_gradient(odd, odd.nodes, P0, zero_dirichlet=False)
    assert np.abs(g).max() < 1e-14  # spacing 1/3 rounds, stress stays at eps


def test_gradient_matches_directional_fd():
    rng = np.random.default_rng(7)
    mesh = hl.make_rect_mesh(4, 4, 1.0, 1.0)
    A = np.array([[1.15, 0.05], [0.0, 0.9]])
    field = mesh.nodes @ A.T + 0.01 * rng.standard_normal((mesh.n_nodes, 2))
    assert math.isfinite(hl.total_energy(mesh, field, P0))
    g = hl.energy_gradient(mesh, field, P0, zero_dirichlet=False)
    h = 1e-6
    for _ in range(20):
        d = rng.standard_normal((mesh.n_nodes, 2))
        fd = (
            hl.total_energy(mesh, field + h * d, P0)
            - hl.total_energy(mesh, field - h * d, P0)
        ) / (2.0 * h)
        assert float(np.sum(g * d)) == pytest.approx(fd, rel=1e-6)


def test_dilation_center_gradient_vanishes():
    # constant stress assembles to zero at every interior node
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    g = hl.energy_gradient(mesh, 1.1 * mesh.nodes, P0, zero_dirichlet=False)
    assert np.linalg.norm(g[4]) < 1e-13


def test_gradient_zeroes_dirichlet_rows():
    mesh = hl.make_rect_mesh(3, 3, 1.0, 1.0)
    field = 1.1 * mesh.nodes
    g = hl.energy_gradient(mesh, field, P0)
    assert np.all(g[mesh.dirichlet_nodes()] == 0.0)


def test_gradient_refuses_flipped_field():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    field = mesh.nodes.copy()
    field[4] = [10.0, 10.0]
    with pytest.raises(InfeasibleState):
        hl.energy_gradient(mesh, field, P0)


def test_stress_route_needs_quadratic_exponent():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    with pytest.raises(DomainError):
        hl.energy_gradient(mesh, mesh.nodes, hl.MaterialParams(m=4))


# ---------------------------------------------------------------------------
# solver


def test_identity_data_exits_at_reference():
    mesh = hl.make_rect_mesh(4, 4, 1.0, 1.0)
    field, report = hl.solve(mesh, lambda x: x, P0)
    assert report.converged
    assert report.iterations <= 1
    assert report.final_energy == pytest.approx(P0.rest_energy, rel=1e-13)
    assert np.abs(field - mesh.nodes).max() < 1e-12


def test_affine_data_recovers_homogeneous_state():
    A = np.array([[1.2, 0.0], [0.0, 1.0]])
    mesh = hl.make_rect_mesh(16, 16, 1.0, 1.0)
    field, report = hl.solve(mesh, lambda x: A @ x, P0)
    assert report.converged
    assert report.min_det > 0.0
    assert np.abs(field - mesh.nodes @ A.T).max() <= 1e-6
    cap = mesh.total_area() * hl.energy_eH(A, P0)
    assert report.final_energy <= cap * (1.0 + 1e-8)


def test_shear_solve_regression():
    S = np.array([[1.0, 0.3], [0.0, 1.0]])
    mesh = hl.make_rect_mesh(8, 8, 1.0, 1.0)
    field, report = hl.solve(mesh, lambda x: S @ x, P0)
    assert report.converged
    assert report.min_det > 0.9
    assert report.final_gradient_norm <= 1e-8 * (1.0 + report.final_energy) / mesh.diameter()
    assert report.final_energy == pytest.approx(7.045000664682952, rel=1e-12)


def test_dirichlet_nodes_pinned_exactly():
    mesh = hl.make_rect_mesh(5, 5, 1.0, 1.0)
    field, _ = hl.solve(mesh, _warp, P0)
    d = mesh.dirichlet_nodes()
    want = np.array([_warp(x) for x in mesh.nodes[d]])
    assert np.all(field[d] == want)


def test_array_dirichlet_data():
    mesh = hl.make_rect_mesh(4, 4, 1.0, 1.0)
    data = 1.05 * mesh.nodes
    field, report = hl.solve(mesh, data, P0)
    assert report.converged
    assert np.abs(field - data).max() < 1e-10  # affine, exactly representable
    with pytest.raises(InvalidDimensions):
        hl.solve(mesh, data[:-1], P0)


def test_all_methods_reach_the_same_minimum():
    mesh = hl.make_rect_mesh(4, 4, 1.0, 1.0)
    energies = {}
    for method in hl.SolveMethod:
        _, report = hl.solve(
            mesh, _warp, P0, hl.SolveOptions(method=method, max_iterations=2000)
        )
        assert report.converged, method
        assert report.min_det > 0.0
        energies[method] = report.final_energy
    values = list(energies.values())
    assert max(values) - min(values) < 1e-10 * (1.0 + abs(values[0]))


def test_energy_history_monotone_and_consistent():
    mesh = hl.make_rect_mesh(6, 6, 1.0, 1.0)
    _, report = hl.solve(mesh, _warp, P0)
    assert report.converged
    hist = report.energy_history
    assert len(hist) == report.iterations + 1
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert hist[-1] == report.final_energy


def test_translation_invariance():
    mesh = hl.make_rect_mesh(5, 5, 1.0, 1.0)
    c = np.array([0.7, -0.3])
    f1, _ = hl.solve(mesh, _warp, P0)
    f2, _ = hl.solve(mesh, lambda x: _warp(x) + c, P0)
    assert np.abs(f2 - (f1 + c)).max() <= 1e-10


def test_frame_invariance():
    mesh = hl.make_rect_mesh(5, 5, 1.0, 1.0)
    th = 0.4
    Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    opts = hl.SolveOptions(gradient_tolerance=1e-10, max_iterations=3000)
    f1, r1 = hl.solve(mesh, _warp, P0, opts)
    f2, r2 = hl.solve(mesh, lambda x: Q @ _warp(x), P0, opts)
    assert r1.converged and r2.converged
    assert np.abs(f2 - f1 @ Q.T).max() <= 1e-8


def test_refinement_keeps_affine_solution_exact():
    A = np.array([[1.2, 0.0], [0.0, 1.0]])
    for n in (2, 4, 8):
        mesh = hl.make_rect_mesh(n, n, 1.0, 1.0)
        field, report = hl.solve(mesh, lambda x: A @ x, P0)
        assert report.converged
        assert np.abs(field - mesh.nodes @ A.T).max() <= 1e-9


def test_h_convergence_on_nonaffine_problem():
    # nested refinements: the finer minimum can only be lower
    opts = hl.SolveOptions(gradient_tolerance=1e-11, max_iterations=5000)
    energies = []
    for n in (4, 8, 16):
        mesh = hl.make_rect_mesh(n, n, 1.0, 1.0)
        _, report = hl.solve(mesh, _warp, P0, opts)
        assert report.converged
        energies.append(report.final_energy)
    assert energies[0] >= energies[1] >= energies[2]
    assert energies[0] > energies[2] + 1e-4  # genuinely non-affine data


def test_no_feasible_start():
    # reflection data on a mesh whose nodes are all pinned
    R = np.array([[-1.0, 0.0], [0.0, 1.0]])
    mesh = hl.make_rect_mesh(1, 1, 1.0, 1.0)
    with pytest.raises(NoFeasibleStart):
        hl.solve(mesh, lambda x: R @ x, P0)


def test_solve_needs_a_dirichlet_boundary():
    mesh = hl.make_rect_mesh(2, 2, 1.0, 1.0)
    mesh = hl.retag_boundary(mesh, lambda xi, xj: hl.BoundaryTag.NEUMANN)
    with pytest.raises(DomainError):
        hl.solve(mesh, lambda x: x, P0)


def test_solve_options_validation():
    with pytest.raises(DomainError):
        hl.SolveOptions(max_iterations=0)
    with pytest.raises(DomainError):
        hl.SolveOptions(gradient_tolerance=0.0)
    with pytest.raises(DomainError):
        hl.SolveOptions(shrink=1.0)
    with pytest.raises(DomainError):
        hl.SolveOptions(initial_step=0.0)
    with pytest.raises(DomainError):
        hl.SolveOptions(method="qn")


def test_report_validation():
    with pytest.raises(DomainError):
        hl.SolveReport(1, 7.0, 0.0, 1.0, True, (6.0, 7.0))
    with pytest.raises(DomainError):
        hl.SolveReport(1, 7.0, 0.0, 0.0, True, (8.0, 7.0))


# ---------------------------------------------------------------------------
# neumann residual


def _right_edge_neumann(n):
    mesh = hl.make_rect_mesh(n, n, 1.0, 1.0)
    return hl.retag_boundary(
        mesh,
        lambda xi, xj: hl.BoundaryTag.NEUMANN
        if xi[0] > 0.999 and xj[0] > 0.999
        else hl.BoundaryTag.DIRICHLET,
    )


def test_neumann_residual_vacuous():
    mesh = hl.make_rect_mesh(3, 3, 1.0, 1.0)
    assert hl.neumann_residual(mesh, 1.1 * mesh.nodes, lambda m, n: np.zeros(2), P0) == 0.0


def test_neumann_residual_consistent_traction():
    A = np.array([[1.2, 0.0], [0.0, 1.0]])
    mesh = _right_edge_neumann(3)
    SA = hl.piola_stress(A, P0)
    res = hl.neumann_residual(mesh, mesh.nodes @ A.T, lambda mid, n: SA @ n, P0)
    assert res <= 1e-8


def test_neumann_residual_flags_inconsistency():
    A = np.array([[1.2, 0.0], [0.0, 1.0]])
    mesh = _right_edge_neumann(3)
    SA = hl.piola_stress(A, P0)
    res = hl.neumann_residual(mesh, mesh.nodes @ A.T, lambda mid, n: np.zeros(2), P0)
    assert res == pytest.approx(np.linalg.norm(SA @ [1.0, 0.0]), rel=1e-10)
    assert res > 0.01
