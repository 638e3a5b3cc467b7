"""Assembly exactness, boundary handling, projections and sparse solvers."""

import math

import numpy as np
import pytest
import scipy.sparse as sp

import sectorfem as sf
from sectorfem import fem
from sectorfem.mesh import EDGE_ARC, EDGE_THETA0, EDGE_THETA_MAX, Mesh, triangle_areas

BETA = 2.0 / 3.0


def single_triangle(p0, p1, p2):
    verts = np.array([p0, p1, p2], dtype=float)
    return Mesh(verts, np.array([[0, 1, 2]]),
                ((0, 1, EDGE_THETA0), (1, 2, EDGE_ARC), (2, 0, EDGE_THETA_MAX)),
                BETA, 1.0, 0.5)


def test_mass_block_single_triangle():
    msh = single_triangle((0.2, 0.1), (1.1, 0.3), (0.4, 0.9))
    area = triangle_areas(msh)[0]
    M = fem.assemble_mass(msh, fem.unconstrained_dofmap(msh)).toarray()
    expect = area / 12.0 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]], dtype=float)
    assert np.max(np.abs(M - expect)) < 1e-14
    assert np.allclose(np.diag(M), area / 6.0)


def test_stiffness_block_reference_triangle():
    msh = single_triangle((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
    S = fem.assemble_stiffness(msh, fem.unconstrained_dofmap(msh), 1.0).toarray()
    expect = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert np.max(np.abs(S - expect)) < 1e-14


def test_stiffness_rejects_nonpositive_K(mesh_cache):
    msh = mesh_cache(2 ** -3, 1.0)
    with pytest.raises(ValueError):
        fem.assemble_stiffness(msh, fem.unconstrained_dofmap(msh), 0.0)


def test_mass_row_sums_equal_area(mesh_cache):
    msh = mesh_cache(2 ** -4, 1.5)
    M = fem.assemble_mass(msh, fem.unconstrained_dofmap(msh))
    assert M.sum() == pytest.approx(triangle_areas(msh).sum(), rel=1e-12)


def test_mass_symmetric_positive_diagonal(mesh_cache):
    msh = mesh_cache(2 ** -4, 3.0)
    M = fem.assemble_mass(msh, sf.build_dofmap(msh, fem.DIRICHLET))
    assert abs(M - M.T).max() < 1e-15
    assert np.all(M.diagonal() > 0)


def test_stiffness_annihilates_constants(mesh_cache):
    msh = mesh_cache(2 ** -4, 1.5)
    S = fem.assemble_stiffness(msh, fem.unconstrained_dofmap(msh), 2.7)
    assert np.max(np.abs(S @ np.ones(msh.n_vertices))) < 1e-12


def test_dofmap_dirichlet_constrains_all_boundary(mesh_cache):
    msh = mesh_cache(2 ** -4, 1.5)
    dm = sf.build_dofmap(msh, fem.DIRICHLET)
    boundary = {v for i, j, _ in msh.boundary_edges for v in (i, j)}
    assert all(dm.vertex_to_dof[v] == -1 for v in boundary)
    assert dm.n_dofs == msh.n_vertices - len(boundary)


def test_dofmap_mixed_frees_theta_max_interior(mesh_cache):
    msh = mesh_cache(2 ** -4, 1.5)
    dm = sf.build_dofmap(msh, fem.MIXED)
    constrained = {v for i, j, tag in msh.boundary_edges
                   if tag in (EDGE_THETA0, EDGE_ARC) for v in (i, j)}
    neumann_only = {v for i, j, tag in msh.boundary_edges if tag == EDGE_THETA_MAX
                    for v in (i, j)} - constrained
    assert neumann_only, "theta_max edge should contribute free vertices"
    assert all(dm.vertex_to_dof[v] >= 0 for v in neumann_only)
    assert all(dm.vertex_to_dof[v] == -1 for v in constrained)


def test_load_constant_field_sums_to_area(mesh_cache):
    msh = mesh_cache(2 ** -4, 3.0)
    b = fem.assemble_load(msh, fem.unconstrained_dofmap(msh), lambda x, y: np.ones_like(x))
    assert b.sum() == pytest.approx(triangle_areas(msh).sum(), rel=1e-12)


def test_load_of_basis_function_is_mass_column(mesh_cache):
    msh = mesh_cache(2 ** -3, 1.0)
    dm = fem.unconstrained_dofmap(msh)
    M = fem.assemble_mass(msh, dm)
    k = msh.n_vertices // 2
    xk, yk = msh.vertices[k]

    nodal = np.zeros(msh.n_vertices)
    nodal[k] = 1.0
    coords = msh.vertices[msh.triangles]

    def hat(x, y):
        # evaluate the P1 hat function by solving barycentric coordinates
        out = np.zeros_like(x)
        for e, tri in enumerate(msh.triangles):
            if k not in tri:
                continue
            p = coords[e]
            T = np.array([[p[1, 0] - p[0, 0], p[2, 0] - p[0, 0]],
                          [p[1, 1] - p[0, 1], p[2, 1] - p[0, 1]]])
            loc = np.linalg.solve(T, np.stack([x.ravel() - p[0, 0], y.ravel() - p[0, 1]]))
            lam = np.stack([1 - loc[0] - loc[1], loc[0], loc[1]])
            inside = np.all(lam > -1e-12, axis=0)
            vals = (nodal[tri][:, None] * lam).sum(axis=0)
            flat = out.ravel()
            flat[inside] = vals[inside]
        return out

    b = fem.assemble_load(msh, dm, hat, quad_degree=2)
    col = np.asarray(M[:, [k]].todense()).ravel()
    assert np.max(np.abs(b - col)) < 1e-13


def test_load_singular_field_finite_and_quadrature_converged(mesh_cache):
    msh = mesh_cache(2 ** -4, 1.0)
    dm = sf.build_dofmap(msh, fem.DIRICHLET)
    f = sf.elliptic_singular().f
    b4 = fem.assemble_load(msh, dm, f, 4)
    b6 = fem.assemble_load(msh, dm, f, 6)
    assert np.all(np.isfinite(b4))
    assert np.linalg.norm(b6 - b4) / np.linalg.norm(b6) < 1e-3


def test_load_rejects_nonfinite_field(mesh_cache):
    msh = mesh_cache(2 ** -3, 1.0)
    dm = fem.unconstrained_dofmap(msh)
    with np.errstate(divide="ignore", invalid="ignore"), \
            pytest.raises(ValueError, match="non-finite"):
        fem.assemble_load(msh, dm, lambda x, y: x / (y - y))


def test_load_rejects_bad_degree(mesh_cache):
    msh = mesh_cache(2 ** -3, 1.0)
    with pytest.raises(ValueError):
        fem.assemble_load(msh, fem.unconstrained_dofmap(msh),
                          lambda x, y: x, quad_degree=8)


def test_project_basis_function_is_unit_vector(mesh_cache):
    # projecting a function already in the FE space returns its coefficients:
    # M x = M e_k  ->  x = e_k
    msh = mesh_cache(2 ** -3, 1.0)
    dm = fem.unconstrained_dofmap(msh)
    k = msh.n_vertices // 3
    M = fem.assemble_mass(msh, dm)
    rhs = np.asarray(M[:, [k]].todense()).ravel()
    x = fem.solve_real_spd(M, rhs)
    e = np.zeros(msh.n_vertices)
    e[k] = 1.0
    assert np.max(np.abs(x - e)) < 1e-9


def test_project_reproduces_linear_functions(mesh_cache):
    msh = mesh_cache(2 ** -4, 1.5)
    dm = fem.unconstrained_dofmap(msh)

    def lin(x, y):
        return 1.0 + 2.0 * x - 3.0 * y

    x = fem.l2_project(msh, dm, lin)
    assert np.max(np.abs(x - lin(*msh.vertices.T))) < 1e-10


def test_projection_contracts_norm(mesh_cache, assembled_cache):
    msh, dm, M, _ = assembled_cache(2 ** -4, 3.0, fem.MIXED, 1.0)
    u0 = sf.example2(0.5).u0
    x = fem.l2_project(msh, dm, u0, 6)
    proj_norm = math.sqrt(x @ (M @ x))
    u0_norm = sf.l2_error(msh, None, np.zeros(msh.n_vertices), u0)
    assert proj_norm <= u0_norm + 1e-10


def test_solve_real_spd_identity_and_mass(mesh_cache):
    assert np.allclose(fem.solve_real_spd(sp.eye_array(4).tocsr(), np.arange(4.0)),
                       np.arange(4.0))
    msh = mesh_cache(2 ** -4, 1.5)
    M = fem.assemble_mass(msh, sf.build_dofmap(msh, fem.DIRICHLET))
    ones = np.ones(M.shape[0])
    x = fem.solve_real_spd(M, M @ ones)
    assert np.max(np.abs(x - ones)) < 1e-9


def test_solve_real_spd_random_spd_recovery():
    rng = np.random.default_rng(42)
    A = rng.standard_normal((50, 50))
    A = sp.csr_array(A @ A.T + 50 * np.eye(50))
    x_true = rng.standard_normal(50)
    x = fem.solve_real_spd(A, A @ x_true)
    assert np.max(np.abs(x - x_true)) < 1e-8


def test_solve_complex_zero_coefficient_reduces_to_real(assembled_cache):
    msh, dm, M, S = assembled_cache(2 ** -4, 1.5, fem.DIRICHLET, 1.0)
    b = np.ones(dm.n_dofs, dtype=complex)
    x = fem.solve_complex_symmetric(0.0 + 0.0j, M, S, b)
    assert np.max(np.abs(x.imag)) < 1e-12
    assert np.allclose(x.real, fem.solve_real_spd(S, np.ones(dm.n_dofs)), atol=1e-10)


def test_solve_complex_2x2_closed_form():
    M = sp.csr_array(np.array([[2.0, 1.0], [1.0, 2.0]]))
    S = sp.csr_array(np.array([[3.0, -1.0], [-1.0, 3.0]]))
    z = 1.5 + 2.5j
    A = (z * M + S).toarray()
    b = np.array([1.0 + 1.0j, 2.0 - 1.0j])
    x = fem.solve_complex_symmetric(z, M, S, b)
    expect = np.linalg.inv(A) @ b
    assert np.max(np.abs(x - expect)) < 1e-12


def test_solve_complex_conjugation_symmetry(assembled_cache):
    msh, dm, M, S = assembled_cache(2 ** -4, 1.5, fem.DIRICHLET, 1.0)
    rng = np.random.default_rng(7)
    b = rng.standard_normal(dm.n_dofs) + 1j * rng.standard_normal(dm.n_dofs)
    z = (-3.0 + 4.0j) ** 0.5
    x = fem.solve_complex_symmetric(z, M, S, b)
    xc = fem.solve_complex_symmetric(np.conj(z), M, S, np.conj(b))
    assert np.max(np.abs(xc - np.conj(x))) < 1e-12


def test_solver_error_carries_residual():
    A = sp.csr_array(np.array([[1.0, 1.0], [1.0, 1.0]]))  # singular
    with pytest.raises(fem.SolverError):
        fem.solve_real_spd(A, np.array([1.0, 0.0]))


def test_smallest_eigenvalue_matches_bessel_oracle(assembled_cache):
    msh, dm, M, S = assembled_cache(2 ** -5, 1.5, fem.DIRICHLET, 1.0)
    lam, vecs = fem.smallest_eigenpairs(S, M, k=3)
    ref = sf.first_bessel_zero(BETA) ** 2
    assert np.all(lam > 0)
    assert lam[0] == pytest.approx(ref, rel=5e-3)
    # eigen-residual sanity
    r = S @ vecs[:, 0] - lam[0] * (M @ vecs[:, 0])
    assert np.linalg.norm(r) < 1e-8


def test_galerkin_orthogonality_of_elliptic_solve(assembled_cache):
    ell = sf.elliptic_singular()
    msh, dm, M, S = assembled_cache(2 ** -4, 1.5, fem.DIRICHLET, ell.K)
    b = fem.assemble_load(msh, dm, ell.f, 4)
    uh = fem.solve_real_spd(S, b)
    assert np.linalg.norm(S @ uh - b) / np.linalg.norm(b) <= 1e-10


def test_solve_counters(assembled_cache):
    msh, dm, M, S = assembled_cache(2 ** -4, 1.5, fem.DIRICHLET, 1.0)
    fem.reset_solve_counts()
    fem.solve_real_spd(M, np.ones(dm.n_dofs))
    fem.solve_complex_symmetric(1.0 + 1.0j, M, S, np.ones(dm.n_dofs, dtype=complex))
    assert fem.solve_counts() == {"real": 1, "complex": 1}
