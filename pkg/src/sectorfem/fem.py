"""P1 finite element machinery on sector meshes.

Provides the dof numbering with Dirichlet/mixed constraint elimination,
mass/stiffness/load assembly, the L2 projector, and the sparse linear
solvers (real SPD and complex symmetric) used by the inverse-Laplace time
integration.  Matrices are scipy CSR arrays, symmetric by construction;
coefficient vectors are plain numpy arrays over the free dofs.

Assembled matrices are immutable in practice (never modified after return)
and each solve factors its own copy, so concurrent solves against shared
matrices are safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import EDGE_ARC, EDGE_THETA0, Mesh, triangle_origin_distances

DIRICHLET = "dirichlet"
MIXED = "mixed"

# Symmetric interior-point quadrature rules on the reference triangle:
# degree -> (barycentric points (n, 3), weights summing to 1).  Interior
# points only, so integrands with an r**(beta-1) corner singularity are
# never sampled at the corner itself.
_TRI_RULES = {
    2: (
        np.array([
            [2 / 3, 1 / 6, 1 / 6],
            [1 / 6, 2 / 3, 1 / 6],
            [1 / 6, 1 / 6, 2 / 3],
        ]),
        np.array([1 / 3, 1 / 3, 1 / 3]),
    ),
    4: (
        np.array([
            [0.108103018168070, 0.445948490915965, 0.445948490915965],
            [0.445948490915965, 0.108103018168070, 0.445948490915965],
            [0.445948490915965, 0.445948490915965, 0.108103018168070],
            [0.816847572980459, 0.091576213509771, 0.091576213509771],
            [0.091576213509771, 0.816847572980459, 0.091576213509771],
            [0.091576213509771, 0.091576213509771, 0.816847572980459],
        ]),
        np.array([0.223381589678011, 0.223381589678011, 0.223381589678011,
                  0.109951743655322, 0.109951743655322, 0.109951743655322]),
    ),
    5: (
        np.array([
            [1 / 3, 1 / 3, 1 / 3],
            [0.059715871789770, 0.470142064105115, 0.470142064105115],
            [0.470142064105115, 0.059715871789770, 0.470142064105115],
            [0.470142064105115, 0.470142064105115, 0.059715871789770],
            [0.797426985353087, 0.101286507323456, 0.101286507323456],
            [0.101286507323456, 0.797426985353087, 0.101286507323456],
            [0.101286507323456, 0.101286507323456, 0.797426985353087],
        ]),
        np.array([0.225,
                  0.132394152788506, 0.132394152788506, 0.132394152788506,
                  0.125939180544827, 0.125939180544827, 0.125939180544827]),
    ),
    6: (
        np.array([
            [0.873821971016996, 0.063089014491502, 0.063089014491502],
            [0.063089014491502, 0.873821971016996, 0.063089014491502],
            [0.063089014491502, 0.063089014491502, 0.873821971016996],
            [0.501426509658179, 0.249286745170910, 0.249286745170911],
            [0.249286745170910, 0.501426509658179, 0.249286745170911],
            [0.249286745170910, 0.249286745170911, 0.501426509658179],
            [0.636502499121399, 0.310352451033785, 0.053145049844816],
            [0.636502499121399, 0.053145049844816, 0.310352451033785],
            [0.310352451033785, 0.636502499121399, 0.053145049844816],
            [0.310352451033785, 0.053145049844816, 0.636502499121399],
            [0.053145049844816, 0.636502499121399, 0.310352451033785],
            [0.053145049844816, 0.310352451033785, 0.636502499121399],
        ]),
        np.array([0.050844906370207, 0.050844906370207, 0.050844906370207,
                  0.116786275726379, 0.116786275726379, 0.116786275726379,
                  0.082851075618374, 0.082851075618374, 0.082851075618374,
                  0.082851075618374, 0.082851075618374, 0.082851075618374]),
    ),
}


def _conical_rule(n: int):
    """Conical product rule on the triangle, exact to degree 2n-1.

    Gauss-Legendre points in the collapsed coordinate and Gauss-Jacobi
    (weight 1-x) points in the other absorb the Jacobian exactly, so no
    tabulated constants are needed.  Weights are normalized to sum to 1.
    """
    from scipy.special import roots_jacobi, roots_legendre
    xi, wxi = roots_legendre(n)
    xi = 0.5 * (xi + 1.0)
    eta, weta = roots_jacobi(n, 1.0, 0.0)
    eta = 0.5 * (eta + 1.0)
    x = np.outer(xi, 1.0 - eta).ravel()
    y = np.tile(eta, n)
    w = np.outer(wxi, weta).ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    return pts, w / w.sum()


def triangle_rule(degree: int):
    """Symmetric tabulated rule (degree <= 6) or conical product rule above."""
    if degree < 2:
        raise ValueError(f"quadrature degree must be >= 2, got {degree}")
    for d in sorted(_TRI_RULES):
        if d >= degree:
            return _TRI_RULES[d]
    return _conical_rule((degree + 2) // 2)


class SolverError(RuntimeError):
    """Linear solve failed or did not meet the residual contract."""

    def __init__(self, message: str, residual: float = np.nan):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class DofMap:
    """Vertex-to-dof numbering with constrained vertices marked by -1."""

    vertex_to_dof: np.ndarray
    n_dofs: int
    bc_kind: str

    def __post_init__(self):
        object.__setattr__(self, "vertex_to_dof",
                           np.ascontiguousarray(self.vertex_to_dof, dtype=np.int64))
        self.vertex_to_dof.setflags(write=False)

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Free-dof coefficients -> per-vertex nodal values (zeros where constrained)."""
        u = np.asarray(u)
        full = np.zeros(self.vertex_to_dof.shape[0], dtype=u.dtype)
        free = self.vertex_to_dof >= 0
        full[free] = u[self.vertex_to_dof[free]]
        return full


def build_dofmap(mesh: Mesh, bc_kind: str = DIRICHLET) -> DofMap:
    """Number the free vertices for the requested boundary conditions.

    ``dirichlet`` constrains every boundary vertex.  ``mixed`` constrains the
    theta=0 radial edge and the arc; vertices strictly inside the theta_max
    radial edge stay free (its endpoints are shared with constrained edges).
    """
    if bc_kind not in (DIRICHLET, MIXED):
        raise ValueError(f"unknown bc_kind {bc_kind!r}")
    constrained = np.zeros(mesh.n_vertices, dtype=bool)
    for i, j, tag in mesh.boundary_edges:
        if bc_kind == DIRICHLET or tag in (EDGE_THETA0, EDGE_ARC):
            constrained[i] = constrained[j] = True
    vertex_to_dof = np.full(mesh.n_vertices, -1, dtype=np.int64)
    free = np.flatnonzero(~constrained)
    vertex_to_dof[free] = np.arange(free.size)
    return DofMap(vertex_to_dof, free.size, bc_kind)


def unconstrained_dofmap(mesh: Mesh) -> DofMap:
    """Dof map with every vertex free (no boundary conditions applied)."""
    return DofMap(np.arange(mesh.n_vertices), mesh.n_vertices, "none")


def element_geometry(mesh: Mesh):
    """Per-element areas and constant P1 basis gradients."""
    p = mesh.vertices[mesh.triangles]
    d21 = p[:, 1] - p[:, 0]
    d31 = p[:, 2] - p[:, 0]
    area2 = d21[:, 0] * d31[:, 1] - d21[:, 1] * d31[:, 0]
    # grad of barycentric i is the inward normal of the opposite edge / 2A
    grads = np.empty((mesh.n_triangles, 3, 2))
    for i, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        grads[:, i, 0] = p[:, a, 1] - p[:, b, 1]
        grads[:, i, 1] = p[:, b, 0] - p[:, a, 0]
    grads /= area2[:, None, None]
    return 0.5 * area2, grads


def _scatter(mesh: Mesh, dofmap: DofMap, local: np.ndarray) -> sp.csr_array:
    """Accumulate per-element 3x3 blocks into the free-dof CSR matrix."""
    dofs = dofmap.vertex_to_dof[mesh.triangles]
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    vals = local.ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = dofmap.n_dofs
    mat = sp.coo_array((vals[keep], (rows[keep], cols[keep])), shape=(n, n))
    return mat.tocsr()


_MASS_BLOCK = np.array([[2.0, 1.0, 1.0],
                        [1.0, 2.0, 1.0],
                        [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass(mesh: Mesh, dofmap: DofMap) -> sp.csr_array:
    """Mass matrix M_ij = integral of phi_i phi_j over the free basis."""
    areas, _ = element_geometry(mesh)
    local = areas[:, None, None] * _MASS_BLOCK
    return _scatter(mesh, dofmap, local)


def assemble_stiffness(mesh: Mesh, dofmap: DofMap, K: float = 1.0) -> sp.csr_array:
    """Stiffness matrix S_ij = K * integral of grad phi_i . grad phi_j."""
    if K <= 0:
        raise ValueError(f"diffusivity K must be positive, got {K}")
    areas, grads = element_geometry(mesh)
    local = K * areas[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)
    return _scatter(mesh, dofmap, local)


def element_quad_points(mesh: Mesh, quad_degree: int, origin_degree: int | None = None):
    """Quadrature data per element, upgrading the rule near the corner.

    Elements within the innermost band (distance to origin < h_star**gamma)
    use a rule of degree ``origin_degree`` (default max(quad_degree, 6)) to
    control the consistency error from r**(beta-1)-type integrands.

    Yields (element_indices, barycentric points (q, 3), weights (q,)).
    """
    if origin_degree is None:
        origin_degree = max(quad_degree, 6)
    r_tri = triangle_origin_distances(mesh)
    near = r_tri < mesh.h_star ** mesh.gamma
    groups = []
    base_ids = np.flatnonzero(~near)
    near_ids = np.flatnonzero(near)
    if base_ids.size:
        pts, w = triangle_rule(quad_degree)
        groups.append((base_ids, pts, w))
    if near_ids.size:
        pts, w = triangle_rule(origin_degree)
        groups.append((near_ids, pts, w))
    return groups


def assemble_load(mesh: Mesh, dofmap: DofMap, g: Callable, quad_degree: int = 4) -> np.ndarray:
    """Load vector b_i = integral of g * phi_i by symmetric triangle quadrature.

    ``g(x, y)`` must accept numpy arrays; complex-valued fields give a
    complex load vector.  Non-finite evaluations raise ValueError with the
    offending location.
    """
    if not 2 <= quad_degree <= 6:
        raise ValueError(f"load quadrature degree must be in 2..6, got {quad_degree}")
    out = None
    coords = mesh.vertices[mesh.triangles]
    areas, _ = element_geometry(mesh)
    dofs = dofmap.vertex_to_dof[mesh.triangles]
    for ids, pts, w in element_quad_points(mesh, quad_degree):
        xq = np.einsum("qb,ebd->eqd", pts, coords[ids])
        vals = np.asarray(g(xq[..., 0], xq[..., 1]))
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            x, y = xq[bad[0], bad[1]]
            raise ValueError(f"load field returned non-finite value at ({x:.6g}, {y:.6g})")
        if out is None:
            out = np.zeros(dofmap.n_dofs, dtype=np.promote_types(vals.dtype, float))
        elif vals.dtype.kind == "c" and out.dtype.kind != "c":
            out = out.astype(complex)
        # b_e[i] = area * sum_q w_q g(x_q) lambda_i(x_q)
        be = areas[ids, None] * np.einsum("eq,q,qb->eb", vals, w, pts)
        d = dofs[ids]
        keep = d >= 0
        np.add.at(out, d[keep], be[keep])
    return out


def l2_project(mesh: Mesh, dofmap: DofMap, u0: Callable, quad_degree: int = 4) -> np.ndarray:
    """Coefficients of the L2-orthogonal projection of u0 onto the FE space."""
    mass = assemble_mass(mesh, dofmap)
    b = assemble_load(mesh, dofmap, u0, quad_degree)
    return solve_real_spd(mass, b)


# Solve counters, for audits of how many factorizations an algorithm spends.
_SOLVE_COUNTS = {"real": 0, "complex": 0}


def solve_counts() -> dict:
    return dict(_SOLVE_COUNTS)


def reset_solve_counts() -> None:
    _SOLVE_COUNTS["real"] = 0
    _SOLVE_COUNTS["complex"] = 0


def _check_residual(A, x, b, context: str) -> np.ndarray:
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return x
    res = np.linalg.norm(A @ x - b) / norm_b
    if not np.isfinite(res) or res > 1e-10:
        raise SolverError(f"{context}: relative residual {res:.3e} exceeds 1e-10", res)
    return x


def solve_real_spd(A: sp.sparray, b: np.ndarray) -> np.ndarray:
    """Direct sparse solve for symmetric positive definite A; residual <= 1e-10."""
    _SOLVE_COUNTS["real"] += 1
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        return b.copy()
    try:
        lu = spla.splu(sp.csc_matrix(A))
        x = lu.solve(b)
        x += lu.solve(b - A @ x)  # one refinement step tightens the residual
    except RuntimeError as exc:  # singular factorization
        raise SolverError(f"real SPD solve failed: {exc}") from exc
    return _check_residual(A, x, b, "real SPD solve")


def solve_complex_symmetric(zalpha: complex, mass: sp.sparray, stiffness: sp.sparray,
                            b: np.ndarray) -> np.ndarray:
    """Solve (zalpha * M + S) x = b for complex symmetric (non-Hermitian) systems.

    The factorization is a general sparse LU; no Hermitian structure is
    assumed.  Residual contract: relative residual <= 1e-10.
    """
    if not np.isfinite(zalpha.real) or not np.isfinite(zalpha.imag):
        raise ValueError(f"non-finite coefficient zalpha = {zalpha}")
    _SOLVE_COUNTS["complex"] += 1
    A = (zalpha * mass + stiffness).astype(complex)
    b = np.asarray(b, dtype=complex)
    if b.size == 0:
        return b.copy()
    try:
        lu = spla.splu(sp.csc_matrix(A))
        x = lu.solve(b)
        x += lu.solve(b - A @ x)  # one refinement step tightens the residual
    except RuntimeError as exc:
        raise SolverError(f"complex symmetric solve failed: {exc}") from exc
    return _check_residual(A, x, b, "complex symmetric solve")


def smallest_eigenpairs(stiffness: sp.sparray, mass: sp.sparray, k: int = 1):
    """A few smallest eigenpairs of S v = lambda M v via shift-invert Lanczos.

    Returns (values ascending, vectors as columns, M-orthonormal).
    """
    vals, vecs = spla.eigsh(stiffness, k=k, M=sp.csc_matrix(mass), sigma=0.0, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]
