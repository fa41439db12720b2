"""P1/P2 finite element spaces and assembly on simplicial meshes.

Element integrals for mass and stiffness are exact for affine simplices:
reference matrices are computed once with a quadrature rule of sufficient
polynomial degree and mapped with constant Jacobians.  Homogeneous Dirichlet
conditions are imposed by eliminating boundary degrees of freedom, which
keeps all operators symmetric positive definite.  Assembly runs in cell
chunks with a fixed accumulation order, so results are reproducible.
"""

from dataclasses import dataclass
from functools import lru_cache
import numpy as np
import scipy.sparse as sparse

from .errors import AssemblyError, ConfigurationError, DataError, UnsupportedConfigurationError

__all__ = [
    "FeSpace",
    "build_space",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_load",
    "build_prolongation",
    "simplex_quadrature",
    "dump_operator",
]

_DEGENERATE_VOLUME = 1e-14
_CHUNK_CELLS = 200_000
_LOAD_SCALAR_BUDGET = 4_000_000


@lru_cache(maxsize=None)
def _gauss_legendre_01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def simplex_quadrature(dim, degree):
    """Quadrature on the reference simplex, exact for polynomials of ``degree``.

    Returns (points, weights): points in reference coordinates, weights
    summing to the reference simplex volume.  Built by collapsing a tensor
    Gauss-Legendre rule (Duffy transform), so any degree is available.
    """
    if dim == 1:
        n = degree // 2 + 1
        x, w = _gauss_legendre_01(n)
        return x[:, None].copy(), w.copy()
    if dim == 2:
        n = (degree + 1) // 2 + 1
        u, wu = _gauss_legendre_01(n)
        v, wv = _gauss_legendre_01(n)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
        w = np.outer(wu * (1.0 - u), wv).ravel()
        return pts, w
    if dim == 3:
        n = (degree + 2) // 2 + 1
        u, wu = _gauss_legendre_01(n)
        v, wv = _gauss_legendre_01(n)
        t, wt = _gauss_legendre_01(n)
        U, V, T = np.meshgrid(u, v, t, indexing="ij")
        pts = np.column_stack([
            U.ravel(),
            (V * (1.0 - U)).ravel(),
            (T * (1.0 - U) * (1.0 - V)).ravel(),
        ])
        w = np.einsum("i,j,k->ijk", wu * (1.0 - u) ** 2, wv * (1.0 - v), wt).ravel()
        return pts, w
    raise ConfigurationError("quadrature only for dim 1, 2, 3")


def _p1_basis(dim, pts):
    lam0 = 1.0 - pts.sum(axis=1)
    vals = np.column_stack([lam0] + [pts[:, i] for i in range(dim)])
    grads = np.zeros((pts.shape[0], dim + 1, dim))
    grads[:, 0, :] = -1.0
    for i in range(dim):
        grads[:, i + 1, i] = 1.0
    return vals, grads


# P2 triangle: vertex functions then midpoint functions for edges (0,1), (1,2), (0,2)
_P2_EDGES = [(0, 1), (1, 2), (0, 2)]


def _p2_basis(pts):
    x, y = pts[:, 0], pts[:, 1]
    lam = np.column_stack([1.0 - x - y, x, y])
    glam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    nq = pts.shape[0]
    vals = np.zeros((nq, 6))
    grads = np.zeros((nq, 6, 2))
    for i in range(3):
        vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grads[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * glam[i]
    for e, (i, j) in enumerate(_P2_EDGES):
        vals[:, 3 + e] = 4.0 * lam[:, i] * lam[:, j]
        grads[:, 3 + e, :] = 4.0 * (lam[:, i][:, None] * glam[j] + lam[:, j][:, None] * glam[i])
    return vals, grads


def _basis(dim, k, pts):
    return _p1_basis(dim, pts) if k == 1 else _p2_basis(pts)


@lru_cache(maxsize=None)
def _reference_matrices(dim, k):
    """Reference mass matrix and stiffness tensor K[a, b, i, j]."""
    pts, w = simplex_quadrature(dim, 2 * (k + 1))
    vals, grads = _basis(dim, k, pts)
    mass = np.einsum("q,qi,qj->ij", w, vals, vals)
    stiff = np.einsum("q,qia,qjb->abij", w, grads, grads)
    return mass, stiff


@dataclass(frozen=True)
class FeSpace:
    """Nodal finite element space with Dirichlet dofs eliminated.

    ``cell_dofs`` lists global dof indices per cell; ``free_dofs`` are the
    non-Dirichlet dofs, ``n`` their count.  ``free_index`` maps a global dof
    to its free position (-1 for Dirichlet dofs).
    """

    mesh: object
    k: int
    dof_coords: np.ndarray
    cell_dofs: np.ndarray
    dirichlet_mask: np.ndarray
    free_dofs: np.ndarray
    free_index: np.ndarray

    @property
    def n(self):
        return int(self.free_dofs.shape[0])

    @property
    def num_dofs(self):
        return int(self.dof_coords.shape[0])


def build_space(mesh, k):
    """P1 or P2 space on ``mesh`` with homogeneous Dirichlet boundary.

    Dirichlet dofs are all dofs whose support point lies on the boundary of
    the discrete domain: boundary vertices, plus midpoints of boundary edges
    for P2.  P2 is supported in two dimensions only.
    """
    if k not in (1, 2):
        raise ConfigurationError("element order k must be 1 or 2")
    if k == 2 and mesh.dim == 3:
        raise UnsupportedConfigurationError("P2 elements are supported for dim=2 only")

    if k == 1:
        dof_coords = mesh.vertices
        cell_dofs = mesh.cells
        dirichlet = mesh.boundary_vertex_flags.copy()
    else:
        cells = mesh.cells
        nc = cells.shape[0]
        pairs = np.sort(np.concatenate([cells[:, e] for e in _P2_EDGES]), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        nv = mesh.num_vertices
        mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
        dof_coords = np.vstack([mesh.vertices, mid])
        edge_cols = (nv + inverse).reshape(3, nc).T
        cell_dofs = np.hstack([cells, edge_cols])
        dirichlet = np.zeros(dof_coords.shape[0], dtype=bool)
        dirichlet[:nv] = mesh.boundary_vertex_flags
        edge_lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
        for a, b in mesh.boundary_facets():
            dirichlet[nv + edge_lookup[(int(a), int(b))]] = True

    free = np.flatnonzero(~dirichlet)
    free_index = -np.ones(dof_coords.shape[0], dtype=np.int64)
    free_index[free] = np.arange(free.shape[0])
    return FeSpace(mesh=mesh, k=k, dof_coords=dof_coords, cell_dofs=cell_dofs,
                   dirichlet_mask=dirichlet, free_dofs=free, free_index=free_index)


def _cell_geometry(mesh, lo, hi):
    v = mesh.vertices[mesh.cells[lo:hi]]
    jac = np.swapaxes(v[:, 1:, :] - v[:, :1, :], 1, 2)  # columns are edge vectors
    det = np.linalg.det(jac)
    vol = det / (2.0 if mesh.dim == 2 else 6.0)
    bad = np.flatnonzero(np.abs(vol) < _DEGENERATE_VOLUME)
    if bad.size:
        raise AssemblyError(f"degenerate cell {lo + int(bad[0])} with volume {vol[bad[0]]:.3e}")
    return jac, det


def _assemble_operator(space, local_fn, constrained):
    """Chunked scatter of local element matrices into one CSR operator."""
    mesh = space.mesh
    nd = space.cell_dofs.shape[1]
    size = space.num_dofs
    total = None
    for lo in range(0, mesh.num_cells, _CHUNK_CELLS):
        hi = min(lo + _CHUNK_CELLS, mesh.num_cells)
        local = local_fn(lo, hi)
        cd = space.cell_dofs[lo:hi]
        rows = np.repeat(cd, nd, axis=1).ravel()
        cols = np.tile(cd, (1, nd)).ravel()
        part = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(size, size)).tocsr()
        total = part if total is None else total + part
    if constrained:
        f = space.free_dofs
        total = total[f][:, f]
    total.sum_duplicates()
    return total.tocsr()


def assemble_mass(space, constrained=True):
    """Mass matrix with exact element integrals; Dirichlet dofs eliminated."""
    ref_mass, _ = _reference_matrices(space.mesh.dim, space.k)

    def local(lo, hi):
        _, det = _cell_geometry(space.mesh, lo, hi)
        return np.abs(det)[:, None, None] * ref_mass[None, :, :]

    return _assemble_operator(space, local, constrained)


def assemble_stiffness(space, constrained=True):
    """Stiffness matrix with exact element integrals for affine cells."""
    _, ref_stiff = _reference_matrices(space.mesh.dim, space.k)

    def local(lo, hi):
        jac, det = _cell_geometry(space.mesh, lo, hi)
        inv = np.linalg.inv(jac)
        c = np.einsum("cak,cbk->cab", inv, inv) * np.abs(det)[:, None, None]
        return np.einsum("cab,abij->cij", c, ref_stiff)

    return _assemble_operator(space, local, constrained)


def assemble_load(space, f, quad_order=4, constrained=True):
    """Load vector <f, Phi_i> by per-element Gauss quadrature of ``quad_order``.

    With ``constrained`` the entries for Dirichlet dofs are dropped.  Raises
    :class:`DataError` if ``f`` is non-finite at a quadrature point.
    """
    mesh = space.mesh
    pts, w = simplex_quadrature(mesh.dim, quad_order)
    vals, _ = _basis(mesh.dim, space.k, pts)
    nq = pts.shape[0]
    out = np.zeros(space.num_dofs)
    chunk = max(1, _LOAD_SCALAR_BUDGET // nq)
    for lo in range(0, mesh.num_cells, chunk):
        hi = min(lo + chunk, mesh.num_cells)
        jac, det = _cell_geometry(mesh, lo, hi)
        origin = mesh.vertices[mesh.cells[lo:hi, 0]]
        phys = origin[:, None, :] + np.einsum("cab,qb->cqa", jac, pts)
        fv = np.asarray(f(phys.reshape(-1, mesh.dim)), dtype=float).reshape(hi - lo, nq)
        if not np.all(np.isfinite(fv)):
            raise DataError("right-hand side is not finite at a quadrature point")
        local = np.abs(det)[:, None] * np.einsum("q,cq,qi->ci", w, fv, vals)
        np.add.at(out, space.cell_dofs[lo:hi].ravel(), local.ravel())
    return out[space.free_dofs] if constrained else out


def dump_operator(op, stream):
    """Debug dump in coordinate text format, one "row col value" per line."""
    coo = op.tocoo()
    for i, j, v in zip(coo.row, coo.col, coo.data):
        stream.write(f"{i} {j} {v:.17g}\n")


def build_prolongation(coarse, fine):
    """Interpolation operator from coarse to fine free dofs.

    ``fine`` must live on the uniform refinement of the coarse mesh with the
    same order.  Every fine dof evaluates the coarse basis functions of its
    parent cell, so polynomials of degree <= k are reproduced exactly on
    interior dofs.  Rows/columns belonging to Dirichlet dofs are dropped.
    """
    if coarse.k != fine.k:
        raise ConfigurationError("prolongation requires equal element order")
    dim = coarse.mesh.dim
    children_per = 4 if dim == 2 else 8
    if fine.mesh.num_cells != coarse.mesh.num_cells * children_per:
        raise ConfigurationError("fine space is not the uniform refinement of coarse")

    nd = fine.cell_dofs.shape[1]
    flat = fine.cell_dofs.ravel()
    uniq, first = np.unique(flat, return_index=True)
    owner_cell = first // nd
    parent = owner_cell // children_per

    ppts = coarse.mesh.vertices[coarse.mesh.cells[parent]]          # (m, dim+1, dim)
    jac = np.swapaxes(ppts[:, 1:, :] - ppts[:, :1, :], 1, 2)
    rhs = fine.dof_coords[uniq] - ppts[:, 0, :]
    ref = np.linalg.solve(jac, rhs[:, :, None])[:, :, 0]
    basis_vals, _ = _basis(dim, coarse.k, ref)                      # (m, nd_coarse)

    rows = np.repeat(uniq, basis_vals.shape[1])
    cols = coarse.cell_dofs[parent].ravel()
    vals = basis_vals.ravel()
    keep = np.abs(vals) > 1e-13
    full = sparse.coo_matrix((vals[keep], (rows[keep], cols[keep])),
                             shape=(fine.num_dofs, coarse.num_dofs)).tocsr()
    return full[fine.free_dofs][:, coarse.free_dofs].tocsr()
