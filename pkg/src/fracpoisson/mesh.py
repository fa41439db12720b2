"""Nested simplicial mesh hierarchies for the unit disc, square and cube.

Meshes are stored as flat vertex/cell arrays.  Uniform refinement keeps
parent vertices at their original indices (new vertices are appended), which
makes prolongation between levels trivial to construct.  For the disc the
curved boundary is approximated by a polygon; midpoints of boundary edges are
projected radially onto the unit circle on every refinement.
"""

from dataclasses import dataclass
import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Mesh",
    "MeshHierarchy",
    "build_initial",
    "refine_uniform",
    "build_hierarchy",
    "dump_mesh",
    "domain_measure",
]

_MEASURES = {"disc": np.pi, "square": 1.0, "cube": 1.0}


def domain_measure(domain_tag):
    """|Omega| of the continuous reference domain."""
    try:
        return _MEASURES[domain_tag]
    except KeyError:
        raise ConfigurationError(f"unknown domain tag {domain_tag!r}") from None


@dataclass(frozen=True)
class Mesh:
    """Conforming simplicial mesh of one of the reference domains.

    vertices: (nv, dim) float array; cells: (nc, dim+1) int array with
    positive signed volume; boundary_vertex_flags marks vertices on the
    boundary of the discrete domain.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_vertex_flags: np.ndarray
    domain_tag: str

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]

    def cell_volumes(self):
        """Signed volumes (areas in 2d) of all cells."""
        v = self.vertices[self.cells]
        edges = v[:, 1:, :] - v[:, :1, :]
        if self.dim == 2:
            det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
            return 0.5 * det
        det = np.linalg.det(edges)
        return det / 6.0

    def cell_diameters(self):
        """Longest edge of each cell."""
        v = self.vertices[self.cells]
        k = self.dim + 1
        d = np.zeros(self.num_cells)
        for i in range(k):
            for j in range(i + 1, k):
                d = np.maximum(d, np.linalg.norm(v[:, i] - v[:, j], axis=1))
        return d

    def max_diameter(self):
        return float(self.cell_diameters().max())

    def facets(self):
        """All cell facets as sorted index tuples, one row per (cell, facet)."""
        return _facets(self.cells, self.dim)

    def boundary_facets(self):
        """Facets incident to exactly one cell."""
        f = self.facets()
        uniq, counts = np.unique(f, axis=0, return_counts=True)
        return uniq[counts == 1]

    def shape_regularity(self):
        """Max ratio of circumradius to inradius over all cells."""
        worst = 0.0
        for cell in self.cells:
            pts = self.vertices[cell]
            worst = max(worst, _circum_to_inradius(pts, self.dim))
        return worst


def _facets(cells, dim):
    if dim == 2:
        f = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [0, 2]]])
    else:
        f = np.concatenate([cells[:, [1, 2, 3]], cells[:, [0, 2, 3]],
                            cells[:, [0, 1, 3]], cells[:, [0, 1, 2]]])
    return np.sort(f, axis=1)


def _circum_to_inradius(pts, dim):
    if dim == 2:
        a = np.linalg.norm(pts[1] - pts[2])
        b = np.linalg.norm(pts[0] - pts[2])
        c = np.linalg.norm(pts[0] - pts[1])
        e1, e2 = pts[1] - pts[0], pts[2] - pts[0]
        area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
        circ = a * b * c / (4.0 * area)
        inr = 2.0 * area / (a + b + c)
        return circ / inr
    # tetrahedron: circumcenter from equidistance, inradius from face areas
    a = pts[1:] - pts[0]
    rhs = 0.5 * np.sum(a * a, axis=1)
    center = pts[0] + np.linalg.solve(a, rhs)
    circ = np.linalg.norm(center - pts[0])
    vol = abs(np.linalg.det(a)) / 6.0
    faces = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]
    area_sum = 0.0
    for i, j, k in faces:
        area_sum += 0.5 * np.linalg.norm(np.cross(pts[j] - pts[i], pts[k] - pts[i]))
    inr = 3.0 * vol / area_sum
    return circ / inr


def _orient_positive(vertices, cells, dim):
    """Swap two vertices of any negatively oriented cell."""
    cells = np.array(cells, dtype=np.int64)
    v = vertices[cells]
    edges = v[:, 1:, :] - v[:, :1, :]
    if dim == 2:
        det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
    else:
        det = np.linalg.det(edges)
    flip = det < 0
    cells[flip, 0], cells[flip, 1] = cells[flip, 1], cells[flip, 0]
    return cells


def _topological_boundary_flags(num_vertices, dim, cells):
    f = _facets(cells, dim)
    uniq, counts = np.unique(f, axis=0, return_counts=True)
    flags = np.zeros(num_vertices, dtype=bool)
    flags[np.unique(uniq[counts == 1])] = True
    return flags


def _make_mesh(domain_tag, dim, vertices, cells):
    vertices = np.asarray(vertices, dtype=float)
    cells = _orient_positive(vertices, cells, dim)
    flags = _topological_boundary_flags(vertices.shape[0], dim, cells)
    return Mesh(dim=dim, vertices=vertices, cells=cells,
                boundary_vertex_flags=flags, domain_tag=domain_tag)


def _initial_square(res):
    xs = np.linspace(0.0, 1.0, res + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])
    idx = lambda i, j: i * (res + 1) + j
    cells = []
    for i in range(res):
        for j in range(res):
            v00, v10 = idx(i, j), idx(i + 1, j)
            v01, v11 = idx(i, j + 1), idx(i + 1, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return _make_mesh("square", 2, verts, cells)


_KUHN_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def _initial_cube(res):
    xs = np.linspace(0.0, 1.0, res + 1)
    xx, yy, zz = np.meshgrid(xs, xs, xs, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    n1 = res + 1
    idx = lambda i, j, k: (i * n1 + j) * n1 + k
    cells = []
    for i in range(res):
        for j in range(res):
            for k in range(res):
                corner = np.array([i, j, k])
                for perm in _KUHN_PERMS:
                    path = [corner.copy()]
                    for axis in perm:
                        nxt = path[-1].copy()
                        nxt[axis] += 1
                        path.append(nxt)
                    cells.append(tuple(idx(*p) for p in path))
    return _make_mesh("cube", 3, verts, cells)


def _initial_disc(res):
    # concentric rings of 6*j vertices at radius j/nr; sectors triangulated
    # as strips, so the coarsest mesh (res=1 -> 2 rings) is already a 12-gon
    nr = 2 * res
    verts = [(0.0, 0.0)]
    ring_start = [0, 1]
    for j in range(1, nr + 1):
        ang = 2.0 * np.pi * np.arange(6 * j) / (6 * j)
        rad = j / nr
        verts.extend(zip(rad * np.cos(ang), rad * np.sin(ang)))
        ring_start.append(ring_start[-1] + 6 * j)
    cells = []
    for sector in range(6):
        cells.append((ring_start[1] + sector, ring_start[1] + (sector + 1) % 6, 0))
    for j in range(2, nr + 1):
        outer0, inner0 = ring_start[j], ring_start[j - 1]
        nout, nin = 6 * j, 6 * (j - 1)
        for sector in range(6):
            out = [outer0 + (sector * j + t) % nout for t in range(j + 1)]
            inn = [inner0 + (sector * (j - 1) + t) % nin for t in range(j)]
            for t in range(j):
                cells.append((out[t], out[t + 1], inn[t]))
            for t in range(j - 1):
                cells.append((out[t + 1], inn[t + 1], inn[t]))
    return _make_mesh("disc", 2, np.array(verts), cells)


def build_initial(domain_tag, base_resolution=1):
    """Coarse conforming mesh of the requested reference domain."""
    if base_resolution < 1:
        raise ConfigurationError("base_resolution must be >= 1")
    if domain_tag == "square":
        return _initial_square(base_resolution)
    if domain_tag == "cube":
        return _initial_cube(base_resolution)
    if domain_tag == "disc":
        return _initial_disc(base_resolution)
    raise ConfigurationError(f"unknown domain tag {domain_tag!r}")


def _edge_midpoint_table(cells, dim):
    """Unique edges of the mesh and a lookup from vertex pair to edge rank."""
    if dim == 2:
        pairs = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [0, 2]]])
    else:
        pairs = np.concatenate([cells[:, [i, j]] for i in range(4) for j in range(i + 1, 4)])
    pairs = np.sort(pairs, axis=1)
    edges = np.unique(pairs, axis=0)
    lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
    return edges, lookup


def refine_uniform(mesh):
    """One sweep of red refinement (4 children per triangle, 8 per tet).

    Parent vertices keep their indices; edge midpoints are appended.  On the
    disc, midpoints of boundary edges are projected onto the unit circle.
    """
    cells = mesh.cells
    edges, lookup = _edge_midpoint_table(cells, mesh.dim)
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])

    if mesh.domain_tag == "disc":
        bset = {tuple(f) for f in mesh.boundary_facets()}
        for k, (a, b) in enumerate(edges):
            if (int(a), int(b)) in bset:
                mid[k] /= np.linalg.norm(mid[k])

    verts = np.vstack([mesh.vertices, mid])
    nv0 = mesh.num_vertices
    m = lambda a, b: nv0 + lookup[(min(int(a), int(b)), max(int(a), int(b)))]

    children = []
    if mesh.dim == 2:
        for v0, v1, v2 in cells:
            m01, m12, m02 = m(v0, v1), m(v1, v2), m(v0, v2)
            children += [(v0, m01, m02), (v1, m12, m01), (v2, m02, m12), (m01, m12, m02)]
    else:
        # red refinement: four corner tets plus the interior octahedron cut
        # along its shortest diagonal.  The geometric diagonal choice is
        # independent of vertex labels (orientation fixes permute them), and
        # on Kuhn-type meshes it reproduces the parent shape classes, so
        # regularity stays bounded under repeated refinement.
        for v0, v1, v2, v3 in cells:
            m01, m02, m03 = m(v0, v1), m(v0, v2), m(v0, v3)
            m12, m13, m23 = m(v1, v2), m(v1, v3), m(v2, v3)
            children += [(v0, m01, m02, m03), (m01, v1, m12, m13),
                         (m02, m12, v2, m23), (m03, m13, m23, v3)]
            diagonals = [
                ((m01, m23), (m02, m12, m13, m03)),
                ((m02, m13), (m01, m12, m23, m03)),
                ((m03, m12), (m01, m13, m23, m02)),
            ]
            best = min(diagonals, key=lambda dc: (
                np.sum((verts[dc[0][0]] - verts[dc[0][1]]) ** 2),
                min(dc[0]), max(dc[0])))
            (a, b), cycle = best
            for i in range(4):
                children.append((a, b, cycle[i], cycle[(i + 1) % 4]))
    return _make_mesh(mesh.domain_tag, mesh.dim, verts, children)


@dataclass(frozen=True)
class MeshHierarchy:
    """Nested meshes from coarsest to finest with per-level mesh sizes."""

    levels: list
    h_per_level: list
    domain_measure: float

    def __len__(self):
        return len(self.levels)

    def extend(self, extra_levels=1):
        """Hierarchy with ``extra_levels`` further uniform refinements."""
        levels = list(self.levels)
        for _ in range(extra_levels):
            levels.append(refine_uniform(levels[-1]))
        return MeshHierarchy(levels=levels,
                             h_per_level=[m.max_diameter() for m in levels],
                             domain_measure=self.domain_measure)


def build_hierarchy(domain_tag, base_resolution=1, refinements=0):
    """Build ``refinements + 1`` nested levels of the requested domain."""
    levels = [build_initial(domain_tag, base_resolution)]
    for _ in range(refinements):
        levels.append(refine_uniform(levels[-1]))
    return MeshHierarchy(levels=levels,
                         h_per_level=[m.max_diameter() for m in levels],
                         domain_measure=domain_measure(domain_tag))


def dump_mesh(mesh, stream):
    """Plain text dump: "dim nv nc", vertex lines, then 0-based cell lines."""
    stream.write(f"{mesh.dim} {mesh.num_vertices} {mesh.num_cells}\n")
    for v in mesh.vertices:
        stream.write(" ".join(f"{x:.17g}" for x in v) + "\n")
    for c in mesh.cells:
        stream.write(" ".join(str(int(i)) for i in c) + "\n")
