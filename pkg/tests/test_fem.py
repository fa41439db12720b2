import math

import numpy as np
import pytest
import scipy.linalg as la

from fracpoisson import fem, mesh
from fracpoisson.errors import AssemblyError, DataError, UnsupportedConfigurationError


@pytest.fixture(scope="module")
def square_hier():
    return mesh.build_hierarchy("square", 1, 5)


@pytest.fixture(scope="module")
def square_spaces(square_hier):
    return [fem.build_space(m, 1) for m in square_hier.levels]


def test_quadrature_exactness():
    # integrate monomials exactly on the reference simplex
    for dim in (2, 3):
        for degree in (2, 4, 8):
            pts, w = fem.simplex_quadrature(dim, degree)
            exponents = (degree, 0, 0)[:dim] if dim == 2 else (degree - 2, 1, 1)
            val = np.sum(w * np.prod(pts**np.array(exponents), axis=1))
            # exact simplex integral of x^a y^b z^c is a!b!c!/(a+b+c+dim)!
            num = math.prod(math.factorial(e) for e in exponents)
            exact = num / math.factorial(sum(exponents) + dim)
            assert val == pytest.approx(exact, rel=1e-13)


def test_free_dof_counts(square_spaces):
    # level 3: (2^3+1)^2 vertices, interior (2^3-1)^2 = 49
    assert square_spaces[3].n == 49
    # P2 on the 2-triangle square: single interior dof (the diagonal midpoint)
    sp2 = fem.build_space(mesh.build_initial("square", 1), 2)
    assert sp2.n == 1


def test_disc_dof_growth():
    hier = mesh.build_hierarchy("disc", 1, 4)
    ns = [fem.build_space(m, 1).n for m in hier.levels]
    # asymptotically 4x per level; the coarsest step is boundary dominated
    for a, b in zip(ns[1:], ns[2:]):
        assert 3.0 < b / a < 5.0


def test_p2_in_3d_rejected():
    with pytest.raises(UnsupportedConfigurationError):
        fem.build_space(mesh.build_initial("cube", 1), 2)


def test_mass_partition_of_unity(square_spaces):
    for sp in (square_spaces[3], fem.build_space(square_spaces[3].mesh, 2)):
        m = fem.assemble_mass(sp, constrained=False)
        assert m.sum() == pytest.approx(1.0, rel=1e-12)


def test_mass_partition_of_unity_disc():
    m = mesh.build_hierarchy("disc", 1, 2).levels[-1]
    sp = fem.build_space(m, 1)
    mass = fem.assemble_mass(sp, constrained=False)
    assert mass.sum() == pytest.approx(m.cell_volumes().sum(), rel=1e-12)


def test_stiffness_kills_constants(square_spaces):
    s = fem.assemble_stiffness(square_spaces[2], constrained=False)
    ones = np.ones(s.shape[0])
    assert np.max(np.abs(s @ ones)) < 1e-13


def test_operators_spd(square_spaces):
    rng = np.random.default_rng(7)
    for sp in (square_spaces[3], fem.build_space(square_spaces[2].mesh, 2)):
        m = fem.assemble_mass(sp)
        s = fem.assemble_stiffness(sp)
        assert np.max(np.abs((m - m.T).data if (m - m.T).nnz else [0.0])) <= 1e-14 * np.max(np.abs(m.data))
        for _ in range(5):
            x = rng.standard_normal(sp.n)
            assert x @ (m @ x) > 0
            assert x @ (s @ x) > 0


def test_first_eigenvalue_square(square_spaces):
    sp = square_spaces[5]
    s = fem.assemble_stiffness(sp).toarray()
    m = fem.assemble_mass(sp).toarray()
    vals = la.eigh(s, m, subset_by_index=(0, 0), eigvals_only=True)
    exact = 2 * math.pi**2
    assert vals[0] >= exact
    assert vals[0] == pytest.approx(exact, rel=5e-3)


def test_p2_eigenvalue_rate_h4():
    # generalized eigenvalues of P2 converge at order 2k = 4
    exact = 2 * math.pi**2
    errs = []
    for level in (2, 3, 4):
        m = mesh.build_hierarchy("square", 1, level).levels[-1]
        sp = fem.build_space(m, 2)
        s = fem.assemble_stiffness(sp).toarray()
        mm = fem.assemble_mass(sp).toarray()
        val = la.eigh(s, mm, subset_by_index=(0, 0), eigvals_only=True)[0]
        assert val >= exact
        errs.append(val - exact)
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    for rate in rates:
        assert rate == pytest.approx(4.0, abs=0.4)


def test_load_partition_of_unity(square_spaces):
    load = fem.assemble_load(square_spaces[3], lambda x: np.ones(x.shape[0]),
                             quad_order=4, constrained=False)
    assert load.sum() == pytest.approx(1.0, rel=1e-13)


def test_load_disc_smooth_data():
    # f = (1-|x|^2)^{3/2}: total integral 2 pi / 5 over the disc
    f = lambda x: np.maximum(1.0 - np.sum(x * x, axis=1), 0.0) ** 1.5
    vals = []
    for refinements in (2, 3, 4):
        m = mesh.build_hierarchy("disc", 1, refinements).levels[-1]
        sp = fem.build_space(m, 1)
        vals.append(fem.assemble_load(sp, f, quad_order=4, constrained=False).sum())
    exact = 2 * math.pi / 5
    errs = [abs(v - exact) for v in vals]
    assert errs[2] < errs[1] < errs[0]
    assert vals[2] == pytest.approx(exact, rel=2e-3)


def test_load_quadrature_exact_for_polynomial_data():
    # r = 2.5 gives polynomial data of degree 8; with the P1 basis factor the
    # integrand has degree 9, so orders >= 9 agree to roundoff
    m = mesh.build_hierarchy("square", 1, 2).levels[-1]
    sp = fem.build_space(m, 1)
    f = lambda x: (x[:, 0] * x[:, 1] * (1 - x[:, 0]) * (1 - x[:, 1])) ** 2
    l9 = fem.assemble_load(sp, f, quad_order=9)
    l13 = fem.assemble_load(sp, f, quad_order=13)
    assert np.max(np.abs(l9 - l13)) <= 1e-14 * np.max(np.abs(l13))


def test_load_quadrature_self_consistency():
    # the r=2 disc data has a boundary kink, so quadrature orders agree only
    # algebraically; the discrepancy must sit far below discretization error
    # and shrink under refinement
    f = lambda x: np.maximum(1.0 - np.sum(x * x, axis=1), 0.0) ** 1.5
    rel = []
    for refinements in (2, 3):
        m = mesh.build_hierarchy("disc", 1, refinements).levels[-1]
        sp = fem.build_space(m, 1)
        l4 = fem.assemble_load(sp, f, quad_order=4)
        l8 = fem.assemble_load(sp, f, quad_order=8)
        rel.append(np.max(np.abs(l4 - l8)) / np.max(np.abs(l8)))
    assert rel[0] < 1e-4
    assert rel[1] < rel[0]


def test_load_rejects_non_finite(square_spaces):
    def bad(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / (x[:, 0] - x[:, 0])

    with pytest.raises(DataError):
        fem.assemble_load(square_spaces[2], bad)


def test_degenerate_cell_raises():
    m0 = mesh.build_initial("square", 1)
    bad = mesh.Mesh(dim=2, vertices=np.vstack([m0.vertices, [0.0, 0.0]]),
                    cells=np.array([[0, 1, 3], [0, 1, 4]]),
                    boundary_vertex_flags=np.zeros(5, dtype=bool),
                    domain_tag="square")
    sp = fem.build_space(bad, 1)
    with pytest.raises(AssemblyError):
        fem.assemble_mass(sp)


def test_prolongation_rowsums_and_linear_exactness(square_spaces):
    coarse, fine = square_spaces[3], square_spaces[4]
    p = fem.build_prolongation(coarse, fine)
    # coarse linear function x1 reproduced exactly on interior fine dofs
    xc = coarse.dof_coords[coarse.free_dofs, 0]
    xf = fine.dof_coords[fine.free_dofs, 0]
    interior_stencil = np.asarray(np.abs(p).sum(axis=1)).ravel() > 1.0 - 1e-12
    assert np.allclose((p @ xc)[interior_stencil], xf[interior_stencil], atol=1e-13)
    rs = np.asarray(p.sum(axis=1)).ravel()
    assert np.allclose(rs[interior_stencil], 1.0, atol=1e-13)


def test_prolongation_galerkin_identity(square_spaces):
    for k in (1, 2):
        coarse = fem.build_space(square_spaces[2].mesh, k)
        fine = fem.build_space(square_spaces[3].mesh, k)
        p = fem.build_prolongation(coarse, fine)
        sf = fem.assemble_stiffness(fine)
        sc = fem.assemble_stiffness(coarse)
        diff = (p.T @ sf @ p - sc).toarray()
        assert np.max(np.abs(diff)) <= 1e-12


def test_prolongation_p2_quadratic_exactness():
    hier = mesh.build_hierarchy("square", 1, 3)
    coarse = fem.build_space(hier.levels[2], 2)
    fine = fem.build_space(hier.levels[3], 2)
    p = fem.build_prolongation(coarse, fine)
    q = lambda x: x[:, 0] ** 2 + 0.5 * x[:, 0] * x[:, 1]
    qc = q(coarse.dof_coords[coarse.free_dofs])
    qf = q(fine.dof_coords[fine.free_dofs])
    # rows whose parent cell cannot touch the boundary have full stencils
    xy = fine.dof_coords[fine.free_dofs]
    interior = np.all((xy > 0.3) & (xy < 0.7), axis=1)
    assert interior.any()
    assert np.allclose((p @ qc)[interior], qf[interior], atol=1e-13)


def test_operator_dump_roundtrip(square_spaces):
    import io
    import scipy.sparse as sparse
    m = fem.assemble_mass(square_spaces[2])
    buf = io.StringIO()
    fem.dump_operator(m, buf)
    rows, cols, vals = [], [], []
    for line in buf.getvalue().strip().splitlines():
        i, j, v = line.split()
        rows.append(int(i)); cols.append(int(j)); vals.append(float(v))
    back = sparse.coo_matrix((vals, (rows, cols)), shape=m.shape)
    assert np.max(np.abs((back - m).toarray())) < 1e-16
