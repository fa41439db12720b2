import math

import numpy as np
import pytest

from fracpoisson import fem, solver
from fracpoisson.errors import ConfigurationError
from fracpoisson.extension import FractionalParams
from fracpoisson.solver import ProblemSpec, SolveContext


@pytest.fixture(scope="module")
def square_context():
    return SolveContext("square", 1)


def eigenfunction_rhs(x):
    return 2.0 * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])


def test_builtin_rhs_family():
    disc = solver.builtin_rhs("disc", 2.0)
    pts = np.array([[0.0, 0.0], [0.5, 0.0]])
    assert disc(pts)[0] == pytest.approx(1.0)
    assert disc(pts)[1] == pytest.approx(0.75**1.5)
    square = solver.builtin_rhs("square", 0.5)
    assert np.all(square(np.random.default_rng(0).random((10, 2))) == 1.0)
    with pytest.raises(ConfigurationError):
        solver.builtin_rhs("disc", 0.25)


def test_zero_rhs_gives_zero(square_context):
    p = FractionalParams(s=0.5, r=0.5)
    prob = ProblemSpec(domain_tag="square", params=p, k=1, level=3,
                       rhs=lambda x: np.zeros(x.shape[0]))
    sol = solver.solve(prob, context=square_context)
    assert np.all(sol.trace_coefficients == 0.0)
    assert sol.report.mean_cg_iterations == 0.0


def test_eigenfunction_exact_solution(square_context):
    # f is an exact Dirichlet eigenfunction, so u = (2 pi^2)^{-s} f
    p = FractionalParams(s=0.5, r=2.0)
    prob = ProblemSpec(domain_tag="square", params=p, k=1, level=6,
                       rhs=eigenfunction_rhs)
    sol = solver.solve(prob, context=square_context)
    sp = sol.space
    exact = (2 * math.pi**2) ** (-0.5) * eigenfunction_rhs(sp.dof_coords[sp.free_dofs])
    mass = fem.assemble_mass(sp)
    diff = sol.trace_coefficients - exact
    err = math.sqrt(diff @ (mass @ diff))
    assert err <= 1e-3


def test_s_sweep_matches_power(square_context):
    lam = 2 * math.pi**2
    ratios = []
    for s in (0.1, 0.5, 0.9):
        p = FractionalParams(s=s, r=2.0)
        prob = ProblemSpec(domain_tag="square", params=p, k=1, level=5,
                           rhs=eigenfunction_rhs)
        sol = solver.solve(prob, context=square_context)
        sp = sol.space
        mass = fem.assemble_mass(sp)
        f_nodal = eigenfunction_rhs(sp.dof_coords[sp.free_dofs])
        ratio = (sol.trace_coefficients @ (mass @ f_nodal)) / (f_nodal @ (mass @ f_nodal))
        ratios.append(ratio)
        assert ratio == pytest.approx(lam**-s, rel=2e-2)
    assert ratios[0] > ratios[1] > ratios[2]


def test_linearity(square_context):
    p = FractionalParams(s=0.25, r=0.5)
    base = solver.builtin_rhs("square", 0.5)
    prob1 = ProblemSpec(domain_tag="square", params=p, k=1, level=4, rhs=base)
    prob3 = ProblemSpec(domain_tag="square", params=p, k=1, level=4,
                        rhs=lambda x: 3.0 * base(x))
    u1 = solver.solve(prob1, context=square_context).trace_coefficients
    u3 = solver.solve(prob3, context=square_context).trace_coefficients
    assert np.allclose(u3, 3.0 * u1, rtol=1e-8, atol=1e-12)


def test_report_accounting(square_context):
    p = FractionalParams(s=0.25, r=2.0)
    prob = ProblemSpec(domain_tag="square", params=p, k=1, level=4)
    sol = solver.solve(prob, context=square_context)
    rep = sol.report
    assert rep.N == rep.n * rep.m_tilde
    assert rep.n == square_context.spaces[4].n
    assert rep.m_tilde == rep.spectrum.m_tilde
    assert len(rep.cg_iterations) == rep.m_tilde
    assert rep.mean_cg_iterations == pytest.approx(np.mean(rep.cg_iterations))
    assert rep.mean_cg_iterations <= 20.0
    assert int(np.sum(rep.spectrum.multiplicity)) == rep.M


def test_threaded_solve_matches_serial(square_context):
    p = FractionalParams(s=0.25, r=0.5)
    prob1 = ProblemSpec(domain_tag="square", params=p, k=1, level=5, threads=1)
    prob4 = ProblemSpec(domain_tag="square", params=p, k=1, level=5, threads=4)
    u1 = solver.solve(prob1, context=square_context).trace_coefficients
    u4 = solver.solve(prob4, context=square_context).trace_coefficients
    assert np.array_equal(u1, u4)


def test_cg_tolerance_insensitivity(square_context):
    # doubling the CG tolerance changes the error functional marginally
    p = FractionalParams(s=0.25, r=0.5)
    vals = []
    for tol in (1e-10, 1e-8):
        prob = ProblemSpec(domain_tag="square", params=p, k=1, level=5, cg_tol=tol)
        sol = solver.solve(prob, context=square_context)
        vals.append(solver.htrace_error_inner(prob, sol))
    assert vals[0] == pytest.approx(vals[1], rel=1e-3)


def test_htrace_inner_zero_for_zero_solution(square_context):
    p = FractionalParams(s=0.5, r=0.5)
    prob = ProblemSpec(domain_tag="square", params=p, k=1, level=3,
                       rhs=lambda x: np.zeros(x.shape[0]))
    sol = solver.solve(prob, context=square_context)
    assert solver.htrace_error_inner(prob, sol) == 0.0


def test_htrace_inner_is_mean_for_constant_rhs(square_context):
    # f = 1: <f, u> equals the integral of the trace over the domain
    p = FractionalParams(s=0.5, r=0.5)
    prob = ProblemSpec(domain_tag="square", params=p, k=1, level=4)
    sol = solver.solve(prob, context=square_context)
    inner = solver.htrace_error_inner(prob, sol)
    load = fem.assemble_load(sol.space, lambda x: np.ones(x.shape[0]), quad_order=8)
    assert inner == pytest.approx(float(load @ sol.trace_coefficients), rel=1e-12)


def test_quad_order_self_consistency_r2(square_context):
    p = FractionalParams(s=0.25, r=2.0)
    prob8 = ProblemSpec(domain_tag="square", params=p, k=1, level=5)
    sol = solver.solve(prob8, context=square_context)
    prob12 = ProblemSpec(domain_tag="square", params=p, k=1, level=5,
                         quad_order_error=12)
    i8 = solver.htrace_error_inner(prob8, sol)
    i12 = solver.htrace_error_inner(prob12, sol)
    assert i8 == pytest.approx(i12, rel=1e-7)
