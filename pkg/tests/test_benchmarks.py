import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from numpy.testing import assert_allclose

from casiga import benchmarks as bm
from casiga.assembly import evaluate_solution
from casiga.mechanics import Material, stress
from casiga.quadrature import QuadratureRule
from casiga.solver import solve_spd
from casiga.splines import element_scaling


# ---------------------------------------------------------------- geometries and loads

def test_cook_corners_and_net():
    problem = bm.build_cook_patch(2)
    patch = problem.patch
    assert problem.mesh.n_el == 4
    assert patch.shape == (4, 4)
    corners = patch([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert_allclose(corners, [[0, 0], [48, 44], [0, 44], [48, 60]], atol=1e-13)
    assert np.all(patch.weights == 1.0)


def test_cook_total_load():
    F = bm.build_cook_patch(2).assemble("cs", QuadratureRule(3, 2)).F
    assert_allclose(F[1::2].sum(), 100.0, rtol=1e-12)


def test_cook_tip_is_interpolatory_corner():
    problem = bm.build_cook_patch(4)
    U = np.random.default_rng(0).standard_normal(problem.mesh.n_dof)
    fs = evaluate_solution(problem.mesh, problem.material, "cs", U,
                           [problem.mesh.n_el - 1], [[1.0], [1.0]])
    assert_allclose(fs.x[0, 0], [48.0, 60.0], atol=1e-13)
    assert_allclose(fs.u[0, 0, 1], bm.cook_tip_displacement(problem, U), rtol=1e-14)


def test_plate_geometry_exact():
    patch = bm.build_plate_hole_patch(2).patch
    s = np.linspace(0, 1, 100)
    for radial, radius in ((0.0, 1.0), (1.0, 4.0)):
        x = patch(np.column_stack([np.full(100, radial), s]))
        assert_allclose(np.hypot(*x.T), radius, rtol=0, atol=1e-13)
    base = bm.plate_patch(1)
    assert_allclose(base.weights.reshape(3, 3)[:, 0], [1.0, np.sqrt(0.5), 1.0])


def test_plate_refined_seven_times():
    patch = bm.plate_patch(2).refine_uniform(7)
    assert patch.elements_per_direction == (256, 256)


def test_plate_constraints_and_traction_face():
    problem = bm.build_plate_hole_patch(2)
    mesh = problem.mesh
    x = mesh.patch.control_points
    fixed = problem.assemble("cs", QuadratureRule(2, 2)).dirichlet
    cps, comps = fixed // 2, fixed % 2
    # u_y = 0 on y = 0, u_x = 0 on x = 0
    assert np.all(np.abs(x[cps[comps == 1], 1]) < 1e-14)
    assert np.all(np.abs(x[cps[comps == 0], 0]) < 1e-14)
    assert problem.tractions[0][0] == "xi1"


def test_plate_outer_traction_at_theta_zero():
    _, h = bm.build_plate_hole_patch(2).tractions[0]
    x = np.array([[4.0, 0.0]])
    _, sig = bm.plate_exact_fields(x)
    assert_allclose(h(x, np.array([[1.0, 0.0]])), sig[:, :, 0], rtol=1e-15)


def test_block_geometry_and_loads():
    problem = bm.build_block_patch(2)
    assert problem.patch.elements_per_direction == (2, 2, 2)
    F = problem.assemble("cs", QuadratureRule(3, 3)).F
    assert_allclose(F[2::3].sum(), -2.5, rtol=1e-13)
    assert F[0::3].sum() == 0.0
    assert_allclose(bm.block_body_force(np.array([[0.0, 0.0, 0.3]]))[0], [0, 0, -10.0])
    assert bm.block_body_force(np.array([[1.0, 0.4, 0.7]]))[0, 2] == 0.0
    assert bm.build_block_patch().patch.elements_per_direction == (16, 16, 16)


def test_refinement_must_be_power_of_two():
    with pytest.raises(ValueError):
        bm.cook_patch(3)


# ---------------------------------------------------------------- exact plate solution

def test_exact_peak_stress():
    sxx = bm.exact_plate_solution(0.0, 1.0)[2]
    assert_allclose(sxx, 30.0, rtol=1e-14)


def test_hole_is_traction_free():
    for theta in np.linspace(0, np.pi / 2, 7):
        n = np.array([np.cos(theta), np.sin(theta)])
        _, sig = bm.plate_exact_fields(n[None])
        assert np.abs(sig[0] @ n).max() < 1e-13


def test_far_field_is_uniaxial_tension():
    _, _, sxx, syy, sxy = bm.exact_plate_solution(1e4, 2e4)
    assert_allclose([sxx, syy, sxy], [10.0, 0.0, 0.0], atol=1e-6)


def test_point_inside_hole_rejected():
    with pytest.raises(ValueError):
        bm.exact_plate_solution(0.5, 0.5)


def test_exact_stress_in_equilibrium(rng):
    h = 1e-5
    r = rng.uniform(1.1, 3.9, 50)
    t = rng.uniform(0.05, np.pi / 2 - 0.05, 50)
    x, y = r * np.cos(t), r * np.sin(t)
    s = lambda xx, yy: np.array(bm.exact_plate_solution(xx, yy)[2:])
    dx = (s(x + h, y) - s(x - h, y)) / (2 * h)
    dy = (s(x, y + h) - s(x, y - h)) / (2 * h)
    assert np.abs(dx[0] + dy[2]).max() < 1e-6
    assert np.abs(dx[2] + dy[1]).max() < 1e-6


def test_exact_displacement_consistent_with_exact_stress(rng):
    """Plane-strain Hooke's law applied to finite-difference strains of u reproduces sigma."""
    m = Material(1e5, 0.3)
    h = 1e-6
    for _ in range(10):
        r, t = rng.uniform(1.2, 3.8), rng.uniform(0.1, 1.4)
        x, y = r * np.cos(t), r * np.sin(t)
        u = lambda xx, yy: np.array(bm.exact_plate_solution(xx, yy, nu=m.nu, mu=m.mu)[:2])
        grad = np.column_stack([(u(x + h, y) - u(x - h, y)) / (2 * h),
                                (u(x, y + h) - u(x, y - h)) / (2 * h)])
        sig = stress("cs", m, 0.5 * (grad + grad.T))
        _, _, sxx, syy, sxy = bm.exact_plate_solution(x, y, nu=m.nu, mu=m.mu)
        assert_allclose(sig, [[sxx, sxy], [sxy, syy]], atol=1e-5 * 30)


# ---------------------------------------------------------------- error norms

def test_error_zero_for_field_in_discrete_space(rng):
    problem = bm.build_plate_hole_patch(4)
    m = problem.material
    A, b = rng.standard_normal((2, 2)), rng.standard_normal(2)
    U = (problem.patch.control_points @ A.T + b).ravel()
    eps = 0.5 * (A + A.T)

    def exact(x):
        return x @ A.T + b, np.broadcast_to(stress("cs", m, eps), x.shape[:-1] + (2, 2))

    e_u, e_s = bm.error_l2(problem, "cs", U, exact)
    assert e_u < 1e-13 and e_s < 1e-10


def test_error_of_doubled_field_is_one(rng):
    problem = bm.build_plate_hole_patch(2)
    A, b = rng.standard_normal((2, 2)), rng.standard_normal(2)
    U = 2 * (problem.patch.control_points @ A.T + b).ravel()
    sig = stress("cs", problem.material, 0.5 * (A + A.T))

    def exact(x):
        return x @ A.T + b, np.broadcast_to(sig, x.shape[:-1] + (2, 2))

    assert_allclose(bm.error_l2(problem, "cs", U, exact), [1.0, 1.0], rtol=1e-12)


def test_error_requires_exact_solution():
    problem = bm.build_cook_patch(2)
    with pytest.raises(ValueError):
        bm.error_l2(problem, "cs", np.zeros(problem.mesh.n_dof), exact=None)


def over_integrated_errors(problem, technology, U, n=10):
    mesh = problem.mesh
    x1, w1 = leggauss(n)
    w2 = np.outer(w1, w1).ravel()
    acc = np.zeros(4)
    for e in range(mesh.n_el):
        fs = evaluate_solution(mesh, problem.material, technology, U, [e], [x1, x1])
        detJ = mesh.evaluate([e], points=[x1, x1], grad=False).detJ[0]
        w = w2 * detJ * element_scaling(mesh.patch, mesh.elements[[e]])[0]
        u, sig = bm.plate_exact_fields(fs.x[0])
        acc += [w @ ((fs.u[0] - u) ** 2).sum(-1), w @ (u ** 2).sum(-1),
                w @ ((fs.stress[0] - sig) ** 2).sum((-1, -2)), w @ (sig ** 2).sum((-1, -2))]
    return np.sqrt(acc[[0, 2]] / acc[[1, 3]])


def test_error_matches_over_integration_oracle():
    # Known failure: on 2x2 elements the 3-point error rule is itself off by
    # 8e-4 (u) and 41% (sigma) from the converged 10-point value.
    problem = bm.build_plate_hole_patch(2)
    U = bm.solve_problem(problem, "cs", 3).U
    assert_allclose(bm.error_l2(problem, "cs", U), over_integrated_errors(problem, "cs", U),
                    rtol=1e-4)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("tech", ["cs", "cas2"])
def test_error_integral_matches_oracle_with_same_rule(tech, n):
    problem = bm.build_plate_hole_patch(2)
    U = bm.solve_problem(problem, tech, 2).U
    assert_allclose(bm.error_l2(problem, tech, U, points_per_direction=n),
                    over_integrated_errors(problem, tech, U, n), rtol=1e-10)  # lambda ~ 1.7e9


# ---------------------------------------------------------------- oscillation indicator

def test_indicator_examples():
    assert bm.oscillation_indicator(np.full(30, 4.2)) == 0.0
    s = np.array([1.0, 2.0, 2.5, 7.0])
    assert_allclose(bm.oscillation_indicator(s), 6.0 / 7.0)
    assert bm.oscillation_indicator(np.zeros(5)) == 0.0
    assert_allclose(bm.oscillation_indicator([0.0, 1.0, 0.0, 1.0], scale=2.0), 1.5)


def plate_hole_line_indicators(n=16):
    """sigma_h total variation along the hole edge, normalized by the CAS1 maximum."""
    problem = bm.build_plate_hole_patch(n)
    nu = problem.material.nu
    out = {}
    for tech in ("cs", "cas1"):
        U = bm.solve_problem(problem, tech, 3).U
        fs = bm.sample_line(problem, tech, U, direction=1, fixed=(0.0, 0.0))
        out[tech] = bm.hydrostatic(fs.stress, nu)
    scale = np.abs(out["cas1"]).max()
    return {t: bm.oscillation_indicator(s, scale) for t, s in out.items()}


def test_plate_indicator_cs_exceeds_cas1():
    ind = plate_hole_line_indicators()
    assert ind["cs"] > ind["cas1"]


def test_sample_line_points_lie_on_hole():
    problem = bm.build_plate_hole_patch(4)
    fs = bm.sample_line(problem, "cs", np.zeros(problem.mesh.n_dof), 1, (0.0, 0.0), per_element=5)
    assert fs.x.shape == (20, 2)
    assert_allclose(np.hypot(*fs.x.T), 1.0, atol=1e-13)


def test_sample_grid_shape_and_ordering():
    problem = bm.build_cook_patch(2)
    out = bm.sample_grid(problem, "cas2", np.zeros(problem.mesh.n_dof), per_element=3)
    assert out["x"].shape == (5, 5, 2)
    assert_allclose(out["x"][0, -1], [48.0, 44.0], atol=1e-13)  # first direction fastest
    assert_allclose(out["x"][-1, 0], [0.0, 44.0], atol=1e-13)
    assert out["hydrostatic"].shape == (5, 5)


# ---------------------------------------------------------------- drivers

def test_run_convergence_rows_and_rates():
    report = bm.run_convergence(bm.BenchmarkCase("plate_hole", "cas1", 3, levels=3))
    assert [r.elements for r in report.rows] == [2, 4, 8]
    assert np.isnan(report.rows[0].rate_u)
    e = report.column("e_u")
    assert_allclose(report.rows[1].rate_u, np.log2(e[0] / e[1]), rtol=1e-14)
    assert report.U.size == report.problem.mesh.n_dof


def test_run_study_matches_independent_runs():
    variants = [("cs", 2), ("cas2", 3)]
    study = bm.run_study("cook", variants, levels=2)
    for tech, q in variants:
        alone = bm.run_convergence(bm.BenchmarkCase("cook", tech, q, levels=2))
        assert np.array_equal(study[(tech, q)].column("qoi"), alone.column("qoi"))


def test_cook_cas_exceeds_cs_on_coarse_meshes():
    study = bm.run_study("cook", [("cs", 3), ("cas1", 3), ("cas2", 3)], levels=4)
    cs = study[("cs", 3)].column("qoi")
    for tech in ("cas1", "cas2"):
        assert np.all(study[(tech, 3)].column("qoi") > cs)


def test_benchmark_case_validation():
    with pytest.raises(ValueError):
        bm.BenchmarkCase("bridge")
    with pytest.raises(ValueError):
        bm.BenchmarkCase("cook", quad=4)
    with pytest.raises(ValueError):
        bm.BenchmarkCase("cook", "bbar")
    assert bm.BenchmarkCase("block3d").base == 16


def test_block_small_mesh_solves():
    problem = bm.build_block_patch(2)
    sol = solve_spd(problem.assemble("cas2", QuadratureRule(3, 3)))
    uz = sol.U[2::3]
    assert uz.min() < 0 and np.abs(uz).max() == -uz.min()
