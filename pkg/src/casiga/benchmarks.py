"""Benchmark problems and convergence studies.

Three problems are provided, all on single quadratic NURBS patches with C1
interior continuity:

``cook``
    Cook's tapered panel (0,0)-(48,44)-(48,60)-(0,44), clamped on the left
    edge, shear traction q = 6.25 on the right edge (total load 100), plane
    strain, E = 240.565, nu = 0.4999. Quantity of interest: vertical
    displacement of the top-right corner.
``plate_hole``
    Quarter of an infinite plate with a circular hole of radius 1 under
    horizontal tension T_x = 10, truncated at radius 4 where the exact
    tractions are applied; E = 1e5, nu = 0.49999.
``block3d``
    Quarter block [0,1]**3 with u_z = 0 on the bottom, symmetry on x = 0 and
    y = 0, body force f_z = -10 (1 - |x|)(1 - |y|); E = 250, nu = 0.49999.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import Mesh, assemble, evaluate_solution
from .mechanics import Material, Technology, hydrostatic
from .quadrature import QuadratureRule
from .solver import solve_spd
from .splines import KnotVector, NurbsPatch, element_scaling, find_span

log = logging.getLogger(__name__)

BENCHMARKS = ("cook", "plate_hole", "block3d")

COOK_MATERIAL = Material(240.565, 0.4999)
COOK_LOAD = 6.25
COOK_REFERENCE = 8.075
PLATE_MATERIAL = Material(1.0e5, 0.49999)
PLATE_TENSION = 10.0
PLATE_HOLE_RADIUS = 1.0
PLATE_OUTER_RADIUS = 4.0
BLOCK_MATERIAL = Material(250.0, 0.49999)
BLOCK_ELEMENTS = 16


@dataclass
class Problem:
    name: str
    mesh: Mesh
    material: Material
    dirichlet: list
    tractions: list = field(default_factory=list)
    body_force: object = None

    @property
    def patch(self):
        return self.mesh.patch

    def assemble(self, technology, rule, backend=None):
        return assemble(self.mesh, self.material, technology, rule, body_force=self.body_force,
                        tractions=self.tractions, dirichlet=self.dirichlet, backend=backend)

    def refined(self):
        return Problem(self.name, Mesh(self.patch.refine_uniform()), self.material,
                       self.dirichlet, self.tractions, self.body_force)


def _bernstein_patch(corner_map, dim):
    """Single-element quadratic patch of a multilinear map, control points at 0, 1/2, 1."""
    kv = KnotVector([0, 0, 0, 1, 1, 1])
    g = np.array([0.0, 0.5, 1.0])
    grid = np.stack(np.meshgrid(*([g] * dim), indexing="ij"), axis=-1)
    grid = grid.transpose(tuple(range(dim))[::-1] + (dim,)).reshape(-1, dim)
    return NurbsPatch((kv,) * dim, corner_map(grid))


def _refine_to(patch, n):
    if n < 1 or n & (n - 1):
        raise ValueError("elements per direction must be a power of two, got %r" % (n,))
    return patch.refine_uniform(int(np.log2(n)))


def cook_patch(n=1):
    corners = np.array([[0.0, 0.0], [48.0, 44.0], [0.0, 44.0], [48.0, 60.0]])

    def bilinear(s):
        u, v = s[:, :1], s[:, 1:]
        return ((1 - u) * (1 - v) * corners[0] + u * (1 - v) * corners[1]
                + (1 - u) * v * corners[2] + u * v * corners[3])

    return _refine_to(_bernstein_patch(bilinear, 2), n)


def build_cook_patch(n=2):
    mesh = Mesh(cook_patch(n))
    return Problem("cook", mesh, COOK_MATERIAL, dirichlet=[("xi0", (0, 1))],
                   tractions=[("xi1", lambda x, nrm: np.broadcast_to([0.0, COOK_LOAD], x.shape))])


def cook_tip_displacement(problem, U):
    """Vertical displacement of the top-right corner (interpolatory control point)."""
    return float(U.reshape(-1, 2)[-1, 1])


def plate_patch(n=1, R=PLATE_HOLE_RADIUS, R_out=PLATE_OUTER_RADIUS):
    """Exact quarter annulus; direction 0 radial, direction 1 from theta = 0 to pi/2."""
    kv = KnotVector([0, 0, 0, 1, 1, 1])
    s = np.sqrt(0.5)
    radii = [R, 0.5 * (R + R_out), R_out]
    cps, ws = [], []
    for (cx, cy), w in [((1.0, 0.0), 1.0), ((1.0, 1.0), s), ((0.0, 1.0), 1.0)]:
        for r in radii:
            cps.append((r * cx, r * cy))
            ws.append(w)
    return _refine_to(NurbsPatch((kv, kv), np.array(cps), np.array(ws)), n)


def exact_plate_solution(x, y, Tx=PLATE_TENSION, R=PLATE_HOLE_RADIUS, nu=PLATE_MATERIAL.nu,
                         mu=PLATE_MATERIAL.mu):
    """Plane-strain displacements and stresses around a hole under x-tension.

    Returns ``(u_x, u_y, s_xx, s_yy, s_xy)``; theta is measured from the x axis.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    if np.any(r < R * (1.0 - 1e-12)):
        raise ValueError("point inside the hole (r < R)")
    th = np.arctan2(y, x)
    c1, c2, c3, c4 = (np.cos(k * th) for k in (1, 2, 3, 4))
    s1, s2, s3, s4 = (np.sin(k * th) for k in (1, 2, 3, 4))
    a = R / r
    k = Tx * R / (8.0 * mu)
    ux = k * ((4 - 4 * nu) / a * c1 + 2 * a * ((4 - 4 * nu) * c1 + c3) - 2 * a ** 3 * c3)
    uy = k * ((-4 * nu) / a * s1 + 2 * a * ((4 * nu - 2) * s1 + s3) - 2 * a ** 3 * s3)
    sxx = Tx * (1 - a ** 2 * (1.5 * c2 + c4) + 1.5 * a ** 4 * c4)
    syy = Tx * (-a ** 2 * (0.5 * c2 - c4) - 1.5 * a ** 4 * c4)
    sxy = Tx * (-a ** 2 * (0.5 * s2 + s4) + 1.5 * a ** 4 * s4)
    return ux, uy, sxx, syy, sxy


def plate_exact_fields(x, material=PLATE_MATERIAL):
    """Exact (u, sigma) at points (..., 2) as (..., 2) and (..., 2, 2) arrays."""
    ux, uy, sxx, syy, sxy = exact_plate_solution(x[..., 0], x[..., 1], nu=material.nu,
                                                 mu=material.mu)
    u = np.stack([ux, uy], axis=-1)
    sig = np.stack([np.stack([sxx, sxy], -1), np.stack([sxy, syy], -1)], -2)
    return u, sig


def build_plate_hole_patch(n=2, material=PLATE_MATERIAL):
    mesh = Mesh(plate_patch(n))

    def traction(x, nrm):
        _, sig = plate_exact_fields(x, material)
        return np.einsum("...ij,...j->...i", sig, nrm)

    return Problem("plate_hole", mesh, material,
                   dirichlet=[("eta0", (1,)), ("eta1", (0,))],
                   tractions=[("xi1", traction)])


def block_patch(n=BLOCK_ELEMENTS):
    return _refine_to(_bernstein_patch(lambda s: s.copy(), 3), n)


def block_body_force(x):
    f = np.zeros_like(x)
    f[..., 2] = -10.0 * (1.0 - np.abs(x[..., 0])) * (1.0 - np.abs(x[..., 1]))
    return f


def build_block_patch(n=BLOCK_ELEMENTS):
    mesh = Mesh(block_patch(n))
    return Problem("block3d", mesh, BLOCK_MATERIAL,
                   dirichlet=[("zeta0", (2,)), ("xi0", (0,)), ("eta0", (1,))],
                   body_force=block_body_force)


BUILDERS = {"cook": build_cook_patch, "plate_hole": build_plate_hole_patch,
            "block3d": build_block_patch}


def error_l2(problem, technology, U, exact=plate_exact_fields, points_per_direction=3):
    """Relative L2 errors (e_u, e_sigma) against exact in-plane fields.

    The integrals use a Gauss rule with ``points_per_direction`` points;
    convergence studies pass the rule that built the stiffness matrix.
    """
    if exact is None:
        raise ValueError("no exact solution available for %s" % problem.name)
    mesh = problem.mesh
    rule = QuadratureRule(points_per_direction, mesh.dim)
    acc = np.zeros(4)
    for batch in mesh.batches(mesh.nloc * mesh.dim):
        fs = evaluate_solution(mesh, problem.material, technology, U, batch,
                               [rule.points_1d] * mesh.dim)
        detJ = mesh.evaluate(batch, rule=rule, grad=False).detJ
        w = rule.weights * element_scaling(mesh.patch, mesh.elements[batch])[:, None] * detJ
        u, sig = exact(fs.x)
        acc += [np.sum(w * ((fs.u - u) ** 2).sum(-1)), np.sum(w * (u ** 2).sum(-1)),
                np.sum(w * ((fs.stress[..., :2, :2] - sig) ** 2).sum((-1, -2))),
                np.sum(w * (sig ** 2).sum((-1, -2)))]
    return float(np.sqrt(acc[0] / acc[1])), float(np.sqrt(acc[2] / acc[3]))


def sample_grid(problem, technology, U, per_element=3):
    """Fields on a structured grid with ``per_element`` points per element edge.

    Returns a dict of arrays shaped ``grid_shape + (...)`` where ``grid_shape``
    lists the point counts with the last parametric direction first (so the
    first direction varies fastest when flattened).
    """
    mesh = problem.mesh
    d = mesh.dim
    k = per_element
    if k < 2:
        raise ValueError("need at least 2 samples per element edge")
    nel = mesh.patch.elements_per_direction
    dims = tuple(e * (k - 1) + 1 for e in nel)
    out = {"x": np.zeros(dims[::-1] + (d,)), "u": np.zeros(dims[::-1] + (d,)),
           "stress": np.zeros(dims[::-1] + (d, d))}
    pts = np.linspace(-1.0, 1.0, k)
    local = np.indices((k,) * d).reshape(d, -1)[::-1]  # local[j] = p_j, p_0 fastest
    for batch in mesh.batches(mesh.nloc * d * 4):
        fs = evaluate_solution(mesh, problem.material, technology, U, batch, [pts] * d)
        gidx = [mesh.elements[batch, j][:, None] * (k - 1) + local[j][None, :] for j in range(d)]
        index = tuple(gidx[::-1])
        out["x"][index] = fs.x
        out["u"][index] = fs.u
        out["stress"][index] = fs.stress
    nu = problem.material.nu if d == 2 else None
    out["hydrostatic"] = hydrostatic(out["stress"], nu)
    return out


def sample_line(problem, technology, U, direction, fixed, per_element=10):
    """Fields along the parametric line through ``fixed`` in ``direction``.

    ``fixed`` gives the parametric coordinates of the other directions (the
    entry at ``direction`` is ignored). Returns a FieldSample with leading
    shape (n_samples,).
    """
    mesh = problem.mesh
    patch = mesh.patch
    d = mesh.dim
    nel = patch.elements_per_direction[direction]
    elems = np.zeros((nel, d), dtype=np.intp)
    points = []
    for j, kv in enumerate(patch.knot_vectors):
        if j == direction:
            elems[:, j] = np.arange(nel)
            points.append(np.linspace(-1.0, 1.0, per_element))
            continue
        e = find_span(kv, fixed[j]) - kv.degree
        b = kv.breaks
        elems[:, j] = e
        points.append([2.0 * (fixed[j] - b[e]) / (b[e + 1] - b[e]) - 1.0])
    strides = np.cumprod((1,) + patch.elements_per_direction[:-1])
    ids = (elems * strides).sum(axis=1)
    fs = evaluate_solution(mesh, problem.material, technology, U, ids, points)
    for name in ("x", "u", "strain", "stress"):
        v = getattr(fs, name)
        setattr(fs, name, v.reshape((-1,) + v.shape[2:]))
    return fs


def oscillation_indicator(samples, scale=None):
    """Total variation of a sampled scalar, normalized by ``scale``.

    ``scale`` defaults to max |samples|; pass a reference maximum to compare
    technologies on a common footing. Returns 0 for identically zero input.
    """
    s = np.asarray(samples, dtype=float).ravel()
    tv = float(np.abs(np.diff(s)).sum())
    if scale is None:
        scale = float(np.abs(s).max()) if s.size else 0.0
    if scale == 0.0:
        return 0.0
    return tv / scale


@dataclass
class BenchmarkCase:
    name: str
    technology: Technology = Technology.CS
    quad: int = 3
    levels: int = 8
    base: int = 2

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise ValueError("unknown benchmark %r (expected one of %s)" % (self.name, BENCHMARKS))
        self.technology = Technology.parse(self.technology)
        QuadratureRule(self.quad, 2)
        if self.levels < 1:
            raise ValueError("need at least one refinement level")
        if self.name == "block3d":
            self.base = BLOCK_ELEMENTS

    def problems(self):
        problem = BUILDERS[self.name](self.base)
        for level in range(self.levels):
            if level:
                problem = problem.refined()
            yield problem


@dataclass
class LevelResult:
    level: int
    elements: int
    n_dof: int
    qoi: float = float("nan")
    e_u: float = float("nan")
    e_sigma: float = float("nan")
    rate_u: float = float("nan")
    rate_sigma: float = float("nan")
    residual: float = float("nan")
    seconds: float = float("nan")


@dataclass
class ConvergenceReport:
    case: BenchmarkCase
    rows: list = field(default_factory=list)
    problem: Problem = None
    U: np.ndarray = None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def solve_problem(problem, technology, quad, backend=None):
    rule = QuadratureRule(quad, problem.mesh.dim)
    system = problem.assemble(technology, rule, backend)
    return solve_spd(system)


def run_convergence(case, problems=None, keep_solution=True, on_level=None):
    """Solve every refinement level; rates are log2(e_coarse / e_fine).

    ``on_level(problem, U, level)`` is called after each solve.
    """
    report = ConvergenceReport(case)
    problems = case.problems() if problems is None else problems
    for level, problem in enumerate(problems):
        t0 = time.perf_counter()
        sol = solve_problem(problem, case.technology, case.quad)
        row = LevelResult(level + 1, problem.patch.elements_per_direction[0],
                          problem.mesh.n_dof, residual=sol.residual)
        if case.name == "cook":
            row.qoi = cook_tip_displacement(problem, sol.U)
        elif case.name == "plate_hole":
            row.e_u, row.e_sigma = error_l2(problem, case.technology, sol.U,
                                            points_per_direction=case.quad)
        if report.rows:
            prev = report.rows[-1]
            with np.errstate(divide="ignore", invalid="ignore"):
                row.rate_u = float(np.log2(prev.e_u / row.e_u))
                row.rate_sigma = float(np.log2(prev.e_sigma / row.e_sigma))
        row.seconds = time.perf_counter() - t0
        log.info("%s %s q%d level %d: %s", case.name, case.technology.value, case.quad,
                 row.level, row)
        report.rows.append(row)
        if on_level is not None:
            on_level(problem, sol.U, row.level)
        if keep_solution:
            report.problem, report.U = problem, sol.U
    return report


def run_study(name, variants, levels=8, on_level=None):
    """Convergence reports for several ``(technology, quad)`` variants on shared meshes.

    Each refinement level is built once and solved with every variant, so the
    per-mesh tables (sparsity structure, corner gradients) are reused.
    ``on_level(problem, {variant: U}, level)`` sees every level's solutions.
    Returns ``{variant: ConvergenceReport}``.
    """
    cases = {v: BenchmarkCase(name, v[0], v[1], levels) for v in variants}
    reports = {v: ConvergenceReport(c) for v, c in cases.items()}
    problems = next(iter(cases.values())).problems()
    for problem in problems:
        solutions = {}
        for v, case in cases.items():
            single = run_convergence(case, [problem])
            row = single.rows[0]
            row.level = len(reports[v].rows) + 1
            if reports[v].rows:
                prev = reports[v].rows[-1]
                with np.errstate(divide="ignore", invalid="ignore"):
                    row.rate_u = float(np.log2(prev.e_u / row.e_u))
                    row.rate_sigma = float(np.log2(prev.e_sigma / row.e_sigma))
            reports[v].rows.append(row)
            solutions[v] = single.U
        if on_level is not None:
            on_level(problem, solutions, len(reports[variants[0]].rows))
    return reports
