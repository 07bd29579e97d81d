import numpy as np
import pytest

from casiga import benchmarks as bm
from casiga.assembly import Mesh
from casiga.splines import KnotVector, NurbsPatch

CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in CRITERIA:
        terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, title, passed, detail=""):
        line = "criterion %s %s: %s%s" % (number, "PASS" if passed else "FAIL", title,
                                          " (%s)" % detail if detail else "")
        CRITERIA.append(line)
        print(line)
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def unit_square(n=1):
    kv = KnotVector.uniform(1)
    g = np.array([0.0, 0.5, 1.0])
    cps = np.array([(x, y) for y in g for x in g])
    return NurbsPatch((kv, kv), cps).refine_uniform(int(np.log2(n)))


def affine_patch(n, matrix, shift=(0.0, 0.0)):
    """Unit square mapped by x -> matrix @ x + shift."""
    p = unit_square(n)
    return NurbsPatch(p.knot_vectors, p.control_points @ np.asarray(matrix).T + shift)


@pytest.fixture
def square_mesh():
    return Mesh(unit_square(2))


@pytest.fixture
def annulus_mesh():
    return Mesh(bm.plate_patch(4))


@pytest.fixture
def cook_mesh():
    return Mesh(bm.cook_patch(4))


def boundary_control_points(mesh):
    faces = ("xi0", "xi1", "eta0", "eta1", "zeta0", "zeta1")[: 2 * mesh.dim]
    return np.unique(np.concatenate([mesh.face_control_points(f) for f in faces]))


def patch_test_error(mesh, material, technology, A, b, rule):
    """Max interior error for u = A x + b with exact control values imposed on the boundary.

    Control values A Q + b represent the affine field exactly on any NURBS
    patch (partition of unity and isoparametric geometry).
    """
    from scipy.sparse.linalg import spsolve

    from casiga.assembly import stiffness_matrix

    d = mesh.dim
    K = stiffness_matrix(mesh, material, technology, rule).tocsr()
    exact = (mesh.patch.control_points @ np.asarray(A).T + b).ravel()
    bnd = boundary_control_points(mesh)
    fixed = (bnd[:, None] * d + np.arange(d)).ravel()
    free = np.setdiff1d(np.arange(mesh.n_dof), fixed)
    rhs = -K[free][:, fixed] @ exact[fixed]
    U_free = spsolve(K[free][:, free].tocsc(), rhs)
    return float(np.abs(U_free - exact[free]).max() / np.abs(exact).max())
