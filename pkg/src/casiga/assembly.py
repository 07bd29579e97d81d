"""Element stiffness (CS, CAS1, CAS2), loads and global sparse assembly.

Unknowns are interleaved per control point: global dof ``A*d + i`` for
component i of control variable A. Element-local dofs are ``a*d + i`` with the
local function index a ordered as in :mod:`casiga.splines`.

The assumed strains of CAS elements interpolate the compatible strains at the
element corners with multilinear Lagrange polynomials written in parent
coordinates. Since the assumed strain is linear in the nodal unknowns, only
the corner values of the physical basis gradients are needed; they are
tabulated once per mesh (:class:`ElementCornerData`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .kernels import get_kernel
from .mechanics import Technology, stress
from .splines import element_scaling, evaluate_elements

FACE_NAMES = ("xi0", "xi1", "eta0", "eta1", "zeta0", "zeta1")

# entries of one (nE, m, m) element-matrix batch
_BATCH_ENTRIES = 6_000_000


def parse_face(face, dim):
    """``"eta1"`` or ``(1, 1)`` -> (direction, side)."""
    if isinstance(face, str):
        if face not in FACE_NAMES:
            raise ValueError("unknown face %r; expected one of %s" % (face, FACE_NAMES[: 2 * dim]))
        k = FACE_NAMES.index(face)
        direction, side = divmod(k, 2)
    else:
        direction, side = face
    if not (0 <= direction < dim and side in (0, 1)):
        raise ValueError("face %r is not a boundary face of a %d-D patch" % (face, dim))
    return int(direction), int(side)


def lagrange_corner_weights(xi_hat):
    """Multilinear corner Lagrange polynomials at parent points (m, d) -> (m, 2**d).

    Corner l has coordinate -1 or +1 in direction k according to bit k of l.
    """
    xi_hat = np.atleast_2d(np.asarray(xi_hat, dtype=float))
    m, d = xi_hat.shape
    L = np.ones((m, 2 ** d))
    for l in range(2 ** d):
        for k in range(d):
            s = 1.0 if (l >> k) & 1 else -1.0
            L[:, l] *= 0.5 * (1.0 + s * xi_hat[:, k])
    return L


def corner_interpolate(corner_values, xi_hat):
    """Multilinear interpolation of 2**d corner values (leading axis) at parent points."""
    corner_values = np.asarray(corner_values, dtype=float)
    xi_hat = np.atleast_2d(np.asarray(xi_hat, dtype=float))
    d = xi_hat.shape[1]
    if corner_values.shape[0] != 2 ** d:
        raise ValueError("expected %d corner values, got %d" % (2 ** d, corner_values.shape[0]))
    return np.tensordot(lagrange_corner_weights(xi_hat), corner_values, axes=(1, 0))


@dataclass(frozen=True)
class ElementCornerData:
    """Physical basis gradients at element corners.

    ``gradients`` (nel, 2**d, nloc, d) and ``points`` (nel, 2**d, d).
    """

    gradients: np.ndarray
    points: np.ndarray


class Mesh:
    """Elements of a single NURBS patch with connectivity."""

    def __init__(self, patch):
        self.patch = patch
        self.dim = patch.dim
        nel = patch.elements_per_direction
        idx = np.indices(nel[::-1]).reshape(self.dim, -1)[::-1].T
        self.elements = np.ascontiguousarray(idx)  # first direction fastest
        self.n_el = self.elements.shape[0]
        self.nloc = 3 ** self.dim
        self.n_dof = patch.n_cp * self.dim

    @cached_property
    def conn(self):
        """Global indices of the local functions of each element (IEN array)."""
        p = self.patch
        strides = np.cumprod((1,) + p.shape[:-1])
        loc = np.indices((3,) * self.dim).reshape(self.dim, -1)[::-1]
        first = (self.elements * strides).sum(axis=1)  # spans - degree == element index
        return first[:, None] + (strides[:, None] * loc).sum(axis=0)[None, :]

    def dofs(self, elements=slice(None)):
        c = self.conn[elements]
        return (c[:, :, None] * self.dim + np.arange(self.dim)).reshape(c.shape[0], -1)

    def evaluate(self, elements, points=None, rule=None, grad=True):
        """Basis data of element ids on a parent tensor grid (``points``) or a rule."""
        if points is None:
            points = [rule.points_1d] * self.dim
        return evaluate_elements(self.patch, self.elements[elements], points, grad=grad)

    def batches(self, m):
        step = max(1, _BATCH_ENTRIES // (m * m))
        for start in range(0, self.n_el, step):
            yield np.arange(start, min(start + step, self.n_el))

    @cached_property
    def corner_data(self):
        """Corner gradient tables, evaluated once per knot-line vertex and shared.

        A vertex is evaluated in one adjacent element (its owner). A local
        function of a neighbouring element that the owner does not support has
        zero value and gradient there (C1 continuity), so the gather below is
        exact and shared corners are bitwise identical across elements.
        """
        d = self.dim
        nel = np.array(self.patch.elements_per_direction)
        nvert = tuple(nel + 1)
        verts = np.indices(nvert[::-1]).reshape(d, -1)[::-1].T  # first direction fastest
        owner = np.minimum(verts, nel - 1)
        parent = np.where(verts < nel, -1.0, 1.0)
        vgrad = np.empty((verts.shape[0], self.nloc, d))
        vx = np.empty((verts.shape[0], d))
        step = max(1, _BATCH_ENTRIES // (self.nloc * d) ** 2)
        for start in range(0, verts.shape[0], step):
            batch = slice(start, start + step)
            pd = evaluate_elements(self.patch, owner[batch],
                                   [parent[batch, k : k + 1] for k in range(d)])
            vgrad[batch] = pd.dNdx[:, 0]
            vx[batch] = pd.x[:, 0]
        vgrad = np.concatenate([vgrad, np.zeros((1, self.nloc, d))])

        bits = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1  # (corner, direction)
        loc = np.indices((3,) * d).reshape(d, -1)[::-1].T  # (a, direction)
        vstride = np.cumprod((1,) + nvert[:-1])
        lstride = 3 ** np.arange(d)
        corner_v = self.elements[:, None, :] + bits[None]  # (nel, corner, d)
        vid = corner_v @ vstride
        shift = np.minimum(corner_v, nel - 1) - self.elements[:, None, :]  # owner - element
        b = loc[None, None] - shift[:, :, None, :]  # owner-local multi-index (nel, corner, a, d)
        valid = (b >= 0).all(axis=-1)
        rows = np.where(valid, vid[:, :, None], verts.shape[0])  # last row of vgrad is zero
        cols = np.where(valid, b @ lstride, 0)
        return ElementCornerData(vgrad[rows, cols], vx[vid])

    def face_elements(self, face):
        k, side = parse_face(face, self.dim)
        last = self.patch.elements_per_direction[k] - 1
        return np.flatnonzero(self.elements[:, k] == (last if side else 0))

    def face_control_points(self, face):
        k, side = parse_face(face, self.dim)
        shape = self.patch.shape
        idx = np.indices(shape[::-1]).reshape(self.dim, -1)[::-1]
        return np.flatnonzero(idx[k] == (shape[k] - 1 if side else 0))

    @cached_property
    def csr_structure(self):
        """CSR index arrays of K and the position of every element entry in them."""
        m = self.nloc * self.dim
        dofs = self.dofs()
        n = self.n_dof
        keys = (dofs[:, :, None].astype(np.int64) * n + dofs[:, None, :]).ravel()
        uniq, scatter = np.unique(keys, return_inverse=True)
        rows = (uniq // n).astype(np.int32)
        indices = (uniq % n).astype(np.int32)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return indptr, indices, scatter.astype(np.int32).reshape(self.n_el, m * m)


def _coefficients(technology, material, d):
    """(c_interp, c_comp) multiplying the interpolated and compatible div-div terms."""
    tech = Technology.parse(technology)
    lam, mu = material.lam, material.mu
    if tech is Technology.CS:
        return 0.0, lam
    if tech is Technology.CAS1:
        return lam, 0.0
    return lam + 2.0 * mu / d, -2.0 * mu / d


def interpolated_gradients(mesh, elements, parent_points):
    """Corner-interpolated physical gradients on a parent grid: (nE, nP, nloc, d)."""
    grid = np.stack(np.meshgrid(*parent_points, indexing="ij"), axis=-1)
    grid = grid.transpose(tuple(range(mesh.dim))[::-1] + (mesh.dim,)).reshape(-1, mesh.dim)
    L = lagrange_corner_weights(grid)
    return np.einsum("pl,elad->epad", L, mesh.corner_data.gradients[elements])


def element_stiffness(mesh, material, technology, rule, elements=None, backend=None):
    """Element stiffness matrices (nE, 3**d*d, 3**d*d) for the given element ids."""
    tech = Technology.parse(technology)
    elements = np.arange(mesh.n_el) if elements is None else np.atleast_1d(elements)
    pd = mesh.evaluate(elements, rule=rule)
    wq = rule.weights * element_scaling(mesh.patch, mesh.elements[elements])[:, None] * pd.detJ
    c_interp, c_comp = _coefficients(tech, material, mesh.dim)
    Gt = None
    if tech is not Technology.CS:
        Gt = interpolated_gradients(mesh, elements, [rule.points_1d] * mesh.dim)
    return get_kernel(backend)(pd.dNdx, Gt, wq, c_interp, c_comp, material.mu)


def element_stiffness_cs(mesh, element, material, rule):
    return element_stiffness(mesh, material, Technology.CS, rule, element)[0]


def element_stiffness_cas1(mesh, element, material, rule):
    return element_stiffness(mesh, material, Technology.CAS1, rule, element)[0]


def element_stiffness_cas2(mesh, element, material, rule):
    return element_stiffness(mesh, material, Technology.CAS2, rule, element)[0]


def stiffness_matrix(mesh, material, technology, rule, backend=None):
    """Global stiffness (CSR) without boundary conditions."""
    indptr, indices, scatter = mesh.csr_structure
    m = mesh.nloc * mesh.dim
    data = np.zeros(indices.size)
    for batch in mesh.batches(m):
        Ke = element_stiffness(mesh, material, technology, rule, batch, backend)
        data += np.bincount(scatter[batch].ravel(), weights=Ke.ravel(), minlength=data.size)
    return sp.csr_matrix((data, indices, indptr), shape=(mesh.n_dof, mesh.n_dof))


def body_force_load(mesh, f, rule):
    """Consistent load of a body force ``f(x) -> (..., d)``."""
    F = np.zeros(mesh.n_dof)
    for batch in mesh.batches(mesh.nloc * mesh.dim):
        pd = mesh.evaluate(batch, rule=rule, grad=False)
        wq = rule.weights * element_scaling(mesh.patch, mesh.elements[batch])[:, None] * pd.detJ
        fe = np.einsum("epa,epi,ep->eai", pd.N, np.asarray(f(pd.x), dtype=float), wq)
        F += np.bincount(mesh.dofs(batch).ravel(), weights=fe.ravel(), minlength=mesh.n_dof)
    return F


def face_quadrature(mesh, face, rule, grad=False):
    """Basis data and surface weights on a boundary face.

    Returns ``(elements, pd, weights, normals)`` with outward unit normals (nE, nP, d).
    """
    k, side = parse_face(face, mesh.dim)
    elements = mesh.face_elements(face)
    points = [rule.points_1d] * mesh.dim
    points[k] = [1.0 if side else -1.0]
    gw = np.ones(1)
    for j in range(mesh.dim):
        w = np.ones(1) if j == k else rule.weights_1d
        gw = np.outer(w, gw).ravel()
    pd = mesh.evaluate(elements, points=points, grad=True)
    scale = np.ones(elements.size)
    for j, kv in enumerate(mesh.patch.knot_vectors):
        if j != k:
            scale *= np.diff(kv.breaks)[mesh.elements[elements, j]] / 2.0
    m = pd.Jinv[:, :, k, :] * (1.0 if side else -1.0)
    norm = np.linalg.norm(m, axis=-1)
    weights = gw * scale[:, None] * pd.detJ * norm
    return elements, pd, weights, m / norm[..., None]


def boundary_traction_load(mesh, face, h, rule):
    """Consistent load of a traction ``h(x, n) -> (..., d)`` on a patch face."""
    elements, pd, weights, normals = face_quadrature(mesh, face, rule)
    hv = np.asarray(h(pd.x, normals), dtype=float)
    fe = np.einsum("epa,epi,ep->eai", pd.N, hv, weights)
    return np.bincount(mesh.dofs(elements).ravel(), weights=fe.ravel(), minlength=mesh.n_dof)


def dirichlet_dofs(mesh, constraints):
    """Constrained dofs from ``[(face, components), ...]``."""
    fixed = set()
    for face, comps in constraints:
        cps = mesh.face_control_points(face)
        for i in comps:
            if not 0 <= i < mesh.dim:
                raise ValueError("component %r out of range" % (i,))
            fixed.update((cps * mesh.dim + i).tolist())
    return np.array(sorted(fixed), dtype=np.intp)


@dataclass
class SparseSystem:
    """Stiffness, load and homogeneous Dirichlet set.

    ``K`` and ``F`` are the unconstrained global arrays; ``K_free``/``F_free``
    are obtained by symmetric elimination of the constrained dofs.
    """

    K: sp.csr_matrix
    F: np.ndarray
    dirichlet: np.ndarray

    @cached_property
    def free(self):
        mask = np.ones(self.F.size, dtype=bool)
        mask[self.dirichlet] = False
        return np.flatnonzero(mask)

    @cached_property
    def K_free(self):
        return self.K[self.free][:, self.free].tocsc()

    @property
    def F_free(self):
        return self.F[self.free]

    def expand(self, U_free):
        U = np.zeros(self.F.size)
        U[self.free] = U_free
        return U


def assemble(mesh, material, technology, rule, body_force=None, tractions=(), dirichlet=(),
             backend=None):
    """Assemble K and F and record the homogeneous Dirichlet set.

    ``tractions`` is a sequence of ``(face, h)``; ``dirichlet`` a sequence of
    ``(face, components)``.
    """
    if not dirichlet:
        raise ValueError("no Dirichlet constraints: pure Neumann problem is singular")
    F = np.zeros(mesh.n_dof)
    if body_force is not None:
        F += body_force_load(mesh, body_force, rule)
    for face, h in tractions:
        F += boundary_traction_load(mesh, face, h, rule)
    K = stiffness_matrix(mesh, material, technology, rule, backend)
    return SparseSystem(K, F, dirichlet_dofs(mesh, dirichlet))


@dataclass
class FieldSample:
    """Solution fields on a set of points; arrays share the leading shape (nE, nP)."""

    x: np.ndarray
    u: np.ndarray
    strain: np.ndarray
    stress: np.ndarray


def evaluate_solution(mesh, material, technology, U, elements, parent_points):
    """Displacement, compatible strain and technology-specific stress.

    ``parent_points`` is a tensor grid (sequence of d 1D arrays).
    """
    tech = Technology.parse(technology)
    d = mesh.dim
    pd = mesh.evaluate(elements, points=parent_points)
    Ul = U.reshape(-1, d)[pd.conn]  # (nE, nloc, d)
    u = np.einsum("epa,eai->epi", pd.N, Ul)
    grad = np.einsum("eai,epaj->epij", Ul, pd.dNdx)
    eps = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    if tech is Technology.CS:
        sig = stress(tech, material, eps)
    else:
        Gt = interpolated_gradients(mesh, elements, parent_points)
        tr_assumed = np.einsum("eai,epai->ep", Ul, Gt)
        sig = stress(tech, material, eps, tr_assumed)
    return FieldSample(pd.x, u, eps, sig)
