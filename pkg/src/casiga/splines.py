"""Tensor-product quadratic NURBS.

Univariate B-spline evaluation follows the triangular recursions of Piegl &
Tiller (The NURBS Book, A2.1-A2.3), vectorized over arrays of parameters.

Control points of a patch are stored flat with a lexicographic global index,
first parametric direction fastest::

    A = i_0 + n_0 * (i_1 + n_1 * i_2)

The same ordering is used for the 3**d local functions of an element and for
tensor grids of points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Raised when the geometry map is singular or inverted."""

    def __init__(self, message, element=None, xi=None):
        super().__init__(message)
        self.element = element
        self.xi = xi


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int = 2

    def __post_init__(self):
        t = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", t)
        p = self.degree
        if t.ndim != 1 or t.size < 2 * (p + 1):
            raise ValueError("knot vector too short for degree %d" % p)
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be nondecreasing")
        if np.any(t[: p + 1] != t[0]) or np.any(t[-p - 1 :] != t[-1]):
            raise ValueError("knot vector must be open (end multiplicity degree+1)")
        if t[0] == t[-1]:
            raise ValueError("empty parametric range")
        interior = t[p + 1 : -p - 1]
        if interior.size and (np.any(np.diff(interior) == 0) or interior[0] == t[0]
                              or interior[-1] == t[-1]):
            raise ValueError("repeated interior knots are not supported")

    @classmethod
    def uniform(cls, n_elements, degree=2):
        inner = np.linspace(0.0, 1.0, n_elements + 1)
        return cls(np.r_[np.zeros(degree), inner, np.ones(degree)], degree)

    @property
    def n(self):
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    @property
    def breaks(self):
        return np.unique(self.knots)

    @property
    def n_elements(self):
        return self.breaks.size - 1

    @property
    def element_spans(self):
        """Span index of each nonzero knot interval."""
        p = self.degree
        return np.arange(p, p + self.n_elements)

    def __eq__(self, other):
        return (isinstance(other, KnotVector) and self.degree == other.degree
                and np.array_equal(self.knots, other.knots))

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))


def find_span(kv, xi):
    """Index i with knots[i] <= xi < knots[i+1]; the last span for xi at the end."""
    t = kv.knots
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < t[0]) or np.any(xi_arr > t[-1]) or np.any(np.isnan(xi_arr)):
        raise ValueError("parameter %r outside knot range [%g, %g]" % (xi, t[0], t[-1]))
    span = np.searchsorted(t, xi_arr, side="right") - 1
    span = np.minimum(span, kv.n - 1)
    return int(span) if span.ndim == 0 else span


def basis_funs(knots, degree, spans, xi):
    """Nonzero basis values and first derivatives for arrays of parameters.

    Returns two arrays of shape ``xi.shape + (degree + 1,)``; entry r belongs to
    function ``spans - degree + r``.
    """
    t = knots
    p = degree
    xi = np.asarray(xi, dtype=float)
    spans = np.broadcast_to(np.asarray(spans), xi.shape)
    left = [None] + [xi - t[spans + 1 - j] for j in range(1, p + 1)]
    right = [None] + [t[spans + j] - xi for j in range(1, p + 1)]

    N = [np.ones_like(xi)]
    lower = N
    for j in range(1, p + 1):
        if j == p:
            lower = list(N)
        new = []
        saved = np.zeros_like(xi)
        for r in range(j):
            temp = N[r] / (right[r + 1] + left[j - r])
            new.append(saved + right[r + 1] * temp)
            saved = left[j - r] * temp
        new.append(saved)
        N = new

    ders = []
    for r in range(p + 1):
        g = spans - p + r
        d = np.zeros_like(xi)
        if r >= 1:
            d = d + p * lower[r - 1] / (t[g + p] - t[g])
        if r < p:
            d = d - p * lower[r] / (t[g + p + 1] - t[g + 1])
        ders.append(d)
    return np.stack(N, axis=-1), np.stack(ders, axis=-1)


def eval_basis(kv, xi, span=None):
    """Values and derivatives of the degree+1 functions nonzero at ``xi``."""
    if span is None:
        span = find_span(kv, xi)
    return basis_funs(kv.knots, kv.degree, span, xi)


def _insert_1d(t, p, Pw, u, axis):
    """Boehm insertion of ``u`` into knots ``t`` along ``axis`` of homogeneous points."""
    k = int(np.searchsorted(t, u, side="right") - 1)
    Pw = np.moveaxis(Pw, axis, 0)
    n = Pw.shape[0]
    Q = np.empty((n + 1,) + Pw.shape[1:])
    Q[: k - p + 1] = Pw[: k - p + 1]
    Q[k + 1 :] = Pw[k:]
    for i in range(k - p + 1, k + 1):
        alpha = (u - t[i]) / (t[i + p] - t[i])
        Q[i] = alpha * Pw[i] + (1.0 - alpha) * Pw[i - 1]
    return np.moveaxis(Q, 0, axis), np.insert(t, k + 1, u)


@dataclass(frozen=True, eq=False)
class NurbsPatch:
    knot_vectors: tuple
    control_points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        kvs = tuple(self.knot_vectors)
        object.__setattr__(self, "knot_vectors", kvs)
        cp = np.asarray(self.control_points, dtype=float)
        n_cp = int(np.prod([kv.n for kv in kvs]))
        if cp.ndim != 2 or cp.shape[0] != n_cp:
            raise ValueError("expected %d control points, got array of shape %s" % (n_cp, cp.shape))
        w = np.ones(n_cp) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (n_cp,):
            raise ValueError("one weight per control point required")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        """Number of parametric directions."""
        return len(self.knot_vectors)

    @property
    def shape(self):
        """Basis counts per direction, first direction first."""
        return tuple(kv.n for kv in self.knot_vectors)

    @property
    def n_cp(self):
        return self.control_points.shape[0]

    @property
    def elements_per_direction(self):
        return tuple(kv.n_elements for kv in self.knot_vectors)

    def _homogeneous_grid(self):
        """Weighted points as an array indexed [i_{d-1}, ..., i_0, coord]."""
        Pw = np.hstack([self.control_points * self.weights[:, None], self.weights[:, None]])
        return Pw.reshape(self.shape[::-1] + (Pw.shape[1],))

    @classmethod
    def _from_homogeneous(cls, kvs, Pw):
        Pw = Pw.reshape(-1, Pw.shape[-1])
        w = Pw[:, -1]
        return cls(tuple(kvs), Pw[:, :-1] / w[:, None], w)

    def insert_knot(self, direction, xi_new):
        kv = self.knot_vectors[direction]
        t = kv.knots
        if not t[0] < xi_new < t[-1]:
            raise ValueError("knot %g not strictly inside the parametric range" % xi_new)
        if np.any(t == xi_new):
            raise ValueError("knot %g already present; repeated interior knots are refused" % xi_new)
        Pw = self._homogeneous_grid()
        axis = self.dim - 1 - direction
        Pw, t_new = _insert_1d(t, kv.degree, Pw, float(xi_new), axis)
        kvs = list(self.knot_vectors)
        kvs[direction] = KnotVector(t_new, kv.degree)
        return self._from_homogeneous(kvs, Pw)

    def insert_knots(self, direction, values):
        patch = self
        for u in sorted(values):
            patch = patch.insert_knot(direction, u)
        return patch

    def refine_uniform(self, times=1):
        """Insert the midpoint of every nonzero span in every direction."""
        patch = self
        for _ in range(times):
            for k in range(patch.dim):
                b = patch.knot_vectors[k].breaks
                patch = patch.insert_knots(k, 0.5 * (b[:-1] + b[1:]))
        return patch

    def __call__(self, xi):
        """Evaluate the geometry map at parametric points of shape (m, d)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        return evaluate_points(self, xi).x


@dataclass
class PointData:
    """Rational basis data at a batch of points.

    Shapes: ``N`` (..., nloc), ``dNdx`` (..., nloc, d), ``x`` (..., d),
    ``J`` (..., d, d) with ``J[i, k] = dx_i/dxi_k``, ``detJ`` (...).
    ``conn`` holds the global indices of the local functions.
    """

    N: np.ndarray
    x: np.ndarray
    J: np.ndarray
    detJ: np.ndarray
    conn: np.ndarray
    dNdx: np.ndarray = None
    Jinv: np.ndarray = None


def _local_offsets(shape, p=2):
    """Global-index offsets of the (p+1)**d local functions relative to the first one."""
    d = len(shape)
    strides = np.cumprod((1,) + tuple(shape[:-1]))
    loc = np.indices((p + 1,) * d).reshape(d, -1)[::-1]  # loc[k] = a_k, a_0 fastest
    return (strides[:, None] * loc).sum(axis=0)


def _tensor(factors):
    """Tensor product of per-direction arrays (nE, nP_k, nloc_k) -> (nE, nP, nloc)."""
    out = factors[0]
    for f in factors[1:]:
        nE = out.shape[0]
        out = np.einsum("epa,eqb->eqpba", out, f).reshape(nE, f.shape[1] * out.shape[1], -1)
    return out


def _rational(patch, conn, B, dB):
    """Rational basis, its parametric gradients, positions and Jacobians."""
    w = patch.weights[conn][:, None, :]
    Q = patch.control_points[conn]
    wB = B * w
    W = wB.sum(axis=-1)
    N = wB / W[..., None]
    dN = []
    for dBk in dB:
        wdB = dBk * w
        dW = wdB.sum(axis=-1)
        dN.append((wdB - N * dW[..., None]) / W[..., None])
    dNdxi = np.stack(dN, axis=-1)
    x = np.einsum("epa,eai->epi", N, Q)
    J = np.einsum("eai,epak->epik", Q, dNdxi)
    return N, dNdxi, x, J


def evaluate_elements(patch, elements, parent_points, grad=True, check=True):
    """Evaluate basis data on a tensor grid of parent points in each element.

    Parameters
    ----------
    patch : NurbsPatch
    elements : int array (nE, d)
        Element multi-indices (one knot interval per direction).
    parent_points : sequence of d arrays in [-1, 1]
        Tensor grid of parent coordinates, first direction fastest. Each entry
        is either 1D (shared by all elements) or (nE, nP_k).

    The Jacobian returned is with respect to the parametric coordinates; the
    parent-to-parametric factor is ``element_scaling``.
    """
    elements = np.atleast_2d(np.asarray(elements, dtype=np.intp))
    d = patch.dim
    Bs, dBs, first = [], [], np.zeros(elements.shape[0], dtype=np.intp)
    strides = np.cumprod((1,) + patch.shape[:-1])
    for k, kv in enumerate(patch.knot_vectors):
        b = kv.breaks
        e = elements[:, k]
        pts = np.asarray(parent_points[k], dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        lo, hi = b[e], b[e + 1]
        xi = lo[:, None] + (hi - lo)[:, None] * (pts + 1.0) / 2.0
        span = kv.element_spans[e]
        B, dB = basis_funs(kv.knots, kv.degree, span[:, None], xi)
        Bs.append(B)
        dBs.append(dB)
        first += strides[k] * (span - kv.degree)
    conn = first[:, None] + _local_offsets(patch.shape)[None, :]
    Bt = _tensor(Bs)
    dBt = []
    for k in range(d):
        dBt.append(_tensor([dBs[j] if j == k else Bs[j] for j in range(d)]))
    N, dNdxi, x, J = _rational(patch, conn, Bt, dBt)
    pd = PointData(N=N, x=x, J=J, detJ=None, conn=conn)
    if J.shape[-1] == J.shape[-2]:
        pd.detJ = np.linalg.det(J)
        if check:
            bad = np.argwhere(~(pd.detJ > 0))
            if bad.size:
                e, q = bad[0]
                raise GeometryError(
                    "nonpositive Jacobian determinant %g in element %s at parent point %d"
                    % (pd.detJ[e, q], tuple(elements[e]), q), element=tuple(elements[e]), xi=q)
        if grad:
            pd.Jinv = np.linalg.inv(J)
            pd.dNdx = np.einsum("epak,epki->epai", dNdxi, pd.Jinv)
    return pd


def element_scaling(patch, elements):
    """Parent-to-parametric volume factor prod_k (span length / 2) per element."""
    elements = np.atleast_2d(elements)
    out = np.ones(elements.shape[0])
    for k, kv in enumerate(patch.knot_vectors):
        out *= np.diff(kv.breaks)[elements[:, k]] / 2.0
    return out


def locate(patch, xi):
    """Element multi-index and parent coordinates of parametric points (m, d)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    elems = np.empty(xi.shape, dtype=np.intp)
    parent = np.empty(xi.shape)
    for k, kv in enumerate(patch.knot_vectors):
        b = kv.breaks
        span = find_span(kv, xi[:, k])
        e = np.atleast_1d(span) - kv.degree
        elems[:, k] = e
        parent[:, k] = 2.0 * (xi[:, k] - b[e]) / (b[e + 1] - b[e]) - 1.0
    return elems, parent


def evaluate_points(patch, xi, grad=True, check=True):
    """Basis data at individual parametric points (m, d); leading shape (m,)."""
    elems, parent = locate(patch, xi)
    pd = evaluate_elements(patch, elems, [parent[:, k : k + 1] for k in range(patch.dim)],
                           grad=grad, check=check)
    for name in ("N", "x", "J", "detJ", "dNdx", "Jinv"):
        v = getattr(pd, name)
        if v is not None:
            setattr(pd, name, v[:, 0])
    return pd


def nurbs_basis_grad(patch, xi):
    """Rational basis data at one parametric point.

    Returns ``(N, dNdx, x, detJ, J, conn)`` for the functions supported on the
    element containing ``xi``. ``J`` here includes only the parametric map.
    """
    pd = evaluate_points(patch, np.asarray(xi, dtype=float).reshape(1, -1))
    return pd.N[0], pd.dNdx[0], pd.x[0], pd.detJ[0], pd.J[0], pd.conn[0]
