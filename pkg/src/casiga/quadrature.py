"""Gauss-Legendre rules on the parent element [-1, 1]**d."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

_GAUSS = {
    2: (np.array([-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)]), np.array([1.0, 1.0])),
    3: (np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)]),
        np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])),
}


def gauss_legendre(n):
    """1D points and weights of the n-point rule, n in {2, 3}."""
    try:
        pts, wts = _GAUSS[n]
    except KeyError:
        raise ValueError("only 2- and 3-point Gauss-Legendre rules are available, got %r" % (n,))
    return pts.copy(), wts.copy()


@dataclass(frozen=True)
class QuadratureRule:
    points_per_direction: int
    dim: int

    def __post_init__(self):
        gauss_legendre(self.points_per_direction)
        if self.dim not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")

    @property
    def points_1d(self):
        return gauss_legendre(self.points_per_direction)[0]

    @property
    def weights_1d(self):
        return gauss_legendre(self.points_per_direction)[1]

    @property
    def points(self):
        """Tensor points (n**d, d), first coordinate fastest."""
        g = self.points_1d
        return np.array([p[::-1] for p in product(g, repeat=self.dim)])

    @property
    def weights(self):
        w = self.weights_1d
        out = np.ones(1)
        for _ in range(self.dim):
            out = np.outer(w, out).ravel()
        return out


def map_to_element(rule, bounds, detJ):
    """Combined weights for one or many elements.

    ``bounds`` is (d, 2) or (nE, d, 2) parametric interval limits; ``detJ`` the
    geometry Jacobian determinant at the rule's points, shape (nP,) or (nE, nP).
    Returns gauss weight * prod(span/2) * detJ.
    """
    bounds = np.asarray(bounds, dtype=float)
    detJ = np.asarray(detJ, dtype=float)
    if np.any(detJ <= 0):
        raise ValueError("nonpositive Jacobian determinant")
    scale = np.prod((bounds[..., 1] - bounds[..., 0]) / 2.0, axis=-1)
    if np.any(scale <= 0):
        raise ValueError("zero-length knot span")
    return rule.weights * np.asarray(scale)[..., None] * detJ
