"""Isotropic linear elasticity: material constants, strains and stresses.

Tensors are handled as full symmetric (..., d, d) arrays. Where a vector form
is needed (field export), Voigt order is (xx, yy, [zz,] xy, [yz, xz]).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Technology(str, enum.Enum):
    CS = "cs"
    CAS1 = "cas1"
    CAS2 = "cas2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError("unknown element technology %r (expected cs, cas1 or cas2)" % (value,))


def lame_from_young_poisson(E, nu):
    """Lame parameters (lambda, mu); lambda diverges as nu -> 1/2."""
    if not E > 0:
        raise ValueError("Young's modulus must be positive")
    if not 0.0 <= nu < 0.5:
        raise ValueError("Poisson's ratio must lie in [0, 0.5)")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class Material:
    E: float
    nu: float
    lam: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        lam, mu = lame_from_young_poisson(self.E, self.nu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_lame(cls, lam, mu):
        """Material with prescribed Lame parameters (lam >= 0, mu > 0)."""
        if lam < 0 or mu <= 0:
            raise ValueError("need lam >= 0 and mu > 0")
        nu = lam / (2.0 * (lam + mu))
        E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
        m = cls(E, nu)
        object.__setattr__(m, "lam", float(lam))
        object.__setattr__(m, "mu", float(mu))
        return m


def strain_from_displacement_gradient(grad_u):
    grad_u = np.asarray(grad_u, dtype=float)
    return 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))


def split_dil_dev(eps, d=None):
    """Dilatational and deviatoric parts of a strain tensor."""
    eps = np.asarray(eps, dtype=float)
    d = eps.shape[-1] if d is None else d
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    tr = np.trace(eps, axis1=-2, axis2=-1)
    dil = (tr / d)[..., None, None] * np.eye(d)
    return dil, eps - dil


def stress(technology, material, eps, assumed_trace=None):
    """Cauchy stress for the given element technology.

    ``eps`` is the compatible strain. CS ignores ``assumed_trace``; CAS1 and
    CAS2 require the interpolated trace of the compatible strain at the same
    points. For CAS2 the assumed strain is rebuilt as
    ``eps - tr(eps)/d I + assumed_trace/d I``.
    """
    tech = Technology.parse(technology)
    eps = np.asarray(eps, dtype=float)
    d = eps.shape[-1]
    eye = np.eye(d)
    lam, mu = material.lam, material.mu
    if tech is Technology.CS:
        if assumed_trace is not None:
            raise ValueError("CS stresses take no assumed strain")
        tr = np.trace(eps, axis1=-2, axis2=-1)
        return lam * tr[..., None, None] * eye + 2.0 * mu * eps
    if assumed_trace is None:
        raise ValueError("%s stresses need the assumed strain trace" % tech.name)
    tr_a = np.asarray(assumed_trace, dtype=float)[..., None, None]
    if tech is Technology.CAS1:
        return lam * tr_a * eye + 2.0 * mu * eps
    tr = np.trace(eps, axis1=-2, axis2=-1)[..., None, None]
    eps_cas2 = eps + (tr_a - tr) / d * eye
    return lam * tr_a * eye + 2.0 * mu * eps_cas2


def sigma_zz_plane_strain(nu, sxx, syy):
    return nu * (np.asarray(sxx) + np.asarray(syy))


def hydrostatic(sigma, nu=None):
    """One third of the stress trace.

    For 2x2 (plane-strain) input ``nu`` is required; the out-of-plane normal
    stress nu*(sxx + syy) is included in the trace.
    """
    sigma = np.asarray(sigma, dtype=float)
    tr = np.trace(sigma, axis1=-2, axis2=-1)
    if sigma.shape[-1] == 2:
        if nu is None:
            raise ValueError("plane-strain hydrostatic stress needs Poisson's ratio")
        tr = tr + sigma_zz_plane_strain(nu, sigma[..., 0, 0], sigma[..., 1, 1])
    return tr / 3.0


def voigt(tensor):
    t = np.asarray(tensor)
    if t.shape[-1] == 2:
        idx = [(0, 0), (1, 1), (0, 1)]
    else:
        idx = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)]
    return np.stack([t[..., i, j] for i, j in idx], axis=-1)
