"""Pure numpy element stiffness kernel (fallback for the compiled one)."""
import numpy as np


def element_stiffness(G, Gt, wq, c_interp, c_comp, mu):
    """Batched element stiffness matrices.

    ``G`` are compatible physical basis gradients (nE, nP, nloc, d), ``Gt`` the
    corner-interpolated ones (same shape, may be None when ``c_interp == 0``),
    ``wq`` combined quadrature weights (nE, nP). Returns (nE, nloc*d, nloc*d)
    with local dof ``a*d + i``::

        k = c_interp * sum_q w Gt[a,i] Gt[b,j] + c_comp * sum_q w G[a,i] G[b,j]
            + mu * sum_q w (delta_ij G[a,k] G[b,k] + G[a,j] G[b,i])
    """
    G = np.ascontiguousarray(G, dtype=float)
    nE, nP, nloc, d = G.shape
    m = nloc * d
    wG = G * wq[:, :, None, None]

    K = np.einsum("epaj,epbi->eaibj", wG, G).reshape(nE, m, m)
    lap = np.einsum("epak,epbk->eab", wG, G)
    K5 = K.reshape(nE, nloc, d, nloc, d)
    for i in range(d):
        K5[:, :, i, :, i] += lap
    K *= mu
    if c_comp != 0.0:
        Gf = G.reshape(nE, nP, m)
        K += c_comp * np.einsum("epm,epn->emn", wG.reshape(nE, nP, m), Gf)
    if c_interp != 0.0:
        Gtf = np.ascontiguousarray(Gt, dtype=float).reshape(nE, nP, m)
        K += c_interp * np.einsum("epm,epn->emn", Gtf * wq[:, :, None], Gtf)
    return K
