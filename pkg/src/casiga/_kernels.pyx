# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element stiffness kernel; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def element_stiffness(G, Gt, wq, double c_interp, double c_comp, double mu):
    cdef double[:, :, :, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef double[:, ::1] w = np.ascontiguousarray(wq, dtype=np.float64)
    cdef Py_ssize_t nE = g.shape[0], nP = g.shape[1], nloc = g.shape[2], d = g.shape[3]
    cdef Py_ssize_t m = nloc * d
    cdef bint use_interp = c_interp != 0.0
    cdef double[:, :, :, ::1] gt = np.ascontiguousarray(Gt if use_interp else G, dtype=np.float64)
    out = np.zeros((nE, m, m))
    cdef double[:, :, ::1] K = out
    cdef Py_ssize_t e, q, a, b, i, j, k
    cdef double wt, lap, s

    with nogil:
        for e in range(nE):
            for q in range(nP):
                wt = w[e, q]
                for a in range(nloc):
                    for b in range(nloc):
                        lap = 0.0
                        for k in range(d):
                            lap = lap + g[e, q, a, k] * g[e, q, b, k]
                        lap = mu * wt * lap
                        for i in range(d):
                            for j in range(d):
                                s = mu * wt * g[e, q, a, j] * g[e, q, b, i]
                                if i == j:
                                    s = s + lap
                                if c_comp != 0.0:
                                    s = s + c_comp * wt * g[e, q, a, i] * g[e, q, b, j]
                                if use_interp:
                                    s = s + c_interp * wt * gt[e, q, a, i] * gt[e, q, b, j]
                                K[e, a * d + i, b * d + j] += s
    return out
