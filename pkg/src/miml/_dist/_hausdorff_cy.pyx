# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pairwise squared-Hausdorff kernel (hot loop of bag clustering)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairwise_sq_hausdorff(object xa_obj, object offa_obj, object xb_obj, object offb_obj):
    """Squared Hausdorff distances between two bag collections.

    Identical contract to the NumPy fallback: stacked instance matrices plus
    int64 offset vectors; returns an (ma, mb) float64 matrix.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xa = \
        np.ascontiguousarray(xa_obj, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xb = \
        np.ascontiguousarray(xb_obj, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offa = np.asarray(offa_obj, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offb = np.asarray(offb_obj, dtype=np.int64)

    cdef Py_ssize_t ma = offa.shape[0] - 1
    cdef Py_ssize_t mb = offb.shape[0] - 1
    cdef Py_ssize_t d = xa.shape[1]
    if xb.shape[1] != d:
        raise ValueError("instance dimension mismatch")

    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.empty((ma, mb))

    # scratch for per-instance minima of one bag pair
    cdef Py_ssize_t max_na = 0, max_nb = 0, i
    for i in range(ma):
        if offa[i + 1] - offa[i] > max_na:
            max_na = offa[i + 1] - offa[i]
    for i in range(mb):
        if offb[i + 1] - offb[i] > max_nb:
            max_nb = offb[i + 1] - offb[i]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rmin_arr = np.empty(max(max_na, 1))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cmin_arr = np.empty(max(max_nb, 1))
    cdef double * rmin = <double *> rmin_arr.data
    cdef double * cmin = <double *> cmin_arr.data

    cdef Py_ssize_t p, q, a0, a1, b0, b1, r, c, k, na, nb
    cdef double sq, diff, h, v
    cdef double inf = np.inf

    for p in range(ma):
        a0 = offa[p]; a1 = offa[p + 1]
        na = a1 - a0
        for q in range(mb):
            b0 = offb[q]; b1 = offb[q + 1]
            nb = b1 - b0
            for r in range(na):
                rmin[r] = inf
            for c in range(nb):
                cmin[c] = inf
            for r in range(na):
                for c in range(nb):
                    sq = 0.0
                    for k in range(d):
                        diff = xa[a0 + r, k] - xb[b0 + c, k]
                        sq += diff * diff
                    if sq < rmin[r]:
                        rmin[r] = sq
                    if sq < cmin[c]:
                        cmin[c] = sq
            h = 0.0
            for r in range(na):
                v = rmin[r]
                if v > h:
                    h = v
            for c in range(nb):
                v = cmin[c]
                if v > h:
                    h = v
            out[p, q] = h
    return out
