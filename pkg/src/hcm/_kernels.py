"""Compiled inner loops.

All sums run left to right over the sorted neighbour list, so results are
bitwise reproducible.  Transcendental functions are evaluated by numpy
before entering these loops; the kernels only multiply and add.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def coupling_sums(indptr, indices, B, nb_idx, self_idx, coef, rows, nb_lo, nb_hi, out):
    """out[r] = sum over in-neighbours n of rows[r] in [nb_lo, nb_hi) of h(z_i, z_n).

    h is the Fourier table: sum_t coef[t] * (B[n, nb_idx[t]] * B[i, self_idx[t]]);
    B is node-major, one row of basis values per node.
    """
    nt = coef.shape[0]
    for r in range(rows.shape[0]):
        i = rows[r]
        acc = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            n = indices[e]
            if n < nb_lo or n >= nb_hi:
                continue
            h = 0.0
            for t in range(nt):
                h += coef[t] * (B[n, nb_idx[t]] * B[i, self_idx[t]])
            acc += h
        out[r] = acc


@njit(cache=True, nogil=True)
def basis_sums(indptr, indices, B, brow, rows, nb_lo, nb_hi, out):
    """out[r, k] = sum over in-neighbours n in [nb_lo, nb_hi) of B[n, brow[k]]."""
    nk = brow.shape[0]
    for r in range(rows.shape[0]):
        i = rows[r]
        for k in range(nk):
            out[r, k] = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            n = indices[e]
            if n < nb_lo or n >= nb_hi:
                continue
            for k in range(nk):
                out[r, k] += B[n, brow[k]]


@njit(cache=True)
def jacobi_eigh(A, tol, max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix (overwritten).

    Returns (diag, V, sweeps, converged); converged when the off-diagonal
    Frobenius mass drops below ``tol``.
    """
    n = A.shape[0]
    V = np.eye(n)
    sweeps = 0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * A[p, q] * A[p, q]
        if np.sqrt(off) < tol:
            return np.diag(A).copy(), V, sweep, True
        if sweep == max_sweeps:
            break
        sweeps = sweep + 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return np.diag(A).copy(), V, sweeps, False
