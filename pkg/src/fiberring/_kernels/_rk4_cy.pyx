# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 core: fixed-step propagation of i dpsi/dt = H(t) psi with
H(t) = sum_j exp(i*freqs[j]*t) * A_j and the A_j packed as one flat CSR block."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

ctypedef cnp.complex128_t cplx


cdef inline void _apply(const cplx* data, const long long* indices,
                        const long long* indptr, Py_ssize_t n_mats,
                        Py_ssize_t dim, const double* freqs, double t,
                        const cplx* x, cplx* y) noexcept nogil:
    """y = -i * H(t) x."""
    cdef Py_ssize_t m, row, p, start, stop
    cdef double ph
    cdef cplx phase, acc
    for row in range(dim):
        y[row] = 0
    for m in range(n_mats):
        ph = freqs[m] * t
        phase = cos(ph) + 1j * sin(ph)
        for row in range(dim):
            start = indptr[m * (dim + 1) + row]
            stop = indptr[m * (dim + 1) + row + 1]
            if start == stop:
                continue
            acc = 0
            for p in range(start, stop):
                acc = acc + data[p] * x[indices[p]]
            y[row] = y[row] + phase * acc
    for row in range(dim):
        y[row] = y[row] * (-1j)


def rk4_propagate(cnp.ndarray[cplx, ndim=1] data,
                  cnp.ndarray[long long, ndim=1] indices,
                  cnp.ndarray[long long, ndim=2] indptr,
                  cnp.ndarray[double, ndim=1] freqs,
                  cnp.ndarray[cplx, ndim=1] psi0,
                  double t0, double dt, long long nsteps):
    cdef Py_ssize_t dim = psi0.shape[0]
    cdef Py_ssize_t n_mats = indptr.shape[0]
    cdef cnp.ndarray[cplx, ndim=1] psi = np.ascontiguousarray(psi0).copy()
    cdef cnp.ndarray[cplx, ndim=1] k1 = np.empty(dim, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] k2 = np.empty(dim, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] k3 = np.empty(dim, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] k4 = np.empty(dim, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] tmp = np.empty(dim, dtype=np.complex128)

    cdef cplx* pd = <cplx*> cnp.PyArray_DATA(data)
    cdef long long* pi = <long long*> cnp.PyArray_DATA(indices)
    cdef long long* pp = <long long*> cnp.PyArray_DATA(indptr)
    cdef double* pf = <double*> cnp.PyArray_DATA(freqs)
    cdef cplx* ps = <cplx*> cnp.PyArray_DATA(psi)
    cdef cplx* p1 = <cplx*> cnp.PyArray_DATA(k1)
    cdef cplx* p2 = <cplx*> cnp.PyArray_DATA(k2)
    cdef cplx* p3 = <cplx*> cnp.PyArray_DATA(k3)
    cdef cplx* p4 = <cplx*> cnp.PyArray_DATA(k4)
    cdef cplx* pt = <cplx*> cnp.PyArray_DATA(tmp)

    cdef Py_ssize_t step, i
    cdef double t, half = 0.5 * dt, sixth = dt / 6.0

    with nogil:
        for step in range(nsteps):
            t = t0 + step * dt
            _apply(pd, pi, pp, n_mats, dim, pf, t, ps, p1)
            for i in range(dim):
                pt[i] = ps[i] + half * p1[i]
            _apply(pd, pi, pp, n_mats, dim, pf, t + half, pt, p2)
            for i in range(dim):
                pt[i] = ps[i] + half * p2[i]
            _apply(pd, pi, pp, n_mats, dim, pf, t + half, pt, p3)
            for i in range(dim):
                pt[i] = ps[i] + dt * p3[i]
            _apply(pd, pi, pp, n_mats, dim, pf, t + dt, pt, p4)
            for i in range(dim):
                ps[i] = ps[i] + sixth * (p1[i] + 2.0 * (p2[i] + p3[i]) + p4[i])
    return psi
