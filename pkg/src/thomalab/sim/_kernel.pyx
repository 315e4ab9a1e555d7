# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernel; arithmetic order matches ``_kernel_py``."""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_gamma, random_standard_normal

cnp.import_array()

BACKEND = "cython"

OK = 0
ABORTED = 1

cdef struct PathState:
    int d
    double *x
    double *xt
    double *sg
    double *b
    double *w
    double *xi
    double theta
    double s1
    double s2
    double gap
    int max_halvings
    long long substeps
    bitgen_t *rng


cdef inline bint _watched(PathState *p, int i, int j) noexcept nogil:
    return (p.sg[i] == p.sg[j] and p.x[i] > 0.0 and p.x[j] > 0.0
            and (p.x[i] >= p.gap or p.x[j] >= p.gap))


cdef void _drift(PathState *p, double *gmin, bint *singular) noexcept nogil:
    cdef int i, j, d = p.d
    cdef double acc, diff, g
    cdef double theta = p.theta
    cdef double two_theta = 2.0 * theta
    cdef double c_lin = p.s2 / theta
    singular[0] = False
    gmin[0] = INFINITY
    for i in range(d):
        acc = 0.0
        for j in range(d):
            if j == i:
                continue
            diff = p.xt[i] - p.xt[j]
            if diff == 0.0:
                if p.x[j] != 0.0:
                    singular[0] = True
                continue
            acc += p.x[j] / diff
            if j > i and _watched(p, i, j):
                g = fabs(diff)
                if g < gmin[0]:
                    gmin[0] = g
        p.b[i] = p.s1 - theta / p.sg[i] - c_lin * p.xt[i] + two_theta * acc


cdef int _risk(PathState *p, double h) noexcept nogil:
    cdef int i, j, d = p.d, out = 0
    cdef double diff, close, var
    for i in range(d):
        for j in range(i + 1, d):
            if not _watched(p, i, j):
                continue
            diff = p.xt[i] - p.xt[j]
            if diff > 0.0:
                close = p.b[j] - p.b[i]
            elif diff < 0.0:
                close = p.b[i] - p.b[j]
            else:
                continue
            if h * close > 0.5 * fabs(diff):
                return 2
            var = p.sg[i] * p.xt[i] + p.sg[j] * p.xt[j] - diff * diff
            if 32.0 * h * var > diff * diff:
                out = 1
    return out


cdef void _euler(PathState *p, double h) noexcept nogil:
    cdef int i, d = p.d
    cdef double tot = 0.0, sw = 0.0, rest, c, sq, v, bx
    for i in range(d):
        p.xi[i] = random_standard_normal(p.rng)
    for i in range(d):
        tot += p.x[i]
        p.w[i] = sqrt(p.x[i])
        sw += p.w[i] * p.xi[i]
    rest = 1.0 - tot
    if rest < 0.0:
        rest = 0.0
    c = 1.0 / (1.0 + sqrt(rest))
    sq = sqrt(2.0 * h)
    tot = 0.0
    for i in range(d):
        bx = p.b[i] / p.sg[i]
        if p.x[i] == 0.0 and bx > 0.0:
            v = h * random_standard_gamma(p.rng, bx)
        else:
            v = p.x[i] + bx * h + sq * p.w[i] * (p.xi[i] - c * p.w[i] * sw)
        if not v > 0.0:
            v = 0.0
        p.x[i] = v
        tot += v
    if tot > 1.0:
        for i in range(d):
            p.x[i] = p.x[i] / tot
    for i in range(d):
        p.xt[i] = p.sg[i] * p.x[i]
    p.substeps += 1


cdef bint _advance(PathState *p, double h, int depth) noexcept nogil:
    cdef double gmin
    cdef bint singular
    cdef int risk
    _drift(p, &gmin, &singular)
    risk = _risk(p, h)
    if singular or risk or gmin < p.gap:
        if depth < p.max_halvings:
            if not _advance(p, 0.5 * h, depth + 1):
                return False
            return _advance(p, 0.5 * h, depth + 1)
        if risk == 2:
            return False
    _euler(p, h)
    return True


def path_generator(seed, path):
    return np.random.Generator(np.random.Philox(key=(seed << 64) | path))


def run_paths(x0, signs, double theta, double s1, double s2, double dt, long long n_steps,
              path_start, long long n_paths, seed, double gap_threshold, int max_halvings,
              long long record_every):
    """Same contract as ``_kernel_py.run_paths``."""
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] sgv = np.ascontiguousarray(signs, dtype=np.float64)
    cdef int d = x0v.shape[0]
    cdef long long n_rec = n_steps // record_every + 1 if record_every > 0 else 0
    final = np.empty((n_paths, d))
    traj = np.empty((n_paths, n_rec, d)) if n_rec else None
    status = np.zeros(n_paths, dtype=np.int8)
    substeps = np.zeros(n_paths, dtype=np.int64)
    abort_step = np.full(n_paths, -1, dtype=np.int64)
    cdef double[:, ::1] fv = final
    cdef double[:, :, ::1] tv
    if n_rec:
        tv = traj
    cdef signed char[::1] stv = status
    cdef long long[::1] ssv = substeps
    cdef long long[::1] asv = abort_step

    cdef PathState st
    cdef double *buf = <double *> malloc(7 * d * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    st.d = d
    st.x = buf
    st.xt = buf + d
    st.sg = buf + 2 * d
    st.b = buf + 3 * d
    st.w = buf + 4 * d
    st.xi = buf + 5 * d
    st.theta = theta
    st.s1 = s1
    st.s2 = s2
    st.gap = gap_threshold
    st.max_halvings = max_halvings
    cdef long long p, k, r
    cdef int i
    try:
        for i in range(d):
            st.sg[i] = sgv[i]
        for p in range(n_paths):
            bg = np.random.Philox(key=(seed << 64) | (path_start + p))
            capsule = bg.capsule
            st.rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
            st.substeps = 0
            for i in range(d):
                st.x[i] = x0v[i]
                st.xt[i] = st.sg[i] * st.x[i]
            with nogil:
                r = 0
                if n_rec:
                    for i in range(d):
                        tv[p, 0, i] = st.x[i]
                    r = 1
                for k in range(n_steps):
                    if stv[p] == 0 and not _advance(&st, dt, 0):
                        stv[p] = 1
                        asv[p] = k
                    if n_rec and (k + 1) % record_every == 0:
                        for i in range(d):
                            tv[p, r, i] = st.x[i]
                        r += 1
                for i in range(d):
                    fv[p, i] = st.x[i]
                ssv[p] = st.substeps
    finally:
        free(buf)
    return final, traj, status, substeps, abort_step
