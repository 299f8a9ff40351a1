# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled coset-walk and lattice-reduction kernels.

Tables are int32 arrays of shape (2 * rank, n_states); row ``c`` is the left
action of letter code ``c``.  Words are passed flattened: ``letters`` holds all
letter codes and word ``j`` occupies ``letters[offsets[j]:offsets[j + 1]]``.
Letters are applied right to left, so the result is the state of ``w * start``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def walk_many(const int[:, ::1] table, const int[::1] letters,
              const long long[::1] offsets, const int[::1] starts):
    cdef Py_ssize_t nwords = offsets.shape[0] - 1
    out_arr = np.empty(nwords, dtype=np.int32)
    cdef int[::1] out = out_arr
    cdef Py_ssize_t j, p
    cdef int s
    for j in range(nwords):
        s = starts[j]
        p = offsets[j + 1] - 1
        while p >= offsets[j]:
            s = table[letters[p], s]
            p -= 1
        out[j] = s
    return out_arr


def walk_grid(const int[:, ::1] table, const int[::1] letters,
              const long long[::1] offsets, const int[::1] starts):
    cdef Py_ssize_t nwords = offsets.shape[0] - 1
    cdef Py_ssize_t nstarts = starts.shape[0]
    out_arr = np.empty((nstarts, nwords), dtype=np.int32)
    cdef int[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p
    cdef int s
    for i in range(nstarts):
        for j in range(nwords):
            s = starts[i]
            p = offsets[j + 1] - 1
            while p >= offsets[j]:
                s = table[letters[p], s]
                p -= 1
            out[i, j] = s
    return out_arr


def lattice_grid(const long long[:, ::1] basis, const long long[::1] radix,
                 const long long[:, ::1] us, const long long[:, ::1] gs):
    """Mixed-radix box index of (u + g) reduced modulo the lattice, for all g, u."""
    cdef Py_ssize_t d = basis.shape[0]
    cdef Py_ssize_t ng = gs.shape[0]
    cdef Py_ssize_t nu = us.shape[0]
    out_arr = np.empty((ng, nu), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    cdef long long[64] v
    cdef Py_ssize_t i, j, a, b
    cdef long long q, idx
    if d > 64:
        raise ValueError("rank above 64 is not supported")
    for i in range(ng):
        for j in range(nu):
            for a in range(d):
                v[a] = us[j, a] + gs[i, a]
            idx = 0
            for a in range(d):
                q = v[a] // basis[a, a]  # floor division (cdivision is off)
                if q != 0:
                    for b in range(a, d):
                        v[b] -= q * basis[a, b]
                idx = idx * radix[a] + v[a]
            out[i, j] = idx
    return out_arr
