"""Pure-Python (numpy) implementations of the coset-walk kernels.

Same signatures and results as the compiled module; used when the extension
is not built.
"""

from __future__ import annotations

import numpy as np


def walk_many(table, letters, offsets, starts):
    out = np.array(starts, dtype=np.int32, copy=True)
    for j in range(len(offsets) - 1):
        s = int(out[j])
        for p in range(int(offsets[j + 1]) - 1, int(offsets[j]) - 1, -1):
            s = int(table[letters[p], s])
        out[j] = s
    return out


def walk_grid(table, letters, offsets, starts):
    starts = np.asarray(starts, dtype=np.int32)
    nwords = len(offsets) - 1
    out = np.empty((len(starts), nwords), dtype=np.int32)
    for j in range(nwords):
        s = starts.copy()
        for p in range(int(offsets[j + 1]) - 1, int(offsets[j]) - 1, -1):
            s = table[letters[p]][s]
        out[:, j] = s
    return out


def lattice_grid(basis, radix, us, gs):
    basis = np.asarray(basis, dtype=np.int64)
    d = basis.shape[0]
    v = np.asarray(gs, dtype=np.int64)[:, None, :] + np.asarray(us, dtype=np.int64)[None, :, :]
    idx = np.zeros(v.shape[:2], dtype=np.int64)
    for a in range(d):
        q = np.floor_divide(v[:, :, a], basis[a, a])
        v = v - q[:, :, None] * basis[a][None, None, :]
        idx = idx * radix[a] + v[:, :, a]
    return idx
