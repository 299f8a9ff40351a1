"""Hot loops: coset-table walks and lattice reductions over batches of words.

The compiled extension is used when it was built; otherwise the numpy
fallback is selected.  Set ``ODOFORGE_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("ODOFORGE_PURE"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"


def pack_words(words) -> tuple[np.ndarray, np.ndarray]:
    """Flatten letter sequences into (letters, offsets) arrays."""
    offsets = np.zeros(len(words) + 1, dtype=np.int64)
    total = 0
    for j, w in enumerate(words):
        total += len(w)
        offsets[j + 1] = total
    letters = np.fromiter((c for w in words for c in w), dtype=np.int32, count=total)
    return letters, offsets


def walk_many(table, letters, offsets, starts) -> np.ndarray:
    return _impl.walk_many(table, letters, offsets, np.ascontiguousarray(starts, dtype=np.int32))


def walk_grid(table, letters, offsets, starts) -> np.ndarray:
    return _impl.walk_grid(table, letters, offsets, np.ascontiguousarray(starts, dtype=np.int32))


def lattice_grid(basis, radix, us, gs) -> np.ndarray:
    return _impl.lattice_grid(
        np.ascontiguousarray(basis, dtype=np.int64),
        np.ascontiguousarray(radix, dtype=np.int64),
        np.ascontiguousarray(us, dtype=np.int64),
        np.ascontiguousarray(gs, dtype=np.int64),
    )


def use(backend: str) -> None:
    """Switch backend at runtime (benchmarks and equivalence tests)."""
    global _impl, BACKEND
    if backend == "python":
        _impl = _pykernels
    else:
        from . import _ckernels

        _impl = _ckernels
    BACKEND = backend
