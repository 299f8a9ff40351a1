from __future__ import annotations

import numpy as np
import pytest

from odoforge import kernels
from odoforge.kernels import _pykernels
from odoforge.cosets import from_permutations, subgroup_from_generators
from odoforge.words import ball_enumerate

from conftest import S3_PERMS

try:
    from odoforge.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


@pytest.fixture
def s3_table(F2):
    return from_permutations(F2, S3_PERMS).np_table


def test_backend_is_reported():
    assert kernels.BACKEND in ("compiled", "python")


def test_fallback_walk_matches_word_action(F2, s3_table):
    h = from_permutations(F2, S3_PERMS)
    ball = ball_enumerate(F2, 4)
    letters, offsets = kernels.pack_words([w.letters for w in ball])
    got = _pykernels.walk_many(s3_table, letters, offsets, np.zeros(len(ball), dtype=np.int32))
    assert list(got) == [h.act(w, 0) for w in ball]


@needs_compiled
def test_walks_agree(F2, s3_table):
    ball = ball_enumerate(F2, 5)
    letters, offsets = kernels.pack_words([w.letters for w in ball])
    starts = np.arange(len(ball), dtype=np.int32) % 3
    assert np.array_equal(_ckernels.walk_many(s3_table, letters, offsets, starts),
                          _pykernels.walk_many(s3_table, letters, offsets, starts))
    grid_starts = np.array([0, 1, 2], dtype=np.int32)
    assert np.array_equal(_ckernels.walk_grid(s3_table, letters, offsets, grid_starts),
                          _pykernels.walk_grid(s3_table, letters, offsets, grid_starts))


@needs_compiled
def test_lattice_grids_agree(Z2):
    h = subgroup_from_generators(Z2, ["a^4*b", "b^6"])
    basis = np.array(h.hnf, dtype=np.int64)
    radix = np.array([basis[i, i] for i in range(2)], dtype=np.int64)
    us = np.array([w.data for w in ball_enumerate(Z2, 5)], dtype=np.int64)
    gs = np.array([w.data for w in ball_enumerate(Z2, 3)], dtype=np.int64)
    ours = _ckernels.lattice_grid(basis, radix, us, gs)
    assert np.array_equal(ours, _pykernels.lattice_grid(basis, radix, us, gs))


def test_switching_backends_keeps_results(F2, stab0):
    ball = ball_enumerate(F2, 4)
    before = list(stab0.coset_many(ball))
    previous = kernels.BACKEND
    try:
        kernels.use("python")
        assert list(stab0.coset_many(ball)) == before
    finally:
        kernels.use(previous)
    assert before == [stab0.coset_of(w) for w in ball]
