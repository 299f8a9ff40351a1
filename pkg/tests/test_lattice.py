from __future__ import annotations

from itertools import combinations
from math import gcd

from hypothesis import given, settings, strategies as st

from odoforge.lattice import hermite_basis, reduce_vector, smith_normal_form


def _det(m):
    if len(m) == 1:
        return m[0][0]
    return sum((-1) ** j * m[0][j] * _det([row[:j] + row[j + 1:] for row in m[1:]]) for j in range(len(m)))


def determinantal_divisors(rows):
    """d_k = gcd of all k x k minors; invariant factors are d_k / d_{k-1}."""
    m, n = len(rows), len(rows[0])
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for ri in combinations(range(m), k):
            for ci in combinations(range(n), k):
                g = gcd(g, _det([[rows[r][c] for c in ci] for r in ri]))
        out.append(g)
    return out


def _matmul(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


matrices = st.integers(1, 3).flatmap(
    lambda m: st.integers(1, 3).flatmap(
        lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=m, max_size=m)))


def test_diag_two_two():
    assert smith_normal_form([[2, 0], [0, 2]]).torsion == (2, 2)


def test_cyclic_quotient():
    assert smith_normal_form([[1, 0], [0, 2], [1, 0]]).torsion == (2,)


def test_hnf_of_intersection_lattice():
    assert hermite_basis([[2, 0], [0, 3]], 2) == [[2, 0], [0, 3]]
    assert hermite_basis([[4, 6], [2, 3]], 2) == [[2, 3]]


@settings(max_examples=150)
@given(matrices)
def test_smith_matches_determinantal_divisors(rows):
    snf = smith_normal_form(rows)
    divisors = determinantal_divisors(rows)
    prev = 1
    expected = []
    for d in divisors:
        if d == 0:
            expected.append(0)
        else:
            expected.append(d // prev)
            prev = d
    got = list(snf.diagonal) + [0] * (len(expected) - len(snf.diagonal))
    assert got[: len(expected)] == expected


@settings(max_examples=150)
@given(matrices)
def test_smith_transforms(rows):
    snf = smith_normal_form(rows)
    d = _matmul(_matmul([list(r) for r in snf.left], rows), [list(r) for r in snf.right])
    for i, row in enumerate(d):
        for j, x in enumerate(row):
            assert x == (snf.diagonal[i] if i == j and i < len(snf.diagonal) else 0)
    nz = [x for x in snf.diagonal if x]
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))


@given(matrices, st.lists(st.integers(-20, 20), min_size=3, max_size=3))
def test_reduction_is_canonical_modulo_lattice(rows, v):
    n = len(rows[0])
    basis = hermite_basis(rows, n)
    v = v[:n]
    shift = [x + 3 * y for x, y in zip(v, rows[0])]
    assert reduce_vector(v, basis) == reduce_vector(shift, basis)
