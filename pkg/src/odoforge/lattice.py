"""Exact integer lattices: Hermite normal form, Smith normal form, reduction.

Matrices are small (desk scale), so everything is plain Python integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class IntegerMatrix:
    rows: tuple[tuple[int, ...], ...]
    ncols: int

    def __post_init__(self):
        for row in self.rows:
            if len(row) != self.ncols:
                raise ValueError("ragged integer matrix")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], ncols: int | None = None) -> "IntegerMatrix":
        rows = tuple(tuple(int(x) for x in r) for r in rows)
        if ncols is None:
            if not rows:
                raise ValueError("cannot infer column count of an empty matrix")
            ncols = len(rows[0])
        return cls(rows, ncols)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.rows]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def hermite_basis(vectors: Sequence[Sequence[int]], dim: int) -> list[list[int]]:
    """Row-style Hermite normal form of the lattice spanned by ``vectors``.

    Returns the nonzero rows, in echelon form with positive pivots and the
    entries above each pivot reduced into ``[0, pivot)``.
    """
    rows = [list(v) for v in vectors if any(v)]
    basis: list[list[int]] = []
    pivots: list[int] = []
    col = 0
    while rows and col < dim:
        nz = [r for r in rows if r[col] != 0]
        zero = [r for r in rows if r[col] == 0]
        if not nz:
            col += 1
            continue
        pivot = nz[0]
        for r in nz[1:]:
            g, x, y = _xgcd(pivot[col], r[col])
            a, b = pivot[col] // g, r[col] // g
            new_pivot = [x * p + y * q for p, q in zip(pivot, r)]
            rest = [a * q - b * p for p, q in zip(pivot, r)]
            pivot = new_pivot
            if any(rest):
                zero.append(rest)
        if pivot[col] < 0:
            pivot = [-p for p in pivot]
        basis.append(pivot)
        pivots.append(col)
        rows = [r for r in zero if any(r)]
        col += 1
    for i, row in enumerate(basis):
        c = pivots[i]
        for j in range(i):
            q = basis[j][c] // row[c]
            if q:
                basis[j] = [p - q * s for p, s in zip(basis[j], row)]
    return basis


def is_full_rank_square(basis: Sequence[Sequence[int]], dim: int) -> bool:
    return len(basis) == dim and all(basis[i][i] > 0 for i in range(dim))


def reduce_vector(vec: Sequence[int], basis: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Canonical representative of ``vec`` modulo a Hermite basis.

    Each pivot coordinate is brought into ``[0, pivot)``; for a full-rank
    basis the result lies in the fundamental box.
    """
    v = list(vec)
    for row in basis:
        c = next(j for j, x in enumerate(row) if x)
        q = v[c] // row[c]
        if q:
            for j in range(c, len(v)):
                v[j] -= q * row[j]
    return tuple(v)


@dataclass(frozen=True)
class SmithForm:
    diagonal: tuple[int, ...]  # d1 | d2 | ... ; zeros last
    left: tuple[tuple[int, ...], ...]  # U, with U A V = D
    right: tuple[tuple[int, ...], ...]  # V
    shape: tuple[int, int]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d)

    @property
    def torsion(self) -> tuple[int, ...]:
        """Invariant factors of Z^ncols / rowspace, excluding 1s; zeros mean Z factors."""
        ncols = self.shape[1]
        full = list(self.diagonal) + [0] * (ncols - len(self.diagonal))
        return tuple(d for d in full[:ncols] if d != 1)


def smith_normal_form(matrix: IntegerMatrix | Sequence[Sequence[int]]) -> SmithForm:
    """Smith normal form by exact row/column reduction.

    The pivot at each stage is an entry of minimal nonzero absolute value.
    """
    if isinstance(matrix, IntegerMatrix):
        a = matrix.to_lists()
        m, n = matrix.nrows, matrix.ncols
    else:
        a = [list(r) for r in matrix]
        m = len(a)
        n = len(a[0]) if a else 0
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for r in a:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, q):  # row dst += q * row src
        a[dst] = [x + q * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + q * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, q):
        for r in a:
            r[dst] += q * r[src]
        for r in v:
            r[dst] += q * r[src]

    diag = []
    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    x = a[i][j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
            if best is None:
                break
            _, i, j = best
            swap_rows(t, i)
            swap_cols(t, j)
            p = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                q = a[i][t] // p
                if q:
                    add_row(i, t, -q)
                dirty |= a[i][t] != 0
            for j in range(t + 1, n):
                q = a[t][j] // p
                if q:
                    add_col(j, t, -q)
                dirty |= a[t][j] != 0
            if dirty:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p),
                None,
            )
            if bad is not None:
                add_row(t, bad, 1)
                continue
            break
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
        diag.append(a[t][t])
        if a[t][t] == 0:
            break
    diag += [0] * (min(m, n) - len(diag))
    return SmithForm(
        diagonal=tuple(diag),
        left=tuple(tuple(r) for r in u),
        right=tuple(tuple(r) for r in v),
        shape=(m, n),
    )
