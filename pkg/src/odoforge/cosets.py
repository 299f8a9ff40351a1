"""Finite-index subgroups as coset tables.

A :class:`SubgroupHandle` stores the left action ``g . (w H) = (g w) H`` of every
letter on the finite coset set ``G/H``.  State 0 is ``H`` itself, and states are
numbered by the shortlex order of their canonical representatives, so every
derived object is reproducible.

Free-group subgroups are built by Stallings folding; a complete folded graph
certifies finite index.  Free-abelian subgroups are lattices in Hermite normal
form.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import caps, kernels
from .errors import CoreCap, GroupMismatch, NotFiniteIndex, StateCap
from .lattice import (
    IntegerMatrix,
    SmithForm,
    hermite_basis,
    is_full_rank_square,
    reduce_vector,
    smith_normal_form,
)
from .words import GroupDescriptor, Word


@dataclass(frozen=True)
class CosetTable:
    """Left action of each letter code on ``n`` cosets; row ``c`` is a permutation."""

    group: GroupDescriptor
    rows: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.rows[0])

    def act_letter(self, code: int, state: int) -> int:
        return self.rows[code][state]

    def to_json(self) -> list[list[int]]:
        # positive generators only; inverses are implied
        return [list(self.rows[2 * i]) for i in range(self.group.rank)]


class Containment(NamedTuple):
    holds: bool
    witness: Word | None

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class Quotient:
    """Structure of Z^rank / L as a direct sum of cyclic groups."""

    lattice: IntegerMatrix
    smith: SmithForm
    invariants: tuple[int, ...]  # nontrivial cyclic orders; 0 means a Z factor

    @property
    def free_rank(self) -> int:
        return sum(1 for d in self.invariants if d == 0)

    @property
    def order(self) -> int | None:
        if self.free_rank:
            return None
        out = 1
        for d in self.invariants:
            out *= d
        return out


@dataclass(eq=False)
class SubgroupHandle:
    group: GroupDescriptor
    table: CosetTable
    transversal: tuple[Word, ...]
    origin: dict = field(default_factory=dict)
    # free-abelian only: Hermite basis and map from box index to state
    hnf: tuple[tuple[int, ...], ...] | None = None
    box_to_state: np.ndarray | None = None

    def __post_init__(self):
        self._np_table = np.ascontiguousarray(np.array(self.table.rows, dtype=np.int32))
        self._schreier: tuple[Word, ...] | None = None
        if self.hnf is not None:
            self._radix = np.array([row[i] for i, row in enumerate(self.hnf)], dtype=np.int64)

    # -- basic queries ----------------------------------------------------
    @property
    def index(self) -> int:
        return self.table.n

    @property
    def np_table(self) -> np.ndarray:
        return self._np_table

    def _check(self, w: Word) -> None:
        if w.group != self.group:
            raise GroupMismatch(f"{w.group} vs {self.group}")

    def act(self, w: Word, state: int) -> int:
        """State of ``w . (coset ``state``)``."""
        self._check(w)
        rows = self.table.rows
        if self.hnf is not None:
            base = self.transversal[state].data
            return self._abelian_state(tuple(x + y for x, y in zip(w.data, base)))
        for c in reversed(w.letters):
            state = rows[c][state]
        return state

    def coset_of(self, w: Word) -> int:
        self._check(w)
        if self.hnf is not None:
            return self._abelian_state(w.data)
        rows = self.table.rows
        s = 0
        for c in reversed(w.data):
            s = rows[c][s]
        return s

    def _abelian_state(self, vec: Sequence[int]) -> int:
        r = reduce_vector(vec, self.hnf)
        idx = 0
        for a, x in enumerate(r):
            idx = idx * int(self._radix[a]) + x
        return int(self.box_to_state[idx])

    def contains(self, w: Word) -> bool:
        return self.coset_of(w) == 0

    def coset_grid(self, window: Sequence[Word], starts: Sequence[Word]) -> np.ndarray:
        """``out[i, j]`` = coset of ``window[j] * starts[i]`` (batched kernel)."""
        if self.hnf is not None:
            us = np.array([u.data for u in window], dtype=np.int64).reshape(len(window), self.group.rank)
            gs = np.array([g.data for g in starts], dtype=np.int64).reshape(len(starts), self.group.rank)
            idx = kernels.lattice_grid(np.array(self.hnf, dtype=np.int64), self._radix, us, gs)
            return self.box_to_state[idx].astype(np.int32)
        start_states = np.array([self.coset_of(g) for g in starts], dtype=np.int32)
        letters, offsets = _packed(window)
        return kernels.walk_grid(self._np_table, letters, offsets, start_states)

    def coset_many(self, words: Sequence[Word]) -> np.ndarray:
        if not words:
            return np.zeros(0, dtype=np.int32)
        return self.coset_grid(words, [self.group.identity()])[0]

    # -- structure --------------------------------------------------------
    def schreier_generators(self) -> tuple[Word, ...]:
        if self._schreier is None:
            t = self.transversal
            out = []
            seen = set()
            for i in range(self.index):
                for a in range(self.group.rank):
                    j = self.table.rows[2 * a][i]
                    s = t[j].inverse() * self.group.generator(a) * t[i]
                    if not s.is_identity() and s not in seen:
                        seen.add(s)
                        out.append(s)
            self._schreier = tuple(out)
        return self._schreier

    def is_normal(self) -> bool:
        """Normal iff every transversal conjugate of every Schreier generator stays inside."""
        for t in self.transversal:
            tinv = t.inverse()
            for s in self.schreier_generators():
                if self.coset_of(t * s * tinv) != 0:
                    return False
        return True

    def same_as(self, other: "SubgroupHandle") -> bool:
        return bool(contains_subgroup(self, other)) and bool(contains_subgroup(other, self))

    def __repr__(self):
        return f"SubgroupHandle({self.group}, index={self.index}, origin={self.origin.get('kind')})"


# -- canonical construction ------------------------------------------------

def _canonical(group: GroupDescriptor, perms: Sequence[Sequence[int]], base: int, origin: dict,
               max_states: int | None = None) -> tuple[CosetTable, tuple[Word, ...], list[int]]:
    """Renumber the orbit of ``base`` in shortlex-transversal order.

    ``perms[i]`` is the left action of generator ``i``.  Returns the table, the
    transversal and ``old_of_new`` (state relabelling).
    """
    k = group.rank
    inv = []
    for p in perms:
        q = [0] * len(p)
        for s, t in enumerate(p):
            q[t] = s
        inv.append(q)
    rows = []
    for i in range(k):
        rows.append(perms[i])
        rows.append(inv[i])
    # BFS distances over the orbit of base
    dist = {base: 0}
    layers = [[base]]
    while True:
        nxt = []
        for s in layers[-1]:
            for c in range(2 * k):
                t = rows[c][s]
                if t not in dist:
                    dist[t] = len(layers)
                    nxt.append(t)
        if not nxt:
            break
        layers.append(nxt)
    if max_states is not None and len(dist) > max_states:
        raise StateCap(f"{len(dist)} states exceed cap {max_states}")
    # shortlex-least representative: least first letter c with c^-1 . s one layer down
    word_of = {base: group.identity()}
    for depth in range(1, len(layers)):
        for s in layers[depth]:
            for c in range(2 * k):
                j = rows[c ^ 1][s]
                if dist.get(j) == depth - 1:
                    word_of[s] = group.letter(c) * word_of[j]
                    break
    old_of_new = sorted(dist, key=lambda s: word_of[s].shortlex_key())
    new_of_old = {s: i for i, s in enumerate(old_of_new)}
    new_rows = tuple(
        tuple(new_of_old[rows[c][s]] for s in old_of_new) for c in range(2 * k)
    )
    transversal = tuple(word_of[s] for s in old_of_new)
    return CosetTable(group, new_rows), transversal, old_of_new


_PACK_SLOT: list = [None, None]  # last packed window and its arrays


def _packed(window: Sequence[Word]) -> tuple[np.ndarray, np.ndarray]:
    """Packed letters of ``window``; the same ball is often walked on many tables."""
    key = tuple(window)
    if _PACK_SLOT[0] != key:
        _PACK_SLOT[0] = key
        _PACK_SLOT[1] = kernels.pack_words([u.data for u in key])
    return _PACK_SLOT[1]


def from_permutations(group: GroupDescriptor, perms: Sequence[Sequence[int]], base: int = 0,
                      origin: dict | None = None, max_states: int | None = None) -> SubgroupHandle:
    """Stabilizer of ``base`` under the left action given by generator permutations."""
    origin = dict(origin or {"kind": "permutations"})
    if max_states is None:
        max_states = caps.get("max_states")
    table, transversal, _ = _canonical(group, perms, base, origin, max_states)
    if group.is_free:
        return SubgroupHandle(group, table, transversal, origin)
    handle = SubgroupHandle(group, table, transversal, origin)
    basis = hermite_basis([s.data for s in handle.schreier_generators()], group.rank)
    return _abelian_handle(group, basis, origin, max_states)


def subgroup_from_generators(group: GroupDescriptor, gens: Sequence[Word | str],
                             max_states: int | None = None) -> SubgroupHandle:
    if max_states is None:
        max_states = caps.get("max_states")
    words = [group.word(g) if isinstance(g, str) else g for g in gens]
    for w in words:
        if w.group != group:
            raise GroupMismatch(f"{w.group} vs {group}")
    words = [w for w in words if not w.is_identity()]
    if not words:
        raise NotFiniteIndex("trivial subgroup has infinite index")
    origin = {"kind": "generators", "gens": tuple(str(w) for w in words)}
    if group.is_free:
        handle = _stallings(group, words, origin, max_states)
    else:
        basis = hermite_basis([w.data for w in words], group.rank)
        if not is_full_rank_square(basis, group.rank):
            raise NotFiniteIndex(f"lattice spanned by {origin['gens']} is not full rank")
        handle = _abelian_handle(group, basis, origin, max_states)
    for w in words:
        assert handle.coset_of(w) == 0, f"generator {w} not in its own subgroup"
    return handle


def _abelian_handle(group: GroupDescriptor, basis, origin: dict, max_states: int) -> SubgroupHandle:
    d = group.rank
    if not is_full_rank_square(basis, d):
        raise NotFiniteIndex("lattice is not full rank")
    radix = [basis[i][i] for i in range(d)]
    n = 1
    for r in radix:
        n *= r
    if n > max_states:
        raise StateCap(f"index {n} exceeds cap {max_states}")

    def box_index(v):
        idx = 0
        for a, x in enumerate(v):
            idx = idx * radix[a] + x
        return idx

    points = [()]
    for r in radix:
        points = [p + (x,) for p in points for x in range(r)]
    perms = []
    for i in range(d):
        unit = [0] * d
        unit[i] = 1
        perm = [0] * n
        for p in points:
            q = reduce_vector([x + y for x, y in zip(p, unit)], basis)
            perm[box_index(p)] = box_index(q)
        perms.append(perm)
    table, transversal, old_of_new = _canonical(group, perms, 0, origin)
    box_to_state = np.empty(n, dtype=np.int64)
    for new, old in enumerate(old_of_new):
        box_to_state[old] = new
    return SubgroupHandle(group, table, transversal, origin,
                          hnf=tuple(tuple(r) for r in basis), box_to_state=box_to_state)


def _stallings(group: GroupDescriptor, words: Sequence[Word], origin: dict, max_states: int) -> SubgroupHandle:
    """Fold the bouquet of loops labelled by ``words`` at a base vertex."""
    edges = []  # (u, generator index, v) meaning u --a_i--> v
    nverts = 1
    for w in words:
        u = 0
        for pos, c in enumerate(w.data):
            v = 0 if pos == len(w.data) - 1 else nverts
            if v:
                nverts += 1
            if c & 1:
                edges.append((v, c >> 1, u))
            else:
                edges.append((u, c >> 1, v))
            u = v
    parent = list(range(nverts))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        a, b = find(a), find(b)
        if a != b:
            if b < a:
                a, b = b, a
            parent[b] = a
            return True
        return False

    changed = True
    while changed:
        changed = False
        out: dict = {}
        inn: dict = {}
        for u, i, v in edges:
            u, v = find(u), find(v)
            w = out.setdefault((u, i), v)
            if w != v:
                changed |= union(w, v)
            x = inn.setdefault((v, i), u)
            if x != u:
                changed |= union(x, u)
    verts = sorted({find(x) for x in range(nverts)})
    if len(verts) > max_states:
        raise StateCap(f"{len(verts)} folded vertices exceed cap {max_states}")
    local = {v: j for j, v in enumerate(verts)}
    n = len(verts)
    k = group.rank
    follow = [[None] * n for _ in range(k)]  # follow[i][u] = target of a_i edge
    for u, i, v in edges:
        follow[i][local[find(u)]] = local[find(v)]
    for i in range(k):
        if any(t is None for t in follow[i]):
            raise NotFiniteIndex(
                f"folded graph of {origin.get('gens')} is incomplete ({n} vertices); index is infinite"
            )
    # left action of a_i follows the a_i^-1 edge
    perms = []
    for i in range(k):
        back = [0] * n
        for u, v in enumerate(follow[i]):
            back[v] = u
        perms.append(back)
    return from_permutations(group, perms, local[find(0)], origin, max_states)


# -- operations -------------------------------------------------------------

def _same_group(*handles: SubgroupHandle) -> None:
    g = handles[0].group
    for h in handles[1:]:
        if h.group != g:
            raise GroupMismatch(f"{h.group} vs {g}")


def coset_of(sub: SubgroupHandle, w: Word) -> int:
    return sub.coset_of(w)


def contains_subgroup(outer: SubgroupHandle, inner: SubgroupHandle) -> Containment:
    """Is ``inner`` a subgroup of ``outer``?  On failure, a witness in inner minus outer."""
    _same_group(outer, inner)
    for s in inner.schreier_generators():
        if outer.coset_of(s) != 0:
            return Containment(False, s)
    return Containment(True, None)


def intersect(h1: SubgroupHandle, h2: SubgroupHandle, max_states: int | None = None) -> SubgroupHandle:
    _same_group(h1, h2)
    if max_states is None:
        max_states = caps.get("max_states")
    g = h1.group
    r1, r2 = h1.table.rows, h2.table.rows
    index = {(0, 0): 0}
    order = [(0, 0)]
    q = deque([(0, 0)])
    while q:
        s = q.popleft()
        for c in range(2 * g.rank):
            t = (r1[c][s[0]], r2[c][s[1]])
            if t not in index:
                index[t] = len(order)
                order.append(t)
                if len(order) > max_states:
                    raise StateCap(f"intersection exceeds {max_states} states")
                q.append(t)
    perms = [[index[(r1[2 * i][a], r2[2 * i][b])] for a, b in order] for i in range(g.rank)]
    origin = {"kind": "intersect", "of": (h1.origin, h2.origin)}
    return from_permutations(g, perms, 0, origin, max_states)


def conjugate(h: SubgroupHandle, g: Word) -> SubgroupHandle:
    """The subgroup ``g h g^-1``: stabilizer of the coset ``g h``."""
    h._check(g)
    base = h.coset_of(g)
    perms = [h.table.rows[2 * i] for i in range(h.group.rank)]
    origin = {"kind": "conjugate", "by": str(g), "of": h.origin}
    return from_permutations(h.group, perms, base, origin)


def normal_core(h: SubgroupHandle, cap: int | None = None) -> SubgroupHandle:
    """Kernel of the permutation action on ``G/h``: the Cayley graph of its image."""
    if cap is None:
        cap = caps.get("core")
    g = h.group
    k = g.rank
    gens = [np.array(h.table.rows[c], dtype=np.int32) for c in range(2 * k)]
    ident = np.arange(h.index, dtype=np.int32)
    index = {ident.tobytes(): 0}
    elems = [ident]
    q = deque([ident])
    while q:
        p = q.popleft()
        for c in range(0, 2 * k, 2):
            r = gens[c][p]
            key = r.tobytes()
            if key not in index:
                index[key] = len(elems)
                elems.append(r)
                if len(elems) > cap:
                    raise CoreCap(f"permutation image exceeds {cap} elements")
                q.append(r)
    perms = [[index[gens[2 * i][p].tobytes()] for p in elems] for i in range(k)]
    origin = {"kind": "core", "of": h.origin}
    return from_permutations(g, perms, 0, origin, max(cap, caps.get("max_states")))


def schreier_data(h: SubgroupHandle) -> tuple[tuple[Word, ...], tuple[Word, ...]]:
    return h.transversal, h.schreier_generators()


def eigen_lattice_snf(h: SubgroupHandle) -> Quotient:
    """Z^rank modulo the abelianized image of ``h``."""
    rank = h.group.rank
    rows = [s.exponent_sums() for s in h.schreier_generators()]
    if not rows:
        rows = [(0,) * rank]
    lattice = IntegerMatrix.from_rows(rows, rank)
    smith = smith_normal_form(lattice)
    return Quotient(lattice, smith, smith.torsion)


def projection(child: SubgroupHandle, parent: SubgroupHandle) -> tuple[int, ...]:
    """Coset map G/child -> G/parent, valid when child is inside parent."""
    return tuple(parent.coset_of(t) for t in child.transversal)


def haar(h: SubgroupHandle) -> Fraction:
    return Fraction(1, h.index)
