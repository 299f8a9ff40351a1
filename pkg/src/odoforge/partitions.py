"""Finite sample-space shadows of the subshift: clopen partitions, towers, measures.

A sample point is an orbit point ``g . x``, one per distinct window pattern,
represented by the shortlex-least ``g`` realizing it.  Clopen sets are exact
predicates evaluated on *any* orbit element ``h g . x`` (a "view"), so a
translate never has to be guessed from a pattern; the sample only fixes which
cells exist.  Whenever a predicate would read a provisional value, or lands on
a cell signature never seen on the sample, the operation raises instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    ColumnSumViolation,
    InclusionUndecided,
    RadiusCap,
    SampleTooShallow,
    TranslateEscapesSpace,
)
from .toeplitz import ToeplitzSpec, orbit_patterns
from .words import Word, ball_enumerate


# -- sample space -------------------------------------------------------------

@dataclass(eq=False)
class SampleSpace:
    spec: ToeplitzSpec
    window: tuple[Word, ...]
    witnesses: tuple[Word, ...]
    patterns: tuple[tuple[int, ...], ...]
    dropped: int
    stable: bool | None
    source: str  # "ball:<r>" or "domain:<n>"
    strict: bool = True  # False: views may read provisional values (counted, not raised)

    def __post_init__(self):
        self.provisional_reads = 0
        self.ids = {p: i for i, p in enumerate(self.patterns)}
        if len(self.ids) != len(self.patterns):
            raise AssertionError("duplicate patterns in sample space")

    def __len__(self) -> int:
        return len(self.witnesses)

    @property
    def all_ids(self) -> frozenset[int]:
        return frozenset(range(len(self)))

    def values(self, gs: Sequence[Word], positions: Sequence[Word]) -> np.ndarray:
        """``out[i, j] = x(positions[j] * gs[i])``; every read must be exact."""
        if not positions or not gs:
            return np.zeros((len(gs), len(positions)), dtype=np.int8)
        syms, exact = self.spec.evaluate_grid(positions, gs)
        if not self.strict:
            self.provisional_reads += int((~exact).sum())
        elif not exact.all():
            i, j = map(int, np.argwhere(~exact)[0])
            raise TranslateEscapesSpace(
                f"view {gs[i]} needs x({positions[j] * gs[i]}), which is provisional at depth "
                f"{self.spec.depth}; build a deeper tower or shrink the sample"
            )
        return syms

    def locate(self, g: Word) -> int:
        """Sample id of the orbit point ``g . x`` (by its window pattern)."""
        pattern = tuple(int(v) for v in self.values([g], self.window)[0])
        try:
            return self.ids[pattern]
        except KeyError:
            raise TranslateEscapesSpace(f"pattern of {g} . x is not in the sample space") from None

    def coset_labels(self, gs: Sequence[Word], n: int) -> list[int]:
        return [int(s) for s in self.spec.chain.levels[n].coset_many(list(gs))]


def sample_space(spec: ToeplitzSpec, window: Sequence[Word], sample_radius: int | None = None,
                 *, domain_level: int | None = None, strict: bool = True) -> SampleSpace:
    """Distinct exact window patterns of orbit points.

    Witnesses come from the ball of ``sample_radius`` or, with
    ``domain_level``, from the fundamental domain D_n (shortlex order).  The
    stability flag compares with the doubled ball (or with D_{n+1}).

    With ``strict=False`` later views may read provisional values: the cells
    then describe the Gamma_N-periodic truncation of the array, and the number
    of such reads is kept in ``provisional_reads``.
    """
    window = tuple(window)
    if domain_level is not None:
        starts = sorted(spec.tower.domains[domain_level])
        source = f"domain:{domain_level}"
        bigger = sorted(spec.tower.domains[domain_level + 1]) if domain_level < spec.depth else None
    else:
        if sample_radius is None:
            raise ValueError("give sample_radius or domain_level")
        starts = ball_enumerate(spec.group, sample_radius)
        source = f"ball:{sample_radius}"
        try:
            bigger = ball_enumerate(spec.group, 2 * sample_radius)
        except RadiusCap:
            bigger = None
    op = orbit_patterns(spec, window, 0, starts=starts)
    stable = None
    if bigger is not None:
        stable = set(orbit_patterns(spec, window, 0, starts=bigger).patterns) == set(op.patterns)
    return SampleSpace(spec, window, tuple(op.patterns.values()), tuple(op.patterns), op.dropped,
                       stable, source, strict)


# -- clopen sets and partitions -------------------------------------------------

@dataclass(frozen=True)
class SymbolicClopen:
    """A clopen set traced on the sample space, as a set of sample ids."""

    space: SampleSpace = field(repr=False, compare=False)
    ids: frozenset[int]

    def __post_init__(self):
        if not self.ids <= self.space.all_ids:
            raise ValueError("clopen set leaves the sample space")

    def __or__(self, other: "SymbolicClopen") -> "SymbolicClopen":
        return SymbolicClopen(self.space, self.ids | other.ids)

    def __and__(self, other: "SymbolicClopen") -> "SymbolicClopen":
        return SymbolicClopen(self.space, self.ids & other.ids)

    def complement(self) -> "SymbolicClopen":
        return SymbolicClopen(self.space, self.space.all_ids - self.ids)

    def translate(self, g: Word) -> "SymbolicClopen":
        """``g . C`` wherever every translate is again a sample point."""
        sp = self.space
        return SymbolicClopen(sp, frozenset(sp.locate(g * sp.witnesses[i]) for i in self.ids))

    def __len__(self) -> int:
        return len(self.ids)


class Partition(Protocol):
    space: SampleSpace

    @property
    def cells(self) -> tuple[frozenset[int], ...]: ...

    def cell_of_many(self, gs: Sequence[Word]) -> list[int]: ...


class _Memo:
    """Per-element cache for cell lookups; views are group elements, so caching is exact."""

    def __init__(self, compute: Callable[[list[Word]], list]):
        self._compute = compute
        self._cache: dict[Word, object] = {}

    def __call__(self, gs: Sequence[Word]) -> list:
        missing = [g for g in dict.fromkeys(gs) if g not in self._cache]
        if missing:
            for g, v in zip(missing, self._compute(missing)):
                self._cache[g] = v
        return [self._cache[g] for g in gs]


def _trace(part, n_cells: int) -> tuple[frozenset[int], ...]:
    sp = part.space
    labels = part.cell_of_many(list(sp.witnesses))
    buckets: list[set[int]] = [set() for _ in range(n_cells)]
    for i, c in enumerate(labels):
        buckets[c].add(i)
    return tuple(frozenset(b) for b in buckets)


class WholeSpace:
    """The trivial partition {X}."""

    def __init__(self, space: SampleSpace):
        self.space = space
        self.cells = (space.all_ids,)

    def cell_of_many(self, gs):
        return [0] * len(gs)


class PatternPartition:
    """Cells of the orbit by the symbol pattern on ``positions`` (patterns seen on the sample)."""

    def __init__(self, space: SampleSpace, positions: Sequence[Word]):
        self.space = space
        self.positions = tuple(positions)
        seen = space.values(list(space.witnesses), self.positions)
        self.keys = tuple(sorted({tuple(int(v) for v in row) for row in seen}))
        self._index = {k: i for i, k in enumerate(self.keys)}
        self.cell_of_many = _Memo(self._cells_of)
        self.cells = _trace(self, len(self.keys))

    def _cells_of(self, gs):
        rows = self.space.values(list(gs), self.positions)
        out = []
        for g, row in zip(gs, rows):
            key = tuple(int(v) for v in row)
            if key not in self._index:
                raise TranslateEscapesSpace(f"pattern of {g} . x on the refiner window is not in the sample")
            out.append(self._index[key])
        return out


class ExplicitPartition:
    """A partition given by its cells on the sample only; views must be sample points.

    Views are located by their window pattern, so this is exact only when the
    window pattern determines the cell (e.g. the window is wide enough to fix
    the relevant cosets).
    """

    def __init__(self, space: SampleSpace, cells: Sequence[frozenset[int]]):
        self.space = space
        self.cells = tuple(frozenset(c) for c in cells)
        self._of = {}
        for k, c in enumerate(self.cells):
            for i in c:
                if i in self._of:
                    raise ValueError("cells overlap")
                self._of[i] = k
        if len(self._of) != len(space):
            raise ValueError("cells do not cover the sample space")

    def cell_of_many(self, gs):
        return [self._of[self.space.locate(g)] for g in gs]


@dataclass(eq=False)
class LabeledPartition:
    """Tower partition {w . C_j : w in D, 1 <= j <= k} at level ``n``.

    ``signature`` maps a batch of base views (elements of Gamma_n) to the
    signature tuples that name base cells; ``keys`` lists the signatures of the
    base cells in order.
    """

    space: SampleSpace
    level: int
    transversal: tuple[Word, ...]
    keys: tuple[tuple, ...]
    signature: Callable[[list[Word]], list[tuple]] = field(repr=False)
    cells: tuple[frozenset[int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        self._key_index = {k: j for j, k in enumerate(self.keys)}
        h = self.space.spec.chain.levels[self.level]
        states = h.coset_many(list(self.transversal))
        self._d_of_state = {int(s): i for i, s in enumerate(states)}
        self._d_inv = [d.inverse() for d in self.transversal]
        self.base_index_many = _Memo(self._base_indices)
        self.cell_of_many = _Memo(self._cells_of)
        if len(self._d_of_state) != h.index or not self.transversal[0].is_identity():
            raise ValueError("transversal must be a fundamental domain starting at e")
        self.cells = _trace(self, len(self.transversal) * self.k)
        check_partition(self)

    @property
    def k(self) -> int:
        return len(self.keys)

    @property
    def base_cells(self) -> tuple[frozenset[int], ...]:
        return self.cells[: self.k]

    @property
    def base_union(self) -> frozenset[int]:
        return frozenset().union(*self.base_cells)

    @property
    def base_views(self) -> tuple[tuple[Word, ...], ...]:
        """Orbit points of each base cell: pull-backs ``d^-1 g`` of the sample witnesses."""
        if not hasattr(self, "_base_views"):
            views = _base_views(self.space, self.level, self.transversal)
            groups: list[list[Word]] = [[] for _ in range(self.k)]
            for b, j in zip(views, self.base_index_many(views)):
                groups[j].append(b)
            self._base_views = tuple(tuple(g) for g in groups)
        return self._base_views

    def cell_index(self, d_index: int, j: int) -> int:
        return d_index * self.k + j

    def split(self, gs: Sequence[Word]) -> tuple[list[int], list[Word]]:
        """D-index of each view and its pull-back ``d^-1 g`` into the base."""
        labels = self.space.coset_labels(gs, self.level)
        ds = [self._d_of_state[s] for s in labels]
        return ds, [self._d_inv[d] * g for d, g in zip(ds, gs)]

    def _base_indices(self, bs: Sequence[Word]) -> list[int]:
        out = []
        for b, sig in zip(bs, self.signature(list(bs))):
            if sig not in self._key_index:
                raise TranslateEscapesSpace(f"base view {b} has a cell signature never seen on the sample")
            out.append(self._key_index[sig])
        return out

    def _cells_of(self, gs):
        ds, bs = self.split(gs)
        js = self.base_index_many(bs)
        return [self.cell_index(d, j) for d, j in zip(ds, js)]


def check_partition(part) -> None:
    """Exact disjoint cover of the sample space."""
    seen: set[int] = set()
    total = 0
    for c in part.cells:
        total += len(c)
        seen |= c
    if total != len(seen) or seen != part.space.all_ids:
        raise AssertionError("cells are not a disjoint cover of the sample space")


def _base_views(space: SampleSpace, level: int, transversal: Sequence[Word]) -> list[Word]:
    """Pull-backs ``d^-1 g`` of every sample witness into Gamma_n, deduplicated, shortlex."""
    h = space.spec.chain.levels[level]
    d_of = {int(s): d for d, s in zip(transversal, h.coset_many(list(transversal)))}
    labels = space.coset_labels(space.witnesses, level)
    return sorted({d_of[s].inverse() * g for g, s in zip(space.witnesses, labels)})


def base_partition(spec: ToeplitzSpec, n: int, space: SampleSpace) -> LabeledPartition:
    """Coset partition {w . C_{Gamma_n}} with a single base cell."""
    if n > spec.depth:
        raise ValueError(f"level {n} beyond depth {spec.depth}")
    return LabeledPartition(space, n, spec.tower.domains[n], ((),), lambda bs: [()] * len(bs))


def kr_refine(r: Partition, q: LabeledPartition) -> LabeledPartition:
    """R ^ Q: split each base cell of Q by the R-cell of its w-translates, w in D."""
    if r.space is not q.space:
        raise ValueError("partitions live on different sample spaces")
    d = q.transversal

    def signature(bs: list[Word]) -> list[tuple]:
        cols = [q.base_index_many(bs)]
        for w in d:
            cols.append(r.cell_of_many([w * b for b in bs]))
        return list(zip(*cols))

    views = _base_views(q.space, q.level, d)
    keys = tuple(sorted(set(signature(views))))
    out = LabeledPartition(q.space, q.level, d, keys, signature)
    if out.base_union != q.base_union:
        raise AssertionError("refined base cells do not union to C")
    return out


def refines(fine, coarse) -> bool:
    """Every nonempty cell of ``fine`` lies inside exactly one cell of ``coarse``."""
    owner = {}
    for k, c in enumerate(coarse.cells):
        for i in c:
            owner[i] = k
    return all(len({owner[i] for i in c}) == 1 for c in fine.cells if c)


def same_cells(a, b) -> bool:
    return [c for c in a.cells] == [c for c in b.cells]


def return_time_violations(p: LabeledPartition, radius: int) -> list[tuple[Word, Word]]:
    """Pairs (witness, gamma) with the witness in C but gamma . point outside C."""
    sp = p.space
    ball = ball_enumerate(sp.spec.group, radius)
    gammas = [g for g, s in zip(ball, sp.spec.chain.levels[p.level].coset_many(ball)) if s == 0]
    bad = []
    base = sorted(p.base_union)
    for i in base:
        g = sp.witnesses[i]
        ds, _ = p.split([gm * g for gm in gammas])
        bad.extend((g, gm) for gm, dd in zip(gammas, ds) if dd != 0)
    return bad


def default_refiners(space: SampleSpace, levels: int) -> list[PatternPartition]:
    """Symbol-pattern partitions on the windows D_n (growing with n)."""
    return [PatternPartition(space, space.spec.tower.domains[n]) for n in range(levels + 1)]


@dataclass
class TowerSequence:
    partitions: list[LabeledPartition]
    separated: bool  # distinct sample patterns lie in distinct cells of the last partition


def kr_tower_sequence(spec: ToeplitzSpec, space: SampleSpace, levels: int,
                      refiners: Sequence[Partition] | None = None,
                      test_radius: int = 2) -> TowerSequence:
    """P_0 = R_0 ^ Q_0 and P_n = P_{n-1} ^ (R_n ^ Q_n), with the tower properties checked."""
    if levels > spec.depth:
        raise ValueError(f"{levels} levels exceed depth {spec.depth}")
    if refiners is None:
        refiners = default_refiners(space, levels)
    parts: list[LabeledPartition] = []
    for n in range(levels + 1):
        qn = base_partition(spec, n, space)
        pn = kr_refine(refiners[n], qn)
        if parts:
            pn = kr_refine(parts[-1], pn)
            if not pn.base_union <= parts[-1].base_union:
                raise AssertionError(f"C_{n} is not inside C_{n - 1}")
            if not refines(pn, parts[-1]):
                raise AssertionError(f"P_{n} does not refine P_{n - 1}")
        if return_time_violations(pn, test_radius):
            raise AssertionError(f"return-time law fails at level {n}")
        parts.append(pn)
    last = parts[-1]
    owner = {}
    for k, c in enumerate(last.cells):
        for i in c:
            owner[i] = k
    separated = len(set(owner.values())) == len(space)
    return TowerSequence(parts, separated)


# -- incidence matrices and measures ---------------------------------------------

@dataclass(frozen=True)
class IncidenceMatrix:
    entries: tuple[tuple[int, ...], ...]  # k_n x k_{n+1}
    ratio: int  # |D_{n+1}| / |D_n|

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0]) if self.entries else 0

    def column_sums(self) -> list[int]:
        rows, cols = self.shape
        return [sum(self.entries[i][j] for i in range(rows)) for j in range(cols)]

    def to_csv(self) -> str:
        return "\n".join(",".join(str(v) for v in row) for row in self.entries) + "\n"


def incidence_matrix(p: LabeledPartition, p_next: LabeledPartition,
                     d_next: Sequence[Word] | None = None) -> IncidenceMatrix:
    """A(i, j) = #{w in D_{n+1} : w . C_{n+1, j} inside C_{n, i}}.

    Inclusion is decided on every known orbit point of C_{n+1, j}.
    """
    if d_next is None:
        d_next = p_next.transversal
    k, k_next = p.k, p_next.k
    a = [[0] * k_next for _ in range(k)]
    for j, members in enumerate(p_next.base_views):
        members = list(members)
        if not members:
            raise InclusionUndecided(f"base cell {j} at level {p_next.level} has no sample point")
        for w in d_next:
            targets = set(p.cell_of_many([w * g for g in members]))
            if len(targets) != 1:
                raise InclusionUndecided(f"{w} . C_{p_next.level},{j} meets {len(targets)} cells of level {p.level}")
            t = targets.pop()
            if t < k:  # a base cell, i.e. w lies in Gamma_n
                a[t][j] += 1
    ratio = len(d_next) // len(p.transversal)
    m = IncidenceMatrix(tuple(tuple(r) for r in a), ratio)
    check_column_sums(m)
    return m


def check_column_sums(m: IncidenceMatrix) -> None:
    for j, s in enumerate(m.column_sums()):
        if s != m.ratio:
            raise ColumnSumViolation(f"column {j} sums to {s}, expected {m.ratio}")


@dataclass(frozen=True)
class SimplexVector:
    coords: tuple[Fraction, ...]
    domain_size: int  # |D_n|

    def __post_init__(self):
        if any(c < 0 for c in self.coords):
            raise ValueError("negative simplex coordinate")
        if sum(self.coords, Fraction(0)) != Fraction(1, self.domain_size):
            raise ValueError("coordinates do not sum to 1/|D_n|")


FOLNER = "folner"
NONAMENABLE = "nonamenable"

LABELS = {
    FOLNER: "Folner boxes: invariant measure estimate",
    NONAMENABLE: "inverse-limit element - invariance not guaranteed (group not amenable)",
}


@dataclass
class MeasureEstimate:
    intervals: list[list[tuple[Fraction, Fraction]]]  # per depth m: hull of A_0..A_{m-1}(Delta_m) in Delta_0
    estimates: list[SimplexVector]  # mu_0 .. mu_M, with mu_n = A_n mu_{n+1}
    diameter: Fraction
    tolerance: float
    mode: str

    @property
    def uniquely_ergodic(self) -> bool:
        return self.diameter < self.tolerance

    @property
    def label(self) -> str:
        return LABELS[self.mode]


def _matmul(a: list[list[int]], b: Sequence[Sequence[int]]) -> list[list[int]]:
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(row[t] * b[t][j] for t in range(inner)) for j in range(cols)] for row in a]


def measure_estimate(matrices: Sequence[IncidenceMatrix], domain_sizes: Sequence[int],
                     mode: str = FOLNER, tolerance: float = 1e-9) -> MeasureEstimate:
    """Nested images of the simplices Delta_m in Delta_0, and a consistent point estimate."""
    if len(domain_sizes) != len(matrices) + 1:
        raise ValueError("need |D_n| for every level")
    for n, m in enumerate(matrices):
        check_column_sums(m)
        if m.ratio * domain_sizes[n] != domain_sizes[n + 1]:
            raise ColumnSumViolation(f"level {n}: ratio {m.ratio} disagrees with |D_n|")
        if n + 1 < len(matrices) and m.shape[1] != matrices[n + 1].shape[0]:
            raise ValueError(f"matrices {n} and {n + 1} are not compatible")
    k0 = matrices[0].shape[0] if matrices else 1
    prod = [[int(i == j) for j in range(k0)] for i in range(k0)]
    intervals = []
    for m in range(len(matrices) + 1):
        if m:
            prod = _matmul(prod, matrices[m - 1].entries)
        scale = Fraction(1, domain_sizes[m])
        intervals.append([(min(row) * scale, max(row) * scale) for row in prod])
    diameter = max((hi - lo for hi, lo in ((b, a) for a, b in intervals[-1])), default=Fraction(0))
    # point estimate: barycenter of the deepest simplex pushed up exactly
    last_k = matrices[-1].shape[1] if matrices else k0
    mu = [Fraction(1, last_k * domain_sizes[-1])] * last_k
    estimates = [SimplexVector(tuple(mu), domain_sizes[-1])]
    for n in range(len(matrices) - 1, -1, -1):
        a = matrices[n].entries
        mu = [sum((a[i][j] * mu[j] for j in range(len(mu))), Fraction(0)) for i in range(len(a))]
        estimates.append(SimplexVector(tuple(mu), domain_sizes[n]))
    estimates.reverse()
    return MeasureEstimate(intervals, estimates, diameter, tolerance, mode)


def measure_mode(spec: ToeplitzSpec) -> str:
    return NONAMENABLE if spec.group.is_free and spec.group.rank > 1 else FOLNER


@dataclass
class MeasureRun:
    space: SampleSpace
    towers: TowerSequence
    matrices: list[IncidenceMatrix]
    estimate: MeasureEstimate


def tower_measures(spec: ToeplitzSpec, levels: int, space: SampleSpace,
                   refiners: Sequence[Partition] | None = None, tolerance: float = 1e-9) -> MeasureRun:
    # With witnesses drawn from D_L, L <= levels, the top base cell holds a
    # single witness and collapses to one tower: the estimate would be forced.
    if space.source.startswith("domain:") and int(space.source.split(":")[1]) <= levels and levels:
        raise SampleTooShallow(f"{space.source} cannot resolve tower level {levels}; "
                               f"sample from D_{levels + 1} or deeper")
    towers = kr_tower_sequence(spec, space, levels, refiners)
    parts = towers.partitions
    mats = [incidence_matrix(parts[n], parts[n + 1]) for n in range(levels)]
    sizes = [len(spec.tower.domains[n]) for n in range(levels + 1)]
    if not mats:
        est = MeasureEstimate([[(Fraction(1, sizes[0] * parts[0].k),) * 2] * parts[0].k],
                              [SimplexVector((Fraction(1, sizes[0] * parts[0].k),) * parts[0].k, sizes[0])],
                              Fraction(0), tolerance, measure_mode(spec))
    else:
        est = measure_estimate(mats, sizes, measure_mode(spec), tolerance)
    return MeasureRun(space, towers, mats, est)
