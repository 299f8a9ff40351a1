"""The explicit {0,1} Toeplitz array over a subgroup chain.

Construction (generic mode, every level strict):

* ``D_0 = {e}`` and ``D_{n+1} = D_n . K_n`` where ``K_n`` holds the
  shortlex-least representatives, inside ``Gamma_n``, of the cosets of
  ``Gamma_{n+1}``.  Each ``D_n`` is a fundamental domain of ``Gamma_n``.
* ``S_0 = {e}``, ``S_1 = {v_1}`` with ``v_1`` the least element of ``D_1 - {e}``,
  and ``S_n = v_{n-1} Gamma_{n-1} & D_n - D_{n-1}`` with ``v_n = min S_n``.
* ``x(w) = 0`` if ``w`` lies in ``S_m Gamma_{m+1}`` for an even ``m``; else 1.

The sets ``S_m Gamma_{m+1}`` are pairwise disjoint and ``S_m Gamma_{m+1}`` lies
inside ``v_{m-1} Gamma_{m-1}``, so a value is final once ``w`` escapes the
marker cosets.  With a chain of depth N a value is *exact* when it is decided
at a level ``<= N - 1``; the remaining positions (the coset tower of ``v_N``)
are returned as provisional.

Every quantity is a function of the coset of ``w`` modulo ``Gamma_N``, so
evaluation is one coset-table walk plus a lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chains import Chain, TruncatedPoint
from . import caps
from .errors import IndexOneLevel, TransversalSearchCap, WindowOutsideTower
from .words import GroupDescriptor, Word, ball_enumerate, iter_spheres, parse_word, radius_cap

GENERIC = "generic"
FINITE = "finite"


@dataclass(frozen=True)
class FundamentalDomainTower:
    domains: tuple[tuple[Word, ...], ...]  # D_0 .. D_N
    steps: tuple[tuple[Word, ...], ...]  # K_0 .. K_{N-1}


@dataclass(frozen=True)
class MarkerData:
    sets: tuple[tuple[Word, ...], ...]  # S_0 .. S_N
    points: tuple[Word, ...]  # v_0 = e, v_1 .. v_N


@dataclass(frozen=True)
class ToeplitzValue:
    symbol: int
    exact: bool
    level: int | None  # deciding level


def _k_from_transversal(chain: Chain, n: int) -> tuple[Word, ...]:
    child = chain.levels[n + 1]
    proj = chain.projections[n]
    return tuple(sorted(t for s, t in enumerate(child.transversal) if proj[s] == 0))


def transversal_by_search(chain: Chain, n: int, max_radius: int) -> tuple[Word, ...]:
    """Shortlex-least elements of Gamma_n hitting every coset of Gamma_{n+1}, by ball search."""
    parent, child = chain.levels[n], chain.levels[n + 1]
    need = child.index // parent.index
    found: dict[int, Word] = {}
    for sphere in iter_spheres(chain.group, max_radius):
        ps = parent.coset_many(sphere)
        cs = child.coset_many(sphere)
        for w, p, c in zip(sphere, ps, cs):
            if p == 0 and c not in found:
                found[int(c)] = w
        if len(found) == need:
            return tuple(sorted(found.values()))
    raise TransversalSearchCap(f"radius {max_radius} hits only {len(found)} of {need} cosets at level {n}")


def _detect_mode(chain: Chain) -> tuple[str, int | None]:
    n = chain.depth
    if n >= 2 and chain.index(n - 1) == chain.index(n):
        m = n
        while m > 0 and chain.index(m - 1) == chain.index(n):
            m -= 1
        return FINITE, m
    for level, strict in enumerate(chain.strict):
        if not strict:
            raise IndexOneLevel(f"[Gamma_{level} : Gamma_{level + 1}] = 1")
    return GENERIC, None


def build_tower_and_markers(chain: Chain, depth: int | None = None) -> tuple[FundamentalDomainTower, MarkerData | None]:
    if depth is not None and depth < chain.depth:
        chain = chain.truncate(depth)
    mode, m = _detect_mode(chain)
    e = chain.group.identity()
    domains = [(e,)]
    steps = []
    for n in range(chain.depth):
        k = _k_from_transversal(chain, n)
        steps.append(k)
        domains.append(tuple(d * kk for kk in k for d in domains[-1]))
    tower = FundamentalDomainTower(tuple(domains), tuple(steps))
    _check_tower(chain, tower)
    if mode == FINITE:
        return tower, None
    sets = [(e,)]
    points = [e]
    for n in range(1, chain.depth + 1):
        if n == 1:
            cand = sorted(w for w in domains[1] if not w.is_identity())
            s = (cand[0],)
        else:
            prev = set(domains[n - 1])
            h = chain.levels[n - 1]
            target = h.coset_of(points[n - 1])
            s = tuple(sorted(w for w in domains[n] if w not in prev and h.coset_of(w) == target))
        sets.append(s)
        points.append(s[0])
    markers = MarkerData(tuple(sets), tuple(points))
    _check_markers(chain, tower, markers)
    return tower, markers


def _check_tower(chain: Chain, tower: FundamentalDomainTower) -> None:
    e = chain.group.identity()
    assert tower.domains[0] == (e,)
    for n, dom in enumerate(tower.domains):
        h = chain.levels[n]
        assert len(dom) == h.index, f"|D_{n}| != index"
        assert len(set(h.coset_many(list(dom)).tolist())) == h.index, f"D_{n} is not a fundamental domain"
    for n, k in enumerate(tower.steps):
        assert e in k
        assert all(chain.levels[n].contains(x) for x in k)
        assert len(set(tower.domains[n + 1])) == len(tower.domains[n]) * len(k)
        assert set(tower.domains[n]) <= set(tower.domains[n + 1])


def _check_markers(chain: Chain, tower: FundamentalDomainTower, markers: MarkerData) -> None:
    for n in range(1, chain.depth + 1):
        assert markers.points[n] in markers.sets[n]
        assert markers.points[n] in tower.domains[n]
        if n >= 2:
            # nesting of marker cosets: v_n in v_{n-1} Gamma_{n-1}
            h = chain.levels[n - 1]
            assert h.coset_of(markers.points[n]) == h.coset_of(markers.points[n - 1])


@dataclass(eq=False)
class ToeplitzSpec:
    chain: Chain
    tower: FundamentalDomainTower
    markers: MarkerData | None
    mode: str
    finite_level: int | None = None
    _symbol: np.ndarray = field(init=False, repr=False)
    _exact: np.ndarray = field(init=False, repr=False)
    _level: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._states = _level_states(self.chain)
        self._symbol, self._exact, self._level = self._classify(self.depth)
        self._domain_set = set(self.tower.domains[-1])

    @property
    def depth(self) -> int:
        return self.chain.depth

    @property
    def group(self) -> GroupDescriptor:
        return self.chain.group

    @property
    def deepest(self):
        return self.chain.levels[-1]

    def _classify(self, t: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symbol / exactness / deciding level per Gamma_N state, using levels <= t only."""
        st = self._states
        size = st.shape[1]
        symbol = np.ones(size, dtype=np.int8)
        exact = np.zeros(size, dtype=bool)
        level = np.full(size, -1, dtype=np.int32)
        if self.mode == FINITE:
            m = self.finite_level
            if t < m:
                raise ValueError("truncation below the stabilization level")
            inside = st[m] == 0
            symbol[inside] = 0
            exact[:] = True
            level[:] = m
            return symbol, exact, level
        decided = np.zeros(size, dtype=bool)
        for m in range(t):
            hit_states = [self.chain.levels[m + 1].coset_of(s) for s in self.markers.sets[m]]
            hit = np.isin(st[m + 1], hit_states) & ~decided
            symbol[hit] = m % 2
            exact[hit] = True
            level[hit] = m
            decided |= hit
        # escape: least m with w outside v_m Gamma_m
        escaped = np.zeros(size, dtype=bool)
        for m in range(1, t):
            vm = self.chain.levels[m].coset_of(self.markers.points[m])
            out = (st[m] != vm) & ~escaped
            fresh = out & ~decided
            exact[fresh] = True
            level[fresh] = m
            escaped |= out
        return symbol, exact, level

    def truncated_tables(self, t: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._classify(t)

    # -- evaluation -------------------------------------------------------
    def value_of_state(self, s: int) -> ToeplitzValue:
        lvl = int(self._level[s])
        return ToeplitzValue(int(self._symbol[s]), bool(self._exact[s]), None if lvl < 0 else lvl)

    def evaluate(self, w: Word) -> ToeplitzValue:
        return self.value_of_state(self.deepest.coset_of(w))

    def __call__(self, w: Word) -> int:
        return int(self._symbol[self.deepest.coset_of(w)])

    def evaluate_grid(self, window: Sequence[Word], starts: Sequence[Word]) -> tuple[np.ndarray, np.ndarray]:
        """Symbols and exactness of ``x(u g)`` for ``g`` in starts (rows), ``u`` in window (columns)."""
        states = self.deepest.coset_grid(window, starts)
        return self._symbol[states], self._exact[states]

    def in_domain(self, w: Word) -> bool:
        return w in self._domain_set

    def check_window(self, window: Iterable[Word]) -> None:
        outside = [w for w in window if w not in self._domain_set]
        if outside:
            raise WindowOutsideTower(f"{len(outside)} window elements outside D_{self.depth}, e.g. {outside[0]}")

    # -- period certificates ----------------------------------------------
    def certify(self, w: Word, n: int) -> int | None:
        """Symbol sigma with ``w`` certified in Per(x, Gamma_n, sigma), or None."""
        return self._certify_state(self.deepest.coset_of(w), n)

    def _certify_state(self, s: int, n: int) -> int | None:
        st = self._states
        if self.mode == FINITE:
            m = self.finite_level
            if n >= m:
                return int(self._symbol[s])
            return None if st[n][s] == 0 else 1
        if n == 0:
            return None
        for j in range(min(n, self.depth)):
            hit_states = self._hits(j)
            if st[j + 1][s] in hit_states:
                return j % 2
        v = self.chain.levels[n - 1].coset_of(self.markers.points[n - 1])
        if st[n - 1][s] != v:
            return 1
        return None

    def _hits(self, j: int) -> set[int]:
        cache = self.__dict__.setdefault("_hit_cache", {})
        if j not in cache:
            cache[j] = {self.chain.levels[j + 1].coset_of(s) for s in self.markers.sets[j]}
        return cache[j]


def _level_states(chain: Chain) -> np.ndarray:
    """``out[n, s]`` = level-n coset of the Gamma_N coset ``s``."""
    n = chain.depth
    size = chain.index(n)
    out = np.zeros((n + 1, size), dtype=np.int32)
    out[n] = np.arange(size)
    for level in range(n - 1, -1, -1):
        proj = np.array(chain.projections[level], dtype=np.int32)
        out[level] = proj[out[level + 1]]
    return out


def build_spec(chain: Chain) -> ToeplitzSpec:
    mode, m = _detect_mode(chain)
    tower, markers = build_tower_and_markers(chain)
    return ToeplitzSpec(chain, tower, markers, mode, m)


def evaluate(spec: ToeplitzSpec, w: Word) -> ToeplitzValue:
    return spec.evaluate(w)


# -- array dump ------------------------------------------------------------

def dump_lines(spec: ToeplitzSpec, window: Sequence[Word]) -> list[str]:
    out = []
    for w in window:
        v = spec.evaluate(w)
        lvl = "-" if v.level is None else str(v.level)
        out.append(f"{w} {v.symbol} {'exact' if v.exact else 'provisional'} {lvl}")
    return out


@dataclass(eq=False)
class ExternalArray:
    """An array given on a finite set of positions (pattern file); Per sets are only ever sampled."""

    group: GroupDescriptor
    values: dict[Word, int]

    def get(self, w: Word) -> int | None:
        return self.values.get(w)

    @classmethod
    def parse(cls, text: str, group: GroupDescriptor) -> "ExternalArray":
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2 or parts[1] not in ("0", "1"):
                raise ValueError(f"pattern line {lineno}: expected '<word> <0|1>'")
            values[parse_word(parts[0], group)] = int(parts[1])
        return cls(group, values)


# -- Per sets and verification ---------------------------------------------

def _gamma_ball(spec_chain: Chain, n: int, radius: int) -> list[Word]:
    ball = ball_enumerate(spec_chain.group, radius)
    states = spec_chain.levels[n].coset_many(ball)
    return [w for w, s in zip(ball, states) if s == 0]


@dataclass
class PerReport:
    level: int
    certified: dict[int, list[Word]]  # sigma -> positions
    residue: list[Word]
    checked: int  # sampled exact evaluations
    contradictions: list[tuple[Word, int, Word]]  # (w, sigma, gamma)


def per_report(spec: ToeplitzSpec, n: int, window: Sequence[Word], test_radius: int = 4) -> PerReport:
    """Certified Per(x, Gamma_n, sigma) positions in ``window``, confirmed on a test ball."""
    if n > spec.depth:
        raise ValueError(f"level {n} beyond depth {spec.depth}")
    spec.check_window(window)
    certified: dict[int, list[Word]] = {0: [], 1: []}
    residue = []
    gammas = _gamma_ball(spec.chain, n, test_radius)
    checked = 0
    bad = []
    for w in window:
        sigma = spec.certify(w, n)
        if sigma is None:
            residue.append(w)
            continue
        certified[sigma].append(w)
        states = spec.deepest.coset_many([w * gm for gm in gammas])
        syms, exact = spec._symbol[states], spec._exact[states]
        for gm, sy, ex in zip(gammas, syms, exact):
            if ex:
                checked += 1
                if sy != sigma:
                    bad.append((w, sigma, gm))
    return PerReport(n, certified, residue, checked, bad)


@dataclass
class VerifyReport:
    passed: bool
    levels: dict[Word, int | None]  # least certifying level per position
    uncertified: list[Word]
    contradictions: list[tuple[Word, int]]  # exact value at a truncation disagreeing with depth N
    recurrence_level: int | None
    recurrence_ok: bool
    sampled: bool = False


def toeplitz_verify(spec: ToeplitzSpec, window: Sequence[Word], radius: int) -> VerifyReport:
    spec.check_window(window)
    levels: dict[Word, int | None] = {}
    states = spec.deepest.coset_many(list(window))
    for w, s in zip(window, states):
        levels[w] = next((n for n in range(spec.depth + 1) if spec._certify_state(int(s), n) is not None), None)
    uncertified = [w for w, n in levels.items() if n is None]
    # exact values at every truncation must agree with the full-depth value
    contradictions = []
    lo = spec.finite_level if spec.mode == FINITE else 1
    for t in range(lo, spec.depth):
        sym_t, ex_t, _ = spec.truncated_tables(t)
        for w, s in zip(window, states):
            if ex_t[s] and sym_t[s] != spec._symbol[s]:
                contradictions.append((w, t))
    rec_level = max((n for n in levels.values() if n is not None), default=None)
    rec_ok = False
    if rec_level is not None and not uncertified:
        gammas = _gamma_ball(spec.chain, rec_level, radius)
        rec_ok = all(
            spec(w * gm) == spec(w) for gm in gammas for w in window
            if spec.evaluate(w * gm).exact
        )
    passed = not uncertified and not contradictions and rec_ok
    return VerifyReport(passed, levels, uncertified, contradictions, rec_level, rec_ok)


def verify_external(array: ExternalArray, chain: Chain, window: Sequence[Word], radius: int) -> VerifyReport:
    """Sampled Toeplitz test for an ingested array: no certificates, only ball checks."""
    levels: dict[Word, int | None] = {}
    for w in window:
        x = array.get(w)
        levels[w] = None
        if x is None:
            continue
        for n in range(chain.depth + 1):
            gammas = [gm for gm in _gamma_ball(chain, n, radius) if not gm.is_identity()]
            seen = [array.get(w * gm) for gm in gammas]
            seen = [s for s in seen if s is not None]
            if seen and all(s == x for s in seen):
                levels[w] = n
                break
    uncertified = [w for w, n in levels.items() if n is None]
    return VerifyReport(not uncertified, levels, uncertified, [], None, False, sampled=True)


# -- essential periods -----------------------------------------------------

@dataclass(frozen=True)
class Witness:
    position: Word
    sigma: int
    gamma: Word
    kind = "witness"


@dataclass(frozen=True)
class InGroup:
    kind = "in-group"


@dataclass(frozen=True)
class Inconclusive:
    kind = "inconclusive"


def essential_falsify(spec: ToeplitzSpec, n: int, g: Word, depth: int | None = None,
                      gammas: Sequence[Word] | None = None):
    """Search (w, sigma) with w in Per(x, Gamma_n, sigma) but (g.x)(w gamma) != sigma.

    Candidates are scanned with w in D_n and gamma in Gamma_n, both in shortlex
    order, so the witness returned is the least one.
    """
    if spec.chain.levels[n].contains(g):
        return InGroup()
    if depth is None:
        depth = default_gamma_depth(spec, n, len(g))
    table = _falsify_table(spec, n, depth, gammas)
    if not table.positions:
        return Inconclusive()
    return _falsify_row(spec, table, spec.deepest.coset_grid(table.positions, [g])[0])


@dataclass
class _FalsifyTable:
    positions: list[Word]  # w * gamma, scan order
    pairs: list[tuple[Word, Word]]
    sigma: np.ndarray


def _falsify_table(spec: ToeplitzSpec, n: int, depth: int,
                   gammas: Sequence[Word] | None) -> _FalsifyTable:
    if gammas is None:
        gammas = _gamma_ball(spec.chain, n, depth)
    positions, pairs, sigmas = [], [], []
    for w in sorted(spec.tower.domains[n]):
        sigma = spec.certify(w, n)
        if sigma is None:
            continue
        for gm in gammas:
            positions.append(w * gm)
            pairs.append((w, gm))
            sigmas.append(sigma)
    return _FalsifyTable(positions, pairs, np.array(sigmas, dtype=np.int8))


def _falsify_row(spec: ToeplitzSpec, table: _FalsifyTable, states: np.ndarray):
    if not table.positions:
        return Inconclusive()
    bad = spec._exact[states] & (spec._symbol[states] != table.sigma)
    j = int(np.argmax(bad))
    if not bad[j]:
        return Inconclusive()
    w, gm = table.pairs[j]
    return Witness(w, int(table.sigma[j]), gm)


@dataclass
class PeriodReport:
    levels: int
    radius: int
    witnesses: int
    inconclusive: list[tuple[int, Word]]
    in_group: int
    verify_passed: bool | None = None

    @property
    def certified(self) -> bool:
        return not self.inconclusive and self.verify_passed is not False


def default_gamma_depth(spec: ToeplitzSpec, n: int, radius: int) -> int:
    """Gamma-ball radius wide enough to push ``w g`` back across D_n, clipped to the caps."""
    reach = radius + max(len(w) for w in spec.tower.domains[n])
    cap = radius_cap(spec.group)
    if spec.group.is_free:
        cap = min(cap, caps.get("free_gamma_radius"))
    return min(reach, cap)


def period_structure_check(spec: ToeplitzSpec, levels: int, radius: int,
                           depth: int | None = None) -> PeriodReport:
    """Falsify every ``g`` outside ``Gamma_n`` (n <= levels, g in the radius ball) as a period."""
    ball = ball_enumerate(spec.group, radius)
    witnesses = 0
    in_group = 0
    inconclusive = []
    for n in range(min(levels, spec.depth) + 1):
        inside = np.asarray(spec.chain.levels[n].coset_many(ball)) == 0
        in_group += int(inside.sum())
        outside = [g for g, i in zip(ball, inside) if not i]
        if not outside:
            continue
        d = default_gamma_depth(spec, n, radius) if depth is None else depth
        table = _falsify_table(spec, n, d, None)
        grid = spec.deepest.coset_grid(table.positions, outside) if table.positions else None
        for i, g in enumerate(outside):
            r = _falsify_row(spec, table, grid[i]) if grid is not None else Inconclusive()
            if isinstance(r, Witness):
                witnesses += 1
            else:
                inconclusive.append((n, g))
    return PeriodReport(levels, radius, witnesses, inconclusive, in_group)


# -- maximal equicontinuous factor ------------------------------------------

def factor_coords(spec: ToeplitzSpec, g: Word, n: int | None = None) -> TruncatedPoint:
    """Image of ``g . x`` in the odometer: the cosets of ``g`` up to level n."""
    chain = spec.chain if n is None or n == spec.depth else spec.chain.truncate(n)
    return chain.point_of(g)


# -- orbit patterns ----------------------------------------------------------

@dataclass
class OrbitPatterns:
    window: tuple[Word, ...]
    patterns: dict[tuple[int, ...], Word]  # pattern -> first witness (shortlex)
    dropped: int


def orbit_patterns(spec: ToeplitzSpec, window: Sequence[Word], sample_radius: int,
                   starts: Sequence[Word] | None = None) -> OrbitPatterns:
    """Distinct restrictions ``(g.x)|window`` with ``(g.x)(w) = x(w g)``, g in the sample ball."""
    if starts is None:
        starts = ball_enumerate(spec.group, sample_radius)
    window = tuple(window)
    patterns: dict[tuple[int, ...], Word] = {}
    dropped = 0
    if not window:
        return OrbitPatterns(window, {(): spec.group.identity()}, 0)
    syms, exact = spec.evaluate_grid(window, starts)
    ok = exact.all(axis=1)
    for g, row, good in zip(starts, syms, ok):
        if not good:
            dropped += 1
            continue
        key = tuple(int(x) for x in row)
        if key not in patterns:
            patterns[key] = g
    return OrbitPatterns(window, patterns, dropped)
