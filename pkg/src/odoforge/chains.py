"""Nested subgroup chains as truncated (sub)odometers.

A :class:`Chain` holds ``G = Gamma_0 >= Gamma_1 >= ... >= Gamma_N``.  Points of
the inverse limit are truncated at depth ``N``: a :class:`TruncatedPoint` is a
compatible sequence of cosets ``(g_0, ..., g_N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .cosets import (
    SubgroupHandle,
    conjugate,
    contains_subgroup,
    eigen_lattice_snf,
    normal_core,
    projection,
    subgroup_from_generators,
)
from .errors import GroupMismatch, InfiniteCharacterGroup, NestingViolation, PointNotInCylinder
from .words import GroupDescriptor, Word, ball_enumerate


@dataclass(eq=False)
class Chain:
    group: GroupDescriptor
    levels: tuple[SubgroupHandle, ...]
    strict: tuple[bool, ...]  # strict[n]: [Gamma_n : Gamma_{n+1}] >= 2
    normal: tuple[bool, ...]  # normal[n]: Gamma_n is normal
    projections: tuple[tuple[int, ...], ...]  # projections[n]: G/Gamma_{n+1} -> G/Gamma_n

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def index(self, n: int) -> int:
        return self.levels[n].index

    def truncate(self, n: int) -> "Chain":
        return Chain(self.group, self.levels[: n + 1], self.strict[:n], self.normal[: n + 1],
                     self.projections[:n])

    def point_of(self, g: Word) -> "TruncatedPoint":
        """Image of ``g`` in the inverse limit: the point ``g . e``."""
        return TruncatedPoint(self, tuple(h.coset_of(g) for h in self.levels))

    def identity_point(self) -> "TruncatedPoint":
        return TruncatedPoint(self, (0,) * len(self.levels))

    def point_from_state(self, state: int) -> "TruncatedPoint":
        """The unique compatible point whose deepest coordinate is ``state``."""
        coords = [state]
        for n in range(self.depth - 1, -1, -1):
            coords.append(self.projections[n][coords[-1]])
        return TruncatedPoint(self, tuple(reversed(coords)))

    def sample_points(self, count: int = 20) -> list["TruncatedPoint"]:
        """``count`` deterministic points, evenly spread over the deepest level."""
        n = self.index(self.depth)
        if n <= count:
            states = range(n)
        else:
            states = sorted({(i * n) // count for i in range(count)})
        return [self.point_from_state(s) for s in states]

    def residuality(self, radius: int, level: int | None = None) -> list[Word]:
        """Nontrivial ball elements inside ``Gamma_level``; empty certifies residuality at (radius, level)."""
        if level is None:
            level = self.depth
        h = self.levels[level]
        ball = ball_enumerate(self.group, radius)
        states = h.coset_many(ball)
        return [w for w, s in zip(ball, states) if s == 0 and not w.is_identity()]


@dataclass(frozen=True, eq=False)
class TruncatedPoint:
    chain: Chain
    cosets: tuple[int, ...]

    def __post_init__(self):
        if self.cosets[0] != 0:
            raise ValueError("level 0 has a single coset")
        for n, proj in enumerate(self.chain.projections[: len(self.cosets) - 1]):
            if proj[self.cosets[n + 1]] != self.cosets[n]:
                raise ValueError(f"incompatible coordinates at level {n + 1}")

    @property
    def depth(self) -> int:
        return len(self.cosets) - 1

    def __eq__(self, other):
        return isinstance(other, TruncatedPoint) and self.cosets == other.cosets

    def __hash__(self):
        return hash(self.cosets)

    def __repr__(self):
        return f"TruncatedPoint{self.cosets}"


def _as_handle(group: GroupDescriptor, spec) -> SubgroupHandle:
    if isinstance(spec, SubgroupHandle):
        if spec.group != group:
            raise GroupMismatch(f"{spec.group} vs {group}")
        return spec
    return subgroup_from_generators(group, spec)


def validate_chain(group: GroupDescriptor, specs: Sequence, depth: int | None = None) -> Chain:
    """Build and verify ``G = Gamma_0 >= Gamma_1 >= ...`` from subgroup specs.

    ``specs`` lists Gamma_1, Gamma_2, ... as generator lists or handles;
    Gamma_0 = G is implicit.
    """
    if not specs:
        raise ValueError("a chain needs at least one level beyond Gamma_0")
    if depth is not None:
        specs = list(specs)[:depth]
    whole = subgroup_from_generators(group, group.generators())
    levels = [whole]
    for pos, spec in enumerate(specs):
        h = _as_handle(group, spec)
        ok = contains_subgroup(levels[-1], h)
        if not ok:
            err = NestingViolation(len(levels), ok.witness)
            err.position = pos
            raise err
        levels.append(h)
    strict = tuple(levels[n + 1].index > levels[n].index for n in range(len(levels) - 1))
    normal = tuple(h.is_normal() for h in levels)
    projs = tuple(projection(levels[n + 1], levels[n]) for n in range(len(levels) - 1))
    return Chain(group, tuple(levels), strict, normal, projs)


def act_truncated(chain: Chain, g: Word, p: TruncatedPoint) -> TruncatedPoint:
    coords = tuple(h.act(g, s) for h, s in zip(chain.levels, p.cosets))
    return TruncatedPoint(chain, coords)


def stabilizer_formula(chain: Chain, p: TruncatedPoint, ball: Sequence[Word]) -> set[Word]:
    """Ball elements in the intersection of the conjugates t_n Gamma_n t_n^-1."""
    conj = [conjugate(h, h.transversal[s]) for h, s in zip(chain.levels, p.cosets)]
    keep = None
    for c in conj:
        states = c.coset_many(ball)
        inside = {w for w, s in zip(ball, states) if s == 0}
        keep = inside if keep is None else keep & inside
    return keep


def _moved(chain: Chain, p: TruncatedPoint, ball: Sequence[Word], level: int) -> list[int]:
    h = chain.levels[level]
    return list(h.coset_grid(ball, [h.transversal[p.cosets[level]]])[0])


def stabilizer_ball(chain: Chain, p: TruncatedPoint, radius: int) -> set[Word]:
    """Ball elements fixing ``p``, cross-checked against the conjugate-intersection formula."""
    ball = ball_enumerate(chain.group, radius)
    keep = [True] * len(ball)
    for n in range(p.depth + 1):
        moved = _moved(chain, p, ball, n)
        for j, s in enumerate(moved):
            if s != p.cosets[n]:
                keep[j] = False
    scanned = {w for w, k in zip(ball, keep) if k}
    formula = stabilizer_formula(chain, p, ball)
    if scanned != formula:
        raise AssertionError("stabilizer scan disagrees with the conjugate-intersection formula")
    return scanned


def return_times(chain: Chain, cylinder: tuple[int, int], p: TruncatedPoint, radius: int) -> set[Word]:
    """Ball elements g with ``g . p`` in the cylinder ``[level; state]``."""
    level, state = cylinder
    if p.cosets[level] != state:
        raise PointNotInCylinder(f"{p} is not in cylinder [{level};{state}]")
    ball = ball_enumerate(chain.group, radius)
    moved = _moved(chain, p, ball, level)
    return {w for w, s in zip(ball, moved) if s == state}


@dataclass(eq=False)
class FactorMap:
    source: Chain
    target: Chain
    levels: tuple[int, ...]  # k_i for each target level i
    maps: tuple[tuple[int, ...], ...]  # maps[i]: G/Gamma1_{k_i} -> G/Gamma2_i

    ok = True

    def apply(self, p: TruncatedPoint) -> TruncatedPoint:
        coords = tuple(m[p.cosets[k]] for k, m in zip(self.levels, self.maps))
        return TruncatedPoint(self.target, coords)

    def __bool__(self):
        return True


@dataclass(eq=False)
class FactorFailure:
    level: int
    witness: Word  # element of the deepest source level outside the target level
    ok = False

    def __bool__(self):
        return False


def factor_between(source: Chain, target: Chain) -> FactorMap | FactorFailure:
    """Least ``k_i`` with ``Gamma1_{k_i}`` inside ``Gamma2_i`` for every target level."""
    if source.group != target.group:
        raise GroupMismatch(f"{source.group} vs {target.group}")
    ks = []
    maps = []
    k = 0
    for i, h2 in enumerate(target.levels):
        while k <= source.depth and not contains_subgroup(h2, source.levels[k]):
            k += 1
        if k > source.depth:
            deepest = contains_subgroup(h2, source.levels[source.depth])
            return FactorFailure(i, deepest.witness)
        ks.append(k)
        maps.append(tuple(h2.coset_of(t) for t in source.levels[k].transversal))
    return FactorMap(source, target, tuple(ks), tuple(maps))


def normal_cover(chain: Chain, cap: int | None = None) -> tuple[Chain, FactorMap | FactorFailure]:
    """Chain of normal cores; it factors onto ``chain`` levelwise."""
    cores = [normal_core(h, cap) for h in chain.levels[1:]]
    cover = validate_chain(chain.group, cores)
    return cover, factor_between(cover, chain)


# -- eigenvalues ------------------------------------------------------------

@dataclass(frozen=True)
class CharacterGroup:
    level: int
    invariants: tuple[int, ...]
    characters: tuple[tuple[Fraction, ...], ...]
    free_rank: int

    @property
    def order(self) -> int:
        return len(self.characters)

    def eval(self, chi: Sequence[Fraction], g: Word) -> Fraction:
        return character_value(chi, g)


def character_value(chi: Sequence[Fraction], g: Word) -> Fraction:
    """chi(g) as a rational in [0, 1): the exponent is 2 pi i times this value."""
    total = sum((q * e for q, e in zip(chi, g.exponent_sums())), Fraction(0))
    return total - (total.numerator // total.denominator)


def eigenvalue_group(chain: Chain, n: int, allow_infinite: bool = False) -> CharacterGroup:
    """All characters of G trivial on Gamma_n, via the Smith form of its abelianized lattice."""
    if n > chain.depth:
        raise ValueError(f"level {n} beyond depth {chain.depth}")
    quotient = eigen_lattice_snf(chain.levels[n])
    smith = quotient.smith
    rank = chain.group.rank
    diag = list(smith.diagonal) + [0] * (rank - len(smith.diagonal))
    diag = diag[:rank]
    free = sum(1 for d in diag if d == 0)
    if free and not allow_infinite:
        raise InfiniteCharacterGroup(f"character group at level {n} has free rank {free}")
    ranges = [range(d) if d else range(1) for d in diag]
    v = smith.right
    chars = set()
    for ks in product(*ranges):
        y = [Fraction(k, d) if d else Fraction(0) for k, d in zip(ks, diag)]
        q = []
        for row in v:
            x = sum((c * yy for c, yy in zip(row, y)), Fraction(0))
            q.append(x - (x.numerator // x.denominator))
        chars.add(tuple(q))
    ordered = tuple(sorted(chars))
    for chi in ordered:
        for s in chain.levels[n].schreier_generators():
            assert character_value(chi, s) == 0
    return CharacterGroup(n, quotient.invariants, ordered, free)


def eigenfunction(chain: Chain, chi: Sequence[Fraction], n: int) -> Callable[[TruncatedPoint], Fraction]:
    """Step function p -> chi(t) with t the representative of the level-n coordinate."""
    reps = chain.levels[n].transversal

    def f(p: TruncatedPoint) -> Fraction:
        return character_value(chi, reps[p.cosets[n]])

    return f


def eigenfunction_violation(chain: Chain, cg: CharacterGroup, ball: Sequence[Word],
                            points: Sequence[TruncatedPoint]) -> tuple | None:
    """First (character, g, point) with f(g.p) != chi(g) + f(p) mod 1, or None.

    Works over a common denominator D: chi(w) = (c . exponents(w)) / D, so the
    identity becomes an integer congruence mod D checked for all characters at once.
    """
    n = cg.level
    if not cg.characters:
        return None
    denom = 1
    for chi in cg.characters:
        for q in chi:
            denom = denom * q.denominator // gcd(denom, q.denominator)
    coeffs = np.array([[int(q * denom) for q in chi] for chi in cg.characters], dtype=np.int64)
    h = chain.levels[n]
    reps = np.array([t.exponent_sums() for t in h.transversal], dtype=np.int64)
    gexp = np.array([g.exponent_sums() for g in ball], dtype=np.int64)
    for p in points:
        moved = [h.act(g, p.cosets[n]) for g in ball]
        delta = reps[moved] - gexp - reps[p.cosets[n]]  # (|ball|, rank)
        bad = (coeffs @ delta.T) % denom != 0  # (chars, |ball|)
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            return cg.characters[i], ball[j], p
    return None


def haar_cylinder(chain: Chain, level: int) -> Fraction:
    return Fraction(1, chain.index(level))
