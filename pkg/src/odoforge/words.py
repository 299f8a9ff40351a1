"""Group elements as reduced words over a finite generating set.

Two kinds of group are supported: free groups of rank k and free-abelian
groups Z^d.  Free words are stored as tuples of letter codes, where generator
``i`` is code ``2*i`` and its inverse is ``2*i + 1`` (so ``code ^ 1`` inverts a
letter).  Free-abelian words are stored as exponent vectors.

Shortlex order puts ``a1 < a1^-1 < a2 < a2^-1 < ...`` and compares words by
length first, then lexicographically.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterator, Sequence

from . import caps
from .errors import GroupMismatch, RadiusCap, UnknownGenerator, WordSyntaxError

FREE = "free"
ABELIAN = "free-abelian"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class GroupDescriptor:
    kind: str
    names: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in (FREE, ABELIAN):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if len(self.names) < 1:
            raise ValueError("rank must be at least 1")
        if len(set(self.names)) != len(self.names):
            raise ValueError("generator names must be unique")
        for name in self.names:
            if not _NAME_RE.match(name) or name == "e":
                raise ValueError(f"invalid generator name {name!r}")

    @classmethod
    def free(cls, names: Sequence[str] | int) -> "GroupDescriptor":
        return cls(FREE, _names(names))

    @classmethod
    def abelian(cls, names: Sequence[str] | int) -> "GroupDescriptor":
        return cls(ABELIAN, _names(names))

    @property
    def rank(self) -> int:
        return len(self.names)

    @property
    def is_free(self) -> bool:
        return self.kind == FREE

    def identity(self) -> "Word":
        if self.is_free:
            return Word(self, ())
        return Word(self, (0,) * self.rank)

    def generator(self, i: int, sign: int = 1) -> "Word":
        if self.is_free:
            return Word(self, (2 * i + (sign < 0),))
        vec = [0] * self.rank
        vec[i] = 1 if sign > 0 else -1
        return Word(self, tuple(vec))

    def letter(self, code: int) -> "Word":
        return self.generator(code >> 1, -1 if code & 1 else 1)

    def generators(self) -> list["Word"]:
        return [self.generator(i) for i in range(self.rank)]

    def word(self, text: str) -> "Word":
        return parse_word(text, self)

    def __str__(self):
        label = "F" if self.is_free else "Z^"
        return f"{label}{self.rank}<{','.join(self.names)}>"


def _names(names: Sequence[str] | int) -> tuple[str, ...]:
    if isinstance(names, int):
        if names > 26:
            raise ValueError("too many generators for default names")
        return tuple("abcdefghijklmnopqrstuvwxyz"[:names])
    return tuple(names)


def free_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for c in letters:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def abelian_letters(vec: Sequence[int]) -> tuple[int, ...]:
    """Canonical letter sequence of an exponent vector (generator order)."""
    out: list[int] = []
    for i, x in enumerate(vec):
        out.extend([2 * i + (x < 0)] * abs(x))
    return tuple(out)


@total_ordering
class Word:
    """An immutable reduced group element."""

    __slots__ = ("group", "data", "_hash")

    def __init__(self, group: GroupDescriptor, data: tuple[int, ...]):
        self.group = group
        self.data = data
        self._hash = hash((group.kind, group.names, data))

    # -- arithmetic -------------------------------------------------------
    def __mul__(self, other: "Word") -> "Word":
        if not isinstance(other, Word):
            return NotImplemented
        _check_same(self, other)
        if self.group.is_free:
            a, b = self.data, other.data
            i = 0
            n = min(len(a), len(b))
            while i < n and a[len(a) - 1 - i] == b[i] ^ 1:
                i += 1
            return Word(self.group, a[: len(a) - i] + b[i:])
        return Word(self.group, tuple(x + y for x, y in zip(self.data, other.data)))

    def inverse(self) -> "Word":
        if self.group.is_free:
            return Word(self.group, tuple(c ^ 1 for c in reversed(self.data)))
        return Word(self.group, tuple(-x for x in self.data))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        out = self.group.identity()
        for _ in range(abs(n)):
            out = out * base
        return out

    # -- structure --------------------------------------------------------
    @property
    def letters(self) -> tuple[int, ...]:
        """Letter codes of the canonical word (abelian words are expanded)."""
        if self.group.is_free:
            return self.data
        return abelian_letters(self.data)

    def __len__(self) -> int:
        if self.group.is_free:
            return len(self.data)
        return sum(abs(x) for x in self.data)

    def is_identity(self) -> bool:
        if self.group.is_free:
            return not self.data
        return not any(self.data)

    def exponent_sums(self) -> tuple[int, ...]:
        """Image in the abelianization Z^rank."""
        if not self.group.is_free:
            return self.data
        sums = [0] * self.group.rank
        for c in self.data:
            sums[c >> 1] += -1 if c & 1 else 1
        return tuple(sums)

    def shortlex_key(self) -> tuple[int, tuple[int, ...]]:
        letters = self.letters
        return (len(letters), letters)

    # -- comparisons ------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Word):
            return NotImplemented
        return self.group == other.group and self.data == other.data

    def __lt__(self, other: "Word") -> bool:
        _check_same(self, other)
        return self.shortlex_key() < other.shortlex_key()

    def __hash__(self):
        return self._hash

    def __str__(self):
        return format_word(self)

    def __repr__(self):
        return f"Word({format_word(self)!r})"


def _check_same(u: Word, v: Word) -> None:
    if u.group != v.group:
        raise GroupMismatch(f"{u.group} vs {v.group}")


def word_arith(op: str, w1: Word, w2: Word | None = None) -> Word:
    if op == "multiply":
        if w2 is None:
            raise ValueError("multiply needs two operands")
        return w1 * w2
    if op == "invert":
        return w1.inverse()
    if op == "reduce":
        if w1.group.is_free:
            return Word(w1.group, free_reduce(w1.data))
        return w1
    raise ValueError(f"unknown operation {op!r}")


# -- text format ----------------------------------------------------------

def format_word(w: Word) -> str:
    names = w.group.names
    if w.group.is_free:
        parts = []
        for code, run in itertools.groupby(w.data):
            n = len(list(run))
            exp = -n if code & 1 else n
            parts.append(_power(names[code >> 1], exp))
    else:
        parts = [_power(names[i], x) for i, x in enumerate(w.data) if x]
    return "*".join(parts) if parts else "e"


def _power(name: str, exp: int) -> str:
    return name if exp == 1 else f"{name}^{exp}"


_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[*^])|(?P<int>[+-]?\d+))")


def parse_word(text: str, group: GroupDescriptor) -> Word:
    """Parse ``term ('*' term)*`` with ``term = name ('^' int)?``; ``e`` is the identity."""
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise WordSyntaxError(pos, f"unexpected character {text[pos]!r}")
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    if not tokens:
        raise WordSyntaxError(0, "empty word")

    index = {name: i for i, name in enumerate(group.names)}
    out = group.identity()
    i = 0
    expect_term = True
    while i < len(tokens):
        kind, value, where = tokens[i]
        if expect_term:
            if kind != "name":
                raise WordSyntaxError(where, "expected a generator name")
            exp = 1
            if i + 1 < len(tokens) and tokens[i + 1][1] == "^":
                if i + 2 >= len(tokens) or tokens[i + 2][0] != "int":
                    where2 = tokens[i + 2][2] if i + 2 < len(tokens) else len(text)
                    raise WordSyntaxError(where2, "expected an integer exponent")
                exp = int(tokens[i + 2][1])
                i += 2
            if value == "e" and "e" not in index:
                term = group.identity()
            elif value not in index:
                raise UnknownGenerator(value, where)
            else:
                term = group.generator(index[value]) ** exp
            out = out * term
            expect_term = False
        else:
            if value != "*":
                raise WordSyntaxError(where, "expected '*'")
            expect_term = True
        i += 1
    if expect_term:
        raise WordSyntaxError(len(text), "dangling '*'")
    return out


# -- enumeration ----------------------------------------------------------

def radius_cap(group: GroupDescriptor) -> int:
    return caps.get("free_radius") if group.is_free else caps.get("abelian_radius")


def _check_radius(group: GroupDescriptor, radius: int) -> None:
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius > radius_cap(group):
        raise RadiusCap(f"radius {radius} exceeds cap {radius_cap(group)} for {group}")


def iter_spheres(group: GroupDescriptor, max_radius: int) -> Iterator[list[Word]]:
    """Yield the spheres of radius 0, 1, ..., max_radius, each in shortlex order."""
    _check_radius(group, max_radius)
    k = group.rank
    if group.is_free:
        sphere: list[tuple[int, ...]] = [()]
        yield [Word(group, ())]
        for _ in range(max_radius):
            nxt = []
            for w in sphere:
                last = w[-1] ^ 1 if w else -1
                for c in range(2 * k):
                    if c != last:
                        nxt.append(w + (c,))
            sphere = nxt
            yield [Word(group, w) for w in sphere]
    else:
        for r in range(max_radius + 1):
            vecs = _l1_sphere(k, r)
            words = [Word(group, v) for v in vecs]
            words.sort(key=Word.shortlex_key)
            yield words


def _l1_sphere(d: int, r: int) -> list[tuple[int, ...]]:
    if d == 1:
        return [(0,)] if r == 0 else [(r,), (-r,)]
    out = []
    for x in range(-r, r + 1):
        rest = r - abs(x)
        for tail in _l1_sphere(d - 1, rest):
            out.append((x,) + tail)
    return out


def iter_shortlex(group: GroupDescriptor, max_radius: int) -> Iterator[Word]:
    for sphere in iter_spheres(group, max_radius):
        yield from sphere


def ball_enumerate(group: GroupDescriptor, radius: int) -> list[Word]:
    """All reduced words of length <= radius, in shortlex order."""
    return list(iter_shortlex(group, radius))


def free_ball_size(rank: int, radius: int) -> int:
    """Closed form 1 + 2k((2k-1)^r - 1)/(2k-2) for rank >= 2."""
    if radius == 0:
        return 1
    if rank == 1:
        return 2 * radius + 1
    return 1 + 2 * rank * ((2 * rank - 1) ** radius - 1) // (2 * rank - 2)
