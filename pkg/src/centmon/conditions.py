"""Attribute classes of unary maps on {0,1,2,3} and their commutation conditions.

Every non-trivial unary map falls into one of 167 classes whose members
commute with exactly the same majority operations: A1..A7 (two-element
image), C1..C3, D1..D3, E1..E4, F1..F6 (permutations, up to inversion) and
U(n) for the 144 maps with a three-element image.  Each class carries a
condition on the sigma values of a majority operation, written as a list of
groups ``(positions, allowed value tuples)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .algebra import (
    LeftAbsorptiveOp,
    MajorityOp,
    Permutation,
    UnaryOp,
    all_unary,
    sigma,
)

# a < b < c < d letters used to instantiate the permutation tables
C_LETTERS = {1: (0, 1, 2, 3), 2: (0, 1, 3, 2), 3: (0, 2, 1, 3)}
D_LETTERS = {1: (0, 1, 2, 3), 2: (0, 2, 1, 3), 3: (0, 3, 1, 2)}
E_LETTERS = {1: (0, 1, 2, 3), 2: (0, 1, 3, 2), 3: (0, 2, 3, 1), 4: (1, 2, 3, 0)}
F_LETTERS = {1: (0, 1, 2, 3), 2: (0, 2, 1, 3), 3: (0, 3, 1, 2), 4: (1, 2, 0, 3), 5: (1, 3, 0, 2), 6: (2, 3, 0, 1)}
A_PAIRS = {5: ((0, 1), (2, 3)), 6: ((0, 2), (1, 3)), 7: ((0, 3), (1, 2))}

FAMILY_ORDER = "ACDEFU"
_TAG_RE = re.compile(r"^(?:([ACDEF])(\d)|U\(?(\d+)\)?|TRIVIAL)$", re.IGNORECASE)


@dataclass(frozen=True, order=False)
class ConditionId:
    """Name of an attribute class: ``A1``..``F6``, ``U(n)`` or ``TRIVIAL``."""

    family: str
    number: int = 0

    @classmethod
    def parse(cls, text: str) -> "ConditionId":
        m = _TAG_RE.match(text.strip())
        if not m:
            raise ValueError(f"unknown condition tag {text!r}")
        if m.group(1):
            cid = cls(m.group(1).upper(), int(m.group(2)))
        elif m.group(3):
            cid = cls("U", int(m.group(3)))
        else:
            return TRIVIAL
        if cid not in set(all_conditions()):
            raise ValueError(f"no such condition: {text!r}")
        return cid

    @property
    def tag(self) -> str:
        if self.family == "TRIVIAL":
            return "TRIVIAL"
        if self.family == "U":
            return f"U({self.number})"
        return f"{self.family}{self.number}"

    @property
    def file_tag(self) -> str:
        """Tag usable in file names (no parentheses)."""
        return self.tag.replace("(", "").replace(")", "")

    def sort_key(self) -> tuple[int, int]:
        return (FAMILY_ORDER.index(self.family), self.number)

    def __lt__(self, other: "ConditionId") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return self.tag


TRIVIAL = ConditionId("TRIVIAL")


@lru_cache(maxsize=None)
def all_conditions() -> tuple[ConditionId, ...]:
    """The 167 non-trivial classes in canonical order."""
    out = [ConditionId("A", i) for i in range(1, 8)]
    out += [ConditionId("C", i) for i in range(1, 4)]
    out += [ConditionId("D", i) for i in range(1, 4)]
    out += [ConditionId("E", i) for i in range(1, 5)]
    out += [ConditionId("F", i) for i in range(1, 7)]
    out += [ConditionId("U", s.code) for s in all_unary(4) if len(s.image()) == 3]
    return tuple(out)


# ---------------------------------------------------------------------------
# classification of unary maps


@dataclass(frozen=True)
class UnaryClass:
    op: UnaryOp
    image_size: int
    kernel: frozenset
    fixed_points: int | None
    condition: ConditionId
    members: tuple[UnaryOp, ...]


def _condition_of(s: UnaryOp) -> ConditionId:
    if s.k != 4:
        raise ValueError("classification is defined for k = 4 only")
    if s.is_trivial():
        return TRIVIAL
    im = s.image()
    if len(im) == 2:
        sizes = sorted(len(s.preimage(v)) for v in im)
        if sizes == [1, 3]:
            single = next(v for v in im if len(s.preimage(v)) == 1)
            return ConditionId("A", s.preimage(single)[0] + 1)
        blocks = s.kernel()
        for n, (p, q) in A_PAIRS.items():
            if frozenset(p) in blocks:
                return ConditionId("A", n)
    if len(im) == 3:
        return ConditionId("U", s.code)
    p = Permutation(s.table)
    ctype = p.cycle_type()
    cyc = p.cycles()
    if ctype == (4,):
        opposite = p(p(0))
        return ConditionId("C", {2: 1, 3: 2, 1: 3}[opposite])
    if ctype == (2, 2):
        return ConditionId("D", {1: 1, 2: 2, 3: 3}[p(0)])
    if ctype == (3, 1):
        fixed = next(x for x in range(4) if p(x) == x)
        return ConditionId("E", {3: 1, 2: 2, 1: 3, 0: 4}[fixed])
    if ctype == (2, 1, 1):
        pair = cyc[0]
        return ConditionId("F", [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].index(pair) + 1)
    raise AssertionError(f"unclassified map {s}")


@lru_cache(maxsize=None)
def class_members() -> dict[ConditionId, tuple[UnaryOp, ...]]:
    """Member maps of each class (and of TRIVIAL), in code order."""
    out: dict[ConditionId, list[UnaryOp]] = {}
    for s in all_unary(4):
        out.setdefault(_condition_of(s), []).append(s)
    return {c: tuple(v) for c, v in out.items()}


def classify_unary(s: UnaryOp) -> UnaryClass:
    cond = _condition_of(s)
    fixed = sum(1 for x in range(s.k) if s(x) == x) if s.is_permutation() else None
    return UnaryClass(s, len(s.image()), s.kernel(), fixed, cond, class_members()[cond])


def member_codes(c: ConditionId) -> tuple[int, ...]:
    return tuple(s.code for s in class_members()[c])


def representative(c: ConditionId) -> UnaryOp:
    """Canonical member: the permutation named in the condition's letters, else the least code."""
    if c.family == "C":
        a, b, cc, d = C_LETTERS[c.number]
        return Permutation.from_cycles([(a, b, cc, d)])
    if c.family == "D":
        a, b, cc, d = D_LETTERS[c.number]
        return Permutation.from_cycles([(a, b), (cc, d)])
    if c.family == "E":
        a, b, cc, _ = E_LETTERS[c.number]
        return Permutation.from_cycles([(a, b, cc)])
    if c.family == "F":
        a, b, _, _ = F_LETTERS[c.number]
        return Permutation.from_cycles([(a, b)])
    if c.family == "U":
        return UnaryOp.from_code(c.number, 4)
    return class_members()[c][0]


# ---------------------------------------------------------------------------
# conditions as groups of constrained positions

Group = tuple[tuple[int, ...], frozenset[tuple[int, ...]]]

# Linked triples for each cycle type, written over the letters a, b, c, d.
_CYCLE4_SIGMA = ("abc bcd cda dab", "abd bca cdb dac", "acb bdc cad dba",
                 "adb bac cbd dca", "acd bda cab dbc", "adc bad cba dcb")
_CYCLE4_TAIL = ("abb bcc cdd daa", "acc bdd caa dbb", "add baa cbb dcc")
_TWO2_SIGMA = ("abc bad", "acd bdc", "abd bac", "adc bcd", "acb bda", "cad dbc",
               "adb bca", "dac cbd", "cab dba", "cda dcb", "dab cba", "dca cdb")
_TWO2_TAIL = ("abb baa", "acc bdd", "add bcc", "caa dbb", "cbb daa", "cdd dcc")
_CYCLE3_SIGMA = ("abc bca cab", "acb bac cba", "abd bcd cad", "bad cbd acd",
                 "adb bdc cda", "bda cdb adc", "dab dbc dca", "dba dcb dac")
_CYCLE3_TAIL = ("abb bcc caa", "acc baa cbb", "add bdd cdd", "daa dbb dcc")
_TRANSP_SIGMA = ("abc bac", "acd bcd", "abd bad", "adc bdc", "acb bca", "cad cbd",
                 "adb bda", "dac dbc", "cab cba", "cda cdb", "dab dba", "dca dcb")
_TRANSP_TAIL = ("abb baa", "acc bcc", "add bdd", "caa cbb", "daa dbb")


def _spell(word: str, letters: Sequence[int]) -> tuple[int, int, int]:
    lookup = dict(zip("abcd", letters))
    return tuple(lookup[ch] for ch in word)


def _rotations(seq: Sequence[int]) -> set[tuple[int, ...]]:
    return {tuple(seq[i:]) + tuple(seq[:i]) for i in range(len(seq))}


def _set_options(options: Sequence[Sequence[int]]) -> set[tuple[int, int]]:
    """Pairs (x, y) with {x, y} equal to one of the given sets."""
    out = set()
    for opt in options:
        if len(opt) == 1:
            out.add((opt[0], opt[0]))
        else:
            out.add((opt[0], opt[1]))
            out.add((opt[1], opt[0]))
    return out


def permutation_groups(p: Permutation, with_tail: bool = False):
    """Membership groups for commuting with permutation p.

    Returns a list of (triples, allowed value tuples). Triples are ternary
    argument tuples; tail triples (a, b, b) appear only when ``with_tail``.
    """
    ctype = p.cycle_type()
    cyc = p.cycles()
    if ctype == (4,):
        letters = cyc[0]
        words = _CYCLE4_SIGMA + (_CYCLE4_TAIL if with_tail else ())
        allowed = frozenset(_rotations(letters))
        return [(tuple(_spell(w, letters) for w in row.split()), allowed) for row in words]
    if ctype == (2, 2):
        letters = cyc[0] + cyc[1]
        a, b, c, d = letters
        words = _TWO2_SIGMA + (_TWO2_TAIL if with_tail else ())
        allowed = frozenset(_set_options([(a, b), (c, d)]))
        return [(tuple(_spell(w, letters) for w in row.split()), allowed) for row in words]
    if ctype == (3, 1):
        d = next(x for x in range(4) if p(x) == x)
        letters = cyc[0] + (d,)
        a, b, c, _ = letters
        words = _CYCLE3_SIGMA + (_CYCLE3_TAIL if with_tail else ())
        allowed = frozenset(_rotations((a, b, c)) | {(d, d, d)})
        return [(tuple(_spell(w, letters) for w in row.split()), allowed) for row in words]
    if ctype == (2, 1, 1):
        c, d = (x for x in range(4) if p(x) == x)
        letters = cyc[0] + (c, d)
        a, b = cyc[0]
        allowed = frozenset(_set_options([(a, b), (c,), (d,)]))
        out = [(tuple(_spell(w, letters) for w in row.split()), allowed) for row in _TRANSP_SIGMA]
        if with_tail:
            out += [(tuple(_spell(w, letters) for w in row.split()), allowed) for row in _TRANSP_TAIL]
            fixed = frozenset(itertools.product((c, d), repeat=2))
            out.append(((_spell("cdd", letters), _spell("dcc", letters)), fixed))
        return out
    raise ValueError(f"no condition table for cycle type {ctype}")


@lru_cache(maxsize=None)
def condition_groups(c: ConditionId) -> tuple[Group, ...]:
    """The condition of class c as groups of sigma positions with allowed values."""
    if c == TRIVIAL:
        raise ValueError("TRIVIAL is not a condition")
    idx = sigma(4)
    groups: list[Group] = []
    if c.family == "A" and c.number <= 4:
        allowed = frozenset((v,) for v in range(4) if v != c.number - 1)
        groups = [((i,), allowed) for i in range(len(idx))]
    elif c.family == "A":
        (a, b), (cc, d) = A_PAIRS[c.number]
        for i, t in enumerate(idx):
            if {a, b} <= set(t):
                groups.append(((i,), frozenset({(a,), (b,)})))
            else:
                groups.append(((i,), frozenset({(cc,), (d,)})))
    elif c.family in "CDEF":
        p = Permutation(representative(c).table)
        for triples, allowed in permutation_groups(p):
            groups.append((tuple(idx.index(t) for t in triples), allowed))
    elif c.family == "U":
        an = analyze_image3(UnaryOp.from_code(c.number, 4))
        s = an.s
        uv = frozenset({(an.u,), (an.v,)})
        for pi in itertools.permutations(range(3)):
            for z in (an.x, an.y):
                groups.append(((idx.index(_perm((an.u, an.v, z), pi)),), uv))
            src = idx.index(_perm((an.alpha, an.beta, an.gamma), pi))
            for w in (an.u, an.v):
                dst = idx.index(_perm((w, an.x, an.y), pi))
                allowed = frozenset((s(a), a) for a in range(4))
                groups.append(((src, dst), allowed))
    else:
        raise ValueError(f"unknown condition {c}")
    return tuple(groups)


def _perm(t: Sequence[int], pi: Sequence[int]) -> tuple[int, ...]:
    """The tuple t o pi, i.e. (t[pi(0)], t[pi(1)], t[pi(2)])."""
    return tuple(t[j] for j in pi)


def condition_holds(c: ConditionId, f: MajorityOp) -> bool:
    """Whether f commutes with the members of class c, via the class condition."""
    if c == TRIVIAL:
        raise ValueError("TRIVIAL is vacuous, not a condition")
    vals = f.values
    for positions, allowed in condition_groups(c):
        if tuple(vals[i] for i in positions) not in allowed:
            return False
    return True


@lru_cache(maxsize=None)
def _group_tables(c: ConditionId):
    out = []
    for positions, allowed in condition_groups(c):
        n = len(positions)
        ok = np.zeros(4**n, dtype=bool)
        for tup in allowed:
            code = 0
            for v in tup:
                code = code * 4 + v
            ok[code] = True
        out.append((np.array(positions), ok))
    return out


def condition_mask(c: ConditionId, values: np.ndarray) -> np.ndarray:
    """Vectorised :func:`condition_holds` over rows of an (N, 24) value array."""
    values = np.asarray(values, dtype=np.int64)
    result = np.ones(len(values), dtype=bool)
    for positions, ok in _group_tables(c):
        code = np.zeros(len(values), dtype=np.int64)
        for p in positions:
            code = code * 4 + values[:, p]
        result &= ok[code]
    return result


def general_condition_holds(p: Permutation, g: LeftAbsorptiveOp) -> bool:
    """Commutation of a left-absorptive ternary g with a permutation p, via the cycle-type tables."""
    if p.k != 4 or g.k != 4:
        raise ValueError("the permutation tables are for k = 4 only")
    for triples, allowed in permutation_groups(p, with_tail=True):
        if tuple(g(*t) for t in triples) not in allowed:
            return False
    return True


# ---------------------------------------------------------------------------
# three-element image


@dataclass(frozen=True)
class ImageThreeAnalysis:
    s: UnaryOp
    alpha: int
    beta: int
    gamma: int
    t: int
    u: int
    v: int
    x: int
    y: int
    zeta: tuple[tuple[int, int], ...]  # s restricted to its image, as (arg, value) pairs
    xi: Permutation  # index map with (alpha, beta, gamma) = base o xi
    case: str  # "SYM" or "NOT_SYM"
    orbits: tuple[tuple[tuple[int, int, int], ...], ...]
    transversal: tuple[tuple[int, int, int], ...]
    orbit_size: int

    @property
    def zeta_permutation(self) -> Permutation | None:
        """zeta extended by a fixed point at t, when zeta is bijective."""
        if self.case != "SYM":
            return None
        table = list(range(4))
        for a, b in self.zeta:
            table[a] = b
        return Permutation(tuple(table))

    def propagate(self, seeds: dict) -> dict[tuple[int, int, int], frozenset[int]]:
        """Consequences of seed values on the transversal (SYM case only).

        Returns the admissible value set of every other permutation of
        (u, x, y) and of (v, x, y).
        """
        if self.case != "SYM":
            raise ValueError("orbit propagation needs a bijective zeta")
        s = self.s
        fixed: dict[tuple[int, int, int], int] = {}
        for orbit in self.orbits:
            seed = next((t for t in orbit if t in seeds), None)
            if seed is None:
                raise ValueError(f"no seed for orbit {orbit}")
            value = seeds[seed]
            if value not in self.s.image():
                raise ValueError(f"value {value} has no s-preimage chain")
            t, val = seed, value
            for _ in range(len(orbit)):
                fixed[t] = val
                t, val = s.apply(t), s(val)
        out = {t: frozenset({v}) for t, v in fixed.items() if t not in seeds}
        for pi in itertools.permutations(range(3)):
            t = _perm((self.v, self.x, self.y), pi)
            out[t] = frozenset(s.preimage(fixed[s.apply(t)]))
        return out


def analyze_image3(s: UnaryOp) -> ImageThreeAnalysis:
    if s.k != 4 or len(s.image()) != 3:
        raise ValueError(f"{s} does not have a three-element image on four elements")
    im = sorted(s.image())
    t = next(a for a in range(4) if a not in im)
    alpha = next(a for a in im if len(s.preimage(a)) == 2)
    b = s.preimage(alpha)
    rest = [a for a in range(4) if a not in b]
    if set(b) <= set(im):
        case = "NOT_SYM"
        u, v = b
        x = next(a for a in rest if a in im)
        y = next(a for a in rest if a != x)
        base = (u, v, x)
    else:
        case = "SYM"
        v = next(a for a in b if a not in im)
        u = next(a for a in b if a != v)
        x, y = rest
        base = (u, x, y)
    beta, gamma = s(x), s(y)
    target = (alpha, beta, gamma)
    xi = Permutation(tuple(base.index(a) for a in target))
    zeta = tuple((a, s(a)) for a in im)
    orbits: list[tuple] = []
    if case == "SYM":
        seen = set()
        for pi in itertools.permutations(range(3)):
            start = _perm((u, x, y), pi)
            if start in seen:
                continue
            orbit = [start]
            nxt = s.apply(start)
            while nxt != start:
                orbit.append(nxt)
                nxt = s.apply(nxt)
            seen.update(orbit)
            orbits.append(tuple(orbit))
        orbits.sort(key=min)
    transversal = tuple(min(o) for o in orbits)
    size = len(orbits[0]) if orbits else 0
    return ImageThreeAnalysis(s, alpha, beta, gamma, t, u, v, x, y, zeta, xi, case,
                              tuple(orbits), transversal, size)
