"""Finite operations on {0, ..., k-1}: unary maps, majority operations, commutation.

Unary maps are identified with their integer code
``n = sum(s(j) * k**(k-1-j))``, so ``u_26`` on four elements is ``(0, 1, 2, 2)``.
Ternary majority operations are stored by their values on the injective
triples (``sigma``), in lexicographic order of the triples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence, Union

SUPPORTED_K = (3, 4)


class ConfigurationError(ValueError):
    """Operands live on different carrier sets or k is unsupported."""


class IdentityViolation(ValueError):
    """A full operation table does not satisfy the required identities."""

    def __init__(self, message: str, witness: tuple[int, ...]):
        super().__init__(f"{message} at {witness}")
        self.witness = witness


def check_k(k: int) -> int:
    if k not in SUPPORTED_K:
        raise ConfigurationError(f"k must be one of {SUPPORTED_K}, got {k}")
    return k


def _same_k(a: int, b: int) -> int:
    if a != b:
        raise ConfigurationError(f"carrier size mismatch: {a} != {b}")
    return a


# ---------------------------------------------------------------------------
# unary operations


@dataclass(frozen=True, eq=False)
class UnaryOp:
    """A self-map of {0..k-1} given by its value table."""

    table: tuple[int, ...]

    def __eq__(self, other):
        return isinstance(other, UnaryOp) and self.table == other.table

    def __hash__(self):
        return hash(self.table)

    def __post_init__(self):
        k = len(self.table)
        if any(not 0 <= v < k for v in self.table):
            raise ValueError(f"table entries must lie in [0, {k}): {self.table}")

    @property
    def k(self) -> int:
        return len(self.table)

    @property
    def code(self) -> int:
        n = 0
        for v in self.table:
            n = n * self.k + v
        return n

    @classmethod
    def from_code(cls, n: int, k: int = 4) -> "UnaryOp":
        if not 0 <= n < k**k:
            raise ValueError(f"unary code {n} out of range [0, {k**k})")
        table = []
        for j in range(k):
            table.append((n // k ** (k - 1 - j)) % k)
        return cls(tuple(table))

    @classmethod
    def identity(cls, k: int = 4) -> "UnaryOp":
        return cls(tuple(range(k)))

    @classmethod
    def constant(cls, a: int, k: int = 4) -> "UnaryOp":
        return cls((a,) * k)

    def __call__(self, x: int) -> int:
        return self.table[x]

    def __matmul__(self, other: "UnaryOp") -> "UnaryOp":
        return compose_unary(self, other)

    def image(self) -> frozenset[int]:
        return frozenset(self.table)

    def preimage(self, value: int) -> tuple[int, ...]:
        return tuple(x for x, v in enumerate(self.table) if v == value)

    def kernel(self) -> frozenset[frozenset[int]]:
        blocks = {}
        for x, v in enumerate(self.table):
            blocks.setdefault(v, set()).add(x)
        return frozenset(frozenset(b) for b in blocks.values())

    def is_permutation(self) -> bool:
        return len(set(self.table)) == self.k

    def is_trivial(self) -> bool:
        """Identity or constant: commutes with every idempotent operation."""
        return len(set(self.table)) == 1 or self.table == tuple(range(self.k))

    def apply(self, xs: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.table[x] for x in xs)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.table)) + ")"


class Permutation(UnaryOp):
    """A bijective unary operation."""

    def __post_init__(self):
        super().__post_init__()
        if sorted(self.table) != list(range(len(self.table))):
            raise ValueError(f"not a permutation: {self.table}")

    @classmethod
    def from_unary(cls, s: UnaryOp) -> "Permutation":
        return cls(s.table)

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], k: int = 4) -> "Permutation":
        table = list(range(k))
        for cyc in cycles:
            for i, a in enumerate(cyc):
                table[a] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(table))

    def inverse(self) -> "Permutation":
        inv = [0] * self.k
        for x, v in enumerate(self.table):
            inv[v] = x
        return Permutation(tuple(inv))

    def cycles(self) -> tuple[tuple[int, ...], ...]:
        """Cycles of length > 1, each starting at its least element."""
        return _cycles(self.table)

    def cycle_type(self) -> tuple[int, ...]:
        lengths = [len(c) for c in self.cycles()]
        fixed = self.k - sum(lengths)
        return tuple(sorted(lengths + [1] * fixed, reverse=True))

    def order(self) -> int:
        from math import lcm

        return lcm(*(len(c) for c in self.cycles())) if self.cycles() else 1

    def __str__(self) -> str:
        cyc = self.cycles()
        if not cyc:
            return "id"
        return "".join("(" + "".join(map(str, c)) + ")" for c in cyc)


@lru_cache(maxsize=None)
def _cycles(table: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    seen = set()
    out = []
    for start in range(len(table)):
        if start in seen or table[start] == start:
            continue
        cyc = [start]
        seen.add(start)
        x = table[start]
        while x != start:
            cyc.append(x)
            seen.add(x)
            x = table[x]
        out.append(tuple(cyc))
    return tuple(out)


def compose_unary(s: UnaryOp, t: UnaryOp) -> UnaryOp:
    """``s o t``: first t, then s."""
    _same_k(s.k, t.k)
    return UnaryOp(tuple(s.table[v] for v in t.table))


@lru_cache(maxsize=None)
def all_unary(k: int = 4) -> tuple[UnaryOp, ...]:
    return tuple(UnaryOp.from_code(n, k) for n in range(k**k))


@lru_cache(maxsize=None)
def all_permutations(k: int = 4) -> tuple[Permutation, ...]:
    return tuple(Permutation(p) for p in itertools.permutations(range(k)))


def trivial_codes(k: int = 4) -> tuple[int, ...]:
    """Codes of the identity and the k constants, ascending."""
    return tuple(sorted([UnaryOp.identity(k).code] + [UnaryOp.constant(a, k).code for a in range(k)]))


# ---------------------------------------------------------------------------
# sigma: the injective triples


class SigmaIndex:
    """Lexicographically ordered injective triples over {0..k-1}."""

    def __init__(self, k: int):
        self.k = k
        self.triples: tuple[tuple[int, int, int], ...] = tuple(
            t for t in itertools.product(range(k), repeat=3) if len(set(t)) == 3
        )
        self._index = {t: i for i, t in enumerate(self.triples)}

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        return iter(self.triples)

    def __contains__(self, t) -> bool:
        return tuple(t) in self._index

    def index(self, t: Sequence[int]) -> int:
        return self._index[tuple(t)]

    def get(self, t: Sequence[int], default=None):
        return self._index.get(tuple(t), default)

    def __getitem__(self, i: int) -> tuple[int, int, int]:
        return self.triples[i]


@lru_cache(maxsize=None)
def sigma(k: int = 4) -> SigmaIndex:
    return SigmaIndex(check_k(k))


def majority_value(t: Sequence[int]) -> int:
    """Value forced by the majority law on a triple with a repetition."""
    x, y, z = t
    if x == y or x == z:
        return x
    if y == z:
        return y
    raise ValueError(f"{tuple(t)} has no repeated entry")


# ---------------------------------------------------------------------------
# ternary operations determined by their values on sigma


def _parse_digits(text: str, k: int) -> tuple[int, ...]:
    values = tuple(int(ch) for ch in text.strip())
    if any(v >= k for v in values):
        raise ValueError(f"digit out of range for k={k}: {text!r}")
    return values


@dataclass(frozen=True)
class MajorityOp:
    """Majority operation, stored as its values on sigma."""

    k: int
    values: tuple[int, ...]

    def __post_init__(self):
        check_k(self.k)
        n = len(sigma(self.k))
        if len(self.values) != n:
            raise ValueError(f"expected {n} sigma values, got {len(self.values)}")
        if any(not 0 <= v < self.k for v in self.values):
            raise ValueError(f"values must lie in [0, {self.k})")

    @classmethod
    def from_string(cls, text: str, k: int = 4) -> "MajorityOp":
        return cls(k, _parse_digits(text, k))

    @classmethod
    def from_code(cls, code: int, k: int = 4) -> "MajorityOp":
        n = len(sigma(k))
        digits = []
        for _ in range(n):
            code, r = divmod(code, k)
            digits.append(r)
        return cls(k, tuple(reversed(digits)))

    def to_string(self) -> str:
        return "".join(map(str, self.values))

    @property
    def code(self) -> int:
        """Base-k integer of the sigma string; integer order is lexicographic order."""
        n = 0
        for v in self.values:
            n = n * self.k + v
        return n

    def __call__(self, x: int, y: int, z: int) -> int:
        i = sigma(self.k).get((x, y, z))
        if i is None:
            return majority_value((x, y, z))
        return self.values[i]

    def __str__(self) -> str:
        return self.to_string()


def tail_patterns(k: int = 4) -> tuple[tuple[int, int], ...]:
    """The pairs (a, b), a != b, naming the tuples (a, b, b); lexicographic."""
    return tuple((a, b) for a in range(k) for b in range(k) if a != b)


@dataclass(frozen=True)
class LeftAbsorptiveOp:
    """Ternary f with f(x,y,x) = f(x,x,y) = x.

    Besides the sigma values, the free part is f(a,b,b) for a != b, kept in
    ``tail`` in the order of :func:`tail_patterns`.
    """

    k: int
    values: tuple[int, ...]
    tail: tuple[int, ...]

    def __post_init__(self):
        check_k(self.k)
        if len(self.values) != len(sigma(self.k)) or len(self.tail) != self.k * (self.k - 1):
            raise ValueError("wrong number of sigma or tail values")

    @classmethod
    def semiprojection(cls, f: MajorityOp | Sequence[int], k: int = 4) -> "LeftAbsorptiveOp":
        """Semiprojection onto the first coordinate sharing f's sigma values."""
        values = f.values if isinstance(f, MajorityOp) else tuple(f)
        k = f.k if isinstance(f, MajorityOp) else k
        return cls(k, tuple(values), tuple(a for a, _ in tail_patterns(k)))

    @classmethod
    def from_majority(cls, f: MajorityOp) -> "LeftAbsorptiveOp":
        return cls(f.k, f.values, tuple(b for _, b in tail_patterns(f.k)))

    def is_majority(self) -> bool:
        return all(v == b for v, (_, b) in zip(self.tail, tail_patterns(self.k)))

    def is_semiprojection(self) -> bool:
        return all(v == a for v, (a, _) in zip(self.tail, tail_patterns(self.k)))

    def __call__(self, x: int, y: int, z: int) -> int:
        i = sigma(self.k).get((x, y, z))
        if i is not None:
            return self.values[i]
        if x == y or x == z:
            return x
        # (x, y, y) with x != y
        return self.tail[tail_patterns(self.k).index((x, y))]


@dataclass(frozen=True)
class FinitaryOp:
    """n-ary operation with its full value table in row-major tuple order."""

    k: int
    arity: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be at least 1")
        if len(self.table) != self.k**self.arity:
            raise ValueError("table length must be k**arity")
        if any(not 0 <= v < self.k for v in self.table):
            raise ValueError(f"values must lie in [0, {self.k})")

    def index(self, xs: Sequence[int]) -> int:
        i = 0
        for x in xs:
            i = i * self.k + x
        return i

    def __call__(self, *xs: int) -> int:
        return self.table[self.index(xs)]

    def tuples(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.k), repeat=self.arity)


TernaryLike = Union[MajorityOp, LeftAbsorptiveOp]


def expand(op: TernaryLike) -> FinitaryOp:
    """Full ternary table of a majority or left-absorptive operation."""
    k = op.k
    return FinitaryOp(k, 3, tuple(op(*t) for t in itertools.product(range(k), repeat=3)))


def restrict(table: FinitaryOp, kind: str = "majority") -> TernaryLike:
    """Inverse of :func:`expand`; ``kind`` is ``"majority"`` or ``"left"``."""
    if table.arity != 3:
        raise ValueError("restrict needs a ternary table")
    k = table.k
    for x, y in itertools.product(range(k), repeat=2):
        for t in ((x, x, y), (x, y, x)):
            if table(*t) != x:
                raise IdentityViolation("absorption identity fails", t)
        if kind == "majority" and table(y, x, x) != x:
            raise IdentityViolation("majority law fails", (y, x, x))
    values = tuple(table(*t) for t in sigma(k))
    if kind == "majority":
        return MajorityOp(k, values)
    if kind == "left":
        return LeftAbsorptiveOp(k, values, tuple(table(a, b, b) for a, b in tail_patterns(k)))
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# commutation


def commutes(f: FinitaryOp, s: UnaryOp) -> bool:
    """s(f(x)) == f(s o x) for every argument tuple; the full-table check."""
    _same_k(f.k, s.k)
    st = s.table
    for xs in f.tuples():
        if st[f(*xs)] != f(*(st[x] for x in xs)):
            return False
    return True


def commutes_on_sigma(f: MajorityOp, s: UnaryOp) -> bool:
    """Commutation of a majority operation, checked on injective triples only."""
    _same_k(f.k, s.k)
    st = s.table
    idx = sigma(f.k)
    vals = f.values
    for i, (x, y, z) in enumerate(idx.triples):
        img = (st[x], st[y], st[z])
        j = idx.get(img)
        rhs = vals[j] if j is not None else majority_value(img)
        if st[vals[i]] != rhs:
            return False
    return True


@dataclass(frozen=True)
class Monoid:
    """A set of unary operations as a bit mask over their codes."""

    k: int
    mask: int

    @classmethod
    def from_codes(cls, codes: Iterable[int], k: int = 4) -> "Monoid":
        m = 0
        for c in codes:
            m |= 1 << c
        return cls(k, m)

    def codes(self) -> list[int]:
        out, m, i = [], self.mask, 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return out

    def members(self) -> list[UnaryOp]:
        return [UnaryOp.from_code(c, self.k) for c in self.codes()]

    def __contains__(self, s) -> bool:
        code = s.code if isinstance(s, UnaryOp) else int(s)
        return bool(self.mask >> code & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __le__(self, other: "Monoid") -> bool:
        return self.mask & ~other.mask == 0

    def __lt__(self, other: "Monoid") -> bool:
        return self <= other and self.mask != other.mask

    def is_closed(self) -> bool:
        """Closed under composition."""
        members = self.members()
        for s in members:
            for t in members:
                if not self.mask >> compose_unary(s, t).code & 1:
                    return False
        return True

    def contains_trivial(self) -> bool:
        return all(self.mask >> c & 1 for c in trivial_codes(self.k))


def unary_centraliser(f: MajorityOp) -> Monoid:
    """All unary operations commuting with f."""
    return Monoid.from_codes((s.code for s in all_unary(f.k) if commutes_on_sigma(f, s)), f.k)


# ---------------------------------------------------------------------------
# conjugation by permutations


def conjugate(obj, p: UnaryOp):
    """``obj^p``: x -> p(obj(p^-1 o x)). Works on unary maps, majority ops, monoids."""
    if not isinstance(p, Permutation):
        if not isinstance(p, UnaryOp) or not p.is_permutation():
            raise ValueError(f"conjugation needs a permutation, got {p}")
        p = Permutation(p.table)
    pinv = p.inverse()
    if isinstance(obj, Monoid):
        _same_k(obj.k, p.k)
        return Monoid.from_codes((conjugate(UnaryOp.from_code(c, obj.k), p).code for c in obj.codes()), obj.k)
    _same_k(obj.k, p.k)
    if isinstance(obj, UnaryOp):
        return UnaryOp(tuple(p.table[obj.table[pinv.table[x]]] for x in range(obj.k)))
    if isinstance(obj, MajorityOp):
        return MajorityOp(obj.k, tuple(p.table[obj(*pinv.apply(t))] for t in sigma(obj.k)))
    raise TypeError(f"cannot conjugate {type(obj).__name__}")
