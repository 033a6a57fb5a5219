"""Exact generators of the majority operations commuting with a class of unary maps.

A generator is a :class:`Plan`: an ordered list of independent blocks, each
assigning a fixed tuple of sigma positions from a list of options.  The
cartesian product of the option lists is the set of commuting operations,
each produced once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .algebra import MajorityOp, Permutation, UnaryOp, check_k, sigma, trivial_codes
from .conditions import (
    A_PAIRS,
    TRIVIAL,
    ConditionId,
    _perm,
    analyze_image3,
    member_codes,
    representative,
)


@dataclass(frozen=True)
class Block:
    positions: tuple[int, ...]
    options: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Plan:
    """Search space for one stage.

    ``exact`` plans generate only operations that commute with every map in
    ``required``; other plans enumerate a superset that the search filters.
    """

    k: int
    label: str
    blocks: tuple[Block, ...]
    required: tuple[int, ...]
    exact: bool = True

    def cardinality(self) -> int:
        return math.prod(len(b.options) for b in self.blocks)

    def confirmed(self) -> int:
        """Mask of maps known to commute with every completion."""
        codes = set(trivial_codes(self.k))
        if self.exact:
            codes.update(self.required)
        return sum(1 << c for c in codes)

    def required_mask(self) -> int:
        return sum(1 << c for c in set(self.required) | set(trivial_codes(self.k)))

    def validate(self) -> None:
        n = len(sigma(self.k))
        seen = sorted(p for b in self.blocks for p in b.positions)
        if seen != list(range(n)):
            raise ValueError(f"plan {self.label} does not cover sigma exactly once")
        for b in self.blocks:
            if not b.options or any(len(o) != len(b.positions) for o in b.options):
                raise ValueError(f"malformed block in plan {self.label}")


def _sorted_blocks(blocks) -> tuple[Block, ...]:
    return tuple(sorted(blocks, key=lambda b: min(b.positions)))


def _single_blocks(domains) -> tuple[Block, ...]:
    return tuple(Block((i,), tuple((v,) for v in dom)) for i, dom in enumerate(domains))


def permutation_plan(p: Permutation, label: str | None = None, required=None) -> Plan:
    """Orbits of <p> on sigma: one free value per orbit, the rest forced by f(p o x) = p(f(x))."""
    idx = sigma(p.k)
    seen: set[int] = set()
    blocks = []
    for start in idx:
        i0 = idx.index(start)
        if i0 in seen:
            continue
        orbit = [start]
        nxt = p.apply(start)
        while nxt != start:
            orbit.append(nxt)
            nxt = p.apply(nxt)
        positions = tuple(idx.index(t) for t in orbit)
        seen.update(positions)
        options = []
        for v in range(p.k):
            vals, w = [], v
            for _ in orbit:
                vals.append(w)
                w = p(w)
            if w != v:
                continue
            options.append(tuple(vals))
        blocks.append(Block(positions, tuple(options)))
    if required is None:
        required = sorted({p.code, p.inverse().code})
    return Plan(p.k, label or str(p), _sorted_blocks(blocks), tuple(required))


def image3_plan(s: UnaryOp, label: str | None = None) -> Plan:
    an = analyze_image3(s)
    idx = sigma(4)
    blocks = []
    # (u, v, z) o pi with z not feeding any other triple: free in {u, v}
    free_z = (an.x, an.y) if an.case == "SYM" else (an.y,)
    for pi in itertools.permutations(range(3)):
        for z in free_z:
            blocks.append(Block((idx.index(_perm((an.u, an.v, z), pi)),), ((an.u,), (an.v,))))

    def dependants(q):
        """Triples r in sigma with s o r == q."""
        return [r for r in idx if s.apply(r) == q]

    if an.case == "SYM":
        for orbit in an.orbits:
            start = min(orbit)
            chain = [start]
            while len(chain) < len(orbit):
                chain.append(s.apply(chain[-1]))
            deps = [r for q in chain for r in dependants(q) if an.v in r]
            positions = tuple(idx.index(t) for t in chain + deps)
            options = []
            for v0 in sorted(s.image()):
                vals, w = [], v0
                for _ in chain:
                    vals.append(w)
                    w = s(w)
                by_triple = dict(zip(chain, vals))
                dep_domains = [s.preimage(by_triple[s.apply(r)]) for r in deps]
                for dep_vals in itertools.product(*dep_domains):
                    options.append(tuple(vals) + dep_vals)
            blocks.append(Block(positions, tuple(options)))
    else:
        for pi in itertools.permutations(range(3)):
            q = _perm((an.u, an.v, an.x), pi)
            deps = dependants(q)
            positions = (idx.index(q),) + tuple(idx.index(r) for r in deps)
            options = []
            for a in (an.u, an.v):
                for dep_vals in itertools.product(*[s.preimage(a) for _ in deps]):
                    options.append((a,) + dep_vals)
            blocks.append(Block(positions, tuple(options)))
    return Plan(4, label or f"U({s.code})", _sorted_blocks(blocks), (s.code,))


@lru_cache(maxsize=None)
def condition_plan(c: ConditionId) -> Plan:
    """Exact generator for the majority operations satisfying condition c."""
    if c == TRIVIAL:
        raise ValueError("TRIVIAL has no generator")
    idx = sigma(4)
    members = member_codes(c)
    if c.family == "A" and c.number <= 4:
        dom = tuple(v for v in range(4) if v != c.number - 1)
        plan = Plan(4, c.tag, _single_blocks([dom] * len(idx)), members)
    elif c.family == "A":
        (a, b), (cc, d) = A_PAIRS[c.number]
        doms = [(a, b) if {a, b} <= set(t) else (cc, d) for t in idx]
        plan = Plan(4, c.tag, _single_blocks(doms), members)
    elif c.family in "CDEF":
        plan = permutation_plan(Permutation(representative(c).table), c.tag, members)
    else:
        plan = image3_plan(UnaryOp.from_code(c.number, 4), c.tag)
    plan.validate()
    return plan


def filter_plan(s: UnaryOp, required=None) -> Plan:
    """Brute-force plan: every majority operation, filtered by the search."""
    k = check_k(s.k)
    n = len(sigma(k))
    req = tuple(sorted(required)) if required is not None else (s.code,)
    return Plan(k, f"filter{s}", _single_blocks([tuple(range(k))] * n), req, exact=False)


def iter_values(plan: Plan) -> Iterator[tuple[int, ...]]:
    """Stream the sigma-value tuples generated by an exact plan."""
    n = len(sigma(plan.k))
    blocks = plan.blocks
    positions = [b.positions for b in blocks]
    vals = [0] * n
    for choice in itertools.product(*(b.options for b in blocks)):
        for pos, opt in zip(positions, choice):
            for p, v in zip(pos, opt):
                vals[p] = v
        yield tuple(vals)


def enumerate_commuting(c: ConditionId) -> Iterator[MajorityOp]:
    """Every majority operation satisfying condition c, each exactly once."""
    for vals in iter_values(condition_plan(c)):
        yield MajorityOp(4, vals)


def sample_values(plan: Plan, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random members of an exact plan, as an (size, n) array."""
    n = len(sigma(plan.k))
    out = np.empty((size, n), dtype=np.int64)
    for b in plan.blocks:
        opts = np.array(b.options, dtype=np.int64)
        pick = rng.integers(0, len(opts), size=size)
        out[:, list(b.positions)] = opts[pick]
    return out


def iter_value_chunks(plan: Plan, chunk: int = 1 << 20) -> Iterator[np.ndarray]:
    """Stream an exact plan as (rows, n) int8 arrays of at most ``chunk`` rows."""
    n = len(sigma(plan.k))
    blocks = list(plan.blocks)
    inner: list[Block] = []
    size = 1
    while blocks and size * len(blocks[-1].options) <= chunk:
        inner.insert(0, blocks.pop())
        size *= len(inner[0].options)
    base = np.zeros((size, n), dtype=np.int8)
    reps = size
    for b in inner:
        opts = np.array(b.options, dtype=np.int8)
        reps //= len(opts)
        # row-major product: earlier blocks vary slowest
        base[:, list(b.positions)] = np.tile(np.repeat(opts, reps, axis=0), (size // (len(opts) * reps), 1))
    for choice in itertools.product(*(b.options for b in blocks)):
        out = base.copy()
        for b, opt in zip(blocks, choice):
            out[:, list(b.positions)] = opt
        yield out
