"""Formal contexts over bitsets: derivations, clarification, reduction, Next Closure.

Rows are Python integers with bit ``j`` set when the object has attribute
``j``.  Attribute 0 is the first (most significant) attribute in the lectic
order used by Next Closure.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import reduce as _fold
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _purepy
from .search import BACKEND, _kernel

OBJECTS = "objects"
ATTRIBUTES = "attributes"


class CxtParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _bits(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << i
    return out


def _indices(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class FormalContext:
    objects: tuple[str, ...]
    attributes: tuple[str, ...]
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.objects)) != len(self.objects):
            raise ValueError("duplicate object labels")
        if len(set(self.attributes)) != len(self.attributes):
            raise ValueError("duplicate attribute labels")
        if len(self.rows) != len(self.objects):
            raise ValueError("one row per object required")
        if any(r >> len(self.attributes) for r in self.rows):
            raise ValueError("row has bits beyond the attribute count")

    @classmethod
    def from_matrix(cls, matrix, objects=None, attributes=None) -> "FormalContext":
        m = np.asarray(matrix, dtype=bool)
        if m.ndim != 2:
            m = m.reshape(len(m), -1)
        n_obj, n_attr = m.shape
        objects = tuple(objects) if objects is not None else tuple(f"g{i}" for i in range(n_obj))
        attributes = tuple(attributes) if attributes is not None else tuple(f"m{j}" for j in range(n_attr))
        rows = tuple(_bits(np.flatnonzero(r).tolist()) for r in m)
        return cls(objects, attributes, rows)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def all_attributes(self) -> int:
        return (1 << self.n_attributes) - 1

    @property
    def all_objects(self) -> int:
        return (1 << self.n_objects) - 1

    def columns(self) -> tuple[int, ...]:
        cols = [0] * self.n_attributes
        for g, r in enumerate(self.rows):
            for j in _indices(r):
                cols[j] |= 1 << g
        return tuple(cols)

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((self.n_objects, self.n_attributes), dtype=bool)
        for g, r in enumerate(self.rows):
            out[g, _indices(r)] = True
        return out

    def transpose(self) -> "FormalContext":
        return FormalContext(self.attributes, self.objects, self.columns())

    def intent(self, objs: int) -> int:
        """Attributes shared by every object in the set."""
        out = self.all_attributes
        for g in _indices(objs):
            out &= self.rows[g]
        return out

    def extent(self, attrs: int) -> int:
        """Objects having every attribute in the set."""
        out = self.all_objects
        cols = self.columns()
        for j in _indices(attrs):
            out &= cols[j]
        return out

    def derive(self, side: str, subset: int) -> int:
        if side == OBJECTS:
            return self.intent(subset)
        if side == ATTRIBUTES:
            return self.extent(subset)
        raise ValueError(f"side must be {OBJECTS!r} or {ATTRIBUTES!r}")

    def closure(self, attrs: int) -> int:
        return self.intent(self.extent(attrs))

    def attribute_names(self, attrs: int) -> list[str]:
        return [self.attributes[j] for j in _indices(attrs)]

    def select_objects(self, keep: Sequence[int]) -> "FormalContext":
        return FormalContext(tuple(self.objects[g] for g in keep), self.attributes, tuple(self.rows[g] for g in keep))

    def select_attributes(self, keep: Sequence[int]) -> "FormalContext":
        rows = tuple(_bits(i for i, j in enumerate(keep) if r >> j & 1) for r in self.rows)
        return FormalContext(self.objects, tuple(self.attributes[j] for j in keep), rows)


def clarify(ctx: FormalContext, side: str = OBJECTS) -> tuple[FormalContext, dict[str, list[str]]]:
    """Keep the first of each group of identical rows (or columns).

    The merge map sends each kept label to every original label it stands for.
    """
    if side == ATTRIBUTES:
        t, merged = clarify(ctx.transpose(), OBJECTS)
        return t.transpose(), merged
    first: dict[int, int] = {}
    merged: dict[str, list[str]] = {}
    for g, r in enumerate(ctx.rows):
        if r in first:
            merged[ctx.objects[first[r]]].append(ctx.objects[g])
        else:
            first[r] = g
            merged[ctx.objects[g]] = [ctx.objects[g]]
    return ctx.select_objects(sorted(first.values())), merged


def reduce(ctx: FormalContext, side: str = OBJECTS) -> tuple[FormalContext, list[str]]:
    """Drop rows (columns) equal to the intersection of the others containing them."""
    if side == ATTRIBUTES:
        t, removed = reduce(ctx.transpose(), OBJECTS)
        return t.transpose(), removed
    if len(set(ctx.rows)) != len(ctx.rows):
        raise ValueError("reduce needs a clarified context")
    full = ctx.all_attributes
    keep, removed = [], []
    for g, r in enumerate(ctx.rows):
        meet = full
        for q in ctx.rows:
            if q != r and q & r == r:
                meet &= q
        if meet == r:
            removed.append(ctx.objects[g])
        else:
            keep.append(g)
    return ctx.select_objects(keep), removed


def _word_matrix(masks: Sequence[int], width: int) -> np.ndarray:
    words = max(1, (width + 63) // 64)
    out = np.zeros((len(masks), words), dtype=np.uint64)
    for i, m in enumerate(masks):
        for w in range(words):
            out[i, w] = (m >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return out


def _next_closure(ctx: FormalContext, collect: bool, backend: str | None = None):
    backend = backend or BACKEND
    cols = ctx.columns()
    if backend == "cython" and _kernel is not None and ctx.n_objects > 0:
        return _kernel.next_closure_count(
            _word_matrix(ctx.rows, ctx.n_attributes),
            _word_matrix(cols, ctx.n_objects),
            ctx.n_attributes,
            collect,
        )
    return _purepy.next_closure(list(ctx.rows), list(cols), ctx.n_attributes, collect)


def next_closure_intents(ctx: FormalContext, backend: str | None = None) -> list[int]:
    """All intents in lectic order (attribute 0 most significant)."""
    return _next_closure(ctx, True, backend)[1]


def count_intents(ctx: FormalContext, backend: str | None = None) -> int:
    return int(_next_closure(ctx, False, backend)[0])


def lectic_key(mask: int, n_attr: int) -> int:
    """Integer whose natural order is the lectic order on attribute sets."""
    out = 0
    for j in range(n_attr):
        out = (out << 1) | (mask >> j & 1)
    return out


def brute_force_intents(ctx: FormalContext) -> set[int]:
    """Closure of every attribute subset; only for small contexts."""
    if ctx.n_attributes > 20:
        raise ValueError("too many attributes for exhaustive enumeration")
    return {ctx.closure(a) for a in range(1 << ctx.n_attributes)}


def maximal_proper_intents(ctx: FormalContext, intents: Iterable[int] | None = None) -> list[int]:
    """Intents other than the full attribute set, maximal under inclusion."""
    top = ctx.all_attributes
    pool = sorted(set(intents if intents is not None else next_closure_intents(ctx)) - {top}, key=lambda m: -bin(m).count("1"))
    out: list[int] = []
    for m in pool:
        if not any(o & m == m for o in out):
            out.append(m)
    return sorted(out, key=lambda m: lectic_key(m, ctx.n_attributes))


# ---------------------------------------------------------------------------
# Burmeister .cxt


def write_cxt(ctx: FormalContext, path: str | os.PathLike) -> None:
    Path(path).write_bytes(dumps_cxt(ctx).encode("utf-8"))


def dumps_cxt(ctx: FormalContext) -> str:
    lines = ["B", "", str(ctx.n_objects), str(ctx.n_attributes), ""]
    lines += list(ctx.objects)
    lines += list(ctx.attributes)
    for r in ctx.rows:
        lines.append("".join("X" if r >> j & 1 else "." for j in range(ctx.n_attributes)))
    return "\n".join(lines) + "\n"


def read_cxt(path: str | os.PathLike) -> FormalContext:
    return loads_cxt(Path(path).read_text(encoding="utf-8"))


def loads_cxt(text: str) -> FormalContext:
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    def line(i: int) -> str:
        if i >= len(lines):
            raise CxtParseError("unexpected end of file", i + 1)
        return lines[i]

    if line(0) != "B":
        raise CxtParseError("expected 'B' header", 1)
    # line 2 is the (possibly empty) context name
    counts = []
    for i in (2, 3):
        try:
            counts.append(int(line(i)))
        except ValueError:
            raise CxtParseError(f"expected a count, got {line(i)!r}", i + 1) from None
        if counts[-1] < 0:
            raise CxtParseError("negative count", i + 1)
    n_obj, n_attr = counts
    if line(4) != "":
        raise CxtParseError("expected an empty line", 5)
    pos = 5
    objects = [line(pos + i) for i in range(n_obj)]
    pos += n_obj
    attributes = [line(pos + i) for i in range(n_attr)]
    pos += n_attr
    rows = []
    for g in range(n_obj):
        text_row = line(pos + g)
        if len(text_row) != n_attr:
            raise CxtParseError(f"row has {len(text_row)} entries, expected {n_attr}", pos + g + 1)
        bad = set(text_row) - {".", "X"}
        if bad:
            raise CxtParseError(f"unexpected character {sorted(bad)[0]!r}", pos + g + 1)
        rows.append(_bits(j for j, ch in enumerate(text_row) if ch == "X"))
    pos += n_obj
    if pos != len(lines):
        raise CxtParseError(f"{len(lines) - pos} trailing line(s) after {n_obj} rows", pos + 1)
    try:
        return FormalContext(tuple(objects), tuple(attributes), tuple(rows))
    except ValueError as exc:
        raise CxtParseError(str(exc), 6) from None
