"""Pruned, deduplicating search for the distinct centraliser monoids of a stage.

A stage walks the plan of one condition class block by block.  Each node
keeps the set of unary maps not yet refuted (a 256-bit mask); a subtree is
cut as soon as that set shrinks to the maps every completion is already
known to commute with, since all its leaves then share one monoid.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _purepy
from .algebra import MajorityOp, Monoid, sigma
from .conditions import ConditionId
from .generators import Plan, condition_plan
from .tables import WORDS, int_to_words, search_tables

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

if os.environ.get("CENTMON_PURE", "") not in ("", "0"):
    _kernel = None

BACKEND = "cython" if _kernel is not None else "python"

_MAXP = 8
_STAT_KEYS = ("nodes", "leaves", "pruned", "dead", "covered", "unsound")


def backend_name() -> str:
    return BACKEND


@dataclass(frozen=True)
class CompiledPlan:
    """A plan flattened into the arrays the search kernels consume."""

    k: int
    n: int
    label: str
    positions: tuple[tuple[int, ...], ...]
    options: tuple[tuple[tuple[int, ...], ...], ...]
    checks: tuple[tuple[tuple[int, ...], ...], ...]
    least_tail: tuple[tuple[tuple[int, int], ...], ...]
    start: int
    required: int
    confirmed: int
    exact: bool
    self_ok_int: tuple = field(repr=False)
    pair_ok_int: tuple = field(repr=False)
    arrays: dict = field(repr=False)

    @property
    def n_blocks(self) -> int:
        return len(self.positions)

    def cardinality(self) -> int:
        return math.prod(len(o) for o in self.options)


def _lex_key(block_positions, option):
    return tuple(v for _, v in sorted(zip(block_positions, option)))


def compile_plan(plan: Plan) -> CompiledPlan:
    """Order each block's options lexicographically and precompute check lists.

    With options sorted, taking option 0 in every remaining block yields the
    lexicographically least sigma string of a subtree.
    """
    st = search_tables(plan.k)
    n = len(sigma(plan.k))
    positions = tuple(b.positions for b in plan.blocks)
    options = tuple(tuple(sorted(b.options, key=lambda o, b=b: _lex_key(b.positions, o))) for b in plan.blocks)
    assigned: list[int] = []
    checks = []
    for pos in positions:
        per_slot = []
        for p in pos:
            per_slot.append(tuple(j for j in assigned if st.linked[p, j]))
            assigned.append(p)
        checks.append(tuple(per_slot))
    least_tail = []
    for d in range(len(positions) + 1):
        least_tail.append(tuple((p, v) for b in range(d, len(positions)) for p, v in zip(positions[b], options[b][0])))

    B = len(positions)
    if any(len(p) > _MAXP for p in positions):
        raise ValueError(f"block wider than {_MAXP} positions in plan {plan.label}")
    block_npos = np.array([len(p) for p in positions], dtype=np.int32)
    block_pos = np.zeros((B, _MAXP), dtype=np.int32)
    for d, pos in enumerate(positions):
        block_pos[d, : len(pos)] = pos
    block_nopt = np.array([len(o) for o in options], dtype=np.int32)
    block_optoff = np.zeros(B, dtype=np.int64)
    block_optoff[1:] = np.cumsum(block_nopt)[:-1]
    opt_vals = np.zeros((int(block_nopt.sum()), _MAXP), dtype=np.int8)
    row = 0
    for opts in options:
        for o in opts:
            opt_vals[row, : len(o)] = o
            row += 1
    check_off = np.zeros(B * _MAXP + 1, dtype=np.int32)
    flat: list[int] = []
    for d in range(B):
        for t in range(_MAXP):
            check_off[d * _MAXP + t] = len(flat)
            if t < len(checks[d]):
                flat.extend(checks[d][t])
    check_off[B * _MAXP] = len(flat)
    start = st.all_maps
    required = plan.required_mask()
    confirmed = plan.confirmed()
    arrays = dict(
        self_ok=np.ascontiguousarray(st.self_ok),
        pair_ok=np.ascontiguousarray(st.pair_ok),
        block_npos=block_npos,
        block_pos=block_pos,
        block_nopt=block_nopt,
        block_optoff=block_optoff,
        opt_vals=opt_vals,
        check_off=check_off,
        check_pos=np.array(flat or [0], dtype=np.int32),
        start=int_to_words(start),
        required=int_to_words(required),
        confirmed=int_to_words(confirmed),
    )
    return CompiledPlan(
        plan.k,
        n,
        plan.label,
        positions,
        options,
        tuple(checks),
        tuple(least_tail),
        start,
        required,
        confirmed,
        plan.exact,
        st.self_ok_int,
        st.pair_ok_int,
        arrays,
    )


@lru_cache(maxsize=None)
def compiled_condition_plan(c: ConditionId) -> CompiledPlan:
    return compile_plan(condition_plan(c))


def run_task(cp: CompiledPlan, prefix=(), backend: str | None = None):
    """Search the subtree below a prefix of block-option indices.

    Returns ``(monoids, stats)`` with monoids mapping a mask to the least
    sigma code found for it.
    """
    backend = backend or BACKEND
    if backend == "cython":
        if _kernel is None:
            raise RuntimeError("compiled kernel not available")
        a = cp.arrays
        found, stats = _kernel.block_search(
            cp.k,
            cp.n,
            a["self_ok"],
            a["pair_ok"],
            a["block_npos"],
            a["block_pos"],
            a["block_nopt"],
            a["block_optoff"],
            a["opt_vals"],
            a["check_off"],
            a["check_pos"],
            a["start"],
            a["required"],
            a["confirmed"],
            cp.exact,
            np.asarray(prefix, dtype=np.int32),
        )
    else:
        found, stats = _purepy.block_search(cp, tuple(prefix))
    return found, {key: int(stats[key]) for key in _STAT_KEYS}


def count_candidates(plan: Plan | CompiledPlan, backend: str | None = None) -> int:
    """Count a plan's candidates by walking its tree, without storing any."""
    cp = plan if isinstance(plan, CompiledPlan) else compile_plan(plan)
    nopts = cp.arrays["block_nopt"]
    if (backend or BACKEND) == "cython":
        return int(_kernel.count_leaves(nopts))
    return _purepy.count_leaves(nopts.tolist())


def task_prefixes(cp: CompiledPlan, min_tasks: int = 1) -> list[tuple[int, ...]]:
    """Shortest prefix depth giving at least ``min_tasks`` subtrees."""
    depth, total = 0, 1
    while total < min_tasks and depth < cp.n_blocks - 1:
        total *= len(cp.options[depth])
        depth += 1
    return list(itertools.product(*(range(len(cp.options[d])) for d in range(depth))))


def merge_into(acc: dict[int, int], found: dict[int, int]) -> None:
    for mask, rep in found.items():
        old = acc.get(mask)
        if old is None or rep < old:
            acc[mask] = rep


def add_stats(acc: dict, stats: dict) -> None:
    for key in _STAT_KEYS:
        acc[key] = acc.get(key, 0) + int(stats.get(key, 0))


@dataclass
class StageResult:
    """Distinct centraliser monoids found for one condition class."""

    condition: ConditionId
    monoids: dict[int, int]  # mask -> least sigma code
    stats: dict

    def representatives(self) -> list[MajorityOp]:
        return [MajorityOp.from_code(self.monoids[m]) for m in self.sorted_masks()]

    def sorted_masks(self) -> list[int]:
        return sorted(self.monoids)

    def entries(self) -> list[tuple[Monoid, MajorityOp]]:
        return [(Monoid(4, m), MajorityOp.from_code(self.monoids[m])) for m in self.sorted_masks()]

    def __len__(self) -> int:
        return len(self.monoids)

    def to_json(self) -> dict:
        return {
            "condition": self.condition.tag,
            "monoids": [
                {"monoid": Monoid(4, m).codes(), "representative": MajorityOp.from_code(self.monoids[m]).to_string()}
                for m in self.sorted_masks()
            ],
            "statistics": dict(self.stats),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StageResult":
        monoids = {}
        for entry in doc["monoids"]:
            mask = Monoid.from_codes(entry["monoid"]).mask
            monoids[mask] = MajorityOp.from_string(entry["representative"]).code
        return cls(ConditionId.parse(doc["condition"]), monoids, dict(doc.get("statistics", {})))


def check_result(cp: CompiledPlan, found: dict[int, int], stats: dict) -> None:
    """Cheap internal consistency checks on a finished search."""
    if stats["unsound"]:
        raise AssertionError(f"{cp.label}: exact generator produced {stats['unsound']} non-commuting candidates")
    for mask in found:
        if mask & cp.required != cp.required:
            raise AssertionError(f"{cp.label}: monoid misses a required map")


def distinct_monoids(c: ConditionId, backend: str | None = None) -> StageResult:
    """Run a whole stage in-process (no checkpoints); see ``pipeline.run_stage``."""
    cp = compiled_condition_plan(c)
    t0 = time.perf_counter()
    found, stats = run_task(cp, (), backend)
    check_result(cp, found, stats)
    stats["wall_time"] = round(time.perf_counter() - t0, 3)
    stats["candidates"] = cp.cardinality()
    return StageResult(c, found, stats)
