"""End-to-end computation: stages, the assembled context, canonical contexts, figures.

Work directory layout::

    stages/stage-<tag>.json        one per condition class (tag without parentheses)
    stages/stage-<tag>.partial.json  resumable state of an unfinished stage
    contexts/K1.cxt K2.cxt K3.cxt
    reports/report.json
    MANIFEST.sha256                sha256sum-style listing of the files above
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .algebra import (
    FinitaryOp,
    MajorityOp,
    Monoid,
    UnaryOp,
    all_permutations,
    all_unary,
    commutes,
    commutes_on_sigma,
    compose_unary,
    expand,
    sigma,
    trivial_codes,
)
from .conditions import TRIVIAL, ConditionId, all_conditions, class_members, member_codes
from .fca import (
    ATTRIBUTES,
    OBJECTS,
    FormalContext,
    clarify,
    count_intents,
    maximal_proper_intents,
    next_closure_intents,
    read_cxt,
    reduce,
    write_cxt,
)
from .search import (
    BACKEND,
    StageResult,
    add_stats,
    check_result,
    compiled_condition_plan,
    merge_into,
    run_task,
    task_prefixes,
)
from .tables import centraliser_matrix, op_tables

log = logging.getLogger("centmon")

WORKERS_ENV = "CENTMON_WORKERS"
F0 = "000000000000000000000123"  # least sigma string whose centraliser is trivial
TASK_LEAVES = 1 << 26  # target candidates per checkpointable task
MANIFEST = "MANIFEST.sha256"


class PipelineError(RuntimeError):
    pass


class DependencyError(PipelineError):
    pass


class IntegrityError(PipelineError):
    pass


class BudgetExhausted(PipelineError):
    """A stage stopped early; its partial state is on disk and can be resumed."""

    def __init__(self, tag: str, done: int, total: int):
        super().__init__(f"stage {tag}: budget exhausted after {done}/{total} tasks")
        self.tag, self.done, self.total = tag, done, total


class VerificationError(PipelineError):
    def __init__(self, failures: Sequence[str]):
        super().__init__("figure mismatch: " + ", ".join(failures))
        self.failures = list(failures)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be positive")
    return n


@lru_cache(maxsize=None)
def expected_figures() -> dict:
    return json.loads(resources.files("centmon").joinpath("data/expected.json").read_text())


# ---------------------------------------------------------------------------
# attributes


@dataclass(frozen=True)
class AttributeUniverse:
    conditions: tuple[ConditionId, ...]
    members: dict
    trivial: tuple[int, ...]

    @property
    def tags(self) -> list[str]:
        return [c.tag for c in self.conditions]

    def class_masks(self) -> list[int]:
        return [sum(1 << m for m in self.members[c]) for c in self.conditions]

    def project(self, mask: int) -> int:
        """256-bit monoid -> 167-bit attribute row; classes must be all-or-none."""
        row = 0
        for i, cm in enumerate(self.class_masks()):
            hit = mask & cm
            if hit == cm:
                row |= 1 << i
            elif hit:
                raise AssertionError(f"class {self.conditions[i].tag} split by monoid {Monoid(4, mask).codes()}")
        return row

    def expand(self, row: int) -> Monoid:
        """Attribute row -> explicit monoid (class members plus the trivial maps)."""
        codes = list(self.trivial)
        for i, c in enumerate(self.conditions):
            if row >> i & 1:
                codes.extend(self.members[c])
        return Monoid.from_codes(codes)


@lru_cache(maxsize=None)
def standard_attributes() -> AttributeUniverse:
    conds = all_conditions()
    return AttributeUniverse(conds, {c: member_codes(c) for c in conds}, tuple(trivial_codes(4)))


# ---------------------------------------------------------------------------
# files


class Workdir:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    @property
    def stages(self) -> Path:
        return self.root / "stages"

    @property
    def contexts(self) -> Path:
        return self.root / "contexts"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def stage_file(self, c: ConditionId) -> Path:
        return self.stages / f"stage-{c.file_tag}.json"

    def partial_file(self, c: ConditionId) -> Path:
        return self.stages / f"stage-{c.file_tag}.partial.json"

    def context_file(self, name: str) -> Path:
        return self.contexts / f"{name}.cxt"

    @property
    def report_file(self) -> Path:
        return self.reports / "report.json"

    def ensure(self) -> "Workdir":
        for d in (self.stages, self.contexts, self.reports):
            d.mkdir(parents=True, exist_ok=True)
        return self


def _checksum(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _write_json(path: Path, doc: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n")
    os.replace(tmp, path)


def _sealed(doc: dict) -> dict:
    return {**doc, "checksum": _checksum(doc)}


def _unseal(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{path}: unreadable checkpoint ({exc})") from None
    stored = doc.pop("checksum", None)
    if stored != _checksum(doc):
        raise IntegrityError(f"{path}: checksum mismatch")
    return doc


def plan_fingerprint(c: ConditionId) -> str:
    cp = compiled_condition_plan(c)
    return hashlib.sha256(repr((cp.positions, cp.options)).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# stages


def _pool_task(args):
    tag, prefix = args
    cp = compiled_condition_plan(ConditionId.parse(tag))
    return run_task(cp, prefix)


def load_stage(wd: Workdir, c: ConditionId) -> StageResult:
    path = wd.stage_file(c)
    if not path.exists():
        raise DependencyError(f"missing stage file {path}")
    doc = _unseal(path)
    if doc.get("condition") != c.tag:
        raise IntegrityError(f"{path}: holds stage {doc.get('condition')}, expected {c.tag}")
    return StageResult.from_json(doc)


def run_stage(
    c: ConditionId,
    workdir: str | os.PathLike,
    budget: int | None = None,
    time_budget: float | None = None,
    workers: int | None = None,
    checkpoint_nodes: int = 10**8,
    progress: Callable[[str], None] | None = None,
) -> StageResult:
    """Run (or resume, or reload) one stage with on-disk checkpoints.

    ``budget`` caps the search nodes of this call; when hit, the partial state
    is saved and :class:`BudgetExhausted` is raised.  A completed stage file is
    returned as is.
    """
    if c == TRIVIAL:
        raise ValueError("TRIVIAL has no stage")
    wd = Workdir(workdir).ensure()
    final = wd.stage_file(c)
    if final.exists():
        return load_stage(wd, c)
    workers = workers or worker_count()
    cp = compiled_condition_plan(c)
    tasks = task_prefixes(cp, max(1, math.ceil(cp.cardinality() / TASK_LEAVES)))
    fp = plan_fingerprint(c)

    partial = wd.partial_file(c)
    done: set[int] = set()
    found: dict[int, int] = {}
    stats: dict = {}
    elapsed = 0.0
    if partial.exists():
        doc = _unseal(partial)
        if doc["plan"] != fp or doc["n_tasks"] != len(tasks):
            raise IntegrityError(f"{partial}: written for a different plan")
        done = set(doc["done"])
        found = {int(k, 16): v for k, v in doc["monoids"].items()}
        stats = doc["statistics"]
        elapsed = doc.get("elapsed", 0.0)

    def save_partial():
        _write_json(
            partial,
            _sealed(
                {
                    "condition": c.tag,
                    "plan": fp,
                    "n_tasks": len(tasks),
                    "done": sorted(done),
                    "monoids": {format(m, "x"): r for m, r in sorted(found.items())},
                    "statistics": stats,
                    "elapsed": elapsed,
                }
            ),
        )

    todo = [i for i in range(len(tasks)) if i not in done]
    t0 = time.perf_counter()
    spent = 0
    since_save = 0
    say = progress or (lambda msg: log.info(msg))
    stopped = False
    try:
        if workers > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            results = pool.map(_pool_task, [(c.tag, tasks[i]) for i in todo], chunksize=1)
        else:
            pool = None
            results = (run_task(cp, tasks[i]) for i in todo)
        try:
            for i, (part, st) in zip(todo, results):
                check_result(cp, part, st)
                merge_into(found, part)
                add_stats(stats, st)
                done.add(i)
                spent += st["nodes"]
                since_save += st["nodes"]
                if since_save >= checkpoint_nodes:
                    elapsed_now = elapsed + time.perf_counter() - t0
                    say(f"{c.tag}: {len(done)}/{len(tasks)} tasks, {len(found)} monoids, {elapsed_now:.0f}s")
                    save_partial()
                    since_save = 0
                over_nodes = budget is not None and spent >= budget
                over_time = time_budget is not None and time.perf_counter() - t0 >= time_budget
                if (over_nodes or over_time) and len(done) < len(tasks):
                    stopped = True
                    break
        finally:
            if pool is not None:
                pool.shutdown(wait=True, cancel_futures=True)
    except BaseException:
        # keep whatever finished, e.g. on Ctrl-C
        elapsed += time.perf_counter() - t0
        if done:
            save_partial()
        raise
    elapsed += time.perf_counter() - t0
    if stopped:
        save_partial()
        raise BudgetExhausted(c.tag, len(done), len(tasks))

    if stats.get("covered") != cp.cardinality():
        raise AssertionError(f"{c.tag}: covered {stats.get('covered')} of {cp.cardinality()} candidates")
    stats = dict(stats)
    stats.update(candidates=cp.cardinality(), tasks=len(tasks), wall_time=round(elapsed, 3), backend=BACKEND)
    result = StageResult(c, found, stats)
    _write_json(final, _sealed(result.to_json()))
    if partial.exists():
        partial.unlink()
    return result


def run_all(workdir, workers: int | None = None, budget: int | None = None, progress=None,
            conditions: Iterable[ConditionId] | None = None) -> dict[ConditionId, StageResult]:
    """Run every stage in canonical order (each resumable)."""
    say = progress or (lambda msg: log.info(msg))
    out = {}
    for c in conditions or all_conditions():
        t = time.perf_counter()
        out[c] = run_stage(c, workdir, budget=budget, workers=workers, progress=progress)
        say(f"stage {c.tag}: {len(out[c])} monoids ({time.perf_counter() - t:.1f}s)")
    return out


# ---------------------------------------------------------------------------
# assembled and canonical contexts


@dataclass
class AssembledContext:
    context: FormalContext
    functions: list[MajorityOp]
    masks: list[int]
    provenance: list[str]

    @property
    def disjoint_total(self) -> int:
        return self.context.n_objects

    @property
    def distinct_functions(self) -> int:
        return len({f.code for f in self.functions})


def assemble(stage_results: dict[ConditionId, StageResult] | str | os.PathLike,
             universe: AttributeUniverse | None = None) -> AssembledContext:
    """Join the stage lists into K' (disjoint union plus the trivial object f0)."""
    universe = universe or standard_attributes()
    if not isinstance(stage_results, dict):
        wd = Workdir(stage_results)
        stage_results = {c: load_stage(wd, c) for c in universe.conditions if wd.stage_file(c).exists()}
    missing = [c.tag for c in universe.conditions if c not in stage_results]
    if missing:
        raise DependencyError(f"missing stages: {', '.join(missing[:5])}{' ...' if len(missing) > 5 else ''}")
    f0 = MajorityOp.from_string(F0)
    f0_mask = Monoid.from_codes(universe.trivial).mask
    labels, rows, funcs, masks, prov = [f"f0:{F0}"], [0], [f0], [f0_mask], ["f0"]
    for c in universe.conditions:
        r = stage_results[c]
        for mask in r.sorted_masks():
            f = MajorityOp.from_code(r.monoids[mask])
            row = universe.project(mask)
            if not row >> universe.conditions.index(c) & 1:
                raise AssertionError(f"object of stage {c.tag} misses its own attribute")
            labels.append(f"{c.file_tag}:{f.to_string()}")
            rows.append(row)
            funcs.append(f)
            masks.append(mask)
            prov.append(c.tag)
    ctx = FormalContext(tuple(labels), tuple(universe.tags), tuple(rows))
    return AssembledContext(ctx, funcs, masks, prov)


@dataclass
class Canonical:
    K2: FormalContext
    K3: FormalContext
    object_merge: dict
    removed_objects: list
    attribute_merge: dict
    removed_attributes: list


def canonicalize(K1: AssembledContext | FormalContext) -> Canonical:
    """K'' = object-clarified and object-reduced K'; K''' also attribute-clarified and reduced."""
    ctx = K1.context if isinstance(K1, AssembledContext) else K1
    clar, obj_merge = clarify(ctx, OBJECTS)
    red, removed = reduce(clar, OBJECTS)
    # object identity is the sigma string
    K2 = FormalContext(tuple(lbl.split(":")[-1] for lbl in red.objects), red.attributes, red.rows)
    aclar, attr_merge = clarify(K2, ATTRIBUTES)
    K3, removed_attrs = reduce(aclar, ATTRIBUTES)
    return Canonical(K2, K3, obj_merge, removed, attr_merge, removed_attrs)


def count_monoids(K2: FormalContext) -> int:
    return count_intents(K2)


def list_monoids(K2: FormalContext, universe: AttributeUniverse | None = None) -> list[Monoid]:
    """Every intent of K'' expanded to explicit unary codes, in lectic order."""
    universe = universe or standard_attributes()
    idx = {c.tag: i for i, c in enumerate(universe.conditions)}
    order = [idx[a] for a in K2.attributes]
    out = []
    for intent in next_closure_intents(K2):
        row = 0
        for j, i in enumerate(order):
            if intent >> j & 1:
                row |= 1 << i
        out.append(universe.expand(row))
    return out


def maximal_monoids(K2: FormalContext, intents=None) -> list[tuple[int, int]]:
    """Maximal proper intents paired with the index of an object whose row equals it."""
    rows = {r: g for g, r in reversed(list(enumerate(K2.rows)))}
    out = []
    for m in maximal_proper_intents(K2, intents):
        if m not in rows:
            raise AssertionError("maximal intent is not an object row")
        out.append((m, rows[m]))
    return out


# ---------------------------------------------------------------------------
# conjugation


@lru_cache(maxsize=None)
def _conjugation_tables(k: int = 4):
    """For each permutation p: (source index per sigma position, p as an array)."""
    idx = sigma(k)
    out = []
    for p in all_permutations(k):
        pinv = p.inverse()
        src = np.array([idx.index(pinv.apply(t)) for t in idx], dtype=np.int64)
        out.append((src, np.array(p.table, dtype=np.int64)))
    return out


def conjugate_values(values: np.ndarray, k: int = 4) -> np.ndarray:
    """(N, n) sigma values -> (P, N, n) values of all conjugates f^p."""
    values = np.asarray(values, dtype=np.int64)
    return np.stack([ptab[values[:, src]] for src, ptab in _conjugation_tables(k)])


def _codes(values: np.ndarray, k: int) -> np.ndarray:
    n = values.shape[-1]
    return (values * (k ** np.arange(n - 1, -1, -1, dtype=np.int64))).sum(axis=-1)


@dataclass(frozen=True)
class ConjugacyPartition:
    classes: tuple[tuple[int, ...], ...]
    representatives: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.classes)


def conjugacy_partition(objects: Sequence[MajorityOp]) -> ConjugacyPartition:
    """Orbits of the objects under f -> f^p, p in Sym(k)."""
    if not objects:
        return ConjugacyPartition((), ())
    k = objects[0].k
    vals = np.array([f.values for f in objects], dtype=np.int64)
    keys = _codes(conjugate_values(vals, k), k).min(axis=0)
    groups: dict[int, list[int]] = {}
    for i, key in enumerate(keys.tolist()):
        groups.setdefault(key, []).append(i)
    classes = []
    for members in groups.values():
        rep = min(objects[i].to_string() for i in members)
        classes.append((rep, tuple(members)))
    classes.sort()
    return ConjugacyPartition(tuple(m for _, m in classes), tuple(r for r, _ in classes))


def monoid_conjugacy_classes(masks: Sequence[int], k: int = 4) -> int:
    """Number of Sym(k)-orbits among the given monoids (diagnostic)."""
    tab = op_tables(k)
    maps = []
    for p in all_permutations(k):
        pinv = p.inverse().code
        maps.append(tab.compose[tab.compose[p.code], pinv])  # u -> p o u o p^-1
    keys = set()
    for m in masks:
        codes = Monoid(k, m).codes()
        keys.add(min(sum(1 << int(conj[c]) for c in codes) for conj in maps))
    return len(keys)


# ---------------------------------------------------------------------------
# k = 3 oracle


@dataclass
class OracleResult:
    n_operations: int
    n_pairs: int
    mismatches: int
    context: FormalContext
    clarified_objects: int
    reduced_objects: int
    intents: int
    brute_force_intents: int
    maximal: int
    monoids: list[Monoid]


def oracle_k3() -> OracleResult:
    """Brute force over all 729 majority operations on {0,1,2}."""
    k = 3
    n = len(sigma(k))
    maps = all_unary(k)
    mismatches = 0
    rows = []
    ops = [MajorityOp.from_code(code, k) for code in range(k**n)]
    for f in ops:
        full = expand(f)
        mask = 0
        for s in maps:
            a = commutes(full, s)
            if a != commutes_on_sigma(f, s):
                mismatches += 1
            if a:
                mask |= 1 << s.code
        rows.append(mask)
    ctx = FormalContext(tuple(f.to_string() for f in ops), tuple(str(s.code) for s in maps), tuple(rows))
    clar, _ = clarify(ctx, OBJECTS)
    red, _ = reduce(clar, OBJECTS)
    intents = next_closure_intents(red)
    # every intersection of centraliser rows, plus the top
    family = {ctx.all_attributes}
    for r in set(rows):
        family |= {r & q for q in family}
    return OracleResult(
        n_operations=len(ops),
        n_pairs=len(ops) * len(maps),
        mismatches=mismatches,
        context=ctx,
        clarified_objects=clar.n_objects,
        reduced_objects=red.n_objects,
        intents=len(intents),
        brute_force_intents=len(family),
        maximal=len(maximal_proper_intents(red, intents)),
        monoids=[Monoid(k, m) for m in intents],
    )


# ---------------------------------------------------------------------------
# full run and report


def build_contexts(workdir, progress=None) -> tuple[AssembledContext, Canonical]:
    wd = Workdir(workdir).ensure()
    K1 = assemble(workdir)
    canon = canonicalize(K1)
    write_cxt(K1.context, wd.context_file("K1"))
    write_cxt(canon.K2, wd.context_file("K2"))
    write_cxt(canon.K3, wd.context_file("K3"))
    return K1, canon


def compute_figures(K1: FormalContext, K2: FormalContext, K3: FormalContext) -> dict:
    """Observed figures from the three contexts alone."""
    intents = next_closure_intents(K2)
    maxi = maximal_monoids(K2, intents)
    objects = [MajorityOp.from_string(s) for s in K2.objects]
    witnesses = [objects[g] for _, g in maxi]
    universe = standard_attributes()
    idx = {c.tag: i for i, c in enumerate(universe.conditions)}
    masks = []
    for r in K2.rows:
        row = sum(1 << idx[K2.attributes[j]] for j in range(K2.n_attributes) if r >> j & 1)
        masks.append(universe.expand(row).mask)
    return {
        "objects_K1": K1.n_objects,
        "objects_K2": K2.n_objects,
        "attributes_K3": K3.n_attributes,
        "intents": len(intents),
        "maximal": len(maxi),
        "conjugacy_K2": len(conjugacy_partition(objects)),
        "conjugacy_maximal": len(conjugacy_partition(witnesses)),
        "_extra": {
            "intents_K1": count_intents(K1),
            "intents_K3": count_intents(K3),
            "distinct_functions_K1": len({lbl.split(":")[-1] for lbl in K1.objects}),
            "monoid_conjugacy_K2": monoid_conjugacy_classes(masks),
            "monoid_conjugacy_maximal": monoid_conjugacy_classes([masks[g] for _, g in maxi]),
        },
    }


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(workdir) -> Path:
    wd = Workdir(workdir)
    files = sorted(
        p for d in (wd.stages, wd.contexts, wd.reports) if d.exists() for p in d.iterdir()
        if p.is_file() and not p.name.endswith((".tmp", ".partial.json"))
    )
    lines = [f"{_sha256(p)}  {p.relative_to(wd.root).as_posix()}" for p in files]
    path = wd.root / MANIFEST
    path.write_text("\n".join(lines) + "\n")
    return path


def check_manifest(workdir) -> None:
    wd = Workdir(workdir)
    path = wd.root / MANIFEST
    if not path.exists():
        raise DependencyError(f"missing {path}")
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        digest, rel = line.split("  ", 1)
        target = wd.root / rel
        if not target.exists():
            raise DependencyError(f"manifest lists missing file {rel}")
        if _sha256(target) != digest:
            raise IntegrityError(f"{rel}: checksum differs from manifest")


@dataclass
class PipelineReport:
    figures: dict
    expected: dict
    extra: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    checksums: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, int, int | None, bool]]:
        return [(name, self.figures[name], exp, self.figures[name] == exp) for name, exp in self.expected.items()]

    @property
    def failures(self) -> list[str]:
        return [name for name, _, _, ok in self.rows() if not ok]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "figures": {n: {"observed": o, "expected": e, "pass": ok} for n, o, e, ok in self.rows()},
            "extra": self.extra,
            "stages": self.stages,
            "checksums": self.checksums,
        }


def make_report(workdir, K1=None, K2=None, K3=None, expected: dict | None = None) -> PipelineReport:
    wd = Workdir(workdir)
    K1 = K1 or read_cxt(wd.context_file("K1"))
    K2 = K2 or read_cxt(wd.context_file("K2"))
    K3 = K3 or read_cxt(wd.context_file("K3"))
    figs = compute_figures(K1, K2, K3)
    extra = figs.pop("_extra")
    stages = {}
    universe = standard_attributes()
    total = 1
    for c in universe.conditions:
        r = load_stage(wd, c)
        total += len(r)
        stages[c.tag] = {"monoids": len(r), **{k: r.stats.get(k) for k in ("candidates", "covered", "nodes", "pruned", "wall_time")}}
    if total != figs["objects_K1"]:
        raise IntegrityError(f"K1 has {figs['objects_K1']} objects but stage files sum to {total}")
    extra["disjoint_union_total"] = total
    checksums = {p.relative_to(wd.root).as_posix(): _sha256(p) for p in sorted(wd.contexts.glob("*.cxt"))}
    return PipelineReport(figs, dict(expected or expected_figures()["k4"]), extra, stages, checksums)


def run_pipeline(workdir, workers: int | None = None, progress=None) -> PipelineReport:
    """All stages, contexts, report and manifest."""
    run_all(workdir, workers=workers, progress=progress)
    K1, canon = build_contexts(workdir)
    report = make_report(workdir, K1.context, canon.K2, canon.K3)
    wd = Workdir(workdir).ensure()
    _write_json(wd.report_file, report.to_json())
    write_manifest(workdir)
    return report


def verify_report(workdir, expected: dict | None = None) -> PipelineReport:
    """Check the manifest, recompute every figure from the files, compare with the table."""
    wd = Workdir(workdir)
    for name in ("K1", "K2", "K3"):
        if not wd.context_file(name).exists():
            raise DependencyError(f"missing context {wd.context_file(name)}")
    check_manifest(workdir)
    return make_report(workdir, expected=expected)
