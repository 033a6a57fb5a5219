"""``centmon`` command line.

Exit status: 0 success, 1 computation failure, 2 usage error, 3 figure mismatch.
Results go to stdout (JSON with ``--json``); progress goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
from dataclasses import dataclass, field
from pathlib import Path

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3

COMMANDS = ("classify", "enumerate", "stage", "assemble", "canonicalize", "intents", "maximal", "conjugacy", "oracle", "verify", "run")


class UsageError(Exception):
    pass


@dataclass
class CommandPlan:
    command: str
    params: dict = field(default_factory=dict)
    json: bool = False


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="centmon", description="Centralising monoids with majority witnesses on {0,1,2,3}.")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        return sp

    sp = add("classify", "attribute class of a unary map")
    sp.add_argument("map", help="code n (e.g. 26) or value tuple (e.g. 0,1,2,2 or 0122)")

    sp = add("enumerate", "majority operations satisfying a condition")
    sp.add_argument("--attribute", required=True, help="condition tag, e.g. C1 or U(193)")
    sp.add_argument("--count-only", action="store_true", help="only count, streaming")
    sp.add_argument("--limit", type=_positive, default=None, help="print at most this many")

    sp = add("stage", "distinct centraliser monoids of one condition class (checkpointed)")
    sp.add_argument("tags", nargs="*", help="condition tags; omit with --all")
    sp.add_argument("--all", action="store_true", help="every one of the 167 classes")
    sp.add_argument("--workdir", default=".", help="run directory (default: .)")
    sp.add_argument("--budget", type=_positive, default=None, help="node budget for this call")
    sp.add_argument("--time-budget", type=float, default=None, help="seconds for this call")
    sp.add_argument("--workers", type=_positive, default=None, help="processes (default: $CENTMON_WORKERS or 1)")
    sp.add_argument("--checkpoint-nodes", type=_positive, default=10**8, help="heartbeat interval in nodes")

    sp = add("assemble", "join all stage files into contexts/K1.cxt")
    sp.add_argument("--workdir", default=".")

    sp = add("canonicalize", "K1 -> K2 (object clarified/reduced) and K3; writes report and manifest")
    sp.add_argument("--workdir", default=".")

    for name, text in (("intents", "Next Closure over a context"), ("maximal", "maximal proper intents")):
        sp = add(name, text)
        sp.add_argument("context", help=".cxt file")
        sp.add_argument("--count", action="store_true", help="only the number")

    sp = add("conjugacy", "conjugacy classes of the objects of a context")
    sp.add_argument("context", help=".cxt file whose object labels end in sigma strings")
    sp.add_argument("--maximal", action="store_true", help="only witnesses of maximal intents")
    sp.add_argument("--count", action="store_true", help="only the number")

    add("oracle", "brute-force cross-check on {0,1,2}")

    sp = add("verify", "recompute the headline figures from a finished run")
    sp.add_argument("--workdir", default=".")

    sp = add("run", "stages, contexts, report and manifest in one go")
    sp.add_argument("--workdir", default=".")
    sp.add_argument("--workers", type=_positive, default=None)
    return p


def parse_args(argv=None) -> CommandPlan:
    ns = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "json")}
    plan = CommandPlan(ns.command, params, getattr(ns, "json", False))
    _validate(plan)
    return plan


def _validate(plan: CommandPlan) -> None:
    from .conditions import TRIVIAL, ConditionId

    p = plan.params
    try:
        if plan.command == "classify":
            _map_arg(p["map"])
        elif plan.command == "enumerate":
            if ConditionId.parse(p["attribute"]) == TRIVIAL:
                raise UsageError("TRIVIAL is not a condition")
        elif plan.command == "stage":
            if p["all"] == bool(p["tags"]):
                raise UsageError("give condition tags or --all")
            for t in p["tags"]:
                if ConditionId.parse(t) == TRIVIAL:
                    raise UsageError("TRIVIAL has no stage")
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _map_arg(text: str):
    """Up to three digits is a code (e.g. 26); four digits or a tuple is a value table."""
    from .algebra import UnaryOp

    t = text.strip()
    if t.isdigit() and len(t) <= 3:
        return UnaryOp.from_code(int(t))
    digits = [int(ch) for ch in t if ch.isdigit()]
    if len(digits) == 4 and set(t) <= set("0123,() "):
        return UnaryOp(tuple(digits))
    raise UsageError(f"cannot read unary map {text!r}")


# ---------------------------------------------------------------------------


def _emit(plan: CommandPlan, doc, text: str | None = None) -> None:
    if plan.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        print(text if text is not None else doc)


def _cmd_classify(plan):
    from .conditions import analyze_image3, classify_unary

    s = _map_arg(plan.params["map"])
    uc = classify_unary(s)
    doc = {
        "code": s.code,
        "table": list(s.table),
        "class": uc.condition.tag,
        "image_size": uc.image_size,
        "members": [m.code for m in uc.members],
    }
    lines = [f"u_{s.code} = {s.table}: {uc.condition.tag}", f"class members: {' '.join(str(m.code) for m in uc.members)}"]
    if uc.image_size == 3:
        an = analyze_image3(s)
        doc["analysis"] = {
            "case": an.case,
            "alpha": an.alpha, "beta": an.beta, "gamma": an.gamma, "t": an.t,
            "u": an.u, "v": an.v, "x": an.x, "y": an.y,
            "orbits": [[list(t) for t in o] for o in an.orbits],
        }
        lines.append(f"case {an.case}: alpha={an.alpha} u={an.u} v={an.v} x={an.x} y={an.y}")
    _emit(plan, doc, "\n".join(lines))
    return EXIT_OK


def _cmd_enumerate(plan):
    from .conditions import ConditionId
    from .generators import condition_plan, iter_values
    from .search import count_candidates

    c = ConditionId.parse(plan.params["attribute"])
    gp = condition_plan(c)
    if plan.params["count_only"]:
        n = count_candidates(gp)
        _emit(plan, {"condition": c.tag, "count": n}, str(n))
        return EXIT_OK
    limit = plan.params["limit"]
    out = []
    for i, vals in enumerate(iter_values(gp)):
        if limit is not None and i >= limit:
            break
        s = "".join(map(str, vals))
        out.append(s)
        if not plan.json:
            print(s)
    if plan.json:
        _emit(plan, {"condition": c.tag, "operations": out})
    return EXIT_OK


def _cmd_stage(plan):
    from .conditions import ConditionId, all_conditions
    from .pipeline import run_stage

    p = plan.params
    conds = list(all_conditions()) if p["all"] else [ConditionId.parse(t) for t in p["tags"]]
    summary = {}
    for c in conds:
        r = run_stage(
            c, p["workdir"], budget=p["budget"], time_budget=p["time_budget"], workers=p["workers"],
            checkpoint_nodes=p["checkpoint_nodes"], progress=lambda m: print(m, file=sys.stderr),
        )
        summary[c.tag] = {"monoids": len(r), "candidates": r.stats.get("candidates"), "covered": r.stats.get("covered")}
        if not plan.json:
            print(f"{c.tag}\t{len(r)}")
    if plan.json:
        _emit(plan, summary)
    return EXIT_OK


def _cmd_assemble(plan):
    from .fca import write_cxt
    from .pipeline import Workdir, assemble

    wd = Workdir(plan.params["workdir"]).ensure()
    K1 = assemble(plan.params["workdir"])
    write_cxt(K1.context, wd.context_file("K1"))
    doc = {"objects": K1.disjoint_total, "distinct_functions": K1.distinct_functions, "attributes": K1.context.n_attributes}
    _emit(plan, doc, f"K1: {K1.disjoint_total} objects ({K1.distinct_functions} distinct functions) x {K1.context.n_attributes} attributes")
    return EXIT_OK


def _cmd_canonicalize(plan):
    from .fca import read_cxt, write_cxt
    from .pipeline import DependencyError, Workdir, _write_json, canonicalize, make_report, write_manifest

    wd = Workdir(plan.params["workdir"]).ensure()
    path = wd.context_file("K1")
    if not path.exists():
        raise DependencyError(f"missing {path}; run 'assemble' first")
    K1 = read_cxt(path)
    canon = canonicalize(K1)
    write_cxt(canon.K2, wd.context_file("K2"))
    write_cxt(canon.K3, wd.context_file("K3"))
    report = make_report(wd.root, K1, canon.K2, canon.K3)
    _write_json(wd.report_file, report.to_json())
    write_manifest(wd.root)
    doc = {"K2": [canon.K2.n_objects, canon.K2.n_attributes], "K3": [canon.K3.n_objects, canon.K3.n_attributes]}
    _emit(plan, doc, f"K2: {canon.K2.n_objects} x {canon.K2.n_attributes}\nK3: {canon.K3.n_objects} x {canon.K3.n_attributes}")
    return EXIT_OK


def _cmd_intents(plan):
    from .fca import count_intents, next_closure_intents, read_cxt

    ctx = read_cxt(plan.params["context"])
    if plan.params["count"]:
        n = count_intents(ctx)
        _emit(plan, {"intents": n}, str(n))
        return EXIT_OK
    intents = [ctx.attribute_names(m) for m in next_closure_intents(ctx)]
    _emit(plan, {"intents": intents}, "\n".join(" ".join(i) for i in intents))
    return EXIT_OK


def _cmd_maximal(plan):
    from .fca import read_cxt
    from .pipeline import maximal_monoids

    ctx = read_cxt(plan.params["context"])
    found = maximal_monoids(ctx)
    if plan.params["count"]:
        _emit(plan, {"maximal": len(found)}, str(len(found)))
        return EXIT_OK
    doc = [{"witness": ctx.objects[g], "attributes": ctx.attribute_names(m)} for m, g in found]
    _emit(plan, {"maximal": doc}, "\n".join(f"{d['witness']}\t{' '.join(d['attributes'])}" for d in doc))
    return EXIT_OK


def _cmd_conjugacy(plan):
    from .algebra import MajorityOp
    from .fca import read_cxt
    from .pipeline import conjugacy_partition, maximal_monoids

    ctx = read_cxt(plan.params["context"])
    labels = list(ctx.objects)
    if plan.params["maximal"]:
        labels = [ctx.objects[g] for _, g in maximal_monoids(ctx)]
    try:
        objs = [MajorityOp.from_string(lbl.split(":")[-1]) for lbl in labels]
    except ValueError as exc:
        raise UsageError(f"object labels must be sigma strings: {exc}") from None
    part = conjugacy_partition(objs)
    if plan.params["count"]:
        _emit(plan, {"classes": len(part)}, str(len(part)))
        return EXIT_OK
    doc = [{"representative": r, "members": [labels[i] for i in cls]} for r, cls in zip(part.representatives, part.classes)]
    _emit(plan, {"classes": doc}, "\n".join(f"{d['representative']}\t{len(d['members'])}" for d in doc))
    return EXIT_OK


def _cmd_oracle(plan):
    from .pipeline import oracle_k3

    r = oracle_k3()
    doc = {
        "operations": r.n_operations,
        "pairs": r.n_pairs,
        "mismatches": r.mismatches,
        "clarified_objects": r.clarified_objects,
        "reduced_objects": r.reduced_objects,
        "intents": r.intents,
        "brute_force_intents": r.brute_force_intents,
        "maximal": r.maximal,
    }
    _emit(plan, doc, "\n".join(f"{k}: {v}" for k, v in doc.items()))
    return EXIT_FAILURE if r.mismatches or r.intents != r.brute_force_intents else EXIT_OK


def _report_out(plan, report):
    if plan.json:
        _emit(plan, report.to_json())
    else:
        for name, obs, exp, ok in report.rows():
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {obs} (expected {exp})")
    return EXIT_OK if report.passed else EXIT_MISMATCH


def _cmd_verify(plan):
    from .pipeline import verify_report

    return _report_out(plan, verify_report(plan.params["workdir"]))


def _cmd_run(plan):
    from .pipeline import run_pipeline

    report = run_pipeline(plan.params["workdir"], workers=plan.params["workers"], progress=lambda m: print(m, file=sys.stderr))
    return _report_out(plan, report)


_HANDLERS = {name: globals()[f"_cmd_{name}"] for name in COMMANDS}


def execute(plan: CommandPlan) -> int:
    from .pipeline import PipelineError

    try:
        return _HANDLERS[plan.command](plan)
    except UsageError as exc:
        print(f"centmon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PipelineError, ValueError, OSError, AssertionError) as exc:
        print(f"centmon: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def _terminate(signum, frame):
    raise KeyboardInterrupt


def main(argv=None) -> int:
    try:
        plan = parse_args(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"centmon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if plan.params.get("verbose") else logging.WARNING,
                        stream=sys.stderr, format="%(message)s")
    signal.signal(signal.SIGTERM, _terminate)
    try:
        return execute(plan)
    except KeyboardInterrupt:
        print("centmon: interrupted; checkpoints saved, re-run to resume", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
