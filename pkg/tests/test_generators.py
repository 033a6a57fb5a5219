import itertools

import numpy as np
import pytest

from centmon.algebra import MajorityOp, Permutation, UnaryOp, unary_centraliser
from centmon.conditions import ConditionId, all_conditions, condition_mask, member_codes
from centmon.generators import (
    Block,
    Plan,
    condition_plan,
    enumerate_commuting,
    filter_plan,
    iter_value_chunks,
    iter_values,
    permutation_plan,
    sample_values,
)
from centmon.tables import centraliser_matrix


def test_every_plan_is_valid():
    for c in all_conditions():
        plan = condition_plan(c)
        plan.validate()
        assert plan.exact
        assert set(plan.required) == set(member_codes(c))


@pytest.mark.parametrize(
    "tag,size",
    [("A1", 3**24), ("A5", 2**24), ("C1", 4**6), ("E2", 4**8), ("D3", 4**12), ("F6", 4**12), ("U(193)", 147456)],
)
def test_cardinality(tag, size):
    assert condition_plan(ConditionId.parse(tag)).cardinality() == size


@pytest.mark.parametrize("tag", ["C1", "C2", "C3"])
def test_cycle_stage_exact_and_duplicate_free(tag):
    c = ConditionId.parse(tag)
    vals = np.array(list(iter_values(condition_plan(c))))
    assert len(vals) == 4096
    codes = (vals * 4 ** np.arange(23, -1, -1)).sum(axis=1)
    assert len(np.unique(codes)) == 4096
    assert condition_mask(c, vals).all()
    assert centraliser_matrix(vals)[:, list(member_codes(c))].all()


def test_e_stage_exact():
    c = ConditionId.parse("E1")
    vals = np.vstack(list(iter_value_chunks(condition_plan(c))))
    assert len(vals) == 65536
    assert condition_mask(c, vals).all()
    codes = (vals.astype(np.int64) * 4 ** np.arange(23, -1, -1)).sum(axis=1)
    assert len(np.unique(codes)) == 65536


def test_cycle_stage_complete():
    """Every op commuting with a 4-cycle is determined by its values on one triple per orbit."""
    p = Permutation.from_cycles([(0, 1, 2, 3)])
    plan = permutation_plan(p)
    assert [len(b.positions) for b in plan.blocks] == [4] * 6
    # on an orbit of length 4 a value v must return to itself after 4 steps: any v works
    assert all(len(b.options) == 4 for b in plan.blocks)


def test_transposition_blocks():
    plan = condition_plan(ConditionId.parse("F1"))  # (0 1)
    sizes = sorted(len(b.positions) for b in plan.blocks)
    assert sizes == [2] * 12
    # values on an orbit {t, p o t} are (v, p(v)); a swapped pair needs p(p(v)) = v, always true
    assert all(len(b.options) == 4 for b in plan.blocks)


@pytest.mark.parametrize("tag", ["C1", "E1", "U(193)", "U(26)", "A6"])
def test_chunks_match_stream(tag):
    plan = condition_plan(ConditionId.parse(tag))
    stream = iter_values(plan)
    seen = 0
    for chunk in iter_value_chunks(plan, chunk=1 << 12):
        expected = np.array(list(itertools.islice(stream, len(chunk))), dtype=np.int8)
        assert (chunk == expected).all()
        seen += len(chunk)
        if seen > 50_000:
            break


def test_enumerate_commuting_yields_majority_ops():
    ops = list(itertools.islice(enumerate_commuting(ConditionId.parse("D1")), 100))
    s = UnaryOp((1, 0, 3, 2))
    assert all(s in unary_centraliser(f) for f in ops)
    assert len({f.code for f in ops}) == 100


def test_sample_values_in_plan():
    rng = np.random.default_rng(0)
    for tag in ("A2", "U(6)", "E4", "F3"):
        c = ConditionId.parse(tag)
        vals = sample_values(condition_plan(c), 500, rng)
        assert condition_mask(c, vals).all()


@pytest.mark.parametrize("tag", ["C1", "C2", "E3"])
def test_compiled_option_zero_is_lex_least(tag):
    """Option 0 in every block of the compiled plan spells the least generated sigma string."""
    from centmon.search import compile_plan

    plan = condition_plan(ConditionId.parse(tag))
    cp = compile_plan(plan)
    least = [0] * 24
    for p, v in cp.least_tail[0]:
        least[p] = v
    assert MajorityOp(4, tuple(least)).code == min(MajorityOp(4, v).code for v in iter_values(plan))


def test_filter_plan_is_superset():
    plan = filter_plan(UnaryOp.from_code(26))
    assert not plan.exact
    assert plan.cardinality() == 4**24


def test_validate_rejects_gaps():
    with pytest.raises(ValueError):
        Plan(4, "bad", (Block((0,), ((0,),)),), ()).validate()
    blocks = tuple(Block((i,), ((0,),)) for i in range(23)) + (Block((23,), ()),)
    with pytest.raises(ValueError):
        Plan(4, "bad", blocks, ()).validate()
