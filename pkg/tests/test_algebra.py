import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centmon.algebra import (
    ConfigurationError,
    FinitaryOp,
    IdentityViolation,
    LeftAbsorptiveOp,
    MajorityOp,
    Monoid,
    Permutation,
    UnaryOp,
    all_permutations,
    all_unary,
    commutes,
    commutes_on_sigma,
    compose_unary,
    conjugate,
    expand,
    restrict,
    sigma,
    unary_centraliser,
)

majority4 = st.lists(st.integers(0, 3), min_size=24, max_size=24).map(lambda v: MajorityOp(4, tuple(v)))
unary4 = st.integers(0, 255).map(UnaryOp.from_code)
perm4 = st.sampled_from(all_permutations(4))


def test_codec_examples():
    assert UnaryOp.from_code(26).table == (0, 1, 2, 2)
    assert UnaryOp.from_code(0).table == (0, 0, 0, 0)
    assert UnaryOp((0, 1, 2, 3)).code == 27
    assert UnaryOp((3, 0, 0, 1)).code == 193


@pytest.mark.parametrize("k", [3, 4])
def test_codec_round_trip(k):
    for n in range(k**k):
        s = UnaryOp.from_code(n, k)
        assert s.code == n
        assert all(s.table[j] == n // k ** (k - 1 - j) % k for j in range(k))


@pytest.mark.parametrize("n", [-1, 256])
def test_codec_out_of_range(n):
    with pytest.raises(ValueError):
        UnaryOp.from_code(n)


def test_compose():
    s = UnaryOp((3, 0, 0, 1))
    assert compose_unary(UnaryOp.identity(), s) == s
    assert compose_unary(UnaryOp.constant(2), s) == UnaryOp.constant(2)
    inv = UnaryOp((1, 0, 3, 2))
    assert compose_unary(inv, inv) == UnaryOp.identity()
    t = UnaryOp((1, 2, 3, 3))
    assert compose_unary(s, t).table == tuple(s.table[t.table[j]] for j in range(4))
    with pytest.raises(ConfigurationError):
        compose_unary(s, UnaryOp.identity(3))


def test_sigma_index():
    assert len(sigma(4)) == 24 and len(sigma(3)) == 6
    idx = sigma(4)
    assert list(idx) == sorted(t for t in itertools.permutations(range(4), 3))
    assert all(idx[idx.index(t)] == t for t in idx)


def test_expand_majority_law():
    rng = random.Random(1)
    for _ in range(20):
        f = MajorityOp(4, tuple(rng.randrange(4) for _ in range(24)))
        g = expand(f)
        for x, y in itertools.product(range(4), repeat=2):
            assert g(x, x, y) == g(x, y, x) == g(y, x, x) == x
        assert g(1, 2, 2) == 2
        assert restrict(g) == f


def test_semiprojection_expansion():
    f = MajorityOp(4, (0,) * 24)
    g = LeftAbsorptiveOp.semiprojection(f)
    assert g.is_semiprojection() and not g.is_majority()
    assert expand(g)(1, 2, 2) == 1
    assert restrict(expand(g), "left") == g


def test_restrict_rejects_non_majority():
    table = list(expand(MajorityOp(4, (0,) * 24)).table)
    table[1 * 16 + 2 * 4 + 2] = 1  # f(1,2,2) = 1
    with pytest.raises(IdentityViolation) as err:
        restrict(FinitaryOp(4, 3, tuple(table)))
    assert err.value.witness == (1, 2, 2)


def test_commutes_examples():
    f = MajorityOp(4, tuple(random.Random(3).randrange(4) for _ in range(24)))
    full = expand(f)
    for a in range(4):
        assert commutes(full, UnaryOp.constant(a))
    assert commutes(full, UnaryOp.identity())


def test_semiprojection_of_u26_witness():
    """s(g(1,2,3)) = 2 but g(s o (1,2,3)) = g(1,2,2) = 1 for the leftmost semiprojection."""
    from centmon.conditions import ConditionId
    from centmon.generators import enumerate_commuting

    s = UnaryOp.from_code(26)
    f = next(enumerate_commuting(ConditionId.parse("U(26)")))
    assert commutes_on_sigma(f, s)
    g = LeftAbsorptiveOp.semiprojection(f)
    assert s(g(1, 2, 3)) == 2 and g(1, 2, 2) == 1
    assert not commutes(expand(g), s)


def test_commutes_on_sigma_exhaustive_k3():
    maps = all_unary(3)
    for code in range(3**6):
        f = MajorityOp.from_code(code, 3)
        full = expand(f)
        for s in maps:
            assert commutes(full, s) == commutes_on_sigma(f, s)


def test_commutes_on_sigma_random_k4():
    rng = random.Random(7)
    maps = all_unary(4)
    for _ in range(40):
        f = MajorityOp(4, tuple(rng.randrange(4) for _ in range(24)))
        full = expand(f)
        for s in rng.sample(maps, 250):
            assert commutes(full, s) == commutes_on_sigma(f, s)


def test_trivial_centraliser():
    m = unary_centraliser(MajorityOp.from_string("000000000000000000000123"))
    assert sorted(m.codes()) == sorted([0, 85, 170, 255, 27])


def test_centraliser_of_c1_candidate_contains_square():
    from centmon.generators import condition_plan, iter_values
    from centmon.conditions import ConditionId

    s = Permutation.from_cycles([(0, 1, 2, 3)])
    for i, vals in enumerate(iter_values(condition_plan(ConditionId.parse("C1")))):
        m = unary_centraliser(MajorityOp(4, vals))
        assert s in m and compose_unary(s, s) in m
        if i > 50:
            break


def test_permutation_helpers():
    p = Permutation.from_cycles([(0, 3, 1)])
    assert str(p) == "(031)"
    assert p.order() == 3 and p.cycle_type() == (3, 1)
    assert compose_unary(p, p.inverse()) == UnaryOp.identity()
    with pytest.raises(ValueError):
        Permutation((0, 0, 1, 2))


def test_conjugate_needs_permutation():
    with pytest.raises(ValueError):
        conjugate(UnaryOp.from_code(26), UnaryOp.from_code(26))


@settings(max_examples=60, deadline=None)
@given(majority4)
def test_centraliser_is_monoid(f):
    m = unary_centraliser(f)
    assert m.contains_trivial()
    assert m.is_closed()


@settings(max_examples=60, deadline=None)
@given(majority4, perm4, perm4)
def test_conjugation_is_an_action(f, p, q):
    assert conjugate(f, UnaryOp.identity()) == f
    assert conjugate(conjugate(f, p), p.inverse()) == f
    assert conjugate(conjugate(f, p), q) == conjugate(f, compose_unary(q, p))


@settings(max_examples=60, deadline=None)
@given(majority4, perm4)
def test_conjugation_equivariance(f, p):
    assert unary_centraliser(conjugate(f, p)) == conjugate(unary_centraliser(f), p)


@settings(max_examples=60, deadline=None)
@given(majority4, perm4)
def test_inverse_permutation_indistinguishable(f, p):
    m = unary_centraliser(f)
    assert (p in m) == (p.inverse() in m)


@settings(max_examples=40, deadline=None)
@given(majority4)
def test_string_round_trip(f):
    assert MajorityOp.from_string(f.to_string()) == f
    assert MajorityOp.from_code(f.code) == f


def test_monoid_order():
    a = Monoid.from_codes([0, 27])
    b = Monoid.from_codes([0, 27, 26])
    assert a <= b and a < b and not b <= a
    assert 26 in b and len(b) == 3
