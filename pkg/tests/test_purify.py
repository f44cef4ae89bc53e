import random

import pytest

from quorumkit.analysis import max_guild, tolerated_system
from quorumkit.conditions import PreconditionError, check_b3
from quorumkit.core import (
    AsymmetricFailProneSystem,
    FailProneSystem,
    Ground,
    SetFamily,
)
from quorumkit.purify import purify, violates_tolerated

import oracles
from generators import as_sets, composable, names


def _purified_cases(seed, count, lo=3, hi=6):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        g = Ground(names(rng.randint(lo, hi)))
        s = composable(rng, g, max_size=rng.choice([1, 2]))
        out.append(s)
    return out


def test_purify_matches_oracle():
    for s in _purified_cases(31, 60):
        g = s.ground
        t = tolerated_system(s.quorums, s.fail_prone)
        got = purify(s.fail_prone, t)
        want = oracles.purify({n: as_sets(f) for n, f in s.fail_prone.items()}, as_sets(t), g.names)
        assert {n: as_sets(f) for n, f in got.items()} == want


def test_purified_passes_b3_with_tolerated():
    for s in _purified_cases(32, 60):
        t = tolerated_system(s.quorums, s.fail_prone)
        assert check_b3(purify(s.fail_prone, t), extra=t).holds


def test_purify_is_idempotent():
    for s in _purified_cases(33, 40):
        t = tolerated_system(s.quorums, s.fail_prone)
        p = purify(s.fail_prone, t)
        assert purify(p, t) == p


def test_violation_is_monotone():
    for s in _purified_cases(34, 20, hi=5):
        g = s.ground
        t = tolerated_system(s.quorums, s.fail_prone)
        for fam in s.fail_prone.systems:
            for a in range(g.full + 1):
                if violates_tolerated(a, fam, t):
                    for i in range(len(g)):
                        assert violates_tolerated(a | 1 << i, fam, t)


def test_empty_set_never_violates():
    for s in _purified_cases(35, 30):
        t = tolerated_system(s.quorums, s.fail_prone)
        for fam in s.fail_prone.systems:
            assert not violates_tolerated(0, fam, t)


def test_guilds_survive_purification():
    for s in _purified_cases(36, 30, hi=6):
        g = s.ground
        t = tolerated_system(s.quorums, s.fail_prone)
        p = purify(s.fail_prone, t)
        for faulty in range(g.full + 1):
            assert max_guild(s.quorums, s.fail_prone, faulty) <= max_guild(s.quorums, p, faulty)


def test_removes_set_that_breaks_tolerated_b3():
    # {a,b} of d plus tolerated {d} leave {c}, which both d and the tolerated system allow
    g = Ground("abcd")
    per = {
        "a": FailProneSystem.of(g, [["c"], ["d"]]),
        "b": FailProneSystem.of(g, [["c"], ["d"]]),
        "c": FailProneSystem.of(g, [["d"]]),
        "d": FailProneSystem.of(g, [["c"], ["a", "b"]]),
    }
    af = AsymmetricFailProneSystem(g, per)
    t = SetFamily.of(g, [["c"], ["d"]])
    assert not check_b3(af, extra=t).holds
    p = purify(af, t, check=False)
    assert check_b3(p, extra=t).holds
    assert as_sets(p["d"]) == {frozenset("a"), frozenset("b"), frozenset("c")}
    assert p["a"] is af["a"]


def test_preconditions():
    g = Ground("abc")
    bad = AsymmetricFailProneSystem.replicate(FailProneSystem.of(g, [["a"], ["b"], ["c"]]))
    with pytest.raises(PreconditionError) as e:
        purify(bad, SetFamily.of(g, [["a"]]))
    assert e.value.precondition == "B3"
    ok = AsymmetricFailProneSystem.replicate(FailProneSystem.of(g, [[]]))
    with pytest.raises(PreconditionError) as e:
        purify(ok, SetFamily.of(g, [["a"], ["b"], ["c"]]))
    assert e.value.precondition == "Q3(T)"
    with pytest.raises(PreconditionError):
        purify(ok, SetFamily.of(Ground("ab"), [["a"]]))
