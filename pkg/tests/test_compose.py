import random

import pytest

from quorumkit.compose import (
    cartesian_compose,
    compose_asymmetric,
    compose_symmetric,
    otimes,
    union_compose,
    wisdom_counterexamples,
)
from quorumkit.conditions import PreconditionError, check_bqs, check_q3
from quorumkit.core import (
    AsymmetricFailProneSystem,
    AsymmetricSystem,
    FailProneSystem,
    Ground,
    QuorumSystem,
    SymmetricSystem,
    threshold_fail_prone,
)

import oracles
from generators import as_sets, composable, names, purifiable_walk, q3_pair

G1 = Ground("abcde")
G2 = Ground("defgh")
F1 = FailProneSystem.of(G1, [["a"], ["b", "c"], ["d"], ["c", "e"]])
F2 = FailProneSystem.of(G2, [["d"], ["e"], ["f", "g"], ["h"]])


def test_union_rejects_overlap():
    with pytest.raises(PreconditionError) as e:
        union_compose(F1, F2)
    assert e.value.precondition == "disjoint-grounds"


def test_union_disjoint():
    a = threshold_fail_prone(Ground("abcd"), 1)
    b = threshold_fail_prone(Ground("wxyz"), 1)
    r = union_compose(a, b)
    assert r.report.holds
    assert len(r.fail_prone) == 8
    assert len(r.quorums) == 16


def test_cartesian_requires_q3():
    bad = FailProneSystem.of(Ground("abc"), [["a"], ["b"], ["c"]])
    with pytest.raises(PreconditionError) as e:
        cartesian_compose(bad, threshold_fail_prone(Ground("xyzw"), 1))
    assert e.value.precondition == "Q3(F1)"


def test_cartesian_overlap_is_flagged_and_fails_q3():
    r = cartesian_compose(F1, F2, allow_overlap=True)
    assert "unsafe" in r.provenance
    assert not r.report.holds
    w = r.report.witness
    assert frozenset(w["F1"]) | frozenset(w["F2"]) | frozenset(w["F3"]) == frozenset("abcdefgh")


def test_general_composition_listing():
    r = compose_symmetric(F1, F2)
    want = {frozenset(s) for s in ["d", "ah", "ce", "bch", "afg", "bcfg"]}
    assert as_sets(r.fail_prone) == want
    assert check_q3(r.fail_prone).holds
    assert r.report.holds


def test_supplied_quorums_must_be_bqs():
    g = Ground("abcd")
    f = threshold_fail_prone(g, 1)
    bad = SymmetricSystem(f, QuorumSystem.of(g, [["a", "b"], ["c", "d"]]))
    with pytest.raises(PreconditionError) as e:
        compose_symmetric(bad, threshold_fail_prone(Ground("wxyz"), 1))
    assert e.value.precondition == "BQS(F1)"


def test_otimes_matches_definition():
    rng = random.Random(41)
    for _ in range(200):
        a, b = q3_pair(rng, max_total=6)
        got = as_sets(otimes(a, b))
        want = oracles.otimes(list(a), a.ground.names, list(b), b.ground.names)
        assert got == want


def test_otimes_disjoint_is_cartesian():
    rng = random.Random(42)
    for _ in range(100):
        a, b = q3_pair(rng, max_total=7, overlap=False)
        assert as_sets(otimes(a, b)) == as_sets(cartesian_compose(a, b).fail_prone)


def test_random_symmetric_compositions():
    rng = random.Random(43)
    for _ in range(150):
        a, b = q3_pair(rng, max_total=8)
        r = compose_symmetric(a, b)
        assert check_q3(r.fail_prone).holds
        assert check_bqs(r.quorums, r.fail_prone).holds


def test_compose_asymmetric_of_symmetric_inputs():
    r = compose_asymmetric(SymmetricSystem.canonical(F1), SymmetricSystem.canonical(F2))
    assert r.report.holds
    assert r.provenance["common"] == ["d", "e"]
    assert r.provenance["purified"] == [False, False]


def test_compose_asymmetric_needs_purified_inputs():
    s1 = purifiable_walk(random.Random(1), 1)[0]
    s2 = composable(random.Random(2), Ground(["c", "d", "x"]), max_size=1)
    with pytest.raises(PreconditionError) as e:
        compose_asymmetric(s1, s2)
    assert e.value.precondition == "purified(S1)"
    r = compose_asymmetric(s1, s2, auto_purify=True)
    assert r.provenance["purified"] == [True, False]
    assert r.report.holds


def test_compose_asymmetric_preconditions():
    g = Ground("abc")
    bad = AsymmetricSystem.canonical(AsymmetricFailProneSystem.replicate(FailProneSystem.of(g, [["a"], ["b"], ["c"]])))
    ok = composable(random.Random(3), Ground("xyz"), max_size=1)
    with pytest.raises(PreconditionError) as e:
        compose_asymmetric(bad, ok)
    assert e.value.precondition == "B3(S1)"
    with pytest.raises(PreconditionError) as e:
        compose_asymmetric(ok, bad)
    assert e.value.precondition == "B3(S2)"


def test_composite_matches_b3_oracle():
    rng = random.Random(44)
    for _ in range(60):
        total = rng.randint(4, 6)
        pool = names(total)
        n1 = rng.randint(2, total - 1)
        g1, g2 = Ground(pool[:n1]), Ground(pool[max(0, n1 - 1) - rng.randint(0, 1) :])
        if len(g2) < 2:
            continue
        s1, s2 = composable(rng, g1, max_size=1), composable(rng, g2, max_size=1)
        r = compose_asymmetric(s1, s2)
        assert r.report.holds == oracles.b3({n: as_sets(f) for n, f in r.fail_prone.items()}, r.ground.names)
        assert r.report.holds


def test_wisdom_report_shape():
    s1, s2 = SymmetricSystem.canonical(F1), SymmetricSystem.canonical(F2)
    r = compose_asymmetric(s1, s2)
    out = wisdom_counterexamples(s1, s2, r)
    for item in out:
        assert set(item) == {"faulty", "guild_1", "guild_2", "not_wise", "without_quorum"}
    assert wisdom_counterexamples(s1, s2, r, limit=1) == out[:1]


def test_wisdom_preservation_small_instances_reported():
    rng = random.Random(3)
    found = []
    for _ in range(60):
        shared = rng.randint(0, 2)
        pool = names(6 - shared)
        g1, g2 = Ground(pool[:3]), Ground(pool[3 - shared :])
        s1, s2 = composable(rng, g1, max_size=1), composable(rng, g2, max_size=1)
        r = compose_asymmetric(s1, s2)
        for item in wisdom_counterexamples(s1, s2, r):
            found.append((g1.names, g2.names, item))
    s1, s2 = SymmetricSystem.canonical(F1), SymmetricSystem.canonical(F2)
    found += [("example", "example", item) for item in wisdom_counterexamples(s1, s2, compose_asymmetric(s1, s2))]
    # an empirical property: counterexamples are printed, not failed on
    print(f"wisdom preservation: {len(found)} counterexamples")
    for item in found:
        print(item)
