import random

import pytest
from hypothesis import given, strategies as st

from quorumkit import sim
from quorumkit.analysis import ProcessClass, classify, kernels, max_guild, minimal_closed_sets, tolerated_system
from quorumkit.core import (
    Ground,
    InputError,
    SymmetricSystem,
    threshold_fail_prone,
)
from quorumkit.sim import Entry, Scenario, guild_certified, merge_conflicts, merge_histories, run

from generators import composable, names

E = Entry


def _sym(names_, f):
    return SymmetricSystem.canonical(threshold_fail_prone(Ground(names_), f)).to_asymmetric()


A = _sym("abcd", 1)
B = _sym("wxyz", 1)


def test_merge_identity_and_tiebreak():
    x = (E("b", 1, b"p"), E("b", 2, b"q"))
    assert merge_histories((), x) == x
    assert merge_histories([("a", 1, "x")], [("d", 1, "y")]) == (E("a", 1, b"x"), E("d", 1, b"y"))


def test_merge_conflict_keeps_smaller_payload():
    h1, h2 = [("a", 1, "zz")], [("a", 1, "aa")]
    assert merge_histories(h1, h2) == (E("a", 1, b"aa"),)
    assert merge_conflicts(merge_histories(h1, []), merge_histories(h2, [])) == [("a", 1)]


def test_merge_rejects_malformed():
    with pytest.raises(InputError):
        merge_histories([("a", 2, "x"), ("a", 1, "y")], [])
    with pytest.raises(InputError):
        merge_histories([("a", "1", "x")], [])
    with pytest.raises(InputError):
        merge_histories([("a", 1)], [])


entries = st.lists(
    st.tuples(st.sampled_from("abc"), st.integers(0, 4), st.binary(max_size=2)), max_size=6
).map(lambda es: sorted({(o, s): (o, s, p) for o, s, p in es}.values()))


@given(entries, entries)
def test_merge_symmetric_and_sorted(h1, h2):
    m = merge_histories(h1, h2)
    assert m == merge_histories(h2, h1)
    assert [(e.seq, e.origin) for e in m] == sorted({(e[1], e[0]) for e in [*h1, *h2]})


def test_register_merge():
    @sim.register_merge("first-only")
    def first(h1, h2):
        return tuple(h1)

    sc = Scenario(A, B, "a", history_a=[("a", 1, "x")], history_b=[("w", 1, "y")], merge="first-only")
    t = run(sc)
    assert {o.history for o in t.outcome.values()} == {(E("a", 1, b"x"),)}
    with pytest.raises(InputError):
        Scenario(A, B, "a", merge="nope")


def test_guild_certified_examples():
    g = A.ground
    assert guild_certified({p: "h" for p in g.names}, A.quorums) == (frozenset(g.names), "h")
    split = {"a": "x", "b": "x", "c": "y", "d": "y"}
    assert guild_certified(split, A.quorums) is None
    for m in minimal_closed_sets(A.quorums):
        members = g.members(m)
        got = guild_certified({p: "h" for p in members}, A.quorums)
        assert got == (frozenset(members), "h")
    # outsiders are ignored
    assert guild_certified({"zz": "h"}, A.quorums) is None


def test_scenario_validation():
    with pytest.raises(InputError):
        Scenario(A, B, "w")
    with pytest.raises(InputError):
        Scenario(A, B, "a", faulty={"q"})
    with pytest.raises(InputError):
        Scenario(A, B, "a", behavior={"b": "silent"})
    with pytest.raises(InputError):
        Scenario(A, B, "a", history_a=[("a", 1, "x"), ("a", 1, "y")])
    with pytest.raises(InputError):
        Scenario(A, B, "a", seed=2**64)


def test_no_faults_everyone_composes_identically():
    sc = Scenario(A, B, "a", history_a=[("a", 1, "x")], history_b=[("w", 1, "y"), ("w", 2, "z")], seed=3)
    t = run(sc)
    assert all(o.verdict == "Composed" for o in t.outcome.values())
    hs = {o.history for o in t.outcome.values()}
    assert hs == {(E("a", 1, b"x"), E("w", 1, b"y"), E("w", 2, b"z"))}
    assert not t.flags


def test_determinism_and_seed_sensitivity():
    sc = Scenario(A, B, "a", faulty={"b"}, behavior={"b": "equivocate"}, seed=11)
    assert run(sc).digest() == run(sc).digest()
    orders = {tuple((e.step, e.process) for e in run(sc.with_seed(s)).events) for s in range(5)}
    assert len(orders) > 1


def test_silent_tolerated_sets_keep_guild_live():
    for t_set in tolerated_system(B.quorums, B.fail_prone):
        sc = Scenario(A, B, "a", faulty=t_set, seed=1)
        tr = run(sc)
        for p in sim.guild_members(sc):
            assert tr.outcome[p].verdict == "Composed"
        assert all(tr.outcome[p].verdict == "Undecided" for p in t_set)


def test_faulty_outside_tolerance_blocks_composition():
    sc = Scenario(A, B, "a", faulty={"w", "x"}, seed=1)
    tr = run(sc)
    assert not tr.composed()
    assert not sim.guild_members(sc) >= {"y", "z"}


def test_step_bound_reported(monkeypatch):
    monkeypatch.setattr(sim, "STEP_FACTOR", 0)
    tr = run(Scenario(A, B, "a"))
    assert tr.flags and tr.flags[0].startswith("step-bound-exceeded")
    assert all(o.verdict == "Undecided" for o in tr.outcome.values())


def _find_naive_victim():
    rng = random.Random(7)
    for _ in range(400):
        s = composable(rng, Ground(names(5)), max_size=rng.choice([1, 2]))
        for v in s.ground.names:
            for k in kernels(s.quorums[v]):
                if v in k:
                    continue
                labels = classify(s.fail_prone, k)
                guild = max_guild(s.quorums, s.fail_prone, k)
                if labels[v] is ProcessClass.NAIVE and guild:
                    return s, v, k
    return None


def test_naive_victim_undecided_while_guild_composes():
    found = _find_naive_victim()
    assert found is not None
    sb, victim, kernel = found
    sa = _sym(["p", "q", "r", "s"], 1)
    sc = Scenario(sa, sb, "p", faulty=kernel, seed=2)
    tr = run(sc)
    assert tr.outcome[victim].verdict == "Undecided"
    for p in max_guild(sb.quorums, sb.fail_prone, kernel):
        assert tr.outcome[p].verdict == "Composed"


def test_equivocation_never_splits_histories():
    for faulty in [{"b"}, {"w"}, {"a"}, {"x"}]:
        beh = {p: "equivocate" for p in faulty}
        for seed in range(30):
            sc = Scenario(A, B, "c" if "a" in faulty else "a", faulty=faulty, behavior=beh,
                          history_a=[("a", 1, "x")], history_b=[("w", 1, "y")], seed=seed)
            tr = run(sc)
            hs = {o.history for o in tr.outcome.values() if o.verdict == "Composed"}
            assert len(hs) <= 1
            assert all(not any(e.origin == sim.FORGED_ORIGIN for e in h) for h in hs)


def test_trace_records_shape():
    tr = run(Scenario(A, B, "a", seed=4))
    recs = list(tr.records())
    ev = [r for r in recs if "step" in r]
    assert [r["step"] for r in ev] == sorted(r["step"] for r in ev)
    assert all({"event", "process", "digest"} <= set(r) for r in ev)
    outs = [r for r in recs if r.get("record") == "outcome"]
    assert [r["process"] for r in outs] == sorted(A.ground.names + B.ground.names)
