"""Composition of symmetric and asymmetric Byzantine quorum systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .analysis import max_guild, tolerated_system, _wise_mask
from .conditions import (
    CheckReport,
    PreconditionError,
    canonical_quorums,
    check_b3,
    check_bqs,
    check_q3,
)
from .core import (
    AsymmetricFailProneSystem,
    AsymmetricQuorumSystem,
    AsymmetricSystem,
    FailProneSystem,
    Ground,
    QuorumSystem,
    SetFamily,
    SymmetricSystem,
    bits,
    maximalize_masks,
)
from .purify import purify

__all__ = [
    "CompositionResult",
    "otimes",
    "union_compose",
    "cartesian_compose",
    "compose_symmetric",
    "compose_asymmetric",
    "wisdom_counterexamples",
]


@dataclass(frozen=True)
class CompositionResult:
    fail_prone: Union[FailProneSystem, AsymmetricFailProneSystem]
    quorums: Union[QuorumSystem, AsymmetricQuorumSystem]
    report: CheckReport
    provenance: dict = field(default_factory=dict)

    @property
    def ground(self) -> Ground:
        return self.fail_prone.ground

    @property
    def system(self) -> Union[SymmetricSystem, AsymmetricSystem]:
        if isinstance(self.fail_prone, AsymmetricFailProneSystem):
            return AsymmetricSystem(self.fail_prone, self.quorums)
        return SymmetricSystem(self.fail_prone, self.quorums)


SystemLike = Union[FailProneSystem, SymmetricSystem]


def _split(s: SystemLike) -> tuple[FailProneSystem, Optional[QuorumSystem]]:
    if isinstance(s, SymmetricSystem):
        return s.fail_prone, s.quorums
    return s, None


def _prepare(s: SystemLike, label: str) -> tuple[FailProneSystem, QuorumSystem]:
    f, q = _split(s)
    rep = check_q3(f)
    if not rep.holds:
        raise PreconditionError(f"Q3({label})", rep, f"fail-prone system {label} violates Q3")
    if q is None:
        q = canonical_quorums(f)
    else:
        rep = check_bqs(q, f)
        if not rep.holds:
            raise PreconditionError(f"BQS({label})", rep, f"supplied quorums of {label} are not a BQS")
    return f, q


def _pairwise_unions(a: SetFamily, b: SetFamily, ground: Ground) -> list[int]:
    am = [a.ground.lift(m, ground) for m in a.masks]
    bm = [b.ground.lift(m, ground) for m in b.masks]
    return [x | y for x in am for y in bm]


def _composite_quorums(q1: QuorumSystem, q2: QuorumSystem, ground: Ground) -> QuorumSystem:
    return QuorumSystem(ground, _pairwise_unions(q1, q2, ground))


def _provenance(rule: str, f1: SetFamily, f2: SetFamily, **extra) -> dict:
    out = {
        "rule": rule,
        "inputs": [list(f1.ground.names), list(f2.ground.names)],
        "common": sorted(set(f1.ground.names) & set(f2.ground.names)),
    }
    out.update(extra)
    return out


def _overlap_error(f1: SetFamily, f2: SetFamily, rule: str) -> PreconditionError:
    common = sorted(set(f1.ground.names) & set(f2.ground.names))
    return PreconditionError(
        "disjoint-grounds",
        CheckReport(False, {"common": tuple(common)}, "disjoint"),
        f"{rule} composition needs disjoint process sets; common processes {common}",
    )


def otimes(a: SetFamily, b: SetFamily) -> SetFamily:
    """Pair closure members of ``a`` and ``b`` that agree on the common processes.

    For maximal A and B, the largest admissible union keeps everything of A
    and B outside the common processes plus their shared common part, so the
    result is the maximal family of those unions.
    """
    ground = a.ground.union(b.ground)
    common = ground.mask(set(a.ground.names) & set(b.ground.names))
    am = [a.ground.lift(m, ground) for m in a.masks]
    bm = [b.ground.lift(m, ground) for m in b.masks]
    cands = ((x | y) & ~(common & ~(x & y)) for x in am for y in bm)
    return SetFamily(ground, maximalize_masks(cands))


def union_compose(s1: SystemLike, s2: SystemLike) -> CompositionResult:
    """Fail-prone sets of either system; quorums are pairwise unions."""
    f1, f2 = _split(s1)[0], _split(s2)[0]
    if set(f1.ground.names) & set(f2.ground.names):
        raise _overlap_error(f1, f2, "union")
    f1, q1 = _prepare(s1, "F1")
    f2, q2 = _prepare(s2, "F2")
    ground = f1.ground.union(f2.ground)
    masks = [f1.ground.lift(m, ground) for m in f1.masks] + [f2.ground.lift(m, ground) for m in f2.masks]
    f3 = FailProneSystem(ground, maximalize_masks(masks))
    q3 = _composite_quorums(q1, q2, ground)
    return CompositionResult(f3, q3, check_bqs(q3, f3), _provenance("union", f1, f2))


def cartesian_compose(s1: SystemLike, s2: SystemLike, allow_overlap: bool = False) -> CompositionResult:
    """Every union of one fail-prone set from each side.

    With ``allow_overlap`` the construction is applied to overlapping grounds
    as well; the report is then the Q3 verdict of the (maximalized) result and
    may well be negative.
    """
    f1, f2 = _split(s1)[0], _split(s2)[0]
    overlap = bool(set(f1.ground.names) & set(f2.ground.names))
    if overlap and not allow_overlap:
        raise _overlap_error(f1, f2, "cartesian")
    f1, q1 = _prepare(s1, "F1")
    f2, q2 = _prepare(s2, "F2")
    ground = f1.ground.union(f2.ground)
    f3 = FailProneSystem(ground, maximalize_masks(_pairwise_unions(f1, f2, ground)))
    q3 = _composite_quorums(q1, q2, ground)
    prov = _provenance("cartesian", f1, f2)
    if overlap:
        prov["unsafe"] = "cartesian composition over overlapping process sets"
    return CompositionResult(f3, q3, check_q3(f3), prov)


def compose_symmetric(s1: SystemLike, s2: SystemLike) -> CompositionResult:
    """General composition over possibly overlapping grounds via ``otimes``."""
    f1, q1 = _prepare(s1, "F1")
    f2, q2 = _prepare(s2, "F2")
    m = otimes(f1, f2)
    f3 = FailProneSystem(m.ground, m.masks)
    q3 = _composite_quorums(q1, q2, m.ground)
    return CompositionResult(f3, q3, check_bqs(q3, f3), _provenance("general", f1, f2))


def _as_asymmetric(s) -> AsymmetricSystem:
    if isinstance(s, AsymmetricSystem):
        return s
    if isinstance(s, SymmetricSystem):
        return s.to_asymmetric()
    if isinstance(s, tuple):
        return AsymmetricSystem(*s)
    raise TypeError(f"cannot treat {type(s).__name__} as an asymmetric system")


def _prepare_asymmetric(s: AsymmetricSystem, label: str, auto_purify: bool):
    rep = check_b3(s.fail_prone)
    if not rep.holds:
        raise PreconditionError(f"B3({label})", rep, f"system {label} violates B3")
    t = tolerated_system(s.quorums, s.fail_prone)
    if not t.masks:
        raise PreconditionError(
            f"guild({label})", None, f"system {label} admits no guild (empty tolerated system)"
        )
    rep = check_q3(t)
    if not rep.holds:
        raise PreconditionError(f"Q3(T{label[-1]})", rep, f"tolerated system of {label} violates Q3")
    af = s.fail_prone
    rep = check_b3(af, extra=t)
    if not rep.holds:
        if not auto_purify:
            raise PreconditionError(
                f"purified({label})", rep, f"system {label} is not purified against its tolerated system"
            )
        af = purify(af, t, check=False)
    return af, t


def compose_asymmetric(s1, s2, auto_purify: bool = False) -> CompositionResult:
    """Compose two asymmetric systems; each side adopts the other's tolerated system.

    Processes of only one side combine their own fail-prone system with the
    other side's tolerated system; common processes combine their two own
    fail-prone systems.  The composite quorums are the canonical ones.
    Arguments are ``AsymmetricSystem`` values, ``(af, aq)`` pairs, or
    symmetric systems (replicated to every process).
    """
    a1, a2 = _as_asymmetric(s1), _as_asymmetric(s2)
    af1, t1 = _prepare_asymmetric(a1, "S1", auto_purify)
    af2, t2 = _prepare_asymmetric(a2, "S2", auto_purify)
    g1, g2 = af1.ground, af2.ground
    ground = g1.union(g2)
    per: dict[str, FailProneSystem] = {}
    for name in ground.names:
        if name in g1 and name in g2:
            fam = otimes(af1[name], af2[name])
        elif name in g1:
            fam = otimes(af1[name], t2)
        else:
            fam = otimes(af2[name], t1)
        per[name] = FailProneSystem(ground, fam.masks)
    af3 = AsymmetricFailProneSystem(ground, per)
    aq3 = AsymmetricQuorumSystem.canonical(af3)
    prov = {
        "rule": "asym",
        "inputs": [list(g1.names), list(g2.names)],
        "common": sorted(set(g1.names) & set(g2.names)),
        "purified": [af1 != a1.fail_prone, af2 != a2.fail_prone],
        "tolerated": [t1.as_lists(), t2.as_lists()],
    }
    return CompositionResult(af3, aq3, check_b3(af3), prov)


def wisdom_counterexamples(s1, s2, result: CompositionResult, limit: Optional[int] = None) -> list[dict]:
    """Executions where guilds of the inputs do not form a guild of the composite.

    For every faulty set of the composite ground, the maximal guilds of the two
    inputs (for the faulty set restricted to each side) are united and tested
    as a guild of the composite.  Each failure is reported as a dict.
    """
    a1, a2 = _as_asymmetric(s1), _as_asymmetric(s2)
    g3 = result.ground
    af3, aq3 = result.fail_prone, result.quorums
    if not isinstance(af3, AsymmetricFailProneSystem):
        af3 = AsymmetricFailProneSystem.replicate(af3)
        aq3 = AsymmetricQuorumSystem.replicate(aq3)
    out = []
    for faulty in range(g3.full + 1):
        f1 = g3.lift(faulty, a1.ground)
        f2 = g3.lift(faulty, a2.ground)
        gu1 = max_guild(a1.quorums, a1.fail_prone, f1)
        gu2 = max_guild(a2.quorums, a2.fail_prone, f2)
        if not gu1 or not gu2:
            continue
        union = g3.mask(gu1 | gu2)
        wise = _wise_mask(af3, faulty)
        bad_wise = union & ~wise
        no_quorum = 0
        for i in bits(union):
            if not any(q & ~union == 0 for q in aq3.systems[i].masks):
                no_quorum |= 1 << i
        if bad_wise or no_quorum:
            out.append(
                {
                    "faulty": list(g3.members(faulty)),
                    "guild_1": list(gu1),
                    "guild_2": list(gu2),
                    "not_wise": list(g3.members(bad_wise)),
                    "without_quorum": list(g3.members(no_quorum)),
                }
            )
            if limit is not None and len(out) >= limit:
                break
    return out
