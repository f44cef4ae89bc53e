"""Decision procedures for Q3, B3, BQS and ABQS, each with a replayable witness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    AsymmetricFailProneSystem,
    AsymmetricQuorumSystem,
    FailProneSystem,
    InputError,
    QuorumSystem,
    SetFamily,
    complement_family,
)

__all__ = [
    "CheckReport",
    "TOLERATED",
    "check_q3",
    "check_b3",
    "canonical_quorums",
    "check_bqs",
    "check_abqs",
    "PreconditionError",
]

# Label used in B3 witnesses for the extra (tolerated) family.
TOLERATED = "T"


@dataclass(frozen=True)
class CheckReport:
    """Verdict of a condition check.

    ``witness`` maps role labels to either a process name or a sorted tuple of
    names, e.g. ``{"F1": ("a",), "F2": ("b",), "F3": ("c",)}``.
    """

    holds: bool
    witness: Optional[dict] = None
    condition: str = ""

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failed check must carry a witness")

    def __bool__(self) -> bool:
        return self.holds

    def witness_json(self) -> Optional[dict]:
        if self.witness is None:
            return None
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.witness.items()}


def _holds(condition: str) -> CheckReport:
    return CheckReport(True, None, condition)


def _covered_by(rest: int, masks) -> Optional[int]:
    for c in masks:
        if rest & ~c == 0:
            return c
    return None


def check_q3(f: SetFamily) -> CheckReport:
    """No three members of ``f`` (repetition allowed) cover the ground set."""
    g = f.ground
    full = g.full
    n = len(g)
    ms = sorted(f.masks, key=int.bit_count, reverse=True)
    if not ms:
        return _holds("Q3")
    sizes = [m.bit_count() for m in ms]
    top = sizes[0]
    for i, a in enumerate(ms):
        # descending sizes: a triple starting at i has total size <= 3*sizes[i]
        if 3 * sizes[i] < n:
            break
        for j in range(i, len(ms)):
            if sizes[i] + 2 * sizes[j] < n:
                break
            rest = full & ~(a | ms[j])
            if rest.bit_count() > top:
                continue
            c = _covered_by(rest, ms)
            if c is not None:
                return CheckReport(
                    False,
                    {"F1": g.members(a), "F2": g.members(ms[j]), "F3": g.members(c)},
                    "Q3",
                )
    return _holds("Q3")


def _b3_parties(af: AsymmetricFailProneSystem, extra: Optional[SetFamily]):
    parties = list(af.items())
    if extra is not None:
        if extra.ground != af.ground:
            raise InputError("extra family ranges over a different ground")
        parties.append((TOLERATED, extra))
    return parties


def _common_maximal(r: int, a: SetFamily, b: SetFamily) -> int:
    """A maximal set of a* and b* that contains ``r`` (caller guarantees one exists)."""
    best = None
    for x in a.masks:
        if r & ~x:
            continue
        for y in b.masks:
            z = x & y
            if r & ~z == 0 and (best is None or z.bit_count() > best.bit_count()):
                best = z
    return best


def check_b3(af: AsymmetricFailProneSystem, extra: Optional[SetFamily] = None) -> CheckReport:
    """B3 for ``af``, optionally with ``extra`` treated as one more party.

    For a pair of parties, F_i ∪ F_j ∪ F_ij covers the ground for some common
    subset F_ij exactly when the uncovered remainder of F_i ∪ F_j lies in both
    closures, so the quantifier over F_ij reduces to two subset tests.
    """
    g = af.ground
    full = g.full
    parties = _b3_parties(af, extra)
    for pi, (name_i, fi) in enumerate(parties):
        for name_j, fj in parties[pi:]:
            for a in fi.masks:
                for b in fj.masks:
                    rest = full & ~(a | b)
                    if any(rest & ~x == 0 for x in fi.masks) and any(rest & ~y == 0 for y in fj.masks):
                        fij = _common_maximal(rest, fi, fj)
                        return CheckReport(
                            False,
                            {
                                "i": name_i,
                                "j": name_j,
                                "F_i": g.members(a),
                                "F_j": g.members(b),
                                "F_ij": g.members(fij),
                            },
                            "B3",
                        )
    return _holds("B3")


def canonical_quorums(f: FailProneSystem) -> QuorumSystem:
    """Complements of the fail-prone sets; a BQS for ``f`` whenever Q3 holds."""
    comp = complement_family(f)
    if any(m == 0 for m in comp.masks):
        raise InputError("the ground set itself is fail-prone; no canonical quorum exists")
    return QuorumSystem(comp.ground, comp.masks)


def check_bqs(q: SetFamily, f: SetFamily) -> CheckReport:
    """Consistency and availability of ``q`` as a Byzantine quorum system for ``f``."""
    if q.ground != f.ground:
        raise InputError("quorum and fail-prone systems range over different grounds")
    g = q.ground
    qs, fs = q.masks, f.masks
    n = len(g)
    top = max(m.bit_count() for m in fs) if fs else -1
    # |Q1 & Q2| >= |Q1| + |Q2| - n; pairs whose bound exceeds every F are safe
    qsorted = sorted(qs, key=int.bit_count)
    sizes = [m.bit_count() for m in qsorted]
    seen: set[int] = set()
    for i, q1 in enumerate(qsorted):
        if 2 * sizes[i] - n > top:
            break
        for j in range(i, len(qsorted)):
            if sizes[i] + sizes[j] - n > top:
                break
            inter = q1 & qsorted[j]
            if inter.bit_count() > top or inter in seen:
                continue
            seen.add(inter)
            fm = _covered_by(inter, fs)
            if fm is not None:
                return CheckReport(
                    False,
                    {
                        "clause": "consistency",
                        "Q1": g.members(q1),
                        "Q2": g.members(qsorted[j]),
                        "F": g.members(fm),
                    },
                    "BQS",
                )
    for fm in fs:
        if not any(fm & qm == 0 for qm in qs):
            return CheckReport(False, {"clause": "availability", "F": g.members(fm)}, "BQS")
    return _holds("BQS")


def check_abqs(aq: AsymmetricQuorumSystem, af: AsymmetricFailProneSystem) -> CheckReport:
    """Consistency over common fail-prone subsets and per-process availability."""
    if aq.ground != af.ground:
        raise InputError("quorum and fail-prone systems range over different grounds")
    g = af.ground
    names = g.names
    for i, ni in enumerate(names):
        qi, fi = aq.systems[i], af.systems[i]
        for j in range(i, len(names)):
            qj, fj = aq.systems[j], af.systems[j]
            for a in qi.masks:
                for b in qj.masks:
                    inter = a & b
                    if any(inter & ~x == 0 for x in fi.masks) and any(inter & ~y == 0 for y in fj.masks):
                        return CheckReport(
                            False,
                            {
                                "clause": "consistency",
                                "i": ni,
                                "j": names[j],
                                "Q_i": g.members(a),
                                "Q_j": g.members(b),
                                "F_ij": g.members(_common_maximal(inter, fi, fj)),
                            },
                            "ABQS",
                        )
    for ni, qi, fi in zip(names, aq.systems, af.systems):
        for fm in fi.masks:
            if not any(fm & qm == 0 for qm in qi.masks):
                return CheckReport(
                    False, {"clause": "availability", "i": ni, "F_i": g.members(fm)}, "ABQS"
                )
    return _holds("ABQS")


class PreconditionError(Exception):
    """A precondition of a construction does not hold.

    ``precondition`` names it; ``report`` carries the failing check's witness.
    """

    def __init__(self, precondition: str, report: Optional[CheckReport] = None, message: str = ""):
        self.precondition = precondition
        self.report = report
        super().__init__(message or f"precondition {precondition} does not hold")

    def to_json(self) -> dict:
        out = {"type": "precondition", "precondition": self.precondition, "message": str(self)}
        if self.report is not None and self.report.witness is not None:
            out["witness"] = self.report.witness_json()
        return out
