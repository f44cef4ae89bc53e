"""Purification: shrink fail-prone sets that break B3 against the tolerated system."""

from __future__ import annotations

from .core import (
    AsymmetricFailProneSystem,
    FailProneSystem,
    SetFamily,
    bits,
    maximalize_masks,
)
from .conditions import PreconditionError, check_b3, check_q3

__all__ = ["violates_tolerated", "purify"]


def violates_tolerated(s: int, own: SetFamily, tolerated: SetFamily) -> bool:
    """Does ``s`` cover the ground together with some tolerated set and a common subset?"""
    full = own.ground.full
    for t in tolerated.masks:
        rest = full & ~(s | t)
        if any(rest & ~x == 0 for x in own.masks) and any(rest & ~y == 0 for y in tolerated.masks):
            return True
    return False


def _maximal_safe_subsets(top: int, own: SetFamily, tolerated: SetFamily) -> list[int]:
    # Violation is monotone in the set, so the safe subsets form a down-set;
    # descend level by level from ``top`` and keep the first safe sets met.
    accepted: list[int] = []
    level = {top}
    while level:
        nxt = set()
        for s in level:
            if any(s & ~a == 0 for a in accepted):
                continue
            if violates_tolerated(s, own, tolerated):
                for i in bits(s):
                    nxt.add(s & ~(1 << i))
            else:
                accepted.append(s)
        level = nxt
    return accepted


def purify(af: AsymmetricFailProneSystem, tolerated: SetFamily, check: bool = True) -> AsymmetricFailProneSystem:
    """Align every process's fail-prone system with ``tolerated``.

    Each fail-prone set that covers the ground together with a tolerated set
    and a common subset is replaced by its maximal subsets that do not.  All
    violation tests use the input systems, so a single pass suffices and the
    result does not depend on process order.

    Raises :class:`PreconditionError` when ``af`` fails B3 or ``tolerated``
    fails Q3 (skipped with ``check=False``).
    """
    if tolerated.ground != af.ground:
        raise PreconditionError("same-ground", None, "tolerated system ranges over a different ground")
    if check:
        rep = check_b3(af)
        if not rep.holds:
            raise PreconditionError("B3", rep, "the asymmetric fail-prone system violates B3")
        rep = check_q3(tolerated)
        if not rep.holds:
            raise PreconditionError("Q3(T)", rep, "the tolerated system violates Q3")
    out = {}
    for name, fam in af.items():
        masks: list[int] = []
        changed = False
        for m in fam.masks:
            if violates_tolerated(m, fam, tolerated):
                changed = True
                masks.extend(_maximal_safe_subsets(m, fam, tolerated))
            else:
                masks.append(m)
        out[name] = FailProneSystem(af.ground, maximalize_masks(masks)) if changed else fam
    return AsymmetricFailProneSystem(af.ground, out)
