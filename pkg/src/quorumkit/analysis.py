"""Execution analysis: process classes, guilds, tolerated systems and kernels."""

from __future__ import annotations

import enum
import itertools
from typing import Iterable

from .core import (
    AsymmetricFailProneSystem,
    AsymmetricQuorumSystem,
    Ground,
    InputError,
    ProcessSet,
    SetFamily,
    bits,
    maximalize_masks,
)

__all__ = [
    "ProcessClass",
    "classify",
    "is_guild",
    "max_guild",
    "closed_core",
    "is_closed",
    "minimal_closed_sets",
    "tolerated_system",
    "kernels",
]


class ProcessClass(str, enum.Enum):
    FAULTY = "faulty"
    NAIVE = "naive"
    WISE = "wise"


def _check_grounds(aq: AsymmetricQuorumSystem, af: AsymmetricFailProneSystem) -> Ground:
    if aq.ground != af.ground:
        raise InputError("quorum and fail-prone systems range over different grounds")
    return af.ground


def _wise_mask(af: AsymmetricFailProneSystem, faulty: int) -> int:
    wise = 0
    for i, f in enumerate(af.systems):
        if not faulty >> i & 1 and any(faulty & ~m == 0 for m in f.masks):
            wise |= 1 << i
    return wise


def classify(af: AsymmetricFailProneSystem, f_actual) -> dict[str, ProcessClass]:
    """Label each process faulty, naive or wise for the actual faulty set."""
    faulty = af.ground.mask(f_actual)
    wise = _wise_mask(af, faulty)
    out = {}
    for i, name in enumerate(af.ground.names):
        if faulty >> i & 1:
            out[name] = ProcessClass.FAULTY
        elif wise >> i & 1:
            out[name] = ProcessClass.WISE
        else:
            out[name] = ProcessClass.NAIVE
    return out


def is_closed(aq: AsymmetricQuorumSystem, g: int) -> bool:
    """Every member of ``g`` has one of its quorums inside ``g``."""
    return all(any(q & ~g == 0 for q in aq.systems[i].masks) for i in bits(g))


def closed_core(aq: AsymmetricQuorumSystem, start: int) -> int:
    """Largest subset of ``start`` closed under ``aq`` (possibly empty)."""
    g = start
    changed = True
    while changed:
        changed = False
        for i in bits(g):
            if not any(q & ~g == 0 for q in aq.systems[i].masks):
                g &= ~(1 << i)
                changed = True
    return g


def is_guild(aq, af, f_actual, g) -> bool:
    """Nonempty, wise, and containing a quorum for each member."""
    ground = _check_grounds(aq, af)
    faulty = ground.mask(f_actual)
    gm = ground.mask(g)
    if gm == 0 or gm & faulty:
        return False
    if gm & ~_wise_mask(af, faulty):
        return False
    return is_closed(aq, gm)


def max_guild(aq, af, f_actual) -> ProcessSet:
    """The unique maximal guild for ``f_actual``, or the empty set if none exists."""
    ground = _check_grounds(aq, af)
    faulty = ground.mask(f_actual)
    return ground.process_set(closed_core(aq, _wise_mask(af, faulty)))


def minimal_closed_sets(aq: AsymmetricQuorumSystem) -> list[int]:
    """All inclusion-minimal nonempty closed sets, as bitmasks.

    Subsets are visited in increasing cardinality; supersets of an already
    found closed set are skipped.
    """
    n = len(aq.ground)
    found: list[int] = []
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            g = 0
            for i in combo:
                g |= 1 << i
            if any(m & ~g == 0 for m in found):
                continue
            if is_closed(aq, g):
                found.append(g)
    return found


def tolerated_system(aq: AsymmetricQuorumSystem, af: AsymmetricFailProneSystem = None) -> SetFamily:
    """Maximal tolerated sets: complements of the minimal nonempty closed sets.

    ``af`` is accepted for interface symmetry; with no actual failures every
    process is wise, so every nonempty closed set is a guild of some execution
    and the result depends on the quorum systems alone.
    """
    if af is not None:
        _check_grounds(aq, af)
    full = aq.ground.full
    return SetFamily(aq.ground, maximalize_masks(full & ~g for g in minimal_closed_sets(aq)))


def kernels(q: SetFamily) -> SetFamily:
    """Minimal sets that intersect every quorum of ``q`` (minimal transversals)."""
    if not q.masks:
        raise InputError("kernels of an empty quorum family are undefined")
    if any(m == 0 for m in q.masks):
        raise InputError("an empty quorum has no transversal")
    current = [0]
    for edge in sorted(q.masks, key=int.bit_count):
        nxt = set()
        for k in current:
            if k & edge:
                nxt.add(k)
            else:
                for i in bits(edge):
                    nxt.add(k | 1 << i)
        current = _minimal(nxt)
    return SetFamily(q.ground, current)


def _minimal(masks: Iterable[int]) -> list[int]:
    ordered = sorted(set(masks), key=int.bit_count)
    kept: list[int] = []
    for m in ordered:
        if all(k & ~m for k in kept):
            kept.append(m)
    return kept
