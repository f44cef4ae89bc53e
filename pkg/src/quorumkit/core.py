"""Process sets, antichain families, and the symmetric/asymmetric system types.

Sets of processes are stored as integer bitmasks over a :class:`Ground`, which
assigns each process name an index by lexicographic rank.  All subset, union
and intersection tests are therefore plain integer operations.  Subset
closures of families are never materialized; every closure question is
answered with subset tests against the maximal members.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

__all__ = [
    "InputError",
    "Ground",
    "ProcessSet",
    "SetFamily",
    "FailProneSystem",
    "QuorumSystem",
    "AsymmetricFailProneSystem",
    "AsymmetricQuorumSystem",
    "SymmetricSystem",
    "AsymmetricSystem",
    "maximalize",
    "in_closure",
    "closure_intersection_candidates",
    "complement_family",
    "threshold_fail_prone",
    "bits",
    "popcount",
]

_TOKEN = re.compile(r"^[^\s,{}\[\]]+$")


class InputError(ValueError):
    """Malformed input: unknown process, ground mismatch, broken invariant."""


def popcount(mask: int) -> int:
    return mask.bit_count()


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of set bits in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _sort_key(mask: int) -> tuple[int, tuple[int, ...]]:
    # index order is name order, so the index tuple is the lexicographic member list
    return (mask.bit_count(), tuple(bits(mask)))


class ProcessSet(frozenset):
    """A frozenset of process names that iterates in name order."""

    def __iter__(self):
        return iter(sorted(frozenset.__iter__(self)))

    def __repr__(self) -> str:
        return "{" + ", ".join(self) + "}"


class Ground:
    """The finite, ordered process set every family ranges over."""

    __slots__ = ("names", "_index", "full")

    def __init__(self, names: Iterable[str]):
        names = list(names)
        for name in names:
            if not isinstance(name, str) or not _TOKEN.match(name):
                raise InputError(f"invalid process name {name!r}")
        if len(set(names)) != len(names):
            raise InputError("duplicate process names in ground set")
        self.names: tuple[str, ...] = tuple(sorted(names))
        self._index = {n: i for i, n in enumerate(self.names)}
        self.full = (1 << len(self.names)) - 1

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Ground) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Ground({list(self.names)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InputError(f"process {name!r} is not in the ground set") from None

    def mask(self, members: Union[int, Iterable[str]]) -> int:
        """Bitmask for ``members``; an int is range-checked and passed through."""
        if isinstance(members, int):
            if members & ~self.full or members < 0:
                raise InputError("bitmask has bits outside the ground set")
            return members
        if isinstance(members, str):
            members = [members]
        m = 0
        for name in members:
            m |= 1 << self.index(name)
        return m

    def members(self, mask: int) -> tuple[str, ...]:
        return tuple(self.names[i] for i in bits(mask))

    def process_set(self, mask: int) -> ProcessSet:
        return ProcessSet(self.members(mask))

    def union(self, other: "Ground") -> "Ground":
        return Ground(set(self.names) | set(other.names))

    def intersection(self, other: "Ground") -> "Ground":
        return Ground(set(self.names) & set(other.names))

    def lift(self, mask: int, target: "Ground") -> int:
        """Re-express ``mask`` (over self) as a mask over ``target``.

        Members missing from ``target`` are dropped, so this doubles as the
        restriction of a set to another ground.
        """
        if target is self or target == self:
            return mask
        out = 0
        for i in bits(mask):
            j = target._index.get(self.names[i])
            if j is not None:
                out |= 1 << j
        return out


class SetFamily:
    """A finite collection of process sets over a ground, deduplicated.

    Members are kept in canonical order: by cardinality, then by the
    lexicographic member list.  Iteration yields :class:`ProcessSet` values;
    the raw bitmasks are available as :attr:`masks`.
    """

    __slots__ = ("ground", "masks")

    def __init__(self, ground: Ground, masks: Iterable[int]):
        masks = set(masks)
        for m in masks:
            if m < 0 or m & ~ground.full:
                raise InputError("family member is not a subset of the ground set")
        self.ground = ground
        self.masks: tuple[int, ...] = tuple(sorted(masks, key=_sort_key))
        self._validate()

    def _validate(self) -> None:
        pass

    @classmethod
    def of(cls, ground: Union[Ground, Iterable[str]], sets: Iterable[Iterable[str]]):
        if not isinstance(ground, Ground):
            ground = Ground(ground)
        return cls(ground, (ground.mask(s) for s in sets))

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self) -> Iterator[ProcessSet]:
        return (self.ground.process_set(m) for m in self.masks)

    def __contains__(self, item) -> bool:
        return self.ground.mask(item) in set(self.masks)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SetFamily)
            and self.ground == other.ground
            and self.masks == other.masks
        )

    def __hash__(self) -> int:
        return hash((self.ground, self.masks))

    def __repr__(self) -> str:
        sets = ", ".join(repr(s) for s in self)
        return f"{type(self).__name__}({{{sets}}})"

    def as_lists(self) -> list[list[str]]:
        return [list(self.ground.members(m)) for m in self.masks]

    def is_antichain(self) -> bool:
        # masks are distinct and size-sorted; equal sizes cannot nest
        ms = self.masks
        sizes = [m.bit_count() for m in ms]
        start = 0
        for i, a in enumerate(ms):
            while start < len(ms) and sizes[start] <= sizes[i]:
                start += 1
            for b in ms[start:]:
                if a & ~b == 0:
                    return False
        return True

    def lift(self, target: Ground) -> "SetFamily":
        """The same sets re-indexed over a larger ground (plain SetFamily)."""
        return SetFamily(target, (self.ground.lift(m, target) for m in self.masks))


class FailProneSystem(SetFamily):
    """A nonempty antichain of sets that may fail together."""

    __slots__ = ()

    def _validate(self) -> None:
        if not self.masks:
            raise InputError("a fail-prone system needs at least one set (use [[]])")
        if not self.is_antichain():
            raise InputError("fail-prone system is not an antichain")


class QuorumSystem(SetFamily):
    """A family of nonempty quorums; not required to be an antichain."""

    __slots__ = ()

    def _validate(self) -> None:
        if any(m == 0 for m in self.masks):
            raise InputError("quorums must be nonempty")


def _check_per_process(ground: Ground, systems: Mapping[str, SetFamily], what: str):
    if set(systems) != set(ground.names):
        missing = sorted(set(ground.names) - set(systems))
        extra = sorted(set(systems) - set(ground.names))
        raise InputError(f"{what} keys must equal the ground set (missing {missing}, extra {extra})")
    for name, fam in systems.items():
        if fam.ground != ground:
            raise InputError(f"{what} of {name!r} ranges over a different ground")


class _PerProcess:
    """Shared behaviour of the asymmetric system types."""

    __slots__ = ("ground", "systems")

    def __init__(self, ground: Ground, per_process: Mapping[str, SetFamily]):
        _check_per_process(ground, per_process, self._what)
        self.ground = ground
        self.systems = tuple(per_process[name] for name in ground.names)

    def __getitem__(self, name: str):
        return self.systems[self.ground.index(name)]

    def items(self):
        return zip(self.ground.names, self.systems)

    def __len__(self) -> int:
        return len(self.systems)

    def __eq__(self, other: object) -> bool:
        return type(other) is type(self) and self.ground == other.ground and self.systems == other.systems

    def __hash__(self) -> int:
        return hash((self.ground, self.systems))

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}: {s!r}" for n, s in self.items())
        return f"{type(self).__name__}({inner})"


class AsymmetricFailProneSystem(_PerProcess):
    """One fail-prone system per process."""

    __slots__ = ()
    _what = "fail-prone systems"

    def __init__(self, ground: Ground, per_process: Mapping[str, FailProneSystem]):
        super().__init__(ground, per_process)
        for name, fam in self.items():
            if not isinstance(fam, FailProneSystem):
                raise InputError(f"entry for {name!r} is not a FailProneSystem")

    @classmethod
    def replicate(cls, f: FailProneSystem) -> "AsymmetricFailProneSystem":
        """Every process holds the same fail-prone system."""
        return cls(f.ground, {n: f for n in f.ground.names})

    @classmethod
    def of(cls, ground, per_process: Mapping[str, Iterable[Iterable[str]]]):
        if not isinstance(ground, Ground):
            ground = Ground(ground)
        return cls(ground, {n: FailProneSystem.of(ground, s) for n, s in per_process.items()})


class AsymmetricQuorumSystem(_PerProcess):
    """One quorum system per process."""

    __slots__ = ()
    _what = "quorum systems"

    def __init__(self, ground: Ground, per_process: Mapping[str, QuorumSystem]):
        super().__init__(ground, per_process)
        for name, fam in self.items():
            if not isinstance(fam, QuorumSystem):
                raise InputError(f"entry for {name!r} is not a QuorumSystem")

    @classmethod
    def replicate(cls, q: QuorumSystem) -> "AsymmetricQuorumSystem":
        return cls(q.ground, {n: q for n in q.ground.names})

    @classmethod
    def of(cls, ground, per_process: Mapping[str, Iterable[Iterable[str]]]):
        if not isinstance(ground, Ground):
            ground = Ground(ground)
        return cls(ground, {n: QuorumSystem.of(ground, s) for n, s in per_process.items()})

    @classmethod
    def canonical(cls, af: AsymmetricFailProneSystem) -> "AsymmetricQuorumSystem":
        """Per-process complements of the fail-prone systems."""
        return cls(af.ground, {n: _as_quorums(complement_family(f)) for n, f in af.items()})


@dataclass(frozen=True)
class SymmetricSystem:
    fail_prone: FailProneSystem
    quorums: QuorumSystem

    def __post_init__(self):
        if self.fail_prone.ground != self.quorums.ground:
            raise InputError("fail-prone and quorum systems range over different grounds")

    @property
    def ground(self) -> Ground:
        return self.fail_prone.ground

    @classmethod
    def canonical(cls, f: FailProneSystem) -> "SymmetricSystem":
        return cls(f, _as_quorums(complement_family(f)))

    def to_asymmetric(self) -> "AsymmetricSystem":
        return AsymmetricSystem(
            AsymmetricFailProneSystem.replicate(self.fail_prone),
            AsymmetricQuorumSystem.replicate(self.quorums),
        )


@dataclass(frozen=True)
class AsymmetricSystem:
    fail_prone: AsymmetricFailProneSystem
    quorums: AsymmetricQuorumSystem

    def __post_init__(self):
        if self.fail_prone.ground != self.quorums.ground:
            raise InputError("fail-prone and quorum systems range over different grounds")

    @property
    def ground(self) -> Ground:
        return self.fail_prone.ground

    @classmethod
    def canonical(cls, af: AsymmetricFailProneSystem) -> "AsymmetricSystem":
        return cls(af, AsymmetricQuorumSystem.canonical(af))


def _as_quorums(family: SetFamily) -> QuorumSystem:
    return QuorumSystem(family.ground, family.masks)


def maximalize_masks(masks: Iterable[int]) -> list[int]:
    """The inclusion-maximal members of ``masks``, deduplicated."""
    ordered = sorted(set(masks), key=int.bit_count, reverse=True)
    kept: list[int] = []
    larger: list[int] = []  # kept sets strictly larger than the current size
    size = None
    pending: list[int] = []
    for m in ordered:
        c = m.bit_count()
        if c != size:
            larger.extend(pending)
            pending = []
            size = c
        if all(m & ~k for k in larger):
            pending.append(m)
            kept.append(m)
    return kept


def maximalize(family: SetFamily) -> SetFamily:
    """Keep only the inclusion-maximal sets of ``family``."""
    return SetFamily(family.ground, maximalize_masks(family.masks))


def in_closure(s: Union[int, Iterable[str]], family: SetFamily) -> bool:
    """True iff ``s`` is a subset of some member of ``family``."""
    m = family.ground.mask(s)
    return any(m & ~a == 0 for a in family.masks)


def _same_ground(a: SetFamily, b: SetFamily) -> None:
    if a.ground != b.ground:
        raise InputError("families range over different grounds")


def closure_intersection_candidates(a: SetFamily, b: SetFamily) -> SetFamily:
    """Maximal elements of the intersection of the two subset closures."""
    _same_ground(a, b)
    return SetFamily(a.ground, maximalize_masks(x & y for x in a.masks for y in b.masks))


def complement_family(family: SetFamily) -> SetFamily:
    """The family of complements with respect to the ground set."""
    full = family.ground.full
    return SetFamily(family.ground, (full & ~m for m in family.masks))


def threshold_fail_prone(ground: Union[Ground, Sequence[str]], f: int) -> FailProneSystem:
    """All ``f``-subsets of the ground: the classic threshold assumption."""
    if not isinstance(ground, Ground):
        ground = Ground(ground)
    if not 0 <= f <= len(ground):
        raise InputError("threshold must lie between 0 and the number of processes")
    masks = (sum(1 << i for i in combo) for combo in itertools.combinations(range(len(ground)), f))
    return FailProneSystem(ground, masks)
