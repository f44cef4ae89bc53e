"""Deterministic simulation of the composition handshake between two clusters.

The initiator (a process of system A) asks every process of system B to
compose.  B runs a quorum-certified vote and its deciders answer with their
history; A-processes that see the same answer from a closed set of B run
their own vote and broadcast an acknowledgment carrying A's history.  A
process that has decided its own vote(s) and sees a certified
acknowledgment merges the two histories and ends ``Composed``.

A vote round is one-shot: a process decides value ``v`` once one of its
quorums has sent it ``v``.  There is no view change, so vote splitting by
faulty processes can leave processes undecided but cannot make two of them
decide differently when quorums are consistent.

Links are reliable and authenticated.  Delivery order is fixed by a keyed
hash of (seed, message), so the pending message set and the seed fully
determine the next delivery.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional

from .analysis import closed_core, max_guild
from .core import AsymmetricSystem, InputError, ProcessSet

__all__ = [
    "Behavior",
    "Entry",
    "Message",
    "Scenario",
    "TraceEvent",
    "Outcome",
    "Trace",
    "MERGE_FUNCTIONS",
    "register_merge",
    "validate_history",
    "merge_histories",
    "merge_conflicts",
    "guild_certified",
    "guild_members",
    "run",
]

YES, NO = "yes", "no"
REQUEST, VOTE, RESPONSE, ACK = "CompositionRequest", "Vote", "CompositionResponse", "CompositionAck"
FORGED_ORIGIN = "forged"
STEP_FACTOR = 10  # the run gives up after STEP_FACTOR * |processes|**2 deliveries


class Behavior(str, enum.Enum):
    SILENT = "silent"
    EQUIVOCATE = "equivocate"


@dataclass(frozen=True, order=True)
class Entry:
    origin: str
    seq: int
    payload: bytes

    def to_json(self) -> list:
        return [self.origin, self.seq, self.payload.decode("utf-8", errors="backslashreplace")]


History = tuple


def validate_history(entries: Iterable) -> tuple[Entry, ...]:
    """Coerce to a tuple of entries; seq must strictly increase per origin."""
    out = []
    last: dict[str, int] = {}
    for e in entries:
        if not isinstance(e, Entry):
            try:
                origin, seq, payload = e
            except (TypeError, ValueError):
                raise InputError(f"malformed history entry {e!r}") from None
            if isinstance(payload, str):
                payload = payload.encode("utf-8")
            e = Entry(origin, seq, payload)
        if not isinstance(e.origin, str) or not e.origin:
            raise InputError(f"history entry origin must be a nonempty string: {e!r}")
        if not isinstance(e.seq, int) or isinstance(e.seq, bool):
            raise InputError(f"history entry seq must be an integer: {e!r}")
        if not isinstance(e.payload, bytes):
            raise InputError(f"history entry payload must be bytes: {e!r}")
        if e.origin in last and e.seq <= last[e.origin]:
            raise InputError(f"history seq numbers for {e.origin!r} are not strictly increasing")
        last[e.origin] = e.seq
        out.append(e)
    return tuple(out)


def merge_conflicts(h1, h2) -> list[tuple[str, int]]:
    """(origin, seq) pairs carried by both histories with different payloads."""
    seen: dict[tuple[str, int], bytes] = {}
    bad = set()
    for e in (*h1, *h2):
        k = (e.origin, e.seq)
        if k in seen and seen[k] != e.payload:
            bad.add(k)
        seen.setdefault(k, e.payload)
    return sorted(bad, key=lambda k: (k[1], k[0]))


def merge_histories(h1, h2) -> tuple[Entry, ...]:
    """Default merge: order by (seq, origin), collapse duplicates.

    On conflicting duplicates the lexicographically smaller payload wins.
    """
    h1, h2 = validate_history(h1), validate_history(h2)
    best: dict[tuple[str, int], bytes] = {}
    for e in (*h1, *h2):
        k = (e.origin, e.seq)
        if k not in best or e.payload < best[k]:
            best[k] = e.payload
    return tuple(Entry(o, s, best[(o, s)]) for s, o in sorted((s, o) for o, s in best))


MERGE_FUNCTIONS: dict[str, Callable] = {"default": merge_histories}


def register_merge(name: str):
    """Decorator adding a merge function that scenarios can select by name."""

    def deco(fn):
        MERGE_FUNCTIONS[name] = fn
        return fn

    return deco


def guild_certified(responses: Mapping[str, Hashable], aq, af=None) -> Optional[tuple[ProcessSet, Hashable]]:
    """Largest closed set of processes that all sent the same payload.

    Responders outside the quorum systems' ground are ignored.  When two
    payload groups both contain a closed set (impossible under consistent
    quorums) the larger group wins, ties broken by the payload's repr.
    """
    ground = aq.ground
    groups: dict[Hashable, int] = {}
    for name, payload in responses.items():
        if name in ground:
            groups[payload] = groups.get(payload, 0) | 1 << ground.index(name)
    best = None
    for payload, members in groups.items():
        core = closed_core(aq, members)
        if core:
            key = (-core.bit_count(), repr(payload))
            if best is None or key < best[0]:
                best = (key, core, payload)
    if best is None:
        return None
    return ground.process_set(best[1]), best[2]


@dataclass(frozen=True)
class Message:
    kind: str
    sender: str
    recipient: str
    tag: str
    value: Optional[str] = None
    history: Optional[tuple] = None

    def key(self) -> str:
        return f"{self.kind}|{self.tag}|{self.sender}|{self.recipient}"


@dataclass(frozen=True)
class Scenario:
    system_a: AsymmetricSystem
    system_b: AsymmetricSystem
    initiator: str
    faulty: frozenset = frozenset()
    behavior: Mapping[str, Behavior] = field(default_factory=dict)
    history_a: tuple = ()
    history_b: tuple = ()
    seed: int = 0
    merge: str = "default"

    def __post_init__(self):
        for s in (self.system_a, self.system_b):
            if not isinstance(s, AsymmetricSystem):
                raise InputError("scenario systems must be asymmetric systems")
        pa, pb = set(self.system_a.ground.names), set(self.system_b.ground.names)
        if self.initiator not in pa:
            raise InputError(f"initiator {self.initiator!r} is not a process of system A")
        object.__setattr__(self, "faulty", frozenset(self.faulty))
        if not self.faulty <= pa | pb:
            raise InputError(f"faulty processes {sorted(self.faulty - pa - pb)} are unknown")
        beh = {k: Behavior(v) for k, v in dict(self.behavior).items()}
        if not set(beh) <= self.faulty:
            raise InputError("behavior keys must be faulty processes")
        object.__setattr__(self, "behavior", beh)
        object.__setattr__(self, "history_a", validate_history(self.history_a))
        object.__setattr__(self, "history_b", validate_history(self.history_b))
        if not isinstance(self.seed, int) or not -(2**63) <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit integer")
        if self.merge not in MERGE_FUNCTIONS:
            raise InputError(f"unknown merge function {self.merge!r}")

    @property
    def processes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.system_a.ground.names) | set(self.system_b.ground.names)))

    def behavior_of(self, name: str) -> Optional[Behavior]:
        if name not in self.faulty:
            return None
        return self.behavior.get(name, Behavior.SILENT)

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(
            self.system_a, self.system_b, self.initiator, self.faulty, self.behavior,
            self.history_a, self.history_b, seed, self.merge,
        )


@dataclass(frozen=True)
class TraceEvent:
    step: int
    event: str
    process: str
    digest: str
    detail: tuple = ()

    def to_json(self) -> dict:
        out = {"step": self.step, "event": self.event, "process": self.process}
        out.update(self.detail)
        out["digest"] = self.digest
        return out


@dataclass(frozen=True)
class Outcome:
    process: str
    verdict: str  # "Composed" | "Undecided"
    history: Optional[tuple] = None
    faulty: bool = False

    def to_json(self) -> dict:
        out = {"record": "outcome", "process": self.process, "verdict": self.verdict, "faulty": self.faulty}
        if self.history is not None:
            out["history"] = [e.to_json() for e in self.history]
        return out


@dataclass(frozen=True)
class Trace:
    events: tuple
    outcome: Mapping[str, Outcome]
    steps: int
    flags: tuple = ()

    def records(self):
        for e in self.events:
            yield e.to_json()
        for name in sorted(self.outcome):
            yield self.outcome[name].to_json()

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in self.records())

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()

    def composed(self) -> dict[str, tuple]:
        return {n: o.history for n, o in self.outcome.items() if o.verdict == "Composed"}


def _history_digest(h) -> str:
    blob = json.dumps([e.to_json() for e in h], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


class _Node:
    def __init__(self, name: str, in_a: bool, in_b: bool):
        self.name = name
        self.in_a = in_a
        self.in_b = in_b
        self.voted_b = False
        self.votes_b: dict[str, str] = {}
        self.decided_b: Optional[str] = None
        self.responses: dict[str, tuple] = {}
        self.certified_response = None
        self.voted_a = False
        self.votes_a: dict[str, str] = {}
        self.decided_a: Optional[str] = None
        self.acks: dict[str, tuple] = {}
        self.certified_ack = None
        self.merged: Optional[tuple] = None

    def digest(self) -> str:
        state = {
            "voted_b": self.voted_b,
            "votes_b": sorted(self.votes_b.items()),
            "decided_b": self.decided_b,
            "responses": sorted((k, _history_digest(v)) for k, v in self.responses.items()),
            "certified_response": self.certified_response is not None,
            "voted_a": self.voted_a,
            "votes_a": sorted(self.votes_a.items()),
            "decided_a": self.decided_a,
            "acks": sorted((k, _history_digest(v)) for k, v in self.acks.items()),
            "certified_ack": self.certified_ack is not None,
            "merged": None if self.merged is None else _history_digest(self.merged),
        }
        blob = json.dumps(state, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _decided(votes: dict[str, str], quorums, ground) -> Optional[str]:
    for value in (NO, YES):
        have = 0
        for s, v in votes.items():
            if v == value:
                have |= 1 << ground.index(s)
        if any(q & ~have == 0 for q in quorums.masks):
            return value
    return None


class _Run:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.a, self.b = sc.system_a, sc.system_b
        self.pa, self.pb = self.a.ground.names, self.b.ground.names
        self.everyone = sc.processes
        self.nodes = {n: _Node(n, n in self.a.ground, n in self.b.ground) for n in self.everyone}
        self.merge = MERGE_FUNCTIONS[sc.merge]
        self.pending: list = []
        self.counter = 0
        self.events: list[TraceEvent] = []
        self.step = 0
        self.flags: list[str] = []
        self.forged = sc.history_a + (Entry(FORGED_ORIGIN, 0, b"equivocation"),)

    def _priority(self, msg: Message) -> bytes:
        h = hashlib.blake2b(digest_size=8, key=str(self.sc.seed).encode("ascii"))
        h.update(msg.key().encode("utf-8"))
        return h.digest()

    def _push(self, msg: Message):
        heapq.heappush(self.pending, (self._priority(msg), self.counter, msg))
        self.counter += 1

    def broadcast(self, sender: str, recipients, kind: str, tag: str, value=None, history=None):
        beh = self.sc.behavior_of(sender)
        if beh is Behavior.SILENT:
            return
        recipients = sorted(recipients)
        half = (len(recipients) + 1) // 2
        for k, r in enumerate(recipients):
            v, h = value, history
            if beh is Behavior.EQUIVOCATE and k >= half:
                if kind == VOTE:
                    v = NO
                elif h is not None:
                    h = h + (Entry(FORGED_ORIGIN, 0, b"equivocation:" + sender.encode("utf-8")),)
            self._push(Message(kind, sender, r, tag, v, h))

    def note(self, event: str, node: _Node, **detail):
        self.events.append(TraceEvent(self.step, event, node.name, node.digest(), tuple(detail.items())))

    def start(self):
        self.broadcast(self.sc.initiator, self.pb, REQUEST, "request")

    def deliver(self, msg: Message):
        node = self.nodes[msg.recipient]
        detail = {"kind": msg.kind, "from": msg.sender, "tag": msg.tag}
        if msg.value is not None:
            detail["value"] = msg.value
        if msg.history is not None:
            detail["history"] = _history_digest(msg.history)
        if self.sc.behavior_of(node.name) is Behavior.SILENT:
            self.note("deliver", node, **detail)
            return
        if msg.kind == REQUEST and node.in_b and msg.sender in self.a.ground and not node.voted_b:
            node.voted_b = True
            self.broadcast(node.name, self.pb, VOTE, "vote-b", value=YES)
        elif msg.kind == VOTE and msg.tag == "vote-b" and node.in_b and msg.sender in self.b.ground:
            node.votes_b.setdefault(msg.sender, msg.value)
        elif msg.kind == VOTE and msg.tag == "vote-a" and node.in_a and msg.sender in self.a.ground:
            node.votes_a.setdefault(msg.sender, msg.value)
        elif msg.kind == RESPONSE and node.in_a and msg.sender in self.b.ground:
            node.responses.setdefault(msg.sender, msg.history)
        elif msg.kind == ACK and msg.sender in self.a.ground:
            node.acks.setdefault(msg.sender, msg.history)
        self.note("deliver", node, **detail)
        self.react(node)

    def react(self, node: _Node):
        if node.in_b and node.decided_b is None and node.votes_b:
            v = _decided(node.votes_b, self.b.quorums[node.name], self.b.ground)
            if v is not None:
                node.decided_b = v
                self.note("decide", node, round="vote-b", value=v)
                if v == YES:
                    self.broadcast(node.name, self.pa, RESPONSE, "response", history=self.sc.history_b)
        if node.in_a and node.certified_response is None and node.responses:
            cert = guild_certified(node.responses, self.b.quorums, self.b.fail_prone)
            if cert is not None:
                node.certified_response = cert
                self.note("certify", node, round="response", guild=list(cert[0]), history=_history_digest(cert[1]))
                if not node.voted_a:
                    node.voted_a = True
                    self.broadcast(node.name, self.pa, VOTE, "vote-a", value=YES)
        if node.in_a and node.decided_a is None and node.votes_a:
            v = _decided(node.votes_a, self.a.quorums[node.name], self.a.ground)
            if v is not None:
                node.decided_a = v
                self.note("decide", node, round="vote-a", value=v)
                if v == YES:
                    self.broadcast(node.name, self.everyone, ACK, "ack", history=self.sc.history_a)
        if node.certified_ack is None and node.acks:
            cert = guild_certified(node.acks, self.a.quorums, self.a.fail_prone)
            if cert is not None:
                node.certified_ack = cert
                self.note("certify", node, round="ack", guild=list(cert[0]), history=_history_digest(cert[1]))
        self.try_compose(node)

    def try_compose(self, node: _Node):
        if node.merged is not None or node.name in self.sc.faulty or node.certified_ack is None:
            return
        if node.in_b and node.decided_b != YES:
            return
        if node.in_a and node.decided_a != YES:
            return
        if not node.in_b and node.certified_response is None:
            # deciding needs only others' votes; the B history still has to be certified here
            return
        h1 = node.certified_ack[1]
        h2 = self.sc.history_b if node.in_b else node.certified_response[1]
        conflicts = merge_conflicts(h1, h2)
        if conflicts:
            self.flags.append(f"merge-conflict:{node.name}:" + ",".join(f"{o}/{s}" for o, s in conflicts))
        node.merged = tuple(self.merge(h1, h2))
        self.note("compose", node, history=_history_digest(node.merged))

    def execute(self) -> Trace:
        limit = STEP_FACTOR * len(self.everyone) ** 2
        self.start()
        while self.pending:
            if self.step >= limit:
                self.flags.append(f"step-bound-exceeded:{limit}")
                break
            _, _, msg = heapq.heappop(self.pending)
            self.step += 1
            self.deliver(msg)
        outcome = {}
        for name, node in self.nodes.items():
            faulty = name in self.sc.faulty
            if node.merged is not None:
                outcome[name] = Outcome(name, "Composed", node.merged, faulty)
            else:
                outcome[name] = Outcome(name, "Undecided", None, faulty)
        return Trace(tuple(self.events), outcome, self.step, tuple(self.flags))


def run(scenario: Scenario) -> Trace:
    """Execute the handshake for ``scenario`` and return its event trace."""
    return _Run(scenario).execute()


def guild_members(scenario: Scenario) -> ProcessSet:
    """Union of the two systems' maximal guilds for the scenario's faulty set."""
    out = set()
    for s in (scenario.system_a, scenario.system_b):
        f = [n for n in scenario.faulty if n in s.ground]
        out |= max_guild(s.quorums, s.fail_prone, f)
    return ProcessSet(out)
