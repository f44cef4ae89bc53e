"""JSON system documents: parsing, validation, and normalized rendering.

A symmetric document::

    {"kind": "symmetric", "processes": ["a", "b", "c", "d"],
     "fail_prone": [["a"], ["b"]], "quorums": [["b", "c", "d"], ...]}

An asymmetric document uses ``fail_prone_systems`` / ``quorum_systems`` maps
from process name to a list of sets.  Quorums default to the canonical ones.
"""

from __future__ import annotations

import json
from typing import Any, Optional, Union

from .core import (
    AsymmetricFailProneSystem,
    AsymmetricQuorumSystem,
    AsymmetricSystem,
    FailProneSystem,
    Ground,
    InputError,
    QuorumSystem,
    SetFamily,
    SymmetricSystem,
    maximalize_masks,
)
from .conditions import canonical_quorums

__all__ = [
    "parse_system",
    "load_system",
    "system_to_document",
    "render_document",
    "render_family",
    "render_family_map",
    "lint_system",
    "parse_scenario",
    "load_scenario",
    "scenario_to_document",
]

System = Union[SymmetricSystem, AsymmetricSystem]


def _require(doc: dict, key: str, kind: type):
    if key not in doc:
        raise InputError(f"missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise InputError(f"field {key!r} must be a {kind.__name__}")
    return value


def _sets(ground: Ground, raw: Any, where: str) -> list[int]:
    if not isinstance(raw, list):
        raise InputError(f"{where} must be a list of lists of process names")
    out = []
    for s in raw:
        if not isinstance(s, list) or not all(isinstance(x, str) for x in s):
            raise InputError(f"{where} must be a list of lists of process names")
        if len(set(s)) != len(s):
            raise InputError(f"{where} contains a set with repeated names")
        out.append(ground.mask(s))
    return out


def _fail_prone(ground: Ground, raw: Any, where: str, normalize: bool) -> FailProneSystem:
    masks = _sets(ground, raw, where)
    if normalize:
        masks = maximalize_masks(masks)
    fam = SetFamily(ground, masks)
    if not fam.is_antichain():
        raise InputError(f"{where} is not an antichain (pass --normalize to maximalize it)")
    return FailProneSystem(ground, fam.masks)


def parse_system(doc: Any, normalize: bool = False) -> System:
    """Build a system from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise InputError("system document must be a JSON object")
    kind = _require(doc, "kind", str)
    ground = Ground(_require(doc, "processes", list))
    if kind == "symmetric":
        f = _fail_prone(ground, _require(doc, "fail_prone", list), "fail_prone", normalize)
        if doc.get("quorums") is None:
            q = canonical_quorums(f)
        else:
            q = QuorumSystem(ground, _sets(ground, doc["quorums"], "quorums"))
        return SymmetricSystem(f, q)
    if kind == "asymmetric":
        raw_f = _require(doc, "fail_prone_systems", dict)
        af = AsymmetricFailProneSystem(
            ground,
            {n: _fail_prone(ground, s, f"fail_prone_systems[{n!r}]", normalize) for n, s in raw_f.items()},
        )
        raw_q = doc.get("quorum_systems")
        if raw_q is None:
            aq = AsymmetricQuorumSystem.canonical(af)
        else:
            if not isinstance(raw_q, dict):
                raise InputError("field 'quorum_systems' must be an object")
            aq = AsymmetricQuorumSystem(
                ground,
                {n: QuorumSystem(ground, _sets(ground, s, f"quorum_systems[{n!r}]")) for n, s in raw_q.items()},
            )
        return AsymmetricSystem(af, aq)
    raise InputError(f"unknown document kind {kind!r}")


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not UTF-8") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def load_system(path: str, normalize: bool = False) -> System:
    return parse_system(_read_json(path), normalize=normalize)


def system_to_document(system: System) -> dict:
    g = system.ground
    if isinstance(system, SymmetricSystem):
        return {
            "kind": "symmetric",
            "processes": list(g.names),
            "fail_prone": system.fail_prone.as_lists(),
            "quorums": system.quorums.as_lists(),
        }
    return {
        "kind": "asymmetric",
        "processes": list(g.names),
        "fail_prone_systems": {n: f.as_lists() for n, f in system.fail_prone.items()},
        "quorum_systems": {n: q.as_lists() for n, q in system.quorums.items()},
    }


def _dump(x) -> str:
    return json.dumps(x, ensure_ascii=False)


def _render_sets(sets: list[list[str]], indent: str) -> str:
    if not sets:
        return "[]"
    inner = (",\n").join(indent + "  " + _dump(s) for s in sets)
    return "[\n" + inner + "\n" + indent + "]"


def _render_map(m: dict, indent: str) -> str:
    if not m:
        return "{}"
    lines = []
    for name, sets in m.items():
        lines.append(f"{indent}  {_dump(name)}: {_render_sets(sets, indent + '  ')}")
    return "{\n" + ",\n".join(lines) + "\n" + indent + "}"


def render_document(doc: dict) -> str:
    """Stable, line-oriented JSON: one set per line, fields in document order."""
    lines = []
    for key, value in doc.items():
        if key in ("fail_prone", "quorums"):
            text = _render_sets(value, "  ")
        elif key in ("fail_prone_systems", "quorum_systems"):
            text = _render_map(value, "  ")
        else:
            text = _dump(value)
        lines.append(f"  {_dump(key)}: {text}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def render_family(family: SetFamily) -> str:
    return _render_sets(family.as_lists(), "") + "\n"


def render_family_map(families: dict[str, SetFamily]) -> str:
    return _render_map({n: f.as_lists() for n, f in families.items()}, "") + "\n"


def lint_system(system: System) -> list[str]:
    """Advisory warnings: a process listing itself in one of its own fail-prone sets."""
    if not isinstance(system, AsymmetricSystem):
        return []
    out = []
    g = system.ground
    for i, (name, f) in enumerate(system.fail_prone.items()):
        for m in f.masks:
            if m >> i & 1:
                out.append(f"process {name!r} appears in its own fail-prone set {list(g.members(m))}")
    return out


def _asym(doc: Any, where: str, normalize: bool) -> AsymmetricSystem:
    if not isinstance(doc, dict):
        raise InputError(f"field {where!r} must be a system document")
    s = parse_system(doc, normalize=normalize)
    return s.to_asymmetric() if isinstance(s, SymmetricSystem) else s


def _names(raw: Any, where: str) -> list[str]:
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise InputError(f"field {where!r} must be a list of process names")
    return raw


def parse_scenario(doc: Any, normalize: bool = False, seed: Optional[int] = None):
    """Build a simulator scenario; ``seed`` overrides the document's seed."""
    from .sim import Scenario

    if not isinstance(doc, dict):
        raise InputError("scenario document must be a JSON object")
    a = _asym(_require(doc, "system_a", dict), "system_a", normalize)
    b = _asym(_require(doc, "system_b", dict), "system_b", normalize)
    behavior = doc.get("behavior", {})
    if not isinstance(behavior, dict):
        raise InputError("field 'behavior' must be an object")
    for k, v in behavior.items():
        if v not in ("silent", "equivocate"):
            raise InputError(f"behavior of {k!r} must be 'silent' or 'equivocate'")
    if seed is None:
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise InputError("field 'seed' must be an integer")
    histories = []
    for key in ("history_a", "history_b"):
        raw = doc.get(key, [])
        if not isinstance(raw, list):
            raise InputError(f"field {key!r} must be a list of [origin, seq, payload] entries")
        for e in raw:
            ok = (
                isinstance(e, list) and len(e) == 3 and isinstance(e[0], str)
                and isinstance(e[1], int) and not isinstance(e[1], bool) and isinstance(e[2], str)
            )
            if not ok:
                raise InputError(f"{key} entry {e!r} must be [origin, seq, payload]")
        histories.append([tuple(e) for e in raw])
    merge = doc.get("merge", "default")
    if not isinstance(merge, str):
        raise InputError("field 'merge' must be a string")
    return Scenario(
        a,
        b,
        _require(doc, "initiator", str),
        frozenset(_names(doc.get("faulty", []), "faulty")),
        behavior,
        histories[0],
        histories[1],
        seed,
        merge,
    )


def load_scenario(path: str, normalize: bool = False, seed: Optional[int] = None):
    return parse_scenario(_read_json(path), normalize=normalize, seed=seed)


def scenario_to_document(sc) -> dict:
    out = {
        "system_a": system_to_document(sc.system_a),
        "system_b": system_to_document(sc.system_b),
        "initiator": sc.initiator,
        "faulty": sorted(sc.faulty),
        "behavior": {k: v.value for k, v in sorted(sc.behavior.items())},
        "history_a": [e.to_json() for e in sc.history_a],
        "history_b": [e.to_json() for e in sc.history_b],
        "seed": sc.seed,
    }
    if sc.merge != "default":
        out["merge"] = sc.merge
    return out
