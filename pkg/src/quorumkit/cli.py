"""The ``qk`` command line.

Exit codes: 0 when the property holds (or the command succeeded), 1 when a
checked property fails, 2 on malformed input or an unmet precondition.
Errors are written to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import analysis, conditions, documents, sim
from .compose import cartesian_compose, compose_asymmetric, compose_symmetric, union_compose
from .conditions import CheckReport, PreconditionError
from .core import AsymmetricQuorumSystem, AsymmetricSystem, InputError, SymmetricSystem
from .purify import purify

SEED_ENV = "QK_SEED"


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _verdict(rep: CheckReport) -> str:
    return "HOLDS" if rep.holds else "FAILS " + _dump(rep.witness_json())


def _names(raw: Optional[str]) -> list[str]:
    if raw is None or raw.strip() == "":
        return []
    return [x.strip() for x in raw.split(",") if x.strip()]


class _Out:
    def __init__(self, out, err):
        self.out, self.err = out, err

    def line(self, text: str = ""):
        self.out.write(text + "\n")

    def raw(self, text: str):
        self.out.write(text)

    def warn(self, text: str):
        self.err.write(_dump({"warning": text}) + "\n")


def _load(args, out: _Out):
    s = documents.load_system(args.file, normalize=args.normalize)
    for w in documents.lint_system(s):
        out.warn(w)
    return s


def _symmetric(s, what: str) -> SymmetricSystem:
    if not isinstance(s, SymmetricSystem):
        raise InputError(f"{what} needs a symmetric system document")
    return s


def _asymmetric(s) -> AsymmetricSystem:
    return s.to_asymmetric() if isinstance(s, SymmetricSystem) else s


def _check(rep: CheckReport, out: _Out) -> int:
    out.line(_verdict(rep))
    return 0 if rep.holds else 1


def cmd_check_q3(args, out):
    return _check(conditions.check_q3(_symmetric(_load(args, out), "check-q3").fail_prone), out)


def cmd_check_b3(args, out):
    return _check(conditions.check_b3(_asymmetric(_load(args, out)).fail_prone), out)


def cmd_check_bqs(args, out):
    s = _symmetric(_load(args, out), "check-bqs")
    return _check(conditions.check_bqs(s.quorums, s.fail_prone), out)


def cmd_check_abqs(args, out):
    s = _asymmetric(_load(args, out))
    return _check(conditions.check_abqs(s.quorums, s.fail_prone), out)


def cmd_canonical(args, out):
    s = _load(args, out)
    if isinstance(s, SymmetricSystem):
        c = SymmetricSystem.canonical(s.fail_prone)
    else:
        c = AsymmetricSystem.canonical(s.fail_prone)
    out.raw(documents.render_document(documents.system_to_document(c)))
    return 0


def cmd_classify(args, out):
    s = _asymmetric(_load(args, out))
    labels = analysis.classify(s.fail_prone, _names(args.faulty))
    out.line(_dump({n: c.value for n, c in labels.items()}))
    return 0


def cmd_guild(args, out):
    s = _asymmetric(_load(args, out))
    faulty = _names(args.faulty)
    if args.set is not None:
        g = _names(args.set)
        ok = analysis.is_guild(s.quorums, s.fail_prone, faulty, g)
        rep = CheckReport(ok, None if ok else {"faulty": tuple(sorted(faulty)), "set": tuple(sorted(g))}, "guild")
        return _check(rep, out)
    out.line(_dump(list(analysis.max_guild(s.quorums, s.fail_prone, faulty))))
    return 0


def cmd_tolerated(args, out):
    s = _asymmetric(_load(args, out))
    out.raw(documents.render_family(analysis.tolerated_system(s.quorums, s.fail_prone)))
    return 0


def cmd_kernels(args, out):
    s = _load(args, out)
    if isinstance(s, SymmetricSystem):
        if args.process is not None:
            raise InputError("--process applies to asymmetric documents only")
        out.raw(documents.render_family(analysis.kernels(s.quorums)))
        return 0
    if args.process is not None:
        if args.process not in s.ground:
            raise InputError(f"unknown process {args.process!r}")
        out.raw(documents.render_family(analysis.kernels(s.quorums[args.process])))
        return 0
    out.raw(documents.render_family_map({n: analysis.kernels(q) for n, q in s.quorums.items()}))
    return 0


def cmd_purify(args, out):
    s = _asymmetric(_load(args, out))
    t = analysis.tolerated_system(s.quorums, s.fail_prone)
    pf = purify(s.fail_prone, t)
    aq = AsymmetricQuorumSystem.canonical(pf) if args.rederive_quorums else s.quorums
    out.raw(documents.render_document(documents.system_to_document(AsymmetricSystem(pf, aq))))
    return 0


def cmd_compose(args, out):
    s1 = documents.load_system(args.first, normalize=args.normalize)
    s2 = documents.load_system(args.second, normalize=args.normalize)
    for s in (s1, s2):
        for w in documents.lint_system(s):
            out.warn(w)
    if args.rule == "asym":
        res = compose_asymmetric(s1, s2, auto_purify=args.auto_purify)
    else:
        s1 = _symmetric(s1, f"compose --rule {args.rule}")
        s2 = _symmetric(s2, f"compose --rule {args.rule}")
        if args.rule == "union":
            res = union_compose(s1, s2)
        elif args.rule == "cartesian":
            res = cartesian_compose(s1, s2, allow_overlap=args.allow_overlap)
        else:
            res = compose_symmetric(s1, s2)
    out.raw(documents.render_document(documents.system_to_document(res.system)))
    out.line(_verdict(res.report))
    out.line("provenance " + _dump(res.provenance))
    return 0 if res.report.holds else 1


def _seed(args) -> Optional[int]:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return None
    try:
        return int(env, 0)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def cmd_simulate(args, out):
    sc = documents.load_scenario(args.file, normalize=args.normalize, seed=_seed(args))
    trace = sim.run(sc)
    out.raw(trace.to_jsonl())
    expected = sim.guild_members(sc)
    composed = sorted(n for n, o in trace.outcome.items() if o.verdict == "Composed" and not o.faulty)
    missing = sorted(set(expected) - set(composed))
    histories = {tuple(trace.outcome[n].history) for n in composed}
    ok = not missing and len(histories) <= 1 and not any(f.startswith("step-bound") for f in trace.flags)
    out.line(
        _dump(
            {
                "record": "summary",
                "seed": sc.seed,
                "steps": trace.steps,
                "guild": list(expected),
                "composed": composed,
                "missing": missing,
                "agreement": len(histories) <= 1,
                "flags": list(trace.flags),
                "trace_sha256": trace.digest(),
                "ok": ok,
            }
        )
    )
    if args.figure:
        from .plotting import timeline

        timeline(trace, sc, args.figure)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--normalize", action="store_true", help="maximalize non-antichain fail-prone input")
    p = _Parser(prog="qk", description="Byzantine quorum system checks, composition and simulation.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def single(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("file", help="system document (JSON)")
        sp.set_defaults(func=fn)
        return sp

    single("check-q3", cmd_check_q3, "Q3 condition of a symmetric fail-prone system")
    single("check-b3", cmd_check_b3, "B3 condition of an asymmetric fail-prone system")
    single("canonical", cmd_canonical, "document with canonical quorums")
    single("check-bqs", cmd_check_bqs, "consistency and availability of a symmetric quorum system")
    single("check-abqs", cmd_check_abqs, "consistency and availability of an asymmetric quorum system")
    sp = single("classify", cmd_classify, "label processes faulty, naive or wise")
    sp.add_argument("--faulty", default="", help="comma-separated faulty processes")
    sp = single("guild", cmd_guild, "maximal guild for a faulty set, or test a given set")
    sp.add_argument("--faulty", default="", help="comma-separated faulty processes")
    sp.add_argument("--set", default=None, help="comma-separated candidate guild to test")
    single("tolerated", cmd_tolerated, "tolerated system")
    sp = single("kernels", cmd_kernels, "minimal sets hitting every quorum")
    sp.add_argument("--process", default=None, help="only this process's quorum system")
    sp = single("purify", cmd_purify, "purify fail-prone systems against the tolerated system")
    sp.add_argument("--rederive-quorums", action="store_true", help="replace quorums with canonical ones")

    sp = sub.add_parser("compose", parents=[common], help="compose two systems")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.add_argument("--rule", choices=["union", "cartesian", "general", "asym"], default="general")
    sp.add_argument("--allow-overlap", action="store_true", help="apply the cartesian rule to overlapping grounds")
    sp.add_argument("--auto-purify", action="store_true", help="purify unpurified inputs instead of failing")
    sp.set_defaults(func=cmd_compose)

    sp = sub.add_parser("simulate", parents=[common], help="run the composition handshake")
    sp.add_argument("file", help="scenario document (JSON)")
    sp.add_argument("--seed", type=int, default=None, help=f"overrides ${SEED_ENV} and the document seed")
    sp.add_argument("--figure", default=None, metavar="PATH", help="also write a message timeline image")
    sp.set_defaults(func=cmd_simulate)
    return p


def run_command(argv: Sequence[str], stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    out = _Out(stdout, stderr)
    try:
        args = build_parser().parse_args(list(argv))
        if getattr(args, "func", None) is None:
            raise _Usage("a subcommand is required")
        return args.func(args, out)
    except _Usage as exc:
        err = {"type": "usage", "message": str(exc)}
    except PreconditionError as exc:
        err = exc.to_json()
    except InputError as exc:
        err = {"type": "input", "message": str(exc)}
    stderr.write(_dump({"error": err}) + "\n")
    return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
