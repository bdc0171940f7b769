"""Command-line front end: ``ground``, ``mis``, ``query``, ``rank``, ``explain``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import Engine, EngineConfig
from .grounding import GroundingLimitError, ground_fixpoint_prov, minimal_inconsistent_subsets
from .kb import KBError, ParseError, parse_kb, parse_query
from .oracle import brute_mis, brute_minimal_supports, enumerate_worlds, naive_ground
from .worlds import EnumerationCapError, UnsatisfiableError, World

REPORT_VERSION = "paraquery-report v1"

EXIT_OK, EXIT_IO, EXIT_PARSE, EXIT_CAP, EXIT_UNSAT = 0, 1, 2, 3, 4


def _fmt_set(atoms) -> str:
    return "{" + ", ".join(sorted(map(str, atoms))) + "}"


def _fmt_family(family) -> str:
    return "{" + ", ".join(sorted(_fmt_set(s) for s in family)) + "}"


def _num(x: float) -> str:
    return f"{x:.12g}"


def _load_config(args) -> EngineConfig:
    cfg = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    return cfg.override(
        theta_r=getattr(args, "theta_r", None),
        synonyms_file=getattr(args, "synonyms", None),
        topk=getattr(args, "topk", None),
        cap=getattr(args, "cap", None),
    )


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def cmd_ground(args, out) -> int:
    kb = parse_kb(_read(args.kb))
    out.write(f"# {REPORT_VERSION} ground{' oracle' if args.oracle else ''}\n")
    if args.oracle:
        atoms = naive_ground(kb)
        prov = {a: brute_minimal_supports(kb, a) for a in atoms}
    else:
        gkb = ground_fixpoint_prov(kb, _load_config(args).support_cap)
        atoms, prov = gkb.atoms, gkb.provenance
    out.write(f"atoms {len(atoms)}\n")
    for a in sorted(atoms, key=str):
        out.write(f"{a}\n")
    out.write("# provenance\n")
    for a in sorted(atoms, key=str):
        out.write(f"{a}\t{_fmt_family(prov[a])}\n")
    return EXIT_OK


def cmd_mis(args, out) -> int:
    kb = parse_kb(_read(args.kb))
    if args.oracle:
        mis = brute_mis(kb)
    else:
        mis = minimal_inconsistent_subsets(ground_fixpoint_prov(kb, _load_config(args).support_cap))
    for line in sorted(_fmt_set(m) for m in mis):
        out.write(line + "\n")
    return EXIT_OK


def _engine(args):
    cfg = _load_config(args)
    kb = parse_kb(_read(args.kb))
    q = parse_query(_read(args.query))
    return Engine(cfg).fit(kb), q


def cmd_query(args, out) -> int:
    engine, q = _engine(args)
    hyps = engine.hypotheses(q, args.approx)
    out.write(f"# {REPORT_VERSION} query{' approx' if args.approx else ''}\n")
    out.write(f"query {q}\n")
    out.write(f"candidates {len(hyps)}\n")
    justification = engine.justify(q, args.approx)
    for c, graphs in hyps.items():
        out.write(f"candidate {c}\n")
        for g in sorted(graphs, key=lambda g: (-g.score, g.sort_key())):
            out.write(f"  hypothesis score={_num(g.score)} error={_num(g.error)} {_fmt_set(g.atoms)}\n")
        if args.approx:
            for s in sorted(justification[c], key=lambda s: s.sort_key()):
                out.write(f"  summary likelihood={_num(s.likelihood)} {_fmt_set(s.merged.atoms)}\n")
                for m in sorted(s.members, key=lambda m: m.sort_key()):
                    out.write(f"    member score={_num(m.score)} error={_num(m.error)} {_fmt_set(m.atoms)}\n")
    return EXIT_OK


def _oracle_prior(fg, world: World) -> float:
    return sum(p for w, p in enumerate_worlds(fg) if w.true_atoms & world.scope == world.true_atoms)


def _rank_lines(ranked, approx, oracle) -> list:
    flags = (" approx" if approx else "") + (" oracle" if oracle else "")
    lines = [f"# {REPORT_VERSION} rank{flags}", f"answers {len(ranked)}"]
    for r in ranked:
        lines.append(f"answer {r.candidate}\tP={_num(r.probability)}")
        for w, lik, prior in r.worlds:
            lines.append(f"  world likelihood={_num(lik)} prior={_num(prior)} {w}")
        for s in r.summaries:
            lines.append(f"  summary likelihood={_num(s.likelihood)} {_fmt_set(s.merged.atoms)}")
    return lines


def cmd_rank(args, out) -> int:
    engine, q = _engine(args)
    ranked = engine.rank(q, args.approx, _oracle_prior if args.oracle else None)
    text = "\n".join(_rank_lines(ranked, args.approx, args.oracle)) + "\n"
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def cmd_explain(args, out) -> int:
    engine, q = _engine(args)
    gkb = engine.gkb_
    ranked = {str(r.candidate): r for r in engine.rank(q, args.approx)}
    out.write(f"# {REPORT_VERSION} explain\n")
    r = ranked.get(args.candidate)
    if r is None:
        out.write(f"candidate {args.candidate} not found\n")
        return EXIT_OK
    out.write(f"candidate {r.candidate}\tP={_num(r.probability)}\n")
    mis = sorted(gkb.mis, key=_fmt_set)
    for s in r.summaries:
        out.write(f"summary {_fmt_set(s.merged.atoms)} likelihood={_num(s.likelihood)}\n")
        for m in sorted(s.members, key=lambda m: m.sort_key()):
            out.write(f"  hypothesis score={_num(m.score)} error={_num(m.error)} {_fmt_set(m.atoms)}\n")
            for a in sorted(m.atoms, key=str):
                out.write(f"    support {a} <- {_fmt_family(gkb.supports(a))}\n")
            chosen = gkb.consistent_support(m.atoms)
            out.write(f"    base {_fmt_set(chosen or ())}\n")
            for x in mis:
                verdict = "embedded" if chosen is not None and x <= chosen else "clear"
                out.write(f"    mis {_fmt_set(x)} {verdict}\n")
            out.write(f"    cons {'true' if gkb.cons(m.atoms) else 'false'}\n")
    for w, lik, prior in r.worlds:
        out.write(f"world likelihood={_num(lik)} prior={_num(prior)} {w}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    parser = argparse.ArgumentParser(prog="paraquery",
                                     description="Query knowledge bases with erroneous data and queries.")
    parser.add_argument("--config", help="TOML engine configuration")
    parser.add_argument("--oracle", action="store_true", help="use the brute-force reference path")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--oracle", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground", parents=[common], help="ground a KB and print provenance")
    p.add_argument("kb")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("mis", parents=[common], help="print minimal inconsistent subsets")
    p.add_argument("kb")
    p.set_defaults(func=cmd_mis)

    def query_args(p, with_candidate=False):
        if with_candidate:
            p.add_argument("candidate")
        p.add_argument("--kb", required=True)
        p.add_argument("--query", required=True)
        p.add_argument("--synonyms")
        p.add_argument("--theta-r", type=float, dest="theta_r")
        p.add_argument("--topk", type=int)
        p.add_argument("--approx", action="store_true")
        p.add_argument("--cap", type=int)

    p = sub.add_parser("query", parents=[common], help="candidates and hypotheses")
    query_args(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("rank", parents=[common], help="rank candidates by possible-world probability")
    query_args(p)
    p.add_argument("--report")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("explain", parents=[common], help="trace one candidate's ranking")
    query_args(p, with_candidate=True)
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        err.write(f"error: {e}\n")
        return EXIT_IO
    except ParseError as e:
        err.write(f"parse error: {e}\n")
        return EXIT_PARSE
    except (EnumerationCapError, GroundingLimitError) as e:
        err.write(f"cap exceeded: {e}\n")
        return EXIT_CAP
    except UnsatisfiableError as e:
        err.write(f"unsatisfiable: {e}\n")
        return EXIT_UNSAT
    except (KBError, ValueError) as e:
        err.write(f"invalid input: {e}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
