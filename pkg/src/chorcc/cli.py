"""Command line front end.

Verbs:

  check      parse, typecheck, and verify coherence of the initial state
  project    print the endpoint projection of the choreography
  compile    print the compiled correlation network
  run        execute the choreography, optionally seeded or scripted
  simulate   execute the compiled network, optionally seeded or scripted
  graph      emit the bounded reduction graph as JSON, one object per node
  verify     run the projection and compilation correspondence checks

Exit status is 0 on success, 1 when an analysis fails (type errors, stuck
runs, failed or inconclusive correspondence), and 2 on usage errors.
Diagnostics go to stderr; pass --json for machine readable output on
stdout instead.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from .compiler import CompileError, compile_network
from .dcc import (
    DccError, data_canon_net, enumerate_network, network_canon,
    parse_network, print_network, run_network,
)
from .deployment import (
    CensusKeyGen, DeploymentError, dep_to_obj, initial_deployment,
)
from .epp import EppError, epp
from .graphs import (
    build_graph, check_compile_correspondence, check_epp_correspondence,
)
from .parser import ParseError, parse_program, print_choreography
from .semantics import Config, effect_text, run
from .typecheck import TypingError, check_program, check_running, initial_env

USAGE_ERROR = 2
ANALYSIS_ERROR = 1


def _fail(args, payload: dict, code: int = ANALYSIS_ERROR) -> int:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in payload.get("errors", []):
            print(line, file=sys.stderr)
    return code


def _load(args):
    try:
        with open(args.file, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    try:
        return parse_program(source)
    except ParseError as exc:
        raise _Analysis(f"{args.file}:{exc.line}:{exc.col}: {exc.message}")


class _Analysis(Exception):
    """Analysis failure carrying one diagnostic line per argument."""

    def __init__(self, *lines: str):
        super().__init__("; ".join(lines))
        self.lines = list(lines)


def _static_errors(program) -> list[str]:
    errors = check_program(program)
    if errors:
        return errors
    env = initial_env(program)
    dep = initial_deployment(program.placements)
    return check_running(env, program.chor, dep)


def cmd_check(args) -> int:
    program = _load(args)
    errors = _static_errors(program)
    if args.json:
        print(json.dumps({"ok": not errors, "errors": errors},
                         indent=2, sort_keys=True))
        return ANALYSIS_ERROR if errors else 0
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        return ANALYSIS_ERROR
    print("ok")
    return 0


def cmd_project(args) -> int:
    program = _load(args)
    try:
        projected = epp(program.chor)
    except (EppError, TypingError) as exc:
        raise _Analysis(str(exc))
    text = print_choreography(projected)
    if args.json:
        print(json.dumps({"ok": True, "projection": text},
                         indent=2, sort_keys=True))
    else:
        print(text)
    return 0


def cmd_compile(args) -> int:
    program = _load(args)
    try:
        net = compile_network(program)
    except (CompileError, EppError, TypingError) as exc:
        raise _Analysis(str(exc))
    text = print_network(net)
    if args.json:
        print(json.dumps({"ok": True, "network": text},
                         indent=2, sort_keys=True))
    else:
        print(text)
    return 0


def _script_of(args) -> list[int] | None:
    if args.script is None:
        return None
    try:
        return [int(part) for part in args.script.split(",") if part.strip()]
    except ValueError:
        print("--script wants comma separated integers", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def cmd_run(args) -> int:
    program = _load(args)
    dep = initial_deployment(program.placements)
    result = run(
        Config(program.chor, dep),
        seed=args.seed,
        max_steps=args.max_steps,
        script=_script_of(args),
    )
    return _report_run(args, result.status, result.trace,
                       dep_to_obj(result.config.dep))


def cmd_simulate(args) -> int:
    program = _load(args)
    try:
        net = compile_network(program)
    except (CompileError, EppError, TypingError) as exc:
        raise _Analysis(str(exc))
    result = run_network(
        net,
        seed=args.seed,
        max_steps=args.max_steps,
        script=_script_of(args),
    )
    rows = [
        {"process": name, "location": p.data.loc}
        for name, p in result.network.procs
    ]
    return _report_run(args, result.status, result.trace, rows)


def _report_run(args, status: str, trace: list[str], state) -> int:
    steps = len(trace)
    code = 0 if status == "terminated" else ANALYSIS_ERROR
    if args.json:
        print(json.dumps(
            {"status": status, "steps": steps, "trace": trace,
             "state": state},
            indent=2, sort_keys=True))
        return code
    for line in trace:
        print(line)
    print(f"{status} after {steps} steps")
    if code:
        print(f"run did not terminate: {status}", file=sys.stderr)
    return code


def _state_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _ac_graph_rows(program, bound: int):
    dep = initial_deployment(program.placements)
    graph = build_graph(program.chor, dep, max_nodes=bound)

    def canon(cfg: Config) -> str:
        return _state_hash(
            print_choreography(cfg.chor) + "\n"
            + json.dumps(dep_to_obj(cfg.dep), sort_keys=True))

    ids = {cfg: canon(cfg) for cfg in graph.nodes}
    rows = []
    for cfg in graph.nodes:
        rows.append({
            "id": ids[cfg],
            "edges": [
                {"rule": eff[0], "label": effect_text(eff),
                 "to": ids.get(nxt, _state_hash("truncated"))}
                for eff, nxt in graph.edges.get(cfg, [])
            ],
        })
    return ids[graph.initial], rows, graph.truncated


def _dcc_graph_rows(program, bound: int):
    net0 = compile_network(program)
    keygen = CensusKeyGen()

    def canon(net) -> str:
        return _state_hash(json.dumps(network_canon(net)))

    nets = [net0]
    index = {network_canon(net0): 0}
    rows = []
    truncated = False
    i = 0
    while i < len(nets):
        net = nets[i]
        edges = []
        for redex in enumerate_network(net, keygen):
            try:
                eff, nxt = redex.fire()
            except (DccError, DeploymentError) as exc:
                edges.append({"rule": redex.tag, "label": f"error: {exc}",
                              "to": None})
                continue
            key = network_canon(nxt)
            if key not in index:
                if len(nets) >= bound:
                    truncated = True
                    edges.append({"rule": redex.tag, "label": redex.desc,
                                  "to": _state_hash("truncated")})
                    continue
                index[key] = len(nets)
                nets.append(nxt)
            edges.append({"rule": redex.tag, "label": redex.desc,
                          "to": canon(nets[index[key]])})
        rows.append({"id": canon(net), "edges": edges})
        i += 1
    return canon(net0), rows, truncated


def cmd_graph(args) -> int:
    program = _load(args)
    try:
        if args.level == "ac":
            root, rows, truncated = _ac_graph_rows(program, args.bound)
        else:
            root, rows, truncated = _dcc_graph_rows(program, args.bound)
    except (CompileError, EppError, TypingError,
            DccError, DeploymentError) as exc:
        raise _Analysis(str(exc))
    edge_count = sum(len(r["edges"]) for r in rows)
    header = {"root": root, "nodes": len(rows), "edges": edge_count,
              "truncated": truncated, "level": args.level}
    if args.json:
        print(json.dumps({**header, "graph": rows},
                         indent=2, sort_keys=True))
    else:
        print(json.dumps(header, sort_keys=True))
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    if truncated:
        print("graph truncated at node budget", file=sys.stderr)
        return ANALYSIS_ERROR
    return 0


def cmd_verify(args) -> int:
    program = _load(args)
    errors = _static_errors(program)
    if errors:
        raise _Analysis(*errors)
    try:
        proj = check_epp_correspondence(program, max_nodes=args.bound)
        comp = check_compile_correspondence(
            program, max_nodes=args.bound, per_edge_bound=args.bound)
    except (CompileError, EppError, TypingError) as exc:
        raise _Analysis(str(exc))
    passed = proj.verdict == "ok" and comp.verdict == "ok"
    if args.json:
        print(json.dumps({
            "pass": passed,
            "projection": {
                "verdict": proj.verdict, "lines": proj.lines,
                "source_nodes": proj.src_nodes,
                "projected_nodes": proj.tgt_nodes,
            },
            "compilation": {
                "verdict": comp.verdict, "lines": comp.lines,
                "source_nodes": comp.src_nodes, "searches": comp.tgt_nodes,
            },
        }, indent=2, sort_keys=True))
    else:
        print(f"projection: {proj.verdict} "
              f"(source nodes={proj.src_nodes}, "
              f"projected nodes={proj.tgt_nodes})")
        for line in proj.lines:
            print(f"  {line}", file=sys.stderr)
        print(f"compilation: {comp.verdict} "
              f"(source nodes={comp.src_nodes}, searches={comp.tgt_nodes})")
        for line in comp.lines:
            print(f"  {line}", file=sys.stderr)
        print("verdict: pass" if passed else "verdict: fail")
    return 0 if passed else ANALYSIS_ERROR


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="chorcc",
        description="Typecheck, project, compile, and verify choreographies "
                    "over correlation based deployments.")
    subs = top.add_subparsers(dest="verb", required=True)

    def verb(name: str, fn, help_text: str):
        sub = subs.add_parser(name, help=help_text)
        sub.add_argument("file", help="choreography source file")
        sub.add_argument("--json", action="store_true",
                         help="machine readable output on stdout")
        sub.set_defaults(fn=fn)
        return sub

    verb("check", cmd_check, "typecheck and verify the initial state")
    verb("project", cmd_project, "print the endpoint projection")
    verb("compile", cmd_compile, "print the compiled network")

    for name, fn, help_text in [
        ("run", cmd_run, "execute the choreography"),
        ("simulate", cmd_simulate, "execute the compiled network"),
    ]:
        sub = verb(name, fn, help_text)
        sub.add_argument("--seed", type=int, default=None,
                         help="random scheduling seed")
        sub.add_argument("--script", default=None,
                         help="comma separated redex choices")
        sub.add_argument("--max-steps", type=int, default=2000)

    sub = verb("graph", cmd_graph, "emit the reduction graph as JSON")
    sub.add_argument("--level", choices=["ac", "dcc"], default="ac",
                     help="which semantics to explore")
    sub.add_argument("--bound", type=int, default=2000,
                     help="node budget")

    sub = verb("verify", cmd_verify, "run both correspondence checks")
    sub.add_argument("--bound", type=int, default=2000,
                     help="node budget for graphs and searches")
    return top


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except _Analysis as exc:
        return _fail(args, {"ok": False, "errors": exc.lines})


if __name__ == "__main__":
    sys.exit(main())
