"""Bounded reduction graphs and cross-level correspondence checks.

Two checks relate the three views of a program:

  projection   every source step is matched by the projected choreography
               (a communication splits into a send step and a receive
               step), landing on a node that prunes to the projection of
               the source residual over an identical deployment; and
               every projected step from a related node is explained by
               some source step.

  compilation  every source step is matched by a bounded run of the
               compiled network reaching the same deployment data, where
               data means the located states and queue contents with
               process names forgotten; deadlocked or erroring networks
               along the way are reported, and a final sweep confirms
               that every reachable network state can still reach the
               data image of some source node.

Both graphs are explored breadth-first up to a node budget; hitting the
budget marks the result inconclusive rather than failed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import Chor
from .compiler import compile_network
from .dcc import (
    DccError, Network, data_canon_net, enumerate_network, network_canon,
    network_terminated,
)
from .deployment import CensusKeyGen, Deployment, DeploymentError, KeyGen
from .epp import epp, prunes
from .semantics import Config, Effect, enumerate_redexes, normalize
from .trees import canon_text


@dataclass
class ReductionGraph:
    initial: Config
    nodes: list[Config]
    edges: dict[Config, list[tuple[Effect, Config]]]
    truncated: bool


def build_graph(
    chor: Chor,
    dep: Deployment,
    keygen: KeyGen | None = None,
    max_nodes: int = 2000,
) -> ReductionGraph:
    keygen = keygen or CensusKeyGen()
    init = Config(normalize(chor), dep)
    nodes = [init]
    seen = {init}
    edges: dict[Config, list[tuple[Effect, Config]]] = {}
    truncated = False
    i = 0
    while i < len(nodes):
        cfg = nodes[i]
        i += 1
        outs: list[tuple[Effect, Config]] = []
        for redex in enumerate_redexes(cfg, keygen):
            eff, nxt = redex.fire()
            nxt = Config(normalize(nxt.chor), nxt.dep)
            outs.append((eff, nxt))
            if nxt not in seen:
                if len(seen) >= max_nodes:
                    truncated = True
                    continue
                seen.add(nxt)
                nodes.append(nxt)
        edges[cfg] = outs
    return ReductionGraph(init, nodes, edges, truncated)


@dataclass
class Correspondence:
    ok: bool
    truncated: bool
    lines: list[str]
    src_nodes: int
    tgt_nodes: int

    @property
    def verdict(self) -> str:
        if self.truncated and self.ok:
            return "inconclusive"
        return "ok" if self.ok else "failed"


def _expected_steps(eff: Effect) -> tuple[Effect, ...]:
    """The projected effect sequence matching one source effect."""
    if eff[0] == "com":
        _, sess, p, a, q, b, op, var, payload = eff
        return (
            ("msend", sess, p, a, b, op, payload),
            ("mrecv", sess, a, q, b, op, var, payload),
        )
    if eff[0] == "start":
        return (("pstart",) + tuple(eff[1:]),)
    return (eff,)


def _eff_text(eff: Effect) -> str:
    from .semantics import effect_text

    return effect_text(eff)


def check_epp_correspondence(program, max_nodes: int = 2000) -> Correspondence:
    from .deployment import initial_deployment

    dep0 = initial_deployment(program.placements)
    src = build_graph(program.chor, dep0, max_nodes=max_nodes)
    projected = epp(program.chor)
    tgt = build_graph(projected, dep0, max_nodes=max_nodes)

    lines: list[str] = []
    ok = True
    rel: dict[Config, dict[Config, None]] = {src.initial: {tgt.initial: None}}
    if not prunes(tgt.initial.chor, epp(src.initial.chor)):
        return Correspondence(
            False, False,
            ["the projection does not prune to itself at the initial node"],
            len(src.nodes), len(tgt.nodes),
        )

    worklist = [src.initial]
    seen_pairs: set[tuple[Config, Config]] = {(src.initial, tgt.initial)}
    while worklist and ok:
        c = worklist.pop()
        related = list(rel.get(c, ()))
        for eff, c2 in src.edges.get(c, ()):
            seq = _expected_steps(eff)
            expected_proj = epp(c2.chor)
            for p in related:
                frontier = {p}
                for step in seq:
                    frontier = {
                        q2
                        for q in frontier
                        for e2, q2 in tgt.edges.get(q, ())
                        if e2 == step
                    }
                    if not frontier:
                        break
                if not frontier:
                    ok = False
                    lines.append(
                        f"completeness: no projected path for [{_eff_text(eff)}]"
                    )
                    break
                for q2 in frontier:
                    if q2.dep != c2.dep:
                        ok = False
                        lines.append(
                            f"deployments diverge after [{_eff_text(eff)}]"
                        )
                        continue
                    if not prunes(q2.chor, expected_proj):
                        ok = False
                        lines.append(
                            "projected residual does not prune to the "
                            f"projection after [{_eff_text(eff)}]"
                        )
                        continue
                    rel.setdefault(c2, {})[q2] = None
                    if (c2, q2) not in seen_pairs:
                        seen_pairs.add((c2, q2))
                        if c2 not in worklist:
                            worklist.append(c2)
            if not ok:
                break

    # soundness: projected moves from related nodes are explained by source
    if ok:
        for c, qs in rel.items():
            src_out = src.edges.get(c, ())
            for p in qs:
                for f, p1 in tgt.edges.get(p, ()):
                    explained = False
                    for eff, c2 in src_out:
                        seq = _expected_steps(eff)
                        if seq[0] != f:
                            continue
                        if len(seq) == 1:
                            if p1 in rel.get(c2, ()):
                                explained = True
                                break
                        else:
                            nexts = {
                                q2 for e2, q2 in tgt.edges.get(p1, ())
                                if e2 == seq[1]
                            }
                            if nexts & rel.get(c2, {}).keys():
                                explained = True
                                break
                    if not explained:
                        ok = False
                        lines.append(
                            f"soundness: projected step [{_eff_text(f)}] "
                            "answers to no source step"
                        )
            if not ok:
                break

    truncated = src.truncated or tgt.truncated
    if truncated:
        lines.append("node budget reached; exploration incomplete")
    return Correspondence(ok, truncated, lines, len(src.nodes), len(tgt.nodes))


# ------------------------------------------------------- compiled networks

def dep_data_canon(dep: Deployment) -> tuple:
    rows = []
    for _, p in dep.procs:
        queues = tuple(
            (canon_text(k), tuple((op, canon_text(t)) for op, t in msgs))
            for k, msgs in p.queues
        )
        rows.append((p.loc, canon_text(p.state), queues))
    return tuple(sorted(rows))


def _net_successors(net: Network, keygen: KeyGen):
    """Successor networks and whether any enabled step failed to fire."""
    succs: list[Network] = []
    errors: list[str] = []
    for redex in enumerate_network(net, keygen):
        try:
            _, nxt = redex.fire()
        except (DccError, DeploymentError) as exc:
            errors.append(f"{redex.desc}: {exc}")
            continue
        succs.append(nxt)
    return succs, errors


def _reach_data(
    start: Network,
    target: tuple,
    keygen: KeyGen,
    bound: int,
    want_terminated: bool = False,
) -> tuple[list[Network], list[str], bool]:
    """Networks within bound whose data matches target, trouble lines, and
    whether the search ran out of budget."""
    found: list[Network] = []
    trouble: list[str] = []
    seen = {network_canon(start)}
    frontier = [start]
    visited = 1
    budget_hit = False
    while frontier and not budget_hit:
        nxt: list[Network] = []
        for net in frontier:
            matched = data_canon_net(net) == target and (
                not want_terminated or network_terminated(net)
            )
            if matched:
                found.append(net)
                continue  # images are cut points; later edges restart here
            succs, errors = _net_successors(net, keygen)
            for msg in errors:
                trouble.append(f"step error: {msg}")
            if not succs and not errors and not network_terminated(net):
                trouble.append("network deadlocks before reaching the image")
            for s in succs:
                key = network_canon(s)
                if key in seen:
                    continue
                if visited >= bound:
                    budget_hit = True
                    break
                seen.add(key)
                visited += 1
                nxt.append(s)
            if budget_hit:
                break
        frontier = nxt
    return found, trouble, budget_hit


def _soundness_sweep(
    net0: Network,
    images: frozenset,
    keygen: KeyGen,
    bound: int,
) -> tuple[list[str], bool]:
    """Check that every network state reachable from net0 can still reach
    a state whose data matches some source image.

    Returns trouble lines and whether the sweep ran out of budget."""
    nets = [net0]
    index = {network_canon(net0): 0}
    preds: list[list[int]] = [[]]
    is_image = [data_canon_net(net0) in images]
    lines: list[str] = []
    truncated = False
    i = 0
    while i < len(nets):
        net = nets[i]
        succs, errors = _net_successors(net, keygen)
        for msg in errors:
            lines.append(f"soundness: step error: {msg}")
        for s in succs:
            key = network_canon(s)
            j = index.get(key)
            if j is None:
                if len(nets) >= bound:
                    truncated = True
                    continue
                j = len(nets)
                index[key] = j
                nets.append(s)
                preds.append([])
                is_image.append(data_canon_net(s) in images)
            preds[j].append(i)
        i += 1
    # backward closure from the image states
    good = [False] * len(nets)
    stack = [i for i, flag in enumerate(is_image) if flag]
    for i in stack:
        good[i] = True
    while stack:
        j = stack.pop()
        for p in preds[j]:
            if not good[p]:
                good[p] = True
                stack.append(p)
    lost = sum(1 for g in good if not g)
    if lost and not truncated:
        lines.append(
            f"soundness: {lost} reachable network states cannot reach "
            "the data image of any source node"
        )
    return lines, truncated


def check_compile_correspondence(
    program,
    max_nodes: int = 600,
    per_edge_bound: int = 4000,
    sweep_bound: int | None = None,
) -> Correspondence:
    from .deployment import initial_deployment

    keygen = CensusKeyGen()
    dep0 = initial_deployment(program.placements)
    src = build_graph(program.chor, dep0, max_nodes=max_nodes)
    net0 = compile_network(program)

    lines: list[str] = []
    ok = True
    inconclusive = False
    explored = 0

    if data_canon_net(net0) != dep_data_canon(dep0):
        return Correspondence(
            False, False, ["initial network data differs from the deployment"],
            len(src.nodes), 1,
        )

    # different source nodes may share one data image, so a related net can
    # sit at a control point belonging to another node with the same data;
    # an edge therefore passes when ANY related net reaches the image
    rel: dict[Config, dict[tuple, Network]] = {
        src.initial: {network_canon(net0): net0}
    }
    cache: dict[tuple, tuple[list[Network], list[str], bool]] = {}
    worklist = [src.initial]
    done_edges: set[tuple[Config, Config, tuple]] = set()
    budget_edges: list[Effect] = []
    while worklist and ok:
        c = worklist.pop()
        for eff, c2 in src.edges.get(c, ()):
            target = dep_data_canon(c2.dep)
            all_found: dict[tuple, Network] = {}
            for key, net in list(rel.get(c, {}).items()):
                mark = (c, c2, key)
                if mark in done_edges:
                    continue
                done_edges.add(mark)
                if (key, target) not in cache:
                    cache[(key, target)] = _reach_data(
                        net, target, keygen, per_edge_bound
                    )
                    explored += 1
                found, trouble, budget_hit = cache[(key, target)]
                if budget_hit:
                    budget_edges.append(eff)
                for t in trouble:
                    ok = False
                    lines.append(f"after [{_eff_text(eff)}]: {t}")
                for m in found:
                    all_found.setdefault(network_canon(m), m)
            if not all_found:
                continue  # judged after the fixpoint settles
            bucket = rel.setdefault(c2, {})
            fresh = False
            for mk, m in all_found.items():
                if mk not in bucket:
                    bucket[mk] = m
                    fresh = True
            if fresh and c2 not in worklist:
                worklist.append(c2)
            if not ok:
                break

    # a node never related along any path is a completeness failure; with
    # exhausted search budgets the verdict degrades to inconclusive instead
    if ok:
        unrelated = [c for c in src.nodes if c not in rel]
        if unrelated:
            if budget_edges:
                inconclusive = True
                lines.append(
                    f"network budget reached; {len(unrelated)} source "
                    "nodes left without a compiled image"
                )
            else:
                ok = False
                first = unrelated[0]
                into = [
                    _eff_text(eff)
                    for c in src.nodes
                    for eff, c2 in src.edges.get(c, ())
                    if c2 == first and c in rel
                ]
                hint = f" (after [{into[0]}])" if into else ""
                lines.append(
                    "completeness: compiled run never reaches the data "
                    f"image of {len(unrelated)} source nodes{hint}"
                )

    # source nodes that finished for good: the network must be able to
    # finish too, on the same data
    if ok:
        from .ast import Acc, Inact, par_components

        for c in src.nodes:
            if src.edges.get(c) or c not in rel:
                continue
            parts = par_components(c.chor)
            if not all(isinstance(p, (Acc, Inact)) for p in parts):
                continue  # stuck rather than finished; data already matched
            target = dep_data_canon(c.dep)
            reached = False
            any_budget = False
            for key, net in rel[c].items():
                found, trouble, budget_hit = _reach_data(
                    net, target, keygen, per_edge_bound, want_terminated=True
                )
                any_budget = any_budget or budget_hit
                for t in trouble:
                    ok = False
                    lines.append(f"at a terminal node: {t}")
                if found:
                    reached = True
                    break
            if not reached:
                if any_budget:
                    inconclusive = True
                    lines.append(
                        "network budget reached searching for termination"
                    )
                else:
                    ok = False
                    lines.append(
                        "completeness: compiled network cannot terminate "
                        "at a terminal source node"
                    )
            if not ok:
                break

    if ok:
        images = frozenset(dep_data_canon(c.dep) for c in src.nodes)
        sweep_lines, sweep_cut = _soundness_sweep(
            net0, images, keygen, sweep_bound or 4 * per_edge_bound
        )
        if sweep_lines:
            ok = False
            lines.extend(sweep_lines)
        if sweep_cut:
            inconclusive = True
            lines.append("soundness sweep budget reached")

    if src.truncated:
        lines.append("node budget reached; exploration incomplete")
    return Correspondence(
        ok, src.truncated or inconclusive, lines, len(src.nodes), explored
    )
