import sys, time
sys.path.insert(0, "src"); sys.path.insert(0, "tests")
from corpus import corpus
from chorcc.typecheck import check_program, check_running, initial_env, advance_env
from chorcc.deployment import initial_deployment
from chorcc.graphs import build_graph
from chorcc.semantics import Config

t0 = time.time()
total_nodes = 0
fails = []
for seed, prog in corpus(24):
    dep0 = initial_deployment(prog.placements)
    g = build_graph(prog.chor, dep0, max_nodes=5000)
    assert not g.truncated, f"seed {seed} truncated"
    total_nodes += len(g.nodes)
    envs = {g.initial: initial_env(prog)}
    # nodes list is BFS discovery order so predecessors come first
    for cfg in g.nodes:
        env = envs[cfg]
        errs = check_running(env, cfg.chor, cfg.dep)
        if errs:
            fails.append((seed, errs[:2]))
            break
        for eff, nxt in g.edges.get(cfg, []):
            if nxt not in envs:
                envs[nxt] = advance_env(env, eff)
    # deadlock freedom: non-terminal nodes have an outgoing edge
    from chorcc.semantics import normalize
    from chorcc.ast import Inact
    for cfg in g.nodes:
        if not g.edges.get(cfg) and not isinstance(normalize(cfg.chor), Inact):
            fails.append((seed, ["stuck node"]))
print(f"nodes={total_nodes} fails={fails} time={time.time()-t0:.1f}s")
