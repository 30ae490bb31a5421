import sys, time
sys.path.insert(0, "src")
from chorcc.parser import parse_program
from chorcc.typecheck import check_running, initial_env, advance_env, check_program
from chorcc.deployment import initial_deployment
from chorcc.graphs import build_graph

prog = parse_program(open("programs/file_transfer.ac").read())
assert check_program(prog) == []
t0 = time.time()
g = build_graph(prog.chor, initial_deployment(prog.placements), max_nodes=10000)
print(f"graph: {len(g.nodes)} nodes truncated={g.truncated}")
envs = {g.initial: initial_env(prog)}
bad = 0
for cfg in g.nodes:
    env = envs[cfg]
    errs = check_running(env, cfg.chor, cfg.dep)
    if errs:
        bad += 1
        if bad <= 3:
            print("FAIL:", errs[:3])
    for eff, nxt in g.edges.get(cfg, []):
        if nxt not in envs:
            envs[nxt] = advance_env(env, eff)
print(f"checked {len(g.nodes)} nodes, bad={bad}, {time.time()-t0:.1f}s")
