import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program
from chorcc.semantics import Config, enumerate_redexes, effect_text
from chorcc.deployment import initial_deployment
from chorcc.typecheck import initial_env, advance_env
from chorcc.sessiontypes import (
    rt_initial, rt_project, rt_buffer, step_global, lt_reduct,
)

prog = parse_program(open("programs/file_transfer.ac").read())
env = initial_env(prog)
cfg = Config(prog.chor, initial_deployment(prog.placements))

for step in range(10):
    redexes = enumerate_redexes(cfg)
    eff, cfg = redexes[0].fire()
    env = advance_env(env, eff)
    print(f"step {step+1}: {effect_text(eff)}")

proto = env.protocols[env.origin["kd"]]
locals_by_role = {r: env.locals[("kd", r)] for (s, r) in env.locals if s == "kd"}
buffers = {(a, b): buf for (s, a, b), buf in env.buffers.items() if s == "kd"}
print("\nlocals:")
for r, t in sorted(locals_by_role.items()):
    print(f"  {r}: {t}")
print("buffers:", {k: v for k, v in buffers.items() if v})

# explore witness search, reporting best partial matches
start = rt_initial(proto.gtype)
seen = {start}
frontier = [start]
best = None
count = 0
while frontier and count < 8000:
    nxt = []
    for rt in frontier:
        count += 1
        bad = []
        for r in sorted(locals_by_role):
            if not lt_reduct(rt_project(rt, r), locals_by_role[r]):
                bad.append(f"proj {r}")
        for a in sorted(locals_by_role):
            for b in sorted(locals_by_role):
                if a != b and rt_buffer(rt, a, b) != buffers.get((a, b), ()):
                    bad.append(f"buf {a}->{b}")
        if not bad:
            print("\nWITNESS FOUND:", rt)
            sys.exit(0)
        if best is None or len(bad) < best[0]:
            best = (len(bad), bad, rt)
        for _l, rt2 in step_global(rt):
            if rt2 not in seen:
                seen.add(rt2)
                nxt.append(rt2)
    frontier = nxt
print(f"\nno witness in {count} nodes")
print("closest miss:", best[0], best[1])
print("  pendings:", best[2].pendings)
