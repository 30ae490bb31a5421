import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program, print_choreography
from chorcc.compiler import compile_network
from chorcc.dcc import (
    data_canon_net, enumerate_network, network_canon, network_terminated,
    print_network,
)
from chorcc.deployment import CensusKeyGen, initial_deployment
from chorcc.graphs import build_graph, dep_data_canon, _reach_data
from chorcc.semantics import effect_text

prog = parse_program(open("programs/file_transfer.ac").read())
keygen = CensusKeyGen()
dep0 = initial_deployment(prog.placements)
src = build_graph(prog.chor, dep0)
net0 = compile_network(prog)

rel = {src.initial: {network_canon(net0): net0}}
worklist = [src.initial]
done = set()
bad = None
while worklist and bad is None:
    c = worklist.pop()
    for eff, c2 in src.edges.get(c, ()):
        target = dep_data_canon(c2.dep)
        for key, net in list(rel.get(c, {}).items()):
            if (c2, key) in done:
                continue
            done.add((c2, key))
            found, trouble, hit = _reach_data(net, target, keygen, 4000)
            if not found:
                bad = (c, eff, c2, net, target, trouble, hit)
                break
            bucket = rel.setdefault(c2, {})
            fresh = False
            for m in found:
                mk = network_canon(m)
                if mk not in bucket:
                    bucket[mk] = m
                    fresh = True
            if fresh and c2 not in worklist:
                worklist.append(c2)
        if bad:
            break

c, eff, c2, net, target, trouble, hit = bad
print("FAILING EFFECT:", effect_text(eff))
print("budget hit:", hit, "trouble:", trouble[:3])
print("\nSOURCE NODE chor:")
print(print_choreography(c.chor))
print("\nTARGET image rows:")
for row in target:
    print("  ", row)
print("\nSTART net data rows:")
for row in data_canon_net(net):
    print("  ", row)
print("\nSTART net:")
print(print_network(net))
