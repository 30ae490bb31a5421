import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program, print_choreography
from chorcc.epp import epp, prunes
from chorcc.semantics import Config, normalize, enumerate_redexes
from chorcc.deployment import CensusKeyGen, initial_deployment
from chorcc.graphs import build_graph, _expected_steps

prog = parse_program(open("programs/ping.ac").read())
dep0 = initial_deployment(prog.placements)

src = build_graph(prog.chor, dep0)
tgt = build_graph(epp(prog.chor), dep0)

# walk the unique source path, tracking the projected twin
c = src.initial
p = tgt.initial
while src.edges[c]:
    eff, c2 = src.edges[c][0]
    seq = _expected_steps(eff)
    frontier = {p}
    for step in seq:
        frontier = {q2 for q in frontier for e2, q2 in tgt.edges[q] if e2 == step}
    print("effect:", eff[0], "frontier:", len(frontier))
    q2 = next(iter(frontier))
    want = epp(normalize(c2.chor))
    print("  projected residual:")
    print("   ", print_choreography(q2.chor).replace("\n", "\n    "))
    print("  epp of source residual:")
    print("   ", print_choreography(want).replace("\n", "\n    "))
    print("  prunes:", prunes(q2.chor, want))
    c, p = c2, q2
