import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program
from chorcc.compiler import compile_network
from chorcc.dcc import print_network, run_network, data_canon_net
from chorcc.deployment import CensusKeyGen, initial_deployment
from chorcc.semantics import Config, run

for name in ("ping", "ring", "file_transfer"):
    src = open(f"programs/{name}.ac").read()
    prog = parse_program(src)
    net = compile_network(prog)
    if name == "ping":
        print(print_network(net))
    res = run_network(net, keygen=CensusKeyGen(), max_steps=500)
    ac = run(Config(prog.chor, initial_deployment(prog.placements)),
             keygen=CensusKeyGen(), max_steps=500)

    dcc_data = data_canon_net(res.network)
    ac_rows = []
    from chorcc.trees import canon_text
    for _, p in ac.config.dep.procs:
        queues = tuple(
            (canon_text(k), tuple((op, canon_text(t)) for op, t in msgs))
            for k, msgs in p.queues
        )
        ac_rows.append((p.loc, canon_text(p.state), queues))
    ac_data = tuple(sorted(ac_rows))

    print(f"{name}: dcc={res.status} ({len(res.trace)} steps) "
          f"ac={ac.status} ({len(ac.trace)} steps) data_match={dcc_data == ac_data}")
    if dcc_data != ac_data:
        print("  DCC:", dcc_data)
        print("  AC :", ac_data)
