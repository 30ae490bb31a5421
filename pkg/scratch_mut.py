import sys
sys.path.insert(0, "src")

from dataclasses import replace

from chorcc.parser import parse_program
from chorcc.compiler import compile_network
from chorcc.dcc import DService, Input, Network, Output, run_network
from chorcc.deployment import BrokenKeyGen, CensusKeyGen
from chorcc.graphs import check_compile_correspondence
import chorcc.graphs as graphs
import chorcc.compiler as compiler

prog = parse_program(open("programs/ping.ac").read())

# mutation: acceptor never reports its minted keys back
def strip_sync_reply(net: Network) -> Network:
    def strip(b):
        if isinstance(b, Output) and b.op == "$sync":
            return b.cont
        return b
    services = []
    for s in net.services:
        body = s.body
        # walk past the queue creations to the reply
        from chorcc.dcc import CQueue
        stack = []
        while isinstance(body, CQueue):
            stack.append(body)
            body = body.cont
        body = strip(body)
        for q in reversed(stack):
            body = CQueue(q.path, body)
        services.append(DService(s.loc, s.var, body))
    return Network(net.procs, tuple(services))

net = strip_sync_reply(compile_network(prog))
res = run_network(net, keygen=CensusKeyGen(), max_steps=200)
print("mutated run status:", res.status)

orig_compile = compiler.compile_network
compiler.compile_network = lambda p: strip_sync_reply(orig_compile(p))
graphs.compile_network = compiler.compile_network
r = check_compile_correspondence(prog)
print("mutated correspondence:", r.verdict)
for ln in r.lines[:4]:
    print("  ", ln)
compiler.compile_network = orig_compile
graphs.compile_network = orig_compile

# mutation: key minting ignores the census
src2 = '''
protocol Left at lB roles A starter, B@lB {
  A -> B { hello(str); B -> A { yo(str); end } }
}

protocol Right at lC roles A starter, B@lC {
  A -> B { hello(str); B -> A { yo(str); end } }
}

deployment {
  p1 at lA state { m: "x" }
  p2 at lA state { m: "y" }
}

start k1: p1[A] <-> lB.q1[B];
start k2: p2[A] <-> lC.q2[B];
k1: p1[A].m -> q1[B].hello(v);
k2: p2[A].m -> q2[B].hello(w);
k1: q1[B].v -> p1[A].yo(r1);
k2: q2[B].w -> p2[A].yo(r2);
0
'''
prog2 = parse_program(src2)
net2 = compile_network(prog2)
good = run_network(net2, keygen=CensusKeyGen(), max_steps=400)
print("census run:", good.status)
bad = run_network(net2, keygen=BrokenKeyGen(), max_steps=400)
print("broken keygen run:", bad.status)
