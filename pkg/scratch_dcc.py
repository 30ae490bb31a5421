import sys
sys.path.insert(0, "src")

from chorcc.dcc import (
    parse_network, print_network, run_network, network_canon, data_canon_net,
)
from chorcc.deployment import CensusKeyGen

SRC = '''
service at lB accept boot {
  queue k.A.B;
  out ready({B: {A: k.A.B}}) to boot.A.l via boot.B.A;
  recv k.A.B {
    ping(v);
      out pong(v.n + 1) to boot.A.l via boot.B.A;
  }
}

process p at lA state { k: { A: { l: @lA }, B: { l: @lB } } } {
  queue k.B.A;
  request lB({A: {l: @lA}, B: {l: @lB, A: k.B.A}});
  recv k.B.A {
    ready(h);
      out ping({n: 41}) to k.B.l via h.B.A;
      recv k.B.A {
        pong(r);
          0
      }
  }
}
'''

net = parse_network(SRC)
printed = print_network(net)
net2 = parse_network(printed)
print("roundtrip:", network_canon(net) == network_canon(net2))

res = run_network(net, keygen=CensusKeyGen())
print("status:", res.status)
for line in res.trace:
    print(" ", line)
final = res.network.get("p")
from chorcc.trees import canon_text
print("p state:", canon_text(final.data.state))
print(print_network(res.network))
