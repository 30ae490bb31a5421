import sys, time
sys.path.insert(0, "src")
from chorcc.parser import parse_program
from chorcc.graphs import check_epp_correspondence, check_compile_correspondence

for name in ["ping", "ring", "file_transfer"]:
    src = open(f"programs/{name}.ac").read()
    prog = parse_program(src)
    t0 = time.time()
    e = check_epp_correspondence(prog)
    t1 = time.time()
    c = check_compile_correspondence(prog)
    t2 = time.time()
    print(f"{name}: epp={e.verdict} ({e.src_nodes}/{e.tgt_nodes}, {t1-t0:.2f}s) "
          f"compile={c.verdict} ({c.src_nodes} nodes, {c.tgt_nodes} searches, {t2-t1:.2f}s)")
    for ln in e.lines + c.lines:
        print("   ", ln)
