import sys
sys.path.insert(0, "src"); sys.path.insert(0, "tests")
from corpus import corpus
from chorcc.typecheck import check_program
from chorcc.parser import print_program, parse_program
from chorcc.deployment import initial_deployment
from chorcc.semantics import Config, run
from chorcc.ast import Inact
from chorcc.semantics import normalize

bad = 0
for seed, prog in corpus(24):
    errs = check_program(prog)
    if errs:
        bad += 1
        print(f"seed {seed}: TYPE ERRORS: {errs[:2]}")
        continue
    # round-trip through the printer
    text = print_program(prog)
    prog2 = parse_program(text)
    errs2 = check_program(prog2)
    if errs2:
        bad += 1
        print(f"seed {seed}: reparse type errors: {errs2[:2]}")
        continue
    r = run(Config(prog.chor, initial_deployment(prog.placements)), max_steps=2000)
    term = isinstance(normalize(r.config.chor), Inact)
    print(f"seed {seed}: ok, run={r.status} steps={len(r.trace)} term0={term}")
    if r.status != "terminated":
        bad += 1
        print("   trace tail:", r.trace[-3:])
print("bad:", bad)
