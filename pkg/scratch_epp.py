import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program, Program, print_choreography
from chorcc.semantics import Config, run
from chorcc.deployment import initial_deployment, dep_to_obj
from chorcc.typecheck import check_program
from chorcc.epp import epp

import json

for name in ("ping", "ring", "file_transfer"):
    prog = parse_program(open(f"programs/{name}.ac").read())
    projected = epp(prog.chor)
    pprog = Program(prog.protocols, prog.placements, projected)
    errs = check_program(pprog)
    print(f"[{name}] projected typecheck: {'OK' if not errs else errs}")

    r_orig = run(Config(prog.chor, initial_deployment(prog.placements)), max_steps=500)
    r_proj = run(Config(projected, initial_deployment(prog.placements)), max_steps=500)
    same = dep_to_obj(r_orig.config.dep) == dep_to_obj(r_proj.config.dep)
    print(f"[{name}] orig {r_orig.status} in {len(r_orig.trace)}, "
          f"proj {r_proj.status} in {len(r_proj.trace)}, same final deployment: {same}")
    if name == "ping":
        print(print_choreography(projected))
