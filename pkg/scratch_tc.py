import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program
from chorcc.semantics import Config, enumerate_redexes, effect_text
from chorcc.deployment import initial_deployment
from chorcc.typecheck import (
    initial_env, check_program, advance_env, check_running,
)

for name in ("ping", "ring", "file_transfer"):
    src = open(f"programs/{name}.ac").read()
    prog = parse_program(src)
    errs = check_program(prog)
    print(f"[{name}] static: {'OK' if not errs else errs}")
    if errs:
        continue

    env = initial_env(prog)
    cfg = Config(prog.chor, initial_deployment(prog.placements))
    errs0 = check_running(env, cfg.chor, cfg.dep)
    print(f"[{name}] step 0 running: {'OK' if not errs0 else errs0}")

    step = 0
    while True:
        redexes = enumerate_redexes(cfg)
        if not redexes:
            break
        eff, cfg = redexes[0].fire()
        env = advance_env(env, eff)
        errs = check_running(env, cfg.chor, cfg.dep)
        step += 1
        tag = "OK" if not errs else errs
        if errs:
            print(f"[{name}] step {step} {effect_text(eff)}: {tag}")
            break
        if step > 200:
            print(f"[{name}] runaway")
            break
    else:
        pass
    if not redexes:
        print(f"[{name}] finished after {step} steps, all states well-typed")
