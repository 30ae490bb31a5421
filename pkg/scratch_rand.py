import random
import sys
sys.path.insert(0, "src")

from chorcc.parser import parse_program
from chorcc.semantics import Config, enumerate_redexes, effect_text
from chorcc.deployment import initial_deployment
from chorcc.typecheck import initial_env, advance_env, check_running

prog = parse_program(open("programs/file_transfer.ac").read())

for seed in range(12):
    rng = random.Random(seed)
    env = initial_env(prog)
    cfg = Config(prog.chor, initial_deployment(prog.placements))
    step = 0
    ok = True
    while True:
        redexes = enumerate_redexes(cfg)
        if not redexes:
            break
        eff, cfg = rng.choice(redexes).fire()
        env = advance_env(env, eff)
        errs = check_running(env, cfg.chor, cfg.dep)
        step += 1
        if errs:
            print(f"seed {seed} step {step} {effect_text(eff)}: {errs}")
            ok = False
            break
        if step > 300:
            print(f"seed {seed}: runaway")
            ok = False
            break
    if ok:
        print(f"seed {seed}: {step} steps, all states well-typed")
