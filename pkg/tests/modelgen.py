"""Random model generator shared by the tests.

Models use two or three bounded variables and modular-arithmetic updates,
so every update stays in its domain.  The partition expression is shifted
so that the initial state always lands in partition 1.

Every command also has a halting alternative of probability ``q`` that sets
``h`` to 1 (a dead end) or 2 (a goal).  Without it random models easily
contain long cycles that are left only with astronomically small
probability, and value iteration then needs billions of sweeps.
"""
from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class GeneratedModel:
    text: str
    seed: int
    partitions: int
    domain: int   # product of the variable domain sizes


def _prob_split(rng: random.Random, n: int) -> list[str]:
    # quarters and tenths keep the printed probabilities exact enough to sum to 1
    if n == 1:
        return ["1"]
    grid = rng.choice([4, 8, 10, 20])
    cuts = sorted(rng.sample(range(1, grid), n - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [grid])]
    return [f"{p}/{grid}" for p in parts]


def random_model(seed: int, max_states: int = 10_000, max_partitions: int = 8,
                 rewards: bool = True, halt: str = "random") -> GeneratedModel:
    """``halt`` is "sink", "goal" or "random"; goal halting keeps expected rewards finite."""
    rng = random.Random(seed)
    if halt == "random":
        halt = rng.choice(["sink", "goal"])
    nvars = rng.choice([2, 2, 3])
    names = ["x", "y", "z"][:nvars]
    budget = max(4, rng.randint(8, max_states // 3))  # h triples the state space
    sizes = []
    for k in range(nvars):
        remaining = nvars - k
        cap = max(2, int(round((budget / max(1, _prod(sizes))) ** (1 / remaining))))
        sizes.append(rng.randint(2, max(2, cap)))
    init = [rng.randrange(s) for s in sizes]
    lines = [f"// random model, seed {seed}",
             f"const double q = {rng.choice(['0.1', '0.15', '0.2', '0.25'])};"]
    for n, s, v in zip(names, sizes, init):
        lines.append(f"var {n} : 0..{s - 1} init {v};")
    lines.append("var h : 0..2 init 0;")

    def term(n, s):
        return f"mod({n} + {rng.randint(1, s)}, {s})" if rng.random() < 0.8 else \
            f"mod({rng.randint(1, 3)}*{n} + {rng.randint(0, s)}, {s})"

    ncmd = rng.randint(1, 4)
    for c in range(ncmd):
        k = rng.randrange(nvars)
        op = rng.choice(["<", "<=", ">", ">=", "!="])
        # the first command is always enabled, so only halted states deadlock
        guard = f"{names[k]} {op} {rng.randrange(sizes[k])} & h=0" \
            if c and rng.random() < 0.85 else "h=0"
        nb = rng.randint(1, 3)
        alts = []
        for p in _prob_split(rng, nb):
            touched = rng.sample(range(nvars), rng.randint(1, nvars))
            ups = " & ".join(f"({names[j]}'={term(names[j], sizes[j])})" for j in sorted(touched))
            alt = f"(1-q)*{p} : {ups}"
            if rewards and rng.random() < 0.5:
                alt += f" {{{rng.randint(0, 3)}}}"
            alts.append(alt)
        alts.append(f"q : (h'={1 if halt == 'sink' else 2})")
        cmd = f"[] {guard} -> " + " + ".join(alts)
        if rewards and rng.random() < 0.5:
            cmd += f" reward {rng.randint(1, 2)}"
        lines.append(cmd + ";")
    # target: a random conjunction of interval tests
    tparts = []
    for j in rng.sample(range(nvars), rng.randint(1, nvars)):
        lo = rng.randrange(sizes[j])
        hi = rng.randint(lo, sizes[j] - 1)
        tparts.append(f"{names[j]} >= {lo} & {names[j]} <= {hi}")
    target = " & ".join(tparts)
    target = f"({target}) & h=0" if halt == "sink" else f"({target}) | h=2"
    lines.append(f"property pmax = Pmax=? [F {target}];")
    lines.append(f"property pmin = Pmin=? [F {target}];")
    lines.append(f"property rmax = Rmax=? [F {target}];")
    lines.append(f"property rmin = Rmin=? [F {target}];")
    k = rng.randint(1, max_partitions)
    coeffs = [rng.randint(0, 5) for _ in names]
    lin = " + ".join(f"{a}*{n}" for a, n in zip(coeffs, names))
    shift = sum(a * v for a, v in zip(coeffs, init))
    lines.append(f"partition mod({lin} - {shift}, {k}) + 1 bound {k};")
    return GeneratedModel("\n".join(lines) + "\n", seed, k, _prod(sizes))


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= x
    return out
