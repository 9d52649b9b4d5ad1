"""Random well-formed model texts for parser round-trip testing."""

from __future__ import annotations

import random


def _expr(rng: random.Random, ints: list[str], depth: int = 0) -> str:
    roll = rng.random()
    if depth > 2 or roll < 0.35 or not ints:
        return str(rng.randint(-3, 9)) if rng.random() < 0.2 else str(rng.randint(0, 9))
    if roll < 0.6:
        return rng.choice(ints)
    if roll < 0.7:
        return f"-{_expr(rng, ints, depth + 1)}"
    if roll < 0.8:
        return f"({_expr(rng, ints, depth + 1)})"
    op = rng.choice(["+", "-", "*", "/", "%"])
    return f"{_expr(rng, ints, depth + 1)} {op} {_expr(rng, ints, depth + 1)}"


def _clock_cmp(rng, clocks):
    x = rng.choice(clocks)
    op = rng.choice(["<", "<=", "==", ">=", ">"])
    c = rng.randint(0, 12)
    if len(clocks) > 1 and rng.random() < 0.2:
        y = rng.choice([k for k in clocks if k != x])
        return f"{x} - {y} {op} {c}"
    if rng.random() < 0.15:
        return f"{c} {op} {x}"
    return f"{x} {op} {c}"


def _int_cmp(rng, ints):
    return f"{_expr(rng, ints)} {rng.choice(['<', '<=', '==', '>=', '>'])} {_expr(rng, ints)}"


def _ws(rng) -> str:
    return rng.choice([" ", "  ", "\n  ", " // note\n  "])


def random_model(rng: random.Random) -> str:
    clocks = [f"c{k}" for k in range(rng.randint(0, 3))]
    ints = [f"v{k}" for k in range(rng.randint(0, 2))]
    chans = [f"ch{k}" for k in range(rng.randint(0, 3))]
    out = []
    if clocks:
        out.append(f"clock {', '.join(clocks)};")
    for v in ints:
        lo = rng.randint(-5, 0)
        out.append(f"int[{lo},{lo + rng.randint(0, 10)}] {v};")
    if chans:
        split = rng.randint(0, len(chans))
        if chans[:split]:
            out.append(f"chan {', '.join(chans[:split])};")
        if chans[split:]:
            out.append(f"broadcast chan {', '.join(chans[split:])};")
    procs = [f"P{k}" for k in range(rng.randint(1, 3))]
    for p in procs:
        locs = [f"l{k}" for k in range(rng.randint(1, 4))]
        body = []
        for l in locs:
            kind = rng.choice(["", "", "urgent ", "committed "])
            inv = ""
            if clocks and rng.random() < 0.4:
                conj = [f"{rng.choice(clocks)} {rng.choice(['<', '<='])} {rng.randint(0, 12)}"
                        for _ in range(rng.randint(1, 2))]
                inv = " inv " + " && ".join(conj)
            body.append(f"{kind}loc {l}{inv};")
        body.append(f"init {rng.choice(locs)};")
        for _ in range(rng.randint(0, 4)):
            parts = []
            if rng.random() < 0.5 and (clocks or ints):
                conj = []
                for _ in range(rng.randint(1, 3)):
                    if clocks and (not ints or rng.random() < 0.5):
                        conj.append(_clock_cmp(rng, clocks))
                    else:
                        conj.append(_int_cmp(rng, ints))
                parts.append("guard " + " && ".join(conj) + ";")
            if chans and rng.random() < 0.5:
                parts.append(f"sync {rng.choice(chans)}{rng.choice('!?')};")
            if rng.random() < 0.5 and (clocks or ints):
                ups = []
                for _ in range(rng.randint(1, 2)):
                    if clocks and (not ints or rng.random() < 0.5):
                        ups.append(f"{rng.choice(clocks)} {rng.choice([':=', '='])} {rng.randint(0, 5)}")
                    else:
                        ups.append(f"{rng.choice(ints)} := {_expr(rng, ints)}")
                parts.append("assign " + ", ".join(ups) + ";")
            body.append(f"{rng.choice(locs)} -> {rng.choice(locs)} {{{_ws(rng)}{_ws(rng).join(parts)} }}")
        out.append(f"process {p} {{\n  " + "\n  ".join(body) + "\n}")
    chosen = rng.sample(procs, rng.randint(1, len(procs)))
    out.append(f"system {', '.join(chosen)};")
    return "\n".join(out) + "\n"
