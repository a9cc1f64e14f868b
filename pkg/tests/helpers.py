"""Shared test utilities: seeded random term generation."""
from __future__ import annotations

import random

from rewrite_arena import Term, leaf, number, term

# A small arithmetic/trig signature for property tests.
BINARY_OPS = ("+", "-", "*", "/", "pow")
UNARY_OPS = ("sin", "cos", "neg")
LEAVES = ("x", "y", "z")


def random_term(rng: random.Random, depth: int = 4) -> Term:
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return number(rng.randint(-3, 3))
        return leaf(rng.choice(LEAVES))
    if rng.random() < 0.3:
        return term(rng.choice(UNARY_OPS), random_term(rng, depth - 1))
    op = rng.choice(BINARY_OPS)
    return term(op, random_term(rng, depth - 1), random_term(rng, depth - 1))
