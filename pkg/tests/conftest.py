"""Shared helpers for the test suite."""

import numpy as np

from freeholo.exprlang import Add, Const, Inv, Mul, Neg, Sub, Var


def random_parser_ast(rng, d, depth=4, allow_inv=True):
    """A random tree using only shapes the parser itself can produce.

    Constants are nonnegative reals or nonnegative pure imaginaries (single
    number tokens); negative values only appear through Neg nodes, products
    through Mul. Scalar-times-expression sugar is excluded because the
    printer canonicalizes it away.
    """
    leaf_kinds = ("const", "var")
    node_kinds = ("add", "sub", "mul", "neg") + (("inv",) if allow_inv else ())
    if depth <= 0 or rng.random() < 0.3:
        kind = leaf_kinds[rng.integers(0, len(leaf_kinds))]
        if kind == "var":
            return Var(int(rng.integers(1, d + 1)))
        mag = float(np.round(rng.uniform(0, 4), 3))
        return Const(complex(0, mag) if rng.random() < 0.3 else complex(mag, 0))
    kind = node_kinds[rng.integers(0, len(node_kinds))]
    sub = lambda: random_parser_ast(rng, d, depth - 1, allow_inv)
    if kind == "add":
        return Add(sub(), sub())
    if kind == "sub":
        return Sub(sub(), sub())
    if kind == "mul":
        return Mul(sub(), sub())
    if kind == "neg":
        return Neg(sub())
    return Inv(sub())


def random_graded(seed, d, n, scale=0.4):
    rng = np.random.default_rng(seed)
    from freeholo.freepoly import GradedPoint

    return GradedPoint(
        [
            scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            for _ in range(d)
        ]
    )
