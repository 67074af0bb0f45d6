"""Random smooth expression trees for derivative checks."""

import numpy as np

from exsphere import jets

UNARY = ("sin", "cos", "exp_bounded", "atan", "sqrt_shifted", "recip_shifted", "square")
BINARY = ("add", "sub", "mul", "div_shifted")


def _unary(name, a):
    if name == "sin":
        return jets.sin(a)
    if name == "cos":
        return jets.cos(a)
    if name == "exp_bounded":
        return jets.exp(jets.sin(a))
    if name == "atan":
        return jets.atan(a)
    if name == "sqrt_shifted":
        return jets.sqrt(a * a + 1.0)
    if name == "recip_shifted":
        return 1.0 / (a * a + 1.5)
    return a * a


def _binary(name, a, b):
    if name == "add":
        return a + b
    if name == "sub":
        return a - b
    if name == "mul":
        return a * b
    return a / (b * b + 1.0)


def random_expression(seed: int, nvars: int = 3, depth: int = 4):
    """A random smooth scalar function built from the jets elementary set.

    The same callable evaluates on plain arrays and on jets, which is what the
    finite-difference comparison needs.
    """
    rng = np.random.default_rng(seed)

    def build(d):
        if d == 0 or rng.random() < 0.2:
            if rng.random() < 0.8:
                i = int(rng.integers(nvars))
                c = float(rng.uniform(0.5, 1.5))
                return lambda x, i=i, c=c: x[i] * c
            c = float(rng.uniform(-1, 1))
            return lambda x, c=c: c + 0.0 * x[0]
        if rng.random() < 0.5:
            name = UNARY[int(rng.integers(len(UNARY)))]
            f = build(d - 1)
            return lambda x, f=f, name=name: _unary(name, f(x))
        name = BINARY[int(rng.integers(len(BINARY)))]
        f, g = build(d - 1), build(d - 1)
        return lambda x, f=f, g=g, name=name: _binary(name, f(x), g(x))

    return build(depth)

