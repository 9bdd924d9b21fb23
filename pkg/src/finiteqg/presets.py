"""Ready-made quantum groups.

Function algebras of finite groups (commutative), group von Neumann algebras
(cocommutative), and an eight-dimensional twisted example that is neither.
Coordinates of a function algebra follow the element order passed in; group
algebra coordinates are multimatrix coordinates of the recovered block
structure, with the translation unitaries returned alongside.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .multimatrix import AbstractStarAlgebra, MultiMatrixAlgebra, present_algebra
from .quantumgroup import build_quantum_group


def _group_tables(elems, compose, inverse, identity):
    index = {g: i for i, g in enumerate(elems)}
    n = len(elems)
    mt = np.array([[index[compose(a, b)] for b in elems] for a in elems])
    inv = np.array([index[inverse(a)] for a in elems])
    return n, mt, inv, index[identity]


def function_algebra(elems, compose, inverse, identity, *, name="", seed=0,
                     budget=20736):
    """Functions on a finite group, comultiplied through the multiplication table."""
    n, mt, _, e = _group_tables(elems, compose, inverse, identity)
    alg = MultiMatrixAlgebra([1] * n)
    delta = np.zeros((n * n, n))
    for a in range(n):
        for b in range(n):
            delta[a * n + b, mt[a, b]] = 1.0
    counit = np.zeros(n)
    counit[e] = 1.0
    return build_quantum_group(
        alg, delta, counit, name=name or "functions", seed=seed, budget=budget
    )


def _group_convolution_algebra(elems, compose, inverse, identity, seed):
    n, mt, inv, e = _group_tables(elems, compose, inverse, identity)

    def mul(x, y):
        out = np.zeros(n, dtype=complex)
        np.add.at(out, mt, np.outer(x, y))
        return out

    def star(x):
        out = np.zeros(n, dtype=complex)
        out[inv] = np.conj(x)
        return out

    unit = np.zeros(n, dtype=complex)
    unit[e] = 1.0
    pres = present_algebra(AbstractStarAlgebra(n, mul, star, unit), seed=seed)
    return pres, n


def group_algebra(elems, compose, inverse, identity, *, name="", seed=0,
                  budget=20736):
    """Group von Neumann algebra with its cocommutative comultiplication.

    Returns (G, lam); lam[:, g] holds the coordinates of the translation
    unitary of the g-th element.
    """
    pres, n = _group_convolution_algebra(elems, compose, inverse, identity, seed)
    lam = pres.to_mma
    k = np.column_stack([np.kron(lam[:, g], lam[:, g]) for g in range(n)])
    delta = k @ pres.from_mma
    counit = np.ones(n) @ pres.from_mma
    g = build_quantum_group(
        pres.mma, delta, counit, name=name or "group-algebra", seed=seed,
        budget=budget,
    )
    return g, lam


def trivial_group(*, budget=20736):
    alg = MultiMatrixAlgebra([1])
    return build_quantum_group(
        alg, np.ones((1, 1)), np.ones(1), name="trivial", budget=budget
    )


def _cyclic(n):
    elems = list(range(n))
    return elems, lambda a, b: (a + b) % n, lambda a: (-a) % n, 0


def _sym3():
    elems = list(itertools.permutations(range(3)))

    def compose(p, q):
        return tuple(p[q[i]] for i in range(3))

    def inverse(p):
        out = [0, 0, 0]
        for i, pi in enumerate(p):
            out[pi] = i
        return tuple(out)

    return elems, compose, inverse, (0, 1, 2)


def kac_paljutkin(*, seed=0, budget=20736):
    """The eight-dimensional quantum group that is neither commutative nor
    cocommutative.

    Built as a doubly twisted extension: functions on the Klein four-group H,
    crossed with the order-two coordinate swap t.  The product carries the sign
    cocycle (-1)^(ab) on the swapped fibers, the coproduct the bicharacter
    (-1)^(a d) on its fibers, and the star the matching sign, so both the
    multiplication and the comultiplication are genuinely deformed.  The result
    is self-dual with block sizes (1, 1, 1, 1, 2).
    """
    klein = [(0, 0), (0, 1), (1, 0), (1, 1)]
    idx = {h: i for i, h in enumerate(klein)}
    n = 2 * len(klein)

    def bi(h, x):
        return 2 * idx[h] + x

    def sign(h):
        return (-1.0) ** (h[0] * h[1])

    def mul(xv, yv):
        out = np.zeros(n, dtype=complex)
        for i, c in enumerate(xv):
            if not c:
                continue
            h1, x1 = klein[i // 2], i % 2
            for j, d in enumerate(yv):
                if not d:
                    continue
                h2, x2 = klein[j // 2], j % 2
                if h1 != ((h2[1], h2[0]) if x1 else h2):
                    continue
                coef = sign(h1) if x1 and x2 else 1.0
                out[bi(h1, (x1 + x2) % 2)] += c * d * coef
        return out

    def star(xv):
        out = np.zeros(n, dtype=complex)
        for i, c in enumerate(xv):
            if not c:
                continue
            h, x = klein[i // 2], i % 2
            if x:
                out[bi((h[1], h[0]), 1)] += np.conj(c) * sign(h)
            else:
                out[i] += np.conj(c)
        return out

    unit = np.zeros(n, dtype=complex)
    for h in klein:
        unit[bi(h, 0)] = 1.0
    pres = present_algebra(AbstractStarAlgebra(n, mul, star, unit), seed=seed)

    dabs = np.zeros((n * n, n), dtype=complex)
    for h in klein:
        for x in range(2):
            for h1 in klein:
                h2 = ((h[0] + h1[0]) % 2, (h[1] + h1[1]) % 2)
                coef = (-1.0) ** (h1[0] * h2[1]) if x else 1.0
                dabs[bi(h1, x) * n + bi(h2, x), bi(h, x)] += coef
    eps = np.zeros(n)
    eps[bi((0, 0), 0)] = eps[bi((0, 0), 1)] = 1.0
    delta = np.kron(pres.to_mma, pres.to_mma) @ dabs @ pres.from_mma
    counit = eps @ pres.from_mma
    return build_quantum_group(
        pres.mma, delta, counit, name="kac_paljutkin", seed=seed, budget=budget
    )


def _func_builder(n):
    def build():
        return function_algebra(*_cyclic(n), name=f"func_z{n}")

    return build


_BUILDERS = {
    "trivial": trivial_group,
    "func_s3": lambda: function_algebra(*_sym3(), name="func_s3"),
    "group_s3": lambda: group_algebra(*_sym3(), name="group_s3")[0],
    "kac_paljutkin": kac_paljutkin,
}
for _n in range(2, 9):
    _BUILDERS[f"func_z{_n}"] = _func_builder(_n)


def list_presets():
    return sorted(_BUILDERS)


@lru_cache(maxsize=None)
def preset(name):
    if name not in _BUILDERS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(list_presets())}")
    return _BUILDERS[name]()
