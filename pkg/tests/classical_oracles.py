"""Closed-form classical expectations used as independent oracles.

For the function algebra of a finite group the invariant-functional Gram
matrix is the identity, so GNS vectors are the coordinate basis and the
regular unitaries are the permutation matrices written out here directly from
the group law.  Group utilities are duplicated on purpose so the oracle does
not lean on the package.
"""

import itertools

import numpy as np


def cyclic(n):
    return list(range(n)), lambda a, b: (a + b) % n, lambda a: (-a) % n, 0


def sym3():
    elems = list(itertools.permutations(range(3)))

    def compose(p, q):
        return tuple(p[q[i]] for i in range(3))

    def inverse(p):
        out = [0, 0, 0]
        for i, pi in enumerate(p):
            out[pi] = i
        return tuple(out)

    return elems, compose, inverse, (0, 1, 2)


def _tables(elems, compose, inverse):
    index = {g: i for i, g in enumerate(elems)}
    n = len(elems)
    mt = [[index[compose(a, b)] for b in elems] for a in elems]
    inv = [index[inverse(a)] for a in elems]
    return n, mt, inv


def _perm_unitary(n, rule):
    m = np.zeros((n * n, n * n))
    for p in range(n):
        for q in range(n):
            a, b = rule(p, q)
            m[a * n + b, p * n + q] = 1.0
    return m


def mult_unitary(group):
    """(p, q) -> (p, pq) on coordinate index pairs."""
    elems, compose, inverse, _ = group
    n, mt, _ = _tables(elems, compose, inverse)
    return _perm_unitary(n, lambda p, q: (p, mt[p][q]))


def right_unitary(group):
    """(p, q) -> (p q^{-1}, q)."""
    elems, compose, inverse, _ = group
    n, mt, inv = _tables(elems, compose, inverse)
    return _perm_unitary(n, lambda p, q: (mt[p][inv[q]], q))


def dual_unitary(group):
    """(a, b) -> (b^{-1} a, b)."""
    elems, compose, inverse, _ = group
    n, mt, inv = _tables(elems, compose, inverse)
    return _perm_unitary(n, lambda a, b: (mt[inv[b]][a], b))


def diagonal_pinch(n):
    """Expectation of n x n matrices onto the diagonal, on row-major coordinates."""
    e = np.zeros((n * n, n * n))
    for i in range(n):
        e[i * n + i, i * n + i] = 1.0
    return e


def coset_space(group, subgroup_elems):
    """Left cosets g H and the translation action table a . (g H) = (a g) H."""
    elems, compose, inverse, identity = group
    index = {g: i for i, g in enumerate(elems)}
    seen = {}
    cosets = []
    for g in elems:
        key = frozenset(index[compose(g, h)] for h in subgroup_elems)
        if key not in seen:
            seen[key] = len(cosets)
            cosets.append(key)
    reps = [elems[min(c)] for c in cosets]
    act = [[seen[frozenset(index[compose(compose(a, r), h)]
                           for h in subgroup_elems)] for r in reps]
           for a in elems]
    return len(cosets), act


def coset_translation_coaction(group, subgroup_elems):
    """alpha(e_c) = sum over (g, y) with g . y = c of e_g (x) e_y."""
    elems = group[0]
    n = len(elems)
    m, act = coset_space(group, subgroup_elems)
    alpha = np.zeros((n * m, m))
    for g in range(n):
        for y in range(m):
            alpha[g * m + y, act[g][y]] = 1.0
    return m, alpha


def shift_implementer_pattern(n):
    """Entry support of the translation implementer on C(Z_n): block a is the
    shift by a."""
    blocks = []
    for a in range(n):
        s = np.zeros((n, n))
        for j in range(n):
            s[(j - a) % n, j] = 1.0
        blocks.append(s)
    return blocks


def walk_matrix(group, mu):
    """Transition matrix of the right-translation chain f(x) -> sum_y mu(y) f(xy)."""
    elems, compose, inverse, _ = group
    n, mt, _ = _tables(elems, compose, inverse)
    t = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            t[x, mt[x][y]] += mu[y]
    return t


def walk_closure(group, support):
    """Subgroup generated by the support indices, with left-coset indicators.

    Returns (subgroup element indices, coset count, indicator matrix): the
    chain's recurrent classes are the left cosets of the generated subgroup,
    so its fixed functions are exactly the indicator span.
    """
    elems, compose, inverse, identity = group
    index = {g: i for i, g in enumerate(elems)}
    gen = {identity} | {elems[s] for s in support}
    while True:
        new = {compose(a, b) for a in gen for b in gen}
        if new <= gen:
            break
        gen |= new
    sub = sorted(index[h] for h in gen)
    m, act = coset_space(group, [elems[i] for i in sub])
    ind = np.zeros((len(elems), m))
    for gi in range(len(elems)):
        ind[gi, act[gi][0]] = 1.0
    return sub, m, ind
