"""Shared test utilities: random circuit corpora and independent oracles."""

import itertools
import random

from idcert.circuit import ADD, CONST, INV, MUL, VAR, Circuit


def random_circuit(store, rng, size, var_names=("x", "y", "z"), p_div=0.0,
                   const_pool=(0, 1, 2)):
    """Grow a random DAG with `size` gate nodes; returns the last node built."""
    leaves = [store.var(v) for v in var_names]
    leaves += [store.const(c) for c in const_pool]
    nodes = list(leaves)
    root = rng.choice(nodes)
    for _ in range(size):
        r = rng.random()
        if r < p_div:
            c = rng.choice(nodes)
            nodes.append(store.inv(c))
        elif r < p_div + (1 - p_div) / 2:
            nodes.append(store.add(rng.choice(nodes), rng.choice(nodes)))
        else:
            nodes.append(store.mul(rng.choice(nodes), rng.choice(nodes)))
        root = nodes[-1]
    return root


def unfold_tree(store, i):
    """Explicit formula tree of a node, as nested tuples (the slow oracle)."""
    k = store.kind[i]
    if k == CONST:
        return ("const", store.a[i])
    if k == VAR:
        return ("var", store.a[i])
    if k == INV:
        return ("inv", unfold_tree(store, store.a[i]))
    op = "add" if k == ADD else "mul"
    return (op, unfold_tree(store, store.a[i]), unfold_tree(store, store.b[i]))


def leibniz_det(fd, n, entry):
    """Determinant as {monomial: coeff} via the permutation expansion.

    entry(i, j) gives the variable name of the (i, j) slot (0-based).
    """
    from idcert.pit import SparsePoly

    acc = SparsePoly(fd, {})
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n)
                         if perm[a] > perm[b])
        sign = fd.one() if inversions % 2 == 0 else fd.neg(fd.one())
        mono = tuple(sorted((entry(i, perm[i]), 1) for i in range(n)))
        term = SparsePoly(fd, {mono: sign})
        acc = acc.add(term)
    return acc


def random_point(fd, names, rng):
    return {v: fd.rand(rng) for v in names}
