"""Random models and brute-force references shared by the tests."""

import itertools

import numpy as np

from ftbn.bn_model import BayesianNetwork, BoolGate, Node, NoisyAnd, NoisyMax, NoisyOr, TableCpt, Variable
from ftbn.ft_model import AND, KOFN, OR, FaultTree, Gate, PrimaryEvent
from ftbn.reliability import Fixed


def random_tree(rng, n_primaries, n_gates=None):
    """Random monotone fault tree with shared leaves; every node leads to the top."""
    prims = [f"p{i}" for i in range(n_primaries)]
    n_gates = n_gates or int(rng.integers(1, max(2, n_primaries)))
    pool = list(prims)
    unused = set(prims)
    gates = []
    for j in range(n_gates):
        arity = int(rng.integers(2, min(4, len(pool)) + 1))
        # prefer unused nodes so the tree stays connected
        fresh = sorted(unused)
        rng.shuffle(fresh)
        picks = fresh[:arity]
        others = [x for x in pool if x not in picks]
        while len(picks) < arity:
            picks.append(others.pop(int(rng.integers(len(others)))))
        kind = rng.choice([AND, OR, KOFN])
        name = f"g{j}"
        if kind == KOFN:
            gates.append(Gate(name, KOFN, tuple(picks), k=int(rng.integers(1, arity + 1)), n=arity))
        else:
            gates.append(Gate(name, str(kind), tuple(picks)))
        unused -= set(picks)
        unused.add(name)
        pool.append(name)
    if len(unused) == 1 and next(iter(unused)).startswith("g"):
        top = next(iter(unused))
    else:
        top = "top"
        gates.append(Gate(top, str(rng.choice([AND, OR])), tuple(sorted(unused))))
    primaries = [PrimaryEvent(p, Fixed(float(rng.uniform(0.01, 0.6)))) for p in prims]
    return FaultTree(tuple(primaries), tuple(gates), top)


def truth_table(ft):
    """TE value for every assignment; row i sets primary j to bit j of i."""
    n = len(ft.primaries)
    idx = np.arange(2 ** n)
    vals = {pe.id: ((idx >> j) & 1).astype(bool) for j, pe in enumerate(ft.primaries)}
    gates = ft.gate_map

    def value(name):
        if name not in vals:
            g = gates[name]
            ins = np.stack([value(i) for i in g.inputs])
            if g.kind == AND:
                vals[name] = ins.all(axis=0)
            elif g.kind == OR:
                vals[name] = ins.any(axis=0)
            else:
                vals[name] = ins.sum(axis=0) >= g.k
        return vals[name]

    return value(ft.top)


def brute_force_mcs(ft):
    """Minimal sets of primaries forcing the top event, from the full truth table."""
    ids = [pe.id for pe in ft.primaries]
    tt = truth_table(ft)
    models = [frozenset(ids[j] for j in range(len(ids)) if i >> j & 1) for i in np.flatnonzero(tt)]
    models.sort(key=len)
    minimal = []
    for m in models:
        if not any(k <= m for k in minimal):
            minimal.append(m)
    return set(minimal)


def _dirichlet_rows(rng, n_rows, card):
    rows = rng.dirichlet(np.ones(card), size=n_rows)
    rows[:, -1] = 1.0 - rows[:, :-1].sum(axis=1)
    return tuple(tuple(r) for r in np.clip(rows, 0.0, 1.0))


def random_network(rng, n_vars, max_parents=3, multistate=False):
    nodes = []
    cards = {}
    for i in range(n_vars):
        vid = f"v{i:02d}"
        k = int(rng.integers(0, min(i, max_parents) + 1))
        parents = tuple(sorted(rng.choice(i, size=k, replace=False).tolist())) if k else ()
        parents = tuple(f"v{p:02d}" for p in parents)
        pcards = [cards[p] for p in parents]
        all_binary = all(c == 2 for c in pcards)
        kinds = ["table"]
        if parents:
            kinds += ["bool"]
            if all_binary:
                kinds += ["noisy_or", "noisy_and"]
            kinds += ["noisy_max"]
        kind = rng.choice(kinds)
        card = 2
        if kind == "table" and multistate and rng.random() < 0.3:
            card = 3
        states = ("working", "faulty") if card == 2 else ("working", "degraded", "failed")
        if kind == "table":
            n_rows = int(np.prod(pcards)) if parents else 1
            cpt = TableCpt(_dirichlet_rows(rng, n_rows, card))
        elif kind == "bool":
            g = rng.choice(["and", "or", "kofn"])
            cpt = BoolGate(str(g), int(rng.integers(1, len(parents) + 1)) if g == "kofn" else None)
        elif kind == "noisy_or":
            cpt = NoisyOr(tuple(rng.uniform(0, 1, len(parents))), float(rng.uniform(0, 0.2)))
        elif kind == "noisy_and":
            cpt = NoisyAnd(tuple(rng.uniform(0, 1, len(parents))))
        else:
            cpt = NoisyMax(tuple(tuple(rng.uniform(0, 1, c - 1)) for c in pcards), float(rng.uniform(0, 0.2)))
        cards[vid] = card
        nodes.append(Node(Variable(vid, states), parents, cpt))
    return BayesianNetwork(tuple(nodes))


def all_assignments(n):
    return itertools.product((False, True), repeat=n)
