"""Fault tree -> binary Bayesian network."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ftbn.bn_model import BINARY_STATES, BayesianNetwork, BoolGate, Node, Variable, prior
from ftbn.ft_model import AND, KOFN, OR, FaultTree, ValidationError, boolean_eval, validate

__all__ = ["CompilationReport", "CompileError", "compile_tree", "boolean_eval", "forward_propagate"]


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class CompilationReport:
    root_count: int
    node_count: int
    # (gate output, input position) -> root node id
    dedup_map: dict[tuple[str, int], str] = field(default_factory=dict)


def compile_tree(ft: FaultTree, priors: Mapping[str, float]) -> tuple[BayesianNetwork, CompilationReport]:
    """Map ``ft`` to a BN with one root per distinct primary event.

    Gate outputs keep their event names as variable ids. Nodes come out in
    topological order with ties broken by id, so serialized output is stable.
    """
    diags = validate(ft)
    if diags:
        raise ValidationError(diags)
    missing = sorted(pid for pid in ft.primary_map if pid not in priors)
    if missing:
        raise CompileError(f"no prior for primary events: {', '.join(missing)}")

    nodes: list[Node] = []
    for pe in ft.primaries:
        p = float(priors[pe.id])
        if not 0.0 <= p <= 1.0:
            raise CompileError(f"prior for {pe.id} outside [0, 1]: {p!r}")
        nodes.append(Node(Variable(pe.id, BINARY_STATES), (), prior(p)))

    dedup: dict[tuple[str, int], str] = {}
    for g in ft.gates:
        parents = tuple(dict.fromkeys(g.inputs))
        for pos, name in enumerate(g.inputs):
            if name in ft.primary_map:
                dedup[(g.output, pos)] = name
        if g.kind == KOFN:
            if len(parents) != len(g.inputs):
                raise CompileError(f"{g.output}: repeated input under a k:n gate")
            cpt = BoolGate("kofn", g.k)
        else:
            cpt = BoolGate(AND if g.kind == AND else OR)
        nodes.append(Node(Variable(g.output, BINARY_STATES), parents, cpt))

    bn = BayesianNetwork(tuple(nodes)).sorted()
    report = CompilationReport(root_count=len(ft.primaries), node_count=len(bn.nodes), dedup_map=dedup)
    return bn, report


def forward_propagate(bn: BayesianNetwork, roots: Mapping[str, int]) -> dict[str, int]:
    """Push a complete root assignment (state indices) through deterministic nodes.

    Every non-root CPT row reached must put all its mass on one state.
    """
    names = bn.roots()
    missing = [r for r in names if r not in roots]
    if missing:
        raise CompileError(f"roots without an assigned state: {', '.join(missing)}")
    batch = propagate_many(bn, {r: np.array([int(roots[r])]) for r in names})
    return {v: int(col[0]) for v, col in batch.items()}


def propagate_many(bn: BayesianNetwork, roots: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Vectorized :func:`forward_propagate` over equally long arrays of root states."""
    states: dict[str, np.ndarray] = {}
    for var in bn.topological_order():
        node = bn[var]
        if not node.parents:
            states[var] = np.asarray(roots[var], dtype=np.int64)
            continue
        rows = bn.cpt_array(var)[tuple(states[p] for p in node.parents)]
        hits = rows == 1.0
        if not np.all(hits.sum(axis=-1) == 1):
            raise CompileError(f"node {var!r} is not deterministic for some parent configuration")
        states[var] = np.argmax(hits, axis=-1)
    return states
