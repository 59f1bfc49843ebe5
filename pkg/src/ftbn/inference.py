"""Exact inference on discrete Bayesian networks.

Variable elimination answers marginal and joint queries; complete diagnoses
(most probable root assignments) come from a best-first search when every
non-root is deterministic and from an exact root joint otherwise.
:func:`enumerate_joint` is a brute-force oracle kept independent of both.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ftbn.bn_model import BayesianNetwork, NetworkError

MAX_STATES = 2 ** 22

Evidence = Mapping[str, str]


class InferenceError(ValueError):
    pass


class ZeroProbabilityEvidence(InferenceError):
    pass


# --------------------------------------------------------------------- factor

@dataclass(frozen=True)
class Factor:
    scope: tuple[str, ...]
    values: np.ndarray  # shape = cardinalities of scope, in order

    def __post_init__(self) -> None:
        if self.values.ndim != len(self.scope):
            raise InferenceError(f"factor over {self.scope} has {self.values.ndim} axes")
        if np.any(self.values < 0):
            raise InferenceError("factor entries must be nonnegative")

    def _expand(self, scope: Sequence[str]) -> np.ndarray:
        present = [v for v in scope if v in self.scope]
        arr = np.transpose(self.values, [self.scope.index(v) for v in present])
        shape = [self.values.shape[self.scope.index(v)] if v in self.scope else 1 for v in scope]
        return arr.reshape(shape)

    def __mul__(self, other: "Factor") -> "Factor":
        scope = self.scope + tuple(v for v in other.scope if v not in self.scope)
        return Factor(scope, self._expand(scope) * other._expand(scope))

    def sum_out(self, var: str) -> "Factor":
        axis = self.scope.index(var)
        return Factor(self.scope[:axis] + self.scope[axis + 1:], self.values.sum(axis=axis))

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        """Fix observed variables, dropping them from the scope."""
        index = tuple(evidence[v] if v in evidence else slice(None) for v in self.scope)
        scope = tuple(v for v in self.scope if v not in evidence)
        return Factor(scope, np.asarray(self.values[index]))

    def transpose(self, scope: Sequence[str]) -> "Factor":
        return Factor(tuple(scope), np.transpose(self.values, [self.scope.index(v) for v in scope]))


def cpt_factor(bn: BayesianNetwork, var: str) -> Factor:
    node = bn[var]
    return Factor(node.parents + (var,), bn.cpt_array(var))


# ------------------------------------------------------------------- evidence

def evidence_indices(bn: BayesianNetwork, evidence: Optional[Evidence]) -> dict[str, int]:
    out = {}
    for var, state in (evidence or {}).items():
        if var not in bn:
            raise InferenceError(f"unknown variable {var!r} in evidence")
        if isinstance(state, (int, np.integer)):
            idx = int(state)
            if not 0 <= idx < bn.card(var):
                raise InferenceError(f"state index {idx} out of range for {var!r}")
        else:
            try:
                idx = bn.variable(var).index(state)
            except NetworkError as exc:
                raise InferenceError(str(exc)) from None
        out[var] = idx
    return out


def _ancestral_set(bn: BayesianNetwork, seeds: Iterable[str]) -> set[str]:
    keep: set[str] = set()
    todo = list(seeds)
    while todo:
        v = todo.pop()
        if v in keep:
            continue
        keep.add(v)
        todo.extend(bn[v].parents)
    return keep


# ------------------------------------------------------- variable elimination

def _min_fill_order(factors: list[Factor], eliminate: set[str]) -> list[str]:
    neighbours: dict[str, set[str]] = {v: set() for v in eliminate}
    for f in factors:
        for v in f.scope:
            if v in neighbours:
                neighbours[v].update(u for u in f.scope if u != v)
    # non-eliminated neighbours still count when measuring fill-in
    graph = {v: set(ns) for v, ns in neighbours.items()}
    order = []
    remaining = set(eliminate)
    while remaining:
        best, best_key = None, None
        for v in sorted(remaining):
            ns = list(graph[v])
            fill = sum(1 for i, a in enumerate(ns) for b in ns[i + 1:]
                       if b not in graph.get(a, ()) and a not in graph.get(b, ()))
            key = (fill, len(ns))
            if best_key is None or key < best_key:
                best, best_key = v, key
        order.append(best)
        ns = graph.pop(best)
        remaining.discard(best)
        for a in ns:
            if a in graph:
                graph[a].discard(best)
                graph[a].update(n for n in ns if n != a)
    return order


def eliminate(bn: BayesianNetwork, query: Sequence[str], evidence: Mapping[str, int]) -> Factor:
    """Unnormalized factor P(query, evidence) by variable elimination.

    Evidence is given as state indices; query variables must not be observed.
    """
    overlap = set(query) & set(evidence)
    if overlap:
        raise InferenceError(f"query variables are observed: {sorted(overlap)}")
    relevant = _ancestral_set(bn, list(query) + list(evidence))
    # fixed order keeps floating-point results schedule-independent
    factors = [cpt_factor(bn, v).reduce(evidence) for v in bn.topological_order() if v in relevant]
    hidden = relevant - set(query) - set(evidence)
    for var in _min_fill_order(factors, hidden):
        touching = [f for f in factors if var in f.scope]
        rest = [f for f in factors if var not in f.scope]
        prod = touching[0]
        for f in touching[1:]:
            prod = prod * f
        factors = rest + [prod.sum_out(var)]
    result = Factor((), np.array(1.0))
    for f in factors:
        result = result * f
    return result.transpose(tuple(query))


def probability_of_evidence(bn: BayesianNetwork, evidence: Optional[Evidence] = None) -> float:
    ev = evidence_indices(bn, evidence)
    return float(eliminate(bn, (), ev).values)


def _require_positive(p: float, evidence) -> None:
    if p <= 0.0:
        shown = ", ".join(f"{k}={v}" for k, v in sorted((evidence or {}).items()))
        raise ZeroProbabilityEvidence(f"evidence has probability zero under the model: {shown}")


def marginal(bn: BayesianNetwork, var: str, evidence: Optional[Evidence] = None) -> dict[str, float]:
    """Posterior distribution of ``var`` given the evidence, as state -> probability."""
    if var not in bn:
        raise InferenceError(f"unknown variable {var!r}")
    ev = evidence_indices(bn, evidence)
    states = bn.variable(var).states
    if var in ev:
        _require_positive(float(eliminate(bn, (), ev).values), evidence)
        return {s: float(i == ev[var]) for i, s in enumerate(states)}
    joint = eliminate(bn, (var,), ev).values
    total = float(joint.sum())
    _require_positive(total, evidence)
    return {s: float(x / total) for s, x in zip(states, joint)}


def query_probability(bn: BayesianNetwork, target: Mapping[str, str],
                      evidence: Optional[Evidence] = None) -> float:
    """P(target | evidence) for a partial assignment ``target``."""
    ev = evidence_indices(bn, evidence)
    tg = evidence_indices(bn, target)
    p_e = float(eliminate(bn, (), ev).values)
    _require_positive(p_e, evidence)
    if any(ev[v] != s for v, s in tg.items() if v in ev):
        return 0.0
    both = {**ev, **tg}
    return float(eliminate(bn, (), both).values) / p_e


# ----------------------------------------------------------------- diagnoses

@dataclass(frozen=True)
class RankedDiagnosis:
    assignment: dict[str, str]  # explanation variable -> state
    posterior: float
    abnormal: tuple[str, ...] = ()  # variables not in their first (working) state


def _diagnosis(bn: BayesianNetwork, roots: Sequence[str], states: Sequence[int], posterior: float) -> RankedDiagnosis:
    return RankedDiagnosis(
        {r: bn.variable(r).states[s] for r, s in zip(roots, states)},
        posterior,
        tuple(r for r, s in zip(roots, states) if s != 0),
    )


def _deterministic_evaluator(bn: BayesianNetwork, roots: Sequence[str]):
    """Flat-table evaluator: root state tuple -> {var: state} for non-roots."""
    plan = []
    for var in bn.topological_order():
        node = bn[var]
        if not node.parents:
            continue
        table = bn.cpt_array(var)
        out = np.argmax(table, axis=-1).ravel().tolist()
        radix = []
        stride = 1
        for p in reversed(node.parents):
            radix.append((p, stride))
            stride *= bn.card(p)
        plan.append((var, radix[::-1], out))

    def run(root_states: Sequence[int]) -> dict[str, int]:
        st = dict(zip(roots, root_states))
        for var, radix, out in plan:
            st[var] = out[sum(st[p] * s for p, s in radix)]
        return st

    return run


def _explanation_variables(bn: BayesianNetwork, ev: dict[str, int]) -> list[str]:
    """Roots plus unobserved non-roots whose CPT is not a 0/1 function."""
    return sorted(v for v in bn.ids if not bn[v].parents or (v not in ev and not bn.is_deterministic(v)))


def top_k_diagnoses(bn: BayesianNetwork, evidence: Optional[Evidence] = None, k: int = 1) -> list[RankedDiagnosis]:
    """The ``k`` most probable complete explanations given the evidence.

    An explanation assigns every root and every unobserved stochastic
    non-root (e.g. a component with a noisy dependence on its supply); all
    remaining variables are functions of these. Sorted by descending
    posterior. Equal posteriors are ordered by the states taken in id order,
    higher state index first, so ``{A, B}`` faulty precedes ``{B, C}``.
    Zero-posterior explanations are never returned.
    """
    if k < 1:
        raise InferenceError("k must be >= 1")
    ev = evidence_indices(bn, evidence)
    p_e = float(eliminate(bn, (), ev).values)
    _require_positive(p_e, evidence)
    roots = sorted(bn.roots())
    explain = _explanation_variables(bn, ev)
    if all(bn.is_deterministic(v) for v in bn.ids if bn[v].parents):
        ranked = _best_first(bn, roots, ev, k)
        results = [(prior / p_e, states) for prior, states in ranked]
    else:
        results = _from_joint(bn, explain, ev, p_e, k)
    results.sort(key=lambda item: (-item[0], tuple(-x for x in item[1])))
    return [_diagnosis(bn, explain, states, post) for post, states in results[:k]]


def _best_first(bn: BayesianNetwork, roots: list[str], ev: dict[str, int], k: int) -> list[tuple[float, tuple]]:
    """Best-first search over root assignments in descending prior order."""
    choices = []
    for r in roots:
        probs = bn.cpt_array(r).ravel().tolist()
        allowed = [ev[r]] if r in ev else range(len(probs))
        choices.append(sorted(((probs[s], s) for s in allowed if probs[s] > 0), key=lambda x: (-x[0], x[1])))
    # best achievable mass for each suffix of roots
    suffix = [1.0] * (len(roots) + 1)
    for i in range(len(roots) - 1, -1, -1):
        suffix[i] = suffix[i + 1] * (choices[i][0][0] if choices[i] else 0.0)
    evaluate = _deterministic_evaluator(bn, roots)
    observed = {v: s for v, s in ev.items() if bn[v].parents}

    found: list[tuple[float, tuple]] = []
    heap = [(-suffix[0], (), (), 1.0)]
    cutoff = None
    while heap:
        neg_bound, states, probs, prefix = heapq.heappop(heap)
        if cutoff is not None and -neg_bound < cutoff * (1 - 1e-12):
            break
        depth = len(states)
        if depth == len(roots):
            # product of sorted factors: equal multisets give bitwise-equal priors
            exact = math.prod(sorted(probs))
            full = evaluate(states)
            if all(full[v] == s for v, s in observed.items()):
                found.append((exact, states))
                if len(found) >= k and cutoff is None:
                    cutoff = exact
            continue
        for p, s in choices[depth]:
            heapq.heappush(heap, (-(prefix * p * suffix[depth + 1]), states + (s,), probs + (p,), prefix * p))
    return found


def _from_joint(bn: BayesianNetwork, roots: list[str], ev: dict[str, int], p_e: float, k: int):
    free = [r for r in roots if r not in ev]
    if math.prod(bn.card(r) for r in free) > MAX_STATES:
        raise InferenceError("too many explanations to rank exactly")
    joint = np.atleast_1d(eliminate(bn, tuple(free), ev).values / p_e)
    flat = joint.ravel()
    positive = np.flatnonzero(flat > 0.0)
    if len(positive) > k:
        # keep everything tied with the k-th best so the caller can order ties
        kth = np.partition(flat[positive], len(positive) - k)[len(positive) - k]
        positive = positive[flat[positive] >= kth * (1.0 - 1e-9)]
    results = []
    for flat_idx in positive.tolist():
        st = dict(zip(free, np.unravel_index(flat_idx, joint.shape) if free else ()))
        st.update({r: ev[r] for r in roots if r in ev})
        results.append((float(flat[flat_idx]), tuple(int(st[r]) for r in roots)))
    return results


# -------------------------------------------------------------------- oracle

@dataclass(frozen=True)
class JointTable:
    """Complete assignments with nonzero mass that agree with the evidence."""

    variables: tuple[str, ...]
    states: np.ndarray  # (rows, len(variables)) state indices
    probs: np.ndarray   # P(assignment), not divided by P(evidence)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def mass(self, target: Mapping[str, int]) -> float:
        mask = np.ones(len(self.probs), dtype=bool)
        for var, s in target.items():
            mask &= self.states[:, self.variables.index(var)] == s
        return float(self.probs[mask].sum())

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(x) for x in row): float(p) for row, p in zip(self.states, self.probs)}


def enumerate_joint(bn: BayesianNetwork, evidence: Optional[Evidence] = None) -> JointTable:
    """Brute-force joint by direct products of CPT entries.

    Assignments are grown one variable at a time in topological order and
    zero-mass branches are dropped, so deterministic nodes cost nothing.
    """
    ev = evidence_indices(bn, evidence)
    order = bn.topological_order()
    col = {v: i for i, v in enumerate(order)}
    states = np.zeros((1, len(order)), dtype=np.int64)
    probs = np.ones(1)
    for var in order:
        node = bn[var]
        table = bn.cpt_array(var)
        card = table.shape[-1]
        rows = table[tuple(states[:, col[p]] for p in node.parents)] if node.parents else np.broadcast_to(table, (len(probs), card))
        choices = [ev[var]] if var in ev else range(card)
        new_states, new_probs = [], []
        for s in choices:
            w = probs * rows[:, s]
            keep = w > 0
            block = states[keep].copy()
            block[:, col[var]] = s
            new_states.append(block)
            new_probs.append(w[keep])
        states = np.concatenate(new_states)
        probs = np.concatenate(new_probs)
        if len(probs) > MAX_STATES:
            raise InferenceError(f"joint state space exceeds {MAX_STATES} assignments")
    return JointTable(tuple(order), states, probs)
