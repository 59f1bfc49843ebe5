"""Minimal cut sets and their unreliability scores."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from ftbn.bn_model import FAULTY, WORKING, BayesianNetwork
from ftbn.ft_model import AND, OR, FaultTree, ValidationError, validate
from ftbn.inference import marginal, query_probability

Family = set[frozenset[str]]


@dataclass(frozen=True, order=True)
class CutSet:
    members: tuple[str, ...]

    def __post_init__(self) -> None:
        members = tuple(sorted(set(self.members)))
        if not members:
            raise ValueError("a cut set needs at least one member")
        object.__setattr__(self, "members", members)

    @property
    def order(self) -> int:
        return len(self.members)

    def __str__(self) -> str:
        return "{" + ", ".join(self.members) + "}"


@dataclass(frozen=True)
class ScoredCutSet:
    cutset: CutSet
    unreliability: float
    posterior_unreliability: float
    diagnosis_posterior: float


def minimize(family: Iterable[frozenset[str]]) -> Family:
    """Drop every set that strictly contains another set of the family."""
    kept: list[frozenset[str]] = []
    for s in sorted(set(family), key=lambda s: (len(s), sorted(s))):
        if not any(k <= s for k in kept):
            kept.append(s)
    return set(kept)


def _and(families: list[Family]) -> Family:
    result: Family = {frozenset()}
    for fam in families:
        result = minimize(a | b for a in result for b in fam)
    return result


def minimal_cut_sets(ft: FaultTree) -> list[CutSet]:
    """Bottom-up composition of cut-set families with minimization at every gate.

    Sorted by order, then lexicographically by member ids.
    """
    diags = validate(ft)
    if diags:
        raise ValidationError(diags)
    gates = ft.gate_map
    memo: dict[str, Family] = {}

    def family(name: str) -> Family:
        if name in memo:
            return memo[name]
        if name not in gates:
            fam = {frozenset([name])}
        else:
            g = gates[name]
            kids = [family(i) for i in g.inputs]
            if g.kind == OR:
                fam = minimize(itertools.chain.from_iterable(kids))
            elif g.kind == AND:
                fam = _and(kids)
            else:
                fam = minimize(itertools.chain.from_iterable(
                    _and(list(combo)) for combo in itertools.combinations(kids, g.k)))
        memo[name] = fam
        return fam

    return sorted((CutSet(tuple(s)) for s in family(ft.top)), key=lambda c: (c.order, c.members))


def unreliability(cs: CutSet, priors: Mapping[str, float]) -> float:
    """Probability that every member has failed, assuming independence."""
    missing = [m for m in cs.members if m not in priors]
    if missing:
        raise KeyError(f"no prior for {', '.join(missing)}")
    return math.prod(sorted(priors[m] for m in cs.members))


def score_cut_sets(ft: FaultTree, bn: BayesianNetwork, priors: Mapping[str, float]) -> list[ScoredCutSet]:
    """Unreliability, unreliability given TE, and the posterior of the matching
    complete diagnosis (members faulty, every other primary working) given TE.

    ``bn`` must be the compiled form of ``ft`` with the same priors. Sorted by
    descending unreliability, ties lexicographic.
    """
    evidence = {ft.top: FAULTY}
    p_top = marginal(bn, ft.top)[FAULTY]
    primaries = ft.primary_ids
    scored = []
    for cs in minimal_cut_sets(ft):
        u = unreliability(cs, priors)
        members = set(cs.members)
        diagnosis = {p: (FAULTY if p in members else WORKING) for p in primaries}
        scored.append(ScoredCutSet(cs, u, u / p_top, query_probability(bn, diagnosis, evidence)))
    scored.sort(key=lambda s: (-s.unreliability, s.cutset.members))
    return scored
