"""Discrete Bayesian networks with symbolic and canonical (noisy) CPTs.

Table rows are ordered by a mixed-radix count over the parents in declared
order, the last parent varying fastest (``itertools.product`` order). Each
row holds one probability per child state.

For the boolean gate and noisy-or/noisy-and CPTs a parent counts as "true"
(faulty) when it is in any state other than its first.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

WORKING = "working"
FAULTY = "faulty"
BINARY_STATES = (WORKING, FAULTY)

ROW_TOL = 1e-12


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    id: str
    states: tuple[str, ...] = BINARY_STATES

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def card(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        """Index of ``state``; binary variables also accept true/false/1/0."""
        if state in self.states:
            return self.states.index(state)
        if self.card == 2:
            alias = {"false": 0, "0": 0, "true": 1, "1": 1}.get(state.lower())
            if alias is not None:
                return alias
        raise NetworkError(f"variable {self.id!r} has no state {state!r} (states: {', '.join(self.states)})")


# ---------------------------------------------------------------- CPT specs

@dataclass(frozen=True)
class TableCpt:
    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(tuple(float(x) for x in r) for r in self.rows))


@dataclass(frozen=True)
class BoolGate:
    kind: str  # "and" | "or" | "kofn"
    k: Optional[int] = None


@dataclass(frozen=True)
class NoisyOr:
    c: tuple[float, ...]
    leak: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))


@dataclass(frozen=True)
class NoisyAnd:
    c: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))


@dataclass(frozen=True)
class NoisyMax:
    """``c[i][j]`` is the activation of parent ``i`` in its state ``j + 1``."""

    c: tuple[tuple[float, ...], ...]
    leak: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", tuple(tuple(float(x) for x in r) for r in self.c))


CptSpec = Union[TableCpt, BoolGate, NoisyOr, NoisyAnd, NoisyMax]

DETERMINISTIC = (BoolGate,)


def prior(p: float) -> TableCpt:
    """Root CPT for a binary variable with P(faulty) = p."""
    return TableCpt(((1.0 - p, p),))


@dataclass(frozen=True)
class Node:
    variable: Variable
    parents: tuple[str, ...] = ()
    cpt: CptSpec = field(default_factory=lambda: prior(0.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))

    @property
    def id(self) -> str:
        return self.variable.id


@dataclass(frozen=True)
class BayesianNetwork:
    nodes: tuple[Node, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def __getitem__(self, var_id: str) -> Node:
        try:
            return self.node_map[var_id]
        except KeyError:
            raise NetworkError(f"unknown variable {var_id!r}") from None

    def __contains__(self, var_id: str) -> bool:
        return var_id in self.node_map

    @property
    def ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def variable(self, var_id: str) -> Variable:
        return self[var_id].variable

    def card(self, var_id: str) -> int:
        return self[var_id].variable.card

    def roots(self) -> list[str]:
        return [n.id for n in self.nodes if not n.parents]

    def children(self, var_id: str) -> list[str]:
        return [n.id for n in self.nodes if var_id in n.parents]

    def sinks(self) -> list[str]:
        has_child = {p for n in self.nodes for p in n.parents}
        return [n.id for n in self.nodes if n.id not in has_child]

    def topological_order(self) -> list[str]:
        """Topological order, ties broken by id; raises on cycles."""
        indeg = {n.id: 0 for n in self.nodes}
        kids: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for p in n.parents:
                if p in kids:
                    kids[p].append(n.id)
                    indeg[n.id] += 1
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for w in kids[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(ready, w)
        if len(order) != len(indeg):
            stuck = sorted(v for v, d in indeg.items() if d > 0)
            raise NetworkError(f"network has a cycle through {', '.join(stuck)}")
        return order

    def sorted(self) -> "BayesianNetwork":
        """Same network with nodes in topological order, ties by id."""
        return BayesianNetwork(tuple(self[v] for v in self.topological_order()))

    def parent_cards(self, var_id: str) -> tuple[int, ...]:
        return tuple(self.card(p) for p in self[var_id].parents)

    @cached_property
    def _expanded(self) -> dict[str, np.ndarray]:
        return {}

    def cpt_array(self, var_id: str) -> np.ndarray:
        """CPT as a read-only array of shape ``(*parent_cards, child_card)``."""
        cached = self._expanded.get(var_id)
        if cached is None:
            node = self[var_id]
            pc = self.parent_cards(var_id)
            cached = expand_cpt(node, pc).reshape(pc + (node.variable.card,))
            cached.setflags(write=False)
            self._expanded[var_id] = cached
        return cached

    def is_deterministic(self, var_id: str) -> bool:
        node = self[var_id]
        if not node.parents:
            return False
        if isinstance(node.cpt, DETERMINISTIC):
            return True
        table = self.cpt_array(var_id)
        return bool(np.all((table == 0.0) | (table == 1.0)))


# ------------------------------------------------------------------ expansion

def _binary_rows(n: int) -> np.ndarray:
    """All parent configurations as 0/1 rows, last parent fastest."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)


def _check_binary_child(node: Node) -> None:
    if node.variable.card != 2:
        raise NetworkError(f"{node.id}: {type(node.cpt).__name__} needs a binary child")


def _check_binary_parents(node: Node, parent_cards) -> None:
    if parent_cards is not None and any(c != 2 for c in parent_cards):
        raise NetworkError(f"{node.id}: {type(node.cpt).__name__} needs binary parents")


def expand_cpt(node: Node, parent_cards: Optional[Sequence[int]] = None) -> np.ndarray:
    """Expand a node's CPT to a full ``(rows, child_states)`` table.

    ``parent_cards`` is required only to check or expand tables over
    multi-state parents of a :class:`BoolGate`; noisy-max reads the parent
    state counts from its parameters.
    """
    cpt = node.cpt
    n = len(node.parents)
    card = node.variable.card
    if parent_cards is not None and len(parent_cards) != n:
        raise NetworkError(f"{node.id}: {len(parent_cards)} parent cardinalities for {n} parents")

    if isinstance(cpt, TableCpt):
        table = np.array(cpt.rows, dtype=float).reshape(len(cpt.rows), -1) if cpt.rows else np.zeros((0, card))
        expected_rows = math.prod(parent_cards) if parent_cards is not None else None
        if table.shape[1] != card:
            raise NetworkError(f"{node.id}: table rows have {table.shape[1]} entries, variable has {card} states")
        if expected_rows is not None and table.shape[0] != expected_rows:
            raise NetworkError(f"{node.id}: table has {table.shape[0]} rows, parents need {expected_rows}")
        if expected_rows is None and n == 0 and table.shape[0] != 1:
            raise NetworkError(f"{node.id}: root table must have exactly one row")
        return table

    _check_binary_child(node)

    if isinstance(cpt, BoolGate):
        if n < 1:
            raise NetworkError(f"{node.id}: boolean gate without parents")
        cards = tuple(parent_cards) if parent_cards is not None else (2,) * n
        configs = np.array(list(itertools.product(*(range(c) for c in cards))), dtype=np.int64)
        true_count = (configs > 0).sum(axis=1)
        if cpt.kind == "and":
            on = true_count == n
        elif cpt.kind == "or":
            on = true_count >= 1
        elif cpt.kind == "kofn":
            if cpt.k is None or not 1 <= cpt.k <= n:
                raise NetworkError(f"{node.id}: k:n gate with k={cpt.k} and {n} parents")
            on = true_count >= cpt.k
        else:
            raise NetworkError(f"{node.id}: unknown boolean gate {cpt.kind!r}")
        p = on.astype(float)
        return np.stack([1.0 - p, p], axis=1)

    if isinstance(cpt, NoisyOr):
        if len(cpt.c) != n:
            raise NetworkError(f"{node.id}: noisy-or has {len(cpt.c)} parameters for {n} parents")
        _check_binary_parents(node, parent_cards)
        configs = _binary_rows(n)
        keep = np.where(configs == 1, 1.0 - np.array(cpt.c), 1.0)
        p = 1.0 - (1.0 - cpt.leak) * keep.prod(axis=1)
        return np.stack([1.0 - p, p], axis=1)

    if isinstance(cpt, NoisyAnd):
        if len(cpt.c) != n:
            raise NetworkError(f"{node.id}: noisy-and has {len(cpt.c)} parameters for {n} parents")
        _check_binary_parents(node, parent_cards)
        configs = _binary_rows(n)
        p = np.where(configs == 0, np.array(cpt.c), 1.0).prod(axis=1)
        return np.stack([1.0 - p, p], axis=1)

    if isinstance(cpt, NoisyMax):
        if len(cpt.c) != n:
            raise NetworkError(f"{node.id}: noisy-max has {len(cpt.c)} parameter rows for {n} parents")
        cards = tuple(len(r) + 1 for r in cpt.c)
        if parent_cards is not None and tuple(parent_cards) != cards:
            raise NetworkError(f"{node.id}: noisy-max parameters imply parent states {cards}, "
                               f"parents have {tuple(parent_cards)}")
        rows = []
        for config in itertools.product(*(range(c) for c in cards)):
            keep = 1.0
            for i, s in enumerate(config):
                if s:
                    keep *= 1.0 - cpt.c[i][s - 1]
            p = 1.0 - (1.0 - cpt.leak) * keep
            rows.append((1.0 - p, p))
        return np.array(rows, dtype=float).reshape(-1, 2)

    raise NetworkError(f"{node.id}: unsupported CPT {cpt!r}")


# ----------------------------------------------------------------- validation

@dataclass(frozen=True)
class BnDiagnostic:
    code: str  # duplicate | states | unresolved | cycle | arity | range | normalization
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def _params(cpt: CptSpec) -> list[float]:
    if isinstance(cpt, NoisyOr):
        return list(cpt.c) + [cpt.leak]
    if isinstance(cpt, NoisyAnd):
        return list(cpt.c)
    if isinstance(cpt, NoisyMax):
        return [x for r in cpt.c for x in r] + [cpt.leak]
    return []


def validate_bn(bn: BayesianNetwork) -> list[BnDiagnostic]:
    """Check every network invariant; an empty list means the network is valid."""
    diags: list[BnDiagnostic] = []
    seen: set[str] = set()
    for node in bn.nodes:
        if node.id in seen:
            diags.append(BnDiagnostic("duplicate", node.id, "variable defined more than once"))
        seen.add(node.id)
        states = node.variable.states
        if len(states) < 2 or len(set(states)) != len(states):
            diags.append(BnDiagnostic("states", node.id, "need at least two distinct state names"))

    resolved = True
    for node in bn.nodes:
        for p in node.parents:
            if p not in seen:
                resolved = False
                diags.append(BnDiagnostic("unresolved", node.id, f"parent {p!r} is not a variable"))
        if len(set(node.parents)) != len(node.parents):
            diags.append(BnDiagnostic("arity", node.id, "parent listed twice"))

    if resolved:
        try:
            bn.topological_order()
        except NetworkError as exc:
            diags.append(BnDiagnostic("cycle", "network", str(exc)))

    for node in bn.nodes:
        bad = [x for x in _params(node.cpt) if not 0.0 <= x <= 1.0]
        if bad:
            diags.append(BnDiagnostic("range", node.id, f"parameters outside [0, 1]: {bad}"))
        if not resolved or len(set(node.variable.states)) < 2:
            continue
        try:
            table = expand_cpt(node, bn.parent_cards(node.id))
        except NetworkError as exc:
            diags.append(BnDiagnostic("arity", node.id, str(exc)))
            continue
        if np.any(table < 0):
            diags.append(BnDiagnostic("range", node.id, "negative table entry"))
        sums = table.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
        if off.size:
            diags.append(BnDiagnostic(
                "normalization", node.id,
                f"row {int(off[0])} sums to {sums[off[0]]!r}" + (f" ({off.size} rows off)" if off.size > 1 else "")))
    return diags


def check_bn(bn: BayesianNetwork) -> BayesianNetwork:
    diags = validate_bn(bn)
    if diags:
        raise NetworkError("; ".join(str(d) for d in diags))
    return bn


def set_dependency(bn: BayesianNetwork, child: str, new_parents: Sequence[str], cpt: CptSpec,
                   states: Optional[Sequence[str]] = None) -> BayesianNetwork:
    """Return a copy of ``bn`` where ``child`` has new parents and CPT.

    ``states`` optionally redefines the child's state list (e.g. turning a
    binary power supply into working / over-voltage / dead).
    """
    old = bn[child]
    variable = Variable(child, tuple(states)) if states is not None else old.variable
    new_node = Node(variable, tuple(new_parents), cpt)
    result = BayesianNetwork(tuple(new_node if n.id == child else n for n in bn.nodes))
    if result == bn:
        return bn
    return check_bn(result)


# ----------------------------------------------------------------------- JSON

def _cpt_to_json(cpt: CptSpec) -> dict:
    if isinstance(cpt, TableCpt):
        return {"type": "table", "rows": [list(r) for r in cpt.rows]}
    if isinstance(cpt, BoolGate):
        out = {"type": cpt.kind}
        if cpt.kind == "kofn":
            out["k"] = cpt.k
        return out
    if isinstance(cpt, NoisyOr):
        return {"type": "noisy_or", "c": list(cpt.c), "leak": cpt.leak}
    if isinstance(cpt, NoisyAnd):
        return {"type": "noisy_and", "c": list(cpt.c)}
    if isinstance(cpt, NoisyMax):
        return {"type": "noisy_max", "c": [list(r) for r in cpt.c], "leak": cpt.leak}
    raise NetworkError(f"cannot serialize {cpt!r}")


def _cpt_from_json(obj: dict, where: str) -> CptSpec:
    kind = obj.get("type")
    try:
        if kind == "table":
            return TableCpt(obj["rows"])
        if kind in ("and", "or"):
            return BoolGate(kind)
        if kind == "kofn":
            return BoolGate("kofn", int(obj["k"]))
        if kind == "noisy_or":
            return NoisyOr(obj["c"], float(obj.get("leak", 0.0)))
        if kind == "noisy_and":
            return NoisyAnd(obj["c"])
        if kind == "noisy_max":
            return NoisyMax(obj["c"], float(obj.get("leak", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkError(f"{where}: malformed {kind} cpt ({exc})") from None
    raise NetworkError(f"{where}: unknown cpt type {kind!r}")


def to_json_obj(bn: BayesianNetwork) -> dict:
    return {"nodes": [
        {"id": n.id, "states": list(n.variable.states), "parents": list(n.parents), "cpt": _cpt_to_json(n.cpt)}
        for n in bn.nodes
    ]}


def dumps(bn: BayesianNetwork) -> str:
    """Serialize with one node object per line."""
    nodes = to_json_obj(bn)["nodes"]
    body = ",\n".join("    " + json.dumps(n) for n in nodes)
    return '{\n  "nodes": [\n' + body + "\n  ]\n}\n"


def from_json_obj(doc: dict) -> BayesianNetwork:
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise NetworkError("BN document must be an object with a 'nodes' list")
    nodes = []
    for i, raw in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        try:
            var = Variable(str(raw["id"]), tuple(raw.get("states", BINARY_STATES)))
            nodes.append(Node(var, tuple(raw.get("parents", ())), _cpt_from_json(raw["cpt"], raw["id"])))
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"{where}: missing or malformed field ({exc})") from None
    return BayesianNetwork(tuple(nodes))


def loads(text: str) -> BayesianNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_json_obj(doc)
