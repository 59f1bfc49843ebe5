"""Fault-tree data model, DSL parser/serializer and structural validation.

DSL grammar (UTF-8, ``;``-terminated statements, ``#`` line comments)::

    primary IDENT (rate = FLOAT | prob = FLOAT) [class = IDENT] ;
    event IDENT = and(IDENT, IDENT, ...) ;
    event IDENT = or(IDENT, IDENT, ...) ;
    event IDENT = K of N (IDENT, IDENT, ...) ;
    top IDENT ;

``class=`` is optional; by default the component class is the id with any
``_suffix`` and trailing digits removed (``CPU_A`` -> ``CPU``, ``PS1`` -> ``PS``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import Iterable, Optional

from ftbn.reliability import Exponential, FailureModel, Fixed

AND = "and"
OR = "or"
KOFN = "kofn"


class FaultTreeError(ValueError):
    pass


class ParseError(FaultTreeError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(FaultTreeError):
    def __init__(self, diagnostics: list["Diagnostic"]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Diagnostic:
    code: str  # duplicate | undefined | arity | cycle | top | unreachable | unused
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def default_component_class(event_id: str) -> str:
    head = event_id.split("_", 1)[0].rstrip("0123456789")
    return head or event_id


@dataclass(frozen=True)
class PrimaryEvent:
    id: str
    failure: FailureModel
    component_class: str = ""

    def __post_init__(self) -> None:
        if not self.component_class:
            object.__setattr__(self, "component_class", default_component_class(self.id))


@dataclass(frozen=True)
class Gate:
    output: str
    kind: str
    inputs: tuple[str, ...]
    k: Optional[int] = None
    n: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in (AND, OR, KOFN):
            raise FaultTreeError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.kind == KOFN:
            if self.k is None:
                raise FaultTreeError(f"gate {self.output}: k:n gate needs k")
            if self.n is None:
                object.__setattr__(self, "n", len(self.inputs))

    def evaluate(self, values: Iterable[bool]) -> bool:
        values = list(values)
        if self.kind == AND:
            return all(values)
        if self.kind == OR:
            return any(values)
        return sum(values) >= self.k

    def label(self) -> str:
        if self.kind == KOFN:
            return f"{self.k} of {self.n}"
        return self.kind


@dataclass(frozen=True)
class FaultTree:
    primaries: tuple[PrimaryEvent, ...]
    gates: tuple[Gate, ...]
    top: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "primaries", tuple(self.primaries))
        object.__setattr__(self, "gates", tuple(self.gates))

    @cached_property
    def primary_map(self) -> dict[str, PrimaryEvent]:
        return {pe.id: pe for pe in self.primaries}

    @cached_property
    def gate_map(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    @property
    def primary_ids(self) -> list[str]:
        return [pe.id for pe in self.primaries]

    @property
    def event_ids(self) -> list[str]:
        return [g.output for g in self.gates]

    def structure(self) -> tuple:
        """Order-independent structural content, used for equality checks."""
        prim = frozenset((p.id, p.failure, p.component_class) for p in self.primaries)
        gates = frozenset((g.output, g.kind, g.k, g.n, g.inputs) for g in self.gates)
        return prim, gates, self.top


def validate(ft: FaultTree) -> list[Diagnostic]:
    """Check every fault-tree invariant; an empty list means the tree is valid."""
    diags: list[Diagnostic] = []
    seen: dict[str, str] = {}
    for pe in ft.primaries:
        if pe.id in seen:
            diags.append(Diagnostic("duplicate", pe.id, "primary event defined more than once"))
        seen[pe.id] = "primary"
    for g in ft.gates:
        if g.output in seen:
            what = "a primary event" if seen[g.output] == "primary" else "another gate"
            diags.append(Diagnostic("duplicate", g.output, f"event already defined as {what}"))
        seen.setdefault(g.output, "gate")

    for g in ft.gates:
        if g.kind == KOFN:
            if len(g.inputs) != g.n:
                diags.append(Diagnostic(
                    "arity", g.output,
                    f"{g.k} of {g.n} gate has {len(g.inputs)} inputs, expected {g.n}"))
            if not 1 <= g.k <= g.n:
                diags.append(Diagnostic("arity", g.output, f"k={g.k} outside 1..{g.n}"))
        elif len(g.inputs) < 2:
            diags.append(Diagnostic("arity", g.output, f"{g.kind} gate needs at least 2 inputs"))
        for name in dict.fromkeys(g.inputs):
            if name not in seen:
                diags.append(Diagnostic("undefined", g.output, f"input {name!r} is not defined"))

    gates = ft.gate_map
    if ft.top not in seen:
        diags.append(Diagnostic("top", ft.top, "top event is not defined"))
    elif ft.top not in gates:
        diags.append(Diagnostic("top", ft.top, "top event must be the output of a gate"))

    # cycle detection over gate outputs (iterative DFS, colours)
    colour: dict[str, int] = {}
    for start in sorted(gates):
        if colour.get(start):
            continue
        stack = [(start, iter(gates[start].inputs))]
        colour[start] = 1
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if nxt not in gates:
                    continue
                c = colour.get(nxt, 0)
                if c == 1:
                    diags.append(Diagnostic("cycle", nxt, f"event {nxt!r} depends on itself via {node!r}"))
                elif c == 0:
                    colour[nxt] = 1
                    stack.append((nxt, iter(gates[nxt].inputs)))
                    break
            else:
                colour[node] = 2
                stack.pop()

    if ft.top in gates:
        reached: set[str] = set()
        todo = [ft.top]
        while todo:
            node = todo.pop()
            if node in reached:
                continue
            reached.add(node)
            if node in gates:
                todo.extend(gates[node].inputs)
        for g in ft.gates:
            if g.output not in reached:
                diags.append(Diagnostic("unreachable", g.output, "gate output does not lead to the top event"))
        for pe in ft.primaries:
            if pe.id not in reached:
                diags.append(Diagnostic("unused", pe.id, "primary event is not an input of any gate below the top"))
    return diags


def boolean_eval(ft: FaultTree, assignment: dict[str, bool]) -> bool:
    """Value of the top event when primaries take the given truth values."""
    missing = [pid for pid in ft.primary_map if pid not in assignment]
    if missing:
        raise FaultTreeError(f"assignment is missing primaries: {', '.join(sorted(missing))}")
    gates = ft.gate_map
    memo: dict[str, bool] = {}

    def value(name: str) -> bool:
        if name in memo:
            return memo[name]
        if name in gates:
            g = gates[name]
            out = g.evaluate(value(i) for i in g.inputs)
        else:
            out = bool(assignment[name])
        memo[name] = out
        return out

    return value(ft.top)


# --------------------------------------------------------------------- parser

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<kofn>\d+\s*of\s*\d+(?![A-Za-z0-9_]))
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;=(),])
""", re.VERBOSE)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.positions: dict[str, tuple[int, int]] = {}

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, tok: _Token, expected: str):
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"expected {expected}, found {found}", tok.line, tok.column)

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text or tok.kind == "eof":
            self.fail(tok, repr(text))
        return tok

    def ident(self) -> _Token:
        tok = self.next()
        if tok.kind != "ident":
            self.fail(tok, "identifier")
        return tok

    def number(self) -> float:
        tok = self.next()
        if tok.kind != "number":
            self.fail(tok, "number")
        return float(tok.text)

    def ident_list(self) -> list[str]:
        self.expect("(")
        names = [self.ident().text]
        while self.peek().text == ",":
            self.next()
            names.append(self.ident().text)
        self.expect(")")
        return names

    def parse(self) -> FaultTree:
        primaries: list[PrimaryEvent] = []
        gates: list[Gate] = []
        top: Optional[_Token] = None
        while self.peek().kind != "eof":
            kw = self.next()
            if kw.text == "primary":
                primaries.append(self.primary())
            elif kw.text == "event":
                gates.append(self.event())
            elif kw.text == "top":
                name = self.ident()
                if top is not None:
                    raise ParseError("more than one top statement", kw.line, kw.column)
                top = name
            else:
                self.fail(kw, "'primary', 'event' or 'top'")
            self.expect(";")
        if top is None:
            tok = self.peek()
            raise ParseError("missing top statement", tok.line, tok.column)
        self.positions.setdefault(top.text, (top.line, top.column))
        return FaultTree(tuple(primaries), tuple(gates), top.text)

    def primary(self) -> PrimaryEvent:
        name = self.ident()
        self.positions.setdefault(name.text, (name.line, name.column))
        key = self.next()
        if key.text not in ("rate", "prob"):
            self.fail(key, "'rate' or 'prob'")
        self.expect("=")
        where = self.peek()
        value = self.number()
        try:
            model: FailureModel = Exponential(value) if key.text == "rate" else Fixed(value)
        except ValueError as exc:
            raise ParseError(str(exc), where.line, where.column) from None
        cls = ""
        if self.peek().text == "class":
            self.next()
            self.expect("=")
            cls = self.ident().text
        return PrimaryEvent(name.text, model, cls)

    def event(self) -> Gate:
        name = self.ident()
        self.positions.setdefault(name.text, (name.line, name.column))
        self.expect("=")
        tok = self.next()
        if tok.kind == "ident" and tok.text in (AND, OR):
            return Gate(name.text, tok.text, tuple(self.ident_list()))
        if tok.kind == "kofn":
            k, n = (int(x) for x in re.findall(r"\d+", tok.text))
        elif tok.kind == "number" and tok.text.isdigit():
            self.expect("of")
            n_tok = self.next()
            if n_tok.kind != "number" or not n_tok.text.isdigit():
                self.fail(n_tok, "integer")
            k, n = int(tok.text), int(n_tok.text)
        else:
            self.fail(tok, "'and', 'or' or 'K of N'")
        return Gate(name.text, KOFN, tuple(self.ident_list()), k=k, n=n)


def parse_fault_tree(text: str, check: bool = True) -> FaultTree:
    """Parse DSL source into a :class:`FaultTree`.

    With ``check`` (the default) structural problems raise
    :class:`ValidationError`; pass ``check=False`` to get the raw tree and
    call :func:`validate` yourself.
    """
    parser = _Parser(text)
    ft = parser.parse()
    if check:
        diags = validate(ft)
        if diags:
            located = []
            for d in diags:
                if d.subject in parser.positions:
                    line, col = parser.positions[d.subject]
                    d = Diagnostic(d.code, d.subject, f"{d.message} (line {line}, column {col})")
                located.append(d)
            raise ValidationError(located)
    return ft


def _fmt_float(x: float) -> str:
    return repr(float(x))


def serialize(ft: FaultTree) -> str:
    """Render a tree back to DSL text (primaries, gates, then top)."""
    lines = []
    for pe in ft.primaries:
        if isinstance(pe.failure, Exponential):
            spec = f"rate={_fmt_float(pe.failure.rate)}"
        else:
            spec = f"prob={_fmt_float(pe.failure.p)}"
        if pe.component_class != default_component_class(pe.id):
            spec += f" class={pe.component_class}"
        lines.append(f"primary {pe.id} {spec};")
    for g in ft.gates:
        args = ", ".join(g.inputs)
        head = f"{g.k} of {g.n}" if g.kind == KOFN else g.kind
        lines.append(f"event {g.output} = {head}({args});")
    lines.append(f"top {ft.top};")
    return "\n".join(lines) + "\n"


def load_fault_tree(path) -> FaultTree:
    with open(path, encoding="utf-8") as fh:
        return parse_fault_tree(fh.read())


# ------------------------------------------------------------ PLC case study

PLC_RATES = {
    "IObus": 2.0e-9,
    "Tribus": 2.0e-9,
    "Voter": 6.6e-8,
    "DO": 2.45e-7,
    "DI": 2.8e-7,
    "PS": 3.37e-7,
    "CPU": 4.82e-7,
}

# Published component failure probabilities at t = 4e5 h. DI is printed as
# 0.10595 although 1 - exp(-0.112) rounds to 0.10596; the published system
# figures were computed from these values.
PLC_PUBLISHED_PROBABILITIES = {
    "IObus": 0.00080,
    "Tribus": 0.00080,
    "Voter": 0.02605,
    "DO": 0.09335,
    "DI": 0.10595,
    "PS": 0.12611,
    "CPU": 0.17535,
}

PLC_MISSION_TIME = 4.0e5
CHANNELS = ("A", "B", "C")


def plc_case_study() -> FaultTree:
    """Fault tree of the triple-redundant PLC with 2:3 voting."""
    primaries = [
        PrimaryEvent("PS1", Exponential(PLC_RATES["PS"]), "PS"),
        PrimaryEvent("PS2", Exponential(PLC_RATES["PS"]), "PS"),
        PrimaryEvent("Voter", Exponential(PLC_RATES["Voter"]), "Voter"),
    ]
    for x in CHANNELS:
        for cls in ("CPU", "DI", "DO", "IObus", "Tribus"):
            primaries.append(PrimaryEvent(f"{cls}_{x}", Exponential(PLC_RATES[cls]), cls))

    gates = [
        Gate("TE", OR, ("PSS", "Voter", "CH")),
        Gate("PSS", AND, ("PS1", "PS2")),
        Gate("CH", KOFN, tuple(f"Ch{x}" for x in CHANNELS), k=2, n=3),
    ]
    for x in CHANNELS:
        gates.append(Gate(f"Ch{x}", OR, (f"CPU_{x}", f"DO_{x}", f"IObus_{x}", f"In_{x}")))
        gates.append(Gate(f"In_{x}", KOFN, tuple(f"Inp_{x}_{y}" for y in CHANNELS), k=2, n=3))
        for y in CHANNELS:
            if x == y:
                gates.append(Gate(f"Inp_{x}_{y}", OR, (f"DI_{y}", f"IObus_{y}")))
            else:
                gates.append(Gate(f"Inp_{x}_{y}", OR, (f"DI_{y}", f"IObus_{y}", f"Tribus_{x}")))
    return FaultTree(tuple(primaries), tuple(gates), "TE")


def plc_published_priors(ft: Optional[FaultTree] = None) -> dict[str, float]:
    """Per-primary priors taken from the published component probabilities."""
    ft = ft or plc_case_study()
    return {pe.id: PLC_PUBLISHED_PROBABILITIES[pe.component_class] for pe in ft.primaries}


def bundled_model_path(name: str):
    """Path of a model file shipped with the package (e.g. ``plc.ft``)."""
    return resources.files("ftbn") / "models" / name
