"""``ftbn`` command-line front end.

Exit codes: 0 success, 2 validation failure, 3 I/O or parse error,
4 impossible evidence, 5 unknown target or bad flag.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

from ftbn import bn_model
from ftbn.bn_model import FAULTY, BayesianNetwork, NetworkError, validate_bn
from ftbn.compiler import compile_tree
from ftbn.cutsets import score_cut_sets
from ftbn.ft_model import FaultTree, FaultTreeError, ParseError, ValidationError, parse_fault_tree, validate
from ftbn.inference import InferenceError, ZeroProbabilityEvidence, marginal, top_k_diagnoses
from ftbn.reliability import needs_mission_time, probability_table

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_EVIDENCE = 4
EXIT_USAGE = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    path: str
    mission_time: Optional[float] = None
    evidence: dict[str, str] = field(default_factory=dict)
    targets: list[str] = field(default_factory=list)
    top_k: int = 10
    format: str = "table"
    out: Optional[str] = None


@dataclass
class Model:
    bn: BayesianNetwork
    ft: Optional[FaultTree] = None
    priors: Optional[dict[str, float]] = None


# ------------------------------------------------------------------- loading

def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from None


def _is_json(path: str, text: str) -> bool:
    return path.endswith(".json") or text.lstrip().startswith("{")


def load_model(cfg: RunConfig) -> Model:
    text = _read(cfg.path)
    if _is_json(cfg.path, text):
        try:
            bn = bn_model.loads(text)
        except NetworkError as exc:
            raise CliError(f"{cfg.path}: {exc}", EXIT_IO) from None
        diags = validate_bn(bn)
        if diags:
            raise CliError("\n".join(f"{cfg.path}: {d}" for d in diags), EXIT_INVALID)
        return Model(bn)
    try:
        ft = parse_fault_tree(text)
    except ParseError as exc:
        raise CliError(f"{cfg.path}: {exc}", EXIT_IO) from None
    except ValidationError as exc:
        raise CliError("\n".join(f"{cfg.path}: {d}" for d in exc.diagnostics), EXIT_INVALID) from None
    if cfg.mission_time is None:
        if needs_mission_time(ft.primaries):
            raise CliError("--mission-time is required for models with failure rates", EXIT_USAGE)
        t = 0.0
    else:
        t = cfg.mission_time
    priors = probability_table(ft.primaries, t)
    bn, _ = compile_tree(ft, priors)
    return Model(bn, ft, priors)


def _check_targets(bn: BayesianNetwork, targets: list[str]) -> None:
    unknown = [t for t in targets if t not in bn]
    if unknown:
        raise CliError(f"unknown target event(s): {', '.join(unknown)}", EXIT_USAGE)


def _check_evidence(bn: BayesianNetwork, evidence: dict[str, str]) -> None:
    for var, state in evidence.items():
        if var not in bn:
            raise CliError(f"unknown evidence variable {var!r}", EXIT_USAGE)
        try:
            bn.variable(var).index(state)
        except NetworkError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None


# ------------------------------------------------------------------ rendering

def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + rows]
    return "\n".join(lines) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _p5(x: float) -> str:
    return f"{x:.5f}"


def _p_fault(dist: dict[str, float]) -> float:
    # mass off the first (working) state
    return sum(list(dist.values())[1:])


def _distributions(model: Model, targets: list[str], evidence: dict[str, str]) -> dict[str, dict[str, float]]:
    try:
        return {t: marginal(model.bn, t, evidence) for t in targets}
    except ZeroProbabilityEvidence as exc:
        raise CliError(str(exc), EXIT_EVIDENCE) from None


def _render_distributions(dists: dict[str, dict[str, float]], fmt: str, label: str) -> str:
    if fmt == "json":
        return _json(dists)
    if fmt == "csv":
        return _csv(["variable", "state", "probability"],
                    [[v, s, repr(p)] for v, d in dists.items() for s, p in d.items()])
    return _table(["event", label], [[v, _p5(_p_fault(d))] for v, d in dists.items()])


# ------------------------------------------------------------------ commands

def cmd_validate(cfg: RunConfig) -> str:
    text = _read(cfg.path)
    if _is_json(cfg.path, text):
        try:
            bn = bn_model.loads(text)
        except NetworkError as exc:
            raise CliError(f"{cfg.path}: {exc}", EXIT_IO) from None
        diags = [str(d) for d in validate_bn(bn)]
        summary = f"{len(bn.nodes)} variables, {len(bn.roots())} roots"
    else:
        try:
            ft = parse_fault_tree(text, check=False)
        except ParseError as exc:
            raise CliError(f"{cfg.path}: {exc}", EXIT_IO) from None
        diags = [str(d) for d in validate(ft)]
        summary = f"{len(ft.primary_map)} primary events, {len(ft.gates)} gates, top {ft.top}"
    if diags:
        raise CliError("\n".join(f"{cfg.path}: {d}" for d in diags), EXIT_INVALID)
    return f"{cfg.path}: ok ({summary})\n"


def cmd_compile(cfg: RunConfig) -> str:
    return bn_model.dumps(load_model(cfg).bn.sorted())


def cmd_analyze(cfg: RunConfig) -> str:
    model = load_model(cfg)
    targets = cfg.targets or ([model.ft.top] if model.ft else model.bn.sinks())
    _check_targets(model.bn, targets)
    _check_evidence(model.bn, cfg.evidence)
    return _render_distributions(_distributions(model, targets, cfg.evidence), cfg.format, "P(faulty)")


def cmd_posterior(cfg: RunConfig) -> str:
    model = load_model(cfg)
    _check_evidence(model.bn, cfg.evidence)
    targets = cfg.targets or sorted(model.bn.roots())
    _check_targets(model.bn, targets)
    dists = _distributions(model, targets, cfg.evidence)
    ordered = sorted(dists, key=lambda v: (round(_p_fault(dists[v]), 12), v))
    return _render_distributions({v: dists[v] for v in ordered}, cfg.format, "P(faulty | evidence)")


def cmd_cutsets(cfg: RunConfig) -> str:
    model = load_model(cfg)
    if model.ft is None:
        raise CliError("minimal cut sets are only defined for fault trees; "
                       "use 'diagnose' to rank explanations in a BN model", EXIT_INVALID)
    try:
        scored = score_cut_sets(model.ft, model.bn, model.priors)
    except ZeroProbabilityEvidence as exc:
        raise CliError(f"top event cannot occur: {exc}", EXIT_EVIDENCE) from None
    if cfg.format == "json":
        return _json([{
            "members": list(s.cutset.members),
            "order": s.cutset.order,
            "unreliability": s.unreliability,
            "posterior_unreliability": s.posterior_unreliability,
            "diagnosis_posterior": s.diagnosis_posterior,
        } for s in scored])
    if cfg.format == "csv":
        return _csv(["members", "order", "unreliability", "posterior_unreliability", "diagnosis_posterior"],
                    [[" ".join(s.cutset.members), s.cutset.order, repr(s.unreliability),
                      repr(s.posterior_unreliability), repr(s.diagnosis_posterior)] for s in scored])
    rows = [[str(i), str(s.cutset), str(s.cutset.order), _p5(s.unreliability),
             _p5(s.posterior_unreliability), _p5(s.diagnosis_posterior)] for i, s in enumerate(scored, 1)]
    return _table(["rank", "MCS", "order", "Unrel.", "Post. Unrel.", "Post. Prob."], rows)


def _abnormal_label(bn: BayesianNetwork, assignment: dict[str, str], ids) -> list[str]:
    return [v if assignment[v] == FAULTY and bn.card(v) == 2 else f"{v}={assignment[v]}" for v in ids]


def cmd_diagnose(cfg: RunConfig) -> str:
    model = load_model(cfg)
    _check_evidence(model.bn, cfg.evidence)
    try:
        ranked = top_k_diagnoses(model.bn, cfg.evidence, cfg.top_k)
    except ZeroProbabilityEvidence as exc:
        raise CliError(str(exc), EXIT_EVIDENCE) from None
    if cfg.format == "json":
        return _json([{"rank": i, "posterior": d.posterior,
                       "abnormal": {v: d.assignment[v] for v in d.abnormal},
                       "assignment": d.assignment} for i, d in enumerate(ranked, 1)])
    labels = [_abnormal_label(model.bn, d.assignment, d.abnormal) for d in ranked]
    if cfg.format == "csv":
        return _csv(["rank", "posterior", "abnormal"],
                    [[i, repr(d.posterior), " ".join(lab)] for i, (d, lab) in enumerate(zip(ranked, labels), 1)])
    rows = [[str(i), _p5(d.posterior), "{" + ", ".join(lab) + "}"] for i, (d, lab) in enumerate(zip(ranked, labels), 1)]
    return _table(["rank", "posterior", "abnormal components (others working)"], rows)


COMMANDS = {
    "validate": cmd_validate,
    "compile": cmd_compile,
    "analyze": cmd_analyze,
    "posterior": cmd_posterior,
    "cutsets": cmd_cutsets,
    "diagnose": cmd_diagnose,
}


# -------------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _split(values: Optional[list[str]]) -> list[str]:
    return [item.strip() for v in values or [] for item in v.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftbn", description="Fault-tree dependability analysis via Bayesian networks.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("path", help="fault-tree DSL file or BN JSON document")
    parser.add_argument("--mission-time", type=float, metavar="H", help="mission time in hours")
    parser.add_argument("--evidence", action="append", metavar="V=S,...", help="observed states")
    parser.add_argument("--target", action="append", metavar="E,...", help="events to report")
    parser.add_argument("--top", type=int, default=10, metavar="K", help="number of diagnoses (default 10)")
    parser.add_argument("--format", choices=("table", "json", "csv"), default="table")
    parser.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return parser


def parse_config(argv: Optional[list[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    evidence = {}
    for item in _split(args.evidence):
        var, sep, state = item.partition("=")
        if not sep or not var.strip() or not state.strip():
            raise CliError(f"evidence must look like VAR=STATE, got {item!r}", EXIT_USAGE)
        evidence[var.strip()] = state.strip()
    if args.mission_time is not None and not args.mission_time >= 0:
        raise CliError("--mission-time must be >= 0", EXIT_USAGE)
    if args.top < 1:
        raise CliError("--top must be >= 1", EXIT_USAGE)
    return RunConfig(args.command, args.path, args.mission_time, evidence,
                     _split(args.target), args.top, args.format, args.out)


def main(argv: Optional[list[str]] = None) -> int:
    try:
        try:
            cfg = parse_config(argv)
        except SystemExit as exc:
            # argparse exits on --help and on usage errors
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        output = COMMANDS[cfg.command](cfg)
        if cfg.out:
            try:
                with open(cfg.out, "w", encoding="utf-8") as fh:
                    fh.write(output)
            except OSError as exc:
                raise CliError(f"cannot write {cfg.out}: {exc.strerror}", EXIT_IO) from None
        else:
            sys.stdout.write(output)
        return EXIT_OK
    except CliError as exc:
        print(f"ftbn: {exc}", file=sys.stderr)
        return exc.code
    except (FaultTreeError, NetworkError, InferenceError) as exc:
        print(f"ftbn: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
