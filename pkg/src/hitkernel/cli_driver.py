"""Command-line driver: `hitk check|eval|lint FILE`.

Exit codes: 0 success, 1 semantic failure, 2 usage, I/O or syntax error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path as FsPath

from .finset_model import (
    DEFAULT_FUEL, CoherenceError, Evaluator, FinMap, FinSet, InfiniteType,
    NonCanonical, NotInitial, UnboundParam, check_universal_property, make_env,
    register, saturate,
)
from .hit_schema import SchemaError, validate_schema
from .surface_parser import (
    EvalRequest, FinMapLit, FinSetLit, ParseError, ScopeError, SourceSpan,
    parse_module,
)
from .syntax_core import EMPTY, KernelError, Term, TermParam
from .typechecker import DEFAULT_FUEL as KERNEL_FUEL, FuelExhausted, Kernel, TypeCheckError

EXIT_OK, EXIT_SEMANTIC, EXIT_USAGE = 0, 1, 2


@dataclass
class Report:
    diagnostics: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    lines: list = field(default_factory=list)

    @property
    def failed(self):
        return any(d["severity"] == "error" for d in self.diagnostics)

    def diag(self, severity, span: SourceSpan | None, file, kind, message):
        span = span or SourceSpan(file, 1, 1, 1, 1)
        self.diagnostics.append({
            "severity": severity, "file": span.file or file,
            "startLine": span.start_line, "startCol": span.start_col,
            "endLine": span.end_line, "endCol": span.end_col,
            "kind": kind, "message": message,
        })

    def to_json(self):
        return {
            "status": "failed" if self.failed else "ok",
            "diagnostics": self.diagnostics,
            "evaluations": self.evaluations,
        }

    def render(self):
        out = []
        for d in self.diagnostics:
            out.append(f"{d['file']}:{d['startLine']}:{d['startCol']}: {d['severity']}: {d['kind']}: {d['message']}")
        out.extend(self.lines)
        out.append("ok" if not self.failed else "failed")
        return "\n".join(out)


class _UsageError(Exception):
    pass


def load_prelude(path: str | None) -> dict:
    from .hit_schema import builtin_registry
    if path is None:
        return builtin_registry()
    text = FsPath(path).read_text(encoding="utf-8")
    mod = parse_module(text, path, registry={})
    reg = {}
    for d in mod.schemas():
        validate_schema(d.schema, reg)
        reg[d.schema.name] = d.schema
    return reg


def _parse(args, report):
    try:
        text = FsPath(args.file).read_text(encoding="utf-8")
    except OSError as e:
        report.diag("error", None, args.file, "IOError", str(e))
        return None, None, EXIT_USAGE
    try:
        registry = load_prelude(args.prelude)
    except OSError as e:
        report.diag("error", None, args.prelude, "IOError", str(e))
        return None, None, EXIT_USAGE
    except ParseError as e:
        report.diag("error", e.span, args.prelude, e.kind, e.message)
        return None, None, EXIT_USAGE
    try:
        mod = parse_module(text, args.file, registry=registry)
    except ParseError as e:
        report.diag("error", e.span, args.file, e.kind, e.message)
        return None, None, EXIT_USAGE
    except ScopeError as e:
        report.diag("error", e.span, args.file, e.kind, e.message)
        return None, None, EXIT_SEMANTIC
    return mod, registry, None


def _lint(mod, registry, file, report):
    reg = dict(registry)
    for d in mod.schemas():
        try:
            validate_schema(d.schema, reg)
        except SchemaError as e:
            span = d.cell_spans.get(e.cell, d.span) if e.cell else d.span
            report.diag("error", span, file, e.kind, e.message)
        reg[d.schema.name] = d.schema
    return reg


def cmd_lint(args, report):
    mod, registry, code = _parse(args, report)
    if mod is None:
        return code
    _lint(mod, registry, args.file, report)
    report.lines.append(f"{len(mod.schemas())} schema(s) linted")
    return EXIT_SEMANTIC if report.failed else EXIT_OK


def cmd_check(args, report):
    mod, registry, code = _parse(args, report)
    if mod is None:
        return code
    reg = _lint(mod, registry, args.file, report)
    kernel = Kernel(reg, fuel=args.fuel if args.fuel is not None else KERNEL_FUEL)
    for d in mod.definitions():
        try:
            kernel.check_type(EMPTY, d.type)
            kernel.check(EMPTY, d.body, d.type)
        except FuelExhausted as e:
            report.diag("warning", d.span, args.file, e.kind, f"{d.name}: {e.message}")
        except KernelError as e:
            report.diag("error", d.span, args.file, e.kind, f"{d.name}: {e.message}")
    report.lines.append(f"{len(mod.definitions())} definition(s) checked")
    return EXIT_SEMANTIC if report.failed else EXIT_OK


def env_values(schema, args):
    """Literal eval arguments -> semantic parameter values."""
    values = []
    for entry, lit in zip(schema.params.entries, args):
        ev = Evaluator(make_env_partial(schema, values))
        if entry.tele:
            if not isinstance(lit, FinMapLit):
                raise UnboundParam(f"parameter {entry.name} needs a finmap literal")
            dom = [k[0] if len(k) == 1 else tuple(k) for k in ev.tele_tuples([ty for _, ty in entry.tele])]
            table = tuple((k, FinSet(v.elements) if isinstance(v, FinSetLit) else v) for k, v in lit.pairs)
            values.append(FinMap(FinSet(tuple(dom)), None, table))
        elif isinstance(entry, TermParam):
            values.append(lit)
        elif isinstance(lit, FinSetLit):
            values.append(FinSet(lit.elements))
        elif isinstance(lit, Term):
            values.append(ev.type(lit))
        else:
            raise UnboundParam(f"parameter {entry.name} needs a finite set")
    return values


def make_env_partial(schema, values):
    from .finset_model import Env
    return Env(tuple(values), tuple(e.name for e in schema.params.entries[:len(values)]))


def _run_eval(req: EvalRequest, reg, args, file, report):
    sch = reg[req.schema]
    fuel = args.fuel if args.fuel is not None else (req.fuel if req.fuel is not None else DEFAULT_FUEL)
    try:
        env = make_env(sch, env_values(sch, req.args))
        c = saturate(sch, env, fuel)
    except (KernelError, ValueError) as e:
        kind = getattr(e, "kind", "UnboundParam")
        report.diag("error", req.span, file, kind, f"{req.name}: {getattr(e, 'message', str(e))}")
        return
    entry = {"name": req.name, "status": c.status, "classes": len(c.classes()),
             "fuel_used": c.fuel_used, "initiality": None}
    noun = "class" if entry["classes"] == 1 else "classes"
    report.lines.append(f"{req.name}: {c.status.replace('_', ' ')}, {entry['classes']} {noun}, fuel used {c.fuel_used}")
    for rep in c.classes():
        report.lines.append(f"  [{rep}] {c.show(rep)}")
    if args.check_initiality is not None:
        if not c.converged:
            report.diag("warning", req.span, file, "InfiniteType",
                        f"{req.name}: initiality needs a converged carrier")
        else:
            try:
                entry["initiality"] = check_universal_property(c, sch, env, args.check_initiality)
                r = entry["initiality"]
                report.lines.append(f"  initial among {r['algebras']} algebra(s) of size <= {r['bound']}")
            except (NotInitial, CoherenceError, InfiniteType, NonCanonical) as e:
                report.diag("error", req.span, file, e.kind, f"{req.name}: {e.message}")
    report.evaluations.append(entry)


def cmd_eval(args, report):
    mod, registry, code = _parse(args, report)
    if mod is None:
        return code
    reg = _lint(mod, registry, args.file, report)
    if report.failed:
        return EXIT_SEMANTIC
    register(d.schema for d in mod.schemas())
    reqs = mod.evals()
    if args.name is not None:
        reqs = [r for r in reqs if r.name == args.name]
        if not reqs:
            raise _UsageError(f"no eval request named {args.name}")
    for req in reqs:
        _run_eval(req, reg, args, args.file, report)
    return EXIT_SEMANTIC if report.failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="hitk", description="Check, lint and evaluate higher inductive type modules.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file")
    common.add_argument("--json", action="store_true", help="emit a machine-readable report")
    common.add_argument("--prelude", help="schema file to use instead of the builtin one")
    common.add_argument("--fuel", type=int, help="saturation rounds (eval) or reduction steps (check)")
    sub.add_parser("check", parents=[common], help="type-check every definition")
    ev = sub.add_parser("eval", parents=[common], help="saturate eval requests in the finite-set model")
    ev.add_argument("name", nargs="?", help="run only this eval request")
    ev.add_argument("--check-initiality", type=int, metavar="BOUND",
                    help="compare against all algebras of size <= BOUND")
    sub.add_parser("lint", parents=[common], help="validate schema declarations only")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "fuel", None) is not None and args.fuel < 0:
        print("hitk: --fuel must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    if not hasattr(args, "check_initiality"):
        args.check_initiality = None
    report = Report()
    cmd = {"check": cmd_check, "eval": cmd_eval, "lint": cmd_lint}[args.command]
    try:
        code = cmd(args, report)
    except _UsageError as e:
        print(f"hitk: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TypeCheckError as e:
        report.diag("error", None, args.file, e.kind, e.message)
        code = EXIT_SEMANTIC
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.render())
    return code


if __name__ == "__main__":
    sys.exit(main())
