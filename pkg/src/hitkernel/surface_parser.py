"""Surface language: lexer, recursive-descent parser and pretty-printer.

Named binders are resolved to de Bruijn indices while parsing.  Inside a
`schema` body the schema's own name denotes the carrier, parameters and
earlier constructors are applied to exactly their declared number of
arguments, and `a = b` means an identification in the carrier.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .syntax_core import (
    Ap, App, Binder, Carrier, CellSpec, Con, Globe, Id, IdOver, Inl, Inr, J, JOver,
    KernelError, Lam, Meta, Nat, NatElim, Pair, Param, ParamScheme, Path, Pi, Point,
    Proj1, Proj2, Refl, ReflOver, Schema, SchemaCtor, SchemaElim, SchemaPathComp,
    SchemaType, Sigma, Square, SquareBoundary, SquareOver, Star, Succ, Sum, SumElim,
    Term, TermParam, TypeParam, TypingContext, Unit, Var, Zero, free_vars, shift,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int


class ParseError(KernelError):
    kind = "SyntaxError"


class ScopeError(KernelError):
    kind = "ScopeError"


KEYWORDS = {
    "def", "schema", "point", "path", "cell", "eval", "fuel", "fun", "Type",
    "Unit", "tt", "Nat", "zero", "succ", "inl", "inr", "fst", "snd", "refl",
    "refl'", "Id", "IdOver", "J", "J'", "ap", "natrec", "case", "Square",
    "SquareOver", "square", "globe", "finset", "finmap",
}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|--[^\n]*)
  | (?P<sym>:=|=>|->|\|->|↦|[()\[\]{},;:=+*.])
  | (?P<nat>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str          # ident, nat, sym, kw, eof
    text: str
    line: int
    col: int
    end_line: int
    end_col: int
    spaced: bool       # preceded by whitespace


def lex(text: str, file: str = "<input>") -> list[Tok]:
    toks = []
    pos, line, col = 0, 1, 1
    spaced = True
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(file, line, col, line, col + 1))
        s = m.group()
        kind = m.lastgroup
        nl = s.count("\n")
        end_line = line + nl
        end_col = (len(s) - s.rfind("\n")) if nl else col + len(s)
        if kind == "ws":
            spaced = True
        else:
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            if s == "↦":
                s = "|->"
            toks.append(Tok(kind, s, line, col, end_line, end_col, spaced))
            spaced = False
        pos = m.end()
        line, col = end_line, end_col
    toks.append(Tok("eof", "", line, col, line, col, True))
    return toks


# -- module items --------------------------------------------------------------

@dataclass
class Definition:
    name: str
    type: Term
    body: Term
    span: SourceSpan


@dataclass
class SchemaDecl:
    schema: Schema
    span: SourceSpan
    cell_spans: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FinSetLit:
    elements: tuple


@dataclass(frozen=True)
class FinMapLit:
    pairs: tuple


@dataclass
class EvalRequest:
    name: str
    schema: str
    args: tuple        # FinSetLit | FinMapLit | element | Term
    fuel: int | None
    span: SourceSpan


@dataclass
class Module:
    items: list = field(default_factory=list)
    registry: dict = field(default_factory=dict)

    def definitions(self):
        return [i for i in self.items if isinstance(i, Definition)]

    def schemas(self):
        return [i for i in self.items if isinstance(i, SchemaDecl)]

    def evals(self):
        return [i for i in self.items if isinstance(i, EvalRequest)]


@dataclass(frozen=True, repr=False)
class _TypeSort(Term):
    """`Type` in parameter declarations; never leaves the parser."""


@dataclass
class _SchemaScope:
    name: str
    params: list                 # TypeParam | TermParam, so far
    cells: list                  # CellSpec, so far


# -- parser ----------------------------------------------------------------------

class Parser:
    def __init__(self, text, file="<input>", registry=None, defs=None):
        self.file = file
        self.toks = lex(text, file)
        self.pos = 0
        self.registry = dict(registry or {})
        self.defs = dict(defs or {})
        self.scope: _SchemaScope | None = None

    # .. token helpers

    @property
    def tok(self):
        return self.toks[self.pos]

    def peek(self, k=1):
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and t.kind in ((kind,) if kind else ("sym", "kw"))

    def next(self):
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def span_of(self, a: Tok, b: Tok | None = None):
        b = b or a
        return SourceSpan(self.file, a.line, a.col, b.end_line, b.end_col)

    def error(self, msg, tok=None):
        return ParseError(msg, self.span_of(tok or self.tok))

    def expect(self, text):
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, got {got!r}")
        return self.next()

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"expected a name, got {t.text or 'end of input'!r}")
        return self.next().text

    def last(self):
        return self.toks[self.pos - 1]

    # .. module

    def parse_module(self) -> Module:
        mod = Module(registry=self.registry)
        names = set()
        while self.tok.kind != "eof":
            start = self.tok
            if self.at("def"):
                item = self.parse_def()
            elif self.at("schema"):
                item = self.parse_schema()
            elif self.at("eval"):
                item = self.parse_eval()
            else:
                raise self.error("expected 'def', 'schema' or 'eval'")
            item.span = self.span_of(start, self.last())
            key = item.schema.name if isinstance(item, SchemaDecl) else item.name
            if key in names:
                raise ParseError(f"duplicate name {key}", item.span)
            names.add(key)
            mod.items.append(item)
        return mod

    def parse_def(self):
        self.expect("def")
        start = self.last()
        name_tok = self.tok
        name = self.ident()
        if name in self.defs or name in self.registry:
            raise ScopeError(f"{name} is already defined", self.span_of(name_tok))
        self.expect(":")
        ty = self.parse_expr([])
        self.expect(":=")
        body = self.parse_expr([])
        self.defs[name] = body
        return Definition(name, ty, body, self.span_of(start, self.last()))

    def parse_eval(self):
        self.expect("eval")
        start = self.last()
        name = self.ident()
        stok = self.tok
        sname = self.ident()
        if sname not in self.registry:
            raise ScopeError(f"unknown schema {sname}", self.span_of(stok))
        sch = self.registry[sname]
        args = []
        if self.at("["):
            self.next()
            for i, entry in enumerate(sch.params.entries):
                if i:
                    self.expect(",")
                args.append(self.parse_eval_arg(entry))
            self.expect("]")
        if len(args) != len(sch.params.entries):
            raise self.error(f"{sname} takes {len(sch.params.entries)} parameters")
        fuel = None
        if self.at("fuel"):
            self.next()
            t = self.tok
            if t.kind != "nat":
                raise self.error("expected a number after 'fuel'")
            fuel = int(self.next().text)
        return EvalRequest(name, sname, tuple(args), fuel, self.span_of(start, self.last()))

    def parse_eval_arg(self, entry):
        if self.at("finset"):
            return self.parse_finset()
        if self.at("finmap"):
            self.next()
            self.expect("{")
            pairs = []
            while not self.at("}"):
                if pairs:
                    self.expect(",")
                k = self.parse_element()
                self.expect("|->")
                v = self.parse_finset() if self.at("finset") else self.parse_element()
                pairs.append((k, v))
            self.expect("}")
            return FinMapLit(tuple(pairs))
        if isinstance(entry, TermParam):
            return self.parse_element()
        return self.parse_expr([])

    def parse_finset(self):
        self.expect("finset")
        self.expect("{")
        elems = []
        while not self.at("}"):
            if elems:
                self.expect(",")
            elems.append(self.parse_element())
        self.expect("}")
        return FinSetLit(tuple(elems))

    def parse_element(self):
        t = self.tok
        if t.kind == "nat":
            self.next()
            return int(t.text)
        if t.kind == "ident":
            self.next()
            return t.text
        if self.at("("):
            self.next()
            items = [self.parse_element()]
            while self.at(","):
                self.next()
                items.append(self.parse_element())
            self.expect(")")
            return tuple(items)
        raise self.error("expected a finite-set element")

    # .. schemas

    def parse_schema(self):
        self.expect("schema")
        start = self.last()
        name_tok = self.tok
        name = self.ident()
        if name in self.registry or name in self.defs:
            raise ScopeError(f"{name} is already defined", self.span_of(name_tok))
        self.scope = _SchemaScope(name, [], [])
        try:
            while self.at("("):
                self.next()
                names = [self.binder_name()]
                while self.tok.kind == "ident":
                    names.append(self.binder_name())
                self.expect(":")
                ty_tok = self.tok
                ty = self.parse_expr([])
                self.expect(")")
                for nm in names:
                    self.scope.params.append(self._param_from_type(nm, ty, ty_tok))
            self.expect("{")
            cell_spans = {}
            while not self.at("}"):
                first = self.tok
                cell = self.parse_cell()
                cell_spans.setdefault(cell.name, self.span_of(first, self.last()))
                self.scope.cells.append(cell)
            self.expect("}")
            sch = Schema(name, ParamScheme(tuple(self.scope.params)), tuple(self.scope.cells))
        finally:
            self.scope = None
        seen = set()
        for c in sch.cells:
            if c.name in seen:
                raise ParseError(f"duplicate cell {c.name} in {name}", self.span_of(start, self.last()))
            seen.add(c.name)
        self.registry[name] = sch
        return SchemaDecl(sch, self.span_of(start, self.last()), cell_spans)

    def _param_from_type(self, name, ty, tok):
        tele = []
        while isinstance(ty, Pi):
            tele.append(ty.domain)
            ty = ty.codomain
        if any(_has_sort(t) for t in tele):
            raise self.error("'Type' may only appear as the final codomain", tok)
        named = tuple(zip(self._pi_names(len(tele)), tele))
        if isinstance(ty, _TypeSort):
            return TypeParam(name, named)
        if _has_sort(ty):
            raise self.error("'Type' may only appear as the final codomain", tok)
        return TermParam(name, named, ty)

    def _pi_names(self, n):
        return tuple(f"x{i}" for i in range(n))

    def parse_cell(self):
        kw = self.tok
        if kw.text not in ("point", "path", "cell"):
            raise self.error("expected 'point', 'path' or 'cell'")
        self.next()
        name = self.ident()
        env: list[str] = []
        tele = []
        while self.at("("):
            self.next()
            names = [self.binder_name()]
            while self.tok.kind == "ident":
                names.append(self.binder_name())
            self.expect(":")
            ty = self.parse_expr(env)
            self.expect(")")
            for k, nm in enumerate(names):
                tele.append((nm, shift(ty, 0, k)))
                env = env + [nm]
        if kw.text == "point":
            return CellSpec(name, Point(), tuple(tele), ())
        self.expect(":")
        if kw.text == "path":
            lhs = self.parse_arrow(env)
            self.expect("=")
            rhs = self.parse_arrow(env)
            return CellSpec(name, Path(), tuple(tele), (lhs, rhs))
        if self.at("square"):
            self.next()
            sides = self.parse_args(env, 4)
            return CellSpec(name, SquareBoundary(), tuple(tele), tuple(sides))
        if self.at("globe"):
            self.next()
            dim = 2
            if self.at("["):
                self.next()
                t = self.tok
                if t.kind != "nat":
                    raise self.error("expected a dimension")
                dim = int(self.next().text)
                self.expect("]")
            sides = self.parse_args(env, 2)
            return CellSpec(name, Globe(dim), tuple(tele), tuple(sides))
        raise self.error("expected 'square(...)' or 'globe(...)'")

    def parse_args(self, env, n):
        self.expect("(")
        out = []
        for i in range(n):
            if i:
                self.expect(",")
            out.append(self.parse_expr(env))
        self.expect(")")
        return out

    def binder_name(self):
        t = self.tok
        if t.kind == "ident":
            return self.next().text
        raise self.error("expected a binder name")

    # .. expressions

    def parse_expr(self, env):
        if self.at("fun"):
            self.next()
            names = [self.binder_name()]
            while self.tok.kind == "ident":
                names.append(self.binder_name())
            self.expect("=>")
            body = self.parse_expr(env + names)
            for _ in names:
                body = Lam(body)
            return body
        if self.at("(") and self._binder_group_ahead():
            return self.parse_binder_type(env)
        return self.parse_eq(env)

    def _binder_group_ahead(self):
        k = 1
        while self.peek(k).kind == "ident":
            k += 1
        return k > 1 and self.peek(k).text == ":" and self.peek(k).kind == "sym"

    def parse_binder_type(self, env):
        groups = []
        inner = list(env)
        while self.at("(") and self._binder_group_ahead():
            self.next()
            names = [self.binder_name()]
            while self.tok.kind == "ident":
                names.append(self.binder_name())
            self.expect(":")
            ty = self.parse_expr(inner)
            self.expect(")")
            for k, nm in enumerate(names):
                groups.append((nm, shift(ty, 0, k)))
                inner.append(nm)
        if self.at("->"):
            self.next()
            body = self.parse_expr(inner)
            former = Pi
        elif self.at("*"):
            self.next()
            body = self.parse_expr(inner)
            former = Sigma
        else:
            raise self.error("expected '->' or '*' after a binder group")
        for _, ty in reversed(groups):
            body = former(ty, body)
        return body

    def parse_eq(self, env):
        lhs = self.parse_arrow(env)
        if not self.at("="):
            return lhs
        tok = self.next()
        if self.at("["):
            self.next()
            ty = self.parse_expr(env)
            self.expect("]")
        elif self.scope is not None:
            ty = Carrier()
        else:
            raise self.error("write the type of an equation as a =[A] b", tok)
        rhs = self.parse_arrow(env)
        return Id(ty, lhs, rhs)

    def parse_arrow(self, env):
        lhs = self.parse_sum(env)
        if self.at("->"):
            self.next()
            rhs = self.parse_expr(env)
            return Pi(lhs, shift(rhs, 0, 1))
        return lhs

    def parse_sum(self, env):
        lhs = self.parse_prod(env)
        if self.at("+"):
            self.next()
            return Sum(lhs, self.parse_sum(env))
        return lhs

    def parse_prod(self, env):
        lhs = self.parse_app(env)
        if self.at("*"):
            self.next()
            rhs = self.parse_prod(env)
            return Sigma(lhs, shift(rhs, 0, 1))
        return lhs

    def _atom_start(self):
        t = self.tok
        if t.kind in ("ident", "nat"):
            return True
        if t.kind == "sym":
            return t.text == "("
        return t.text in ("Unit", "tt", "Nat", "zero", "Type", "J", "J'", "ap", "natrec",
                          "case", "Square", "SquareOver")

    def parse_app(self, env):
        t = self.tok
        unary = {"succ": Succ, "inl": Inl, "inr": Inr, "fst": Proj1, "snd": Proj2,
                 "refl": Refl, "refl'": ReflOver}
        if t.kind == "kw" and t.text in unary:
            self.next()
            head = unary[t.text](self.parse_atom(env))
        elif t.kind == "kw" and t.text == "Id":
            self.next()
            a, b, c = (self.parse_atom(env) for _ in range(3))
            head = Id(a, b, c)
        elif t.kind == "kw" and t.text == "IdOver":
            self.next()
            self.expect("[")
            fam = self.parse_bound(env, 1)
            self.expect("]")
            p, u, v = (self.parse_atom(env) for _ in range(3))
            head = IdOver(fam, p, u, v)
        else:
            head = self.parse_atom(env, app=True)
        while self._atom_start():
            head = App(head, self.parse_atom(env))
        return head

    def parse_bound(self, env, n):
        """`x1 .. xn. body` (or plain body when n = 0)."""
        if n == 0:
            return self.parse_expr(env)
        names = []
        while self.tok.kind == "ident":
            names.append(self.next().text)
        if len(names) != n:
            raise self.error(f"expected {n} bound names, got {len(names)}")
        self.expect(".")
        return self.parse_expr(env + names)

    def parse_binder_arg(self, env, n):
        return Binder(n, self.parse_bound(env, n))

    def parse_atom(self, env, app=False):
        t = self.tok
        if t.kind == "nat":
            self.next()
            out = Zero()
            for _ in range(int(t.text)):
                out = Succ(out)
            return out
        if t.kind == "ident":
            return self.parse_name(env, app)
        if self.at("("):
            self.next()
            e = self.parse_expr(env)
            if self.at(","):
                self.next()
                e2 = self.parse_expr(env)
                self.expect(")")
                return Pair(e, e2)
            self.expect(")")
            return e
        simple = {"Unit": Unit, "tt": Star, "Nat": Nat, "zero": Zero}
        if t.text in simple and t.kind == "kw":
            self.next()
            return simple[t.text]()
        if self.at("Type"):
            self.next()
            return _TypeSort()
        if self.at("J"):
            self.next()
            self.expect("(")
            motive = self.parse_bound(env, 3)
            self.expect(";")
            base = self.parse_bound(env, 1)
            self.expect(";")
            a1, a2, p = self._comma_list(env, 3)
            self.expect(")")
            return J(motive, base, a1, a2, p)
        if self.at("J'"):
            self.next()
            self.expect("(")
            motive = self.parse_bound(env, 6)
            self.expect(";")
            base = self.parse_bound(env, 2)
            self.expect(";")
            args = self._comma_list(env, 6)
            self.expect(")")
            return JOver(motive, base, tuple(args))
        if self.at("ap"):
            self.next()
            self.expect("(")
            f = self.parse_bound(env, 1)
            self.expect(";")
            a1, a2, p = self._comma_list(env, 3)
            self.expect(")")
            return Ap(f, a1, a2, p)
        if self.at("natrec"):
            self.next()
            self.expect("(")
            motive = self.parse_bound(env, 1)
            self.expect(";")
            z = self.parse_expr(env)
            self.expect(";")
            s = self.parse_bound(env, 2)
            self.expect(";")
            n = self.parse_expr(env)
            self.expect(")")
            return NatElim(motive, z, s, n)
        if self.at("case"):
            self.next()
            self.expect("(")
            motive = self.parse_bound(env, 1)
            self.expect(";")
            l = self.parse_bound(env, 1)
            self.expect(";")
            r = self.parse_bound(env, 1)
            self.expect(";")
            s = self.parse_expr(env)
            self.expect(")")
            return SumElim(motive, l, r, s)
        if self.at("Square"):
            self.next()
            return Square(*self.parse_args(env, 4))
        if self.at("SquareOver"):
            self.next()
            self.expect("[")
            fam = self.parse_bound(env, 1)
            self.expect("]")
            self.expect("(")
            sq = self.parse_expr(env)
            self.expect(";")
            sides = self._comma_list(env, 4)
            self.expect(")")
            return SquareOver(fam, sq, *sides)
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def _comma_list(self, env, n):
        out = []
        for i in range(n):
            if i:
                self.expect(",")
            out.append(self.parse_expr(env))
        return out

    def parse_name(self, env, app):
        tok = self.next()
        name = tok.text
        if name in env:
            return Var(env[::-1].index(name))
        sc = self.scope
        if sc is not None:
            for i, p in enumerate(sc.params):
                if p.name == name:
                    return Param(i, tuple(self._fixed_args(env, len(p.tele), name, tok)))
            for j, c in enumerate(sc.cells):
                if c.name == name:
                    return Con(j, tuple(self._fixed_args(env, c.arity, name, tok)))
            if name == sc.name:
                return Carrier()
        if name in self.defs:
            return self.defs[name]
        if name in self.registry:
            return self.parse_schema_ref(env, self.registry[name], tok)
        raise ScopeError(f"unbound name {name}", self.span_of(tok))

    def _fixed_args(self, env, n, name, tok):
        out = []
        for _ in range(n):
            if not self._atom_start():
                raise ParseError(f"{name} expects {n} arguments", self.span_of(tok))
            out.append(self.parse_atom(env))
        return out

    def parse_schema_ref(self, env, sch, tok):
        adj = self.at(".") and not self.tok.spaced and self.peek().kind == "ident" and not self.peek().spaced
        if not adj:
            return SchemaType(sch.name, self.parse_params(env, sch))
        self.next()
        what = self.next().text
        if what == "elim":
            ps = self.parse_params(env, sch)
            self.expect("(")
            motive = self.parse_bound(env, 1)
            self.expect(";")
            methods = self._methods(env, sch)
            self.expect(";")
            s = self.parse_expr(env)
            self.expect(")")
            return SchemaElim(sch.name, ps, motive, methods, s)
        if what == "comp":
            self.expect(".")
            cname = self.ident()
            j = self._cell(sch, cname, tok)
            ps = self.parse_params(env, sch)
            self.expect("(")
            motive = self.parse_bound(env, 1)
            self.expect(";")
            methods = self._methods(env, sch)
            self.expect(";")
            args = self._comma_list(env, sch.cells[j].arity)
            self.expect(")")
            return SchemaPathComp(sch.name, j, ps, motive, methods, tuple(args))
        j = self._cell(sch, what, tok)
        ps = self.parse_params(env, sch)
        n = sch.cells[j].arity
        args = []
        if n:
            self.expect("(")
            args = self._comma_list(env, n)
            self.expect(")")
        return SchemaCtor(sch.name, ps, j, tuple(args))

    def _cell(self, sch, cname, tok):
        try:
            return sch.cell_index(cname)
        except KeyError:
            raise ScopeError(f"{sch.name} has no constructor {cname}", self.span_of(tok)) from None

    def _methods(self, env, sch):
        out = []
        for j, c in enumerate(sch.cells):
            if j:
                self.expect(",")
            out.append(self.parse_binder_arg(env, c.method_arity))
        return tuple(out)

    def parse_params(self, env, sch):
        entries = sch.params.entries
        if not entries:
            if self.at("[") and self.peek().text == "]":
                self.next()
                self.next()
            return ()
        self.expect("[")
        out = []
        for i, e in enumerate(entries):
            if i:
                self.expect(",")
            out.append(self.parse_binder_arg(env, len(e.tele)))
        self.expect("]")
        return tuple(out)


def _has_sort(t):
    from .syntax_core import subterms
    return any(isinstance(s, _TypeSort) for s in subterms(t))


def _default_registry():
    from .hit_schema import builtin_registry
    return builtin_registry()


def parse_module(text: str, file: str = "<input>", registry=None) -> Module:
    if registry is None:
        registry = _default_registry()
    return Parser(text, file, registry).parse_module()


def parse_term(text: str, names=(), registry=None) -> Term:
    if registry is None:
        registry = _default_registry()
    p = Parser(text, "<term>", registry)
    t = p.parse_expr(list(names))
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return t


# -- pretty printing -----------------------------------------------------------------

_POOL = ["x", "y", "z", "w", "u", "v", "a", "b", "c", "d"]

EXPR, ARROW, SUM, PROD, APP, ATOM = range(6)


class Printer:
    def __init__(self, registry=None, schema: Schema | None = None, reserved=()):
        self.registry = registry if registry is not None else _default_registry()
        self.schema = schema
        self.reserved = set(KEYWORDS) | set(self.registry) | set(reserved)
        if schema is not None:
            self.reserved |= {schema.name} | {p.name for p in schema.params.entries}
            self.reserved |= {c.name for c in schema.cells}

    def fresh(self, env, hint=None):
        taken = set(env) | self.reserved
        cands = ([hint] if hint and hint != "_" else []) + _POOL
        for c in cands:
            if c not in taken:
                return c
        i = 1
        while True:
            for c in _POOL:
                if f"{c}{i}" not in taken:
                    return f"{c}{i}"
            i += 1

    def binders(self, env, n, hints=()):
        names = []
        for i in range(n):
            h = hints[i] if i < len(hints) else None
            names.append(self.fresh(env + names, h))
        return names

    def show(self, t, env):
        return self.pp(t, list(env))[0]

    def at(self, t, env, level):
        s, lv = self.pp(t, env)
        return s if lv >= level else f"({s})"

    def bound(self, t, env, n, hints=()):
        names = self.binders(env, n, hints)
        body = self.show(t, env + names)
        return f"{' '.join(names)}. {body}" if n else body

    def pp(self, t, env):
        match t:
            case Var(i):
                if i < len(env):
                    return env[len(env) - 1 - i], ATOM
                return f"_free{i - len(env)}", ATOM
            case Lam(body):
                (x,) = self.binders(env, 1)
                return f"fun {x} => {self.show(body, env + [x])}", EXPR
            case Pi(d, c) | Sigma(d, c):
                op = "->" if isinstance(t, Pi) else "*"
                if 0 not in free_vars(c):
                    rhs = shift(c, 0, -1)
                    if isinstance(t, Pi):
                        return f"{self.at(d, env, SUM)} -> {self.show(rhs, env)}", ARROW
                    return f"{self.at(d, env, APP)} * {self.at(rhs, env, PROD)}", PROD
                (x,) = self.binders(env, 1)
                return f"({x} : {self.show(d, env)}) {op} {self.show(c, env + [x])}", EXPR
            case App(f, a):
                return f"{self.at(f, env, APP)} {self.at(a, env, ATOM)}", APP
            case Pair(a, b):
                return f"({self.show(a, env)}, {self.show(b, env)})", ATOM
            case Proj1(p):
                return f"fst {self.at(p, env, ATOM)}", APP
            case Proj2(p):
                return f"snd {self.at(p, env, ATOM)}", APP
            case Unit():
                return "Unit", ATOM
            case Star():
                return "tt", ATOM
            case Nat():
                return "Nat", ATOM
            case Zero():
                return "zero", ATOM
            case Succ(n):
                return f"succ {self.at(n, env, ATOM)}", APP
            case Sum(l, r):
                return f"{self.at(l, env, PROD)} + {self.at(r, env, SUM)}", SUM
            case Inl(v):
                return f"inl {self.at(v, env, ATOM)}", APP
            case Inr(v):
                return f"inr {self.at(v, env, ATOM)}", APP
            case SumElim(c, l, r, s):
                return (f"case({self.bound(c, env, 1)}; {self.bound(l, env, 1)}; "
                        f"{self.bound(r, env, 1)}; {self.show(s, env)})"), ATOM
            case Id(ty, a, b):
                if isinstance(ty, Carrier) and self.schema is not None:
                    return f"{self.at(a, env, SUM)} = {self.at(b, env, SUM)}", EXPR
                parts = " ".join(self.at(x, env, ATOM) for x in (ty, a, b))
                return f"Id {parts}", APP
            case Refl(a):
                return f"refl {self.at(a, env, ATOM)}", APP
            case ReflOver(a):
                return f"refl' {self.at(a, env, ATOM)}", APP
            case J(c, base, a1, a2, p):
                args = ", ".join(self.show(x, env) for x in (a1, a2, p))
                return f"J({self.bound(c, env, 3, 'xye')}; {self.bound(base, env, 1, 'x')}; {args})", ATOM
            case JOver(c, base, args):
                rest = ", ".join(self.show(x, env) for x in args)
                return f"J'({self.bound(c, env, 6, 'xyeuvd')}; {self.bound(base, env, 2, 'xu')}; {rest})", ATOM
            case IdOver(fam, p, u, v):
                parts = " ".join(self.at(x, env, ATOM) for x in (p, u, v))
                return f"IdOver[{self.bound(fam, env, 1)}] {parts}", APP
            case Ap(f, a1, a2, p):
                args = ", ".join(self.show(x, env) for x in (a1, a2, p))
                return f"ap({self.bound(f, env, 1)}; {args})", ATOM
            case NatElim(c, z, s, n):
                return (f"natrec({self.bound(c, env, 1)}; {self.show(z, env)}; "
                        f"{self.bound(s, env, 2)}; {self.show(n, env)})"), ATOM
            case Square():
                sides = ", ".join(self.show(x, env) for x in (t.top, t.bottom, t.left, t.right))
                return f"Square({sides})", ATOM
            case SquareOver(fam, sq):
                sides = ", ".join(self.show(x, env) for x in (t.top, t.bottom, t.left, t.right))
                return f"SquareOver[{self.bound(fam, env, 1)}]({self.show(sq, env)}; {sides})", ATOM
            case Binder(n, body):
                return self.bound(body, env, n), EXPR
            case SchemaType(h, ps):
                return f"{h}{self.params(ps, env)}", ATOM
            case SchemaCtor(h, ps, j, args):
                cname = self.cell_name(h, j)
                tail = f"({', '.join(self.show(a, env) for a in args)})" if args else ""
                return f"{h}.{cname}{self.params(ps, env)}{tail}", ATOM
            case SchemaElim(h, ps, c, ms, s):
                methods = ", ".join(self.show(m, env) for m in ms)
                return f"{h}.elim{self.params(ps, env)}({self.bound(c, env, 1)}; {methods}; {self.show(s, env)})", ATOM
            case SchemaPathComp(h, j, ps, c, ms, args):
                methods = ", ".join(self.show(m, env) for m in ms)
                rest = ", ".join(self.show(a, env) for a in args)
                cname = self.cell_name(h, j)
                return f"{h}.comp.{cname}{self.params(ps, env)}({self.bound(c, env, 1)}; {methods}; {rest})", ATOM
            case Param(i, args):
                name = self.schema.params.entries[i].name if self.schema else f"#param{i}"
                return self.headed(name, args, env)
            case Con(j, args):
                name = self.schema.cells[j].name if self.schema else f"#con{j}"
                return self.headed(name, args, env)
            case Carrier():
                return (self.schema.name if self.schema else "#X"), ATOM
            case Meta(name, args):
                inner = ", ".join(self.show(a, env) for a in args)
                return f"?{name}({inner})", ATOM
            case _TypeSort():
                return "Type", ATOM
        raise ValueError(f"cannot print {t!r}")

    def headed(self, name, args, env):
        if not args:
            return name, ATOM
        return f"{name} {' '.join(self.at(a, env, ATOM) for a in args)}", APP

    def params(self, ps, env):
        if not ps:
            return ""
        return "[" + ", ".join(self.show(p, env) for p in ps) + "]"

    def cell_name(self, h, j):
        sch = self.registry.get(h)
        if sch is None and self.schema is not None and self.schema.name == h:
            sch = self.schema
        return sch.cells[j].name if sch is not None else f"#{j}"


def pretty_print(t: Term, ctx=(), registry=None, schema=None) -> str:
    """Render t; ctx is a list of names (outermost first) or a TypingContext."""
    if isinstance(ctx, TypingContext):
        ctx = list(ctx.names)
    return Printer(registry, schema).show(t, list(ctx))


def pretty_schema(s: Schema, registry=None) -> str:
    pr = Printer(registry, s)
    lines = []
    head = f"schema {s.name}"
    for i, p in enumerate(s.params.entries):
        env: list[str] = []
        parts = []
        for nm, ty in p.tele:
            x = pr.fresh(env, nm if not nm.startswith("x") else None)
            parts.append(f"({x} : {pr.show(ty, env)})")
            env.append(x)
        tail = "Type" if isinstance(p, TypeParam) else pr.show(p.type, env)
        head += f" ({p.name} : {' -> '.join(parts + [tail]) if parts else tail})"
    lines.append(head + " {")
    for c in s.cells:
        env = []
        tele = []
        for nm, ty in c.telescope:
            x = pr.fresh(env, nm)
            tele.append(f"({x} : {pr.show(ty, env)})")
            env.append(x)
        tstr = (" " + " ".join(tele)) if tele else ""
        match c.dim:
            case Point():
                lines.append(f"  point {c.name}{tstr}")
            case Path():
                a, b = (pr.at(x, env, SUM) for x in c.boundary)
                lines.append(f"  path {c.name}{tstr} : {a} = {b}")
            case SquareBoundary():
                lines.append(f"  cell {c.name}{tstr} : square({', '.join(pr.show(x, env) for x in c.boundary)})")
            case Globe(n):
                dim = "" if n == 2 else f"[{n}]"
                lines.append(f"  cell {c.name}{tstr} : globe{dim}({', '.join(pr.show(x, env) for x in c.boundary)})")
    lines.append("}")
    return "\n".join(lines)
