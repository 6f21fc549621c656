"""Schema validation and generation of formation/intro/elim/computation rules."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cache
from importlib import resources

from .syntax_core import (
    EMPTY, Ap, Binder, Carrier, CellSpec, Con, Globe, Id, J, JOver, KernelError,
    Meta, NatElim, Param, ParamScheme, Path, Pi, Point, Schema, SchemaElim, SchemaPathComp, Square, SquareBoundary, Term,
    TermParam, TypeParam, Var, free_vars, map_children, shift,
    subterms,
)
from .typechecker import Inst, Kernel, TypeCheckError

__all__ = [
    "TypeParam", "TermParam", "ParamScheme", "CellSpec", "Point", "Path",
    "SquareBoundary", "Globe", "Schema", "SchemaError", "PositivityError",
    "FibrantStructureError", "BoundaryMismatch", "validate_param_scheme",
    "validate_cells", "validate_schema", "generate_rules", "RuleSet", "Rule",
    "Judgment", "Rewrite", "canonical", "builtin_schemas", "builtin_registry",
]


class SchemaError(KernelError):
    kind = "SchemaError"

    def __init__(self, message, cell=None, span=None):
        super().__init__(message, span)
        self.cell = cell


class PositivityError(SchemaError):
    kind = "PositivityError"


class FibrantStructureError(SchemaError):
    kind = "FibrantStructureError"

    def __init__(self, node, cell, span=None):
        super().__init__(f"{node} may not appear in the boundary of {cell}", cell, span)
        self.node = node


class BoundaryMismatch(SchemaError):
    kind = "BoundaryMismatch"


# J, J', ap and the recursors need fibrant structure that a cell boundary
# does not have access to; case analysis on sums is fine.
BANNED = (J, JOver, Ap, NatElim, SchemaElim, SchemaPathComp)


def _local_kernel(s: Schema, registry) -> Kernel:
    k = Kernel(registry if registry is not None else builtin_registry())
    k.local = s
    return k


# -- parameter schemes ------------------------------------------------------------

def validate_param_scheme(s: Schema | ParamScheme, registry=None):
    """Each entry may only mention earlier entries; types must be well formed."""
    if isinstance(s, ParamScheme):
        s = Schema("_", s, ())
    k = _local_kernel(s, registry)
    for i, entry in enumerate(s.params.entries):
        k._param_limit = i
        ctx = EMPTY
        try:
            for nm, ty in entry.tele:
                _no_carrier(ty, f"parameter {entry.name}")
                k.check_type(ctx, ty)
                ctx = ctx.extend(ty, nm)
            if isinstance(entry, TermParam):
                _no_carrier(entry.type, f"parameter {entry.name}")
                k.check_type(ctx, entry.type)
        except TypeCheckError as e:
            raise SchemaError(f"parameter {entry.name}: {e.message}") from None
    k._param_limit = len(s.params.entries)


def _no_carrier(t, where):
    if any(isinstance(x, (Carrier, Con)) for x in subterms(t)):
        raise SchemaError(f"{where} mentions the type being defined")


# -- cells ----------------------------------------------------------------------

def validate_cells(s: Schema, registry=None):
    k = _local_kernel(s, registry)
    k._param_limit = len(s.params.entries)
    for j, cell in enumerate(s.cells):
        _check_references(s, j, cell)
        _check_fibrant(cell)
        _check_positivity(cell)
        k.local_limit = j
        _check_boundary(k, s, j, cell)


def validate_schema(s: Schema, registry=None):
    validate_param_scheme(s, registry)
    validate_cells(s, registry)


def _check_references(s, j, cell):
    terms = [ty for _, ty in cell.telescope] + list(cell.boundary)
    for t in terms:
        for x in subterms(t):
            if isinstance(x, Con) and x.index >= j:
                other = s.cells[x.index].name if x.index < len(s.cells) else f"#{x.index}"
                raise SchemaError(f"{cell.name} refers to {other}, which is not declared before it", cell.name)
            if isinstance(x, Param) and x.index >= len(s.params.entries):
                raise SchemaError(f"{cell.name} refers to an unknown parameter", cell.name)
    expected = {Point: 0, Path: 2, SquareBoundary: 4, Globe: 2}
    if len(cell.boundary) != expected[type(cell.dim)]:
        raise SchemaError(f"{cell.name} has a boundary of the wrong shape", cell.name)
    if isinstance(cell.dim, Globe) and cell.dim.n != 2:
        raise SchemaError(f"{cell.name}: unsupported dimension {cell.dim.n}", cell.name)
    if isinstance(cell.dim, (SquareBoundary, Globe)):
        for t in cell.boundary:
            for x in subterms(t):
                if isinstance(x, Con) and not isinstance(s.cells[x.index].dim, (Point, Path)):
                    raise SchemaError(f"{cell.name}: unsupported dimension (boundary uses a 2-cell)", cell.name)


def _check_fibrant(cell):
    for t in cell.boundary:
        for x in subterms(t):
            if isinstance(x, BANNED):
                raise FibrantStructureError(type(x).__name__, cell.name)


def _check_positivity(cell):
    rec = []
    for k, (nm, ty) in enumerate(cell.telescope):
        bad = {k - 1 - m for m in rec}
        if any(isinstance(x, Carrier) for x in subterms(ty)):
            depth = 0
            t = ty
            while isinstance(t, Pi):
                if _mentions_carrier(t.domain) or free_vars(t.domain) & {b + depth for b in bad}:
                    raise PositivityError(f"{cell.name}: {nm} uses the carrier in a negative position", cell.name)
                t = t.codomain
                depth += 1
            if not isinstance(t, Carrier):
                raise PositivityError(f"{cell.name}: {nm} must be a family of elements of the carrier", cell.name)
            rec.append(k)
        elif free_vars(ty) & bad:
            raise PositivityError(f"{cell.name}: the type of {nm} depends on a recursive argument", cell.name)


def _mentions_carrier(t):
    return any(isinstance(x, Carrier) for x in subterms(t))


def _check_boundary(k: Kernel, s, j, cell):
    ctx = EMPTY
    try:
        for nm, ty in cell.telescope:
            k.check_type(ctx, ty)
            ctx = ctx.extend(ty, nm)
        match cell.dim:
            case Path():
                for b in cell.boundary:
                    k.check(ctx, b, Carrier())
            case SquareBoundary():
                sides = [k.infer(ctx, b) for b in cell.boundary]
                for side in sides:
                    side = k._whnf_fresh(side)
                    if not (isinstance(side, Id) and isinstance(side.type, Carrier)):
                        raise BoundaryMismatch(f"{cell.name}: square sides must be paths in {s.name}", cell.name)
                k.check_type(ctx, Square(*cell.boundary))
            case Globe():
                p, q = (k._path_type(ctx, b) for b in cell.boundary)
                if not isinstance(p[0], Carrier) or not isinstance(q[0], Carrier):
                    raise BoundaryMismatch(f"{cell.name}: globe sides must be paths in {s.name}", cell.name)
                if not (k.def_equal(ctx, p[1], q[1]) and k.def_equal(ctx, p[2], q[2])):
                    raise BoundaryMismatch(f"{cell.name}: globe sides have different endpoints", cell.name)
    except TypeCheckError as e:
        if e.kind == "BoundaryMismatch":
            raise BoundaryMismatch(f"{cell.name}: {e.message}", cell.name) from None
        raise SchemaError(f"{cell.name}: {e.message}", cell.name) from None


# -- generated rules -----------------------------------------------------------

@dataclass(frozen=True)
class Judgment:
    """context |- subject : type  (type None means `subject type`)."""
    context: tuple            # ((name, Term), ...)
    subject: Term
    type: Term | None


@dataclass(frozen=True)
class Rule:
    name: str
    premises: tuple
    conclusion: Judgment


@dataclass(frozen=True)
class Rewrite:
    name: str
    context: tuple
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class RuleSet:
    schema: str
    formation: Rule
    intros: tuple
    elim: Rule
    betas: tuple
    path_comps: tuple


def generic_params(s: Schema):
    out = []
    for i, e in enumerate(s.params.entries):
        n = len(e.tele)
        out.append(Binder(n, Param(i, tuple(Var(n - 1 - m) for m in range(n)))))
    return tuple(out)


def _vars(n, offset=0):
    return tuple(Var(offset + n - 1 - m) for m in range(n))


def _named(names, tys):
    return tuple(zip(names, tys))


def rule_kernel(s: Schema, registry=None) -> Kernel:
    """A kernel where s's parameters are opaque and motive/methods are metas."""
    k = _local_kernel(s, registry)
    k.local_limit = len(s.cells)
    k._param_limit = len(s.params.entries)
    k.schemas = dict(k.schemas)
    k.schemas[s.name] = s
    inst = Inst(s, generic_params(s))
    carrier = inst.carrier()
    motive = Meta("C", (Var(0),))
    methods = tuple(Binder(c.method_arity, Meta(f"m_{c.name}", _vars(c.method_arity))) for c in s.cells)
    k.metas["C"] = ((carrier,), None)
    for j, c in enumerate(s.cells):
        tys, _ = k.method_context(inst, j, motive)
        ctx = EMPTY.extend_many(tys)
        k.metas[f"m_{c.name}"] = (tuple(tys), k.method_type(ctx, inst, j, motive, methods))
    k.metas["s"] = ((), carrier)
    return k


def generate_rules(s: Schema, registry=None) -> RuleSet:
    validate_schema(s, registry)
    k = rule_kernel(s, registry)
    ps = generic_params(s)
    inst = Inst(s, ps)
    carrier = inst.carrier()
    nf = lambda t: k.normalize(EMPTY, t)  # noqa: E731

    premises = []
    for i, e in enumerate(s.params.entries):
        n = len(e.tele)
        tele = _named([nm for nm, _ in e.tele], [inst.term(ty, m) for m, (_, ty) in enumerate(e.tele)])
        ty = None if isinstance(e, TypeParam) else inst.term(e.type, n)
        premises.append(Judgment(tele, Param(i, _vars(n)), ty))
    formation = Rule(f"{s.name}-form", tuple(premises), Judgment((), carrier, None))

    intros = []
    for j, c in enumerate(s.cells):
        tele = _named([nm for nm, _ in c.telescope], inst.tele(j))
        subj = inst.ctor(j, _vars(c.arity), c.arity)
        ty = nf(k.cell_result_type(EMPTY.extend_many(inst.tele(j)), inst, j))
        intros.append(Rule(c.name, (), Judgment(tele, subj, ty)))

    motive = Meta("C", (Var(0),))
    methods = tuple(Binder(c.method_arity, Meta(f"m_{c.name}", _vars(c.method_arity))) for c in s.cells)
    prem = [Judgment((("u", carrier),), motive, None)]
    for j, c in enumerate(s.cells):
        tys, names = k.method_context(inst, j, motive)
        prem.append(Judgment(_named(names, tys), methods[j].body, nf(k.metas[f"m_{c.name}"][1])))
    prem.append(Judgment((), Meta("s", ()), carrier))
    elim_term = SchemaElim(s.name, ps, motive, methods, Meta("s", ()))
    elim = Rule(f"{s.name}-elim", tuple(prem), Judgment((), elim_term, Meta("C", (Meta("s", ()),))))

    betas, comps = [], []
    for j, c in enumerate(s.cells):
        n = c.arity
        tele = _named([nm for nm, _ in c.telescope], inst.tele(j))
        xs = _vars(n)
        sh = lambda t: shift(t, 0, n)  # noqa: E731
        if isinstance(c.dim, Point):
            lhs = SchemaElim(s.name, tuple(map(sh, ps)), shift(motive, 1, n), tuple(map(sh, methods)),
                             inst.ctor(j, xs, n))
            rhs = k.elim_beta(s, tuple(map(sh, ps)), shift(motive, 1, n), tuple(map(sh, methods)), j, xs)
            betas.append(Rewrite(f"{c.name}-beta", tele, lhs, nf(rhs)))
        elif isinstance(c.dim, Path):
            w = SchemaPathComp(s.name, j, tuple(map(sh, ps)), shift(motive, 1, n), tuple(map(sh, methods)), xs)
            ctx = EMPTY.extend_many(inst.tele(j))
            ty = k.path_comp_type(ctx, s, j, w.params, w.motive, w.methods, xs)
            comps.append(Rule(f"{c.name}-comp", (), Judgment(tele, w, nf(ty))))
    return RuleSet(s.name, formation, tuple(intros), elim, tuple(betas), tuple(comps))


def check_rules(s: Schema, rs: RuleSet, registry=None):
    """Type-check every generated clause against the kernel; raises on failure."""
    k = rule_kernel(s, registry)
    for r in (rs.formation, *rs.intros, rs.elim, *rs.path_comps):
        for jd in (*r.premises, r.conclusion):
            ctx = _ctx(k, jd.context)
            if jd.type is None:
                k.check_type(ctx, jd.subject)
            else:
                k.check_type(ctx, jd.type)
                k.check(ctx, jd.subject, jd.type)
    for b in rs.betas:
        ctx = _ctx(k, b.context)
        ty = k.infer(ctx, b.lhs)
        k.check(ctx, b.rhs, ty)
        if not k.def_equal(ctx, b.lhs, b.rhs):
            raise TypeCheckError("Mismatch", f"{b.name} does not hold definitionally")


def _ctx(k, named):
    ctx = EMPTY
    for nm, ty in named:
        k.check_type(ctx, ty)
        ctx = ctx.extend(ty, nm)
    return ctx


# -- comparison up to renaming ---------------------------------------------------

def canonical(obj):
    """Erase binder names and rename metavariables by first occurrence."""
    names: dict = {}

    def term(t):
        if isinstance(t, Meta):
            nm = names.setdefault(t.name, f"?{len(names)}")
            return Meta(nm, tuple(term(a) for a in t.args))
        return map_children(t, lambda c, _: term(c))

    def go(o):
        match o:
            case Term():
                return term(o)
            case Judgment(ctx, subj, ty):
                return (tuple(term(t) for _, t in ctx), term(subj), None if ty is None else term(ty))
            case Rule(_, prem, concl):
                return (tuple(go(p) for p in prem), go(concl))
            case Rewrite(_, ctx, lhs, rhs):
                return (tuple(term(t) for _, t in ctx), term(lhs), term(rhs))
            case RuleSet():
                return (go(o.formation), tuple(go(r) for r in o.intros), go(o.elim),
                        tuple(go(r) for r in o.betas), tuple(go(r) for r in o.path_comps))
        raise TypeError(f"cannot canonicalise {type(o).__name__}")

    return go(obj)


# -- builtin schemas -------------------------------------------------------------

@cache
def _builtins() -> tuple:
    from .surface_parser import parse_module
    text = resources.files(__package__).joinpath("prelude.hit").read_text(encoding="utf-8")
    mod = parse_module(text, "prelude.hit", registry={})
    out = []
    reg = {}
    for d in mod.schemas():
        validate_schema(d.schema, reg)
        reg[d.schema.name] = d.schema
        out.append(d.schema)
    return tuple(out)


def builtin_schemas() -> list:
    return list(_builtins())


def builtin_registry() -> dict:
    return {s.name: s for s in _builtins()}

