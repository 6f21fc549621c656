"""Bidirectional checking, head reduction and definitional equality."""
from __future__ import annotations

from dataclasses import dataclass

from .syntax_core import (
    EMPTY, Ap, App, Binder, Carrier, Con, Globe, Id, IdOver, Inl, Inr,
    J, JOver, KernelError, Lam, Meta, Nat, NatElim, Pair, Param, Path, Pi, Point,
    Proj1, Proj2, Refl, ReflOver, Schema, SchemaCtor, SchemaElim, SchemaPathComp,
    SchemaType, Sigma, Square, SquareBoundary, SquareOver, Star, Succ, Sum,
    SumElim, Term, TermParam, TypeParam, TypingContext, Unit, Var, Zero,
    instantiate, map_children, shift, substitute,
)

DEFAULT_FUEL = 10000


class TypeCheckError(KernelError):
    """Typing failure; `kind` is Mismatch, NotAFunction, UnboundSchema, ..."""

    def __init__(self, kind, message, expected=None, actual=None, span=None):
        super().__init__(message, span)
        self.kind = kind
        self.expected = expected
        self.actual = actual


class FuelExhausted(KernelError):
    kind = "FuelExhausted"


class _NoRedex:
    def __repr__(self):
        return "NoRedex"

    def __bool__(self):
        return False


NoRedex = _NoRedex()


def open_at(body: Term, nbind: int, extra: int, args) -> Term:
    """Instantiate a body binding `nbind` variables at a context `extra` deeper."""
    return instantiate(shift(body, nbind, extra), args)


def apps(f: Term, args) -> Term:
    for a in args:
        f = App(f, a)
    return f


def spine(t: Term):
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    return t, args[::-1]


def lams(n: int, body: Term) -> Term:
    for _ in range(n):
        body = Lam(body)
    return body


def apply_to_fresh(t: Term, n: int) -> Term:
    """t v_{n-1} .. v_0 under n new binders, contracting literal lambdas."""
    t = shift(t, 0, n)
    for i in range(n):
        a = Var(n - 1 - i)
        t = substitute(t.body, 0, a) if isinstance(t, Lam) else App(t, a)
    return t


# -- schema instances ----------------------------------------------------------

@dataclass
class Inst:
    """A schema seen either at concrete parameters or from inside its declaration."""
    schema: Schema
    params: tuple | None = None

    @property
    def local(self):
        return self.params is None

    def ps(self, d=0):
        return tuple(shift(p, 0, d) for p in self.params)

    def carrier(self, d=0):
        return Carrier() if self.local else SchemaType(self.schema.name, self.ps(d))

    def ctor(self, j, args, d=0):
        return Con(j, tuple(args)) if self.local else SchemaCtor(self.schema.name, self.ps(d), j, tuple(args))

    def term(self, t: Term, d: int = 0) -> Term:
        """Translate an attaching term living `d` binders below the ambient context."""
        if self.local:
            return t

        def go(t, d):
            match t:
                case Param(i, args):
                    b = self.params[i]
                    n = b.arity if isinstance(b, Binder) else 0
                    body = b.body if isinstance(b, Binder) else b
                    return instantiate(shift(body, n, d), [go(a, d) for a in args])
                case Carrier():
                    return self.carrier(d)
                case Con(j, args):
                    return self.ctor(j, [go(a, d) for a in args], d)
            return map_children(t, lambda c, k: go(c, d + k))

        return go(t, d)

    def tele(self, j):
        cell = self.schema.cells[j]
        return [self.term(ty, k) for k, (_, ty) in enumerate(cell.telescope)]

    def boundary(self, j):
        cell = self.schema.cells[j]
        n = cell.arity
        return [self.term(b, n) for b in cell.boundary]


def _binder_parts(b):
    if isinstance(b, Binder):
        return b.arity, b.body
    return 0, b


# -- the kernel ----------------------------------------------------------------

class Kernel:
    def __init__(self, schemas=None, fuel=DEFAULT_FUEL):
        if schemas is None:
            from .hit_schema import builtin_registry
            schemas = builtin_registry()
        self.schemas = dict(schemas)
        self.fuel = fuel
        self.local: Schema | None = None
        self.local_limit = 0
        self.metas: dict = {}
        self._budget = fuel

    # .. lookup

    def schema(self, name):
        if self.local is not None and name == self.local.name and name not in self.schemas:
            return self.local
        try:
            return self.schemas[name]
        except KeyError:
            raise TypeCheckError("UnboundSchema", f"unknown schema {name}") from None

    # .. reduction

    def _tick(self):
        self._budget -= 1
        if self._budget < 0:
            raise FuelExhausted(f"normalization exceeded {self.fuel} steps")

    def _contract(self, t):
        match t:
            case App(Lam(body), a):
                return substitute(body, 0, a)
            case Proj1(Pair(a, _)):
                return a
            case Proj2(Pair(_, b)):
                return b
            case SumElim(_, l, _, Inl(v)):
                return substitute(l, 0, v)
            case SumElim(_, _, r, Inr(v)):
                return substitute(r, 0, v)
            case J(_, base, _, _, Refl(a)):
                return substitute(base, 0, a)
            case JOver(_, base, (_, _, Refl(a), _, _, ReflOver(b))):
                return instantiate(base, (a, b))
            case Ap(f, _, _, Refl(a)):
                return ReflOver(substitute(f, 0, a))
            case NatElim(_, z, _, Zero()):
                return z
            case NatElim(c, z, s, Succ(n)):
                return instantiate(s, (n, NatElim(c, z, s, n)))
            case SchemaElim(h, ps, c, ms, SchemaCtor(h2, _, j, args)) if h == h2:
                sch = self.schema(h)
                if not isinstance(sch.cells[j].dim, Point):
                    return None
                return self.elim_beta(sch, ps, c, ms, j, args)
        return None

    def elim_beta(self, sch, ps, motive, methods, j, args):
        cell = sch.cells[j]
        ihs = []
        for a, depth in zip(args, cell.recursive_positions()):
            if depth is None:
                continue
            ihs.append(self._ih_value(sch, ps, motive, methods, a, depth))
        _, body = _binder_parts(methods[j])
        return instantiate(body, tuple(args) + tuple(ihs))

    def _ih_value(self, sch, ps, motive, methods, arg, depth):
        inner = apply_to_fresh(arg, depth)
        e = SchemaElim(sch.name, tuple(shift(p, 0, depth) for p in ps), shift(motive, 1, depth),
                       tuple(shift(m, 0, depth) for m in methods), inner)
        return lams(depth, e)

    def _step(self, t):
        r = self._contract(t)
        if r is not None:
            return r
        match t:
            case App(f, a):
                s = self._step(f)
                return None if s is None else App(s, a)
            case Proj1(p):
                s = self._step(p)
                return None if s is None else Proj1(s)
            case Proj2(p):
                s = self._step(p)
                return None if s is None else Proj2(s)
            case SumElim(c, l, r_, s0):
                s = self._step(s0)
                return None if s is None else SumElim(c, l, r_, s)
            case J(c, b, a1, a2, p):
                s = self._step(p)
                return None if s is None else J(c, b, a1, a2, s)
            case JOver(c, b, args):
                if not isinstance(args[2], Refl):
                    s = self._step(args[2])
                    return None if s is None else JOver(c, b, args[:2] + (s,) + args[3:])
                s = self._step(args[5])
                return None if s is None else JOver(c, b, args[:5] + (s,))
            case Ap(f, a1, a2, p):
                s = self._step(p)
                return None if s is None else Ap(f, a1, a2, s)
            case NatElim(c, z, sc, n):
                s = self._step(n)
                return None if s is None else NatElim(c, z, sc, s)
            case SchemaElim(h, ps, c, ms, sc):
                s = self._step(sc)
                return None if s is None else SchemaElim(h, ps, c, ms, s)
        return None

    def reduce_step(self, t):
        r = self._step(t)
        return NoRedex if r is None else r

    def whnf(self, t):
        while True:
            r = self._step(t)
            if r is None:
                return t
            self._tick()
            t = r

    def _nf(self, t):
        t = self.whnf(t)
        return map_children(t, lambda c, k: self._nf(c))

    def normalize(self, ctx, t):
        self._budget = self.fuel
        return self._nf(t)

    def def_equal(self, ctx, t, u):
        if t == u:
            return True
        self._budget = self.fuel
        return self._nf(t) == self._nf(u)

    def _whnf_fresh(self, t):
        self._budget = self.fuel
        return self.whnf(t)

    # .. errors

    def _mismatch(self, ctx, expected, actual, what="term"):
        from .surface_parser import pretty_print
        names = list(ctx.names)
        msg = f"{what}: expected {pretty_print(expected, names)}, got {pretty_print(actual, names)}"
        return TypeCheckError("Mismatch", msg, expected, actual)

    def _expect_equal(self, ctx, expected, actual, what="type"):
        if not self.def_equal(ctx, expected, actual):
            raise self._mismatch(ctx, expected, actual, what)

    # .. types

    def check_type(self, ctx, a):
        match a:
            case Unit() | Nat():
                return
            case Pi(d, c) | Sigma(d, c):
                self.check_type(ctx, d)
                self.check_type(ctx.extend(d), c)
                return
            case Sum(l, r):
                self.check_type(ctx, l)
                self.check_type(ctx, r)
                return
            case Id(ty, l, r):
                self.check_type(ctx, ty)
                self.check(ctx, l, ty)
                self.check(ctx, r, ty)
                return
            case IdOver(fam, p, u, v):
                base, a1, a2 = self._infer_path(ctx, p)
                self.check_type(ctx.extend(base), fam)
                self.check(ctx, u, substitute(fam, 0, a1))
                self.check(ctx, v, substitute(fam, 0, a2))
                return
            case Square(top, bottom, left, right):
                self._square_sides(ctx, [self.infer(ctx, s) for s in (top, bottom, left, right)], Id)
                return
            case SquareOver(fam, sq, top, bottom, left, right):
                st = self._whnf_fresh(self.infer(ctx, sq))
                if not isinstance(st, Square):
                    raise TypeCheckError("Mismatch", "SquareOver needs a square", None, st)
                x = self._path_type(ctx, st.top)[0]
                self.check_type(ctx.extend(x), fam)
                sides = [self._whnf_fresh(self.infer(ctx, s)) for s in (top, bottom, left, right)]
                for s, base in zip(sides, (st.top, st.bottom, st.left, st.right)):
                    if not isinstance(s, IdOver):
                        raise TypeCheckError("Mismatch", "square side over a path expected", None, s)
                    self._expect_equal(ctx, fam, s.family, "square family")
                    self._expect_equal(ctx, base, s.base_path, "square side")
                self._square_sides(ctx, sides, IdOver)
                return
            case SchemaType(h, ps):
                self.check_params(ctx, self.schema(h), ps)
                return
            case Carrier() if self.local is not None:
                return
            case Param(i, args) if self.local is not None:
                entry = self._param_entry(i)
                if isinstance(entry, TypeParam):
                    self._check_args(ctx, [ty for _, ty in entry.tele], args)
                    return
            case Meta(name, args) if name in self.metas and self.metas[name][1] is None:
                self._check_args(ctx, self.metas[name][0], args)
                return
        raise TypeCheckError("NotAType", f"not a type: {type(a).__name__}", None, a)

    def _square_sides(self, ctx, sides, former):
        sides = [self._whnf_fresh(s) for s in sides]
        for s in sides:
            if not isinstance(s, former):
                raise TypeCheckError("BoundaryMismatch", "square side is not a path", None, s)
        top, bottom, left, right = [(s.lhs, s.rhs) if former is Id else (s.u, s.v) for s in sides]
        if former is Id:
            for s in sides[1:]:
                self._expect_equal(ctx, sides[0].type, s.type, "square side type")
        pairs = [(top[0], left[0]), (top[1], right[0]), (bottom[0], left[1]), (bottom[1], right[1])]
        for a, b in pairs:
            if not self.def_equal(ctx, a, b):
                raise TypeCheckError("BoundaryMismatch", "square corners do not match", a, b)

    def _path_type(self, ctx, p):
        ty = self._whnf_fresh(self.infer(ctx, p))
        if not isinstance(ty, Id):
            raise TypeCheckError("Mismatch", "expected an identification", None, ty)
        return ty.type, ty.lhs, ty.rhs

    def _infer_path(self, ctx, p):
        return self._path_type(ctx, p)

    # .. parameters

    def _param_entry(self, i):
        entries = self.local.params.entries
        if i >= len(entries) or i >= getattr(self, "_param_limit", len(entries)):
            raise TypeCheckError("UnboundParam", f"parameter {i} not in scope")
        return entries[i]

    def _check_args(self, ctx, tele, args):
        if len(tele) != len(args):
            raise TypeCheckError("ArityMismatch", f"expected {len(tele)} arguments, got {len(args)}")
        for k, (ty, a) in enumerate(zip(tele, args)):
            self.check(ctx, a, instantiate(ty, args[:k]))

    def check_params(self, ctx, sch, ps):
        entries = sch.params.entries
        if len(ps) != len(entries):
            raise TypeCheckError("ArityMismatch", f"{sch.name} takes {len(entries)} parameters, got {len(ps)}")
        inst = Inst(sch, tuple(ps))
        for i, (entry, p) in enumerate(zip(entries, ps)):
            n, body = _binder_parts(p)
            if n != len(entry.tele):
                raise TypeCheckError("ArityMismatch", f"parameter {entry.name} binds {len(entry.tele)} variables")
            tys = [inst.term(ty, k) for k, (_, ty) in enumerate(entry.tele)]
            inner = ctx.extend_many(tys, [nm for nm, _ in entry.tele])
            if isinstance(entry, TypeParam):
                self.check_type(inner, body)
            else:
                self.check(inner, body, inst.term(entry.type, n))

    # .. cells

    def cell_result_type(self, ctx, inst: Inst, j):
        """Type of constructor j applied to its own telescope variables."""
        cell = inst.schema.cells[j]
        n = cell.arity
        match cell.dim:
            case Point():
                return inst.carrier(n)
            case Path():
                src, tgt = inst.boundary(j)
                return Id(inst.carrier(n), src, tgt)
            case SquareBoundary():
                return Square(*inst.boundary(j))
            case Globe():
                p, q = inst.boundary(j)
                inner = ctx.extend_many(inst.tele(j))
                return Id(self.infer(inner, p), p, q)
        raise TypeCheckError("SchemaError", f"unsupported dimension {cell.dim}")

    def ctor_type(self, ctx, inst, j, args):
        tele = inst.tele(j)
        self._check_args(ctx, tele, args)
        return instantiate(self.cell_result_type(ctx, inst, j), args)

    def method_context(self, inst, j, motive):
        """(types, names) of the variables a method for cell j binds."""
        cell = inst.schema.cells[j]
        tele = inst.tele(j)
        n = cell.arity
        tys = list(tele)
        names = [nm for nm, _ in cell.telescope]
        r = 0
        for k, depth in enumerate(cell.recursive_positions()):
            if depth is None:
                continue
            here = n + r
            xk = here - 1 - k
            tys.append(self._ih_type(shift(tele[k], 0, here - k), xk, here, motive))
            names.append(f"ih_{names[k]}")
            r += 1
        return tys, names

    def _ih_type(self, ty, xk, here, motive):
        doms = []
        while isinstance(ty, Pi):
            doms.append(ty.domain)
            ty = ty.codomain
        m = len(doms)
        head = Var(xk + m)
        for i in range(m):
            head = App(head, Var(m - 1 - i))
        out = substitute(shift(motive, 1, here + m), 0, head)
        for d in reversed(doms):
            out = Pi(d, out)
        return out

    def method_type(self, ctx, inst, j, motive, methods):
        """Expected type of method j, in ctx extended by method_context."""
        cell = inst.schema.cells[j]
        n = cell.arity
        rec = [d for d in cell.recursive_positions() if d is not None]
        width = n + len(rec)
        xs = [Var(width - 1 - k) for k in range(n)]
        target = inst.ctor(j, xs, width)
        fam = shift(motive, 1, width)
        interp = _Interp(self, inst, cell, motive, methods, width)
        match cell.dim:
            case Point():
                return substitute(fam, 0, target)
            case Path():
                src, tgt = [shift(b, 0, len(rec)) for b in inst.boundary(j)]
                return IdOver(fam, target, interp.point(src), interp.point(tgt))
            case SquareBoundary():
                sides = [interp.path(shift(b, 0, len(rec))) for b in inst.boundary(j)]
                return SquareOver(fam, target, *sides)
            case Globe():
                p, q = [shift(b, 0, len(rec)) for b in inst.boundary(j)]
                _, a, b = self._path_type(ctx, p)
                ia, ib = interp.point(a), interp.point(b)
                family = IdOver(shift(fam, 1, 1), Var(0), shift(ia, 0, 1), shift(ib, 0, 1))
                return IdOver(family, target, interp.path(p), interp.path(q))
        raise TypeCheckError("SchemaError", "unsupported dimension")

    def _check_elim_parts(self, ctx, sch, ps, motive, methods):
        self.check_params(ctx, sch, ps)
        inst = Inst(sch, tuple(ps))
        carrier = SchemaType(sch.name, tuple(ps))
        try:
            self.check_type(ctx.extend(carrier, "u"), motive)
        except TypeCheckError as e:
            raise TypeCheckError("IllTypedMotive", f"motive: {e.message}", e.expected, e.actual) from None
        if len(methods) != len(sch.cells):
            raise TypeCheckError("ArityMismatch", f"{sch.name} eliminator takes {len(sch.cells)} methods")
        for j, m in enumerate(methods):
            n, body = _binder_parts(m)
            cell = sch.cells[j]
            if n != cell.method_arity:
                raise TypeCheckError("ArityMismatch", f"method for {cell.name} binds {cell.method_arity} variables, got {n}")
            tys, names = self.method_context(inst, j, motive)
            inner = ctx.extend_many(tys, names)
            self.check(inner, body, self.method_type(inner, inst, j, motive, methods))
        return inst

    def path_comp_type(self, ctx, sch, j, ps, motive, methods, args):
        inst = Inst(sch, tuple(ps))
        cell = sch.cells[j]
        if not isinstance(cell.dim, Path):
            raise TypeCheckError("SchemaError", f"unsupported dimension for computation witness of {cell.name}")
        src, tgt = [instantiate(b, args) for b in inst.boundary(j)]
        p = inst.ctor(j, args)

        def elim(t, d=0):
            return SchemaElim(sch.name, tuple(shift(x, 0, d) for x in ps), shift(motive, 1, d),
                              tuple(shift(m, 0, d) for m in methods), t)

        ap = Ap(elim(Var(0), 1), src, tgt, p)
        ihs = [self._ih_value(sch, ps, motive, methods, a, dep)
               for a, dep in zip(args, cell.recursive_positions()) if dep is not None]
        _, body = _binder_parts(methods[j])
        rhs = instantiate(body, tuple(args) + tuple(ihs))
        return Id(IdOver(motive, p, elim(src), elim(tgt)), ap, rhs)

    # .. inference

    def infer(self, ctx: TypingContext, t: Term) -> Term:
        match t:
            case Var(i):
                if i >= len(ctx):
                    raise TypeCheckError("ScopeError", f"unbound variable {i}")
                return ctx.lookup(i)
            case App(Lam(body), a):
                aty = self.infer(ctx, a)
                return substitute(self.infer(ctx.extend(aty), body), 0, a)
            case App(f, a):
                fty = self._whnf_fresh(self.infer(ctx, f))
                if not isinstance(fty, Pi):
                    raise TypeCheckError("NotAFunction", "applying a non-function", None, fty)
                self.check(ctx, a, fty.domain)
                return substitute(fty.codomain, 0, a)
            case Pair(a, b):
                return Sigma(self.infer(ctx, a), shift(self.infer(ctx, b), 0, 1))
            case Proj1(p) | Proj2(p):
                pty = self._whnf_fresh(self.infer(ctx, p))
                if not isinstance(pty, Sigma):
                    raise TypeCheckError("Mismatch", "projection from a non-pair", None, pty)
                if isinstance(t, Proj1):
                    return pty.first
                return substitute(pty.second, 0, Proj1(p))
            case Star():
                return Unit()
            case Zero():
                return Nat()
            case Succ(n):
                self.check(ctx, n, Nat())
                return Nat()
            case SumElim(motive, l, r, s):
                sty = self._whnf_fresh(self.infer(ctx, s))
                if not isinstance(sty, Sum):
                    raise TypeCheckError("Mismatch", "case on a non-sum", None, sty)
                self._motive(ctx.extend(sty), motive)
                self.check(ctx.extend(sty.left), l, substitute(shift(motive, 1, 1), 0, Inl(Var(0))))
                self.check(ctx.extend(sty.right), r, substitute(shift(motive, 1, 1), 0, Inr(Var(0))))
                return substitute(motive, 0, s)
            case Refl(a):
                return Id(self.infer(ctx, a), a, a)
            case J(motive, base, a1, a2, p):
                aty, x1, x2 = self._path_type(ctx, p)
                self._expect_equal(ctx, x1, a1, "J endpoint")
                self._expect_equal(ctx, x2, a2, "J endpoint")
                c3 = ctx.extend(aty, "x").extend(shift(aty, 0, 1), "y").extend(Id(shift(aty, 0, 2), Var(1), Var(0)), "e")
                self._motive(c3, motive)
                self.check(ctx.extend(aty, "x"), base, open_at(motive, 3, 1, (Var(0), Var(0), Refl(Var(0)))))
                return instantiate(motive, (a1, a2, p))
            case JOver(motive, base, args):
                a1, a2, p, b1, b2, q = args
                aty, x1, x2 = self._path_type(ctx, p)
                self._expect_equal(ctx, x1, a1, "J' endpoint")
                self._expect_equal(ctx, x2, a2, "J' endpoint")
                qty = self._whnf_fresh(self.infer(ctx, q))
                if not isinstance(qty, IdOver):
                    raise TypeCheckError("Mismatch", "J' needs a dependent identification", None, qty)
                fam = qty.family
                self._expect_equal(ctx, qty.base_path, p, "J' base path")
                self._expect_equal(ctx, qty.u, b1, "J' endpoint")
                self._expect_equal(ctx, qty.v, b2, "J' endpoint")
                c6 = (ctx.extend(aty, "x").extend(shift(aty, 0, 1), "y")
                      .extend(Id(shift(aty, 0, 2), Var(1), Var(0)), "e")
                      .extend(open_at(fam, 1, 3, (Var(2),)), "u")
                      .extend(open_at(fam, 1, 4, (Var(2),)), "v")
                      .extend(IdOver(shift(fam, 1, 5), Var(3), Var(1), Var(0)), "d"))
                self._motive(c6, motive)
                c2 = ctx.extend(aty, "x").extend(open_at(fam, 1, 1, (Var(0),)), "u")
                want = open_at(motive, 6, 2, (Var(1), Var(1), Refl(Var(1)), Var(0), Var(0), ReflOver(Var(0))))
                self.check(c2, base, want)
                return instantiate(motive, args)
            case Ap(f, a1, a2, p):
                aty, x1, x2 = self._path_type(ctx, p)
                self._expect_equal(ctx, x1, a1, "ap endpoint")
                self._expect_equal(ctx, x2, a2, "ap endpoint")
                bty = self.infer(ctx.extend(aty, "x"), f)
                return IdOver(bty, p, substitute(f, 0, a1), substitute(f, 0, a2))
            case NatElim(motive, z, s, n):
                self.check(ctx, n, Nat())
                self._motive(ctx.extend(Nat(), "x"), motive)
                self.check(ctx, z, substitute(motive, 0, Zero()))
                c2 = ctx.extend(Nat(), "x").extend(motive, "y")
                self.check(c2, s, open_at(motive, 1, 2, (Succ(Var(1)),)))
                return substitute(motive, 0, n)
            case SchemaCtor(h, ps, j, args):
                sch = self.schema(h)
                self.check_params(ctx, sch, ps)
                if j >= len(sch.cells):
                    raise TypeCheckError("ArityMismatch", f"{h} has no constructor {j}")
                return self.ctor_type(ctx, Inst(sch, tuple(ps)), j, args)
            case SchemaElim(h, ps, motive, methods, s):
                sch = self.schema(h)
                self._check_elim_parts(ctx, sch, ps, motive, methods)
                self.check(ctx, s, SchemaType(h, tuple(ps)))
                return substitute(motive, 0, s)
            case SchemaPathComp(h, j, ps, motive, methods, args):
                sch = self.schema(h)
                inst = self._check_elim_parts(ctx, sch, ps, motive, methods)
                self._check_args(ctx, inst.tele(j), args)
                return self.path_comp_type(ctx, sch, j, ps, motive, methods, args)
            case Param(i, args) if self.local is not None:
                entry = self._param_entry(i)
                if isinstance(entry, TermParam):
                    self._check_args(ctx, [ty for _, ty in entry.tele], args)
                    return instantiate(entry.type, args)
            case Con(j, args) if self.local is not None:
                if j >= self.local_limit:
                    raise TypeCheckError("SchemaError", f"constructor {j} used before it is declared")
                return self.ctor_type(ctx, Inst(self.local), j, args)
            case Meta(name, args) if name in self.metas and self.metas[name][1] is not None:
                tele, ty = self.metas[name]
                self._check_args(ctx, tele, args)
                return instantiate(ty, args)
        raise TypeCheckError("CannotInfer", f"cannot infer a type for {type(t).__name__}", None, t)

    def _motive(self, ctx, motive):
        try:
            self.check_type(ctx, motive)
        except TypeCheckError as e:
            raise TypeCheckError("IllTypedMotive", f"motive: {e.message}", e.expected, e.actual) from None

    def check(self, ctx, t, a):
        match t:
            case Lam(body):
                aw = self._whnf_fresh(a)
                if not isinstance(aw, Pi):
                    raise self._mismatch(ctx, a, t, "function")
                return self.check(ctx.extend(aw.domain), body, aw.codomain)
            case Pair(x, y):
                aw = self._whnf_fresh(a)
                if isinstance(aw, Sigma):
                    self.check(ctx, x, aw.first)
                    return self.check(ctx, y, substitute(aw.second, 0, x))
            case Inl(v) | Inr(v):
                aw = self._whnf_fresh(a)
                if not isinstance(aw, Sum):
                    raise TypeCheckError("Mismatch", "injection into a non-sum", a, None)
                return self.check(ctx, v, aw.left if isinstance(t, Inl) else aw.right)
            case Refl(x):
                aw = self._whnf_fresh(a)
                if isinstance(aw, Id):
                    self.check(ctx, x, aw.type)
                    self._expect_equal(ctx, aw.lhs, x, "refl endpoint")
                    self._expect_equal(ctx, aw.rhs, x, "refl endpoint")
                    return
            case ReflOver(b):
                aw = self._whnf_fresh(a)
                if not isinstance(aw, IdOver):
                    raise TypeCheckError("Mismatch", "refl' needs a dependent identity type", a, None)
                self._budget = self.fuel
                base = self._nf(aw.base_path)
                if not isinstance(base, Refl):
                    raise TypeCheckError("Mismatch", "refl' over a non-reflexivity path", Refl(Var(0)), base)
                self.check(ctx, b, substitute(aw.family, 0, base.point))
                self._expect_equal(ctx, aw.u, b, "refl' endpoint")
                self._expect_equal(ctx, aw.v, b, "refl' endpoint")
                return
        got = self.infer(ctx, t)
        self._expect_equal(ctx, a, got)


class _Interp:
    """Sends attaching terms of carrier type to their images under the methods."""

    def __init__(self, kernel, inst, cell, motive, methods, width):
        self.k = kernel
        self.inst = inst
        self.methods = methods
        self.n = cell.arity
        self.width = width
        rec = cell.recursive_positions()
        self.ih_of = {}
        r = 0
        nrec = sum(1 for d in rec if d is not None)
        for k, d in enumerate(rec):
            if d is not None:
                # variable index (at depth 0) of x_k and of its hypothesis
                self.ih_of[width - 1 - k] = (nrec - 1 - r, d)
                r += 1

    def point(self, t, depth=0):
        head, args = spine(t)
        if isinstance(head, Var) and head.index - depth in self.ih_of:
            ih, d = self.ih_of[head.index - depth]
            if len(args) == d:
                return apps(Var(ih + depth), args)
        match t:
            case SchemaCtor(_, _, j, cargs) | Con(j, cargs):
                return self._method(j, cargs, depth)
        raise TypeCheckError("SchemaError", "boundary term outside the attaching grammar", None, t)

    def path(self, t, depth=0):
        match t:
            case Refl(a):
                return ReflOver(self.point(a, depth))
            case SchemaCtor(_, _, j, cargs) | Con(j, cargs):
                return self._method(j, cargs, depth)
        raise TypeCheckError("SchemaError", "boundary path outside the attaching grammar", None, t)

    def _method(self, j, cargs, depth):
        cell = self.inst.schema.cells[j]
        ihs = []
        for a, d in zip(cargs, cell.recursive_positions()):
            if d is None:
                continue
            ihs.append(lams(d, self.point(apply_to_fresh(a, d), depth + d)))
        n, body = _binder_parts(self.methods[j])
        return instantiate(shift(body, n, self.width + depth), tuple(cargs) + tuple(ihs))


# -- module-level API ------------------------------------------------------------

_default = None


def default_kernel() -> Kernel:
    global _default
    if _default is None:
        _default = Kernel()
    return _default


def check_type(ctx, a, kernel=None):
    (kernel or default_kernel()).check_type(ctx, a)


def infer(ctx, t, kernel=None):
    return (kernel or default_kernel()).infer(ctx, t)


def check(ctx, t, a, kernel=None):
    (kernel or default_kernel()).check(ctx, t, a)


def reduce_step(t, kernel=None):
    return (kernel or default_kernel()).reduce_step(t)


def normalize(ctx, t, kernel=None):
    return (kernel or default_kernel()).normalize(ctx, t)


def def_equal(ctx, t, u, kernel=None):
    return (kernel or default_kernel()).def_equal(ctx, t, u)


__all__ = [
    "Kernel", "TypeCheckError", "FuelExhausted", "NoRedex", "Inst", "EMPTY",
    "check_type", "infer", "check", "reduce_step", "normalize", "def_equal",
    "open_at", "apps", "lams",
]
