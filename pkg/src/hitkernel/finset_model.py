"""Set semantics: types as finite sets, schema instances as saturated quotients.

In sets every identification is an equality, so identity types are the
diagonal, path constructors become quotient equations and higher cells
identify nothing further.  Carriers are built by fueled saturation: apply
point constructors, merge classes along path constructors, close under
congruence, repeat.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .syntax_core import (
    Ap, App, Binder, Carrier as CarrierT, Con, Id, IdOver, Inl, Inr, J,
    JOver, KernelError, Lam, Nat, NatElim, Pair, Param, Path, Pi, Point,
    Proj1, Proj2, Refl, ReflOver, Schema, SchemaCtor, SchemaElim,
    SchemaPathComp, SchemaType, Sigma, Square, SquareOver, Star,
    Succ, Sum, SumElim, Term, TermParam, TypeParam, Unit, Var, Zero,
)

DEFAULT_FUEL = 8


class InfiniteType(KernelError):
    kind = "InfiniteType"


class UnboundParam(KernelError):
    kind = "UnboundParam"


class NonCanonical(KernelError):
    kind = "NonCanonical"


class CoherenceError(KernelError):
    kind = "CoherenceError"

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NotInitial(KernelError):
    kind = "NotInitial"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# -- semantic values ---------------------------------------------------------------

class _Refl:
    def __repr__(self):
        return "refl"

    def __reduce__(self):
        return "REFL"


REFL = _Refl()


@dataclass(frozen=True)
class FinSet:
    elements: tuple = ()

    def __post_init__(self):
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate elements in a finite set")

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x):
        return x in self.elements


@dataclass(frozen=True)
class Table:
    """A reified function: ordered (input, output) pairs."""
    items: tuple

    def __call__(self, x):
        for k, v in self.items:
            if k == x:
                return v
        raise NonCanonical(f"{x!r} is outside the domain of a finite function")

    def __repr__(self):
        return "{" + ", ".join(f"{k!r}: {v!r}" for k, v in self.items) + "}"


@dataclass(frozen=True)
class FinMap:
    """Parameter families: keys are elements (one argument) or tuples."""
    domain: FinSet
    codomain: FinSet | None
    table: tuple       # ((key, value), ...)

    def __post_init__(self):
        keys = [k for k, _ in self.table]
        if sorted(map(repr, keys)) != sorted(map(repr, self.domain.elements)):
            raise ValueError("finite map is not total on its domain")
        if self.codomain is not None:
            for _, v in self.table:
                if v not in self.codomain:
                    raise ValueError(f"{v!r} is outside the codomain")

    def __call__(self, *args):
        key = args[0] if len(args) == 1 else tuple(args)
        for k, v in self.table:
            if k == key:
                return v
        raise UnboundParam(f"finite map has no entry for {key!r}")


class Closure:
    __slots__ = ("fn",)

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, x):
        return self.fn(x)


def apply(f, x):
    return f(x)


@dataclass
class Env:
    """Parameter values by position, plus their names."""
    params: tuple = ()
    names: tuple = ()

    def get(self, i):
        if i >= len(self.params):
            raise UnboundParam(f"parameter {i} has no value")
        return self.params[i]

    def bindings(self):
        return dict(zip(self.names, self.params))


def make_env(s: Schema, values) -> Env:
    """Check literal parameter values against s's parameter scheme."""
    values = tuple(values)
    entries = s.params.entries
    if len(values) != len(entries):
        raise UnboundParam(f"{s.name} expects {len(entries)} parameters, got {len(values)}")
    env = Env((), ())
    for e, v in zip(entries, values):
        ev = Evaluator(env)
        if e.tele:
            dom = FinSet(tuple(_tuple_key(t) for t in ev.tele_tuples([ty for _, ty in e.tele], ())))
            if not isinstance(v, FinMap):
                raise UnboundParam(f"parameter {e.name} needs a finite map")
            if sorted(map(repr, dom.elements)) != sorted(repr(k) for k, _ in v.table):
                raise UnboundParam(f"parameter {e.name} is not defined on exactly its domain")
            if isinstance(e, TermParam):
                for args in ev.tele_tuples([ty for _, ty in e.tele], ()):
                    target = ev.type(e.type, tuple(reversed(args)))
                    if v(*args) not in target:
                        raise UnboundParam(f"parameter {e.name} maps {args!r} outside its type")
        elif isinstance(e, TypeParam):
            if not isinstance(v, FinSet):
                raise UnboundParam(f"parameter {e.name} needs a finite set")
        else:
            if v not in ev.type(e.type, ()):
                raise UnboundParam(f"parameter {e.name}: {v!r} is not an element of its type")
        env = Env(env.params + (v,), env.names + (e.name,))
    return env


def _tuple_key(args):
    return args[0] if len(args) == 1 else tuple(args)


# -- carriers ------------------------------------------------------------------------

@dataclass(frozen=True)
class Tree:
    cell: int
    args: tuple        # telescope values; carrier positions hold tree indices


@dataclass
class Carrier:
    schema: Schema
    env: Env
    trees: list = field(default_factory=list)
    parent: list = field(default_factory=list)
    rank: list = field(default_factory=list)
    least: dict = field(default_factory=dict)
    keys: dict = field(default_factory=dict)
    unions: list = field(default_factory=list)
    status: str = "fuel_exhausted"
    fuel_used: int = 0

    # .. union-find

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return self.least[root]

    def _root(self, i):
        while self.parent[i] != i:
            i = self.parent[i]
        return i

    def union(self, a, b) -> bool:
        ra, rb = self._root(a), self._root(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.least[ra] = min(self.least[ra], self.least.pop(rb))
        self.unions.append((a, b))
        return True

    def add(self, tree, key):
        i = len(self.trees)
        self.trees.append(tree)
        self.parent.append(i)
        self.rank.append(0)
        self.least[i] = i
        self.keys[key] = i
        return i

    # .. views

    def classes(self) -> list:
        return sorted(self.least.values())

    @property
    def converged(self):
        return self.status == "converged"

    def members(self, rep):
        return [i for i in range(len(self.trees)) if self.find(i) == rep]

    def op_tables(self):
        """Per point cell: canonical argument tuple -> class representative."""
        out = {j: {} for j, c in enumerate(self.schema.cells) if isinstance(c.dim, Point)}
        for key, i in self.keys.items():
            out[key[0]][key[1]] = self.find(i)
        return out

    def show(self, i) -> str:
        t = self.trees[i]
        cell = self.schema.cells[t.cell]
        if not t.args:
            return cell.name
        parts = []
        for a, d in zip(t.args, cell.recursive_positions()):
            parts.append(self._show_val(a, d))
        return f"{cell.name}({', '.join(parts)})"

    def _show_val(self, v, depth):
        if depth is None:
            return repr(v) if not isinstance(v, str) else v
        if depth == 0:
            return self.show(self.find(v))
        return "{" + ", ".join(f"{k!r} -> {self._show_val(x, depth - 1)}" for k, x in v.items) + "}"


class _CarrierAlgebra:
    def __init__(self, c: Carrier):
        self.c = c

    @property
    def elements(self):
        return self.c.classes()

    def canon(self, x):
        return self.c.find(x)

    def op(self, j, args):
        i = self.c.keys.get((j, args))
        return None if i is None else self.c.find(i)


@dataclass
class TableAlgebra:
    """An algebra on {0..n-1} given by one operation table per point cell."""
    size: int
    tables: dict       # cell -> {args: element}

    @property
    def elements(self):
        return list(range(self.size))

    def canon(self, x):
        return x

    def op(self, j, args):
        return self.tables[j].get(args)


class _Missing(Exception):
    pass


# -- evaluation ----------------------------------------------------------------------

class Evaluator:
    """Evaluates terms and types; `alg` interprets the carrier inside schemas."""

    def __init__(self, env: Env | None = None, alg=None, schema: Schema | None = None, fuel=DEFAULT_FUEL):
        self.env = env or Env()
        self.alg = alg
        self.schema = schema
        self.fuel = fuel

    # .. types

    def type(self, a: Term, vs=()) -> FinSet:
        match a:
            case Unit():
                return FinSet(((),))
            case Nat():
                raise InfiniteType("Nat has no finite interpretation")
            case Sum(l, r):
                return FinSet(tuple(("inl", x) for x in self.type(l, vs)) + tuple(("inr", y) for y in self.type(r, vs)))
            case Sigma(f, s):
                return FinSet(tuple((x, y) for x in self.type(f, vs) for y in self.type(s, (x,) + vs)))
            case Pi(d, c):
                dom = self.type(d, vs).elements
                fibres = [self.type(c, (x,) + vs).elements for x in dom]
                return FinSet(tuple(Table(tuple(zip(dom, vals))) for vals in product(*fibres)))
            case Id(ty, x, y):
                return FinSet((REFL,)) if self.equal(ty, x, y, vs) else FinSet(())
            case IdOver(_, _, u, v):
                same = self._raw_equal(self.term(u, vs), self.term(v, vs))
                return FinSet((REFL,)) if same else FinSet(())
            case Square() | SquareOver():
                return FinSet((REFL,))
            case SchemaType(h, ps):
                c = self.instance(h, ps, vs)
                if not c.converged:
                    raise InfiniteType(f"{h} did not converge within {self.fuel} rounds")
                return FinSet(tuple(c.classes()))
            case CarrierT():
                if self.alg is None:
                    raise InfiniteType("carrier outside a schema")
                return FinSet(tuple(self.alg.elements))
            case Param(i, args):
                v = self.env.get(i)
                if args:
                    v = v(*[self.term(x, vs) for x in args])
                if not isinstance(v, FinSet):
                    raise UnboundParam(f"parameter {i} is not a type")
                return v
        raise NonCanonical(f"cannot interpret {type(a).__name__} as a finite set")

    def equal(self, ty, x, y, vs):
        return self.reify(self.term(x, vs), ty, vs) == self.reify(self.term(y, vs), ty, vs)

    @staticmethod
    def _raw_equal(a, b):
        if isinstance(a, Closure) or isinstance(b, Closure):
            raise NonCanonical("cannot compare functions without their type")
        return a == b

    def reify(self, v, ty, vs=()):
        """Turn closures into tables, following the shape of ty."""
        match ty:
            case Pi(d, c):
                dom = self.type(d, vs).elements
                return Table(tuple((x, self.reify(apply(v, x), c, (x,) + vs)) for x in dom))
            case Sigma(f, s):
                a = self.reify(v[0], f, vs)
                return (a, self.reify(v[1], s, (a,) + vs))
            case Sum(l, r):
                tag, x = v
                return (tag, self.reify(x, l if tag == "inl" else r, vs))
            case CarrierT() if self.alg is not None:
                return self.alg.canon(v)
        if isinstance(v, Closure):
            raise NonCanonical("function value at a non-function type")
        return v

    # .. terms

    def term(self, t: Term, vs=()):
        match t:
            case Var(i):
                if i >= len(vs):
                    raise NonCanonical(f"free variable {i}")
                return vs[i]
            case Lam(body):
                return Closure(lambda x, body=body, vs=vs: self.term(body, (x,) + vs))
            case App(f, a):
                return apply(self.term(f, vs), self.term(a, vs))
            case Pair(a, b):
                return (self.term(a, vs), self.term(b, vs))
            case Proj1(p):
                return self.term(p, vs)[0]
            case Proj2(p):
                return self.term(p, vs)[1]
            case Star():
                return ()
            case Zero():
                return 0
            case Succ(n):
                return self.term(n, vs) + 1
            case Inl(x):
                return ("inl", self.term(x, vs))
            case Inr(x):
                return ("inr", self.term(x, vs))
            case SumElim(_, l, r, s):
                tag, x = self.term(s, vs)
                return self.term(l if tag == "inl" else r, (x,) + vs)
            case NatElim(_, z, sc, n):
                k = self.term(n, vs)
                acc = self.term(z, vs)
                for i in range(k):
                    acc = self.term(sc, (acc, i) + vs)
                return acc
            case Refl() | ReflOver() | Ap() | SchemaPathComp():
                return REFL
            case J(_, base, a1, _, _):
                return self.term(base, (self.term(a1, vs),) + vs)
            case JOver(_, base, args):
                return self.term(base, (self.term(args[3], vs), self.term(args[0], vs)) + vs)
            case Param(i, args):
                v = self.env.get(i)
                return v(*[self.term(x, vs) for x in args]) if args else v
            case Con(j, args):
                return self.construct(j, [self.term(a, vs) for a in args])
            case SchemaCtor(h, ps, j, args):
                c = self.instance(h, ps, vs)
                if not isinstance(c.schema.cells[j].dim, Point):
                    return REFL
                sub = Evaluator(c.env, _CarrierAlgebra(c), c.schema, self.fuel)
                try:
                    return sub.construct(j, [self.term(a, vs) for a in args])
                except _Missing:
                    raise NonCanonical(f"{h}.{c.schema.cells[j].name} is not in the saturated carrier") from None
            case SchemaElim(h, ps, _, methods, s):
                c = self.instance(h, ps, vs)
                fns = [self._method(m, vs) for m in methods]
                table = eliminate(c, c.schema, c.env, None, fns)
                return table[c.find(self.term(s, vs))]
        raise NonCanonical(f"cannot evaluate {type(t).__name__}")

    def _method(self, m, vs):
        n = m.arity if isinstance(m, Binder) else 0
        body = m.body if isinstance(m, Binder) else m

        def run(*args):
            if len(args) != n:
                raise NonCanonical("method arity mismatch")
            return self.term(body, tuple(reversed(args)) + vs)
        return run

    def construct(self, j, args):
        """Apply point cell j of the current algebra; _Missing if not built yet."""
        cell = self.schema.cells[j]
        if not isinstance(cell.dim, Point):
            return REFL
        key = self.canonical_args(cell, args)
        out = self.alg.op(j, key)
        if out is None:
            raise _Missing
        return out

    def canonical_args(self, cell, args):
        out = []
        vs = ()
        for (_, ty), a in zip(cell.telescope, args):
            out.append(self.reify(a, ty, vs))
            vs = (out[-1],) + vs
        return tuple(out)

    def tele_tuples(self, tys, vs=()):
        """All dependent tuples inhabiting a telescope, in canonical order."""
        if not tys:
            yield ()
            return
        for x in self.type(tys[0], vs):
            for rest in self.tele_tuples(tys[1:], (x,) + vs):
                yield (x,) + rest

    def point(self, t, vs):
        """A boundary term's value, or _Missing."""
        return self.reify(self.term(t, vs), CarrierT(), vs)

    # .. schema instances

    def instance(self, h, ps, vs) -> Carrier:
        reg = registry()
        if h not in reg:
            raise UnboundParam(f"unknown schema {h}")
        s = reg[h]
        values = []
        for e, p in zip(s.params.entries, ps):
            n = p.arity if isinstance(p, Binder) else 0
            body = p.body if isinstance(p, Binder) else p
            value = self.type if isinstance(e, TypeParam) else self._plain_term
            if n == 0:
                values.append(value(body, vs))
                continue
            names = tuple(x.name for x in s.params.entries[:len(values)])
            sub = Evaluator(Env(tuple(values), names), None, s, self.fuel)
            table = []
            for args in sub.tele_tuples([ty for _, ty in e.tele]):
                table.append((_tuple_key(args), value(body, tuple(reversed(args)) + vs)))
            dom = FinSet(tuple(k for k, _ in table))
            values.append(FinMap(dom, None, tuple(table)))
        return saturate(s, make_env(s, values), self.fuel)

    def _plain_term(self, t, vs):
        v = self.term(t, vs)
        if _has_closure(v):
            raise NonCanonical("function-valued parameters are not supported")
        return v


_EXTRA: dict = {}


def registry() -> dict:
    from .hit_schema import builtin_registry
    return {**builtin_registry(), **_EXTRA}


def register(schemas):
    """Make user schemas visible to eval_type/eval_term besides the builtins."""
    for s in schemas:
        _EXTRA[s.name] = s


def eval_type(env: Env, a: Term) -> FinSet:
    return Evaluator(env).type(a)


def eval_term(env: Env, t: Term, ty: Term | None = None):
    ev = Evaluator(env)
    v = ev.term(t)
    if _has_closure(v):
        if ty is None:
            from .typechecker import default_kernel
            from .syntax_core import EMPTY
            ty = default_kernel().infer(EMPTY, t)
        v = ev.reify(v, ty)
    return v


def _has_closure(v):
    if isinstance(v, Closure):
        return True
    if isinstance(v, tuple):
        return any(_has_closure(x) for x in v)
    return False


# -- saturation ----------------------------------------------------------------------

_CACHE: dict = {}


def saturate(s: Schema, env: Env, fuel: int = DEFAULT_FUEL) -> Carrier:
    key = (s, env.params, fuel)
    if key in _CACHE:
        return _CACHE[key]
    c = Carrier(s, env)
    changed = _round(c)
    r = 0
    while changed and r < fuel:
        r += 1
        changed = _round(c)
    c.status = "fuel_exhausted" if changed else "converged"
    c.fuel_used = r
    _CACHE[key] = c
    return c


def _round(c: Carrier) -> bool:
    s = c.schema
    alg = _CarrierAlgebra(c)
    ev = Evaluator(c.env, alg, s)
    snapshot = c.classes()
    changed = False
    # point cells over the classes present at the start of the round
    frozen = _Frozen(snapshot)
    ev_snap = Evaluator(c.env, frozen, s)
    for j, cell in enumerate(s.cells):
        if not isinstance(cell.dim, Point):
            continue
        for args in ev_snap.tele_tuples([ty for _, ty in cell.telescope]):
            key = (j, ev.canonical_args(cell, args))
            if key not in c.keys:
                c.add(Tree(j, key[1]), key)
                changed = True
    # path cells identify their endpoints
    for cell in s.cells:
        if not isinstance(cell.dim, Path):
            continue
        src, tgt = cell.boundary
        for args in ev.tele_tuples([ty for _, ty in cell.telescope]):
            vs = tuple(reversed(args))
            try:
                a, b = ev.point(src, vs), ev.point(tgt, vs)
            except _Missing:
                continue
            changed |= c.union(a, b)
    changed |= _congruence(c, ev)
    return changed


class _Frozen:
    def __init__(self, elems):
        self.elements = elems

    def canon(self, x):
        return x


def _congruence(c: Carrier, ev: Evaluator) -> bool:
    changed = False
    while True:
        keys = {}
        merged = False
        for i, t in enumerate(c.trees):
            cell = c.schema.cells[t.cell]
            key = (t.cell, ev.canonical_args(cell, t.args))
            if key in keys:
                merged |= c.union(keys[key], i)
            else:
                keys[key] = i
        c.keys = keys
        changed |= merged
        if not merged:
            return changed


def path_equations_hold(c: Carrier) -> bool:
    """Independent re-check that every path cell holds on the final carrier."""
    ev = Evaluator(c.env, _CarrierAlgebra(c), c.schema)
    return _equations_hold(ev, c.schema)


def _equations_hold(ev, s) -> bool:
    for cell in s.cells:
        if not isinstance(cell.dim, Path):
            continue
        for args in ev.tele_tuples([ty for _, ty in cell.telescope]):
            vs = tuple(reversed(args))
            try:
                if ev.point(cell.boundary[0], vs) != ev.point(cell.boundary[1], vs):
                    return False
            except _Missing:
                return False
    return True


def is_congruence_closed(c: Carrier) -> bool:
    ev = Evaluator(c.env, _CarrierAlgebra(c), c.schema)
    seen = {}
    for i, t in enumerate(c.trees):
        key = (t.cell, ev.canonical_args(c.schema.cells[t.cell], t.args))
        if seen.setdefault(key, c.find(i)) != c.find(i):
            return False
    return True


# -- elimination ---------------------------------------------------------------------

def eliminate(c: Carrier, s: Schema, env: Env, motive_sets, methods) -> dict:
    """Section of a motive over the carrier: {class representative: value}.

    `methods[j]` is called with the telescope values followed by one
    hypothesis per recursive argument (a value, or a table for function
    arguments).  Point trees are evaluated in creation order; every class
    must then receive a single value.
    """
    ev = Evaluator(env, _CarrierAlgebra(c), s)
    val = {}
    for i, t in enumerate(c.trees):
        cell = s.cells[t.cell]
        args = list(ev.canonical_args(cell, t.args))
        ihs = [_ih(c, val, a, d) for a, d in zip(args, cell.recursive_positions()) if d is not None]
        val[i] = methods[t.cell](*args, *ihs)
    out = {}
    for i in range(len(c.trees)):
        rep = c.find(i)
        if rep not in out:
            out[rep] = val[i]
        elif out[rep] != val[i]:
            raise CoherenceError(f"methods disagree on identified trees {rep} and {i}", (rep, i))
    if motive_sets is not None:
        for rep, v in out.items():
            if v not in motive_sets[rep]:
                raise CoherenceError(f"value {v!r} is not in the motive over class {rep}", (rep, rep))
    return out


def _ih(c, val, a, depth):
    if depth == 0:
        return val[c.find(a)]
    return Table(tuple((k, _ih(c, val, x, depth - 1)) for k, x in a.items))


# -- initiality ----------------------------------------------------------------------

def _algebras(s: Schema, env: Env, n: int):
    frozen = _Frozen(list(range(n)))
    ev = Evaluator(env, frozen, s)
    points = [j for j, c in enumerate(s.cells) if isinstance(c.dim, Point)]
    domains = {j: [ev.canonical_args(s.cells[j], a) for a in ev.tele_tuples([ty for _, ty in s.cells[j].telescope])]
               for j in points}
    choices = [product(range(n), repeat=len(domains[j])) for j in points]
    for combo in product(*[list(ch) for ch in choices]):
        tables = {j: dict(zip(domains[j], vals)) for j, vals in zip(points, combo)}
        alg = TableAlgebra(n, tables)
        if _equations_hold(Evaluator(env, alg, s), s):
            yield alg


def _morphisms(c: Carrier, alg: TableAlgebra, s: Schema, env: Env) -> int:
    reps = c.classes()
    ev = Evaluator(env, _CarrierAlgebra(c), s)
    trees = [(c.find(i), t.cell, ev.canonical_args(s.cells[t.cell], t.args)) for i, t in enumerate(c.trees)]
    count = 0
    for image in product(range(alg.size), repeat=len(reps)):
        h = dict(zip(reps, image))
        ok = True
        for rep, j, args in trees:
            mapped = tuple(_map_arg(h, a, d) for a, d in zip(args, s.cells[j].recursive_positions()))
            if alg.op(j, mapped) != h[rep]:
                ok = False
                break
        count += ok
    return count


def _map_arg(h, a, depth):
    if depth is None:
        return a
    if depth == 0:
        return h[a]
    return Table(tuple((k, _map_arg(h, x, depth - 1)) for k, x in a.items))


def check_universal_property(c: Carrier, s: Schema, env: Env, bound: int) -> dict:
    """Count algebras of size <= bound and check each receives exactly one morphism."""
    if not c.converged:
        raise InfiniteType("initiality needs a converged carrier")
    total = 0
    for n in range(bound + 1):
        for alg in _algebras(s, env, n):
            total += 1
            k = _morphisms(c, alg, s, env)
            if k != 1:
                raise NotInitial(f"{k} morphisms into an algebra of size {n}", alg)
    return {"bound": bound, "algebras": total, "unique": True}


__all__ = [
    "FinSet", "FinMap", "Table", "Env", "Carrier", "Tree", "REFL", "DEFAULT_FUEL",
    "InfiniteType", "UnboundParam", "NonCanonical", "CoherenceError", "NotInitial",
    "make_env", "eval_type", "eval_term", "saturate", "eliminate",
    "check_universal_property", "path_equations_hold", "is_congruence_closed",
    "register", "TableAlgebra", "Evaluator",
]
