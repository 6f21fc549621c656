"""Core abstract syntax: de Bruijn terms, contexts, substitutions, schemas.

Types and terms share one sort.  Binding structure is declared on the
dataclass fields (``bind`` metadata) so that shifting, substitution and
traversals are written once, generically.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from functools import cache
from typing import Callable, Iterator


class KernelError(Exception):
    """Base class for every diagnostic the kernel can raise."""

    kind = "KernelError"

    def __init__(self, message: str = "", span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        return f"{self.kind}: {self.message}"


class NegativeIndex(KernelError):
    kind = "NegativeIndex"


def _b(n):
    return field(metadata={"bind": n})


class Term:
    __slots__ = ()

    def __repr__(self):
        args = ", ".join(repr(getattr(self, f.name)) for f in _fields(type(self)))
        return f"{type(self).__name__}({args})"


# -- structural core -------------------------------------------------------

@dataclass(frozen=True, repr=False)
class Var(Term):
    index: int


@dataclass(frozen=True, repr=False)
class Pi(Term):
    domain: Term
    codomain: Term = _b(1)


@dataclass(frozen=True, repr=False)
class Lam(Term):
    body: Term = _b(1)


@dataclass(frozen=True, repr=False)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, repr=False)
class Sigma(Term):
    first: Term
    second: Term = _b(1)


@dataclass(frozen=True, repr=False)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True, repr=False)
class Proj1(Term):
    pair: Term


@dataclass(frozen=True, repr=False)
class Proj2(Term):
    pair: Term


@dataclass(frozen=True, repr=False)
class Unit(Term):
    pass


@dataclass(frozen=True, repr=False)
class Star(Term):
    pass


@dataclass(frozen=True, repr=False)
class Sum(Term):
    left: Term
    right: Term


@dataclass(frozen=True, repr=False)
class Inl(Term):
    val: Term


@dataclass(frozen=True, repr=False)
class Inr(Term):
    val: Term


@dataclass(frozen=True, repr=False)
class SumElim(Term):
    motive: Term = _b(1)
    left_case: Term = _b(1)
    right_case: Term = _b(1)
    scrut: Term = _b(0)


# -- identity types ----------------------------------------------------------

@dataclass(frozen=True, repr=False)
class Id(Term):
    type: Term
    lhs: Term
    rhs: Term


@dataclass(frozen=True, repr=False)
class Refl(Term):
    point: Term


@dataclass(frozen=True, repr=False)
class J(Term):
    motive: Term = _b(3)
    base: Term = _b(1)
    a1: Term = _b(0)
    a2: Term = _b(0)
    path: Term = _b(0)


@dataclass(frozen=True, repr=False)
class IdOver(Term):
    family: Term = _b(1)
    base_path: Term = _b(0)
    u: Term = _b(0)
    v: Term = _b(0)


@dataclass(frozen=True, repr=False)
class ReflOver(Term):
    point: Term


@dataclass(frozen=True, repr=False)
class JOver(Term):
    """J' with args (a1, a2, p, b1, b2, q)."""
    motive: Term = _b(6)
    base: Term = _b(2)
    args: tuple = _b(0)


@dataclass(frozen=True, repr=False)
class Ap(Term):
    fn_body: Term = _b(1)
    a1: Term = _b(0)
    a2: Term = _b(0)
    path: Term = _b(0)


@dataclass(frozen=True, repr=False)
class Square(Term):
    """Type of squares: top a=b, bottom c=d, left a=c, right b=d."""
    top: Term
    bottom: Term
    left: Term
    right: Term


@dataclass(frozen=True, repr=False)
class SquareOver(Term):
    family: Term = _b(1)
    square: Term = _b(0)
    top: Term = _b(0)
    bottom: Term = _b(0)
    left: Term = _b(0)
    right: Term = _b(0)


# -- natural numbers ---------------------------------------------------------

@dataclass(frozen=True, repr=False)
class Nat(Term):
    pass


@dataclass(frozen=True, repr=False)
class Zero(Term):
    pass


@dataclass(frozen=True, repr=False)
class Succ(Term):
    n: Term


@dataclass(frozen=True, repr=False)
class NatElim(Term):
    motive: Term = _b(1)
    z_case: Term = _b(0)
    s_case: Term = _b(2)
    scrut: Term = _b(0)


# -- schema instances --------------------------------------------------------

@dataclass(frozen=True, repr=False)
class Binder(Term):
    """`x1 .. xn. body` in argument positions with a declared arity."""
    arity: int
    body: Term = _b("arity")


@dataclass(frozen=True, repr=False)
class SchemaType(Term):
    schema: str
    params: tuple


@dataclass(frozen=True, repr=False)
class SchemaCtor(Term):
    schema: str
    params: tuple
    ctor_index: int
    args: tuple


@dataclass(frozen=True, repr=False)
class SchemaElim(Term):
    schema: str
    params: tuple
    motive: Term = _b(1)
    methods: tuple = _b(0)
    scrut: Term = _b(0)


@dataclass(frozen=True, repr=False)
class SchemaPathComp(Term):
    """Propositional computation witness for a path (or higher) cell."""
    schema: str
    cell: int
    params: tuple
    motive: Term = _b(1)
    methods: tuple = _b(0)
    args: tuple = _b(0)


# -- attaching-term grammar (only inside schema declarations) ----------------

@dataclass(frozen=True, repr=False)
class Param(Term):
    index: int
    args: tuple


@dataclass(frozen=True, repr=False)
class Carrier(Term):
    pass


@dataclass(frozen=True, repr=False)
class Con(Term):
    index: int
    args: tuple


@dataclass(frozen=True, repr=False)
class Meta(Term):
    """Schematic metavariable applied to arguments (rule statements only)."""
    name: str
    args: tuple


# -- generic traversal -------------------------------------------------------

@cache
def _fields(cls):
    return tuple(fields(cls))


@cache
def _layout(cls):
    out = []
    for f in _fields(cls):
        out.append((f.name, f.metadata.get("bind", 0)))
    return tuple(out)


def children(t: Term) -> Iterator[tuple[Term, int]]:
    """Yield (child, number of binders crossed) for every subterm slot."""
    for name, bind in _layout(type(t)):
        v = getattr(t, name)
        k = t.arity if bind == "arity" else bind
        if isinstance(v, Term):
            yield v, k
        elif isinstance(v, tuple):
            for x in v:
                if isinstance(x, Term):
                    yield x, k


def map_children(t: Term, f: Callable[[Term, int], Term]) -> Term:
    lay = _layout(type(t))
    if not lay:
        return t
    vals = []
    changed = False
    for name, bind in lay:
        v = getattr(t, name)
        k = t.arity if bind == "arity" else bind
        if isinstance(v, Term):
            nv = f(v, k)
        elif isinstance(v, tuple):
            nv = tuple(f(x, k) if isinstance(x, Term) else x for x in v)
        else:
            nv = v
        changed = changed or nv is not v
        vals.append(nv)
    return type(t)(*vals) if changed else t


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for c, _ in children(t):
        yield from subterms(c)


def mentions(t: Term, pred: Callable[[Term], bool]) -> bool:
    return any(pred(s) for s in subterms(t))


def free_vars(t: Term, depth: int = 0) -> set[int]:
    match t:
        case Var(i):
            return {i - depth} if i >= depth else set()
    out = set()
    for c, k in children(t):
        out |= free_vars(c, depth + k)
    return out


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


# -- shifting and substitution -----------------------------------------------

def shift(t: Term, cutoff: int, amount: int) -> Term:
    if amount == 0:
        return t

    def go(t, c):
        if isinstance(t, Var):
            if t.index < c:
                return t
            n = t.index + amount
            if n < 0:
                raise NegativeIndex(f"index {t.index} shifted by {amount}")
            return Var(n)
        return map_children(t, lambda ch, k: go(ch, c + k))

    return go(t, cutoff)


def substitute(t: Term, idx: int, value: Term) -> Term:
    """t[value/idx]; indices above idx drop by one.

    `value` lives in the context with `idx` removed.
    """
    def go(t, d):
        if isinstance(t, Var):
            k = t.index
            if k < idx + d:
                return t
            if k == idx + d:
                return shift(value, 0, d)
            return Var(k - 1)
        return map_children(t, lambda ch, b: go(ch, d + b))

    return go(t, 0)


@dataclass(frozen=True)
class Substitution:
    """Parallel substitution: Var i -> terms[i] for i < len(terms), else Var(i - len + offset)."""
    terms: tuple = ()
    offset: int = 0

    def apply(self, t: Term) -> Term:
        n = len(self.terms)
        if n == 0 and self.offset == 0:
            return t

        def go(t, d):
            if isinstance(t, Var):
                k = t.index
                if k < d:
                    return t
                if k - d < n:
                    return shift(self.terms[k - d], 0, d)
                j = k - n + self.offset
                if j < 0:
                    raise NegativeIndex(f"index {k} under substitution")
                return Var(j)
            return map_children(t, lambda ch, b: go(ch, d + b))

        return go(t, 0)


def instantiate(body: Term, args) -> Term:
    """body[args] where body binds len(args) variables, args in binding order."""
    args = tuple(args)
    if not args:
        return body
    return Substitution(tuple(reversed(args))).apply(body)


def weaken(t: Term, n: int = 1) -> Term:
    return shift(t, 0, n)


def alpha_equal(t: Term, u: Term) -> bool:
    return t == u


# -- contexts ----------------------------------------------------------------

@dataclass(frozen=True)
class TypingContext:
    entries: tuple = ()
    names: tuple = ()

    def extend(self, ty: Term, name: str = "_") -> "TypingContext":
        return TypingContext(self.entries + (ty,), self.names + (name,))

    def extend_many(self, tys, names=None) -> "TypingContext":
        ctx = self
        names = names or ["_"] * len(tys)
        for ty, nm in zip(tys, names):
            ctx = ctx.extend(ty, nm)
        return ctx

    def lookup(self, i: int) -> Term:
        if i < 0 or i >= len(self.entries):
            raise IndexError(f"variable {i} out of context of length {len(self.entries)}")
        return shift(self.entries[-1 - i], 0, i + 1)

    def __len__(self):
        return len(self.entries)


EMPTY = TypingContext()


# -- schema declarations -----------------------------------------------------

@dataclass(frozen=True)
class TypeParam:
    name: str
    tele: tuple = ()   # ((name, Term), ...)


@dataclass(frozen=True)
class TermParam:
    name: str
    tele: tuple
    type: Term


@dataclass(frozen=True)
class ParamScheme:
    entries: tuple = ()

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class Point:
    pass


@dataclass(frozen=True)
class Path:
    pass


@dataclass(frozen=True)
class SquareBoundary:
    pass


@dataclass(frozen=True)
class Globe:
    n: int = 2


@dataclass(frozen=True)
class CellSpec:
    """One constructor.

    The telescope may mention the carrier; boundary arity depends on dim:
    Point (), Path (src, tgt), SquareBoundary (top, bottom, left, right),
    Globe (p, q).
    """
    name: str
    dim: object
    telescope: tuple = ()
    boundary: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.telescope)

    def recursive_positions(self) -> list:
        """Per telescope entry: None if non-recursive, else its Pi-depth."""
        out = []
        for _, ty in self.telescope:
            out.append(pi_depth_to_carrier(ty) if mentions(ty, _is_carrier) else None)
        return out

    @property
    def method_arity(self) -> int:
        return self.arity + sum(1 for r in self.recursive_positions() if r is not None)


def _is_carrier(t):
    return isinstance(t, Carrier)


def pi_depth_to_carrier(ty: Term):
    """n if ty = Pi(D1, ..., Pi(Dn, Carrier)), else -1."""
    n = 0
    while isinstance(ty, Pi):
        ty = ty.codomain
        n += 1
    return n if isinstance(ty, Carrier) else -1


@dataclass(frozen=True)
class Schema:
    name: str
    params: ParamScheme
    cells: tuple

    def cell_index(self, name: str) -> int:
        for i, c in enumerate(self.cells):
            if c.name == name:
                return i
        raise KeyError(name)
