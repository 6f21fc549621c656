"""Hypothesis strategies for raw and well-typed terms."""
from hypothesis import strategies as st

from hitkernel.syntax_core import (
    Ap, App, Binder, Id, IdOver, Inl, Inr, J, JOver, Lam, Nat, NatElim, Pair, Pi,
    Proj1, Proj2, Refl, ReflOver, SchemaCtor, SchemaElim, SchemaType, Sigma,
    Square, Star, Succ, Sum, SumElim, Unit, Var, Zero, shift,
)

# -- untyped terms (well scoped under `depth` binders) -----------------------------


@st.composite
def raw_terms(draw, depth=0, size=24):
    """Well-scoped under `depth` binders; `size` roughly bounds the node count."""
    leaves = [Star(), Unit(), Nat(), Zero()] + [Var(i) for i in range(depth)]
    if size <= 1:
        return draw(st.sampled_from(leaves))
    kind = draw(st.integers(0, 24))

    def sub(d=0, k=1):
        return draw(raw_terms(depth + d, (size - 1) // k))

    match kind:
        case 0 | 1 | 2:
            return draw(st.sampled_from(leaves))
        case 3:
            return Lam(sub(1))
        case 4:
            return App(sub(0, 2), sub(0, 2))
        case 5:
            return Pi(sub(0, 2), sub(1, 2))
        case 6:
            return Sigma(sub(0, 2), sub(1, 2))
        case 7:
            return Pair(sub(0, 2), sub(0, 2))
        case 8:
            return draw(st.sampled_from([Proj1, Proj2, Succ, Inl, Inr, Refl, ReflOver]))(sub())
        case 9:
            return Sum(sub(0, 2), sub(0, 2))
        case 10:
            return SumElim(sub(1, 4), sub(1, 4), sub(1, 4), sub(0, 4))
        case 11:
            return Id(sub(0, 3), sub(0, 3), sub(0, 3))
        case 12:
            return J(sub(3, 5), sub(1, 5), sub(0, 5), sub(0, 5), sub(0, 5))
        case 13:
            return IdOver(sub(1, 4), sub(0, 4), sub(0, 4), sub(0, 4))
        case 14:
            return JOver(sub(6, 8), sub(2, 8), tuple(sub(0, 8) for _ in range(6)))
        case 15:
            return Ap(sub(1, 4), sub(0, 4), sub(0, 4), sub(0, 4))
        case 16:
            return NatElim(sub(1, 4), sub(0, 4), sub(2, 4), sub(0, 4))
        case 17:
            return SchemaType("Trunc", (Binder(0, sub()),))
        case 18:
            return SchemaCtor("N", (), 1, (sub(),))
        case 19:
            return SchemaCtor("Circle", (), draw(st.integers(0, 1)), ())
        case 20:
            ms = (Binder(0, sub(0, 4)), Binder(2, sub(2, 4)))
            return SchemaElim("N", (), sub(1, 4), ms, sub(0, 4))
        case 21:
            return SchemaType("W", (Binder(0, sub(0, 2)), Binder(1, sub(1, 2))))
        case 22:
            return Square(sub(0, 4), sub(0, 4), sub(0, 4), sub(0, 4))
        case _:
            return sub()


# -- well-typed closed terms of finite type --------------------------------------

BASE_TYPES = [Unit(), Sum(Unit(), Unit())]


@st.composite
def finite_types(draw, size=2):
    if size <= 0:
        return draw(st.sampled_from(BASE_TYPES))
    kind = draw(st.integers(0, 5))
    match kind:
        case 0 | 1:
            return draw(st.sampled_from(BASE_TYPES))
        case 2:
            return Sum(draw(finite_types(size - 1)), draw(finite_types(size - 1)))
        case 3:
            return Sigma(draw(finite_types(size - 1)), shift(draw(finite_types(size - 1)), 0, 1))
        case 4:
            dom = draw(st.sampled_from(BASE_TYPES))
            return Pi(dom, shift(draw(finite_types(size - 1)), 0, 1))
        case _:
            a = draw(finite_types(size - 1))
            x = draw(typed_terms(a, (), 0))
            # right endpoint: x itself or a redex that reduces to it
            y = draw(st.sampled_from([x, _delay(x, a)]))
            return Id(a, x, y)


def _delay(t, ty):
    """A redex that reduces to t (works for closed t)."""
    return NatElim(shift(ty, 0, 1), t, Var(0), Zero())


def _lookup(ctx, ty):
    """Indices of context variables of the given (closed) type."""
    n = len(ctx)
    return [Var(n - 1 - i) for i, t in enumerate(ctx) if t == ty]


@st.composite
def typed_terms(draw, ty, ctx=(), size=3):
    """A term t with ctx |- t : ty; ctx lists closed types, outermost first."""
    n = len(ctx)
    options = ["intro"]
    if _lookup(ctx, ty):
        options.append("var")
    if size > 0:
        options += ["beta", "natrec", "J", "proj", "case", "circle", "coprod", "nat"]
    choice = draw(st.sampled_from(options))
    sub = lambda t, c=ctx: typed_terms(t, c, size - 1)  # noqa: E731
    match choice:
        case "var":
            return draw(st.sampled_from(_lookup(ctx, ty)))
        case "beta":
            a = draw(st.sampled_from(BASE_TYPES))
            body = draw(inferable(ty, ctx + (a,), size - 1))
            arg = draw(inferable(a, ctx, size - 1))
            return App(Lam(body), arg)
        case "natrec":
            z = draw(sub(ty))
            s = draw(st.sampled_from([Var(0), None]))
            if s is None:
                s = draw(sub(ty, ctx + (Nat(), ty)))
            k = draw(st.integers(0, 2))
            scrut = Zero()
            for _ in range(k):
                scrut = Succ(scrut)
            return NatElim(shift(ty, 0, n + 1), z, s, scrut)
        case "J":
            a = draw(st.sampled_from(BASE_TYPES))
            x = draw(inferable(a, ctx, size - 1))
            base = draw(sub(ty, ctx + (a,)))
            return J(shift(ty, 0, n + 3), base, x, x, Refl(x))
        case "proj":
            other = draw(st.sampled_from(BASE_TYPES))
            t = draw(inferable(ty, ctx, size - 1))
            o = draw(inferable(other, ctx, size - 1))
            if draw(st.booleans()):
                return Proj1(Pair(t, o))
            return Proj2(Pair(o, t))
        case "case":
            l, r = draw(st.sampled_from(BASE_TYPES)), draw(st.sampled_from(BASE_TYPES))
            scrut = draw(inferable(Sum(l, r), ctx, size - 1))
            lc = draw(sub(ty, ctx + (l,)))
            rc = draw(sub(ty, ctx + (r,)))
            return SumElim(shift(ty, 0, n + 1), lc, rc, scrut)
        case "circle":
            t = draw(inferable(ty, ctx, size - 1))
            loop = SchemaCtor("Circle", (), 1, ())
            base = SchemaCtor("Circle", (), 0, ())
            ms = (Binder(0, t), Binder(0, Ap(shift(t, 0, 1), base, base, loop)))
            return SchemaElim("Circle", (), shift(ty, 0, n + 1), ms, base)
        case "coprod":
            ps = (Binder(0, Unit()), Binder(0, Unit()))
            m1 = draw(sub(ty, ctx + (Unit(),)))
            m2 = draw(sub(ty, ctx + (Unit(),)))
            j = draw(st.integers(0, 1))
            return SchemaElim("Coprod", ps, shift(ty, 0, n + 1), (Binder(1, m1), Binder(1, m2)),
                              SchemaCtor("Coprod", ps, j, (Star(),)))
        case "nat":
            t = draw(sub(ty))
            z = SchemaCtor("N", (), 0, ())
            ms = (Binder(0, t), Binder(2, Var(0)))
            k = draw(st.integers(0, 2))
            scrut = z
            for _ in range(k):
                scrut = SchemaCtor("N", (), 1, (scrut,))
            return SchemaElim("N", (), shift(ty, 0, n + 1), ms, scrut)
    return draw(_intro(ty, ctx, size))


@st.composite
def _intro(draw, ty, ctx, size):
    sub = lambda t, c=ctx: typed_terms(t, c, max(size - 1, 0))  # noqa: E731
    match ty:
        case Unit():
            return Star()
        case Sum(l, r):
            if draw(st.booleans()):
                return Inl(draw(sub(l)))
            return Inr(draw(sub(r)))
        case Sigma(a, b):
            return Pair(draw(sub(a)), draw(sub(shift(b, 0, -1))))
        case Pi(a, b):
            return Lam(draw(sub(shift(b, 0, -1), ctx + (a,))))
        case Id(_, x, _):
            return Refl(shift(x, 0, len(ctx)))
    raise AssertionError(f"no introduction form for {ty!r}")


@st.composite
def inferable(draw, ty, ctx, size):
    """A term of the given type whose type can be inferred.

    With a Nat variable in scope the wrapper is a natrec stuck on it, so it stays
    inferable under any reduction; closed terms fall back to a redex on zero.
    """
    n = len(ctx)
    vs = _lookup(ctx, ty)
    if vs and draw(st.booleans()):
        return draw(st.sampled_from(vs))
    t = draw(typed_terms(ty, ctx, max(size, 0)))
    nats = _lookup(ctx, Nat())
    scrut = nats[0] if nats else Zero()
    return NatElim(shift(ty, 0, n + 1), t, Var(0), scrut)


# Terms are generated over a single Nat variable so that inferable wrappers never
# reduce away; evaluation supplies concrete numerals for it.
NAT_CTX = (Nat(),)


@st.composite
def typed_open(draw, size=3):
    ty = draw(finite_types(2))
    return draw(typed_terms(ty, NAT_CTX, size)), ty
