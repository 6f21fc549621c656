from pathlib import Path as FsPath

import pytest

from hitkernel.hit_schema import (
    BoundaryMismatch, FibrantStructureError, Judgment, PositivityError, Rewrite,
    Rule, RuleSet, SchemaError, builtin_registry, builtin_schemas, canonical,
    check_rules, generate_rules, validate_param_scheme, validate_schema,
)
from hitkernel.surface_parser import parse_module
from hitkernel.syntax_core import (
    Ap, Binder, Carrier, CellSpec, Con, Id, IdOver, Meta, Nat, ParamScheme, Param, Path,
    Point, Schema, SchemaCtor, SchemaElim, SchemaPathComp, SchemaType, TypeParam,
    Var, Zero,
)

FIX = FsPath(__file__).parent / "fixtures"
REG = builtin_registry()


def schema_of(text):
    return parse_module(text, registry=REG).schemas()[0].schema


def lint(text):
    validate_schema(schema_of(text), REG)


# -- validation ---------------------------------------------------------------------

@pytest.mark.parametrize("s", builtin_schemas(), ids=lambda s: s.name)
def test_builtins_validate_and_rules_check(s):
    validate_schema(s, REG)
    check_rules(s, generate_rules(s, REG), REG)


def test_blass_schema_rejected_on_the_recursive_constructor():
    with pytest.raises(FibrantStructureError) as ei:
        validate_schema(schema_of((FIX / "blass.hit").read_text()), REG)
    assert ei.value.cell == "ax4" and ei.value.node == "NatElim"


def test_blass_without_ax4_is_accepted():
    text = (FIX / "blass.hit").read_text()
    head, tail = text.split("  path ax4")
    lint(head + "  path ax5" + tail.split("  path ax5")[1])


def test_concatenated_globe_rejected():
    with pytest.raises(FibrantStructureError) as ei:
        lint((FIX / "bad_torus.hit").read_text())
    assert ei.value.node == "J" and ei.value.cell == "sq"


def test_concatenated_path_rejected():
    with pytest.raises(FibrantStructureError):
        lint("schema T {\n point base\n path p : base = base\n path q : base = base\n"
             " path sq : J(x y e. base = y; x. base; base, base, p) = base\n}")


def test_ap_banned_in_globe():
    with pytest.raises(FibrantStructureError) as ei:
        lint("schema T {\n point base\n path l : base = base\n"
             " cell g : globe(ap(x. base; base, base, l), l)\n}")
    assert ei.value.node == "Ap"


def test_negative_occurrence_rejected():
    with pytest.raises(PositivityError):
        lint((FIX / "negative.hit").read_text())


def test_dependency_on_recursive_argument_rejected():
    with pytest.raises(PositivityError):
        lint("schema D {\n point mk (x : D) (p : Id D x x)\n}")


def test_boundary_of_wrong_type():
    with pytest.raises(SchemaError):
        lint("schema B {\n point base\n path p : base = tt\n}")


def test_globe_endpoints_must_agree():
    with pytest.raises(BoundaryMismatch):
        lint("schema G {\n point a\n point b\n path p : a = a\n path q : a = b\n cell s : globe(p, q)\n}")


def test_forward_reference_rejected():
    bad = Schema("Fw", ParamScheme(), (CellSpec("p", Path(), (), (Con(1, ()), Con(1, ()))), CellSpec("a", Point())))
    with pytest.raises(SchemaError, match="not declared before"):
        validate_schema(bad, REG)


def test_globe_over_two_cells_is_unsupported():
    with pytest.raises(SchemaError, match="unsupported dimension"):
        lint("schema S {\n point base\n cell s : globe(refl base, refl base)\n"
             " cell t : globe(s, s)\n}")


def test_param_scheme_order():
    validate_param_scheme(ParamScheme((TypeParam("A"), TypeParam("B", (("a", Param(0, ())),)))), REG)
    with pytest.raises(SchemaError):
        validate_param_scheme(ParamScheme((TypeParam("B", (("a", Param(1, ())),)), TypeParam("A"))), REG)
    with pytest.raises(SchemaError):
        validate_param_scheme(ParamScheme((TypeParam("A", (("n", Zero()),)),)), REG)
    validate_param_scheme(ParamScheme((TypeParam("A", (("n", Nat()),)),)), REG)


# -- hand-written rule sets, compared up to renaming ------------------------------------

def C(x):
    return Meta("C", (x,))


def nat_rules():
    P = SchemaType("N", ())
    z = SchemaCtor("N", (), 0, ())

    def s(n):
        return SchemaCtor("N", (), 1, (n,))
    ms = (Binder(0, Meta("zc", ())), Binder(2, Meta("sc", (Var(1), Var(0)))))

    def rec(t):
        return SchemaElim("N", (), C(Var(0)), ms, t)
    return RuleSet(
        "N",
        Rule("form", (), Judgment((), P, None)),
        (Rule("zero", (), Judgment((), z, P)),
         Rule("succ", (), Judgment((("n", P),), s(Var(0)), P))),
        Rule("nrec", (
            Judgment((("w", P),), C(Var(0)), None),
            Judgment((), Meta("zc", ()), C(z)),
            Judgment((("n", P), ("r", C(Var(0)))), Meta("sc", (Var(1), Var(0))), C(s(Var(1)))),
            Judgment((), Meta("a", ()), P),
        ), Judgment((), rec(Meta("a", ())), C(Meta("a", ())))),
        (Rewrite("nrec-zero", (), rec(z), Meta("zc", ())),
         Rewrite("nrec-succ", (("n", P),), rec(s(Var(0))), Meta("sc", (Var(0), rec(Var(0)))))),
        (),
    )


def trunc_rules():
    A = Param(0, ())
    ps = (Binder(0, A),)
    T = SchemaType("Trunc", ps)

    def tr(a):
        return SchemaCtor("Trunc", ps, 0, (a,))

    def treq(x, y):
        return SchemaCtor("Trunc", ps, 1, (x, y))
    ms = (Binder(1, Meta("c", (Var(0),))), Binder(4, Meta("d", (Var(3), Var(2), Var(1), Var(0)))))

    def rec(t):
        return SchemaElim("Trunc", ps, C(Var(0)), ms, t)
    x, y = Var(1), Var(0)
    return RuleSet(
        "Trunc",
        Rule("form", (Judgment((), A, None),), Judgment((), T, None)),
        (Rule("tr", (), Judgment((("x", A),), tr(Var(0)), T)),
         Rule("treq", (), Judgment((("x", T), ("y", T)), treq(x, y), Id(T, x, y)))),
        Rule("trrec", (
            Judgment((("z", T),), C(Var(0)), None),
            Judgment((("x", A),), Meta("c", (Var(0),)), C(tr(Var(0)))),
            Judgment((("x", T), ("y", T), ("u", C(Var(1))), ("v", C(Var(1)))),
                     Meta("d", (Var(3), Var(2), Var(1), Var(0))),
                     IdOver(C(Var(0)), treq(Var(3), Var(2)), Var(1), Var(0))),
            Judgment((), Meta("a", ()), T),
        ), Judgment((), rec(Meta("a", ())), C(Meta("a", ())))),
        (Rewrite("trrec-tr", (("a", A),), rec(tr(Var(0))), Meta("c", (Var(0),))),),
        # the typal computation rule for treq, in the usual pattern
        (Rule("treq-comp", (), Judgment(
            (("x", T), ("y", T)),
            SchemaPathComp("Trunc", 1, ps, C(Var(0)), ms, (x, y)),
            Id(IdOver(C(Var(0)), treq(x, y), rec(x), rec(y)),
               Ap(rec(Var(0)), x, y, treq(x, y)),
               Meta("d", (x, y, rec(x), rec(y)))))),),
    )


def push_rules():
    A, B1, B2 = Param(0, ()), Param(1, ()), Param(2, ())

    def f1(x):
        return Param(3, (x,))

    def f2(x):
        return Param(4, (x,))
    ps = (Binder(0, A), Binder(0, B1), Binder(0, B2), Binder(1, f1(Var(0))), Binder(1, f2(Var(0))))
    P = SchemaType("Push", ps)

    def ctor(j, a):
        return SchemaCtor("Push", ps, j, (a,))
    ms = (Binder(1, Meta("t1", (Var(0),))), Binder(1, Meta("t2", (Var(0),))), Binder(1, Meta("m", (Var(0),))))

    def pe(t):
        return SchemaElim("Push", ps, C(Var(0)), ms, t)
    x = Var(0)
    m_ty = IdOver(C(Var(0)), ctor(2, x), Meta("t1", (f1(x),)), Meta("t2", (f2(x),)))
    return RuleSet(
        "Push",
        Rule("form", (
            Judgment((), A, None), Judgment((), B1, None), Judgment((), B2, None),
            Judgment((("x", A),), f1(x), B1), Judgment((("x", A),), f2(x), B2),
        ), Judgment((), P, None)),
        (Rule("nu1", (), Judgment((("b", B1),), ctor(0, Var(0)), P)),
         Rule("nu2", (), Judgment((("b", B2),), ctor(1, Var(0)), P)),
         Rule("mu", (), Judgment((("a", A),), ctor(2, x), Id(P, ctor(0, f1(x)), ctor(1, f2(x)))))),
        Rule("pe", (
            Judgment((("z", P),), C(Var(0)), None),
            Judgment((("y", B1),), Meta("t1", (Var(0),)), C(ctor(0, Var(0)))),
            Judgment((("y", B2),), Meta("t2", (Var(0),)), C(ctor(1, Var(0)))),
            Judgment((("x", A),), Meta("m", (x,)), m_ty),
            Judgment((), Meta("a", ()), P),
        ), Judgment((), pe(Meta("a", ())), C(Meta("a", ())))),
        (Rewrite("pe-nu1", (("b", B1),), pe(ctor(0, Var(0))), Meta("t1", (Var(0),))),
         Rewrite("pe-nu2", (("b", B2),), pe(ctor(1, Var(0))), Meta("t2", (Var(0),)))),
        (Rule("pec", (), Judgment(
            (("a", A),),
            SchemaPathComp("Push", 2, ps, C(Var(0)), ms, (x,)),
            Id(m_ty, Ap(pe(Var(0)), ctor(0, f1(x)), ctor(1, f2(x)), ctor(2, x)), Meta("m", (x,))))),),
    )


@pytest.mark.parametrize("name, expected", [("N", nat_rules), ("Trunc", trunc_rules), ("Push", push_rules)])
def test_generated_rules_match_hand_written(name, expected):
    got = generate_rules(REG[name], REG)
    assert canonical(got) == canonical(expected())


def test_canonical_is_insensitive_to_meta_names_only():
    a = Judgment((("x", Nat()),), Meta("p", (Var(0),)), Meta("q", ()))
    b = Judgment((("y", Nat()),), Meta("r", (Var(0),)), Meta("s", ()))
    c = Judgment((("y", Nat()),), Meta("r", (Var(0),)), Meta("r", ()))
    assert canonical(a) == canonical(b)
    assert canonical(a) != canonical(c)


def test_hand_written_sets_pass_the_kernel():
    for name, rs in (("N", nat_rules()), ("Push", push_rules())):
        assert canonical(rs) == canonical(generate_rules(REG[name], REG))
        check_rules(REG[name], generate_rules(REG[name], REG), REG)


def test_circle_elim_premises_use_dependent_paths():
    rs = generate_rules(REG["Circle"], REG)
    loop_premise = rs.elim.premises[2]
    assert isinstance(loop_premise.type, IdOver)
    assert len(rs.betas) == 1 and len(rs.path_comps) == 1


def test_w_sup_method_gets_function_hypothesis():
    rs = generate_rules(REG["W"], REG)
    ctx = rs.elim.premises[1].context
    assert [n for n, _ in ctx][:2] == ["a", "k"] and len(ctx) == 3
    assert rs.betas[0].rhs != rs.betas[0].lhs


def test_point_dimension_shape():
    s = Schema("Bad", ParamScheme(), (CellSpec("p", Point(), (), (Carrier(),)),))
    with pytest.raises(SchemaError, match="wrong shape"):
        validate_schema(s, REG)
