from functools import lru_cache

import pytest

from qintcart.catalog import CASE_IDS, curl, gauge_transform, make_case, verify_case
from qintcart.determining import (
    COLUMNS,
    CartesianAnsatz,
    ansatz_from_case,
    case_eq4_residuals,
    check_A_general_solution,
    column_product,
    eq4_residuals,
    eq4_sextuple,
    gauge_function,
    general_solution_ansatz,
    generate,
    permute,
    substitute_case,
)
from qintcart.expr import add, fn, is_zero, mul, neg, parse, to_string
from qintcart.model import EMField


@lru_cache(maxsize=None)
def system():
    return generate()


def test_no_third_order_terms():
    assert system().select(order=3) == []
    assert len(system().select(order=2)) == 17


# highest-power relations, written as "expression = 0"
TOP = {
    ("HQ", (2, 0, 0)): "4*A1^(1,0,0)(x,y,z) - f1^(1,0,0)(x,y,z)",
    ("HQ", (1, 1, 0)): "4*A2^(1,0,0)(x,y,z) - f1^(0,1,0)(x,y,z) - f2^(1,0,0)(x,y,z)",
    ("HQ", (1, 0, 1)): "4*A3^(1,0,0)(x,y,z) - f1^(0,0,1)(x,y,z) - f3^(1,0,0)(x,y,z)",
    ("HQ", (0, 2, 0)): "f2^(0,1,0)(x,y,z)",
    ("HQ", (0, 0, 2)): "f3^(0,0,1)(x,y,z)",
    ("HP", (0, 2, 0)): "4*A2^(0,1,0)(x,y,z) - g2^(0,1,0)(x,y,z)",
    ("HP", (1, 1, 0)): "4*A1^(0,1,0)(x,y,z) - g1^(0,1,0)(x,y,z) - g2^(1,0,0)(x,y,z)",
    ("HP", (0, 1, 1)): "4*A3^(0,1,0)(x,y,z) - g2^(0,0,1)(x,y,z) - g3^(0,1,0)(x,y,z)",
    ("HP", (2, 0, 0)): "g1^(1,0,0)(x,y,z)",
    ("QP", (1, 1, 0)): "f1^(0,1,0)(x,y,z) - g2^(1,0,0)(x,y,z)",
}


@pytest.mark.parametrize("key", sorted(TOP))
def test_highest_power_relations(key):
    got = system().find(key[0], key[1], 0)
    want = parse(TOP[key])
    # equal up to a nonzero numeric factor
    assert any(is_zero(add(got, mul(-k, want))) for k in (1, -1, 2, -2)), to_string(got)


def test_residuals_are_hbar_split():
    powers = {r.hbar_power for r in system()}
    # the hbar^0 part is the classical bracket; quantum corrections carry positive powers
    assert min(powers) == 0 and max(powers) == 2


def test_trivial_ansatz_gives_empty_system():
    free = CartesianAnsatz(f=(0, 0, 0), g=(0, 0, 0), gamma1=0, gamma2=0, field=EMField(0, (0, 0, 0)))
    assert len(generate(free)) == 0


def test_serialization():
    s = system()
    assert '"schema": "qintcart/1"' in s.dumps()
    tex = s.to_latex()
    assert tex.startswith(r"\begin{align*}") and tex.count("= 0") == len(s)


@pytest.mark.parametrize("cid", CASE_IDS)
def test_case_substitution_zeroes_the_system(cid):
    rep = substitute_case(system(), make_case(cid))
    assert rep.passed, rep.failures[:3]


def test_substitution_detects_tampering():
    s = make_case("3")
    bad = s.with_changes(field=EMField(add(s.field.V, parse("x*y")), s.field.A))
    assert not substitute_case(system(), bad).passed


def test_general_solution_for_A():
    assert check_A_general_solution()


def test_general_solution_without_r3_still_solves():
    # r3' is pure gauge, so dropping it loses nothing
    assert check_A_general_solution(drop_r3=True)


def test_general_solution_rejects_wrong_dependence():
    assert not check_A_general_solution(g1_variable="x")


def test_gauge_strips_general_solution():
    a = general_solution_ansatz()
    A = gauge_transform(a.field, gauge_function()).A
    want = ("(g1(y) + r1(z))/4", "(f2(x) + r2(z))/4", "(f3(x) + g3(y))/4")
    for got, w in zip(A, want):
        assert is_zero(add(got, neg(parse(w))))


def test_gauge_preserves_field():
    a = general_solution_ansatz()
    for u, v in zip(curl(a.field.A), curl(gauge_transform(a.field, gauge_function()).A)):
        assert is_zero(add(u, neg(v)))


# -- the ODE system on (f2, f3, g1, g3, r1, r2) ---------------------------------------


@pytest.mark.parametrize("cid", CASE_IDS)
def test_eq4_for_every_case(cid):
    s = make_case(cid)
    for e in case_eq4_residuals(s):
        assert is_zero(s.reduced(e), tol=1e-9)


def test_eq4_example_and_failure():
    f2, f3, g1, g3 = parse("1"), parse("x"), parse("1"), parse("y")
    r1, r2 = parse("2"), parse("3")
    assert all(is_zero(e) for e in eq4_residuals(f2, f3, g1, g3, r1, r2))
    res = eq4_residuals(parse("x"), parse("x^2"), parse("y"), parse("y"), parse("1"), parse("1"))
    assert not is_zero(res[0])


def test_eq4_rejects_wrong_variable():
    with pytest.raises(ValueError, match="f2"):
        eq4_residuals(parse("y"), 0, 0, 0, 0, 0)
    eq4_residuals(fn("f2", "x"), 0, 0, 0, 0, 0)


def test_eq4_sextuple_of_case4():
    d = eq4_sextuple(make_case("4"))
    assert is_zero(add(d["f2"], neg(parse("4*f'(x)"))))
    assert is_zero(add(d["g1"], neg(parse("4*g'(y)"))))
    assert is_zero(d["r1"]) and is_zero(d["r2"]) and is_zero(d["f3"])


def test_ansatz_requires_cartesian_frame():
    s = make_case("1")
    with pytest.raises(ValueError):
        ansatz_from_case(permute(s, 2))


# -- permutation columns ----------------------------------------------------------------


def test_columns_form_a_group():
    for a in COLUMNS:
        assert column_product(1, a) == a == column_product(a, 1)
        assert any(column_product(a, b) == 1 for b in COLUMNS)
        for b in COLUMNS:
            for c in COLUMNS:
                assert column_product(column_product(a, b), c) == column_product(a, column_product(b, c))


@pytest.mark.parametrize("cid", ["3", "5", "6.1c", "6.3e"])
@pytest.mark.parametrize("col", sorted(COLUMNS))
def test_permuted_case_verifies(cid, col):
    s = permute(make_case(cid), col)
    assert s.id == cid if col == 1 else s.id == f"{cid}|col{col}"
    assert verify_case(s).passed


def test_permutation_composes():
    s = make_case("4")
    for a in COLUMNS:
        for b in COLUMNS:
            lhs, rhs = permute(permute(s, a), b), permute(s, column_product(a, b))
            assert lhs.id == rhs.id and lhs.field == rhs.field and lhs.q == rhs.q


def test_column_two_relabels_axes():
    s = permute(make_case("3"), 2)
    # x -> z, y -> x, z -> y: A3 = f(x) + g(y) becomes A2 = f(z) + g(x)
    assert is_zero(add(s.field.A[1], neg(parse("f(z) + g(x)"))))
    assert s.q.terms[(0, 0, 2)] == parse("1")
