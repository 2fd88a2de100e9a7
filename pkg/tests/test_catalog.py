import json
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qintcart.catalog import (
    CASE_IDS,
    ContradictoryBindingError,
    MissingBindingError,
    UnknownCaseError,
    UnknownParameterError,
    case_parameters,
    curl,
    dumps,
    from_json,
    gauge_transform,
    make_case,
    parse_perturbation,
    perturb,
    sample_parameters,
    subcase_constraints,
    to_json,
    verify_case,
)
from qintcart.expr import EvalPoint, add, diff, fn, is_zero, neg, parse, substitute
from qintcart.testing import random_expr

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


@lru_cache(maxsize=None)
def report(cid, samples=1, seed=0):
    return verify_case(make_case(cid), samples=samples, seed=seed)


def test_catalog_size_and_ids():
    assert len(CASE_IDS) == 25
    assert CASE_IDS[:5] == ("1", "2", "3", "4", "5")
    assert "6.3d" in CASE_IDS


@pytest.mark.parametrize("cid", CASE_IDS)
def test_every_case_commutes(cid):
    rep = report(cid)
    assert rep.passed, [(c.commutator, c.index, c.residual) for c in rep.failures()]
    assert rep.max_residual() < 1e-9


def test_complex_subcases_are_flagged():
    assert report("6.2c").non_real
    assert not report("6.1b").non_real
    assert not report("4").non_real


def test_unknown_case():
    with pytest.raises(UnknownCaseError):
        make_case("7")
    with pytest.raises(UnknownCaseError):
        make_case("6.5a")


def test_unknown_parameter():
    with pytest.raises(UnknownParameterError):
        make_case("1", {"C": 1})
    with pytest.raises(UnknownParameterError):
        make_case("4", {"C6": 1})


def test_contradictory_binding():
    with pytest.raises(ContradictoryBindingError):
        make_case("6.1a", {"C": 1})
    with pytest.raises(ContradictoryBindingError):
        make_case("6.1b", {"k1": 1, "r1": 2})
    make_case("6.1b", {"k1": 1, "r1": 1})


def test_strict_missing_binding():
    with pytest.raises(MissingBindingError):
        make_case("4", {"C": 1}, strict=True)
    make_case("4", dict(C=1, C1=0, C2=0, C3=0, C4=0, C5=0), strict=True)


def test_subcase_constraints():
    assert subcase_constraints("6.1a") == {"C": parse("0"), "C1": parse("0")}
    sc = subcase_constraints("6.4c")
    assert sc["r3"] == parse("i*k3")
    assert subcase_constraints("4") == {}
    assert case_parameters("5")[-1] == "C6"


def test_free_parameters_remain_until_bound():
    s = make_case("4", {"C": 2})
    assert "C" not in s.free_params and "C1" in s.free_params


def test_bound_case_still_commutes():
    s = make_case("6.2c", {"a1": 1, "a2": 2, "a3": 0.5, "k1": 1, "k2": -1, "k3": 2, "C": 1})
    assert verify_case(s).passed


def test_sample_parameters_reproducible_and_in_range():
    s = make_case("6.3b")
    a = sample_parameters(s, 5, 0)
    assert a == sample_parameters(s, 5, 0)
    assert a != sample_parameters(s, 5, 1)
    assert all(0.5 <= abs(v) <= 2 for v in a.values())
    assert set(a) == {"a1", "a2", "a3", "k1", "k2", "k3", "C"}


# -- fields ----------------------------------------------------------------------

PRINTED_OMEGA = {
    "2": ("-v2'(z)", "v1'(z)", "0"),
    "3": ("g'(y)", "-f'(x)", "0"),
    "4": ("0", "0", "f''(x) - g''(y)"),
    "5": ("C*g'(y)", "-C*f'(x)", "f''(x) - g''(y)"),
}


@pytest.mark.parametrize("cid", sorted(PRINTED_OMEGA))
def test_curl_matches_printed_field(cid):
    s = make_case(cid)
    for got, want in zip(curl(s.field.A), PRINTED_OMEGA[cid]):
        assert is_zero(add(got, neg(parse(want))), tol=1e-10)


def test_case6_curl_matches_template_field():
    from qintcart.catalog import case6_template

    names = {"u1": "x", "u2": "x", "u3": "x", "w1": "y", "w2": "y", "w3": "y", "v1": "z", "v2": "z", "v3": "z"}
    fld, _, _, omega = case6_template({n: fn(n, v) for n, v in names.items()})
    want = ("(w3''(y) - v2''(z))/4", "(v1''(z) - u3''(x))/4", "(u2''(x) - w1''(y))/4")
    for got, w, o in zip(curl(fld.A), want, omega):
        assert is_zero(add(got, neg(parse(w))), tol=1e-10)
        assert is_zero(add(o, neg(parse(w))), tol=1e-10)


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_curl_is_gauge_invariant(seed):
    rng = np.random.default_rng(seed)
    s = make_case(CASE_IDS[seed % len(CASE_IDS)])
    F = random_expr(rng, 2, allow_hbar=False)
    before, after = curl(s.field.A), curl(gauge_transform(s.field, F).A)
    for a, b in zip(before, after):
        assert is_zero(add(a, neg(b)), seed=seed)


def test_case5_with_zero_C_reduces_to_case4_without_r():
    c4 = make_case("4")
    c5 = make_case("5", {"C": 0})
    drop_r = lambda e: substitute(e, functions={"r": parse("0")})  # noqa: E731
    rename = lambda e: substitute(e, params={"C6": parse("C")})  # noqa: E731
    assert is_zero(add(drop_r(c4.field.V), neg(c5.field.V)))
    for a, b in zip(c4.field.A, c5.field.A):
        assert is_zero(add(a, neg(b)))
    for r4, r5 in zip(c4.rules, c5.rules):
        assert is_zero(add(r4.replacement, neg(rename(r5.replacement))))


# -- perturbations ----------------------------------------------------------------


def test_parse_perturbation():
    assert parse_perturbation("V+x*y") == ("V", parse("x*y"))
    t, d = parse_perturbation("Q-p3")
    assert t == "Q" and d.terms == {(0, 0, 1): parse("-1")}
    with pytest.raises(ValueError):
        parse_perturbation("W+x")


@pytest.mark.parametrize("cid, text", [("1", "V+x*y"), ("3", "A1+z"), ("4", "Q+p3"), ("6.1a", "P+x")])
def test_perturbation_fails_with_witness(cid, text):
    s = perturb(make_case(cid), *parse_perturbation(text))
    assert s.id.endswith("*")
    rep = verify_case(s)
    assert not rep.commutators_passed
    bad = [c for c in rep.failures() if c.commutator in ("HQ", "HP", "QP")]
    assert bad and all(c.witness for c in bad)


def test_perturbed_case2_first_fails_at_order_one():
    # adding x to V breaks [H, p1^2] only through the first-derivative coefficient
    rep = verify_case(perturb(make_case("2"), *parse_perturbation("V+x")))
    bad = {(c.commutator, c.index) for c in rep.failures()}
    assert bad == {("HQ", (1, 0, 0))}


# -- serialization ------------------------------------------------------------------


@pytest.mark.parametrize("cid", ["1", "4", "5", "6.2c", "6.4e"])
def test_json_round_trip(cid):
    s = make_case(cid)
    back = from_json(dumps(s))
    assert to_json(back) == to_json(s)
    assert json.loads(dumps(s))["schema"] == "qintcart/1"


def test_json_round_trip_of_bound_case_verifies():
    s = make_case("6.2c", {"a1": 1, "k1": 2})
    assert verify_case(from_json(dumps(s))).passed


def test_report_json_is_deterministic():
    a = json.dumps(verify_case(make_case("3"), seed=11).to_dict(), sort_keys=True)
    b = json.dumps(verify_case(make_case("3"), seed=11).to_dict(), sort_keys=True)
    assert a == b


def test_verification_with_fixed_parameters():
    rep = verify_case(make_case("4"), samples=3, seed=2)
    assert rep.passed and len(rep.samples) == 3
    assert all(isinstance(EvalPoint(params=s), EvalPoint) for s in rep.samples)


def test_adding_a_conserved_momentum_is_not_a_perturbation():
    # Case 3 is z-independent, so p3 is itself conserved and Q + p3 still commutes
    assert verify_case(perturb(make_case("3"), *parse_perturbation("Q+p3"))).commutators_passed
