import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqmq.errors import DomainError, ExpressionSyntaxError, UnknownIdentifier
from cqmq.jetcalc import Jet, basis, eval_jet, eval_point, parse, to_source
from cqmq.jetcalc.expr import BinOp, Call, Const, Neg, Num, Pow, Var
from cqmq.jetcalc.fields import ExprField


def test_parse_power_of_call():
    assert parse("sin(x1)^2") == Pow(Call("sin", Var(1)), 2)


def test_parse_division():
    assert parse("1/(x2*x2)") == BinOp("/", Num(Fraction(1)), BinOp("*", Var(2), Var(2)))


def test_truncated_input_offset():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("x1 +")
    assert info.value.offset == 4
    assert "identifier" in info.value.expected


def test_offset_is_in_bytes():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("x1 + θ")
    assert info.value.offset == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        parse("x3 + 1", n=2)
    with pytest.raises(UnknownIdentifier):
        parse("foo(x1)")


def test_aliases_and_constants():
    e = parse("cos(theta) + pi*i", n=2, aliases={"theta": 1})
    assert eval_point(e, [0.0, 0.0]) == pytest.approx(1 + math.pi * 1j)


def test_precedence():
    assert parse("-x1^2") == Neg(Pow(Var(1), 2))
    assert parse("x1^2^3") == Pow(Var(1), 8)
    assert eval_point(parse("2^3^2"), []) == 2**9
    assert eval_point(parse("8/4/2"), []) == 1


def test_sin_squared_jet():
    j = eval_jet(parse("sin(x1)^2"), np.array([math.pi / 2]), 2)
    np.testing.assert_allclose(j.coeffs, [1, 0, -1], atol=1e-15)


def test_cube_jet():
    j = eval_jet(parse("x1^3"), np.array([2.0]), 3)
    np.testing.assert_allclose(j.coeffs, [8, 12, 6, 1], rtol=1e-13)


def test_pole_raises():
    with pytest.raises(DomainError):
        eval_jet(parse("1/x1"), np.array([0.0]), 1)
    with pytest.raises(DomainError):
        eval_jet(parse("log(x1)"), np.array([-1.0]), 1)
    with pytest.raises(DomainError):
        eval_jet(parse("sqrt(x1)"), np.array([0.0]), 1)


def test_constant_jets_are_zero_dimensional_friendly():
    j = eval_jet(parse("3"), np.zeros((0,)), 2)
    assert j.value == 3


def test_polynomial_taylor_exact():
    # (1 + x1 + 2 x2)^4 at (0.5, -0.25) expanded by hand through its multinomial coefficients
    p = np.array([0.5, -0.25])
    j = eval_jet(parse("(1 + x1 + 2*x2)^4"), p, 4)
    c = 1 + p[0] + 2 * p[1]
    for k, (a, b) in enumerate(j.basis.multi):
        m = a + b
        expect = math.comb(4, m) * c ** (4 - m) * math.comb(m, a) * 2**b
        assert j.coeffs[k] == pytest.approx(expect, rel=1e-13)


def test_batched_evaluation_matches_pointwise():
    e = parse("exp(x1)*cos(x2) + x1*x2")
    pts = np.array([[0.1, 0.7, -0.3], [0.2, 1.1, 2.0]])
    jb = eval_jet(e, pts, 3)
    for k in range(3):
        jp = eval_jet(e, pts[:, k], 3)
        np.testing.assert_allclose(jb.coeffs[:, k], jp.coeffs, rtol=1e-14)


def test_time_derivative_field():
    f = ExprField("exp(i*(x1 - t/2))", n=1)
    p = np.array([0.3])
    dt = f.dt_field().value(p, 0.1)
    assert dt == pytest.approx(-0.5j * np.exp(1j * (0.3 - 0.05)))
    assert ExprField("x1^2", n=1).is_static()


# --------------------------------------------------------------------------
# properties


def _exprs(n):
    leaves = st.one_of(
        st.integers(0, 9).map(lambda k: Num(Fraction(k))),
        st.sampled_from([Fraction(1, 2), Fraction(5, 4), Fraction(3, 10)]).map(Num),
        st.integers(1, n).map(Var),
        st.just(Const("pi")),
    )

    def grow(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: BinOp(*t)),
            children.map(Neg),
            st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(*t)),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "sinh", "cosh"]), children).map(lambda t: Call(*t)),
        )

    return st.recursive(leaves, grow, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(_exprs(3))
def test_print_parse_round_trip(e):
    assert parse(to_source(e), n=3) == e


def _reference_product(a, b):
    """Truncated Cauchy product by brute force over multi-indices."""
    bas = a.basis
    out = np.zeros_like(a.coeffs, dtype=complex)
    index = {m: k for k, m in enumerate(bas.multi)}
    for i, ma in enumerate(bas.multi):
        for j, mb in enumerate(bas.multi):
            m = tuple(x + y for x, y in zip(ma, mb))
            if m in index:
                out[index[m]] += a.coeffs[i] * b.coeffs[j]
    return out


@settings(max_examples=100, deadline=None)
@given(_exprs(2), _exprs(2), st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_product_rule(e1, e2, p):
    p = np.array(p)
    a, b = eval_jet(e1, p, 3), eval_jet(e2, p, 3)
    got = eval_jet(BinOp("*", e1, e2), p, 3).coeffs
    ref = _reference_product(a, b)
    scale = np.maximum(1.0, np.abs(ref))
    assert np.all(np.abs(got - ref) <= 1e-12 * scale * max(1.0, np.abs(a.coeffs).max() * np.abs(b.coeffs).max()))


@settings(max_examples=50, deadline=None)
@given(_exprs(2), st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_gradient_matches_central_differences(e, p):
    p = np.array(p)
    j = eval_jet(e, p, 1)
    h = 1e-5
    for i in range(2):
        dp = np.zeros(2)
        dp[i] = h
        fd = (eval_point(e, p + dp) - eval_point(e, p - dp)) / (2 * h)
        scale = max(1.0, abs(j.value), abs(fd))
        assert abs(j.gradient()[i] - fd) <= 1e-5 * scale


def test_jet_arithmetic_identities():
    x, y = Jet.variables(np.array([0.3, 0.8]), 4)
    from cqmq.jetcalc import jet as J

    one = J.sin(x) ** 2 + J.cos(x) ** 2
    np.testing.assert_allclose(one.coeffs, basis(2, 4).size * [0] + np.eye(1, basis(2, 4).size)[0], atol=1e-14)
    r = (x * y) * (x * y).reciprocal()
    assert abs(r.value - 1) < 1e-15 and np.max(np.abs(r.coeffs[1:])) < 1e-13
    np.testing.assert_allclose(J.log(J.exp(x)).coeffs, x.coeffs, atol=1e-14)
    np.testing.assert_allclose(J.sqrt(y).ipow(2).coeffs, y.coeffs, atol=1e-14)
    with pytest.raises(DomainError):
        (x - 0.3).reciprocal()
