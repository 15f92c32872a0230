import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subeq.expr import CONSTANTS, FUNCTIONS, ExprError, ExprEvalError, parse_expr

X = (0.7, -1.3, 2.1)

# (text, reference evaluated with the math module at X)
GOLDEN = [
    ("1", lambda a, b, c: 1.0),
    ("-2.5", lambda a, b, c: -2.5),
    ("1e-3", lambda a, b, c: 1e-3),
    (".5", lambda a, b, c: 0.5),
    ("3.", lambda a, b, c: 3.0),
    ("x1", lambda a, b, c: a),
    ("x2", lambda a, b, c: b),
    ("x3", lambda a, b, c: c),
    ("pi", lambda a, b, c: math.pi),
    ("e", lambda a, b, c: math.e),
    ("x1 + x2", lambda a, b, c: a + b),
    ("x1 - x2 - x3", lambda a, b, c: (a - b) - c),
    ("x1 * x2 / x3", lambda a, b, c: (a * b) / c),
    ("x1 / x2 / x3", lambda a, b, c: (a / b) / c),
    ("x1 + x2 * x3", lambda a, b, c: a + b * c),
    ("(x1 + x2) * x3", lambda a, b, c: (a + b) * c),
    ("x1^2", lambda a, b, c: a ** 2),
    ("-x1^2", lambda a, b, c: -(a ** 2)),
    ("-x2^2", lambda a, b, c: -(b ** 2)),
    ("2^3^2", lambda a, b, c: 2.0 ** 9),
    ("2^-1", lambda a, b, c: 0.5),
    ("x3^0.5", lambda a, b, c: c ** 0.5),
    ("--x1", lambda a, b, c: a),
    ("-(x1 - x2)", lambda a, b, c: -(a - b)),
    ("x1^2 + x2^2 - 1", lambda a, b, c: a * a + b * b - 1),
    ("x1^2 - x2^2", lambda a, b, c: a * a - b * b),
    ("sin(x1)", lambda a, b, c: math.sin(a)),
    ("cos(x2)", lambda a, b, c: math.cos(b)),
    ("tan(x1)", lambda a, b, c: math.tan(a)),
    ("exp(x2)", lambda a, b, c: math.exp(b)),
    ("log(x3)", lambda a, b, c: math.log(c)),
    ("sqrt(x3)", lambda a, b, c: math.sqrt(c)),
    ("abs(x2)", lambda a, b, c: abs(b)),
    ("atan(x2)", lambda a, b, c: math.atan(b)),
    ("min(x1, x2)", lambda a, b, c: min(a, b)),
    ("max(x1, x2, x3)", lambda a, b, c: max(a, b, c)),
    ("min(x1, max(x2, x3))", lambda a, b, c: min(a, max(b, c))),
    ("exp(-x1^2 - x2^2)", lambda a, b, c: math.exp(-(a * a) - b * b)),
    ("sin(pi * x1) * cos(pi * x2)", lambda a, b, c: math.sin(math.pi * a) * math.cos(math.pi * b)),
    ("log(1 + x1^2)", lambda a, b, c: math.log(1 + a * a)),
    ("sqrt(x1^2 + x2^2 + x3^2)", lambda a, b, c: math.sqrt(a * a + b * b + c * c)),
    ("1 / (1 + exp(-x3))", lambda a, b, c: 1 / (1 + math.exp(-c))),
    ("abs(x1 - x2) - 0.5", lambda a, b, c: abs(a - b) - 0.5),
    ("x1 * -x2", lambda a, b, c: a * -b),
    ("2 * x1 - 3 * x2 + 4 * x3", lambda a, b, c: 2 * a - 3 * b + 4 * c),
    ("(x1 - 0.5)^2 + (x2 + 0.25)^2", lambda a, b, c: (a - 0.5) ** 2 + (b + 0.25) ** 2),
    ("e^x1", lambda a, b, c: math.e ** a),
    ("atan(x1 / x3) * 2 / pi", lambda a, b, c: math.atan(a / c) * 2 / math.pi),
    ("max(0, x1)^2", lambda a, b, c: max(0.0, a) ** 2),
    ("  x1\t+\n1 ", lambda a, b, c: a + 1),
]


def test_golden_table_size():
    assert len(GOLDEN) == 50


@pytest.mark.parametrize("text,ref", GOLDEN, ids=[t for t, _ in GOLDEN])
def test_golden_values(text, ref):
    got = parse_expr(text)(np.array(X))
    want = ref(*X)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("text,ref", GOLDEN, ids=[t for t, _ in GOLDEN])
def test_printed_form_reparses_to_same_tree(text, ref):
    e = parse_expr(text)
    assert parse_expr(str(e)) == e


def test_vectorized_evaluation():
    e = parse_expr("x1^2 + sin(x2)")
    P = np.random.default_rng(0).standard_normal((2, 30))
    np.testing.assert_allclose(e(P), P[0] ** 2 + np.sin(P[1]), rtol=1e-14)


@pytest.mark.parametrize("text,offset", [
    ("x1 +", 4), ("1 $ 2", 2), ("foo(x1)", 0), ("x10", 0), ("sin x1", 0),
    ("(x1", 3), ("x1)", 2), ("min(x1)", 0), ("sin(x1, x2)", 0), ("", 0),
    ("1e999", 0), ("é + 1", 0), ("x1 + é", 5),
])
def test_error_offsets(text, offset):
    with pytest.raises(ExprError) as info:
        parse_expr(text)
    assert info.value.offset == offset


def test_byte_offsets_count_utf8():
    with pytest.raises(ExprError) as info:
        parse_expr("ééé + ?")
    assert info.value.offset == 0
    with pytest.raises(ExprError) as info:
        parse_expr("x1 + x2 ?")
    assert info.value.offset == 8


@pytest.mark.parametrize("text,x", [("1 / x1", [0.0]), ("log(x1)", [-1.0]),
                                    ("sqrt(x1)", [-4.0]), ("exp(x1)", [1e6]), ("x3", [1.0])])
def test_domain_errors(text, x):
    with pytest.raises(ExprEvalError):
        parse_expr(text)(np.array(x))


def test_nvars_and_bytes_input():
    assert parse_expr("x3 + x1").nvars == 3
    assert parse_expr("pi").nvars == 0
    assert parse_expr(b"x2 * 2")(np.array([0.0, 4.0])) == 8.0


def _tree():
    leaf = st.one_of(
        st.floats(min_value=0, max_value=1e6, allow_nan=False).map(repr),
        st.sampled_from(["x1", "x2", "x3"] + sorted(CONSTANTS)),
    )
    unary = sorted(k for k, (_, a) in FUNCTIONS.items() if a == 1)

    def extend(inner):
        return st.one_of(
            st.tuples(inner, st.sampled_from("+-*/^"), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda s: f"-{s}"),
            st.tuples(st.sampled_from(unary), inner).map(lambda t: f"{t[0]}({t[1]})"),
            st.tuples(st.sampled_from(["min", "max"]), inner, inner).map(
                lambda t: f"{t[0]}({t[1]}, {t[2]})"),
        )
    return st.recursive(leaf, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(_tree())
def test_print_parse_round_trip(text):
    e = parse_expr(text)
    s = str(e)
    assert parse_expr(s) == e
    assert str(parse_expr(s)) == s


@settings(max_examples=200, deadline=None)
@given(_tree(), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_round_trip_preserves_values(text, x):
    e = parse_expr(text)
    f = parse_expr(str(e))
    try:
        a = e(np.array(x))
    except ExprEvalError:
        with pytest.raises(ExprEvalError):
            f(np.array(x))
        return
    b = f(np.array(x))
    assert a == b or (math.isnan(a) and math.isnan(b))
