import pytest
from hypothesis import given, settings, strategies as st

from semijulia.errors import ParseError
from semijulia.parser import parse_poly
from semijulia.polyalg import MultiPoly, eval_poly


def test_grammar_example():
    p = parse_poly("(0.25)*z1 - z2^2", 2)
    assert p == MultiPoly(2, {(1, 0): 0.25, (0, 2): -1})


def test_complex_literals():
    assert parse_poly("3i", 1).constant_value() == 3j
    assert parse_poly("(1.5-2i)", 1).constant_value() == 1.5 - 2j
    assert parse_poly("i*z1", 1) == MultiPoly(1, {(1,): 1j})


def test_precedence():
    z = (2.0, 3.0)
    assert eval_poly(parse_poly("z1 + z2*z1^2", 2), z) == 2 + 3 * 4
    assert eval_poly(parse_poly("-z1^2", 2), z) == -4
    assert eval_poly(parse_poly("(z1 + z2)^2", 2), z) == 25
    assert parse_poly("  z1   *  z2 ", 2) == parse_poly("z1*z2", 2)


@pytest.mark.parametrize("text, column", [
    ("z1^^2", 4),
    ("z1 + ", 6),
    ("z3", 1),
    ("z1^-1", 4),
    ("z1 $ 2", 4),
    ("(z1", 4),
])
def test_errors_carry_position(text, column):
    with pytest.raises(ParseError) as info:
        parse_poly(text, 2)
    assert info.value.line == 1
    assert info.value.column == column


def test_multiline_position():
    with pytest.raises(ParseError) as info:
        parse_poly("z1 +\n  * z2", 2)
    assert (info.value.line, info.value.column) == (2, 3)


reals = st.floats(-5, 5, allow_nan=False).map(lambda x: round(x, 3))


@settings(max_examples=60, deadline=None)
@given(reals, reals, st.integers(0, 4), st.integers(0, 4))
def test_monomial_parse(a, b, e1, e2):
    p = parse_poly(f"({a}+{abs(b)}i)*z1^{e1}*z2^{e2}", 2)
    assert p == MultiPoly(2, {(e1, e2): complex(a, abs(b))})
