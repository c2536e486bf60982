import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cumord.errors import InputError
from cumord.expr import ParseError, compile_expression

X = np.arange(-4, 6, dtype=float)


class TestGrammar:
    @pytest.mark.parametrize(
        "text, fn",
        [
            ("x^2", lambda x: x**2),
            ("2*x + 3", lambda x: 2 * x + 3),
            ("-x^2", lambda x: -(x**2)),
            ("2^3^2", lambda x: 2.0 ** 9 + 0 * x),
            ("(x - 1) * (x + 1)", lambda x: x * x - 1),
            ("abs(x - 2)", lambda x: np.abs(x - 2)),
            ("exp(x / 4)", lambda x: np.exp(x / 4)),
            ("max(x - 2, 0)", lambda x: np.maximum(x - 2, 0)),
            ("min(x, 1, 2)", lambda x: np.minimum(x, 1)),
            ("sqrt(x * x)", lambda x: np.abs(x)),
            ("1.5e1 - .5", lambda x: 14.5 + 0 * x),
            ("x/2/2", lambda x: x / 4),
            ("3 - 2 - 1", lambda x: 0 * x),
        ],
    )
    def test_evaluates(self, text, fn):
        np.testing.assert_allclose(compile_expression(text)(X), fn(X))

    def test_scalar_input(self):
        assert float(compile_expression("x + 1")(2)) == 3.0


class TestErrors:
    def test_position_and_expected(self):
        with pytest.raises(ParseError) as e:
            compile_expression("max(x-2, )")
        assert e.value.pos == 9
        assert "number" in e.value.expected and "x" in e.value.expected

    def test_unknown_name(self):
        with pytest.raises(ParseError) as e:
            compile_expression("y + 1")
        assert e.value.pos == 0

    def test_trailing_garbage(self):
        with pytest.raises(ParseError) as e:
            compile_expression("x 2")
        assert e.value.pos == 2

    def test_bad_character(self):
        with pytest.raises(ParseError):
            compile_expression("x $ 2")

    def test_arity(self):
        with pytest.raises(InputError):
            compile_expression("exp(x, 2)")
        with pytest.raises(InputError):
            compile_expression("max(x)")

    def test_unbalanced(self):
        with pytest.raises(ParseError):
            compile_expression("(x + 1")


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=5))
    def test_polynomial_text_matches_numpy(self, coeffs):
        text = " + ".join(f"({c})*x^{i}" for i, c in enumerate(coeffs))
        want = np.polynomial.polynomial.polyval(X, coeffs)
        np.testing.assert_allclose(compile_expression(text)(X), want)
