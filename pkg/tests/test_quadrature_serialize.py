import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tauberian import quadrature
from tauberian.errors import DomainError, InputError, NumericError
from tauberian.rates import ExpRate, PolyRate, Tabulated
from tauberian.serialize import dumps, load_operator, parse_list, parse_rate, parse_real


def test_integrate_polynomial_and_trig():
    val, err = quadrature.integrate(lambda t: t**3, [0.0, 2.0])
    assert val == pytest.approx(4.0, rel=1e-13)
    val, _ = quadrature.integrate(lambda t: np.cos(50 * t), [0.0, 1.0], tol=1e-12, max_panel=math.pi / 200)
    assert val == pytest.approx(math.sin(50) / 50, abs=1e-12)


def test_integrate_vector_valued_and_kinks():
    f = lambda t: np.stack([np.abs(t - 0.3), np.exp(1j * t)], axis=1)
    val, _ = quadrature.integrate(f, [0.0, 0.3, 1.0], tol=1e-12)
    assert val[0] == pytest.approx(0.045 + 0.245, abs=1e-12)
    assert val[1] == pytest.approx((np.exp(1j) - 1) / 1j, abs=1e-12)


def test_integrate_empty_interval():
    val, err = quadrature.integrate(lambda t: t, [1.0, 1.0])
    assert val == 0.0 and err == 0.0


def test_integrate_raises_on_nonconvergence():
    with pytest.raises(NumericError):
        quadrature.integrate(lambda t: np.sign(t - 0.123456789) * 1e6, [0.0, 1.0], tol=1e-30, max_rounds=5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(0.1, 3.0))
def test_integrate_polynomials_exactly(coeffs, b):
    poly = np.polynomial.Polynomial(coeffs)
    val, _ = quadrature.integrate(poly, [0.0, b], tol=1e-12)
    assert val == pytest.approx(poly.integ()(b), abs=1e-10)


def test_dumps_17_digits_and_nulls():
    text = dumps({"a": 0.1, "b": [math.inf, 1], "c": None, "d": "x", "e": True})
    obj = json.loads(text)
    assert obj == {"a": 0.1, "b": [None, 1], "c": None, "d": "x", "e": True}
    assert "0.10000000000000001" in text
    assert dumps({"a": 1.0}) == dumps({"a": 1.0})


def test_parse_real_forms():
    assert parse_real("pi") == math.pi
    assert parse_real("pi/4") == math.pi / 4
    assert parse_real("3*pi/8") == pytest.approx(3 * math.pi / 8)
    assert parse_real("-pi") == -math.pi
    assert parse_real("1e-3") == 1e-3
    assert parse_list("pi/8, pi/4,0.5") == [math.pi / 8, math.pi / 4, 0.5]
    with pytest.raises(DomainError):
        parse_real("tau")


def test_parse_rate_forms(tmp_path):
    assert parse_rate("poly:2,3") == PolyRate(2, 3)
    assert parse_rate("poly:2") == PolyRate(1, 2)
    assert parse_rate("exp:1") == ExpRate(1)
    assert parse_rate("const:2") == Tabulated.constant(2.0)
    assert parse_rate('{"variant": "exp", "alpha": 2}') == ExpRate(2)
    path = tmp_path / "rate.json"
    path.write_text(json.dumps(PolyRate(1, 2).to_dict()))
    assert parse_rate(f"@{path}") == PolyRate(1, 2)
    for bad in ("weird:1", "poly:1,2,3", "{bad json"):
        with pytest.raises(DomainError):
            parse_rate(bad)


def test_load_operator_errors(tmp_path):
    with pytest.raises(InputError):
        load_operator(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(InputError):
        load_operator(bad)
