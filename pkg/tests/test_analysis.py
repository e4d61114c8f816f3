import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tauberian import analysis as an
from tauberian import operators as ops
from tauberian.errors import HypothesisFailure, ParameterError
from tauberian.kernels import Sequence
from tauberian.rates import PolyRate, Tabulated, invert_rate, mlog

PI = math.pi


def test_split_flags():
    grid = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]
    assert an.split_flags(grid, [1.0, 2.0, -1.0]) == ([-1.0, 1.0, 2.0], [])
    assert an.split_flags(grid, [1.0, 3.0]) == ([1.0], [3.0])
    assert an.split_flags(grid, [-3.0]) == ([], [-3.0])


def test_scan_grid_refines_near_pi():
    g = an.scan_grid()
    assert np.all(np.diff(g) > 0)
    assert np.max(g) == pytest.approx(PI)
    assert PI - np.max(g[g < PI]) < 1e-5


def test_slope_estimate_on_power_laws():
    n = np.arange(0, 1001, dtype=float)
    with np.errstate(divide="ignore"):
        series = 3.0 * n**-0.7
    fit = an.slope_estimate(series, (100, 1000))
    assert fit.exponent == pytest.approx(-0.7, abs=1e-12)
    assert fit.residual < 1e-12
    with pytest.raises(ParameterError):
        an.slope_estimate(series, (100, 150))


def test_epsilon_schedule():
    m = Tabulated.constant(10.0)
    out = an.epsilon_schedule(m, "smooth", 0.5, [1, 200])
    assert out[0] is None
    assert out[1] == pytest.approx(invert_rate(mlog(m), 100.0), rel=1e-12)
    with pytest.raises(ParameterError):
        an.epsilon_schedule(m, "smooth", 1.5, [10])


def test_certify_series_synthetic():
    env = Tabulated.from_function(lambda e: max(1.0, 1 / e), [PI * 2.0**-j for j in range(40)])
    n = np.arange(0, 1001, dtype=float)
    good = ops.OrbitSeries(np.where(n > 0, 1.0 / np.maximum(n, 1), 1.0), 1.0)
    rep = an.certify_series(good, env)
    assert rep.verdict == an.CERTIFIED
    assert rep.fitted_C > 0
    # calibrated on [50, 100], a late bump breaks the bound
    bad_vals = good.values.copy()
    bad_vals[900] = 1.0
    rep = an.certify_series(ops.OrbitSeries(bad_vals, 1.0), env)
    assert rep.verdict == an.VIOLATED
    # an envelope so large that c n stays below the derived rate at pi
    huge = Tabulated.constant(1e6)
    assert an.certify_series(good, huge).verdict == an.PRE_ASYMPTOTIC


def test_certify_series_window_checks():
    orbit = ops.OrbitSeries(np.ones(200), 1.0)
    with pytest.raises(ParameterError):
        an.certify_series(orbit, PolyRate(1, 1), calib_window=(50, 100), valid_window=(90, 150))
    with pytest.raises(ParameterError):
        an.certify_series(orbit, PolyRate(1, 1), valid_window=(101, 1000))


def test_hypotheses_on_operators():
    rep = an.check_hypotheses(ops.Diagonal([0.5]), window=200)
    assert rep.failures() == []
    assert rep.dom_fun_constant is not None and math.isfinite(rep.dom_fun_constant)
    jordan = ops.Dense([[1.0, 1.0], [0.0, 1.0]])
    assert "operator not power-bounded" in an.check_hypotheses(jordan, window=200).failures()
    rep = an.check_hypotheses(ops.Diagonal([-0.999999]), window=200)
    assert rep.singularities == an.FAILS
    assert any(abs(abs(t) - PI) < 1e-2 for t in rep.singularity_locations)


def test_hypotheses_on_sequences():
    assert an.check_hypotheses(Sequence.constant(), window=500).failures() == ["partial sums unbounded"]
    rep = an.check_hypotheses(Sequence.alternating(), window=500)
    assert rep.partial_sums_bounded == an.HOLDS
    assert rep.failures()[0].startswith("boundary singularity away from theta=0")
    rep = an.check_hypotheses(Sequence.geometric(0.5), window=500)
    assert rep.failures() == []


def test_certify_decay_small_operator():
    rep = an.certify_decay(ops.Diagonal(1.0 - np.arange(1, 2001) / 2000), valid_window=(101, 200),
                           slope_window=(20, 200))
    assert rep.verdict == an.CERTIFIED
    assert rep.empirical_exponent.exponent == pytest.approx(-1.0, abs=0.05)
    assert rep.to_dict()["verdict"] == an.CERTIFIED
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,d_n,predicted,ratio"
    assert len(lines) == 1 + 51 + 100


def test_certify_decay_warns_past_n_over_ten():
    rep = an.certify_decay(ops.Diagonal(1.0 - np.arange(1, 501) / 500), valid_window=(101, 200),
                           slope_window=(20, 200))
    assert any("N/10" in w for w in rep.warnings)


def test_certify_decay_refuses_controls():
    with pytest.raises(HypothesisFailure, match="partial sums unbounded"):
        an.certify_decay(Sequence.constant())
    with pytest.raises(HypothesisFailure, match="boundary singularity"):
        an.certify_decay(Sequence.alternating())
    with pytest.raises(HypothesisFailure) as info:
        an.certify_decay(ops.Dense([[1.0, 1.0], [0.0, 1.0]]), valid_window=(101, 200))
    assert "operator not power-bounded" in info.value.report.failures()


def test_certify_decay_sequence():
    rep = an.certify_decay(Sequence.geometric(0.9), valid_window=(101, 300))
    assert rep.verdict in (an.CERTIFIED, an.PRE_ASYMPTOTIC)
    assert rep.hypotheses.failures() == []


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-1.5, -0.2))
def test_certificate_is_scale_invariant(scale, power):
    env = Tabulated.from_function(lambda e: max(1.0, 1 / e), [PI * 2.0**-j for j in range(40)])
    n = np.arange(0, 1001, dtype=float)
    vals = np.maximum(n, 1.0) ** power
    a = an.certify_series(ops.OrbitSeries(vals, 1.0), env)
    b = an.certify_series(ops.OrbitSeries(scale * vals, 1.0), env)
    assert a.verdict == b.verdict
    assert b.fitted_C == pytest.approx(scale * a.fitted_C, rel=1e-12)
    assert b.empirical_exponent.exponent == pytest.approx(a.empirical_exponent.exponent, abs=1e-9)
