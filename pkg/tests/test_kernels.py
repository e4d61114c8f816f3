import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tauberian import kernels as kn
from tauberian import operators as ops
from tauberian.errors import DomainError, InputError, ToleranceError

PI = math.pi


def test_psi_values():
    fam = kn.PiecewiseLinear(PI / 4)
    assert kn.psi_eval(fam, 0.0) == 0.0
    assert kn.psi_eval(fam, 3 * PI / 8) == pytest.approx(0.5)
    assert kn.psi_eval(fam, PI) == 1.0
    assert kn.psi_eval(fam, -3 * PI / 8) == pytest.approx(0.5)
    smooth = kn.SmoothCutoff(PI / 4, 64)
    assert kn.psi_eval(smooth, 0.1) == 0.0
    assert kn.psi_eval(smooth, 3 * PI / 8) == pytest.approx(0.5)
    assert kn.psi_eval(smooth, PI / 2) == 1.0


def test_closed_form_spot_values():
    fam = kn.PiecewiseLinear(PI / 2)
    assert fam.coeff(0) == pytest.approx(0.25, abs=1e-12)
    assert fam.coeff(1) == pytest.approx(-2 / PI**2, abs=1e-12)
    assert fam.coeff(2) == pytest.approx(1 / PI**2, abs=1e-12)
    assert fam.coeff(-1) == fam.coeff(1)
    with pytest.raises(DomainError):
        fam.coeff(fam.n_coeff + 1)


def test_closed_form_against_scipy():
    for eps in (PI / 8, PI / 4, PI / 2):
        fam = kn.PiecewiseLinear(eps)
        for n in (0, 1, 5, 17, 64):
            ref = integrate.quad(lambda t: fam.psi(t) * math.cos(n * t), 0, PI,
                                 points=[eps, 2 * eps], limit=500, epsabs=1e-13)[0] / PI
            assert fam.coeff(n) == pytest.approx(ref, abs=1e-11)


def test_smooth_coefficients_against_scipy():
    fam = kn.SmoothCutoff(PI / 4, 40)
    for n in (0, 3, 40):
        ref = integrate.quad(lambda t: float(fam.psi(t)) * math.cos(n * t), 0, PI,
                             points=[PI / 4, PI / 2], limit=500, epsabs=1e-13)[0] / PI
        assert fam.coeff(n) == pytest.approx(ref, abs=1e-9)


def test_smooth_coefficients_decay_fast():
    fam = kn.SmoothCutoff(PI / 4, 400)
    n = np.arange(50, 401)
    assert np.all(np.abs(fam.y[50:]) * n**2 <= fam.tail_constant() / (2 * fam.eps) + 1e-12)


def test_eps_domain():
    with pytest.raises(DomainError):
        kn.PiecewiseLinear(2.0)
    with pytest.raises(DomainError):
        kn.PiecewiseLinear(0.0)
    assert kn.PiecewiseLinear(0.5).n_coeff == 200


def test_phi_values():
    assert kn.phi_eval(0.0) == 0.0
    assert kn.phi_eval(PI) == pytest.approx(4 / PI**4, rel=1e-13)
    # G' for G(t) = (cos t - cos 2t)/(pi t^2), evaluated by a central difference
    g = lambda t: (math.cos(t) - math.cos(2 * t)) / (PI * t * t)
    for t in (0.7, 1.3, 5.0, -2.2):
        fd = (g(t + 1e-5) - g(t - 1e-5)) / 2e-5
        assert kn.phi_eval(t) == pytest.approx(fd, rel=1e-7)


def test_phi_series_is_continuous_at_cut():
    cut = 0.5
    lo = kn.phi_eval(np.nextafter(cut, 0.0))
    hi = kn.phi_eval(cut)
    assert abs(lo - hi) < 1e-14


def test_phi_series_against_mpmath():
    import mpmath
    mpmath.mp.dps = 40
    for t in (1e-3, 0.05, 0.2, 0.49):
        tt = mpmath.mpf(t)
        ref = 2 / mpmath.pi * ((mpmath.cos(2 * tt) - mpmath.cos(tt)) / tt**3
                               + (mpmath.sin(2 * tt) - mpmath.sin(tt) / 2) / tt**2)
        assert kn.phi_eval(t) == pytest.approx(float(ref), rel=1e-12, abs=1e-16)


def test_z_diff_identity_examples():
    fam = kn.PiecewiseLinear(PI / 4)
    for n in (-50, -3, 0, 1, 2, 50):
        lhs, rhs = kn.z_diff_identity(fam, n)
        assert abs(lhs - rhs) <= 1e-12
    with pytest.raises(DomainError):
        kn.z_diff_identity(kn.SmoothCutoff(PI / 4, 8), 1)


def test_reconstruction_small():
    fam = kn.PiecewiseLinear(PI / 2, 2000)
    theta = np.linspace(-PI, PI, 201)
    err = np.max(np.abs(kn.reconstruct(fam, theta) - fam.psi(theta)))
    assert err <= 5 / (fam.eps * 2000)


def test_convolve_examples():
    fam = kn.PiecewiseLinear(PI / 4, 256)
    out = kn.convolve(kn.Sequence.impulse(), fam, [0, 1, 2])
    assert out.values == pytest.approx([fam.coeff(0), fam.coeff(1), fam.coeff(2)], abs=1e-15)
    with pytest.raises(ToleranceError) as info:
        kn.convolve(kn.Sequence.constant(), fam, [0], tol=1e-9)
    assert info.value.required_n_coeff > 256


def test_convolve_brute_force():
    fam = kn.PiecewiseLinear(PI / 8, 80)
    x = kn.Sequence.geometric(0.7 + 0.1j)
    xs = x.values(200)
    for n in (0, 5, 60):
        ref = sum(xs[j] * fam.coeff(n - j) for j in range(0, n + 81) if abs(n - j) <= 80)
        assert kn.convolve(x, fam, [n]).values[0] == pytest.approx(ref, abs=1e-14)


def test_duality_small():
    fam = kn.PiecewiseLinear(PI / 4, 4096)
    x = kn.Sequence.geometric(0.5)
    ns = [0, 7, 30]
    assert np.max(np.abs(kn.convolve(x, fam, ns).values - kn.spectral_form(x.boundary, fam, ns))) <= 1e-8


def test_duality_matrix_valued():
    spec = ops.Diagonal([0.5, 0.3j])
    x = kn.Sequence.from_operator(spec)
    fam = kn.PiecewiseLinear(PI / 4, 2048)
    conv = kn.convolve(x, fam, [3]).values[0]
    spec_form = kn.spectral_form(x.boundary, fam, 3)
    assert conv.shape == (2, 2)
    assert np.max(np.abs(conv - spec_form)) <= 1e-7


def test_spectral_form_rejects_non_finite():
    fam = kn.PiecewiseLinear(PI / 4, 16)
    with pytest.raises(InputError):
        kn.spectral_form(lambda t: np.full(t.shape, np.nan), fam, 0)


def test_boundary_needs_transform():
    with pytest.raises(InputError):
        kn.Sequence(lambda n: n * 0.0).boundary([0.5])


def test_sequence_from_dense_operator_matches_brute_force():
    spec = ops.ShiftTrunc((0.5,), 3)
    vals = kn.Sequence.from_operator(spec).values(4)
    t = spec.matrix()
    for n in range(5):
        assert np.allclose(vals[n], np.linalg.matrix_power(t, n) @ (np.eye(3) - t))


def test_coefficient_bounds_examples():
    r = kn.coefficient_bounds_check(1, 1)
    assert (r.A, r.B, r.C_list, r.bounds_ok) == (Fraction(1, 2), Fraction(1, 2), [], True)
    r = kn.coefficient_bounds_check(2, 3)
    assert r.A == Fraction(2, 120)
    assert r.bounds_ok
    with pytest.raises(DomainError):
        kn.coefficient_bounds_check(101, 1)


def test_coefficient_bounds_brute_force_products():
    # A_{n,k} = n!/(n+k)! = prod_{j=1..k} 1/(n+j)
    for n in (1, 4, 30):
        for k in (1, 2, 6):
            prod = Fraction(1)
            for j in range(1, k + 1):
                prod /= n + j
            assert kn.coefficient_bounds_check(n, k).A == prod


def test_self_test_fast_identities():
    out = kn.self_test((PI / 4,), ("closed-form", "coeff-bounds"), n=5, k=3)
    assert out["closed-form"]["ok"] and out["coeff-bounds"]["ok"]
    with pytest.raises(DomainError):
        kn.self_test((PI / 4,), ("nope",))


def test_smooth_decay_budget():
    from tauberian.rates import Tabulated
    assert kn.smooth_decay_budget(Tabulated.constant(10.0), 1.0, 100, 0.5) == pytest.approx(
        10 * math.exp(-5) + 1e-3, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, PI / 2), st.integers(1, 200))
def test_z_difference_decays_like_one_over_n_squared(eps, n):
    fam = kn.PiecewiseLinear(eps, 201)
    diff = abs(fam.zcoeff(n) - fam.zcoeff(n - 1))
    # mean-value bound and the 1/n^2 coefficient decay
    sup_phi = float(np.max(np.abs(kn.phi_eval(np.linspace(-60, 60, 20001)))))
    assert diff <= eps**2 * sup_phi + 1e-15
    assert diff <= 8.0 / (PI * eps * n * n) + 1e-15


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, PI / 2))
def test_kernel_sums(eps):
    fam = kn.PiecewiseLinear(eps, 20000)
    # sum_n y_n = psi(0) = 0 and the alternating sum is psi(pi) = 1, up to the truncation tail
    tail = fam.tail_constant() / (eps * fam.n_coeff)
    two = fam.two_sided()
    assert abs(two.sum()) <= tail
    signs = np.where(np.arange(-fam.n_coeff, fam.n_coeff + 1) % 2 == 0, 1.0, -1.0)
    assert abs((signs * two).sum() - 1.0) <= tail
