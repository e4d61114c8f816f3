"""Cutoff kernels, their Fourier coefficients, and the smoothing x -> x * y.

A cutoff psi_eps vanishes for |theta| <= eps and equals 1 for
2 eps <= |theta| <= pi. Its Fourier coefficients

    y_n = (1/2pi) int e^{i n theta} psi_eps(theta) d theta

define the smoothing x^eps = x * y, and z = delta_0 - y is the complementary
sequence belonging to phi_eps = 1 - psi_eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple

import numpy as np

from . import quadrature
from .errors import DomainError, InputError, ToleranceError
from .operators import OperatorSpec, boundary_function, is_normal_model
from .rates import PI, RateFunction, proof_budget

COEFF_QUAD_TOL = 1e-10
SPECTRAL_QUAD_TOL = 1e-8


def _panel_cap(freq: int) -> float:
    return PI / (4 * max(1, abs(int(freq))))


# ---------------------------------------------------------------- cutoffs

def _smooth_step(s):
    """C-infinity ramp h with h = 0 for s <= 0 and h = 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        g0 = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        g1 = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        return np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, g0 / (g0 + g1)))


def _default_n_coeff(eps: float) -> int:
    return math.ceil(100.0 / eps)


@dataclass(frozen=True, eq=False)
class KernelFamily:
    eps: float
    n_coeff: int | None = None
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        eps = float(self.eps)
        if not 0.0 < eps <= PI / 2:
            raise DomainError(f"eps must lie in (0, pi/2], got {eps!r}")
        n_coeff = _default_n_coeff(eps) if self.n_coeff is None else int(self.n_coeff)
        if n_coeff < 1:
            raise DomainError("n_coeff must be >= 1")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "n_coeff", n_coeff)
        object.__setattr__(self, "y", self._coefficients())

    def _coefficients(self) -> np.ndarray:
        raise NotImplementedError

    def psi(self, theta):
        raise NotImplementedError

    def phi_cut(self, theta):
        return 1.0 - self.psi(theta)

    def coeff(self, n: int) -> float:
        """y_n for |n| <= n_coeff; the table is even in n."""
        if abs(n) > self.n_coeff:
            raise DomainError(f"|n| = {abs(n)} exceeds n_coeff = {self.n_coeff}")
        return float(self.y[abs(n)])

    def zcoeff(self, n: int) -> float:
        return (1.0 if n == 0 else 0.0) - self.coeff(n)

    def two_sided(self) -> np.ndarray:
        """y_{-N} .. y_N."""
        return np.concatenate([self.y[:0:-1], self.y])

    def tail_constant(self) -> float:
        """K with sum_{|m| > N} |y_m| <= K / (eps N)."""
        raise NotImplementedError


class PiecewiseLinear(KernelFamily):
    """psi_eps = 0, |theta|/eps - 1, 1 on the three plateaus; closed-form y."""

    def _coefficients(self) -> np.ndarray:
        eps = self.eps
        n = np.arange(1, self.n_coeff + 1, dtype=float)
        y = np.empty(self.n_coeff + 1)
        y[0] = 1.0 - 3.0 * eps / (2.0 * PI)
        y[1:] = (np.cos(2 * n * eps) - np.cos(n * eps)) / (eps * PI * n**2)
        return y

    def psi(self, theta):
        a = np.abs(np.asarray(theta, dtype=float)) / self.eps
        return np.clip(a - 1.0, 0.0, 1.0)

    def tail_constant(self) -> float:
        # |y_m| <= 2 / (eps pi m^2), both signs of m
        return 4.0 / PI


class SmoothCutoff(KernelFamily):
    """psi_eps(theta) = h(|theta|/eps - 1) with the exp(-1/s) partition ramp."""

    def _coefficients(self) -> np.ndarray:
        eps = self.eps
        n = np.arange(self.n_coeff + 1)
        nf = n.astype(float)
        # z_n = (1/pi) [ int_0^eps cos(n t) dt + int_eps^{2 eps} (1 - h) cos(n t) dt ]
        flat = np.where(n == 0, eps, np.sin(nf * eps) / np.where(n == 0, 1.0, nf))

        def ramp(t):
            return (1.0 - _smooth_step(t / eps - 1.0))[:, None] * np.cos(np.outer(t, nf))

        ramp_int, _ = quadrature.integrate(ramp, [eps, 2 * eps], tol=COEFF_QUAD_TOL,
                                           max_panel=_panel_cap(self.n_coeff))
        z = (flat + ramp_int) / PI
        y = -z
        y[0] += 1.0
        return y

    def psi(self, theta):
        return _smooth_step(np.abs(np.asarray(theta, dtype=float)) / self.eps - 1.0)

    def tail_constant(self) -> float:
        # two integrations by parts: |y_m| <= (1/pi) int |phi''| / m^2
        return 2.0 * _RAMP_CURVATURE / PI


def _ramp_curvature() -> float:
    s = np.linspace(0.0, 1.0, 200_001)
    h = _smooth_step(s)
    d2 = np.gradient(np.gradient(h, s), s)
    return float(np.trapezoid(np.abs(d2), s))


_RAMP_CURVATURE = _ramp_curvature()


def psi_eval(fam: KernelFamily, theta):
    out = fam.psi(theta)
    return float(out) if np.ndim(out) == 0 else out


def coeff(fam: KernelFamily, n: int) -> float:
    return fam.coeff(n)


def quadrature_coeffs(fam: KernelFamily, ns: Iterable[int], tol: float = COEFF_QUAD_TOL) -> np.ndarray:
    """y_n by direct quadrature of psi_eps (an oracle for the tables)."""
    ns = np.asarray(list(ns), dtype=float)
    eps = fam.eps

    def integrand(t):
        return fam.psi(t)[:, None] * np.cos(np.outer(t, ns))

    val, _ = quadrature.integrate(integrand, [0.0, eps, 2 * eps, PI], tol=tol,
                                  max_panel=_panel_cap(int(np.max(np.abs(ns))) if ns.size else 1))
    return np.asarray(val) / PI


# ---------------------------------------------------------------- phi

# Taylor coefficients of the bracket in phi (odd powers t, t^3, ..., t^13).
# Below |t| = 0.5 the closed form loses ~1e-16/t^3 to cancellation, while the
# truncated series is accurate to ~1e-14 there.
_PHI_SERIES = (-5 / 8, 7 / 40, -17 / 896, 341 / 302400, -13 / 304128,
               5461 / 4843238400, -4369 / 199264665600)
_PHI_SERIES_CUT = 0.5


def phi_eval(t):
    """phi = (2/pi)((cos 2t - cos t)/t^3 + (sin 2t - sin(t)/2)/t^2), phi(0) = 0."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < _PHI_SERIES_CUT
    ts = np.where(small, 1.0, t)
    bracket = (np.cos(2 * ts) - np.cos(ts)) / ts**3 + (np.sin(2 * ts) - 0.5 * np.sin(ts)) / ts**2
    t2 = t * t
    series = np.zeros_like(t)
    for c in reversed(_PHI_SERIES):
        series = series * t2 + c
    out = (2.0 / PI) * np.where(small, series * t, bracket)
    return float(out) if out.ndim == 0 else out


class IdentityCheck(NamedTuple):
    lhs: float
    rhs: float


def z_diff_identity(fam: PiecewiseLinear, n: int) -> IdentityCheck:
    """(z_n - z_{n-1}, eps * int_{eps(n-1)}^{eps n} phi)."""
    if not isinstance(fam, PiecewiseLinear):
        raise DomainError("the phi identity holds for the piecewise-linear family only")
    lhs = fam.zcoeff(n) - fam.zcoeff(n - 1)
    eps = fam.eps
    integral, _ = quadrature.integrate(phi_eval, [eps * (n - 1), eps * n], tol=1e-13)
    return IdentityCheck(lhs, eps * float(integral))


# ---------------------------------------------------------------- sequences

def _norms(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return np.abs(values)
    if values.ndim == 2:
        return np.linalg.norm(values, axis=1)
    if values.shape[-2:] == (1, 1):
        return np.abs(values[:, 0, 0])
    return np.linalg.norm(values, ord=2, axis=(-2, -1))


class Sequence:
    """A bounded sequence x_0, x_1, ... with values in C, C^d or C^{N x N}.

    ``term`` maps an integer array of indices to stacked values. ``transform``,
    when known, is G_x(lambda) = sum x_n lambda^{-n-1} continued to the circle.
    """

    def __init__(self, term: Callable[[np.ndarray], np.ndarray], transform=None, name: str = ""):
        self.term = term
        self.transform = transform
        self.name = name
        self._cache = None

    def values(self, n_max: int) -> np.ndarray:
        if self._cache is None or len(self._cache) <= n_max:
            size = max(n_max + 1, 2 * (0 if self._cache is None else len(self._cache)))
            self._cache = np.asarray(self.term(np.arange(size)), dtype=complex)
        return self._cache[: n_max + 1]

    def partial_sums(self, n_max: int) -> np.ndarray:
        return np.cumsum(self.values(n_max), axis=0)

    def norms(self, n_max: int) -> np.ndarray:
        return _norms(self.values(n_max))

    def boundary(self, theta) -> np.ndarray:
        if self.transform is None:
            raise InputError(f"sequence {self.name!r} has no known boundary function")
        return self.transform(np.exp(1j * np.atleast_1d(np.asarray(theta, dtype=float))))

    @classmethod
    def impulse(cls) -> "Sequence":
        return cls(lambda n: (n == 0).astype(float), lambda lam: 1.0 / lam, "impulse")

    @classmethod
    def constant(cls, value: complex = 1.0) -> "Sequence":
        return cls(lambda n: np.full(n.shape, value, dtype=complex),
                   lambda lam: value / (lam - 1.0), "constant")

    @classmethod
    def alternating(cls) -> "Sequence":
        return cls(lambda n: np.where(n % 2 == 0, 1.0, -1.0), lambda lam: 1.0 / (lam + 1.0), "alternating")

    @classmethod
    def geometric(cls, mu: complex) -> "Sequence":
        """x_n = mu^n (1 - mu), the scalar orbit of T = mu."""
        mu = complex(mu)
        if abs(mu) >= 1:
            raise DomainError("geometric sequence needs |mu| < 1")
        return cls(lambda n: mu ** n.astype(float) * (1.0 - mu),
                   lambda lam: (1.0 - mu) / (lam - mu), f"geometric({mu})")

    @classmethod
    def finite(cls, values) -> "Sequence":
        vals = np.asarray(values, dtype=complex)

        def term(n):
            out = np.zeros((len(n),) + vals.shape[1:], dtype=complex)
            k = min(len(n), len(vals))
            out[:k] = vals[:k]
            return out

        def transform(lam):
            powers = lam[:, None] ** -(np.arange(len(vals)) + 1.0)
            return np.tensordot(powers, vals, axes=(1, 0))

        return cls(term, transform, "finite")

    @classmethod
    def from_operator(cls, spec: OperatorSpec) -> "Sequence":
        """x_n = T^n (I - T) as N x N matrices."""
        sampler = boundary_function(spec)

        if is_normal_model(spec):
            lam = spec.eigenvalues

            def term(n):
                diag = lam[None, :] ** n[:, None].astype(float) * (1.0 - lam)[None, :]
                out = np.zeros((len(n), lam.size, lam.size), dtype=complex)
                idx = np.arange(lam.size)
                out[:, idx, idx] = diag
                return out
        else:
            t = spec.matrix()

            def term(n):
                out = np.empty((len(n), spec.dim, spec.dim), dtype=complex)
                p = np.eye(spec.dim, dtype=complex) - t
                for i in range(len(n)):
                    out[i] = p
                    p = t @ p
                return out

        return cls(term, lambda lam: sampler(np.angle(lam)), f"orbit({type(spec).__name__})")


class Smoothed(NamedTuple):
    values: np.ndarray
    tail_bound: float


def convolve(x: Sequence, fam: KernelFamily, n_range: Iterable[int], tol: float | None = None) -> Smoothed:
    """x^eps_n = sum_{j >= 0} x_j y_{n-j}, truncated to |n - j| <= n_coeff."""
    ns = np.asarray(list(n_range), dtype=int)
    big_n = fam.n_coeff
    hi = int(ns.max()) + big_n if ns.size else 0
    vals = x.values(max(hi, 0))
    sup = float(np.max(_norms(vals))) if len(vals) else 0.0
    tail = fam.tail_constant() / (fam.eps * big_n) * sup
    if tol is not None and tail > tol:
        need = math.ceil(fam.tail_constant() * sup / (fam.eps * tol))
        raise ToleranceError(f"truncation tail {tail:.3g} exceeds tol {tol:.3g}; need n_coeff >= {need}", need)
    ys = fam.two_sided()
    out = np.zeros((len(ns),) + vals.shape[1:], dtype=complex)
    for i, n in enumerate(ns):
        j0, j1 = max(0, n - big_n), n + big_n
        if j1 < 0:
            continue
        js = np.arange(j0, j1 + 1)
        out[i] = np.tensordot(ys[n - js + big_n], vals[j0: j1 + 1], axes=(0, 0))
    return Smoothed(out, tail)


def spectral_form(F: Callable, fam: KernelFamily, n, tol: float = SPECTRAL_QUAD_TOL) -> np.ndarray:
    """(1/2pi) int_{eps <= |theta| <= pi} e^{i(n+1)theta} psi_eps(theta) F(theta) d theta.

    ``F`` maps a theta array to stacked boundary values; ``n`` may be an int
    or a sequence of ints (the result then gains a leading axis).
    """
    scalar = np.ndim(n) == 0
    ns = np.atleast_1d(np.asarray(n, dtype=int))
    freqs = (ns + 1).astype(float)

    def integrand(theta):
        vals = np.asarray(F(theta))
        if not np.all(np.isfinite(vals)):
            raise InputError("boundary function returned non-finite values")
        weight = np.exp(1j * np.outer(theta, freqs)) * fam.psi(theta)[:, None]
        return weight.reshape(weight.shape + (1,) * (vals.ndim - 1)) * vals[:, None]

    eps = fam.eps
    cap = _panel_cap(int(np.max(np.abs(freqs))))
    right, _ = quadrature.integrate(integrand, [eps, 2 * eps, PI], tol=tol / 2, max_panel=cap)
    left, _ = quadrature.integrate(integrand, [-PI, -2 * eps, -eps], tol=tol / 2, max_panel=cap)
    out = (np.asarray(left) + np.asarray(right)) / (2 * PI)
    return out[0] if scalar else out


def approximation_gap(x: Sequence, fam: KernelFamily, n_range: Iterable[int]) -> np.ndarray:
    """||x_n - x^eps_n|| over ``n_range`` (indices >= 0)."""
    ns = np.asarray(list(n_range), dtype=int)
    smoothed = convolve(x, fam, ns).values
    return _norms(x.values(int(ns.max()))[ns] - smoothed)


def reconstruct(fam: KernelFamily, theta, n_terms: int | None = None, chunk: int = 4096) -> np.ndarray:
    """Partial Fourier sum sum_{|n| <= N} y_n e^{-i n theta} of an even table."""
    n_terms = fam.n_coeff if n_terms is None else min(int(n_terms), fam.n_coeff)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    acc = np.full(theta.shape, fam.y[0])
    for start in range(1, n_terms + 1, chunk):
        n = np.arange(start, min(start + chunk, n_terms + 1))
        acc += 2.0 * np.cos(np.outer(theta, n)) @ fam.y[n]
    return acc


# ---------------------------------------------------------------- coefficient bounds

class CoefficientBounds(NamedTuple):
    A: Fraction
    B: Fraction
    C_list: list
    bounds_ok: bool


def coefficient_bounds_check(n: int, k: int) -> CoefficientBounds:
    """Exact A_{n,k}, B_{n,k}, C_{n,j} and the bounds A <= n^-k, B <= k n^-k,
    C_{n,j} <= (j+1) n^-(j+2)."""
    if not (1 <= n <= 100 and 1 <= k <= 20):
        raise DomainError("exact check supports 1 <= n <= 100 and 1 <= k <= 20")
    fn = math.factorial(n)
    a = Fraction(fn, math.factorial(n + k))
    b = Fraction(fn, math.factorial(n + k - 1)) * sum(Fraction(1, n + j) for j in range(1, k + 1))
    cs = [Fraction(fn, math.factorial(n + j + 1)) * sum(Fraction(1, n + l) for l in range(1, j + 2))
          for j in range(k - 1)]
    ok = a <= Fraction(1, n**k) and b <= Fraction(k, n**k)
    ok = ok and all(c <= Fraction(j + 1, n ** (j + 2)) for j, c in enumerate(cs))
    return CoefficientBounds(a, b, cs, ok)


def smooth_decay_budget(m: RateFunction, eps: float, n: int, c: float) -> float:
    budget = proof_budget(m, eps, n, c)
    return budget.D + budget.E


# ---------------------------------------------------------------- self test

SELFTEST_IDENTITIES = ("closed-form", "phi-identity", "reconstruction", "coeff-bounds", "duality")


def _check(max_error: float, tol: float, **extra) -> dict:
    return {"max_error": float(max_error), "tolerance": tol, "ok": bool(max_error <= tol), **extra}


def self_test(eps_list=(PI / 8, PI / 4, PI / 2), identities=None, n: int | None = None,
              k: int | None = None, recon_terms: int = 10_000) -> dict:
    """Run the kernel identities; one entry per identity with its max error."""
    identities = SELFTEST_IDENTITIES if identities is None else tuple(identities)
    unknown = set(identities) - set(SELFTEST_IDENTITIES)
    if unknown:
        raise DomainError(f"unknown identities {sorted(unknown)}")
    fams = [PiecewiseLinear(e) for e in eps_list]
    out = {}
    if "closed-form" in identities:
        err = max(float(np.max(np.abs(quadrature_coeffs(f, range(65)) - f.y[:65]))) for f in fams)
        out["closed-form"] = _check(err, 1e-8)
    if "phi-identity" in identities:
        err = max(abs(lhs - rhs) for f in fams for lhs, rhs in (z_diff_identity(f, j) for j in range(-50, 51)))
        out["phi-identity"] = _check(err, 1e-8)
    if "reconstruction" in identities:
        theta = np.linspace(-PI, PI, 1001)
        worst = 0.0
        for e in eps_list:
            f = PiecewiseLinear(e, recon_terms)
            worst = max(worst, float(np.max(np.abs(reconstruct(f, theta) - f.psi(theta)))) * e * recon_terms)
        # normalized so the tolerance 5/(eps N) becomes 5
        out["reconstruction"] = _check(worst, 5.0, terms=recon_terms, normalized_by="eps*N")
    if "coeff-bounds" in identities:
        pairs = [(n, k)] if n is not None and k is not None else \
            [(i, j) for i in range(1, 101) for j in range(1, 11)]
        failed = [p for p in pairs if not coefficient_bounds_check(*p).bounds_ok]
        out["coeff-bounds"] = {"checked": len(pairs), "failed": [list(p) for p in failed], "ok": not failed}
    if "duality" in identities:
        err = 0.0
        for e in eps_list:
            f = PiecewiseLinear(e, 4096)
            for mu in (0.5, 0.9 * np.exp(1j * PI / 3)):
                x = Sequence.geometric(mu)
                ns = list(range(0, 51))
                err = max(err, float(np.max(np.abs(convolve(x, f, ns).values - spectral_form(x.boundary, f, ns)))))
        out["duality"] = _check(err, 1e-6)
    return out
