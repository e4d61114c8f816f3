"""Rate functions m, the derived rates m_log and m_k, and their inverses.

A rate function is a continuous non-increasing map m: (0, pi] -> [1, inf).
Everything here is evaluated in log space first, because m(eps) = exp(eps**-a)
overflows double precision long before eps reaches the bisection floor.
Values that do not fit in a float are returned as ``mpmath.mpf``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import mpmath

from .errors import DomainError, NumericError, ParameterError, PreAsymptoticError, RateRangeError

PI = math.pi
EPS_FLOOR = 1e-12
MAX_BISECTIONS = 200
INVERT_RTOL = 1e-10
_LOG_SLACK = 1e-14
_LOG_FLOAT_MAX = math.log(1.7976931348623157e308) - 1e-9

Real = Union[float, "mpmath.mpf"]


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (0.0 < eps <= PI):
        raise DomainError(f"eps must lie in (0, pi], got {eps!r}")
    return eps


def _exp(log_value: float) -> Real:
    if log_value <= _LOG_FLOAT_MAX:
        return math.exp(log_value)
    return mpmath.exp(log_value)


def _log(value) -> float:
    if isinstance(value, mpmath.mpf):
        if value <= 0:
            raise RateRangeError(f"expected a positive value, got {value}")
        return float(mpmath.log(value))
    value = float(value)
    if not value > 0.0:
        raise RateRangeError(f"expected a positive value, got {value!r}")
    if math.isinf(value):
        raise RateRangeError("value is infinite")
    return math.log(value)


def _log1p_exp(a: float) -> float:
    """log(1 + e**a) without overflow."""
    if a > 35.0:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


@dataclass(frozen=True)
class PolyRate:
    """m(eps) = C * (pi/eps)**alpha."""

    C: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.C) and self.C >= 1.0):
            raise DomainError(f"PolyRate needs C >= 1 so that m(pi) >= 1, got C={self.C!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 1.0):
            raise DomainError(f"PolyRate needs alpha >= 1, got {self.alpha!r}")

    def log_value(self, eps: float) -> float:
        return math.log(self.C) + self.alpha * (math.log(PI) - math.log(eps))

    def to_dict(self) -> dict:
        return {"variant": "poly", "C": self.C, "alpha": self.alpha}


@dataclass(frozen=True)
class ExpRate:
    """m(eps) = exp(eps**-alpha)."""

    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise DomainError(f"ExpRate needs alpha > 0, got {self.alpha!r}")

    def log_value(self, eps: float) -> float:
        return eps ** (-self.alpha)

    def to_dict(self) -> dict:
        return {"variant": "exp", "alpha": self.alpha}


@dataclass(frozen=True)
class Tabulated:
    """Rate function interpolated from samples (eps_i, m_i).

    Interpolation is piecewise linear in (log eps, log m) ("loglog") or in
    (eps, m) ("linear"). Above the largest sample the value is held constant;
    below the smallest sample the first log-log segment is continued as a
    power law. The result is clamped below by 1.
    """

    eps: tuple
    values: tuple
    interp: str = "loglog"
    _log_eps: tuple = field(init=False, repr=False, compare=False)
    _log_vals: tuple = field(init=False, repr=False, compare=False)
    _tail_slope: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.interp not in ("loglog", "linear"):
            raise DomainError(f"unknown interpolation rule {self.interp!r}")
        if len(self.eps) != len(self.values) or not self.eps:
            raise DomainError("Tabulated needs equally many (>= 1) eps and values")
        pairs = sorted((float(e), float(v)) for e, v in zip(self.eps, self.values))
        for e, v in pairs:
            if not (0.0 < e <= PI):
                raise DomainError(f"sample eps {e!r} outside (0, pi]")
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"sample value {v!r} must be positive and finite")
        for (e0, v0), (e1, v1) in zip(pairs, pairs[1:]):
            if e1 == e0:
                raise DomainError(f"duplicate sample eps {e0!r}")
            if v1 > v0:
                raise DomainError(f"values must be non-increasing in eps: m({e0})={v0} < m({e1})={v1}")
        eps = tuple(e for e, _ in pairs)
        vals = tuple(v for _, v in pairs)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_log_eps", tuple(math.log(e) for e in eps))
        object.__setattr__(self, "_log_vals", tuple(math.log(v) for v in vals))
        slope = 0.0
        if len(eps) > 1:
            slope = (self._log_vals[1] - self._log_vals[0]) / (self._log_eps[1] - self._log_eps[0])
        object.__setattr__(self, "_tail_slope", min(slope, 0.0))

    @classmethod
    def constant(cls, value: float = 1.0) -> "Tabulated":
        return cls((PI,), (value,))

    @classmethod
    def from_function(cls, func, eps_grid: Sequence[float], interp: str = "loglog") -> "Tabulated":
        eps_grid = list(eps_grid)
        return cls(tuple(eps_grid), tuple(float(func(e)) for e in eps_grid), interp)

    def log_value(self, eps: float) -> float:
        le = math.log(eps)
        lx, ly = self._log_eps, self._log_vals
        if le >= lx[-1]:
            out = ly[-1]
        elif le <= lx[0]:
            out = ly[0] + self._tail_slope * (le - lx[0])
        else:
            i = bisect.bisect_right(lx, le)
            if self.interp == "loglog":
                t = (le - lx[i - 1]) / (lx[i] - lx[i - 1])
                out = ly[i - 1] + t * (ly[i] - ly[i - 1])
            else:
                e0, e1 = self.eps[i - 1], self.eps[i]
                t = (eps - e0) / (e1 - e0)
                out = math.log(self.values[i - 1] + t * (self.values[i] - self.values[i - 1]))
        return max(out, 0.0)

    def value(self, eps: float) -> float:
        """m(eps), exact at the samples and on constant extrapolated stretches."""
        if eps >= self.eps[-1]:
            return max(self.values[-1], 1.0)
        if eps <= self.eps[0] and self._tail_slope == 0.0:
            return max(self.values[0], 1.0)
        i = bisect.bisect_left(self.eps, eps)
        if self.eps[i] == eps:
            return max(self.values[i], 1.0)
        return math.exp(self.log_value(eps))

    def to_dict(self) -> dict:
        return {"variant": "tabulated", "eps": list(self.eps), "values": list(self.values),
                "interp": self.interp}


RateFunction = Union[PolyRate, ExpRate, Tabulated]


def rate_from_dict(obj: dict) -> RateFunction:
    """Inverse of ``to_dict`` for every rate variant."""
    try:
        variant = obj["variant"]
        if variant == "poly":
            return PolyRate(float(obj.get("C", 1.0)), float(obj["alpha"]))
        if variant == "exp":
            return ExpRate(float(obj["alpha"]))
        if variant == "tabulated":
            return Tabulated(tuple(obj["eps"]), tuple(obj["values"]), obj.get("interp", "loglog"))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed rate object: {exc}") from exc
    raise DomainError(f"unknown rate variant {variant!r}")


@dataclass(frozen=True)
class DerivedRate:
    """m_log (``k is None``) or m_k over a base rate function."""

    base: RateFunction
    k: int | None = None

    def __post_init__(self):
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ParameterError(f"m_k requires an integer k >= 1, got {self.k!r}")

    @property
    def kind(self) -> str:
        return "mlog" if self.k is None else f"mk{self.k}"

    def log_value(self, eps: float) -> float:
        lm = self.base.log_value(eps)
        le = math.log(eps)
        if self.k is None:
            # log(m * log(1 + m/eps))
            return lm + math.log(_log1p_exp(lm - le))
        return lm + (lm - le) / self.k


def mlog(base: RateFunction) -> DerivedRate:
    return DerivedRate(base)


def mk(base: RateFunction, k: int) -> DerivedRate:
    return DerivedRate(base, k)


def eval_rate(m: RateFunction, eps: float) -> Real:
    """m(eps); an ``mpmath.mpf`` when the value overflows a float."""
    eps = _check_eps(eps)
    if isinstance(m, Tabulated):
        return m.value(eps)
    return _exp(m.log_value(eps))


def derived_eval(d: DerivedRate, eps: float) -> Real:
    """m_log(eps) or m_k(eps), computed from the value m(eps) itself.

    Going through exp(log_value) would cost ~|log_value| ulps; here the
    error stays at a few ulps of m, in mpmath when m overflows a float.
    """
    eps = _check_eps(eps)
    m = eval_rate(d.base, eps)
    if not isinstance(m, mpmath.mpf):
        try:
            val = m * math.log1p(m / eps) if d.k is None else m * (m / eps) ** (1.0 / d.k)
        except OverflowError:
            val = math.inf
        if math.isfinite(val):
            return val
        m = mpmath.mpf(m)
    digits = 30 + len(str(int(abs(float(mpmath.log(m))))))
    with mpmath.workdps(digits):
        ratio = m / eps
        return m * mpmath.log1p(ratio) if d.k is None else m * ratio ** (mpmath.mpf(1) / d.k)


def invert_log(d: DerivedRate, log_y: float) -> float:
    """Largest eps in [EPS_FLOOR, pi] with log d(eps) >= log_y.

    Bisection at the geometric midpoint, so the bracket shrinks uniformly in
    log eps and ends on adjacent floats.
    """
    f_hi = d.log_value(PI)
    # a few ulps of slack: derived_eval(d, pi) and exp(f_hi) may differ in the last bit
    if log_y < f_hi - _LOG_SLACK * max(1.0, abs(f_hi)):
        raise RateRangeError(
            f"y = exp({log_y:.6g}) is below the attainable range, min = exp({f_hi:.6g})")
    if log_y <= f_hi:
        return PI
    lo, hi = EPS_FLOOR, PI
    if d.log_value(lo) < log_y:
        raise NumericError(f"y = exp({log_y:.6g}) is beyond the bisection bracket [{lo}, pi]")
    for _ in range(MAX_BISECTIONS):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if d.log_value(mid) >= log_y:
            lo = mid
        else:
            hi = mid
    else:
        raise NumericError(f"no convergence after {MAX_BISECTIONS} bisections")
    rel = abs(math.expm1(d.log_value(lo) - log_y))
    if rel > INVERT_RTOL and math.nextafter(lo, PI) < hi:
        raise NumericError(f"inversion stalled with relative error {rel:.3g}")
    return lo


def invert_rate(d: DerivedRate, y: Real) -> float:
    """eps with d(eps) = y; the largest such eps on flat stretches."""
    return invert_log(d, _log(y))


def derived_for(m: RateFunction, regime) -> DerivedRate:
    """``regime`` is ``"smooth"`` (m_log) or a smoothness order k >= 1 (m_k)."""
    if regime == "smooth":
        return DerivedRate(m)
    if isinstance(regime, str) and regime.startswith("ck"):
        regime = int(regime[2:])
    if isinstance(regime, bool) or not isinstance(regime, int):
        raise ParameterError(f"regime must be 'smooth' or an integer k >= 1, got {regime!r}")
    return DerivedRate(m, regime)


def _check_c(regime, c: float) -> None:
    if regime == "smooth":
        if not 0.0 < c < 1.0:
            raise ParameterError(f"the smooth regime needs c in (0, 1), got {c!r}")
    elif not c > 0.0:
        raise ParameterError(f"c must be positive, got {c!r}")


def predicted_bound(m: RateFunction, regime, c: float, n: float) -> float:
    """m_k^{-1}(cn) for regime k, or m_log^{-1}(cn) + 1/n for "smooth".

    Raises PreAsymptoticError while cn is below the derived rate at eps = pi.
    """
    d = derived_for(m, regime)
    _check_c(regime, c)
    if not n > 0:
        raise ParameterError(f"n must be positive, got {n!r}")
    try:
        eps = invert_log(d, math.log(c * n))
    except RateRangeError as exc:
        raise PreAsymptoticError(f"n={n}: not yet in the asymptotic regime ({exc})") from exc
    return eps + 1.0 / n if regime == "smooth" else eps


class ProofBudget(NamedTuple):
    k_opt: int
    D: float
    E: float


def proof_budget(m: RateFunction, eps: float, n: int, c: float) -> ProofBudget:
    """k = floor(cn/m(eps)), D = m exp(-cn/m), E = m/n**2."""
    if not 0.0 < c < 1.0:
        raise ParameterError(f"c must lie in (0, 1), got {c!r}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n!r}")
    mv = float(eval_rate(m, eps))
    ratio = c * n / mv
    return ProofBudget(math.floor(ratio), mv * math.exp(-ratio), mv / n**2)
