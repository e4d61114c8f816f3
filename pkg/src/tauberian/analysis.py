"""Hypothesis checks and calibrate-then-validate certification of decay.

The O(.) bounds being tested only hold up to an unknown constant, so a
certificate fits one multiplicative constant on a calibration window and
then checks d_n <= C * predicted(n) on a disjoint validation window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence as Seq, Union

import numpy as np

from . import operators as ops
from .errors import HypothesisFailure, InputError, ParameterError, PreAsymptoticError, SingularityError
from .kernels import Sequence
from .kernels import _norms as _seq_norms
from .rates import PI, RateFunction, Tabulated, derived_for, invert_log, predicted_bound

HOLDS = "holds-on-window"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"

CERTIFIED = "certified"
VIOLATED = "violated"
PRE_ASYMPTOTIC = "pre-asymptotic"

DEFAULT_C = 0.5
DEFAULT_CALIB = (50, 100)
DEFAULT_VALID = (101, 1000)
DEFAULT_SLOPE_WINDOW = (100, 1000)
GROWTH_SLOPE_LIMIT = 0.1
SCAN_THRESHOLD = 10.0
DOM_FUN_MAX_K = 5


def scan_grid(size: int = 200) -> np.ndarray:
    """Symmetric angle grid, log-refined towards 0 and towards +-pi."""
    pos = np.geomspace(1e-3, PI, size)
    near_pi = PI - np.geomspace(1e-6, 1e-1, 20)
    pos = np.unique(np.concatenate([pos, near_pi]))
    return np.concatenate([-pos[::-1], pos])


def split_flags(grid: Seq[float], flagged: Seq[float]) -> tuple[list, list]:
    """Separate flags attached to theta = 0 from isolated ones.

    On each side of 0, flags at consecutive grid points starting from the
    innermost one belong to the (permitted) singularity at 1; every other
    flag is a singularity elsewhere on the circle.
    """
    flagged_set = set(float(t) for t in flagged)
    at_one, away = [], []
    for side in (1.0, -1.0):
        pts = sorted((float(t) for t in grid if float(t) * side > 0), key=abs)
        attached = True
        for t in pts:
            if t in flagged_set:
                (at_one if attached else away).append(t)
            else:
                attached = False
    return sorted(at_one), sorted(away)


def _growth_slope(norms: np.ndarray) -> float:
    """Log-log slope of the running maximum over the last decade of indices."""
    n_max = len(norms) - 1
    lo = max(1, n_max // 10)
    run = np.maximum.accumulate(np.asarray(norms, dtype=float))[lo:]
    idx = np.arange(lo, n_max + 1)
    if not np.all(np.isfinite(run)):
        return math.inf
    if np.any(run <= 0):
        return 0.0
    return float(np.polyfit(np.log(idx), np.log(run), 1)[0])


@dataclass
class HypothesisReport:
    partial_sums_bounded: str
    partial_sums_sup: float
    partial_sums_slope: float
    power_bounded: str | None = None
    power_bound: float | None = None
    singularities: str = INCONCLUSIVE
    singularity_locations: list = field(default_factory=list)
    singularities_at_one: list = field(default_factory=list)
    dom_fun_constant: float | None = None
    window: int = 0

    def failures(self) -> list[str]:
        out = []
        if self.partial_sums_bounded == FAILS:
            out.append("partial sums unbounded")
        if self.power_bounded == FAILS:
            out.append("operator not power-bounded")
        if self.singularities == FAILS:
            locs = sorted({round(t, 4) for t in self.singularity_locations}, key=abs, reverse=True)
            shown = ", ".join(f"{t:g}" for t in locs[:4])
            out.append(f"boundary singularity away from theta=0 (flagged near theta = {shown})")
        return out

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "partial_sums_bounded": self.partial_sums_bounded,
            "partial_sums_sup": self.partial_sums_sup,
            "partial_sums_slope": self.partial_sums_slope,
            "power_bounded": self.power_bounded,
            "power_bound": self.power_bound,
            "singularities": self.singularities,
            "singularity_locations": list(self.singularity_locations),
            "dom_fun_constant": self.dom_fun_constant,
            "failures": self.failures(),
        }


def _verdict_from_slope(slope: float) -> str:
    return FAILS if slope > GROWTH_SLOPE_LIMIT else HOLDS


def _partial_sum_norms_operator(spec, window: int) -> np.ndarray:
    # s_n = I - T^{n+1}
    if ops.is_normal_model(spec):
        lam = spec.eigenvalues
        out = np.empty(window + 1)
        power = lam.copy()
        for n in range(window + 1):
            out[n] = np.max(np.abs(1.0 - power))
            power = power * lam
        return out
    t = spec.matrix()
    q = t.copy()
    eye = np.eye(spec.dim)
    out = np.empty(window + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(window + 1):
            if not np.all(np.isfinite(q)):
                out[n:] = np.inf
                break
            out[n] = ops.operator_norm(eye - q)
            q = t @ q
    return out


def dom_fun_constant(spec, envelope: RateFunction, grid: Seq[float], max_k: int = DOM_FUN_MAX_K) -> float:
    """Smallest C with ||F^{(k)}(e^{i theta})|| <= C k! |theta| m(|theta|)^{k+1} on the grid."""
    best = 0.0
    for theta in grid:
        theta = float(theta)
        if theta == 0.0:
            continue
        eps = abs(theta)
        log_m = envelope.log_value(eps)
        for k in range(max_k + 1):
            try:
                val = ops.boundary_derivative_norm(spec, k, theta)
            except SingularityError:
                return math.inf
            log_bound = math.log(math.factorial(k) * eps) + (k + 1) * log_m
            best = max(best, val / math.exp(log_bound) if log_bound < 700 else 0.0)
    return best


def check_hypotheses(x, window: int = 1000, grid=None, threshold: float = SCAN_THRESHOLD,
                     envelope: RateFunction | None = None) -> HypothesisReport:
    """Inspect a Sequence or OperatorSpec on indices 0..window.

    Verdicts are evidence on a finite window, never proofs.
    """
    if window < 100:
        raise ParameterError(f"window must contain at least 100 terms, got {window}")
    grid = scan_grid() if grid is None else np.asarray(grid, dtype=float)
    if isinstance(x, Sequence):
        s_norms = _seq_norms(x.partial_sums(window))
        slope = _growth_slope(s_norms)
        report = HypothesisReport(_verdict_from_slope(slope), float(np.max(s_norms)), slope, window=window)
        if x.transform is not None:
            flagged = []
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = x.boundary(grid)
                norms = _seq_norms(vals)
            for t, v in zip(grid, norms):
                if t != 0 and (not np.isfinite(v) or v > threshold / abs(t)):
                    flagged.append(float(t))
            at_one, away = split_flags(grid, flagged)
            report.singularity_locations, report.singularities_at_one = away, at_one
            report.singularities = FAILS if away else HOLDS
        return report

    p_norms = ops.power_norms(x, window)
    p_slope = _growth_slope(p_norms)
    s_norms = _partial_sum_norms_operator(x, window)
    s_slope = _growth_slope(s_norms)
    report = HypothesisReport(
        _verdict_from_slope(s_slope), float(np.max(s_norms)), s_slope,
        power_bounded=_verdict_from_slope(p_slope), power_bound=float(np.max(p_norms)), window=window)
    flagged = ops.singularity_scan(x, grid, threshold)
    at_one, away = split_flags(grid, flagged)
    report.singularity_locations, report.singularities_at_one = away, at_one
    report.singularities = FAILS if away else HOLDS
    if not away and report.power_bounded == HOLDS:
        if envelope is None:
            envelope = ops.resolvent_profile(x).envelope
        dom_grid = grid[np.abs(grid) >= 1e-3]
        report.dom_fun_constant = dom_fun_constant(x, envelope, dom_grid)
    return report


# ---------------------------------------------------------------- schedule, slopes

def epsilon_schedule(m: RateFunction, regime, c: float, n_list) -> list:
    """eps_n = m_k^{-1}(cn) or m_log^{-1}(cn); None where n is pre-asymptotic."""
    d = derived_for(m, regime)
    if regime == "smooth" and not 0 < c < 1:
        raise ParameterError(f"the smooth regime needs c in (0, 1), got {c!r}")
    if not c > 0:
        raise ParameterError(f"c must be positive, got {c!r}")
    out = []
    floor = d.log_value(PI)
    for n in n_list:
        log_y = math.log(c * n)
        out.append(None if log_y < floor else invert_log(d, log_y))
    return out


class SlopeFit(NamedTuple):
    exponent: float
    residual: float
    window: tuple


def slope_estimate(series, window, n_start: int = 0) -> SlopeFit:
    """Least-squares slope of log d_n against log n for n in [n1, n2]."""
    n1, n2 = int(window[0]), int(window[1])
    if n1 < 1 or n2 < 2 * n1:
        raise ParameterError(f"slope window needs 1 <= n1 and n2 >= 2 n1, got [{n1}, {n2}]")
    series = np.asarray(series, dtype=float)
    if n1 < n_start or n2 - n_start >= len(series):
        raise ParameterError(f"window [{n1}, {n2}] outside the series range")
    vals = series[n1 - n_start: n2 - n_start + 1]
    if np.any(~(vals > 0)):
        raise InputError("slope estimation needs positive values on the window")
    ln_n = np.log(np.arange(n1, n2 + 1, dtype=float))
    ln_d = np.log(vals)
    slope, intercept = np.polyfit(ln_n, ln_d, 1)
    resid = float(np.sqrt(np.mean((ln_d - (slope * ln_n + intercept)) ** 2)))
    return SlopeFit(float(slope), resid, (n1, n2))


# ---------------------------------------------------------------- certification

@dataclass
class DecayReport:
    orbit: ops.OrbitSeries
    envelope: Tabulated
    c: float
    calib_window: tuple
    valid_window: tuple
    n: np.ndarray
    schedule: np.ndarray
    predicted: np.ndarray
    fitted_C: float | None
    empirical_exponent: SlopeFit | None
    verdict: str
    hypotheses: HypothesisReport | None = None
    warnings: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def observed(self) -> np.ndarray:
        return self.orbit.values[self.n - self.orbit.n_start]

    def ratio(self) -> np.ndarray:
        """predicted / observed; grows where the bound is loose."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.predicted / self.observed

    def to_dict(self) -> dict:
        exp = self.empirical_exponent
        return {
            "verdict": self.verdict,
            "c": self.c,
            "calib_window": list(self.calib_window),
            "valid_window": list(self.valid_window),
            "fitted_C": self.fitted_C,
            "empirical_exponent": None if exp is None else
            {"exponent": exp.exponent, "residual": exp.residual, "window": list(exp.window)},
            "power_bound": self.orbit.power_bound,
            "envelope": self.envelope.to_dict(),
            "n": self.n.tolist(),
            "d_n": self.observed.tolist(),
            "schedule": [None if math.isnan(v) else v for v in self.schedule.tolist()],
            "predicted": [None if math.isnan(v) else v for v in self.predicted.tolist()],
            "orbit": self.orbit.values.tolist(),
            "hypotheses": None if self.hypotheses is None else self.hypotheses.to_dict(),
            "warnings": list(self.warnings),
            "config": dict(self.config),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "d_n", "predicted", "ratio"])
        for n, d, p, r in zip(self.n.tolist(), self.observed.tolist(), self.predicted.tolist(),
                              self.ratio().tolist()):
            writer.writerow([n, repr(float(d)), repr(float(p)), repr(float(r))])
        return buf.getvalue()


def _check_windows(calib, valid) -> tuple:
    a, b = int(calib[0]), int(calib[1])
    c, d = int(valid[0]), int(valid[1])
    if not (1 <= a <= b < c <= d):
        raise ParameterError(f"need 1 <= calib start <= calib end < valid start <= valid end, "
                             f"got calib [{a}, {b}], valid [{c}, {d}]")
    return (a, b), (c, d)


def certify_series(orbit: ops.OrbitSeries, envelope: RateFunction, c: float = DEFAULT_C,
                   calib_window=DEFAULT_CALIB, valid_window=DEFAULT_VALID,
                   slope_window=DEFAULT_SLOPE_WINDOW) -> DecayReport:
    """Fit C on the calibration window, check d_n <= C predicted(n) on the validation window."""
    if not 0 < c < 1:
        raise ParameterError(f"c must lie in (0, 1), got {c!r}")
    calib, valid = _check_windows(calib_window, valid_window)
    last = orbit.n_start + len(orbit.values) - 1
    if calib[0] < orbit.n_start or valid[1] > last:
        raise ParameterError(f"windows exceed the orbit range [{orbit.n_start}, {last}]")
    ns = np.concatenate([np.arange(calib[0], calib[1] + 1), np.arange(valid[0], valid[1] + 1)])
    schedule = np.full(len(ns), np.nan)
    predicted = np.full(len(ns), np.nan)
    pre_asymptotic = False
    for i, n in enumerate(ns):
        try:
            predicted[i] = predicted_bound(envelope, "smooth", c, int(n))
        except PreAsymptoticError:
            pre_asymptotic = True
            continue
        schedule[i] = predicted[i] - 1.0 / n
    d = orbit.values[ns - orbit.n_start]

    exponent = None
    s1, s2 = int(slope_window[0]), min(int(slope_window[1]), last)
    if s2 >= 2 * s1 and np.all(orbit.values[s1 - orbit.n_start: s2 - orbit.n_start + 1] > 0):
        exponent = slope_estimate(orbit.values, (s1, s2), orbit.n_start)

    in_calib = ns <= calib[1]
    fitted = None
    if pre_asymptotic or orbit.divergent or not np.all(np.isfinite(d)):
        verdict = PRE_ASYMPTOTIC
    else:
        fitted = float(np.max(d[in_calib] / predicted[in_calib]))
        ok = np.all(d[~in_calib] <= fitted * predicted[~in_calib] * (1.0 + 1e-12))
        verdict = CERTIFIED if ok else VIOLATED
    return DecayReport(orbit, envelope, c, calib, valid, ns, schedule, predicted, fitted,
                       exponent, verdict)


def _sequence_envelope(x: Sequence, grid) -> Tabulated:
    # j = 0 case of the derivative hypothesis: ||F(e^{i theta})|| <= C |theta| m(|theta|)
    vals = _seq_norms(x.boundary(grid))
    return ops.fit_envelope([(float(t), float(v) / abs(t)) for t, v in zip(grid, vals)])


def certify_decay(x: Union[ops.Dense, ops.Diagonal, ops.SpectralCurve, ops.ShiftTrunc, Sequence],
                  c: float = DEFAULT_C, calib_window=DEFAULT_CALIB, valid_window=DEFAULT_VALID,
                  grid=None, slope_window=DEFAULT_SLOPE_WINDOW, threshold: float = SCAN_THRESHOLD,
                  hypothesis_window: int | None = None) -> DecayReport:
    """Hypotheses, envelope, orbit and calibrate-then-validate, end to end.

    Raises HypothesisFailure naming the first failed hypothesis.
    """
    calib, valid = _check_windows(calib_window, valid_window)
    if not 0 < c < 1:
        raise ParameterError(f"c must lie in (0, 1), got {c!r}")
    window = max(100, hypothesis_window or valid[1])
    warnings = []
    if isinstance(x, Sequence):
        hyp = check_hypotheses(x, window=window, threshold=threshold)
        if hyp.failures():
            raise HypothesisFailure(hyp.failures()[0], hyp)
        if x.transform is None:
            raise HypothesisFailure("no boundary function available", hyp)
        envelope = _sequence_envelope(x, ops.default_theta_grid() if grid is None else grid)
        vals = x.norms(valid[1])
        orbit = ops.OrbitSeries(vals, float(np.max(vals)))
    else:
        profile = ops.resolvent_profile(x, grid)
        hyp = check_hypotheses(x, window=window, threshold=threshold, envelope=profile.envelope)
        if hyp.failures():
            raise HypothesisFailure(hyp.failures()[0], hyp)
        envelope = profile.envelope
        orbit = ops.orbit_decay(x, valid[1])
        if isinstance(x, ops.Diagonal) and valid[1] > x.dim / 10:
            warnings.append(f"validation window end {valid[1]} exceeds N/10 = {x.dim / 10:g}; "
                            "a finite matrix eventually decays exponentially")
    report = certify_series(orbit, envelope, c, calib, valid, slope_window)
    report.hypotheses = hyp
    report.warnings = warnings
    return report
