"""Adaptive Simpson quadrature, vectorized over panels.

Integrands take a 1-D array of abscissae and return an array whose first axis
matches it; trailing axes (vector or matrix values) are integrated
componentwise.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError


def _initial_panels(breakpoints: Sequence[float], max_panel: float | None):
    edges = []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b <= a:
            continue
        count = 1 if max_panel is None else max(1, math.ceil((b - a) / max_panel))
        edges.append(np.linspace(a, b, count + 1))
    if not edges:
        return np.empty(0), np.empty(0)
    left = np.concatenate([e[:-1] for e in edges])
    right = np.concatenate([e[1:] for e in edges])
    return left, right


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    tol: float = 1e-10,
    max_panel: float | None = None,
    max_rounds: int = 60,
):
    """Integrate ``f`` over [breakpoints[0], breakpoints[-1]].

    ``breakpoints`` should contain every kink of the integrand. Panels are
    additionally capped at width ``max_panel`` (use ~ pi/(4|n|) for an
    e^{i n theta} factor). Returns ``(value, error_estimate)``.
    """
    breakpoints = [float(p) for p in breakpoints]
    a, b = _initial_panels(breakpoints, max_panel)
    length = breakpoints[-1] - breakpoints[0]
    if a.size == 0 or length <= 0:
        probe = np.asarray(f(np.array([breakpoints[0]])))
        return np.zeros(probe.shape[1:], dtype=probe.dtype)[()], 0.0

    m = 0.5 * (a + b)
    fa, fm, fb = (np.asarray(f(x)) for x in (a, m, b))
    vshape = fa.shape[1:]
    bshape = (-1,) + (1,) * len(vshape)
    total = np.zeros(vshape, dtype=np.result_type(fa, fm, fb, float))
    err_total = 0.0

    for _ in range(max_rounds):
        h = (b - a).reshape(bshape)
        flq = np.asarray(f(0.5 * (a + m)))
        frq = np.asarray(f(0.5 * (m + b)))
        whole = h / 6.0 * (fa + 4.0 * fm + fb)
        halves = h / 12.0 * (fa + 4.0 * flq + 2.0 * fm + 4.0 * frq + fb)
        diff = halves - whole
        err = np.abs(diff).reshape(len(a), -1).max(axis=1) / 15.0 if diff.size else np.zeros(len(a))
        width = b - a
        accept = (err <= tol * width / length) | (width <= 1e-14 * length)
        if np.any(accept):
            total = total + (halves[accept] + diff[accept] / 15.0).sum(axis=0)
            err_total += float(err[accept].sum())
        keep = ~accept
        if not np.any(keep):
            return total[()], err_total
        a, m, b = a[keep], m[keep], b[keep]
        fa, flq, fm, frq, fb = fa[keep], flq[keep], fm[keep], frq[keep], fb[keep]
        # children: [a, m] and [m, b]
        a, b, mid = np.concatenate([a, m]), np.concatenate([m, b]), np.concatenate([0.5 * (a + m), 0.5 * (m + b)])
        fa, fb, fm = np.concatenate([fa, fm]), np.concatenate([fm, fb]), np.concatenate([flq, frq])
        m = mid
        if a.size > 4_000_000:
            break
    raise NumericError("adaptive Simpson did not reach the requested tolerance")
