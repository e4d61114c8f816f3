"""Finite-dimensional operators: orbit norms, resolvent norms, envelopes.

Diagonal and SpectralCurve operators are normal, so every norm below has a
closed form in terms of the eigenvalues. Dense and ShiftTrunc go through
matrix arithmetic and the power-method spectral norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, InputError, SingularityError
from .rates import PI, Tabulated

SINGULAR_GUARD = 1e-14
_MODULUS_SLACK = 1e-12


def _as_complex_list(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind in "iuf" and arr.ndim >= 1 and arr.shape[-1] == 2 and arr.ndim == 2:
        # [[re, im], ...] pairs
        return arr[:, 0] + 1j * arr[:, 1]
    return arr.astype(complex).ravel()


@dataclass(frozen=True, eq=False)
class Dense:
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"Dense needs a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("Dense entries must be finite")
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def matrix(self) -> np.ndarray:
        return self.entries

    def to_dict(self) -> dict:
        return {"variant": "dense",
                "entries": [[[z.real, z.imag] for z in row] for row in self.entries.tolist()]}


@dataclass(frozen=True, eq=False)
class Diagonal:
    eigenvalues: np.ndarray
    allow_one: bool = False

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=complex).ravel()
        if lam.size < 1 or not np.all(np.isfinite(lam)):
            raise InputError("Diagonal needs at least one finite eigenvalue")
        if np.any(np.abs(lam) > 1.0 + _MODULUS_SLACK):
            raise DomainError("Diagonal eigenvalues must have modulus <= 1")
        if not self.allow_one and np.any(lam == 1.0):
            raise DomainError("eigenvalue 1 is excluded unless allow_one=True")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def to_dict(self) -> dict:
        out = {"variant": "diagonal", "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues.tolist()]}
        if self.allow_one:
            out["allow_one"] = True
        return out


@dataclass(frozen=True, eq=False)
class SpectralCurve:
    """Diagonal operator with eigenvalues (1 - t**alpha) e^{it}.

    t runs over ``n`` log-spaced points in [theta_min, theta_max]; the
    eigenvalues approach 1 tangentially to order alpha.
    """

    alpha: float
    n: int
    theta_min: float = 1e-4
    theta_max: float = 1.0
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise DomainError(f"SpectralCurve needs alpha >= 1, got {self.alpha!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"grid size must be a positive integer, got {self.n!r}")
        if not 0.0 < self.theta_min <= self.theta_max <= 1.0:
            raise DomainError("need 0 < theta_min <= theta_max <= 1")
        t = np.geomspace(self.theta_min, self.theta_max, int(self.n))
        object.__setattr__(self, "eigenvalues", (1.0 - t**self.alpha) * np.exp(1j * t))

    @property
    def dim(self) -> int:
        return int(self.n)

    def matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def to_dict(self) -> dict:
        return {"variant": "spectral_curve", "alpha": self.alpha, "n": int(self.n),
                "theta_min": self.theta_min, "theta_max": self.theta_max}


@dataclass(frozen=True, eq=False)
class ShiftTrunc:
    """N x N truncation of the weighted shift e_j -> w_j e_{j+1}."""

    weights: tuple
    n: int

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n!r}")
        if len(w) == 1:
            w = w * max(int(self.n) - 1, 0)
        if len(w) < int(self.n) - 1:
            raise DomainError(f"need {int(self.n) - 1} weights, got {len(w)}")
        if any(not 0.0 < x <= 1.0 for x in w):
            raise DomainError("shift weights must lie in (0, 1]")
        object.__setattr__(self, "weights", w[: max(int(self.n) - 1, 0)])

    @property
    def dim(self) -> int:
        return int(self.n)

    def matrix(self) -> np.ndarray:
        a = np.zeros((self.dim, self.dim), dtype=complex)
        idx = np.arange(self.dim - 1)
        a[idx + 1, idx] = self.weights
        return a

    def to_dict(self) -> dict:
        return {"variant": "shift", "weights": list(self.weights), "n": int(self.n)}


OperatorSpec = Union[Dense, Diagonal, SpectralCurve, ShiftTrunc]


def is_normal_model(spec: OperatorSpec) -> bool:
    return isinstance(spec, (Diagonal, SpectralCurve))


def spec_from_dict(obj: dict) -> OperatorSpec:
    try:
        variant = obj["variant"]
        if variant == "dense":
            rows = [_as_complex_list(row) for row in obj["entries"]]
            return Dense(np.array(rows))
        if variant == "diagonal":
            return Diagonal(_as_complex_list(obj["eigenvalues"]), bool(obj.get("allow_one", False)))
        if variant == "spectral_curve":
            return SpectralCurve(float(obj["alpha"]), int(obj["n"]),
                                 float(obj.get("theta_min", 1e-4)), float(obj.get("theta_max", 1.0)))
        if variant == "shift":
            return ShiftTrunc(tuple(obj["weights"]), int(obj["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (DomainError, InputError)):
            raise
        raise InputError(f"malformed operator object: {exc}") from exc
    raise InputError(f"unknown operator variant {variant!r}")


# ---------------------------------------------------------------- norms

def _top_singular(a: np.ndarray, v0=None, max_iter: int = 5000, rtol: float = 1e-14):
    """Power method on A*A. Returns (sigma, v) or (None, v) when not converged."""
    n = a.shape[1]
    if v0 is None:
        rng = np.random.default_rng(0)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        v = np.array(v0, dtype=complex)
    v /= np.linalg.norm(v)
    ah = a.conj().T
    s2_prev = -1.0
    for _ in range(max_iter):
        w = a @ v
        s2 = float(np.vdot(w, w).real)
        if s2 == 0.0:
            return None, v
        u = ah @ w
        u_norm = np.linalg.norm(u)
        if u_norm == 0.0:
            return None, v
        residual = np.linalg.norm(u - s2 * v)
        if abs(s2 - s2_prev) <= rtol * s2 and residual <= 1e-5 * s2:
            return math.sqrt(s2), u / u_norm
        s2_prev = s2
        v = u / u_norm
    return None, v


def operator_norm(a, v0=None) -> float:
    """Spectral norm (largest singular value) of a complex matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    if a.size == 0 or not np.any(a):
        return 0.0
    if a.shape == (1, 1):
        return float(abs(a[0, 0]))
    sigma, _ = _top_singular(a, v0)
    if sigma is None:
        # stagnation (clustered top singular values) or a start vector in the kernel
        return float(np.linalg.norm(a, 2))
    return sigma


def _resolvent_point(theta: float) -> complex:
    return complex(math.cos(theta), math.sin(theta))


# ---------------------------------------------------------------- orbits

@dataclass
class OrbitSeries:
    """d_n = ||T^n (I - T)|| for n = n_start .. n_start + len(values) - 1."""

    values: np.ndarray
    power_bound: float
    n_start: int = 0
    divergent: bool = False
    power_norms: np.ndarray | None = None

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_start, self.n_start + len(self.values))

    def window(self, n1: int, n2: int) -> np.ndarray:
        return self.values[n1 - self.n_start: n2 - self.n_start + 1]


def _normal_orbit(lam: np.ndarray, n_max: int) -> np.ndarray:
    mod = np.abs(lam)
    gap = np.abs(1.0 - lam)
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        out[n] = np.max(mod**n * gap)
    return out


def power_norms(spec: OperatorSpec, n_max: int) -> np.ndarray:
    """||T^n|| for n = 0..n_max."""
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    if is_normal_model(spec):
        mod = np.abs(spec.eigenvalues).max()
        return mod ** np.arange(n_max + 1, dtype=float)
    t = spec.matrix()
    q = np.eye(spec.dim, dtype=complex)
    out = np.empty(n_max + 1)
    v = None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_max + 1):
            if not np.all(np.isfinite(q)):
                out[n:] = np.inf
                break
            out[n] = operator_norm(q, v)
            q = t @ q
    return out


def power_bound(spec: OperatorSpec, n_max: int) -> float:
    """max_{0 <= n <= n_max} ||T^n||."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if is_normal_model(spec):
        return float(max(1.0, np.abs(spec.eigenvalues).max() ** n_max))
    return float(np.max(power_norms(spec, n_max)))


def orbit_decay(spec: OperatorSpec, n_max: int) -> OrbitSeries:
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if is_normal_model(spec):
        return OrbitSeries(_normal_orbit(spec.eigenvalues, n_max), power_bound(spec, n_max))
    t = spec.matrix()
    p = np.eye(spec.dim, dtype=complex) - t
    values = np.empty(n_max + 1)
    divergent = False
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_max + 1):
            if not np.all(np.isfinite(p)):
                values[n:] = np.inf
                divergent = True
                break
            values[n] = operator_norm(p)
            p = t @ p
    norms = power_norms(spec, n_max)
    return OrbitSeries(values, float(np.max(norms)), divergent=divergent or not np.all(np.isfinite(norms)),
                       power_norms=norms)


# ---------------------------------------------------------------- resolvent

def _dense_resolvent(spec: OperatorSpec, theta: float) -> np.ndarray:
    lam = _resolvent_point(theta)
    a = lam * np.eye(spec.dim) - spec.matrix()
    try:
        r = np.linalg.solve(a, np.eye(spec.dim, dtype=complex))
    except np.linalg.LinAlgError:
        raise SingularityError(theta) from None
    if not np.all(np.isfinite(r)):
        raise SingularityError(theta)
    return r


def resolvent_norm(spec: OperatorSpec, theta: float) -> float:
    """||(e^{i theta} - T)^{-1}||."""
    if is_normal_model(spec):
        dist = float(np.min(np.abs(_resolvent_point(theta) - spec.eigenvalues)))
        if dist < SINGULAR_GUARD:
            raise SingularityError(theta, dist)
        return 1.0 / dist
    norm = operator_norm(_dense_resolvent(spec, theta))
    if norm > 1.0 / SINGULAR_GUARD:
        raise SingularityError(theta, 1.0 / norm)
    return norm


def boundary_function(spec: OperatorSpec):
    """theta-array -> stacked matrices (I - T) R(e^{i theta}, T).

    Intended for small dimensions: the output has shape (len(theta), N, N).
    """
    if is_normal_model(spec):
        mu = spec.eigenvalues

        def sampler(theta):
            lam = np.exp(1j * np.atleast_1d(np.asarray(theta, dtype=float)))[:, None]
            diag = (1.0 - mu) / (lam - mu)
            out = np.zeros(diag.shape + (mu.size,), dtype=complex)
            idx = np.arange(mu.size)
            out[:, idx, idx] = diag
            return out
    else:
        t = spec.matrix()
        eye = np.eye(spec.dim, dtype=complex)

        def sampler(theta):
            lam = np.exp(1j * np.atleast_1d(np.asarray(theta, dtype=float)))
            a = lam[:, None, None] * eye - t
            return np.linalg.solve(a, np.broadcast_to(eye - t, a.shape))
    return sampler


def boundary_derivative_norm(spec: OperatorSpec, k: int, theta: float) -> float:
    """||(-1)^k k! R(l,T)^k (I + (1-l) R(l,T))|| at l = e^{i theta}."""
    if k < 0:
        raise DomainError("derivative order must be >= 0")
    lam = _resolvent_point(theta)
    fact = math.factorial(k)
    if is_normal_model(spec):
        dist = np.abs(lam - spec.eigenvalues)
        if dist.min() < SINGULAR_GUARD:
            raise SingularityError(theta, float(dist.min()))
        r = 1.0 / (lam - spec.eigenvalues)
        return float(np.max(fact * np.abs(r) ** k * np.abs(1.0 + (1.0 - lam) * r)))
    r = _dense_resolvent(spec, theta)
    f = np.linalg.matrix_power(r, k) @ (np.eye(spec.dim) + (1.0 - lam) * r)
    return fact * operator_norm(f)


def singularity_scan(spec: OperatorSpec, grid: Iterable[float], threshold: float = 10.0) -> list:
    """Grid angles where ||R(e^{i theta})|| > threshold / |theta|."""
    flagged = []
    for theta in grid:
        theta = float(theta)
        if theta == 0.0:
            continue
        try:
            norm = resolvent_norm(spec, theta)
        except SingularityError:
            flagged.append(theta)
            continue
        if norm > threshold / abs(theta):
            flagged.append(theta)
    return flagged


# ---------------------------------------------------------------- envelopes

@dataclass
class ResolventProfile:
    samples: list
    envelope: Tabulated


def fit_envelope(samples: Sequence[tuple]) -> Tabulated:
    """Running maximum of sampled norms, floored by max(1, 1/eps).

    envelope(eps_i) = max(1, 1/eps_i, max{norm : |theta| >= eps_i}).
    """
    if len(samples) == 0:
        raise InputError("fit_envelope needs at least one sample")
    best: dict = {}
    for theta, norm in samples:
        eps = abs(float(theta))
        if not 0.0 < eps <= PI:
            raise InputError(f"sample angle {theta!r} outside 0 < |theta| <= pi")
        norm = float(norm)
        if not (math.isfinite(norm) and norm >= 0.0):
            raise InputError(f"sample norm {norm!r} must be finite and non-negative")
        best[eps] = max(best.get(eps, 0.0), norm)
    eps_desc = sorted(best, reverse=True)
    values = []
    running = 0.0
    for eps in eps_desc:
        running = max(running, best[eps])
        values.append(max(1.0, 1.0 / eps, running))
    return Tabulated(tuple(eps_desc), tuple(values))


def default_theta_grid(size: int = 256, theta_min: float = 1e-4, theta_max: float = PI) -> np.ndarray:
    """Log-spaced angles in [theta_min, theta_max] mirrored to negative angles."""
    pos = np.geomspace(theta_min, theta_max, size)
    return np.concatenate([-pos[::-1], pos])


def resolvent_profile(spec: OperatorSpec, grid: Iterable[float] | None = None) -> ResolventProfile:
    grid = default_theta_grid() if grid is None else grid
    samples = [(float(t), resolvent_norm(spec, float(t))) for t in grid]
    samples.sort(key=lambda s: s[0])
    return ResolventProfile(samples, fit_envelope(samples))
