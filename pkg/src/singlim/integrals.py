"""Discretized stochastic integrals on sampled paths.

The adapted factor u is always evaluated at left endpoints (the Ito
convention), which makes the divergence correction exact for the step
approximation of the integrand: on each cell the contribution is

    phi_i [ u(t_i) dB_i - <D u(t_i), 1_{(t_i, t_{i+1}]}> ]

so the Wick-corrected sum is the true divergence of an approximating
step process and is exactly centered for every hurst.

The deterministic kernel phi is not constrained by adaptedness, and
left-endpoint evaluation of a kernel concentrating on a 1/n scale would
bias every second moment by O(n/N).  Kernels are therefore evaluated at
cell midpoints: callables are called at the midpoints, node arrays are
averaged over adjacent nodes, and per-cell arrays are used as given.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, UnsupportedOrderError, UsageError
from .fbm import FbmPath, covariance_rh

__all__ = [
    "IntegrandSpec",
    "IntegralSample",
    "MollifierSpec",
    "MOLLIFIERS",
    "ito_forward_sum",
    "skorohod_wick_sum",
    "iterated_ito_sum",
    "second_chaos_hermite",
    "stochastic_convolution",
    "trace_increments",
    "samples_to_csv",
]

MAX_ITERATED_ORDER = 4

# Path-dependent Skorohod discretizations are only trusted above this
# roughness; the scaled-monomial limit itself needs hurst > 1/4.
ROUGH_HURST_FLOOR = 0.25


@dataclass(frozen=True)
class IntegrandSpec:
    """Enumerated integrand family with analytic derivative structure.

    kind "deterministic": u_t = g(t), derivative zero.
    kind "path-linear":   u_t = B_t, derivative D_s u_t = 1_{[0,t]}(s).
    kind "smooth-of-path": u_t = f(B_t) with f a polynomial given by
        ascending coefficients; D_s u_t = f'(B_t) 1_{[0,t]}(s) with f' the
        exact formal derivative.
    kind "two-param":     u_{s,t}, either constant 1 ("const") or the path
        at the first argument ("path-first"), adapted by construction.
    kind "m-param":       same two forms for m time arguments.
    """

    kind: str
    g: Optional[object] = None
    coeffs: Optional[tuple] = None
    form: str = "const"

    def __post_init__(self):
        if self.kind == "deterministic":
            if self.g is None:
                raise UsageError("deterministic integrand needs g")
        elif self.kind == "smooth-of-path":
            if not self.coeffs:
                raise UsageError("smooth-of-path integrand needs polynomial coefficients")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        elif self.kind in ("two-param", "m-param"):
            if self.form not in ("const", "path-first"):
                raise UsageError(f"unknown multi-parameter form {self.form!r}")
        elif self.kind != "path-linear":
            raise UsageError(f"unknown integrand kind {self.kind!r}")

    @property
    def derivative_coeffs(self):
        c = self.coeffs
        return tuple(c[k] * k for k in range(1, len(c)))

    @property
    def is_path_dependent(self):
        return self.kind in ("path-linear", "smooth-of-path") or (
            self.kind in ("two-param", "m-param") and self.form == "path-first"
        )

    def values_at_nodes(self, path):
        """u(t_i) at the left nodes t_0 .. t_{N-1} for one-parameter kinds."""
        t = path.grid.times[:-1]
        b = path.values[:-1]
        if self.kind == "deterministic":
            g = self.g
            return np.asarray(g(t) if callable(g) else np.asarray(g, dtype=float)[:-1],
                              dtype=float)
        if self.kind == "path-linear":
            return b.copy()
        if self.kind == "smooth-of-path":
            return np.polynomial.polynomial.polyval(b, self.coeffs)
        raise UsageError(f"{self.kind} integrand has no single-time values")

    def derivative_at_nodes(self, path):
        """f'(B_{t_i}): the factor multiplying the covariance trace."""
        b = path.values[:-1]
        if self.kind == "deterministic":
            return np.zeros_like(b)
        if self.kind == "path-linear":
            return np.ones_like(b)
        if self.kind == "smooth-of-path":
            d = self.derivative_coeffs
            if not d:
                return np.zeros_like(b)
            return np.polynomial.polynomial.polyval(b, d)
        raise UsageError(f"{self.kind} integrand has no single-time derivative")


@dataclass(frozen=True)
class IntegralSample:
    """One integral value with its optional forward/trace decomposition."""

    value: float
    path_id: int = 0
    n: int = 0
    forward: Optional[float] = None
    trace: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise DomainError("integral value must be finite")
        if self.forward is not None and self.trace is not None:
            if abs((self.forward + self.trace) - self.value) > 1e-12 * max(1.0, abs(self.value)):
                raise DomainError("components must sum to the value")


def _phi_cells(phi, grid):
    """One kernel value per cell: the midpoint convention."""
    if callable(phi):
        return np.asarray(phi(grid.midpoints), dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.size == grid.n_cells + 1:
        return 0.5 * (phi[:-1] + phi[1:])
    if phi.size == grid.n_cells:
        return phi
    raise UsageError("phi must supply one value per node or per cell")


def ito_forward_sum(path, u, phi, path_id=0, n=0):
    """Forward Ito sum sum_i phi_i u(t_i) (B_{t_{i+1}} - B_{t_i}).

    Standard Brownian motion only; rougher or smoother paths go through
    the Wick-corrected sum.
    """
    if path.hurst != 0.5:
        raise UsageError("forward Ito sums require hurst = 1/2; use skorohod_wick_sum")
    if u.kind in ("two-param", "m-param"):
        raise UsageError("multi-parameter integrands go through iterated_ito_sum")
    w = _phi_cells(phi, path.grid)
    value = float(np.sum(w * u.values_at_nodes(path) * path.increments))
    return IntegralSample(value, path_id, n, forward=value, trace=0.0)


def trace_increments(hurst, grid):
    """Covariance trace per cell: <1_{[0,t_i]}, 1_{(t_i,t_{i+1}]}>
    = R(t_i, t_{i+1}) - R(t_i, t_i).  Zero exactly when hurst = 1/2."""
    t = grid.times
    return covariance_rh(hurst, t[:-1], t[1:]) - covariance_rh(hurst, t[:-1], t[:-1])


def skorohod_wick_sum(path, u, phi, path_id=0, n=0, _trace=None):
    """Wick-corrected left-point sum: the divergence of the step integrand.

    Each cell contributes phi_i [u(t_i) dB_i - f'(B_{t_i}) tr_i] with
    tr_i the covariance trace of the cell, so the sample is exactly
    centered.  Exposes the forward and correction components.
    """
    if u.kind in ("two-param", "m-param"):
        raise UsageError("multi-parameter integrands go through iterated_ito_sum")
    if u.is_path_dependent and path.hurst <= ROUGH_HURST_FLOOR:
        warnings.warn(
            f"hurst={path.hurst} is at or below {ROUGH_HURST_FLOOR}; the "
            "Wick-corrected sum for path-dependent integrands is outside "
            "the supported regime",
            stacklevel=2,
        )
    w = _phi_cells(phi, path.grid)
    tr = trace_increments(path.hurst, path.grid) if _trace is None else _trace
    forward = float(np.sum(w * u.values_at_nodes(path) * path.increments))
    trace = float(-np.sum(w * u.derivative_at_nodes(path) * tr))
    return IntegralSample(forward + trace, path_id, n, forward=forward, trace=trace)


def _multi_u_inner(path, u):
    """u evaluated at the innermost (earliest) time of the simplex."""
    b = path.values[:-1]
    if u.form == "const":
        return np.ones_like(b)
    return b.copy()


def iterated_ito_sum(path, u, phi, m, path_id=0, n=0):
    """Iterated forward sum over the strict simplex i_1 < ... < i_m.

    Computed in O(N m) with running prefix accumulations: the innermost
    level carries u (measurable at the earliest time), every further level
    multiplies by phi dB of strictly later cells.
    """
    if path.hurst != 0.5:
        raise UsageError("iterated sums require hurst = 1/2")
    if m < 1 or m > MAX_ITERATED_ORDER:
        raise UnsupportedOrderError(f"iterated order must be in 1..{MAX_ITERATED_ORDER}")
    if u.kind not in ("two-param", "m-param"):
        raise UsageError("iterated sums take two-/m-parameter integrands")
    w = _phi_cells(phi, path.grid) * path.increments
    level = w * _multi_u_inner(path, u)
    for _ in range(m - 1):
        prefix = np.concatenate([[0.0], np.cumsum(level)[:-1]])
        level = w * prefix
    return IntegralSample(float(np.sum(level)), path_id, n)


def second_chaos_hermite(path, phi, window=(0.0, 1.0), norm="time"):
    """Second-chaos value (1/2) q H_2(S / sqrt(q)) = (S^2 - q) / 2 on a window.

    S is the discrete Wiener integral of phi over cells whose left node
    falls in the window.  norm "time" takes q = sum phi_i^2 dt_i, the
    deterministic discrete squared norm; norm "quadratic" takes
    q = sum phi_i^2 (dB_i)^2, which makes the value identical, path by
    path, to the iterated sum of order two with unit integrand.
    """
    if path.hurst != 0.5:
        raise UsageError("the second-chaos form requires hurst = 1/2")
    lo, hi = window
    w = _phi_cells(phi, path.grid)
    mask = (path.grid.times[:-1] >= lo) & (path.grid.times[:-1] < hi)
    w = np.where(mask, w, 0.0)
    if norm == "time":
        q = float(np.sum(w ** 2 * path.grid.dt))
    elif norm == "quadratic":
        q = float(np.sum(w ** 2 * path.increments ** 2))
    else:
        raise UsageError(f"unknown norm convention {norm!r}")
    if q <= 0.0:
        raise DomainError("phi vanishes on the window: zero discrete norm")
    s = float(np.sum(w * path.increments))
    return 0.5 * (s * s - q)


# ---------------------------------------------------------------------------
# Stochastic convolutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierSpec:
    """A bounded continuous profile with unit squared mass.

    The squared profile acts as an approximation of the identity after the
    scaling psi_n(x) = sqrt(n) psi(n x).  Registration checks the squared
    mass numerically and rejects anything off by more than 1e-6.
    """

    name: str
    profile: object
    support: float  # squared mass outside [-support, support] is negligible

    def __post_init__(self):
        x = np.linspace(-self.support, self.support, 200001)
        mass = float(np.trapezoid(np.asarray(self.profile(x)) ** 2, x))
        if abs(mass - 1.0) > 1e-6:
            raise UsageError(
                f"mollifier {self.name!r} has squared mass {mass:.8f}, not 1"
            )

    def scaled(self, n, x):
        return np.sqrt(float(n)) * np.asarray(self.profile(np.asarray(x) * float(n)))


def _triangular(x):
    return np.sqrt(1.5) * np.clip(1.0 - np.abs(x), 0.0, None)


def _gaussian_profile(x):
    return np.pi ** -0.25 * np.exp(-0.5 * x * x)


MOLLIFIERS = {
    "triangular": MollifierSpec("triangular", _triangular, 1.0),
    "gaussian": MollifierSpec("gaussian", _gaussian_profile, 12.0),
}


def stochastic_convolution(path, u, psi, n, t, path_id=0):
    """Forward Ito sum of u_s psi_n(t - s) over the sampled horizon.

    psi_n(x) = sqrt(n) psi(n x).  The convolution window is truncated to
    the sampled interval, so pick t and n such that the scaled support
    [t - 1/n, t + 1/n] stays inside it.
    """
    if path.hurst != 0.5:
        raise UsageError("stochastic convolutions require hurst = 1/2")
    if not isinstance(psi, MollifierSpec):
        raise UsageError("psi must be a registered MollifierSpec")
    if n < 1:
        raise DomainError("the mollifier index must be a positive integer")
    weights = psi.scaled(n, float(t) - path.grid.midpoints)
    value = float(np.sum(weights * u.values_at_nodes(path) * path.increments))
    return IntegralSample(value, path_id, n, forward=value, trace=0.0)


def samples_to_csv(samples, experiment_id, fileobj):
    """CSV rows experiment_id,path_id,n,value,forward_component,trace_component."""
    fileobj.write("experiment_id,path_id,n,value,forward_component,trace_component\n")
    for s in samples:
        fwd = "" if s.forward is None else repr(float(s.forward))
        tr = "" if s.trace is None else repr(float(s.trace))
        fileobj.write(f"{experiment_id},{s.path_id},{s.n},{float(s.value)!r},{fwd},{tr}\n")
