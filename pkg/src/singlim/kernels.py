"""Singular kernel sequences phi_n concentrating at t = 1, numerical
checkers for the asymptotic conditions h1 - h8 that drive the limit
experiments, and the closed-form Gamma evaluations behind the scaled
monomial family phi_n(t) = n^s t^n.

Checker verdicts are deliberately conservative: the conditions are
asymptotic statements, so a finite probe ladder can only "support" a
claim when the trend is monotone or Richardson-consistent; mixed trends
come back "inconclusive" rather than overclaiming.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, UsageError
from .fbm import GridSpec, inner_product_h, kstar_apply, _kstar_values, _as_node_values
from .specfun import ln_gamma

__all__ = [
    "KernelSequence",
    "HypothesisReport",
    "default_alpha",
    "eval_kernel",
    "check_h1",
    "check_sup_conditions",
    "check_h4",
    "check_h5",
    "check_h6",
    "check_h7",
    "check_h8",
    "closed_form_double_integral",
    "monomial_h_norm",
    "monomial_h_limit",
    "DEFAULT_PROBES",
]

DEFAULT_PROBES = tuple(2 ** k for k in range(4, 13))

# Verdict thresholds.  A limit claim is supported when the extrapolated
# value is stable to this relative spread; a decay claim when the tail
# shrinks by at least the ratio below; a boundedness claim when the tail
# does not grow by more than the allowance.
_LIMIT_STABILITY = 0.05
_DECAY_TAIL_RATIO = 0.9
_BOUNDED_GROWTH = 1.2


def default_alpha(n):
    """Window edge alpha_n = 1 - log(n)/n, clipped into [0, 1)."""
    n = float(n)
    if n <= 1.0:
        return 0.0
    return max(0.0, 1.0 - math.log(n) / n)


@dataclass
class KernelSequence:
    """A family phi_n of nonnegative bounded functions on [0, 1].

    family "scaled-monomial": phi_n(t) = n^scale * t^n, all integrals in
    closed Gamma form.  family "user-table": per-n node samples on a fixed
    grid, integrals by composite quadrature on that grid.
    """

    family: str
    scale: Optional[float] = None
    table: Optional[dict] = None
    table_grid: Optional[GridSpec] = None
    alpha_rule: Callable[[int], float] = default_alpha
    claimed_limit: Optional[float] = None

    def __post_init__(self):
        if self.family == "scaled-monomial":
            if self.scale is None:
                raise UsageError("scaled-monomial family needs a scale exponent")
        elif self.family == "user-table":
            if not self.table or self.table_grid is None:
                raise UsageError("user-table family needs table and table_grid")
            for n, vals in self.table.items():
                vals = np.asarray(vals, dtype=float)
                if vals.shape != self.table_grid.times.shape:
                    raise UsageError(f"table entry n={n} does not match the grid")
                if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
                    raise DomainError("kernel samples must be nonnegative and finite")
                self.table[n] = vals
        else:
            raise UsageError(f"unknown kernel family {self.family!r}")

    def values(self, n, t):
        t = np.asarray(t, dtype=float)
        if self.family == "scaled-monomial":
            return float(n) ** self.scale * t ** n
        if n not in self.table:
            raise UsageError(f"user-table has no entry for n={n}")
        return np.interp(t, self.table_grid.times, self.table[n])

    def sup_on(self, n, hi):
        """sup of phi_n over [0, hi]; monomials are increasing so it is
        the right endpoint value."""
        if self.family == "scaled-monomial":
            return float(self.values(n, hi))
        t = self.table_grid.times
        mask = t <= hi + 1e-15
        return float(np.max(self.table[n][mask])) if np.any(mask) else 0.0

    def squared_integral(self, n, lo=0.0):
        """integral_lo^1 phi_n(t)^2 dt (closed form for monomials)."""
        if self.family == "scaled-monomial":
            p = 2 * n + 1
            return float(n) ** (2 * self.scale) * (1.0 - lo ** p) / p
        t = self.table_grid.times
        v = self.table[n] ** 2
        if lo > 0.0:
            v = np.where(t >= lo, v, 0.0)
        return float(np.trapezoid(v, t))

    def lr_norm(self, n, r):
        """L^r([0,1]) norm of phi_n."""
        if self.family == "scaled-monomial":
            return float(n) ** self.scale * (1.0 / (n * r + 1.0)) ** (1.0 / r)
        t = self.table_grid.times
        return float(np.trapezoid(self.table[n] ** r, t)) ** (1.0 / r)

    def probe_alphas(self, probe_ns):
        alphas = [self.alpha_rule(n) for n in probe_ns]
        if any(not (0.0 <= a < 1.0) for a in alphas):
            raise DomainError("alpha_n must lie in [0, 1)")
        if any(b < a for a, b in zip(alphas, alphas[1:])):
            raise DomainError("alpha_n must be nondecreasing along the probe set")
        return alphas


@dataclass
class HypothesisReport:
    """Per-hypothesis diagnostics over a probe ladder plus a verdict."""

    hypothesis: str
    family: str
    hurst: Optional[float]
    probe_ns: list
    values: list
    verdict: str
    extrapolated_limit: Optional[float] = None
    detail: dict = field(default_factory=dict)

    def to_json(self):
        payload = {
            "hypothesis": self.hypothesis,
            "family": self.family,
            "H": self.hurst,
            "probes": [{"n": int(n), "value": float(v)}
                       for n, v in zip(self.probe_ns, self.values)],
            "verdict": self.verdict,
            "extrapolated_limit": self.extrapolated_limit,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            hypothesis=d["hypothesis"],
            family=d["family"],
            hurst=d["H"],
            probe_ns=[p["n"] for p in d["probes"]],
            values=[p["value"] for p in d["probes"]],
            verdict=d["verdict"],
            extrapolated_limit=d["extrapolated_limit"],
        )


def eval_kernel(seq, n, t):
    """Pointwise phi_n(t)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise DomainError("kernel argument must lie in [0, 1]")
    out = seq.values(n, t_arr)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Verdict helpers
# ---------------------------------------------------------------------------

def _richardson(values):
    """Extrapolate the limit of a geometrically probed sequence.

    Assumes v_k ~ L + C n_k^{-p} on a doubling ladder; estimates p from the
    last three entries and corrects the final value.  Falls back to the
    last value when the differences do not behave geometrically.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return float(v[-1])
    d1 = v[-2] - v[-3]
    d2 = v[-1] - v[-2]
    if d2 == 0.0 or d1 == 0.0 or (d1 / d2) <= 1.0:
        return float(v[-1])
    rate = d1 / d2
    return float(v[-1] + d2 / (rate - 1.0))


def _verdict_positive_limit(values):
    """Supports when the sequence stabilises at a strictly positive limit;
    fails when the extrapolated limit is zero (or negative) relative to the
    scale of the sequence itself."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return "fails", None
    lim = _richardson(v)
    if lim <= _LIMIT_STABILITY * abs(v[-1]) or abs(v[-1]) < 1e-12:
        return "fails", max(lim, 0.0)
    tail_move = abs(v[-1] - v[-2]) / abs(lim)
    prev_move = abs(v[-2] - v[-3]) / abs(lim) if v.size >= 3 else tail_move
    if tail_move < _LIMIT_STABILITY and tail_move <= prev_move + _LIMIT_STABILITY:
        return "supports", lim
    return "inconclusive", lim


def _verdict_decay(values):
    """Supports when the tail decays toward zero; a positive plateau or a
    growing tail is decisive failure."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return "fails", None
    if np.all(v == 0.0):
        return "supports", 0.0
    tail = v[-3:] if v.size >= 3 else v
    top = max(abs(v[0]), 1e-300)
    if np.all(np.diff(tail) <= 0.0):
        if v[-1] == 0.0 or v[-1] <= _DECAY_TAIL_RATIO * top:
            return "supports", 0.0
        plateau = (tail[0] - tail[-1]) / max(abs(tail[0]), 1e-300)
        if plateau < 0.02:
            return "fails", _richardson(v)
        return "inconclusive", _richardson(v)
    if np.all(np.diff(tail) >= 0.0):
        return "fails", _richardson(v)
    return "inconclusive", _richardson(v)


def _verdict_bounded(values):
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return "fails", None
    half = v[v.size // 2:]
    if np.max(v) <= _BOUNDED_GROWTH * max(v[0], 1e-300) or np.all(np.diff(half) <= 0.0):
        return "supports", float(np.max(half))
    if np.all(np.diff(half) > 0.0):
        return "fails", None
    return "inconclusive", float(np.max(half))


# ---------------------------------------------------------------------------
# Hypothesis checkers
# ---------------------------------------------------------------------------

def check_h1(seq, probe_ns):
    """Common positive limit of the full and windowed squared integrals:
    integral_{alpha_n}^1 phi_n^2 and integral_0^1 phi_n^2 both -> L > 0."""
    probe_ns = sorted(probe_ns)
    alphas = seq.probe_alphas(probe_ns)
    full = [seq.squared_integral(n) for n in probe_ns]
    windowed = [seq.squared_integral(n, lo=a) for n, a in zip(probe_ns, alphas)]
    if not all(np.isfinite(full)) or not all(np.isfinite(windowed)):
        return HypothesisReport("h1", seq.family, None, probe_ns, full, "fails")
    verdict, lim = _verdict_positive_limit(full)
    if verdict == "supports":
        gap = abs(full[-1] - windowed[-1]) / max(abs(lim), 1e-300)
        gap_prev = abs(full[-2] - windowed[-2]) / max(abs(lim), 1e-300)
        if gap > _LIMIT_STABILITY or gap > gap_prev + _LIMIT_STABILITY:
            verdict = "inconclusive"
    return HypothesisReport(
        "h1", seq.family, None, probe_ns, full, verdict, lim,
        detail={"windowed": windowed},
    )


def check_sup_conditions(seq, probe_ns, delta_list, variant="h2", m=None):
    """Decay of sup products near the left of the interval.

    variant "h2": sup_{[0,delta]} phi_n -> 0.
    variant "h3": (sup_{[0,delta]} phi_n)(sup_{[0,1]} phi_n) -> 0.
    variant "h3m": (sup_{[0,delta]} phi_n)(sup_{[0,1]} phi_n)^{m-1} -> 0.
    The reported value for each n is the worst case over delta_list.
    """
    if variant not in ("h2", "h3", "h3m"):
        raise UsageError(f"unknown sup-condition variant {variant!r}")
    if variant == "h3m":
        if m is None or m < 2:
            raise UsageError("h3m needs the parameter count m >= 2")
        power = m - 1
    else:
        power = 1 if variant == "h3" else 0
    for d in delta_list:
        if not (0.0 <= d < 1.0):
            raise DomainError("delta must lie in [0, 1)")
    probe_ns = sorted(probe_ns)
    values = []
    for n in probe_ns:
        sup_full = seq.sup_on(n, 1.0)
        worst = max(seq.sup_on(n, d) * sup_full ** power for d in delta_list)
        values.append(worst)
    verdict, lim = _verdict_decay(values)
    name = variant if variant != "h3m" else f"h3m(m={m})"
    return HypothesisReport(name, seq.family, None, probe_ns, values, verdict, lim)


def _h_norm_sq(seq, hurst, n, grid_cells=2 ** 11):
    """||phi_n||^2 in the Gaussian Hilbert space for one probe n."""
    if seq.family == "scaled-monomial":
        if hurst > 0.5:
            alpha_h = hurst * (2.0 * hurst - 1.0)
            return (float(n) ** (2 * seq.scale) * alpha_h
                    * closed_form_double_integral(n, n, 2.0 * hurst - 2.0))
        if hurst == 0.5:
            return seq.squared_integral(n)
        return float(n) ** (2 * seq.scale - 2 * hurst) * monomial_h_norm(n, hurst)
    grid = seq.table_grid
    method = "weighted-double-integral" if hurst > 0.5 else (
        "kstar" if hurst < 0.5 else "increment-bilinear")
    if hurst == 0.5:
        return seq.squared_integral(n)
    return inner_product_h(hurst, seq.table[n], seq.table[n], method, grid)


def check_h4(seq, hurst, probe_ns):
    """||phi_n||^2 in the Gaussian Hilbert space tends to L > 0."""
    probe_ns = sorted(probe_ns)
    values = [_h_norm_sq(seq, hurst, n) for n in probe_ns]
    if not all(np.isfinite(values)):
        return HypothesisReport("h4", seq.family, hurst, probe_ns, values, "fails")
    verdict, lim = _verdict_positive_limit(values)
    return HypothesisReport("h4", seq.family, hurst, probe_ns, values, verdict, lim)


def check_h5(seq, hurst, probe_ns, r):
    """L^r norms vanish for some r < 1/H."""
    if not (0.0 < r < 1.0 / hurst):
        raise UsageError("h5 requires an exponent r in (0, 1/hurst)")
    probe_ns = sorted(probe_ns)
    values = [seq.lr_norm(n, r) for n in probe_ns]
    verdict, lim = _verdict_decay(values)
    return HypothesisReport("h5", seq.family, hurst, probe_ns, values, verdict, lim,
                            detail={"r": r})


def check_h6(seq, hurst, probe_ns):
    """Uniform bound on integral (s^{2H-1} + (1-s)^{2H-1}) phi_n(s)^2 ds."""
    if hurst >= 0.5:
        raise UsageError("h6 concerns the rough regime hurst < 1/2")
    probe_ns = sorted(probe_ns)
    values = []
    for n in probe_ns:
        if seq.family == "scaled-monomial":
            # closed form: n^{2s} [ B(2n+1, 2H) + 1/(2n+2H) ]
            lg = ln_gamma
            first = math.exp(lg(2.0 * hurst) + lg(2.0 * n + 1.0) - lg(2.0 * n + 2.0 * hurst + 1.0))
            second = 1.0 / (2.0 * n + 2.0 * hurst)
            values.append(float(n) ** (2 * seq.scale) * (first + second))
        else:
            # weights are singular but integrable at both endpoints; midpoint
            # rule never evaluates them there
            t = seq.table_grid.times
            mid = seq.table_grid.midpoints
            wm = mid ** (2 * hurst - 1.0) + (1.0 - mid) ** (2 * hurst - 1.0)
            pm = np.interp(mid, t, seq.table[n]) ** 2
            values.append(float(np.sum(wm * pm * seq.table_grid.dt)))
    verdict, lim = _verdict_bounded(values)
    return HypothesisReport("h6", seq.family, hurst, probe_ns, values, verdict, lim)


def _h7_value(seq, hurst, n, delta, n_cells):
    """integral_0^delta ( integral_s^delta |phi_n(t)-phi_n(s)| (t-s)^{H-3/2} dt )^2 ds
    by the exact-per-cell singular weights on a uniform grid over [0, delta]."""
    gamma = hurst - 1.5
    times = np.linspace(0.0, delta, n_cells + 1)
    phi = np.asarray(seq.values(n, times), dtype=float)
    mids = 0.5 * (times[:-1] + times[1:])
    phi_mid = np.asarray(seq.values(n, mids), dtype=float)
    dt = delta / n_cells
    inner = np.zeros(n_cells)
    t_left = times[:-1]
    t_right = times[1:]
    for i, s in enumerate(mids):
        # |phi(t) - phi(s)| is phi(t) - phi(s) for monotone monomials;
        # general tables use the absolute difference of node values
        g_nodes = np.abs(phi - phi_mid[i])
        j = i  # s is the midpoint of cell i
        gb = g_nodes[j + 1]
        acc = gb * (times[j + 1] - s) ** (gamma + 1.0) / (gamma + 2.0)
        tau_a = t_left[j + 1:] - s
        tau_b = t_right[j + 1:] - s
        w0 = (tau_b ** (gamma + 1.0) - tau_a ** (gamma + 1.0)) / (gamma + 1.0)
        w1 = (tau_b ** (gamma + 2.0) - tau_a ** (gamma + 2.0)) / (gamma + 2.0)
        ga = g_nodes[j + 1:-1]
        gbv = g_nodes[j + 2:]
        slope = (gbv - ga) / dt
        acc += np.sum((ga - slope * tau_a) * w0 + slope * w1)
        inner[i] = acc
    return float(np.sum(inner ** 2) * dt)


def check_h7(seq, hurst, probe_ns, delta_list, n_cells=2048):
    """Vanishing of the squared singular modulus of continuity up to delta."""
    if hurst >= 0.5:
        raise UsageError("h7 concerns the rough regime hurst < 1/2")
    for d in delta_list:
        if not (0.0 < d < 1.0):
            raise DomainError("delta must lie in (0, 1)")
    probe_ns = sorted(probe_ns)
    values = [max(_h7_value(seq, hurst, n, d, n_cells) for d in delta_list)
              for n in probe_ns]
    verdict, lim = _verdict_decay(values)
    return HypothesisReport("h7", seq.family, hurst, probe_ns, values, verdict, lim,
                            detail={"deltas": list(delta_list)})


def check_h8(seq, hurst, probe_ns, p, n_cells=2 ** 12):
    """Vanishing L^p norm of the transferred kernels K* phi_n, p > 1.

    The probe grid must resolve the sharpest kernel: values for n well
    above n_cells / 16 are dominated by interpolation error and the
    checker refuses them.
    """
    if hurst >= 0.5:
        raise UsageError("h8 concerns the rough regime hurst < 1/2")
    if p <= 1.0:
        raise UsageError("h8 requires an exponent p > 1")
    probe_ns = sorted(probe_ns)
    if seq.family == "scaled-monomial" and max(probe_ns) > n_cells / 16:
        raise UsageError(
            f"probe n={max(probe_ns)} is unresolvable on {n_cells} cells; "
            "raise n_cells or lower the ladder"
        )
    grid = seq.table_grid if seq.family == "user-table" else GridSpec.uniform(n_cells)
    mids = grid.midpoints
    values = []
    for n in probe_ns:
        phi = np.asarray(seq.values(n, grid.times), dtype=float)
        f = _kstar_values(hurst, phi, grid, mids)
        values.append(float(np.sum(np.abs(f) ** p * grid.dt)))
    verdict, lim = _verdict_decay(values)
    return HypothesisReport("h8", seq.family, hurst, probe_ns, values, verdict, lim,
                            detail={"p": p, "regime_note": "decay is only expected for p < 2"})


# ---------------------------------------------------------------------------
# Closed forms for the monomial family
# ---------------------------------------------------------------------------

def closed_form_double_integral(n, m, r):
    """integral over the unit square of t^n s^m |t-s|^r, in log space.

    Equals B(m+1, r+1)/(n+m+r+2) + B(n+1, r+1)/(n+m+r+2) written with
    Gamma factors so that indices in the thousands stay finite.
    """
    if r <= -1.0:
        raise DomainError("the weight exponent must satisfy r > -1")
    if n < 0 or m < 0:
        raise DomainError("monomial degrees must be nonnegative")
    lg = ln_gamma
    denom = math.log(n + m + r + 2.0)
    term1 = math.exp(lg(m + 1.0) + lg(r + 1.0) - denom - lg(2.0 + m + r))
    term2 = math.exp(lg(n + 1.0) + lg(r + 1.0) - denom - lg(2.0 + n + r))
    return term1 + term2


def monomial_h_norm(n, hurst):
    """n^{2H} ||t^n||^2 in the Gaussian Hilbert space for hurst < 1/2.

    Exact Gamma expression
        n^{2H+1} Gamma(n) Gamma(2H+1) / Gamma(n+2H+1)
      - n^{2H+2} Gamma(n) Gamma(2H+1) / (2 (n+H) Gamma(n+1+2H)),
    which tends to H Gamma(2H) as n grows.
    """
    if not (0.0 < hurst < 0.5):
        raise DomainError("monomial_h_norm requires hurst in (0, 1/2)")
    if n < 1:
        raise DomainError("monomial degree must be at least 1")
    lg = ln_gamma
    base = lg(float(n)) + lg(2.0 * hurst + 1.0) - lg(n + 2.0 * hurst + 1.0)
    term1 = math.exp((2.0 * hurst + 1.0) * math.log(n) + base)
    term2 = math.exp(
        (2.0 * hurst + 2.0) * math.log(n) + lg(float(n)) + lg(2.0 * hurst + 1.0)
        - math.log(2.0 * (n + hurst)) - lg(n + 1.0 + 2.0 * hurst)
    )
    return term1 - term2


def monomial_h_norm_terms(n, hurst):
    """The three pieces of the squared-norm expansion, before simplification.

    A1 = n^{2H}; A2 is the cross term (carrying its minus sign); A3 the
    double-integral term.  Their sum equals monomial_h_norm up to roundoff
    and the decomposition exists purely as an algebraic cross-check.
    """
    lg = ln_gamma
    a1 = float(n) ** (2.0 * hurst)
    bterm = math.exp(lg(float(n)) + lg(2.0 * hurst + 1.0) - lg(n + 2.0 * hurst + 1.0))
    a2 = -a1 - float(n) ** (2.0 * hurst + 1.0) / (n + 2.0 * hurst) \
        + float(n) ** (2.0 * hurst + 1.0) * bterm
    i_nn = closed_form_double_integral(n - 1, n - 1, 2.0 * hurst)
    a3 = float(n) ** (2.0 * hurst + 1.0) / (n + 2.0 * hurst) \
        - 0.5 * float(n) ** (2.0 * hurst + 2.0) * i_nn
    return a1, a2, a3


def monomial_h_limit(hurst):
    """H Gamma(2H): the limiting squared norm of the scaled monomials."""
    return hurst * math.exp(ln_gamma(2.0 * hurst))
