"""Monte Carlo experiment runner and statistical verdicts.

An experiment samples a batch of paths, evaluates the discretized
integral family F_n (and its frozen-integrand companion G_n) per path and
per kernel index, samples the candidate limit law from structurally
independent streams, and reduces everything to summary statistics with
standard errors plus pass/fail verdicts.

Determinism contract: identical configurations (seed included) produce
bit-identical results for any worker count, because every path draws from
its own counter-based stream and all reductions happen on fully assembled
arrays in index order.
"""

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, UsageError
from .fbm import GridSpec, covariance_rh, sample_increments, sampling_factor
from .integrals import MOLLIFIERS, IntegrandSpec, trace_increments
from .kernels import default_alpha, monomial_h_limit
from .specfun import hermite
from .streams import NOISE_STREAM, PATH_STREAM, REFERENCE_STREAM, make_generator

__all__ = [
    "LimitLaw",
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "sample_limit_law",
    "ks_two_sample",
    "ks_statistic",
    "stable_char_functional",
    "moments_with_se",
    "probe_correlations",
]

KS_MIN_SIZE = 50
KS_P_THRESHOLD = 0.01
CORR_THRESHOLD = 0.05
CHAR_SE_FACTOR = 4.0
_CHUNK = 1024


# ---------------------------------------------------------------------------
# Elementary statistics
# ---------------------------------------------------------------------------

def moments_with_se(samples):
    """Mean and unbiased variance with their standard errors.

    The variance SE uses the fourth-moment formula
    Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise UsageError("moments need at least two samples")
    n = x.size
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1))
    centered = x - mean
    m4 = float(np.mean(centered ** 4))
    se_mean = math.sqrt(var / n)
    se_var = math.sqrt(max(m4 - (n - 3.0) / (n - 1.0) * var * var, 0.0) / n)
    return {"mean": mean, "var": var, "se_mean": se_mean, "se_var": se_var}


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
    two empirical distribution functions."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise UsageError("samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def _kolmogorov_sf(lam):
    # Q(lam) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lam^2)
    if lam < 1e-3:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return min(max(total, 0.0), 1.0)


def ks_two_sample(a, b, min_size=KS_MIN_SIZE):
    """Two-sample KS statistic with the asymptotic p-value.

    The asymptotic null distribution is only trustworthy for decent sample
    sizes, so undersized inputs are rejected; pass a smaller ``min_size``
    explicitly to compute the statistic on toy inputs anyway.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < min_size or b.size < min_size:
        raise UsageError(f"ks_two_sample needs at least {min_size} samples per side")
    d = ks_statistic(a, b)
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return {"statistic": d, "p_value": _kolmogorov_sf(en * d)}


def probe_correlations(f_samples, probe_values, probe_times):
    """Pearson correlation of the integral samples with the path value at
    each probe time, with a normal-approximation standard error."""
    f = np.asarray(f_samples, dtype=float)
    out = []
    for k, t0 in enumerate(probe_times):
        x = np.asarray(probe_values)[:, k]
        r = float(np.corrcoef(f, x)[0, 1])
        se = (1.0 - r * r) / math.sqrt(max(f.size - 3, 1))
        out.append({"t0": float(t0), "corr": r, "se": se})
    return out


# ---------------------------------------------------------------------------
# Limit laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitLaw:
    """The mixture law (1/m!) L^{m/2} u_1 H_m(Z), Z standard normal and
    independent of the driving noise."""

    L: float
    hermite_order: int = 1
    u1_kind: str = "gauss"  # "gauss" (terminal path value), "deterministic", "poly"
    u1_value: float = 1.0
    u1_coeffs: Optional[tuple] = None

    def __post_init__(self):
        if self.L <= 0.0:
            raise UsageError("limit variance factor L must be positive")
        if self.hermite_order < 1:
            raise UsageError("hermite order must be at least 1")

    @property
    def normalization(self):
        return self.L ** (self.hermite_order / 2.0) / math.factorial(self.hermite_order)

    def u1_second_moment(self):
        if self.u1_kind == "deterministic":
            return self.u1_value ** 2
        if self.u1_kind == "gauss":
            return 1.0  # terminal value of any fBm on [0, 1] is standard normal
        nodes, weights = np.polynomial.hermite_e.hermegauss(64)
        vals = np.polynomial.polynomial.polyval(nodes, self.u1_coeffs)
        return float(np.sum(weights * vals ** 2) / math.sqrt(2.0 * math.pi))

    def variance(self):
        m = self.hermite_order
        return self.normalization ** 2 * self.u1_second_moment() * math.factorial(m)


def sample_limit_law(law, count, seed):
    """Draw the reference law with streams disjoint from the path streams:
    u_1 comes from the reference stream, Z from the noise stream."""
    if count < 1:
        raise UsageError("count must be at least 1")
    gen_u = make_generator(seed, REFERENCE_STREAM)
    gen_z = make_generator(seed, NOISE_STREAM)
    if law.u1_kind == "deterministic":
        u1 = np.full(count, law.u1_value)
    elif law.u1_kind == "gauss":
        u1 = gen_u.standard_normal(count)
    else:
        u1 = np.polynomial.polynomial.polyval(gen_u.standard_normal(count), law.u1_coeffs)
    z = gen_z.standard_normal(count)
    return law.normalization * u1 * hermite(law.hermite_order, z)


def stable_char_functional(f_samples, z_weights, u1_samples, lam, law):
    """Both sides of the stable-convergence identity at frequency lam.

    Empirical side: E[Z exp(i lam F_n)].  Closed-form side (first chaos
    only): E[Z exp(-lam^2 L u_1^2 / 2)], the conditionally Gaussian
    characteristic function weighted by the same Z.  Higher chaos orders
    have no elementary closed form and are reported through two-sample
    tests instead.
    """
    if law.hermite_order != 1:
        raise UsageError("the closed form exists for first-chaos limits only")
    f = np.asarray(f_samples, dtype=float)
    z = np.asarray(z_weights, dtype=float)
    u1 = np.asarray(u1_samples, dtype=float)
    emp_terms = z * np.exp(1j * lam * f)
    cf_terms = z * np.exp(-0.5 * lam * lam * law.L * u1 ** 2)
    empirical = complex(np.mean(emp_terms))
    closed = float(np.mean(cf_terms))
    n = f.size
    se_emp = math.sqrt((np.var(emp_terms.real) + np.var(emp_terms.imag)) / n)
    se_cf = math.sqrt(np.var(cf_terms) / n)
    combined_se = math.sqrt(se_emp ** 2 + se_cf ** 2)
    return {
        "lambda": float(lam),
        "empirical_re": empirical.real,
        "empirical_im": empirical.imag,
        "closed_form": closed,
        "distance": abs(empirical - closed),
        "combined_se": combined_se,
    }


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything a reproducible run needs.  See the CLI docs for the JSON
    form of this structure (field ``schema: 1``)."""

    kind: str = "limit"  # "limit" or "convolution"
    hurst: float = 0.5
    n_grid: int = 2 ** 11
    n_ladder: tuple = (16, 64, 256)
    kernel_scale: object = 0.5  # float, or "hurst"
    integrand: str = "path-linear"
    integrand_coeffs: Optional[tuple] = None
    integrand_form: str = "const"
    chaos_order: int = 1
    paths: int = 20000
    ref_count: Optional[int] = None
    seed: int = 7
    probe_times: tuple = (0.25, 0.5, 0.75, 1.0)
    lambdas: tuple = (0.5, 1.0, 2.0)
    z_weight: str = "cos"  # "one", "cos", "indicator"
    z_weight_t0: float = 0.5
    route: str = "fft"
    workers: int = 1
    bias_allowance: float = 2e-2
    mollifier: str = "triangular"
    conv_times: tuple = (0.25, 0.5, 0.75)
    limit_L: Optional[float] = None
    experiment_id: str = "experiment"

    def scale_value(self):
        return self.hurst if self.kernel_scale == "hurst" else float(self.kernel_scale)

    def integrand_spec(self):
        if self.integrand == "deterministic-one":
            return IntegrandSpec("deterministic", g=lambda t: np.ones_like(np.asarray(t)))
        if self.integrand == "path-linear":
            return IntegrandSpec("path-linear")
        if self.integrand == "smooth-of-path":
            return IntegrandSpec("smooth-of-path", coeffs=self.integrand_coeffs)
        if self.integrand in ("two-param", "m-param"):
            return IntegrandSpec(self.integrand, form=self.integrand_form)
        raise ConfigError(f"unknown integrand {self.integrand!r}")

    def limit_variance_factor(self):
        """L: the limiting squared norm of the kernel family."""
        if self.limit_L is not None:
            return float(self.limit_L)
        s = self.scale_value()
        if self.hurst == 0.5:
            if s != 0.5:
                raise ConfigError(
                    "the flat-regime limit needs the square-root scaling; "
                    "pass limit_L explicitly for other scales"
                )
            return 0.5
        if s != self.hurst:
            raise ConfigError(
                "the rough/smooth-regime limit needs scale = hurst; "
                "pass limit_L explicitly for other scales"
            )
        return monomial_h_limit(self.hurst)

    def limit_law(self):
        spec = self.integrand_spec()
        m = self.chaos_order
        if spec.kind == "deterministic":
            return LimitLaw(self.limit_variance_factor(), m, "deterministic", 1.0)
        if spec.kind == "smooth-of-path":
            return LimitLaw(self.limit_variance_factor(), m, "poly",
                            u1_coeffs=spec.coeffs)
        if spec.kind in ("two-param", "m-param") and spec.form == "const":
            return LimitLaw(self.limit_variance_factor(), m, "deterministic", 1.0)
        return LimitLaw(self.limit_variance_factor(), m, "gauss")

    def validate(self):
        if self.kind not in ("limit", "convolution"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not (0.0 < self.hurst < 1.0):
            raise ConfigError("hurst must lie in (0, 1)")
        if self.paths < 1000:
            raise ConfigError("verdict-bearing runs need at least 1000 paths")
        if list(self.n_ladder) != sorted(set(self.n_ladder)):
            raise ConfigError("the kernel ladder must increase strictly")
        spec = self.integrand_spec()
        if self.kind == "limit":
            if self.chaos_order > 1 and self.hurst != 0.5:
                raise ConfigError("iterated-integral experiments require hurst = 1/2")
            if self.chaos_order == 1 and spec.kind in ("two-param", "m-param"):
                raise ConfigError("multi-parameter integrands need chaos_order >= 2")
            if self.chaos_order > 1 and spec.kind not in ("two-param", "m-param"):
                raise ConfigError("chaos_order >= 2 needs a multi-parameter integrand")
            if spec.is_path_dependent and self.hurst <= 0.25:
                raise ConfigError(
                    f"hurst = {self.hurst} with a path-dependent integrand is "
                    "outside the supported regime: the scaled-monomial limit "
                    "requires hurst > 1/4"
                )
            self.limit_variance_factor()
        else:
            if self.hurst != 0.5:
                raise ConfigError("convolution experiments require hurst = 1/2")
            if self.mollifier not in MOLLIFIERS:
                raise ConfigError(
                    f"mollifier {self.mollifier!r} is not registered; "
                    f"choose one of {sorted(MOLLIFIERS)}"
                )
            if spec.kind in ("two-param", "m-param"):
                raise ConfigError("convolutions take single-time integrands")
        return self

    def to_dict(self):
        d = asdict(self)
        d["schema"] = 1
        for key in ("n_ladder", "probe_times", "lambdas", "conv_times"):
            d[key] = list(d[key])
        if d["integrand_coeffs"] is not None:
            d["integrand_coeffs"] = list(d["integrand_coeffs"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        schema = d.pop("schema", 1)
        if schema != 1:
            raise ConfigError(f"unsupported config schema {schema}")
        for key in ("n_ladder", "probe_times", "lambdas", "conv_times"):
            if key in d:
                d[key] = tuple(d[key])
        if d.get("integrand_coeffs") is not None:
            d["integrand_coeffs"] = tuple(d["integrand_coeffs"])
        return cls(**d)


@dataclass
class ExperimentResult:
    """Raw sample series, summary statistics, and verdicts of one run."""

    config: ExperimentConfig
    series: dict = field(repr=False)  # name -> 1-D array of per-path samples
    stats: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def canonical_csv(self):
        lines = ["series,index,value"]
        for name in sorted(self.series):
            arr = self.series[name]
            lines.extend(f"{name},{i},{float(v)!r}" for i, v in enumerate(arr))
        return ("\n".join(lines) + "\n").encode()

    def digest(self):
        return hashlib.sha256(self.canonical_csv()).hexdigest()

    def summary_dict(self):
        return {
            "schema": 1,
            "config": self.config.to_dict(),
            "stats": self.stats,
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "digest": self.digest(),
        }

    def summary_json(self):
        return json.dumps(self.summary_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# The runner
# ---------------------------------------------------------------------------

def _node_index(grid, t0):
    idx = int(np.argmin(np.abs(grid.times - t0)))
    if abs(grid.times[idx] - t0) > 1e-9:
        raise ConfigError(f"probe time {t0} is not a grid node")
    return idx


def _u_values(spec, times_left, b_left):
    if spec.kind == "deterministic":
        g = spec.g
        return np.broadcast_to(np.asarray(g(times_left), dtype=float), b_left.shape)
    if spec.kind == "path-linear":
        return b_left
    if spec.kind == "smooth-of-path":
        return np.polynomial.polynomial.polyval(b_left, spec.coeffs)
    raise UsageError(f"{spec.kind} has no single-time values")


def _u_derivative(spec, b_left):
    if spec.kind == "deterministic":
        return np.zeros_like(b_left)
    if spec.kind == "path-linear":
        return np.ones_like(b_left)
    d = spec.derivative_coeffs
    if not d:
        return np.zeros_like(b_left)
    return np.polynomial.polynomial.polyval(b_left, d)


def _u_at_node(spec, times, values, idx):
    if spec.kind == "deterministic":
        return np.broadcast_to(np.asarray(spec.g(times[idx]), dtype=float),
                               values.shape[:1]).astype(float)
    if spec.kind == "path-linear":
        return values[:, idx]
    return np.polynomial.polynomial.polyval(values[:, idx], spec.coeffs)


def _iterated_batch(w, inner, m):
    level = w * inner
    for _ in range(m - 1):
        prefix = np.concatenate(
            [np.zeros((level.shape[0], 1)), np.cumsum(level, axis=1)[:, :-1]], axis=1
        )
        level = w * prefix
    return np.sum(level, axis=1)


def _limit_chunk(cfg, grid, factor, spec, phi_by_n, alpha_idx, tr, tr_end, idx):
    inc = sample_increments(cfg.hurst, grid, idx, cfg.seed, cfg.route, PATH_STREAM,
                            _factor=factor)
    values = np.concatenate([np.zeros((idx.size, 1)), np.cumsum(inc, axis=1)], axis=1)
    t_left = grid.times[:-1]
    out = {}
    if cfg.chaos_order == 1:
        u = _u_values(spec, t_left, values[:, :-1])
        du = _u_derivative(spec, values[:, :-1])
        u_end = _u_at_node(spec, grid.times, values, grid.n_cells)
        du_end = _u_derivative(spec, values[:, -1:])[:, 0]
        for n, phi in phi_by_n.items():
            f = np.sum(phi * u * inc, axis=1) - np.sum(phi * du * tr, axis=1)
            if cfg.hurst == 0.5:
                ia = alpha_idx[n]
                u_alpha = _u_at_node(spec, grid.times, values, ia)
                g = u_alpha * np.sum(phi[ia:] * inc[:, ia:], axis=1)
            else:
                g = u_end * np.sum(phi * inc, axis=1) - du_end * np.sum(phi * tr_end)
            out[f"F(n={n})"] = f
            out[f"G(n={n})"] = g
    else:
        inner_kind = spec.form
        inner = np.ones_like(inc) if inner_kind == "const" else values[:, :-1]
        for n, phi in phi_by_n.items():
            w = phi * inc
            out[f"F(n={n})"] = _iterated_batch(w, inner, cfg.chaos_order)
            ia = alpha_idx[n]
            u_alpha = (np.ones(idx.size) if inner_kind == "const"
                       else values[:, ia])
            w_win = np.where(np.arange(grid.n_cells) >= ia, w, 0.0)
            out[f"G(n={n})"] = u_alpha * _iterated_batch(
                w_win, np.ones_like(inc), cfg.chaos_order
            )
    for t0 in cfg.probe_times:
        out[f"PROBE(t0={t0})"] = values[:, _node_index(grid, t0)]
    if cfg.chaos_order == 1:
        out["U1"] = _u_at_node(spec, grid.times, values, grid.n_cells)
    zidx = _node_index(grid, cfg.z_weight_t0)
    if cfg.z_weight == "one":
        out["ZW"] = np.ones(idx.size)
    elif cfg.z_weight == "cos":
        out["ZW"] = np.cos(values[:, zidx])
    elif cfg.z_weight == "indicator":
        out["ZW"] = (values[:, zidx] > 0.0).astype(float)
    else:
        raise ConfigError(f"unknown Z-weight {cfg.z_weight!r}")
    return out


def _conv_chunk(cfg, grid, factor, spec, psi_weights, idx):
    inc = sample_increments(cfg.hurst, grid, idx, cfg.seed, cfg.route, PATH_STREAM,
                            _factor=factor)
    values = np.concatenate([np.zeros((idx.size, 1)), np.cumsum(inc, axis=1)], axis=1)
    u = _u_values(spec, grid.times[:-1], values[:, :-1])
    out = {}
    for (t0, n), w in psi_weights.items():
        out[f"CONV(t0={t0},n={n})"] = np.sum(w * u * inc, axis=1)
    for t0 in cfg.conv_times:
        out[f"UT(t0={t0})"] = _u_at_node(spec, grid.times, values, _node_index(grid, t0))
    return out


def _map_chunks(chunk_fn, total, workers):
    splits = [np.arange(lo, min(lo + _CHUNK, total))
              for lo in range(0, total, _CHUNK)]
    if workers <= 1:
        parts = [chunk_fn(s) for s in splits]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk_fn, splits))
    out = {}
    for name in parts[0]:
        out[name] = np.empty(total)
    for split, part in zip(splits, parts):
        for name, arr in part.items():
            out[name][split] = arr
    return out


def run_experiment(config):
    """Run one experiment end to end; see ExperimentConfig for the knobs."""
    cfg = config.validate()
    grid = GridSpec.uniform(cfg.n_grid)
    factor = sampling_factor(cfg.hurst, grid, cfg.route)
    spec = cfg.integrand_spec()
    ref_count = cfg.ref_count if cfg.ref_count is not None else cfg.paths

    if cfg.kind == "limit":
        s = cfg.scale_value()
        mid = grid.midpoints  # kernel values take the cell-midpoint convention
        phi_by_n = {n: float(n) ** s * mid ** n for n in cfg.n_ladder}
        alpha_idx = {
            n: int(np.searchsorted(grid.times, default_alpha(n), side="right") - 1)
            for n in cfg.n_ladder
        }
        tr = trace_increments(cfg.hurst, grid)
        tr_end = covariance_rh(cfg.hurst, 1.0, grid.times[1:]) - covariance_rh(
            cfg.hurst, 1.0, grid.times[:-1]
        )
        series = _map_chunks(
            lambda idx: _limit_chunk(cfg, grid, factor, spec, phi_by_n, alpha_idx,
                                     tr, tr_end, idx),
            cfg.paths, cfg.workers,
        )
        law = cfg.limit_law()
        series["REF"] = sample_limit_law(law, ref_count, cfg.seed)
        result = ExperimentResult(cfg, series)
        _limit_stats(result, law)
    else:
        moll = MOLLIFIERS[cfg.mollifier]
        psi_weights = {}
        for t0 in cfg.conv_times:
            for n in cfg.n_ladder:
                lo, hi = t0 - 1.0 / n, t0 + 1.0 / n
                if lo < 0.0 or hi > 1.0:
                    raise ConfigError(
                        f"mollifier support [{lo:.4f}, {hi:.4f}] leaves the sampled "
                        "horizon; shrink 1/n or move the probe time inward"
                    )
                psi_weights[(t0, n)] = moll.scaled(n, t0 - grid.midpoints)
        series = _map_chunks(
            lambda idx: _conv_chunk(cfg, grid, factor, spec, psi_weights, idx),
            cfg.paths, cfg.workers,
        )
        gen_z = make_generator(cfg.seed, NOISE_STREAM)
        for t0 in cfg.conv_times:
            gen_u = make_generator(cfg.seed, REFERENCE_STREAM, _node_index(grid, t0))
            if spec.kind == "deterministic":
                ut = np.full(ref_count, float(spec.g(t0)))
            else:
                bt = math.sqrt(t0) * gen_u.standard_normal(ref_count)
                ut = bt if spec.kind == "path-linear" else \
                    np.polynomial.polynomial.polyval(bt, spec.coeffs)
            series[f"REF(t0={t0})"] = ut * gen_z.standard_normal(ref_count)
        result = ExperimentResult(cfg, series)
        _convolution_stats(result)
    return result


def _limit_stats(result, law):
    cfg = result.config
    series = result.series
    stats = result.stats
    target_var = law.variance()
    stats["target_var"] = target_var
    per_n = {}
    fg_gaps = []
    for n in cfg.n_ladder:
        f = series[f"F(n={n})"]
        g = series[f"G(n={n})"]
        entry = {"F": moments_with_se(f), "G": moments_with_se(g)}
        entry["fg_gap"] = float(np.mean((f - g) ** 2))
        fg_gaps.append(entry["fg_gap"])
        per_n[str(n)] = entry
    stats["per_n"] = per_n
    stats["fg_gaps"] = fg_gaps
    n_last = cfg.n_ladder[-1]
    f_last = series[f"F(n={n_last})"]
    last = per_n[str(n_last)]["F"]
    stats["ks"] = ks_two_sample(f_last, series["REF"])
    probes = np.column_stack([series[f"PROBE(t0={t0})"] for t0 in cfg.probe_times])
    stats["correlations"] = probe_correlations(f_last, probes, cfg.probe_times)
    if cfg.chaos_order == 1:
        stats["char_functional"] = [
            stable_char_functional(f_last, series["ZW"], series["U1"], lam, law)
            for lam in cfg.lambdas
        ]
    else:
        stats["char_functional"] = {"method": "ks-fallback",
                                    "reason": "no elementary closed form above first chaos"}
    v = result.verdicts
    v["variance"] = abs(last["var"] - target_var) <= 3.0 * last["se_var"] + cfg.bias_allowance
    v["ks"] = stats["ks"]["p_value"] > KS_P_THRESHOLD
    v["correlations"] = all(
        abs(c["corr"]) < max(CORR_THRESHOLD, 3.0 * c["se"]) for c in stats["correlations"]
    )
    v["fg_contraction"] = all(a > b for a, b in zip(fg_gaps, fg_gaps[1:]))
    if cfg.chaos_order == 1:
        v["char_functional"] = all(
            c["distance"] <= CHAR_SE_FACTOR * c["combined_se"]
            for c in stats["char_functional"]
        )


def _convolution_stats(result):
    cfg = result.config
    series = result.series
    stats = result.stats
    spec = cfg.integrand_spec()
    n_last = cfg.n_ladder[-1]
    table = {}
    for t0 in cfg.conv_times:
        target = float(spec.g(t0)) ** 2 if spec.kind == "deterministic" else (
            t0 if spec.kind == "path-linear" else None)
        row = {}
        for n in cfg.n_ladder:
            row[str(n)] = moments_with_se(series[f"CONV(t0={t0},n={n})"])
        row["target_var"] = target
        row["ks"] = ks_two_sample(series[f"CONV(t0={t0},n={n_last})"],
                                  series[f"REF(t0={t0})"])
        table[str(t0)] = row
    stats["per_time"] = table
    cols = np.column_stack(
        [series[f"CONV(t0={t0},n={n_last})"] for t0 in cfg.conv_times]
    )
    corr = np.atleast_2d(np.corrcoef(cols, rowvar=False))
    stats["cross_time_corr"] = corr.tolist()
    off = np.abs(corr[~np.eye(corr.shape[0], dtype=bool)])
    v = result.verdicts
    v["variance"] = all(
        table[str(t0)]["target_var"] is None
        or abs(table[str(t0)][str(n_last)]["var"] - table[str(t0)]["target_var"])
        <= 3.0 * table[str(t0)][str(n_last)]["se_var"] + cfg.bias_allowance
        for t0 in cfg.conv_times
    )
    v["ks"] = all(table[str(t0)]["ks"]["p_value"] > KS_P_THRESHOLD
                  for t0 in cfg.conv_times)
    v["cross_time"] = bool(np.all(off < CORR_THRESHOLD))
