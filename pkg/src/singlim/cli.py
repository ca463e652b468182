"""Command-line surface: limit experiments, hypothesis checks, closed-form
evaluations, and convolution experiments, all driven by JSON configs or
named presets.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or
configuration error.  The default output directory comes from the
SINGLIM_OUT environment variable when set.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError, NumericalError, UsageError
from .fbm import GridSpec
from .kernels import (
    DEFAULT_PROBES,
    KernelSequence,
    check_h1,
    check_h4,
    check_h5,
    check_h6,
    check_h7,
    check_h8,
    check_sup_conditions,
    closed_form_double_integral,
    monomial_h_limit,
    monomial_h_norm,
    monomial_h_norm_terms,
)
from .montecarlo import ExperimentConfig, run_experiment

_USAGE_EXIT = 2
_VERDICT_EXIT = 1

# Every experiment the verdict suite needs, one command each.  The flat
# regime (hurst = 1/2, square-root scaling) is listed under its customary
# name in the literature as well.
PRESETS = {
    "bm-monomial": dict(kind="limit", hurst=0.5, kernel_scale=0.5,
                        integrand="path-linear", chaos_order=1,
                        experiment_id="bm-monomial"),
    "fbm-monomial": dict(kind="limit", hurst=0.75, kernel_scale="hurst",
                         integrand="path-linear", chaos_order=1,
                         bias_allowance=3e-2, experiment_id="fbm-monomial"),
    "second-chaos": dict(kind="limit", hurst=0.5, kernel_scale=0.5,
                         integrand="two-param", integrand_form="const",
                         chaos_order=2, experiment_id="second-chaos"),
    "third-chaos": dict(kind="limit", hurst=0.5, kernel_scale=0.5,
                        integrand="m-param", integrand_form="const",
                        chaos_order=3, experiment_id="third-chaos"),
    "convolution-triangular": dict(kind="convolution", hurst=0.5,
                                   integrand="path-linear", n_ladder=(8, 32, 128),
                                   mollifier="triangular",
                                   experiment_id="convolution-triangular"),
}
PRESETS["peccati-yor"] = dict(PRESETS["bm-monomial"], experiment_id="peccati-yor")

_CONFIG_FIELDS = {
    "schema": int, "kind": str, "hurst": float, "n_grid": int,
    "n_ladder": list, "kernel_scale": (str, float, int), "integrand": str,
    "integrand_coeffs": (list, type(None)), "integrand_form": str,
    "chaos_order": int, "paths": int, "ref_count": (int, type(None)),
    "seed": int, "probe_times": list, "lambdas": list, "z_weight": str,
    "z_weight_t0": float, "route": str, "workers": int,
    "bias_allowance": float, "mollifier": str, "conv_times": list,
    "limit_L": (float, type(None)), "experiment_id": str,
}


def validate_config_dict(d):
    """Structural validation of a JSON experiment config (schema 1)."""
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    if d.get("schema") != 1:
        raise ConfigError("config must declare schema: 1")
    for key, value in d.items():
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"unknown config field {key!r}")
        expected = _CONFIG_FIELDS[key]
        if expected is float:
            expected = (float, int)
        if not isinstance(value, expected):
            raise ConfigError(f"config field {key!r} has the wrong type")
    return d


def _load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config_dict(raw)


def _build_experiment_config(args, defaults):
    merged = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config(args.config)
        file_cfg.pop("schema", None)
        merged.update(file_cfg)
    if getattr(args, "hurst", None) is not None:
        merged["hurst"] = args.hurst
        if merged.get("kernel_scale") == "hurst" and merged["hurst"] < 0.5:
            # rougher paths need the finer default resolution
            merged.setdefault("n_grid", 2 ** 12)
    if getattr(args, "seed", None) is not None:
        merged["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        merged["paths"] = args.paths
    if getattr(args, "grid", None) is not None:
        merged["n_grid"] = args.grid
    if getattr(args, "threads", None) is not None:
        merged["workers"] = args.threads
    return ExperimentConfig.from_dict({"schema": 1, **merged})


def _out_dir(args):
    base = args.out or os.environ.get("SINGLIM_OUT") or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _verdict_table(result):
    lines = [f"experiment: {result.config.experiment_id}"]
    for name, ok in sorted(result.verdicts.items()):
        lines.append(f"  {name:<18} {'pass' if ok else 'FAIL'}")
    lines.append(f"overall: {'pass' if result.passed else 'FAIL'}")
    return "\n".join(lines)


def _emit_artifacts(result, out_dir, emit_plot_data=False):
    stem = result.config.experiment_id
    (out_dir / f"{stem}-summary.json").write_text(result.summary_json() + "\n")
    (out_dir / f"{stem}-raw.csv").write_bytes(result.canonical_csv())
    table = _verdict_table(result)
    (out_dir / f"{stem}-verdicts.txt").write_text(table + "\n")
    if emit_plot_data:
        _write_plot_data(result, out_dir / f"{stem}-plot.csv")
    return table


def _write_plot_data(result, path):
    """Tidy CSV of the summary statistics: one row per (group, n, metric)."""
    rows = ["group,n,metric,value"]
    stats = result.stats
    if "per_n" in stats:
        for n, entry in stats["per_n"].items():
            for side in ("F", "G"):
                for metric, value in entry[side].items():
                    rows.append(f"{side},{n},{metric},{value!r}")
            rows.append(f"FG,{n},gap,{entry['fg_gap']!r}")
    if "per_time" in stats:
        for t0, row in stats["per_time"].items():
            for key, value in row.items():
                if isinstance(value, dict) and "var" in value:
                    rows.append(f"t={t0},{key},var,{value['var']!r}")
    path.write_text("\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_verify_limit(args):
    if args.preset is None and args.config is None:
        raise UsageError("verify-limit needs --preset or --config")
    defaults = dict(PRESETS.get(args.preset, {})) if args.preset else {}
    if args.preset and args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    if args.preset and PRESETS[args.preset]["kind"] != "limit":
        raise UsageError(f"preset {args.preset!r} is not a limit experiment")
    cfg = _build_experiment_config(args, defaults)
    result = run_experiment(cfg)
    table = _emit_artifacts(result, _out_dir(args), args.emit_plot_data)
    print(table)
    print(f"digest: {result.digest()}")
    return 0 if result.passed else _VERDICT_EXIT


def cmd_convolution(args):
    defaults = dict(PRESETS["convolution-triangular"])
    if args.mollifier is not None:
        defaults["mollifier"] = args.mollifier
    cfg = _build_experiment_config(args, defaults)
    result = run_experiment(cfg)
    out = _out_dir(args)
    table = _emit_artifacts(result, out, args.emit_plot_data)
    print(table)
    stats = result.stats
    print("variance by (t, n):")
    for t0, row in stats["per_time"].items():
        for n in result.config.n_ladder:
            print(f"  t={t0} n={n}: var={row[str(n)]['var']:.5f}"
                  f" target={row['target_var']}")
    print("cross-time correlations at the largest index:")
    for line in stats["cross_time_corr"]:
        print("  " + " ".join(f"{v:+.4f}" for v in line))
    return 0 if result.passed else _VERDICT_EXIT


def _build_family(family, hurst, probes, scale=None):
    """The kernel families the command understands.

    "monomial" is the scaled power family; "constant" (phi_n identically 1)
    and "inverse-index" (phi_n identically 1/n) are the canonical
    counterexamples for the decay and positive-limit conditions.
    """
    if family == "monomial":
        flat = KernelSequence("scaled-monomial", scale=0.5 if scale is None else scale)
        matched = KernelSequence("scaled-monomial",
                                 scale=hurst if scale is None else scale)
        return flat, matched
    grid = GridSpec.uniform(2048)
    if family == "constant":
        table = {n: np.ones(grid.times.size) for n in probes}
    elif family == "inverse-index":
        table = {n: np.full(grid.times.size, 1.0 / n) for n in probes}
    else:
        raise UsageError(f"unknown kernel family {family!r}")
    seq = KernelSequence("user-table", table=table, table_grid=grid)
    return seq, seq


def _hypothesis_battery(hypotheses, hurst, probes, r=None, p=None, deltas=(0.9,),
                        family="monomial", scale=None, h7_cells=2048,
                        h8_cells=2 ** 12):
    """Run the requested checks on a kernel family.

    For the monomial family the squared-integral condition h1 concerns the
    square-root-scaled variant (the flat-regime normalisation); h4 onward
    concern the variant scaled by the roughness index itself.  An explicit
    ``scale`` overrides both.
    """
    flat, matched = _build_family(family, hurst, probes, scale)
    reports = []
    for h in hypotheses:
        if h == "h1":
            reports.append(check_h1(flat, probes))
        elif h == "h2":
            reports.append(check_sup_conditions(matched, probes, deltas, "h2"))
        elif h == "h3":
            reports.append(check_sup_conditions(matched, probes, deltas, "h3"))
        elif h.startswith("h3m"):
            m = int(h[4:-1]) if "(" in h else 3
            reports.append(check_sup_conditions(matched, probes, deltas, "h3m", m=m))
        elif h == "h4":
            reports.append(check_h4(matched, hurst, probes))
        elif h == "h5":
            reports.append(check_h5(matched, hurst, probes,
                                    r if r is not None else 0.5 / hurst))
        elif h == "h6":
            reports.append(check_h6(matched, hurst, probes))
        elif h == "h7":
            reports.append(check_h7(matched, hurst, probes, deltas, n_cells=h7_cells))
        elif h == "h8":
            capped = ([n for n in probes if n <= h8_cells / 16]
                      if family == "monomial" else list(probes))
            reports.append(check_h8(matched, hurst, capped,
                                    p if p is not None else 1.5, n_cells=h8_cells))
        else:
            raise UsageError(f"unknown hypothesis {h!r}")
    return reports


def cmd_check_hypotheses(args):
    if args.config:
        raw = _load_hypothesis_config(args.config)
    else:
        if args.hurst is None:
            raise UsageError("check-hypotheses needs --config or --hurst")
        default_set = (["h1", "h2", "h3", "h4", "h5"] if args.hurst >= 0.5
                       else ["h3", "h4", "h6", "h7", "h8"])
        raw = {
            "hurst": args.hurst,
            "hypotheses": args.hypotheses.split(",") if args.hypotheses else default_set,
            "probes": list(args.probes) if args.probes else list(DEFAULT_PROBES),
            "r": args.r,
            "p": args.p,
            "deltas": [args.delta] if args.delta else [0.9],
            "family": args.family or "monomial",
            "scale": args.scale,
        }
    reports = _hypothesis_battery(
        raw["hypotheses"], raw["hurst"], sorted(raw["probes"]),
        r=raw.get("r"), p=raw.get("p"), deltas=raw.get("deltas", (0.9,)),
        family=raw.get("family", "monomial"), scale=raw.get("scale"),
    )
    out = _out_dir(args)
    payload = "[" + ",\n".join(r.to_json() for r in reports) + "]\n"
    (out / "hypotheses.json").write_text(payload)
    all_support = True
    for rep in reports:
        lim = ("" if rep.extrapolated_limit is None
               else f"  limit~{rep.extrapolated_limit:.6g}")
        print(f"{rep.hypothesis:<10} {rep.verdict:<13}{lim}")
        all_support &= rep.verdict == "supports"
    return 0 if all_support else _VERDICT_EXIT


def _load_hypothesis_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("schema") != 1:
        raise ConfigError("hypothesis config must be an object with schema: 1")
    required = {"hurst", "hypotheses", "probes"}
    missing = required - raw.keys()
    if missing:
        raise ConfigError(f"hypothesis config is missing {sorted(missing)}")
    return raw


def _quadrature_double_integral(n, m, r):
    """Adaptive 2-D quadrature of the weighted monomial double integral,
    splitting at the diagonal singularity; the closed form's oracle."""
    def triangle(nn, mm):
        def inner(t):
            val, _ = integrate.quad(lambda s: s ** mm, 0.0, t,
                                    weight="alg", wvar=(0.0, r), epsabs=1e-13)
            return t ** nn * val
        val, _ = integrate.quad(inner, 0.0, 1.0, epsabs=1e-12, limit=200)
        return val

    return triangle(n, m) + triangle(m, n)


def cmd_closed_forms(args):
    if args.monomial_norm:
        if args.hurst is None or args.n is None:
            raise UsageError("--monomial-norm needs --n and --hurst")
        value = monomial_h_norm(args.n, args.hurst)
        limit = monomial_h_limit(args.hurst)
        print(f"monomial_h_norm(n={args.n}, hurst={args.hurst}) = {value!r}")
        print(f"limit = {limit!r}")
        if args.check:
            a1, a2, a3 = monomial_h_norm_terms(args.n, args.hurst)
            rel = abs((a1 + a2 + a3) - value) / abs(value)
            print(f"term-by-term assembly relative error = {rel:.3e}")
        return 0
    if args.n is None or args.m is None or args.r is None:
        raise UsageError("closed-forms needs --n, --m and --r (or --monomial-norm)")
    value = closed_form_double_integral(args.n, args.m, args.r)
    print(f"closed_form_double_integral(n={args.n}, m={args.m}, r={args.r}) = {value!r}")
    if args.check:
        oracle = _quadrature_double_integral(args.n, args.m, args.r)
        rel = abs(value - oracle) / abs(oracle)
        print(f"quadrature cross-check = {oracle!r}")
        print(f"relative error = {rel:.3e}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="singlim",
        description="Monte Carlo verification of singular stochastic integral limits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (schema 1)")
        p.add_argument("--out", help="output directory (default $SINGLIM_OUT or .)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--paths", type=int, help="override the path count")
        p.add_argument("--grid", type=int, help="override the grid cell count")
        p.add_argument("--threads", type=int, help="worker cap; never changes results")
        p.add_argument("--emit-plot-data", action="store_true",
                       help="also write a tidy CSV of the summary statistics")

    p_verify = sub.add_parser("verify-limit", help="run a limit experiment")
    p_verify.add_argument("--preset", help=f"one of {sorted(PRESETS)}")
    p_verify.add_argument("--hurst", type=float, help="roughness index override")
    add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify_limit)

    p_hyp = sub.add_parser("check-hypotheses", help="check the asymptotic conditions")
    p_hyp.add_argument("--hurst", type=float)
    p_hyp.add_argument("--hypotheses", help="comma-separated subset, e.g. h1,h4")
    p_hyp.add_argument("--probes", type=int, nargs="*")
    p_hyp.add_argument("--r", type=float, help="norm exponent for h5")
    p_hyp.add_argument("--p", type=float, help="norm exponent for h8")
    p_hyp.add_argument("--delta", type=float, help="window parameter for sup checks")
    p_hyp.add_argument("--family", help="monomial (default), constant, inverse-index")
    p_hyp.add_argument("--scale", type=float,
                       help="override the monomial scaling exponent")
    p_hyp.add_argument("--config", help="JSON config file (schema 1)")
    p_hyp.add_argument("--out", help="output directory (default $SINGLIM_OUT or .)")
    p_hyp.set_defaults(func=cmd_check_hypotheses)

    p_cf = sub.add_parser("closed-forms", help="evaluate the closed Gamma forms")
    p_cf.add_argument("--n", type=int)
    p_cf.add_argument("--m", type=int)
    p_cf.add_argument("--r", type=float)
    p_cf.add_argument("--hurst", type=float)
    p_cf.add_argument("--monomial-norm", action="store_true",
                      help="scaled squared norm of t^n in the rough regime")
    p_cf.add_argument("--check", action="store_true",
                      help="print the independent cross-check and its error")
    p_cf.set_defaults(func=cmd_closed_forms)

    p_conv = sub.add_parser("convolution", help="run a convolution experiment")
    p_conv.add_argument("--mollifier", help="triangular or gaussian")
    add_common(p_conv)
    p_conv.set_defaults(func=cmd_convolution)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, UsageError, DomainError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
