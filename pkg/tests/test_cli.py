import json

import pytest

from singlim.cli import main, validate_config_dict
from singlim.errors import ConfigError


def small_limit_config(tmp_path, **overrides):
    cfg = {
        "schema": 1,
        "kind": "limit",
        "hurst": 0.5,
        "n_grid": 2 ** 9,
        "n_ladder": [16, 64],
        "kernel_scale": 0.5,
        "integrand": "path-linear",
        "chaos_order": 1,
        "paths": 1000,
        "seed": 7,
        "workers": 1,
        "experiment_id": "cli-smoke",
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_closed_forms_trivial(capsys):
    assert main(["closed-forms", "--n", "0", "--m", "0", "--r", "0"]) == 0
    out = capsys.readouterr().out
    assert "= 0.99999999999" in out or "= 1.0" in out


def test_closed_forms_check_against_quadrature(capsys):
    assert main(["closed-forms", "--n", "6", "--m", "6", "--r", "-0.5", "--check"]) == 0
    out = capsys.readouterr().out
    rel = float(out.strip().rsplit("= ", 1)[-1])
    assert rel < 1e-8


def test_closed_forms_monomial_norm(capsys):
    assert main(["closed-forms", "--monomial-norm", "--n", "8", "--hurst", "0.3",
                 "--check"]) == 0
    out = capsys.readouterr().out
    assert "limit = " in out
    assert "0.4467" in out  # H Gamma(2H) for hurst = 0.3


def test_closed_forms_domain_violation_exits_2(capsys):
    assert main(["closed-forms", "--n", "2", "--m", "2", "--r", "-1.5"]) == 2
    assert "error:" in capsys.readouterr().err


def test_closed_forms_missing_args_exit_2():
    assert main(["closed-forms", "--n", "2"]) == 2


def test_check_hypotheses_flat_regime(tmp_path, capsys):
    code = main(["check-hypotheses", "--hurst", "0.5",
                 "--hypotheses", "h1,h2,h3,h4,h5",
                 "--probes", "16", "32", "64", "128", "256",
                 "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("supports") == 5
    payload = json.loads((tmp_path / "hypotheses.json").read_text())
    assert {p["hypothesis"] for p in payload} == {"h1", "h2", "h3", "h4", "h5"}


def test_check_hypotheses_counterexample_fails(tmp_path):
    # the unscaled-monomial battery cannot support h4; exercised via config
    cfg = {"schema": 1, "hurst": 0.35, "hypotheses": ["h4"],
           "probes": [16, 32, 64, 128], "scale": 0.0}
    path = tmp_path / "hyp.json"
    path.write_text(json.dumps(cfg))
    # config-driven runs use the matched scale; the counterexample goes
    # through the library surface, so here we just confirm exit 1 paths work
    code = main(["check-hypotheses", "--hurst", "0.35", "--hypotheses", "h8",
                 "--p", "2.5", "--probes", "16", "32", "64", "128",
                 "--out", str(tmp_path)])
    assert code == 1


def test_check_hypotheses_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["check-hypotheses", "--config", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_check_hypotheses_needs_input():
    assert main(["check-hypotheses"]) == 2


def test_verify_limit_with_config(tmp_path, capsys):
    cfg = small_limit_config(tmp_path)
    code = main(["verify-limit", "--config", str(cfg), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code in (0, 1)  # statistical verdicts at toy scale may fail
    assert "digest: " in out
    summary = json.loads((tmp_path / "cli-smoke-summary.json").read_text())
    validate_config_dict(summary["config"])  # round-trip: emitted config validates
    assert summary["schema"] == 1
    assert (tmp_path / "cli-smoke-raw.csv").exists()
    assert (tmp_path / "cli-smoke-verdicts.txt").exists()


def test_verify_limit_seed_override_changes_digest(tmp_path, capsys):
    cfg = small_limit_config(tmp_path)
    main(["verify-limit", "--config", str(cfg), "--out", str(tmp_path)])
    d1 = capsys.readouterr().out.rsplit("digest: ", 1)[1].strip()
    main(["verify-limit", "--config", str(cfg), "--out", str(tmp_path)])
    d2 = capsys.readouterr().out.rsplit("digest: ", 1)[1].strip()
    main(["verify-limit", "--config", str(cfg), "--seed", "99",
          "--out", str(tmp_path)])
    d3 = capsys.readouterr().out.rsplit("digest: ", 1)[1].strip()
    assert d1 == d2
    assert d3 != d1


def test_verify_limit_rough_regime_guard(tmp_path, capsys):
    code = main(["verify-limit", "--preset", "fbm-monomial", "--hurst", "0.2",
                 "--out", str(tmp_path)])
    assert code == 2
    assert "1/4" in capsys.readouterr().err


def test_verify_limit_unknown_preset():
    assert main(["verify-limit", "--preset", "mystery"]) == 2


def test_verify_limit_alias_preset_exists():
    from singlim.cli import PRESETS
    assert "peccati-yor" in PRESETS
    assert PRESETS["peccati-yor"]["kernel_scale"] == 0.5
    assert "bm-monomial" in PRESETS


def test_verify_limit_emit_plot_data(tmp_path):
    cfg = small_limit_config(tmp_path)
    main(["verify-limit", "--config", str(cfg), "--out", str(tmp_path),
          "--emit-plot-data"])
    plot = (tmp_path / "cli-smoke-plot.csv").read_text().splitlines()
    assert plot[0] == "group,n,metric,value"
    assert any(line.startswith("FG,") for line in plot)


def test_convolution_command(tmp_path, capsys):
    cfg = {
        "schema": 1, "kind": "convolution", "hurst": 0.5, "n_grid": 2 ** 9,
        "n_ladder": [8, 32], "integrand": "path-linear",
        "mollifier": "triangular", "paths": 1000, "seed": 13,
        "conv_times": [0.5], "workers": 1, "experiment_id": "conv-cli",
    }
    path = tmp_path / "conv.json"
    path.write_text(json.dumps(cfg))
    code = main(["convolution", "--config", str(path), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code in (0, 1)
    assert "variance by (t, n):" in out
    assert (tmp_path / "conv-cli-summary.json").exists()


def test_convolution_unregistered_mollifier(tmp_path, capsys):
    code = main(["convolution", "--mollifier", "boxcar", "--paths", "1000",
                 "--grid", "512", "--out", str(tmp_path)])
    assert code == 2
    assert "not registered" in capsys.readouterr().err


def test_out_dir_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SINGLIM_OUT", str(tmp_path / "envout"))
    assert main(["closed-forms", "--n", "1", "--m", "0", "--r", "0"]) == 0
    code = main(["check-hypotheses", "--hurst", "0.5", "--hypotheses", "h1",
                 "--probes", "16", "32", "64"])
    assert code == 0
    assert (tmp_path / "envout" / "hypotheses.json").exists()


def test_config_schema_validation():
    with pytest.raises(ConfigError):
        validate_config_dict([1, 2])
    with pytest.raises(ConfigError):
        validate_config_dict({"kind": "limit"})  # missing schema
    with pytest.raises(ConfigError):
        validate_config_dict({"schema": 1, "mystery_field": 3})
    with pytest.raises(ConfigError):
        validate_config_dict({"schema": 1, "paths": "many"})
    validate_config_dict({"schema": 1, "paths": 2000, "hurst": 0.5})
