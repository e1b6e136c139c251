import json

import numpy as np
import pytest

from bayeslp import cli
from bayeslp.errors import NotPositiveDefinite


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=1))
    return str(path)


def _estimate_config(series_path, prior="nrp", draws=120, burnin=30, spline=None, seed=3):
    return {
        "estimate": {
            "input": {"series": str(series_path)},
            "lags": 2,
            "spec": {
                "horizons": {"first": 0, "last": 5},
                "prior": prior,
                "spline": spline,
            },
            "sampler": {"draws": draws, "burnin": burnin, "seed": seed},
        }
    }


@pytest.fixture()
def simulated_series(tmp_path):
    cfg = _write_config(
        tmp_path,
        {"simulate": {"dgp": {"kind": "linear", "L": 5, "T": 40}, "seed": 7}},
        name="sim.json",
    )
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    return out / "series.csv"


# ---------------------------------------------------------------------------
# config validation (exit code 2)


def test_missing_config_file(tmp_path, capsys):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2
    assert "does not exist" in capsys.readouterr().err


def test_unknown_top_level_key(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"simulate": {}, "extra": 1})
    assert cli.main(["simulate", "--config", cfg]) == 2
    assert "extra" in capsys.readouterr().err


def test_unknown_nested_key_named(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"simulate": {"dgp": {"kind": "linear", "typo": 3}}})
    assert cli.main(["simulate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "typo" in err and "simulate.dgp" in err


def test_invalid_dgp_kind_names_field(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"simulate": {"dgp": {"kind": "chaos"}}})
    assert cli.main(["simulate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "simulate.dgp.kind" in err and "chaos" in err


def test_missing_section(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"simulate": {}})
    assert cli.main(["estimate", "--config", cfg]) == 2


def test_empty_benchmark_matrix(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"benchmark": {"cells": []}})
    assert cli.main(["benchmark", "--config", cfg]) == 2


# ---------------------------------------------------------------------------
# simulate


def test_simulate_outputs_and_rerun_identical(tmp_path):
    cfg = _write_config(
        tmp_path, {"simulate": {"dgp": {"kind": "asymmetric", "L": 4, "T": 30}, "seed": 1}}
    )
    out1, out2 = tmp_path / "a" / "deep", tmp_path / "b"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert cli.main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("series.csv", "true_irf.csv", "simulate_meta.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    header = (out1 / "series.csv").read_text().splitlines()
    assert header[0].startswith("# config_hash:")
    assert any(line.startswith("# seed: 1") for line in header[:5])
    irf_lines = (out1 / "true_irf.csv").read_text().splitlines()
    assert "lag,regime_1,regime_2" in irf_lines[5]


def test_simulate_seed_flag_overrides(tmp_path):
    cfg = _write_config(tmp_path, {"simulate": {"dgp": {"kind": "linear", "L": 4, "T": 30}, "seed": 1}})
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    cli.main(["simulate", "--config", cfg, "--out", str(out1), "--seed", "99"])
    cli.main(["simulate", "--config", cfg, "--out", str(out2)])
    assert (out1 / "series.csv").read_text() != (out2 / "series.csv").read_text()
    assert "# seed: 99" in (out1 / "series.csv").read_text().splitlines()[1]


# ---------------------------------------------------------------------------
# estimate


def test_estimate_outputs(tmp_path, simulated_series):
    cfg = _write_config(tmp_path, _estimate_config(simulated_series))
    out = tmp_path / "est"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    draws_text = (out / "draws.csv").read_text()
    header_line = [l for l in draws_text.splitlines() if l.startswith("theta") or "theta" in l][0]
    assert "theta_h0_j0" in header_line
    assert "sigma_0_0" in header_line and "sigma_5_0" in header_line
    assert "tau_0" in header_line
    assert "lambda_" not in header_line  # nrp has no local weights
    fit = json.loads((out / "fit.json").read_text())
    assert {"dic", "waic", "lppd", "p_dic", "p_waic"} <= set(fit["fit"])
    assert (out / "irf_summary.csv").exists()


def test_estimate_normal_prior_column_set(tmp_path, simulated_series):
    cfg = _write_config(tmp_path, _estimate_config(simulated_series, prior="normal"))
    out = tmp_path / "est_n"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    header = (out / "draws.csv").read_text().splitlines()
    cols = next(l for l in header if not l.startswith("#"))
    assert "tau_" not in cols and "lambda_" not in cols


def test_estimate_arp_prior_column_set(tmp_path, simulated_series):
    cfg = _write_config(tmp_path, _estimate_config(simulated_series, prior="arp"))
    out = tmp_path / "est_a"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    cols = next(
        l for l in (out / "draws.csv").read_text().splitlines() if not l.startswith("#")
    )
    assert "tau_0" in cols and "lambda_0_0" in cols


def test_estimate_spline_columns(tmp_path, simulated_series):
    cfg = _write_config(
        tmp_path,
        _estimate_config(simulated_series, spline={"degree": 2, "knot_mode": "default"}),
    )
    out = tmp_path / "est_s"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    cols = next(
        l for l in (out / "draws.csv").read_text().splitlines() if not l.startswith("#")
    )
    assert "vartheta_j0_k0" in cols and "theta_h" not in cols


def test_estimate_rerun_byte_identical(tmp_path, simulated_series):
    cfg = _write_config(tmp_path, _estimate_config(simulated_series))
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out1)]) == 0
    assert cli.main(["estimate", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "draws.csv").read_bytes() == (out2 / "draws.csv").read_bytes()
    assert (out1 / "irf_summary.csv").read_bytes() == (out2 / "irf_summary.csv").read_bytes()
    # fit.json embeds a wall-clock figure; compare it with that key removed
    f1 = json.loads((out1 / "fit.json").read_text())
    f2 = json.loads((out2 / "fit.json").read_text())
    f1.pop("gibbs_seconds"), f2.pop("gibbs_seconds")
    assert f1 == f2


def test_estimate_monthly_input_with_gap(tmp_path):
    gap_csv = tmp_path / "gap.csv"
    gap_csv.write_text("DATE,IP\n2000-01-01,1.0\n2000-03-01,1.2\n")
    cfg = _write_config(
        tmp_path,
        {
            "estimate": {
                "input": {
                    "monthly": [{"path": str(gap_csv)}],
                    "response": "IP",
                    "shock": "IP",
                },
                "spec": {"horizons": {"first": 0, "last": 3}},
                "sampler": {"draws": 10, "burnin": 2},
            }
        },
    )
    assert cli.main(["estimate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    cfg = _write_config(tmp_path, {"simulate": {"dgp": {"kind": "linear", "L": 4, "T": 30}}})

    def boom(*args, **kwargs):
        raise NotPositiveDefinite("forced")

    monkeypatch.setattr(cli, "cmd_simulate", boom)
    assert cli.main(["simulate", "--config", cfg]) == 4
    assert "numerical failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# summarize


def test_summarize_round_trip(tmp_path, simulated_series):
    payload = _estimate_config(simulated_series)
    out = tmp_path / "est"
    cfg = _write_config(tmp_path, payload)
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0

    payload["summarize"] = {"draws": str(out / "draws.csv"), "coeff": 0}
    cfg2 = _write_config(tmp_path, payload, name="config2.json")
    assert cli.main(["summarize", "--config", cfg2, "--out", str(out)]) == 0

    def table(path):
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        return lines[0], np.loadtxt(lines[1:], delimiter=",", ndmin=2)

    cols_a, data_a = table(out / "irf_summary.csv")
    cols_b, data_b = table(out / "plot_data.csv")
    assert cols_a == cols_b
    assert np.array_equal(data_a, data_b)  # repr round-trip is exact


def test_summarize_spline_draws(tmp_path, simulated_series):
    payload = _estimate_config(simulated_series, spline={"degree": 2, "knot_mode": "default"})
    out = tmp_path / "est"
    cfg = _write_config(tmp_path, payload)
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    payload["summarize"] = {"draws": str(out / "draws.csv")}
    cfg2 = _write_config(tmp_path, payload, name="c2.json")
    assert cli.main(["summarize", "--config", cfg2, "--out", str(out)]) == 0
    _, data = next(
        (None, np.loadtxt(
            [l for l in (out / "plot_data.csv").read_text().splitlines() if not l.startswith("#")][1:],
            delimiter=",", ndmin=2,
        ))
        for _ in [0]
    )
    summary = np.loadtxt(
        [l for l in (out / "irf_summary.csv").read_text().splitlines() if not l.startswith("#")][1:],
        delimiter=",", ndmin=2,
    )
    assert np.array_equal(data, summary)


def test_summarize_refuses_mismatched_spec(tmp_path, simulated_series, capsys):
    payload = _estimate_config(simulated_series)
    out = tmp_path / "est"
    cfg = _write_config(tmp_path, payload)
    assert cli.main(["estimate", "--config", cfg, "--out", str(out)]) == 0

    tampered = _estimate_config(simulated_series, prior="arp")
    tampered["summarize"] = {"draws": str(out / "draws.csv")}
    cfg2 = _write_config(tmp_path, tampered, name="tampered.json")
    assert cli.main(["summarize", "--config", cfg2, "--out", str(out)]) == 2
    assert "spec hash" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# benchmark


def _benchmark_payload():
    return {
        "benchmark": {
            "replications": 2,
            "seed": 5,
            "cells": [
                {
                    "dgp": {"kind": "linear", "L": 4, "T": 25},
                    "prior": "normal",
                    "horizons": {"first": 0, "last": 4},
                    "lags": 2,
                    "draws": 120,
                    "burnin": 30,
                },
                {
                    "dgp": {"kind": "linear", "L": 4, "T": 25},
                    "prior": "nrp",
                    "nu": 0.01,
                    "horizons": {"first": 0, "last": 4},
                    "lags": 2,
                    "draws": 120,
                    "burnin": 30,
                },
            ],
        }
    }


def _strip_speed(text):
    lines = text.splitlines()
    out = []
    for line in lines:
        if line.startswith("#") or line.startswith("T,"):
            out.append(line)
        else:
            cells = line.split(",")
            cells[8] = "SPEED"
            out.append(",".join(cells))
    return "\n".join(out)


def test_sampler_defaults_match_published_run_length():
    config = cli._parse_sampler({}, "estimate.sampler", None)
    assert config.n_draws == 40_000
    assert config.n_burnin == 10_000
    assert config.thin == 1


def test_estimate_chains_flag_multiplies_draws(tmp_path, simulated_series):
    cfg = _write_config(tmp_path, _estimate_config(simulated_series, draws=60, burnin=15))
    out1, out2 = tmp_path / "c1", tmp_path / "c2"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out1)]) == 0
    assert cli.main(["estimate", "--config", cfg, "--out", str(out2), "--chains", "2"]) == 0

    def body_rows(path):
        return [l for l in path.read_text().splitlines() if not l.startswith("#")][1:]

    assert len(body_rows(out2 / "draws.csv")) == 2 * len(body_rows(out1 / "draws.csv"))
    # chain 0 of the two-chain run reproduces the single-chain draws
    assert body_rows(out2 / "draws.csv")[:60] == body_rows(out1 / "draws.csv")


def test_benchmark_six_cell_matrix(tmp_path):
    base = {"dgp": {"kind": "linear", "L": 4, "T": 25}, "horizons": {"first": 0, "last": 4},
            "lags": 2, "draws": 60, "burnin": 15}
    cells = [
        dict(base, prior=prior, bspline=bspline)
        for prior in ("normal", "nrp", "arp")
        for bspline in (False, True)
    ]
    cfg = _write_config(tmp_path, {"benchmark": {"replications": 1, "seed": 2, "cells": cells}})
    out = tmp_path / "six"
    assert cli.main(["benchmark", "--config", cfg, "--out", str(out)]) == 0
    rows = [l for l in (out / "metrics.csv").read_text().splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 6
    assert [r.split(",")[2] for r in rows] == ["normal", "normal", "nrp", "nrp", "arp", "arp"]
    assert [r.split(",")[3] for r in rows] == ["0", "1", "0", "1", "0", "1"]


def test_benchmark_metrics_table(tmp_path):
    cfg = _write_config(tmp_path, _benchmark_payload())
    out1, out2 = tmp_path / "m1", tmp_path / "m2"
    assert cli.main(["benchmark", "--config", cfg, "--out", str(out1)]) == 0
    assert cli.main(["benchmark", "--config", cfg, "--out", str(out2)]) == 0
    text = (out1 / "metrics.csv").read_text()
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "T,DGP,prior,bspline,nu,MSE,Coverage,Length,Speed,failures"
    assert len(lines) == 3
    assert lines[1].split(",")[2] == "normal"
    assert lines[1].split(",")[4] == ""  # no nu for the normal prior
    assert lines[2].split(",")[4] == "0.01"
    # deterministic apart from wall-clock speed
    assert _strip_speed(text) == _strip_speed((out2 / "metrics.csv").read_text())
