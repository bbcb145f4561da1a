import copy
import json

import pytest

from cotv.cli import (
    main,
    render_csv,
    render_envelope,
    run_scenario,
    scenario_row,
    sweep_rows,
)
from cotv.config import parse_config
from cotv.errors import ConfigError, GridTooLargeError


BASE = {
    "framework": "eu",
    "distribution": {"family": "exponential", "params": {"rate": 1.0}},
    "preference": {"family": "pure_quadratic", "params": {"a": -1.0}},
    "economics": {"phi": 1.0},
    "method": "both",
    "seed": 42,
}


def make_config(**overrides):
    raw = copy.deepcopy(BASE)
    raw.update(overrides)
    return parse_config(raw)


def write_config(tmp_path, raw, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


class TestConfigValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError) as err:
            make_config(bogus=1)
        assert err.value.path == "bogus"

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError) as err:
            make_config(distribution={"family": "exponential",
                                      "params": {"rate": 1.0, "shape": 2.0}})
        assert err.value.path == "distribution.params.shape"

    def test_unknown_family(self):
        with pytest.raises(ConfigError) as err:
            make_config(distribution={"family": "weibull", "params": {}})
        assert err.value.path == "distribution.family"

    def test_weighting_required_for_dt(self):
        raw = copy.deepcopy(BASE)
        raw["framework"] = "dt"
        with pytest.raises(ConfigError) as err:
            parse_config(raw)
        assert err.value.path == "weighting"

    def test_weighting_forbidden_for_eu(self):
        with pytest.raises(ConfigError) as err:
            make_config(weighting={"family": "identity"})
        assert err.value.path == "weighting"

    def test_phi_must_be_positive(self):
        with pytest.raises(ConfigError) as err:
            make_config(economics={"phi": 0.0})
        assert err.value.path == "economics.phi"

    def test_seed_must_be_unsigned_64(self):
        with pytest.raises(ConfigError):
            make_config(seed=-3)
        with pytest.raises(ConfigError):
            make_config(seed=2**64)

    def test_invalid_utility_parameters_carry_path(self):
        with pytest.raises(ConfigError) as err:
            make_config(preference={"family": "pure_quadratic",
                                    "params": {"a": 1.0}})
        assert err.value.path == "preference"

    def test_grid_too_large(self):
        with pytest.raises(GridTooLargeError):
            make_config(sweep={"axes": {
                "distribution.params.rate": list(range(1001)),
                "economics.phi": list(range(1001)),
            }})

    def test_round_trip_canonicalisation(self):
        config = make_config()
        echoed = parse_config(config.canonical())
        assert echoed.canonical() == config.canonical()

    def test_env_seed_fallback(self, monkeypatch):
        raw = copy.deepcopy(BASE)
        del raw["seed"]
        monkeypatch.setenv("COTV_SEED", "777")
        assert parse_config(raw).seed == 777

    def test_seed_override_wins(self):
        raw = copy.deepcopy(BASE)
        assert parse_config(raw, seed_override=9).seed == 9


class TestRunScenario:
    def test_poisson_quadratic_headline(self):
        envelope = run_scenario(make_config())
        results = envelope["results"]
        assert results["rho_exact"] == pytest.approx(0.5, abs=1e-6)
        assert results["rho_second_order"] == pytest.approx(0.5, abs=1e-10)
        assert results["rho_upper_bound"] == pytest.approx(0.5)
        assert results["congestion_multiplier_exact"] == pytest.approx(1.5, abs=1e-6)

    def test_degenerate_scenario(self):
        envelope = run_scenario(make_config(
            distribution={"family": "degenerate", "params": {"value": 5.0}}))
        results = envelope["results"]
        assert results["premium_exact"] == 0.0
        assert results["cotv_exact"] == 0.0
        assert results["rho_exact"] == 0.0
        assert results["eta_exact"] == 1.0
        assert results["eta_second_order"] == 1.0

    def test_rdu_identity_weighting_matches_eu(self):
        eu_env = run_scenario(make_config(
            distribution={"family": "discrete",
                          "dt": {"t0": 10.0, "xi": [-2.0, 0.0, 2.0]}},
            preference={"family": "quadratic", "params": {"a": -1.0, "b": -0.5}},
        ))
        raw = copy.deepcopy(BASE)
        raw["framework"] = "rdu"
        raw["distribution"] = {"family": "discrete",
                               "dt": {"t0": 10.0, "xi": [-2.0, 0.0, 2.0]}}
        raw["preference"] = {"family": "quadratic", "params": {"a": -1.0, "b": -0.5}}
        raw["weighting"] = {"family": "identity"}
        rdu_env = run_scenario(parse_config(raw))
        for field in ("premium_exact", "vot_exact", "cot_exact", "cotv_exact",
                      "rho_exact"):
            assert rdu_env["results"][field] == pytest.approx(
                eu_env["results"][field], abs=1e-9)

    def test_all_numeric_fields_finite(self):
        envelope = run_scenario(make_config())
        for key, value in envelope["results"].items():
            if isinstance(value, float):
                assert value == value and abs(value) != float("inf"), key

    def test_dt_partial_band_scenario(self):
        raw = copy.deepcopy(BASE)
        raw["framework"] = "dt"
        raw["distribution"] = {
            "family": "discrete",
            "dt": {"t0": 10.0, "xi": [-1.0, 1.0], "p0": 0.5, "psi": 0.25,
                   "t_min": 8.0, "t_max": 12.0}}
        raw["weighting"] = {"family": "power", "params": {"gamma": 2.0},
                            "p0": 0.5, "psi": 0.25}
        envelope = run_scenario(parse_config(raw))
        # band weight increments (0.1875, 0.3125) of total 0.5
        assert envelope["results"]["premium_exact"] == pytest.approx(0.25, abs=1e-12)

    def test_dt_plain_discrete_scenario(self):
        # without band metadata the premium comes from the distorted mean
        raw = copy.deepcopy(BASE)
        raw["framework"] = "dt"
        raw["distribution"] = {"family": "discrete",
                               "outcomes": [1.0, 3.0],
                               "probabilities": [0.5, 0.5]}
        raw["weighting"] = {"family": "power", "params": {"gamma": 2.0}}
        envelope = run_scenario(parse_config(raw))
        # distorted mean = 0.25*1 + 0.75*3 = 2.5, plain mean = 2
        assert envelope["results"]["premium_exact"] == pytest.approx(0.5, abs=1e-12)

    def test_shifted_scaled_scenario(self):
        envelope = run_scenario(make_config(distribution={
            "family": "shifted_scaled",
            "base": {"family": "uniform", "params": {"lo": 0.0, "hi": 1.0}},
            "loc": 0.5, "scale": 1.0}))
        assert envelope["results"]["mu"] == pytest.approx(1.0)
        assert envelope["results"]["premium_exact"] == pytest.approx(
            (13.0 / 12.0) ** 0.5 - 1.0, abs=1e-9)


class TestSweep:
    def test_single_point_matches_value(self):
        config = make_config(sweep={"axes": {"economics.phi": [1.0]}})
        columns, rows = sweep_rows(config)
        assert len(rows) == 1
        single = run_scenario(make_config())
        expected = scenario_row(single)
        for key, value in expected.items():
            assert rows[0][key] == value

    def test_lexicographic_ordering(self):
        config = make_config(sweep={"axes": {
            "economics.phi": [1.0, 2.0],
            "distribution.params.rate": [1.0, 4.0],
        }})
        columns, rows = sweep_rows(config)
        assert columns[0] == "axis:distribution.params.rate"
        assert columns[1] == "axis:economics.phi"
        combos = [(row["axis:distribution.params.rate"], row["axis:economics.phi"])
                  for row in rows]
        assert combos == [(1.0, 1.0), (1.0, 2.0), (4.0, 1.0), (4.0, 2.0)]

    def test_sigma_halving_errors_monotone(self):
        # whole-distribution axis values: shrinking spreads around mean 1
        def dist(sigma):
            return {"family": "discrete",
                    "outcomes": [1.0 - sigma, 1.0 + sigma],
                    "probabilities": [0.5, 0.5]}

        config = make_config(
            preference={"family": "power", "params": {"exponent": 1.5}},
            sweep={"axes": {"distribution": [dist(0.4), dist(0.2), dist(0.1)]}})
        _, rows = sweep_rows(config)
        scaled = [row["premium_scaled_error"] for row in rows]
        assert scaled[0] > scaled[1] > scaled[2]

    def test_bad_axis_path(self):
        config = make_config(sweep={"axes": {"distribution.params.shape": [1.0]}})
        with pytest.raises(ConfigError):
            sweep_rows(config)

    def test_quadratic_grid_has_no_bound_violations(self):
        config = make_config(sweep={"axes": {
            "preference.params.a": [-0.5, -2.0],
        }})
        _, rows = sweep_rows(config)
        for row in rows:
            assert row["bound_violated_exact"] is False
            assert row["bound_slack_exact"] >= -1e-9


class TestRendering:
    def test_envelope_is_canonical_json(self):
        envelope = run_scenario(make_config())
        text = render_envelope(envelope)
        assert text.endswith("\n")
        parsed = json.loads(text)
        assert parsed == envelope

    def test_csv_uses_lf_and_header(self):
        columns, rows = sweep_rows(make_config(
            sweep={"axes": {"economics.phi": [1.0, 2.0]}}))
        text = render_csv(columns, rows)
        lines = text.split("\n")
        assert "\r" not in text
        assert lines[0].startswith("axis:economics.phi,framework,")
        assert len([line for line in lines if line]) == 3

    def test_determinism_in_process(self):
        config = make_config()
        assert render_envelope(run_scenario(config)) == \
            render_envelope(run_scenario(config))


class TestCliProcess:
    def test_value_exit_zero_and_deterministic(self, tmp_path):
        path = write_config(tmp_path, BASE)
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        assert main(["value", "--config", path, "--out", str(out_a)]) == 0
        assert main(["value", "--config", path, "--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_value_csv_format(self, tmp_path, capsys):
        path = write_config(tmp_path, BASE)
        assert main(["value", "--config", path, "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("framework,phi,mu,")

    def test_config_error_exit_two(self, tmp_path, capsys):
        raw = copy.deepcopy(BASE)
        raw["bogus"] = 1
        path = write_config(tmp_path, raw)
        assert main(["value", "--config", path]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_missing_file_exit_two(self, capsys):
        assert main(["value", "--config", "/nonexistent/config.json"]) == 2

    def test_computation_error_exit_one(self, tmp_path, capsys):
        # utility diverges at zero while the model carries mass there, so
        # quadrature cannot converge
        raw = copy.deepcopy(BASE)
        raw["distribution"] = {"family": "uniform", "params": {"lo": 0.0, "hi": 1.0}}
        raw["preference"] = {"family": "constant_prudence",
                             "params": {"prudence": 3.0}}
        raw["method"] = "exact"
        path = write_config(tmp_path, raw)
        assert main(["value", "--config", path]) == 1
        assert "computation error" in capsys.readouterr().err

    def test_classify_output(self, tmp_path, capsys):
        raw = copy.deepcopy(BASE)
        raw["preference"] = {"family": "power", "params": {"exponent": 1.5}}
        path = write_config(tmp_path, raw)
        assert main(["classify", "--config", path]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["results"]["rel_risk_aversion"] == pytest.approx(0.5)
        assert payload["results"]["mean_vs_variance"] == "mean-priority"

    def test_dualmoments_output(self, tmp_path, capsys):
        path = write_config(tmp_path, BASE)
        assert main(["dualmoments", "--config", path, "--seed", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["results"]["m2_dual_mean"] == pytest.approx(0.5, abs=1e-8)
        assert payload["results"]["mc_within_3se"] is True

    def test_sweep_csv_deterministic(self, tmp_path):
        raw = copy.deepcopy(BASE)
        raw["sweep"] = {"axes": {"distribution.params.rate": [0.5, 1.0, 2.0]}}
        raw["output"] = {"format": "csv", "path": None}
        path = write_config(tmp_path, raw)
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        assert main(["sweep", "--config", path, "--out", str(out_a)]) == 0
        assert main(["sweep", "--config", path, "--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        first_line = out_a.read_text().splitlines()[0]
        assert first_line.startswith("axis:distribution.params.rate,")

    def test_sweep_json_envelope(self, tmp_path, capsys):
        raw = copy.deepcopy(BASE)
        raw["sweep"] = {"axes": {"economics.phi": [1.0, 2.0]}}
        path = write_config(tmp_path, raw)
        assert main(["sweep", "--config", path, "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["columns"][0] == "axis:economics.phi"
        assert len(payload["rows"]) == 2
        assert payload["rows"][0]["rho_exact"] == pytest.approx(0.5, abs=1e-6)

    def test_dt_continuous_scenario(self, tmp_path, capsys):
        raw = copy.deepcopy(BASE)
        raw["framework"] = "dt"
        raw["weighting"] = {"family": "inverse_s", "params": {"gamma": 0.7}}
        raw["method"] = "both"
        path = write_config(tmp_path, raw)
        assert main(["value", "--config", path]) == 0
        payload = json.loads(capsys.readouterr().out)
        results = payload["results"]
        # overweighting the long-time tail makes variability costly
        assert results["premium_exact"] > 0
        assert results["rho_exact"] == pytest.approx(
            results["premium_exact"] / results["mu"], abs=1e-12)

    def test_verify_reports_only_known_impossible_check(self, capsys):
        # the dual-theory scaling check cannot pass (both premium forms are
        # linear in the outcome scale); everything else must pass
        status = main(["verify", "--profile", "quick"])
        out = capsys.readouterr().out
        failures = [line for line in out.splitlines() if line.startswith("FAIL")]
        assert status == 1
        assert len(failures) == 1
        assert "A6-dt-approx-scaling" in failures[0]

    def test_verify_negative_control(self, capsys):
        status = main(["verify", "--profile", "quick",
                       "--inject-tolerance-fault"])
        out = capsys.readouterr().out
        failures = [line for line in out.splitlines() if line.startswith("FAIL")]
        assert status == 1
        assert len(failures) > 3
