"""
Tests for configuration handling and the subcommand runners
"""

import json
import numpy as np
import pytest
from pandas import DataFrame
from lrdensity.efficiency.mindist import Partition, md_estimate
from lrdensity.errors import ValidationError
from lrdensity.estimation.edf import edf_at_points
from lrdensity.estimation.fit_local import ci_pointwise, fit_point
from lrdensity.output import load_table
from lrdensity.pipeline import (
    EstimatorParameters, RunConfig, build_fit_config, load_configuration, load_sample, run, run_fit,
    set_configuration, set_estimator_parameters, set_simulation_parameters)


@pytest.fixture(name="uniform_csv")
def fixture_uniform_csv(tmp_path):
    """
    CSV with a U(0, 1) outcome, a group and an instrument column
    """
    rng = np.random.default_rng(0)
    n = 2000
    d = (rng.random(n) < 0.5).astype(int)
    t = d * (rng.random(n) < 0.7).astype(int)
    path = tmp_path / "sample.csv"
    DataFrame({"x": rng.random(n), "t": t, "d": d, "age": rng.normal(40, 5, n)}).to_csv(path, index=False)
    return str(path)


@pytest.fixture(name="normal_csv")
def fixture_normal_csv(tmp_path):
    """
    CSV with a standard normal outcome
    """
    path = tmp_path / "normal.csv"
    DataFrame({"x": np.random.default_rng(5).normal(size=2000)}).to_csv(path, index=False)
    return str(path)


def test_defaults_are_valid():
    """
    Packaged configuration resolves without user input
    """
    run_cfg = set_configuration(load_configuration())
    assert isinstance(run_cfg, RunConfig)
    assert run_cfg.estimator.h == "rot"
    assert run_cfg.estimator.kernel == "triangular"
    assert run_cfg.band.draws == 2000
    assert run_cfg.columns.x == "x"


def test_user_file_is_merged(tmp_path):
    """
    User sections update the defaults key by key
    """
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"estimator": {"p": 3}, "seed": 5}), encoding="utf-8")
    merged = load_configuration(str(path))
    assert merged["estimator"]["p"] == 3
    assert merged["estimator"]["kernel"] == "triangular"
    assert merged["seed"] == 5
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_configuration(str(bad))
    with pytest.raises(ValidationError):
        load_configuration(str(tmp_path / "absent.json"))


@pytest.mark.parametrize("cfg", [
    {"colour": 1},
    {"estimator": {"bandwidth": 0.1}},
    {"estimator": {"h": -1.0}},
    {"estimator": {"h": "silverman"}},
    {"estimator": {"p": 2, "q": 2}},
    {"estimator": {"method": "l2"}},
    {"estimator": {"method": "spline"}},
    {"band": {"draws": 10}},
    {"weights": {"scheme": "complier", "which": 1}},
    {"simulation": {"dgp": {"kind": "gaussian", "mean": 1}}},
    {"efficiency": {"table": "other"}},
    {"command": "plot"},
    {"seed": -3},
])
def test_invalid_configurations(cfg):
    """
    Unknown keys and out-of-range values are rejected before any work
    """
    with pytest.raises(ValidationError):
        set_configuration(cfg)


def test_build_fit_config():
    """
    Redundant regressor parity and the inference basis follow the settings
    """
    estimator = set_estimator_parameters({"p": 1, "q": 2, "h": 0.3, "deriv": 0, "redundant_j": 2})
    fit_cfg = build_fit_config(estimator)
    assert fit_cfg.basis.redundant.degree == 5
    assert fit_cfg.inference_basis.p == 2
    assert fit_cfg.h == 0.3
    with pytest.raises(ValidationError):
        build_fit_config(EstimatorParameters())


def test_simulation_parameters():
    """
    DGP fields are checked by name
    """
    simulation = set_simulation_parameters({"dgp": {"kind": "uniform", "upper": 2.0}, "n": 50})
    assert simulation.dgp["upper"] == 2.0
    with pytest.raises(ValidationError):
        set_simulation_parameters({"experiment": "bootstrap"})


def test_fit_distribution_function(uniform_csv, tmp_path):
    """
    Distribution function estimates increase along the grid
    """
    run_cfg = set_configuration({"command": "fit", "input_path": uniform_csv, "store_path": str(tmp_path),
                                 "estimator": {"deriv": -1, "grid": np.linspace(0.1, 0.9, 9).tolist()}})
    table, sidecar = load_table(run(run_cfg))
    assert list(table.columns) == ["x", "h", "n_local", "est", "se", "ci_lo", "ci_hi"]
    assert np.all(np.diff(table["est"]) > 0)
    assert table["est"].iloc[4] == pytest.approx(0.5, abs=0.05)
    assert sidecar["command"] == "fit"
    assert sidecar["diagnostics"]["n"] == 2000


def test_band_and_reweighted_fit(uniform_csv, tmp_path):
    """
    Band over a grid, and a subgroup density from the group column
    """
    base = {"input_path": uniform_csv, "store_path": str(tmp_path),
            "estimator": {"h": 0.2, "grid": [0.3, 0.5, 0.7]}}
    band, sidecar = load_table(run(set_configuration({**base, "command": "band", "band": {"draws": 500}})))
    assert np.all(band["band_lo"] <= band["ci_lo"] + 1e-12)
    assert sidecar["diagnostics"]["quantile"] >= 1.95
    subgroup = set_configuration({**base, "command": "fit", "output_name": "treated",
                                  "columns": {"t": "t"}, "weights": {"scheme": "subgroup", "which": 1}})
    table, _ = load_table(run(subgroup))
    assert np.all(np.abs(table["est"] - 1.0) < 0.3)


def test_l2_and_nd_methods(uniform_csv, tmp_path):
    """
    Alternative estimators over the same grid
    """
    for method in ("l2", "nd"):
        run_cfg = set_configuration({"command": "fit", "input_path": uniform_csv, "store_path": str(tmp_path),
                                     "output_name": method,
                                     "estimator": {"method": method, "h": 0.2, "support": [0.0, 1.0],
                                                   "grid": [0.05, 0.5, 0.95]}})
        table, _ = load_table(run(run_cfg))
        assert np.all(np.abs(table["est"] - 1.0) < 0.3)


def test_efficiency_table(tmp_path):
    """
    Variance comparison table has 32 rows
    """
    table, _ = load_table(run(set_configuration({"command": "efficiency", "store_path": str(tmp_path)})))
    assert len(table) == 32
    sweep = set_configuration({"command": "efficiency", "store_path": str(tmp_path), "output_name": "sweep",
                               "efficiency": {"table": "sweep", "j_values": [1, 2]}})
    table, _ = load_table(run(sweep))
    assert table["var_md"].tolist() == pytest.approx([15 / 28, 19 / 36], rel=1e-6)


def test_weights_and_ivcheck(uniform_csv, tmp_path):
    """
    IV cell weights and the validity diagnostic from the panel columns
    """
    base = {"input_path": uniform_csv, "store_path": str(tmp_path), "columns": {"t": "t", "d": "d"}}
    table, sidecar = load_table(run(set_configuration({**base, "command": "weights",
                                                       "weights": {"scheme": "iv"}})))
    assert {"w_00", "w_10"} <= set(table.columns)
    assert np.mean(table["w_00"]) == pytest.approx(1.0)
    assert sidecar["diagnostics"]["scale_00"] == 1.0
    counterfactual = set_configuration({**base, "command": "weights", "output_name": "cf",
                                        "columns": {"t": "t", "z": ["age"]},
                                        "weights": {"scheme": "counterfactual"}})
    table, _ = load_table(run(counterfactual))
    assert np.all(table.loc[table["t"] == 0, "weight"] == 0)
    iv = set_configuration({**base, "command": "ivcheck", "estimator": {"h": 0.2, "grid": [0.3, 0.5, 0.7]},
                            "band": {"draws": 500}})
    table, sidecar = load_table(run(iv))
    assert "curve_10" in table.columns
    assert sidecar["diagnostics"]["violated"] is False


def test_small_simulation(tmp_path):
    """
    A few pointwise replications end up in the details table
    """
    run_cfg = set_configuration({"command": "simulate", "store_path": str(tmp_path), "seed": 4,
                                 "simulation": {"n": 300, "reps": 5, "x": 0.0},
                                 "estimator": {"h": 0.5}})
    table, sidecar = load_table(run(run_cfg))
    assert len(table) == 5
    assert sidecar["seed"] == 4
    assert 0.0 <= sidecar["diagnostics"]["coverage"] <= 1.0
    with pytest.raises(ValidationError):
        run(set_configuration({"command": "simulate", "store_path": str(tmp_path),
                               "simulation": {"experiment": "boundary"}}))
    with pytest.raises(ValidationError):
        run(set_configuration({"command": "fit", "store_path": str(tmp_path)}))


def test_fit_with_redundant_regressor_reports_minimum_distance(normal_csv, tmp_path):
    """
    Estimates and standard errors are those of the minimum distance estimator
    """
    base = {"command": "fit", "input_path": normal_csv, "store_path": str(tmp_path),
            "estimator": {"p": 1, "h": 0.5, "grid": [0.0, 0.5]}}
    long_cfg = set_configuration({**base, "estimator": {**base["estimator"], "redundant_j": 2}})
    table, _ = run_fit(long_cfg)
    sample = load_sample(long_cfg)
    fit_cfg = build_fit_config(long_cfg.estimator, sample)
    part = Partition.for_basis(fit_cfg.basis)
    position = part.idx1.index(fit_cfg.index)
    edf = edf_at_points(sample)
    for k, x in enumerate([0.0, 0.5]):
        fit = fit_point(sample, edf, fit_cfg, x)
        estimate = md_estimate(fit, part)
        assert table["est"].iloc[k] == pytest.approx(estimate.theta[position], rel=1e-10)
        assert table["se"].iloc[k] == pytest.approx(np.sqrt(estimate.variance(position)), rel=1e-10)
        assert table["ci_lo"].iloc[k] < table["est"].iloc[k] < table["ci_hi"].iloc[k]
        assert table["se"].iloc[k] <= ci_pointwise(fit, 0, 0.05).se
        assert table["est"].iloc[k] != pytest.approx(ci_pointwise(fit, 0, 0.05).estimate, rel=1e-8)


def test_fit_matrices_in_sidecar(uniform_csv, tmp_path):
    """
    Per-point Gram, sigma and omega are written on request
    """
    base = {"command": "fit", "input_path": uniform_csv, "store_path": str(tmp_path),
            "estimator": {"p": 2, "h": 0.2, "grid": [0.3, 0.5]}}
    _, sidecar = load_table(run(set_configuration({**base, "matrices": True})))
    matrices = sidecar["diagnostics"]["matrices"]
    assert sorted(matrices) == ["0.3", "0.5"]
    for point in matrices.values():
        gamma, omega = np.array(point["gamma"]), np.array(point["omega"])
        assert gamma.shape == (3, 3)
        assert np.allclose(gamma, gamma.T)
        assert np.allclose(omega, omega.T)
        assert np.array(point["sigma"]).shape == (3, 3)
    _, sidecar = load_table(run(set_configuration({**base, "output_name": "plain"})))
    assert "matrices" not in sidecar["diagnostics"]
    with pytest.raises(ValidationError):
        run_fit(set_configuration({**base, "matrices": True,
                                   "estimator": {"method": "nd", "support": [0.0, 1.0], "grid": [0.5]}}))


def test_threads_do_not_change_fits(uniform_csv, tmp_path):
    """
    Thread count leaves every method's table unchanged
    """
    for method in ("local", "l2", "nd"):
        base = {"command": "fit", "input_path": uniform_csv, "store_path": str(tmp_path),
                "estimator": {"method": method, "h": 0.2, "support": [0.0, 1.0],
                              "grid": np.linspace(0.1, 0.9, 9).tolist()}}
        single, _ = run_fit(set_configuration(base))
        pooled, _ = run_fit(set_configuration({**base, "threads": 4}))
        assert single.equals(pooled)
