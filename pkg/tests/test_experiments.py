"""
Tests for the Monte Carlo experiments
"""

import numpy as np
import pytest
from lrdensity.errors import ValidationError
from lrdensity.estimation.basis_kernel import BasisSpec, KernelSpec
from lrdensity.estimation.fit_local import FitConfig
from lrdensity.inference.uniform_band import BandConfig
from lrdensity.simulation.dgp import DgpSpec
from lrdensity.simulation.experiments import (
    linearized_contributions, linearized_process, process_gap, run_boundary_experiment,
    run_efficiency, run_pointwise_coverage, run_process_check, run_uniform_coverage)

GAUSSIAN = DgpSpec("gaussian")
UNIFORM = DgpSpec("uniform")
CFG = FitConfig(KernelSpec("triangular"), BasisSpec(2), 0.5, 0)


def test_replications_are_reproducible():
    """
    Same seed, same details, whatever the number of workers
    """
    first = run_pointwise_coverage(GAUSSIAN, 300, 6, CFG, 0.0, 0.05, seed=3)
    second = run_pointwise_coverage(GAUSSIAN, 300, 6, CFG, 0.0, 0.05, seed=3, workers=4)
    assert first.details.equals(second.details)
    other = run_pointwise_coverage(GAUSSIAN, 300, 6, CFG, 0.0, 0.05, seed=4)
    assert not np.allclose(first.details["est"], other.details["est"])


def test_coverage_follows_the_level():
    """
    alpha = 1 collapses the interval; a smaller alpha never covers less
    """
    assert run_pointwise_coverage(GAUSSIAN, 300, 10, CFG, 0.0, 1.0, seed=1).coverage == 0.0
    wide = run_pointwise_coverage(GAUSSIAN, 300, 20, CFG, 0.0, 0.05, seed=1)
    narrow = run_pointwise_coverage(GAUSSIAN, 300, 20, CFG, 0.0, 0.1, seed=1)
    assert wide.coverage >= narrow.coverage
    assert wide.reps == 20
    assert wide.failures == 0


def test_uniform_band_contains_pointwise_intervals():
    """
    Band half-widths are never shorter than the pointwise ones
    """
    band_cfg = BandConfig(grid=np.linspace(0.2, 0.8, 4), draws=300)
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 0.3, 0)
    result = run_uniform_coverage(UNIFORM, 400, 4, cfg, band_cfg, seed=2)
    assert result.details["band_contains_ci"].all()
    assert np.all(result.details["quantile"] >= 1.95)
    with pytest.raises(ValidationError):
        run_uniform_coverage(UNIFORM, 400, 4, cfg, BandConfig(), seed=2)


def test_efficiency_constants():
    """
    Asymptotic ratio of the j = 2 minimum distance estimator
    """
    table = run_efficiency(GAUSSIAN, 500, 3, 1, 0, [1, 2], 0.0, seed=0, h=0.5)
    assert table["estimator"].tolist() == ["base", "md", "md"]
    assert table["asy_ratio"].iloc[0] == 1.0
    assert table["asy_ratio"].iloc[1] == pytest.approx(15 / 28 / 0.6, abs=1e-3)
    assert table["asy_ratio"].iloc[2] == pytest.approx(0.8796, abs=1e-3)


def test_linearized_contributions_are_standardised():
    """
    Mean zero and unit variance under the truth
    """
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 0.2, 0)
    process = linearized_process(UNIFORM, cfg, 0.5)
    values = UNIFORM.sample(20000, np.random.default_rng(0))
    contributions = linearized_contributions(UNIFORM, cfg, process, values)
    assert abs(np.mean(contributions)) < 0.03
    assert np.var(contributions) == pytest.approx(1.0, rel=0.05)


def test_boundary_experiment_rejects_distribution_targets():
    """
    Only density estimates are compared with the kernel density estimator
    """
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 0.3, -1)
    with pytest.raises(ValidationError):
        run_boundary_experiment(DgpSpec("exponential"), 200, 3, cfg, 0.0, seed=0)


@pytest.mark.slow
def test_pointwise_coverage_near_nominal():
    """
    Robust bias-corrected intervals with the rule-of-thumb bandwidth
    """
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 1.0, 0, inference_basis=BasisSpec(3))
    result = run_pointwise_coverage(GAUSSIAN, 1000, 1000, cfg, 0.0, 0.05, seed=0, rot=True, workers=4)
    assert 0.92 <= result.coverage <= 0.975


@pytest.mark.slow
def test_boundary_adaptivity():
    """
    The kernel density estimator halves at zero, the local regression one does not
    """
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 0.2, 0)
    table = run_boundary_experiment(DgpSpec("exponential"), 2000, 500, cfg, 0.0, seed=0, workers=4)
    local, plain = table.set_index("estimator")["mean"][["local_regression", "kde"]]
    assert 0.4 <= plain <= 0.6
    assert local == pytest.approx(1.0, abs=0.1)


@pytest.mark.slow
def test_uniform_coverage_near_nominal():
    """
    Simultaneous coverage over thirty points
    """
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 1.0, 0, inference_basis=BasisSpec(3))
    band_cfg = BandConfig(grid=np.linspace(-1.0, 1.0, 30), draws=2000)
    result = run_uniform_coverage(GAUSSIAN, 2000, 400, cfg, band_cfg, seed=0, rot=True, workers=4)
    assert result.coverage >= 0.90
    assert result.details["band_contains_ci"].all()


@pytest.mark.slow
def test_minimum_distance_variance_reduction():
    """
    Monte Carlo variance ratio matches the asymptotic one
    """
    table = run_efficiency(GAUSSIAN, 2000, 1000, 1, 0, [2], 0.0, seed=0, h=0.5, workers=4)
    assert table["mc_ratio"].iloc[1] == pytest.approx(0.88, rel=0.15)


@pytest.mark.slow
def test_process_gap_shrinks():
    """
    Feasible and linearised statistics get closer as n grows
    """
    cfg = FitConfig(KernelSpec("triangular"), BasisSpec(2), 0.2, 0)
    grid = [0.3, 0.5, 0.7]
    small = np.mean([process_gap(UNIFORM, 500, cfg, grid, seed=0, rep=i) for i in range(5)])
    large = np.mean([process_gap(UNIFORM, 50000, cfg, grid, seed=0, rep=i) for i in range(5)])
    assert large < small
    table = run_process_check(UNIFORM, 2000, 200, cfg, 0.5, seed=1, workers=4)
    assert np.var(table["linearized"]) == pytest.approx(1.0, rel=0.25)
