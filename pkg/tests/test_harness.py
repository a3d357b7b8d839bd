"""Tests for the Monte Carlo harness."""
import json
import math

import pytest

from sketchnorm.errors import ParameterError
from sketchnorm.harness.experiments import (
    HarnessConfig,
    TrialStats,
    default_audit_triples,
    end_to_end_experiment,
    iteration_audit,
    merge,
    overlap_experiment,
    power_experiment,
    run_harness,
    sketch_experiment,
)


class TestTrialStats:
    def test_threshold(self):
        stats = TrialStats("sketch", trials=200, successes=150, bound=0.8)
        assert stats.empirical_rate == 0.75
        assert stats.threshold == pytest.approx(0.8 - 3 * math.sqrt(0.8 * 0.2 / 200))
        assert stats.passed

    def test_fails_below_threshold(self):
        assert not TrialStats("sketch", trials=200, successes=120, bound=0.8).passed

    def test_zero_slack_requires_bound(self):
        assert TrialStats("audit", trials=5, successes=5, bound=1.0, slack=0.0).passed
        assert not TrialStats("audit", trials=5, successes=4, bound=1.0, slack=0.0).passed

    def test_invalid_counts(self):
        with pytest.raises(ParameterError):
            TrialStats("x", trials=10, successes=11, bound=0.5)
        with pytest.raises(ParameterError):
            TrialStats("x", trials=0, successes=0, bound=0.5)

    def test_merge(self):
        merged = merge(
            TrialStats("overlap", 100, 90, bound=0.7), TrialStats("overlap", 50, 50, bound=0.7)
        )
        assert (merged.trials, merged.successes) == (150, 140)

    def test_merge_rejects_mismatch(self):
        with pytest.raises(ParameterError):
            merge(TrialStats("overlap", 10, 9, bound=0.7), TrialStats("sketch", 10, 9, bound=0.7))


class TestOverlap:
    def test_bound_value(self):
        stats = overlap_experiment(50, 1e-3, 10_000, seed=1)
        assert stats.bound == pytest.approx(1 - (2 / math.pi + 2) * 0.1)
        assert stats.bound == pytest.approx(0.7363, abs=1e-4)
        assert stats.passed

    def test_one_dimension_always_succeeds(self):
        stats = overlap_experiment(1, 1e-2, 10_000, seed=2)
        assert stats.empirical_rate == 1.0

    def test_deterministic(self):
        assert overlap_experiment(5, 1e-2, 12_345, seed=3) == overlap_experiment(5, 1e-2, 12_345, seed=3)

    def test_needs_enough_trials(self):
        with pytest.raises(ParameterError, match="at least 10000"):
            overlap_experiment(5, 1e-2, 999, seed=0)


class TestMatrixExperiments:
    def test_sketch_gaussian(self):
        stats = sketch_experiment("gaussian", 10, 0.5, 0.2, trials=100, seed=4)
        assert stats.params["r"] == 737
        assert stats.params["n"] == 100
        assert stats.passed

    def test_sketch_dominant_row(self):
        stats = sketch_experiment("single_dominant_row", 6, 0.5, 0.2, trials=100, seed=5)
        assert stats.passed

    def test_sketch_oversampling_helps(self):
        stats = sketch_experiment("gaussian", 6, 0.5, 0.2, trials=100, seed=6, oversample=4.0)
        assert stats.empirical_rate >= 0.99

    def test_sketch_needs_enough_trials(self):
        with pytest.raises(ParameterError):
            sketch_experiment("gaussian", 10, 0.5, 0.2, trials=20, seed=0)

    def test_power(self):
        stats = power_experiment("gaussian", 60, 8, 0.2, 0.1, trials=50, seed=7)
        assert stats.passed
        assert stats.params["iterations"] > 0

    @pytest.mark.parametrize("family", ["near_flat", "boundary_gap", "power_law", "sparse_gaussian"])
    def test_end_to_end_families(self, family):
        stats = end_to_end_experiment(family, 60, 8, 0.1, 0.05, trials=40, seed=8)
        assert stats.passed

    def test_end_to_end_sketch_method(self):
        stats = end_to_end_experiment("gaussian", 400, 4, 0.5, 0.2, trials=30, seed=9, method="sketch")
        assert stats.params["methods_used"] == ["sketch"]
        assert stats.passed


class TestAudit:
    def test_default_triples(self):
        assert len(default_audit_triples()) == 20

    def test_audit_passes(self):
        stats = iteration_audit()
        assert stats.passed
        assert stats.params["failures"] == []


class TestRunHarness:
    def test_unknown_experiment(self):
        with pytest.raises(ParameterError):
            HarnessConfig(experiment="nonsense")

    @pytest.mark.parametrize("alias,name", [("lemma1", "sketch"), ("lemma3", "overlap"), ("theorem1", "end_to_end")])
    def test_aliases(self, alias, name):
        assert HarnessConfig(experiment=alias).experiment == name

    @pytest.mark.parametrize("field", ["trials", "overlap_trials"])
    def test_rejects_non_positive_trials(self, field):
        with pytest.raises(ParameterError, match=f"{field} must be at least 1"):
            HarnessConfig(experiment="all", **{field: 0})

    def test_audit_report_is_json(self):
        report = run_harness(HarnessConfig(experiment="audit"))
        assert report["passed"]
        assert json.loads(json.dumps(report))["experiments"][0]["name"] == "audit"

    def test_overlap_grid(self):
        report = run_harness(HarnessConfig(experiment="overlap", overlap_trials=10_000, seed=3))
        assert len(report["experiments"]) == 6
        assert report["passed"]

    def test_deterministic(self):
        config = HarnessConfig(experiment="sketch", trials=100, seed=11)
        assert run_harness(config) == run_harness(config)


@pytest.mark.slow
def test_full_harness_passes():
    """Every experiment at its default size: 200-400 trials, 10^5 per overlap cell."""
    report = run_harness(HarnessConfig(experiment="all", seed=2024))
    failed = [e["name"] for e in report["experiments"] if not e["passed"]]
    assert report["passed"], failed
