"""The invariant-check registry: coverage, filtering, and reporting."""

import numpy as np
import pytest

from contactnh.checks import (
    CHECKS,
    CRITERION2_NAMES,
    CheckReport,
    run_checks,
    timed_run_checks,
)

ALL_MODELS = [
    "damped_oscillator",
    "free_particle",
    "sledge",
    "knife_edge",
    "holonomic_flat",
    "exact_differential",
]


@pytest.fixture(params=ALL_MODELS)
def model(request):
    return request.getfixturevalue(request.param)


class TestRegistry:
    def test_names_unique(self):
        names = [row.name for row in CHECKS]
        assert len(names) == len(set(names))

    def test_criterion2_subset_exists(self):
        names = {row.name for row in CHECKS}
        assert set(CRITERION2_NAMES) <= names
        assert len(CRITERION2_NAMES) == 12

    def test_tolerances_positive(self):
        assert all(row.tolerance > 0 for row in CHECKS)


class TestRunChecks:
    def test_every_model_is_clean(self, model):
        report = run_checks(model, n_states=25, seed=42)
        failed = [
            f"{r.name}: {r.max_residual:.3e} > {r.tolerance:g}"
            for r in report.failures
        ]
        assert report.all_passed, failed

    def test_applicability_filter(self, free_particle, sledge):
        free_names = {
            r.name for r in run_checks(free_particle, n_states=2).results
        }
        constrained_names = {
            r.name for r in run_checks(sledge, n_states=2).results
        }
        assert "k0-reduction" in free_names
        assert "k0-reduction" not in constrained_names
        assert "eta-Z" in constrained_names
        assert "eta-Z" not in free_names

    def test_names_filter(self, sledge):
        report = run_checks(sledge, n_states=3, names=CRITERION2_NAMES)
        # selection honors the filter; ordering stays registry order
        assert {r.name for r in report.results} == set(CRITERION2_NAMES)
        registry_order = [row.name for row in CHECKS]
        reported = [r.name for r in report.results]
        assert reported == [n for n in registry_order if n in reported]

    def test_unknown_name_rejected(self, sledge):
        with pytest.raises(ValueError, match="unknown check names"):
            run_checks(sledge, n_states=2, names=("eta-reeb", "vibes"))
        with pytest.raises(ValueError, match="unknown check names"):
            run_checks(sledge, n_states=2, tolerances={"vibes": 1.0})

    def test_tolerance_override_changes_verdict(self, sledge):
        report = run_checks(
            sledge, n_states=5, tolerances={"flat-sharp": 1e-30}
        )
        assert not report.all_passed
        (failure,) = [r for r in report.failures]
        assert failure.name == "flat-sharp"
        assert failure.worst_state.shape == (7,)

    def test_deterministic(self, sledge):
        a = run_checks(sledge, n_states=5, seed=7)
        b = run_checks(sledge, n_states=5, seed=7)
        for ra, rb in zip(a.results, b.results):
            assert ra.name == rb.name
            assert ra.max_residual == rb.max_residual

    def test_seed_matters(self, sledge):
        a = run_checks(sledge, n_states=5, seed=7)
        b = run_checks(sledge, n_states=5, seed=8)
        assert any(
            ra.max_residual != rb.max_residual
            for ra, rb in zip(a.results, b.results)
            if ra.max_residual or rb.max_residual
        )

    def test_report_shape(self, sledge):
        report = run_checks(sledge, n_states=3)
        assert isinstance(report, CheckReport)
        assert report.model_name == "sledge"
        assert report.seed == 42
        for result in report.results:
            assert result.n_states >= 1
            assert np.isfinite(result.max_residual)

    def test_max_states_cap(self, sledge):
        report = run_checks(sledge, n_states=10)
        by_name = {r.name: r for r in report.results}
        assert by_name["complement-tangency"].n_states == 2
        assert by_name["eta-reeb"].n_states == 10


class TestTimedRunChecks:
    def test_returns_elapsed(self, damped_oscillator):
        report, seconds = timed_run_checks(damped_oscillator, n_states=3)
        assert report.all_passed
        assert seconds > 0.0
