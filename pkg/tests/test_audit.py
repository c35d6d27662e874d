"""Privacy audits: distribution equality, controls, power guards."""

import pytest

from pruw.audit import (
    audit_positions,
    audit_query,
    audit_update,
    default_audit_suite,
)
from pruw.errors import ConfigError, InconclusiveError

SAMPLES = 30_000     # unit-test scale; the acceptance suite runs the full 1e5
THRESH = 0.05        # loosened to stay above the sampling floor at this scale


class TestQueryAudit:
    def test_theta_hypotheses_indistinguishable(self):
        res = audit_query("basic", 1, 2, SAMPLES, q=5, seed=1, threshold=THRESH)
        assert res.passed
        assert res.value < res.threshold

    def test_random_scheme_query(self):
        res = audit_query("random", 1, 2, SAMPLES, q=5, seed=2, threshold=THRESH)
        assert res.passed

    def test_projection_set_documented(self):
        res = audit_query("topr", 1, 2, SAMPLES, q=5, seed=3, threshold=THRESH)
        names = set(res.detail["projections"])
        assert "coord[1]" in names
        assert sum(1 for n in names if n.startswith("pair")) == 10

    def test_control_fails(self):
        res = audit_query("basic", 1, 2, SAMPLES, q=5, seed=1, disable_noise=True, threshold=THRESH)
        assert not res.passed
        assert res.value > 0.9

    def test_large_field_rejected(self):
        with pytest.raises(ConfigError):
            audit_query("basic", 1, 2, SAMPLES, q=13)

    def test_insufficient_samples_inconclusive(self):
        with pytest.raises(InconclusiveError):
            audit_query("basic", 1, 2, 500, q=5)


class TestUpdateAudit:
    def test_value_hypotheses_indistinguishable(self):
        res = audit_update(1, 3, SAMPLES, q=5, seed=4)
        assert res.passed

    def test_control_fails(self):
        res = audit_update(1, 3, SAMPLES, q=5, seed=4, disable_noise=True)
        assert not res.passed


class TestPositionAudit:
    def test_uniform_over_subsets(self):
        res = audit_positions([1, 4], [2, 3], 5, SAMPLES, seed=5)
        assert res.passed
        assert res.detail["subsets"] == 10

    def test_control_fails(self):
        res = audit_positions([1, 4], [2, 3], 5, SAMPLES, seed=5, disable_noise=True)
        assert not res.passed

    def test_too_few_samples(self):
        with pytest.raises(InconclusiveError):
            audit_positions([1, 4], [2, 3], 5, 30, seed=5)

    def test_size_mismatch(self):
        with pytest.raises(ConfigError):
            audit_positions([1], [2, 3], 5, SAMPLES)


class TestSuite:
    def test_basic_suite_passes(self):
        results = default_audit_suite("basic", samples=SAMPLES, seed=6, tvd_threshold=THRESH)
        assert len(results) == 2
        assert all(r.passed for r in results)

    def test_topr_suite_includes_positions(self):
        results = default_audit_suite("topr", samples=SAMPLES, seed=6, tvd_threshold=THRESH)
        assert [r.statistic for r in results] == [
            "query-tvd[topr]", "update-tvd", "positions-chi2",
        ]
        assert all(r.passed for r in results)

    def test_control_fails_every_audit(self):
        for scheme in ("basic", "topr", "random"):
            results = default_audit_suite(scheme, samples=SAMPLES, seed=6,
                                          disable_noise=True, tvd_threshold=THRESH)
            assert all(not r.passed for r in results)

    def test_results_serialize(self):
        res = default_audit_suite("basic", samples=SAMPLES, seed=7, tvd_threshold=THRESH)[0]
        d = res.as_dict()
        assert d["passed"] and "projections" in d["detail"]
