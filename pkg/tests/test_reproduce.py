import pytest

import cli.reproduce as reproduce
from cli.reproduce import (
    PRINTED,
    SCAN_RANGE,
    Classification,
    compare,
    format_report,
    reproduce_paper,
    scan_q2,
)
from core.errors import NoCrossing


@pytest.fixture(scope="module")
def report():
    return reproduce_paper(scan=False)


class TestCompare:
    def test_match_within_tolerance(self):
        assert compare("s", "q", 2.0, 2.001).classification == Classification.MATCH
        assert compare("s", "q", 2.0, 2.01).classification == Classification.MISMATCH

    def test_zero_printed_value(self):
        row = compare("s", "q", 0.0, 5e-4)
        assert row.rel_diff == pytest.approx(5e-4)
        assert row.classification == Classification.MATCH


class TestReport:
    def test_every_published_number_has_a_row(self, report):
        expected = {name for values in PRINTED.values() for name in values}
        assert report.quantities == expected
        assert len(report.rows) == sum(len(values) for values in PRINTED.values())

    def test_equilibrium_rows(self, report):
        assert report.row("equilibrium", "y0").classification == Classification.MATCH
        x0 = report.row("equilibrium", "x0")
        assert x0.classification == Classification.MISMATCH
        assert x0.artifact == pytest.approx(0.178571, abs=1e-6)

    def test_crossing_rows_carry_residuals(self, report):
        for scenario in ("dd-tau2-0.01", "dw-q2-0.1-a", "dw-q2-0.1-b"):
            row = report.row(scenario, "omega0" if scenario.startswith("dd") else "omega01")
            assert row.residual < 1e-9
            assert row.artifact is not None

    def test_published_frequencies_are_not_reproduced(self, report):
        assert report.row("dd-tau2-0.01", "omega0").classification == Classification.MISMATCH
        assert report.row("dw-q2-0.1-a", "omega01").classification == Classification.MISMATCH

    def test_both_weak_kernel_rows_use_the_same_crossing(self, report):
        first = report.row("dw-q2-0.1-a", "omega01").artifact
        second = report.row("dw-q2-0.1-b", "omega01").artifact
        assert first == second

    def test_audit(self, report):
        names = {check.name for check in report.audit}
        assert {"dd_quartic_frequency", "dd_lambda_prime_quotient", "dw_sextic_frequency", "dw_arctan_lag"} <= names
        checks = {check.name: check for check in report.audit}
        assert checks["dd_lambda_prime_quotient"].match
        assert not checks["dd_quartic_frequency"].match
        assert not checks["dw_lambda_prime_quotient"].match

    def test_failed_scenario_is_not_applicable(self, monkeypatch):
        def no_crossing(p, q2, k_max=None):
            raise NoCrossing("forced", {"q2": q2})

        monkeypatch.setattr(reproduce, "hopf_point_dw", no_crossing)
        partial = reproduce_paper(scan=False)
        row = partial.row("dw-q2-0.1-a", "mu21")
        assert row.classification == Classification.NOT_APPLICABLE
        assert row.reason == "NoCrossing: forced"
        assert partial.row("dd-tau2-0.01", "omega0").artifact is not None

    def test_format(self, report):
        text = format_report(report)
        assert "x0" in text
        assert "mismatch" in text
        assert "formula audit:" in text


class TestQ2Scan:
    def test_coarse_scan(self, worked_params):
        target = PRINTED["dw-q2-0.1-b"]
        result = scan_q2(worked_params, target["omega01"], target["tau11"], samples=8)
        assert result.samples == 8
        assert SCAN_RANGE[0] <= result.best_q2 <= SCAN_RANGE[1]
        assert result.rel_diff_omega == pytest.approx(abs(result.omega - target["omega01"]) / target["omega01"])
        assert result.matched == (result.rel_diff_omega <= 1e-3 and result.rel_diff_tau <= 1e-3)
