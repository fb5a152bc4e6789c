import pytest

from onlinetrial import oracle


def test_lond_closed_form():
    assert oracle.closed_form_lond_level(0.025, 20, 8, 1) == 0.0025
    with pytest.raises(ValueError):
        oracle.closed_form_lond_level(0.025, 20, 21, 0)
    with pytest.raises(ValueError):
        oracle.closed_form_lond_level(0.025, 20, 3, 3)


def test_naive_bh():
    assert oracle.naive_bh([0.01, 0.02, 0.03, 0.5], 0.05) == {0, 1, 2}
    assert oracle.naive_bh([0.2, 0.3], 0.05) == set()
    assert oracle.naive_bh([0.04, 0.04], 0.05) == {0, 1}


def test_control_correlation():
    assert oracle.analytic_control_correlation(50, 50) == 0.5
    assert oracle.analytic_control_correlation(25, 50) == 0.25
    assert oracle.analytic_control_correlation(0, 50) == 0.0
    with pytest.raises(ValueError):
        oracle.analytic_control_correlation(60, 50)


def test_independent_fwer():
    assert oracle.independent_fwer_closed_form(0.025, 5) == pytest.approx(0.118904, abs=1e-6)
    assert oracle.independent_fwer_closed_form(0.025, 20) == pytest.approx(0.397312, abs=1e-6)


def test_normal_power():
    # Phi(2.5 - 1.959964) with n = n0 = 50, sigma = 1, theta = 0.5
    assert oracle.normal_power(0.5, 1.0, 50, 50, 0.025) == pytest.approx(0.705418, abs=1e-5)
    assert oracle.normal_power(0.0, 1.0, 50, 50, 0.025) == pytest.approx(0.025, abs=1e-9)


def test_report_tsv():
    rep = oracle.compare("x", 0.5, 0.5000001, 1e-3, "here")
    assert rep.passed
    assert rep.to_tsv().split("\t")[:2] == ["PASS", "x"]
    assert not oracle.compare("y", ("C",), ("G",)).passed


def test_suite_passes():
    reports = oracle.run_oracle_suite(bh_instances=200)
    failing = [r.to_tsv() for r in reports if not r.passed]
    assert failing == []


def test_suite_catches_misconfigured_lond():
    reports = oracle.run_oracle_suite({"lond": {"gamma": "power"}}, bh_instances=10)
    failed = {r.check.split("[")[0] for r in reports if not r.passed}
    assert "lond_level" in failed
    assert "bonferroni_alpha8" not in failed
