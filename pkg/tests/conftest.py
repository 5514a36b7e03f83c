import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        name = report.nodeid.split("::")[-1]
        if report.skipped:
            outcome = "SKIP"
        else:
            outcome = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {outcome}: {name}", flush=True)
