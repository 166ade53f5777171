import numpy as np
import pytest

from mindist.kde import DensityEstimate


def gaussian_kl_2d(mu0, cov0, mu1, cov1):
    """Closed-form KL(N0 || N1) for bivariate normals."""
    mu0, mu1 = np.asarray(mu0, float), np.asarray(mu1, float)
    cov0, cov1 = np.asarray(cov0, float), np.asarray(cov1, float)
    inv1 = np.linalg.inv(cov1)
    diff = mu1 - mu0
    return 0.5 * (
        np.trace(inv1 @ cov0)
        + diff @ inv1 @ diff
        - 2
        + np.log(np.linalg.det(cov1) / np.linalg.det(cov0))
    )


def exact_gaussian(mean):
    """A one-point KDE with unit bandwidth is exactly N(mean, I)."""
    return DensityEstimate(np.asarray(mean, float).reshape(1, 2), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, line in report.user_properties:
        if key == "acceptance":
            verdict = "PASS" if report.passed else "FAIL"
            _ACCEPTANCE.append(f"[{verdict}] {line}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: s.split("] ", 1)[1]):
            terminalreporter.write_line(line)


_ACCEPTANCE: list[str] = []
