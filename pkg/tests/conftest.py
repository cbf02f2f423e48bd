import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def cgauss(rng, *shape):
    """i.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def direct_gso(B):
    """Explicit projection-subtraction Gram-Schmidt, the textbook oracle."""
    B = np.asarray(B, dtype=complex)
    n = B.shape[1]
    star = np.zeros_like(B)
    mu = np.zeros((n, n), dtype=complex)
    for i in range(n):
        v = B[:, i].copy()
        for j in range(i):
            mu[i, j] = np.vdot(star[:, j], B[:, i]) / np.vdot(star[:, j], star[:, j]).real
            v -= mu[i, j] * star[:, j]
        star[:, i] = v
    return mu, np.sum(np.abs(star) ** 2, axis=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for the terminal summary, then assert on it."""
    def report(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        request.config.stash[ACCEPTANCE].append(line)
        print(line)
        assert ok, line
    return report
