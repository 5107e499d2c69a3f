import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation(rng):
    from scipy.spatial.transform import Rotation

    return Rotation.random(random_state=rng).as_matrix()


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def report():
    def _report(key: str, ok: bool, detail: str) -> bool:
        line = f"{key} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
