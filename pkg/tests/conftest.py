import numpy as np
import pytest

from chhard.core import ChannelTensor, TensorMeta

# (criterion, passed, detail) tuples appended by the acceptance tests
ACCEPTANCE_LOG: list = []


@pytest.fixture
def record():
    def _record(criterion: str, passed: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} -- {detail}"
        print(line)
        ACCEPTANCE_LOG.append(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)


def random_tensor(rng, K=1, N=6, F=3, M=8, mask=False, array_id="", scale=1.0):
    h = scale * (rng.standard_normal((K, N, F, M)) + 1j * rng.standard_normal((K, N, F, M)))
    m = None
    if mask:
        m = rng.random((K, N)) < 0.7
        m[:, 0] = True
    return ChannelTensor(h, TensorMeta(array_id=array_id), m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
