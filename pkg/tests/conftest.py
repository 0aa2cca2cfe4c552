import pytest

from deltaspec import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT-compile the hot loops once so individual tests measure solve time,
    # not compilation.
    _kernels.warmup()
