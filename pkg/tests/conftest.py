import pytest

from hybridblocks import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile JIT kernels once so timed tests measure algorithms, not LLVM."""
    kernels.warmup()
