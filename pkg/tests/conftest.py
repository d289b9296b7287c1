import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slewsafe import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # first call pays the jit compile cost; do it before anything timed
    _kernels.warm_up()
