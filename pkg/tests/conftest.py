import sys
from pathlib import Path

import pytest

# Ensure src/ is in sys.path for all tests
src_path = Path(__file__).parent.parent / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from core import shapes  # noqa: E402
from core.laplacian import laplace_beltrami  # noqa: E402


@pytest.fixture(scope="session")
def icosahedron():
    return shapes.icosahedron()


@pytest.fixture(scope="session")
def sphere1():
    return shapes.icosphere(1)


@pytest.fixture(scope="session")
def sphere2():
    return shapes.icosphere(2)


@pytest.fixture(scope="session")
def grid8():
    return shapes.square_grid(8)


@pytest.fixture(scope="session")
def sphere2_basis(sphere2):
    """40 dense eigenpairs of the 162-vertex icosphere."""
    return laplace_beltrami(sphere2, k=40, method="dense")
