import numpy as np
import pytest

from zero_tracer.sphere_mesh import base_octahedron, build_refined

# octahedron vertex order is e1, e2, e3, -e1, -e2, -e3
STANDARD_OCTA_LABELS = np.array([1, 1, 1, -1, -1, -1])


@pytest.fixture
def octa():
    return base_octahedron()


@pytest.fixture
def octa_labels():
    return STANDARD_OCTA_LABELS.copy()


@pytest.fixture(scope="session")
def level3():
    return build_refined(3)


@pytest.fixture(scope="session")
def level4():
    return build_refined(4)
