import numpy as np
import pytest
from hypothesis import settings

from longpoisson.mesh import (assemble_laplacian_1d, assemble_laplacian_cs, build_cross_section,
                              build_interval_grid)

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_2d():
    """Short interval grid times a coarse interval cross section."""
    g1 = build_interval_grid(2.0, 15)
    gcs = build_cross_section("interval", 2.0 / 16)
    return g1, gcs, assemble_laplacian_1d(g1), assemble_laplacian_cs(gcs)


@pytest.fixture(scope="session")
def small_lshape():
    g1 = build_interval_grid(1.0, 11)
    gcs = build_cross_section("lshape", 0.25)
    return g1, gcs, assemble_laplacian_1d(g1), assemble_laplacian_cs(gcs)
