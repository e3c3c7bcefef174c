import numpy as np
import pytest

from cassigsm import ForwardOperator, HsiCube, Mask2D


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_cube(rng, bands, height, width, peak=1.0):
    return HsiCube(rng.random((bands, height, width), dtype=np.float32) * peak,
                   peak=peak)


def random_operator(rng, height, width, bands, step, binary=False):
    if binary:
        data = (rng.random((height, width)) < 0.5).astype(np.float32)
    else:
        data = rng.uniform(0.1, 1.0, (height, width)).astype(np.float32)
    return ForwardOperator(Mask2D(data), bands=bands, step=step)
