import os

# cap numeric backends before numpy loads: timings are quoted single-threaded
# and reductions stay deterministic
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def circle_scene_frames(offset=0.0, resolution=64, frames=32, radius=9.6, speed=0.75):
    """Per-frame SDFs of a circle translating along x; the standard fixture."""
    return [
        circle_sdf((resolution, resolution), (18.0 + offset + speed * t, resolution / 2.0), radius)
        for t in range(frames)
    ]


@pytest.fixture(scope="session")
def circle_pair():
    """Two assembled space-time SDF volumes six cells apart."""
    from flof import assemble_spacetime

    return (
        assemble_spacetime(circle_scene_frames(0.0)),
        assemble_spacetime(circle_scene_frames(6.0)),
    )


@pytest.fixture(scope="session")
def circle_match(circle_pair):
    import time

    from flof import flof

    started = time.perf_counter()
    result = flof(*circle_pair)
    result.elapsed_seconds = time.perf_counter() - started
    return result


@pytest.fixture(scope="session")
def circle_match_flow_only(circle_pair):
    from flof import flof

    return flof(*circle_pair, projection=False)


def circle_sdf(dims, center, radius):
    grids = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in dims], indexing="ij")
    rr = np.sqrt(sum((g - c) ** 2 for g, c in zip(grids, center)))
    return rr - radius


def smooth_vector_field(dims, magnitude, rng, sigma=4.0):
    """Blurred noise deformation, scaled to a requested max magnitude."""
    from flof import grid

    raw = rng.standard_normal(tuple(dims) + (len(dims),))
    smooth = grid.gaussian_blur(raw, sigma, vector=True)
    peak = np.abs(smooth).max()
    return smooth * (magnitude / peak)
