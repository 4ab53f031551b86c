"""Shared test helpers: forced-variate kernel driving and backend discovery."""

import numpy as np
import pytest

from wvqkd import _kernels
from wvqkd._kernels.common import ChunkDraws, branch_weights

HAS_COMPILED = "compiled" in _kernels.available_backends()

requires_compiled = pytest.mark.skipif(
    not HAS_COMPILED, reason="compiled kernel extension not built"
)


def make_draws(rng: np.random.Generator, n: int, **overrides) -> ChunkDraws:
    """Draw a chunk's variates, then force chosen fields (after drawing, so
    the stream layout stays intact)."""
    from wvqkd._kernels.common import draw_chunk

    draws = draw_chunk(rng, n)
    for name, value in overrides.items():
        arr = getattr(draws, name)
        forced = np.broadcast_to(np.asarray(value, dtype=arr.dtype), arr.shape).copy()
        setattr(draws, name, forced)
    return draws


def run_kernel(draws: ChunkDraws, g: float, sigma: float, *, eve_kind=0, p_a=0.0,
               p_b=0.0, d=0.0, p_signal=1.0, backend=None):
    kern = _kernels.get_backend(backend)
    r0, r1 = branch_weights(draws.z, g, sigma)
    return kern.simulate_chunk(draws, r0, r1, eve_kind, p_a, p_b, d, p_signal, g, sigma)
