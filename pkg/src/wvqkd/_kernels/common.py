"""Shared tables and the per-chunk random-variate layout.

Both kernel backends consume the same pre-drawn arrays and the same float
constants, so their outputs are bit-identical.  The draw order below is the
documented counter-based reproducibility contract: one Philox stream per
chunk, keyed by the run seed with the chunk index in the high counter word,
drawing the thirteen arrays in this exact sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Photons per RNG chunk.  Fixed: worker count must never change results.
CHUNK_SIZE = 1 << 16

EVE_NONE = 0
EVE_INTERCEPT_RESEND = 1
EVE_INTERCEPT_RESEND_BLINDING = 2

_R = 1.0 / math.sqrt(2.0)

# Preparation amplitudes indexed by state id = 2 * basis + bit:
# 0 -> |0>, 1 -> |1>, 2 -> |+>, 3 -> |->.  All four states are real.
PREP_A = np.array([1.0, 0.0, _R, _R])
PREP_B = np.array([0.0, 1.0, _R, -_R])

# Measured-projector eigenvector angles for H+, H-, and their complements.
# (1/2)[I + (X - Z)/sqrt(2)] projects onto the 3 pi/8 state, not -pi/8: the
# minus-sign family sits mirrored about the X axis.
_ANGLES = (math.pi / 8, 3 * math.pi / 8, 5 * math.pi / 8, 7 * math.pi / 8)
PROJ_COS = np.array([math.cos(t) for t in _ANGLES])
PROJ_SIN = np.array([math.sin(t) for t in _ANGLES])


@dataclass
class ChunkDraws:
    """All random variates for one chunk, in documented draw order."""

    alice_basis: np.ndarray
    alice_bit: np.ndarray
    eve_basis: np.ndarray
    u_eve: np.ndarray
    u_pauli_a: np.ndarray
    proj: np.ndarray
    u_branch: np.ndarray
    z: np.ndarray
    u_pauli_b: np.ndarray
    bob_basis: np.ndarray
    u_out: np.ndarray
    u_detect: np.ndarray
    u_dark: np.ndarray


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Philox stream for one chunk: run seed as key, chunk index shifted
    into the third counter word so streams can never overlap."""
    return np.random.Generator(np.random.Philox(key=seed, counter=chunk_index << 128))


def draw_chunk(rng: np.random.Generator, n: int) -> ChunkDraws:
    return ChunkDraws(
        alice_basis=rng.integers(0, 2, n, dtype=np.uint8),
        alice_bit=rng.integers(0, 2, n, dtype=np.uint8),
        eve_basis=rng.integers(0, 2, n, dtype=np.uint8),
        u_eve=rng.random(n),
        u_pauli_a=rng.random(n),
        proj=rng.integers(0, 4, n, dtype=np.uint8),
        u_branch=rng.random(n),
        z=rng.standard_normal(n),
        u_pauli_b=rng.random(n),
        bob_basis=rng.integers(0, 2, n, dtype=np.uint8),
        u_out=rng.random(n),
        u_detect=rng.random(n),
        u_dark=rng.random(n),
    )


def branch_weights(z: np.ndarray, g: float, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Post-interaction amplitude ratios exp(g (2x - g) / 4 sigma^2) for the
    two possible pointer draws x = sigma z and x = sigma z + g.

    Computed here with numpy's exp so the compiled kernel and the fallback
    share transcendentals bit for bit.
    """
    t = (2.0 * sigma) * z
    c = 4.0 * sigma * sigma
    r0 = np.exp(g * (t - g) / c)
    r1 = np.exp(g * (t + g) / c)
    return r0, r1
