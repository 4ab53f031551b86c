"""Vectorized pure-numpy photon kernel: the fallback backend.

Semantics reference for the compiled kernel.  Every floating-point
operation is written to mirror the compiled loop exactly (same ops, same
order, no fused multiply-adds), so both backends emit identical bits.
"""

from __future__ import annotations

import numpy as np

from .common import EVE_INTERCEPT_RESEND_BLINDING, EVE_NONE, PREP_A, PREP_B, PROJ_COS, PROJ_SIN

NAME = "numpy"


def _pauli_code(u: np.ndarray, p: float) -> np.ndarray:
    # 0: identity, 1: X, 2: Y, 3: Z with weights (1 - 3p/2, p/2, p/2, p/2).
    t1 = 0.5 * p
    t3 = 1.5 * p
    return np.where(u < t1, 1, np.where(u < p, 2, np.where(u < t3, 3, 0))).astype(np.uint8)


def _apply_pauli(code: np.ndarray, a: np.ndarray, b: np.ndarray):
    # X: (b, a); Y: (-b, a) up to global phase; Z: (a, -b).
    a1 = np.where(code == 1, b, np.where(code == 2, -b, a))
    b1 = np.where((code == 1) | (code == 2), a, np.where(code == 3, -b, b))
    return a1, b1


def simulate_chunk(
    draws,
    r0: np.ndarray,
    r1: np.ndarray,
    eve_kind: int,
    p_a: float,
    p_b: float,
    d: float,
    p_signal: float,
    g: float,
    sigma: float,
):
    """Run the full per-photon pipeline on one chunk of variates.

    Returns (pointer, post_a, post_b, bob_out, pauli_a, pauli_b,
    detected, dark); post_a/post_b are the real state amplitudes right
    after the weak interaction, before the second channel segment.
    """
    idx = (2 * draws.alice_basis + draws.alice_bit).astype(np.intp)
    a = PREP_A[idx]
    b = PREP_B[idx]

    if eve_kind != EVE_NONE:
        nrm = a * a + b * b
        sp = a + b
        p0 = np.where(draws.eve_basis == 0, (a * a) / nrm, (sp * sp) / (2.0 * nrm))
        eve_out = (draws.u_eve >= p0).astype(np.uint8)
        eidx = (2 * draws.eve_basis + eve_out).astype(np.intp)
        a = PREP_A[eidx]
        b = PREP_B[eidx]

    pauli_a = _pauli_code(draws.u_pauli_a, p_a)
    a, b = _apply_pauli(pauli_a, a, b)

    pidx = draws.proj.astype(np.intp)
    ct = PROJ_COS[pidx]
    st = PROJ_SIN[pidx]
    beta = ct * a + st * b
    alpha = ct * b - st * a
    b2 = beta * beta
    den = alpha * alpha + b2
    branch = draws.u_branch < (b2 / den)
    shift = np.where(branch, g, 0.0)
    pointer = sigma * draws.z + shift

    r = np.where(branch, r1, r0)
    bw = beta * r
    n2 = alpha * alpha + bw * bw
    inv = 1.0 / np.sqrt(n2)
    ah = alpha * inv
    bh = bw * inv
    post_a = ct * bh - st * ah
    post_b = st * bh + ct * ah

    pauli_b = _pauli_code(draws.u_pauli_b, p_b)
    a3, b3 = _apply_pauli(pauli_b, post_a, post_b)

    nrm3 = a3 * a3 + b3 * b3
    sp3 = a3 + b3
    p0b = np.where(draws.bob_basis == 0, (a3 * a3) / nrm3, (sp3 * sp3) / (2.0 * nrm3))
    bob_out = (draws.u_out >= p0b).astype(np.uint8)

    detected = draws.u_detect < p_signal
    if eve_kind == EVE_INTERCEPT_RESEND_BLINDING:
        detected = detected & (draws.bob_basis == draws.eve_basis)
    dark = detected & (draws.u_dark < d)
    pointer = np.where(dark, sigma * draws.z, pointer)
    bob_out = np.where(dark, (draws.u_out >= 0.5).astype(np.uint8), bob_out)

    return (
        pointer,
        post_a,
        post_b,
        bob_out,
        pauli_a,
        pauli_b,
        detected.astype(np.uint8),
        dark.astype(np.uint8),
    )
