# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled photon kernel.

Operation-for-operation mirror of numpy_backend.simulate_chunk: same
pre-drawn variates, same constants, same floating-point evaluation order
(the build disables FMA contraction), so outputs are bit-identical to the
fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

from .common import PREP_A as _PREP_A
from .common import PREP_B as _PREP_B
from .common import PROJ_COS as _PROJ_COS
from .common import PROJ_SIN as _PROJ_SIN

NAME = "compiled"


cdef inline int _pauli_code(double u, double t1, double p, double t3) nogil:
    if u < t1:
        return 1
    if u < p:
        return 2
    if u < t3:
        return 3
    return 0


def simulate_chunk(
    draws,
    double[::1] r0,
    double[::1] r1,
    int eve_kind,
    double p_a,
    double p_b,
    double d,
    double p_signal,
    double g,
    double sigma,
):
    """See numpy_backend.simulate_chunk for the semantic contract."""
    cdef cnp.uint8_t[::1] alice_basis = draws.alice_basis
    cdef cnp.uint8_t[::1] alice_bit = draws.alice_bit
    cdef cnp.uint8_t[::1] eve_basis = draws.eve_basis
    cdef double[::1] u_eve = draws.u_eve
    cdef double[::1] u_pauli_a = draws.u_pauli_a
    cdef cnp.uint8_t[::1] proj = draws.proj
    cdef double[::1] u_branch = draws.u_branch
    cdef double[::1] z = draws.z
    cdef double[::1] u_pauli_b = draws.u_pauli_b
    cdef cnp.uint8_t[::1] bob_basis = draws.bob_basis
    cdef double[::1] u_out = draws.u_out
    cdef double[::1] u_detect = draws.u_detect
    cdef double[::1] u_dark = draws.u_dark

    cdef double[::1] prep_a = _PREP_A
    cdef double[::1] prep_b = _PREP_B
    cdef double[::1] proj_cos = _PROJ_COS
    cdef double[::1] proj_sin = _PROJ_SIN

    cdef Py_ssize_t n = z.shape[0]
    pointer_arr = np.empty(n)
    post_a_arr = np.empty(n)
    post_b_arr = np.empty(n)
    bob_out_arr = np.empty(n, dtype=np.uint8)
    pauli_a_arr = np.empty(n, dtype=np.uint8)
    pauli_b_arr = np.empty(n, dtype=np.uint8)
    detected_arr = np.empty(n, dtype=np.uint8)
    dark_arr = np.empty(n, dtype=np.uint8)
    cdef double[::1] pointer = pointer_arr
    cdef double[::1] post_a = post_a_arr
    cdef double[::1] post_b = post_b_arr
    cdef cnp.uint8_t[::1] bob_out = bob_out_arr
    cdef cnp.uint8_t[::1] pauli_a = pauli_a_arr
    cdef cnp.uint8_t[::1] pauli_b = pauli_b_arr
    cdef cnp.uint8_t[::1] detected = detected_arr
    cdef cnp.uint8_t[::1] dark = dark_arr

    cdef double ta1 = 0.5 * p_a
    cdef double ta3 = 1.5 * p_a
    cdef double tb1 = 0.5 * p_b
    cdef double tb3 = 1.5 * p_b
    cdef bint blinding = eve_kind == 2  # EVE_INTERCEPT_RESEND_BLINDING
    cdef bint has_eve = eve_kind != 0  # EVE_NONE

    cdef Py_ssize_t i
    cdef int sid, eo, ca, cb, pj, det, drk
    cdef double a, b, tmp, nrm, sp, p0
    cdef double ct, st, beta, alpha, b2, den, shift, x
    cdef double r, bw, n2, inv, ah, bh, pa2, pb2, a3, b3
    cdef double nrm3, sp3, p0b

    with nogil:
        for i in range(n):
            sid = 2 * alice_basis[i] + alice_bit[i]
            a = prep_a[sid]
            b = prep_b[sid]

            if has_eve:
                nrm = a * a + b * b
                if eve_basis[i] == 0:
                    p0 = (a * a) / nrm
                else:
                    sp = a + b
                    p0 = (sp * sp) / (2.0 * nrm)
                eo = 0 if u_eve[i] < p0 else 1
                sid = 2 * eve_basis[i] + eo
                a = prep_a[sid]
                b = prep_b[sid]

            ca = _pauli_code(u_pauli_a[i], ta1, p_a, ta3)
            pauli_a[i] = <cnp.uint8_t> ca
            if ca == 1:
                tmp = a; a = b; b = tmp
            elif ca == 2:
                tmp = a; a = -b; b = tmp
            elif ca == 3:
                b = -b

            pj = proj[i]
            ct = proj_cos[pj]
            st = proj_sin[pj]
            beta = ct * a + st * b
            alpha = ct * b - st * a
            b2 = beta * beta
            den = alpha * alpha + b2
            if u_branch[i] < (b2 / den):
                shift = g
                r = r1[i]
            else:
                shift = 0.0
                r = r0[i]
            x = sigma * z[i] + shift
            pointer[i] = x

            bw = beta * r
            n2 = alpha * alpha + bw * bw
            inv = 1.0 / sqrt(n2)
            ah = alpha * inv
            bh = bw * inv
            pa2 = ct * bh - st * ah
            pb2 = st * bh + ct * ah
            post_a[i] = pa2
            post_b[i] = pb2

            cb = _pauli_code(u_pauli_b[i], tb1, p_b, tb3)
            pauli_b[i] = <cnp.uint8_t> cb
            a3 = pa2
            b3 = pb2
            if cb == 1:
                tmp = a3; a3 = b3; b3 = tmp
            elif cb == 2:
                tmp = a3; a3 = -b3; b3 = tmp
            elif cb == 3:
                b3 = -b3

            nrm3 = a3 * a3 + b3 * b3
            if bob_basis[i] == 0:
                p0b = (a3 * a3) / nrm3
            else:
                sp3 = a3 + b3
                p0b = (sp3 * sp3) / (2.0 * nrm3)
            bob_out[i] = 0 if u_out[i] < p0b else 1

            det = 1 if u_detect[i] < p_signal else 0
            if blinding and bob_basis[i] != eve_basis[i]:
                det = 0
            drk = 1 if (det and u_dark[i] < d) else 0
            detected[i] = <cnp.uint8_t> det
            dark[i] = <cnp.uint8_t> drk
            if drk:
                pointer[i] = sigma * z[i]
                bob_out[i] = 0 if u_out[i] < 0.5 else 1

    return (
        pointer_arr,
        post_a_arr,
        post_b_arr,
        bob_out_arr,
        pauli_a_arr,
        pauli_b_arr,
        detected_arr,
        dark_arr,
    )
