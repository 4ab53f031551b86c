import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wvqkd.quantum import (
    ATOL,
    BB84_STATES,
    IDENTITY,
    KET_MINUS,
    KET_PLUS,
    KET_ZERO,
    MAXIMALLY_MIXED,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    Effect,
    Operator2,
    OrthogonalPostSelectionError,
    PureState,
    born_probability,
    depolarize,
    depolarize_adjoint,
    h_eigenvector,
    h_projector,
    weak_value,
)

INV_2R2 = 1.0 / (2.0 * math.sqrt(2.0))


def test_h_plus_entries_match_closed_form():
    p = h_projector(+1, False)
    expected = np.array(
        [[0.5 + INV_2R2, INV_2R2], [INV_2R2, 0.5 - INV_2R2]], dtype=complex
    )
    assert np.max(np.abs(p.matrix - expected)) <= ATOL


@pytest.mark.parametrize("sign", [+1, -1])
def test_complement_is_exact(sign):
    base = h_projector(sign, False)
    comp = h_projector(sign, True)
    assert np.array_equal(base.matrix + comp.matrix, IDENTITY.matrix)


@pytest.mark.parametrize("sign", [+1, -1])
@pytest.mark.parametrize("complement", [False, True])
def test_projectors_idempotent_rank1(sign, complement):
    p = h_projector(sign, complement)
    assert np.max(np.abs(p.matrix @ p.matrix - p.matrix)) <= ATOL
    assert abs(np.trace(p.matrix) - 1.0) <= ATOL
    assert p.is_rank1_projector()


@pytest.mark.parametrize("sign", [+1, -1])
@pytest.mark.parametrize("complement", [False, True])
def test_projector_eigenvectors(sign, complement):
    p = h_projector(sign, complement)
    v = h_eigenvector(sign, complement).amplitudes
    assert np.max(np.abs(p.matrix @ v - v)) <= 1e-14


def test_minus_family_mirrors_plus_family():
    # (1/2)[I + (X - Z)/sqrt(2)] projects onto the 3*pi/8 state; its
    # complement is the projector onto -pi/8, the state quoted alongside
    # the optics sketch.
    v = h_eigenvector(-1, True).amplitudes
    expected = np.array([math.cos(-math.pi / 8), math.sin(-math.pi / 8)])
    overlap = abs(np.vdot(v, expected))
    assert abs(overlap - 1.0) <= 1e-14


def test_born_probability_examples():
    zero = KET_ZERO.density()
    assert born_probability(zero, KET_ZERO.projector()) == pytest.approx(1.0, abs=ATOL)
    assert born_probability(zero, KET_PLUS.projector()) == pytest.approx(0.5, abs=ATOL)
    assert born_probability(zero, h_projector(+1)) == pytest.approx(
        0.5 + INV_2R2, abs=ATOL
    )
    assert 0.5 + INV_2R2 == pytest.approx(0.8535534, abs=1e-7)


def test_depolarize_examples():
    rho = KET_ZERO.density()
    assert depolarize(rho, 0.0).op.approx_equal(rho.op)
    assert depolarize(rho, 0.5).op.approx_equal(MAXIMALLY_MIXED.op)
    out = depolarize(rho, 0.1)
    assert out.op.approx_equal(Operator2([[0.9, 0], [0, 0.1]]))


@pytest.mark.parametrize("p", [-0.01, 0.51, 1.0])
def test_depolarize_domain(p):
    with pytest.raises(ValueError):
        depolarize(KET_ZERO.density(), p)


@given(
    p=st.floats(0.0, 0.5),
    theta=st.floats(0.0, math.pi),
    phi=st.floats(0.0, 2.0 * math.pi),
)
def test_depolarize_bit_error_probability_is_basis_independent(p, theta, phi):
    psi = PureState(
        [math.cos(theta / 2.0), math.sin(theta / 2.0) * complex(math.cos(phi), math.sin(phi))]
    )
    orth = PureState(
        [-math.sin(theta / 2.0), math.cos(theta / 2.0) * complex(math.cos(phi), math.sin(phi))]
    )
    noisy = depolarize(psi.density(), p)
    assert born_probability(noisy, orth.projector()) == pytest.approx(p, abs=1e-12)


def test_pauli_twirl_identity():
    rng = np.random.default_rng(3)
    for p in (0.0, 0.1, 0.3, 0.5):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        rho = PureState(v).density()
        twirl = (1.0 - 1.5 * p) * rho.matrix + 0.5 * p * (
            PAULI_X.matrix @ rho.matrix @ PAULI_X.matrix
            + PAULI_Y.matrix @ rho.matrix @ PAULI_Y.matrix
            + PAULI_Z.matrix @ rho.matrix @ PAULI_Z.matrix
        )
        assert np.max(np.abs(twirl - depolarize(rho, p).matrix)) <= ATOL


def test_weak_value_eigenstate():
    assert weak_value(
        KET_ZERO.density(), KET_ZERO.projector(), PAULI_Z
    ) == pytest.approx(1.0, abs=ATOL)


def test_weak_value_anomalous_example():
    wv = weak_value(KET_ZERO.density(), KET_PLUS.projector(), h_projector(+1).op)
    assert wv.real == pytest.approx(0.5 + 1.0 / math.sqrt(2.0), abs=ATOL)
    assert wv.real == pytest.approx(1.2071068, abs=1e-7)
    assert abs(wv.imag) <= ATOL


def test_weak_value_noisy_matches_closed_form():
    pre = depolarize(KET_ZERO.density(), 0.05)
    post = depolarize_adjoint(KET_PLUS.projector(), 0.03)
    wv = weak_value(pre, post, h_projector(+1).op)
    assert wv.real == pytest.approx(0.5 + 0.92 / math.sqrt(2.0), abs=ATOL)
    assert wv.real == pytest.approx(1.1505382, abs=1e-7)


def test_weak_value_orthogonal_post_selection():
    with pytest.raises(OrthogonalPostSelectionError):
        weak_value(KET_ZERO.density(), PureState([0, 1]).projector(), PAULI_Z)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(Operator2([[1.0, 0], [0, 0.1]]))  # trace != 1
    with pytest.raises(ValueError):
        DensityMatrix(Operator2([[0.5, 1j], [1j, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(Operator2([[1.2, 0], [0, -0.2]]))  # negative eigenvalue


def test_effect_validation():
    with pytest.raises(ValueError):
        Effect(Operator2([[1.5, 0], [0, 0]]))
    Effect(Operator2([[1.0, 0], [0, 0.25]]))  # POVM element, fine


def test_pure_state_validation():
    with pytest.raises(ValueError):
        PureState([1.0, 1.0])
    assert KET_MINUS.overlap(KET_PLUS) == pytest.approx(0.0, abs=ATOL)


def test_born_rejects_inconsistent_pair():
    # Bypass Effect validation to hand born_probability a trace above 1.
    bad = Effect.__new__(Effect)
    object.__setattr__(bad, "op", Operator2([[2.0, 0], [0, 0]]))
    with pytest.raises(ValueError):
        born_probability(BB84_STATES["0"].density(), bad)
