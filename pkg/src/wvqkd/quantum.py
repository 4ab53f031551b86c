"""Exact 2x2 complex algebra for qubit states, observables and effects.

Everything here is analytic double-precision linear algebra with a fixed
absolute tolerance of 1e-12; no statistical quantities live in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ATOL = 1e-12

SQRT2 = math.sqrt(2.0)


class OrthogonalPostSelectionError(ValueError):
    """Post-selection probability vanished, so the weak value is undefined."""


def _as_matrix(entries) -> np.ndarray:
    m = np.array(entries, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    m.setflags(write=False)
    return m


def _herm_eigvals(m: np.ndarray) -> tuple[float, float]:
    # Closed form for a Hermitian 2x2; avoids LAPACK overhead in hot checks.
    a = m[0, 0].real
    d = m[1, 1].real
    half = 0.5 * (a - d)
    rad = math.hypot(half, abs(m[0, 1]))
    mid = 0.5 * (a + d)
    return mid - rad, mid + rad


@dataclass(frozen=True)
class Operator2:
    """A 2x2 complex operator: the common currency for states, observables
    and measurement effects."""

    matrix: np.ndarray

    def __init__(self, entries) -> None:
        object.__setattr__(self, "matrix", _as_matrix(entries))

    @property
    def trace(self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    def is_hermitian(self, atol: float = ATOL) -> bool:
        return bool(np.all(np.abs(self.matrix - self.matrix.conj().T) <= atol))

    def approx_equal(self, other: "Operator2", atol: float = ATOL) -> bool:
        return bool(np.all(np.abs(self.matrix - other.matrix) <= atol))

    def dagger(self) -> "Operator2":
        return Operator2(self.matrix.conj().T)

    def __matmul__(self, other: "Operator2") -> "Operator2":
        return Operator2(self.matrix @ other.matrix)

    def __add__(self, other: "Operator2") -> "Operator2":
        return Operator2(self.matrix + other.matrix)

    def __sub__(self, other: "Operator2") -> "Operator2":
        return Operator2(self.matrix - other.matrix)

    def scaled(self, factor: complex) -> "Operator2":
        return Operator2(factor * self.matrix)


IDENTITY = Operator2([[1, 0], [0, 1]])
PAULI_X = Operator2([[0, 1], [1, 0]])
PAULI_Y = Operator2([[0, -1j], [1j, 0]])
PAULI_Z = Operator2([[1, 0], [0, -1]])


@dataclass(frozen=True)
class DensityMatrix:
    """Qubit state: Hermitian, unit trace, positive semidefinite."""

    op: Operator2

    def __post_init__(self):
        m = self.op.matrix
        if not self.op.is_hermitian():
            raise ValueError("density matrix must be Hermitian")
        if abs(self.op.trace - 1.0) > ATOL:
            raise ValueError(f"density matrix trace {self.op.trace} != 1")
        lo, _ = _herm_eigvals(m)
        if lo < -ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {lo}")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


@dataclass(frozen=True)
class Effect:
    """Measurement effect: Hermitian with spectrum inside [0, 1]."""

    op: Operator2

    def __post_init__(self):
        if not self.op.is_hermitian():
            raise ValueError("effect must be Hermitian")
        lo, hi = _herm_eigvals(self.op.matrix)
        if lo < -ATOL or hi > 1.0 + ATOL:
            raise ValueError(f"effect eigenvalues [{lo}, {hi}] outside [0, 1]")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def is_rank1_projector(self, atol: float = ATOL) -> bool:
        m = self.matrix
        if abs(m[0, 0] + m[1, 1] - 1.0) > atol:
            return False
        return bool(np.all(np.abs(m @ m - m) <= atol))


@dataclass(frozen=True)
class PureState:
    """Normalized qubit ket written in the computational basis."""

    amplitudes: np.ndarray

    def __init__(self, amplitudes) -> None:
        v = np.array(amplitudes, dtype=np.complex128).reshape(2)
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        norm = abs(v[0]) ** 2 + abs(v[1]) ** 2
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state norm {norm} != 1")

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(Operator2(np.outer(v, v.conj())))

    def projector(self) -> Effect:
        v = self.amplitudes
        return Effect(Operator2(np.outer(v, v.conj())))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


_R = 1.0 / SQRT2
KET_ZERO = PureState([1.0, 0.0])
KET_ONE = PureState([0.0, 1.0])
KET_PLUS = PureState([_R, _R])
KET_MINUS = PureState([_R, -_R])

#: The four signal states, keyed by the label Alice discloses.
BB84_STATES = {"0": KET_ZERO, "1": KET_ONE, "+": KET_PLUS, "-": KET_MINUS}

MAXIMALLY_MIXED = DensityMatrix(Operator2([[0.5, 0], [0, 0.5]]))


def h_projector(sign: int, complement: bool = False) -> Effect:
    """One of the four weakly measured projectors (1/2)[I +- (X + sign*Z)/sqrt(2)].

    ``sign`` is +1 or -1.  The complement is built as I minus the base
    projector, so the pair sums to the identity exactly.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    base = 0.5 * (IDENTITY.matrix + (PAULI_X.matrix + sign * PAULI_Z.matrix) / SQRT2)
    if complement:
        base = IDENTITY.matrix - base
    return Effect(Operator2(base))


def h_eigenvector(sign: int, complement: bool = False) -> PureState:
    """+1 eigenvector of the corresponding h_projector.

    The plus family points along pi/8, the minus family along 3 pi/8 (the
    minus sign flips the Z component, mirroring the state about the X
    axis); complements are rotated by pi/2.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    theta = math.pi / 8.0 if sign > 0 else 3.0 * math.pi / 8.0
    if complement:
        theta += math.pi / 2.0
    return PureState([math.cos(theta), math.sin(theta)])


def born_probability(state: DensityMatrix, effect: Effect) -> float:
    """Tr(E rho), clamped to [0, 1].  Clamping beyond 1e-12 means the inputs
    were not a valid state/effect pair and raises instead."""
    t = float(np.trace(effect.matrix @ state.matrix).real)
    if t < -ATOL or t > 1.0 + ATOL:
        raise ValueError(f"trace rule produced {t}, outside [0, 1] by more than {ATOL}")
    return min(1.0, max(0.0, t))


def depolarize(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Depolarizing channel parameterized by the bit-error probability p:
    rho -> (1 - 2p) rho + p I, so any encoding basis sees error rate p."""
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"bit-error probability {p} outside [0, 1/2]")
    return DensityMatrix(Operator2((1.0 - 2.0 * p) * rho.matrix + p * IDENTITY.matrix))


def depolarize_adjoint(effect: Effect, p: float) -> Effect:
    """Adjoint of :func:`depolarize` acting on effects.  The channel is
    self-adjoint, so the map is the same formula."""
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"bit-error probability {p} outside [0, 1/2]")
    return Effect(Operator2((1.0 - 2.0 * p) * effect.matrix + p * IDENTITY.matrix))


def weak_value(pre: DensityMatrix, post: Effect, obs: Operator2) -> complex:
    """Generalized weak value Tr(E A rho) / Tr(E rho).

    Reduces to <phi|A|psi>/<phi|psi> for pure pre/post selection.  Raises
    :class:`OrthogonalPostSelectionError` when the post-selection
    probability vanishes; never divides silently.
    """
    den = float(np.trace(post.matrix @ pre.matrix).real)
    if den <= ATOL:
        raise OrthogonalPostSelectionError(
            f"orthogonal post-selection: Tr(E rho) = {den} <= {ATOL}"
        )
    num = complex(np.trace(post.matrix @ obs.matrix @ pre.matrix))
    return num / den
