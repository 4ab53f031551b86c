"""Single-photon quantum trajectories for the weak-measurement pipeline.

One photon runs prepare -> eavesdropper -> channel segment a -> weak
interaction with a Gaussian pointer -> channel segment b -> post-selection,
with dark events injected at the detector.  The chunked block driver feeds
the hot-loop kernels; :func:`simulate_photon` is the readable per-photon
reference the kernels are tested against.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from ._kernels.common import (
    CHUNK_SIZE,
    EVE_INTERCEPT_RESEND,
    EVE_INTERCEPT_RESEND_BLINDING,
    EVE_NONE,
    PROJ_COS,
    PROJ_SIN,
    ChunkDraws,
    branch_weights,
    chunk_rng,
    draw_chunk,
)
from .analytics import PROJECTORS, ProjectorChoice
from .noise import ChannelNoise, DarkCountStats
from .quantum import Effect, PureState

_STATE_LABELS = ("0", "1", "+", "-")
_PAULI_LABELS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class WeakMeasurementConfig:
    """Pointer coupling strength g and Gaussian pointer width sigma."""

    g: float
    sigma: float = 1.0

    def __post_init__(self):
        if self.g < 0.0:
            raise ValueError("coupling strength g must be non-negative")
        if self.sigma <= 0.0:
            raise ValueError("pointer width sigma must be positive")

    @property
    def weakness(self) -> float:
        """The g/sigma ratio; 0.1 is the nominal operating point."""
        return self.g / self.sigma


def collapse_probability(cfg: WeakMeasurementConfig) -> float:
    """Probability that one weak interaction flips the signal state:
    (1/4) (1 - exp(-g^2 / 8 sigma^2)), for every preparation and projector."""
    return 0.25 * (1.0 - math.exp(-cfg.g * cfg.g / (8.0 * cfg.sigma * cfg.sigma)))


class EveKind(str, enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    INTERCEPT_RESEND_BLINDING = "intercept_resend_blinding"


@dataclass(frozen=True)
class EveModel:
    """Adversary model.  The blinding variant is the combined attack: it
    always includes the intercept-resend measurement."""

    kind: EveKind = EveKind.NONE

    @classmethod
    def parse(cls, name: str) -> "EveModel":
        return cls(EveKind(name))

    @property
    def code(self) -> int:
        return {
            EveKind.NONE: EVE_NONE,
            EveKind.INTERCEPT_RESEND: EVE_INTERCEPT_RESEND,
            EveKind.INTERCEPT_RESEND_BLINDING: EVE_INTERCEPT_RESEND_BLINDING,
        }[self.kind]


class DarkFlag(enum.IntEnum):
    NONE = 0
    DARK_REPLACED_SIGNAL = 1
    # Schema slot only: simultaneous two-detector clicks are folded into the
    # d / p_b parameters and never sampled separately.
    DOUBLE_CLICK = 2


@dataclass
class PhotonRecord:
    """One protocol round, as Bob's time-ordered lists would carry it."""

    alice_basis: int
    alice_bit: int
    channel_pauli_a: str
    channel_pauli_b: str
    proj_choice: ProjectorChoice
    pointer: float | None
    bob_basis: int
    bob_outcome: int
    dark_flag: DarkFlag
    detected: bool

    def __post_init__(self):
        if (self.pointer is not None) != self.detected:
            raise ValueError("pointer must be present exactly when detected")


def weak_interact(
    state: PureState, proj: Effect, cfg: WeakMeasurementConfig, rng: np.random.Generator
) -> tuple[float, PureState]:
    """Sample one weak interaction: pointer reading plus post-interaction state.

    The pointer is drawn from |alpha|^2 N(0, sigma^2) + |beta|^2 N(g, sigma^2),
    where beta is the amplitude on the projector's +1 eigenvector; the state
    amplitudes are reweighted by the Gaussian envelopes at the sampled
    reading and renormalized.
    """
    if not proj.is_rank1_projector():
        raise ValueError("weak_interact requires a rank-1 projector effect")
    w, v = np.linalg.eigh(proj.matrix)
    h = v[:, int(np.argmax(w))]
    h_perp = np.array([-np.conj(h[1]), np.conj(h[0])])
    psi = state.amplitudes
    beta = complex(np.vdot(h, psi))
    alpha = complex(np.vdot(h_perp, psi))
    p1 = abs(beta) ** 2 / (abs(alpha) ** 2 + abs(beta) ** 2)
    branch = rng.random() < p1
    x = cfg.sigma * rng.standard_normal() + (cfg.g if branch else 0.0)
    s2 = 4.0 * cfg.sigma * cfg.sigma
    w0 = math.exp(-x * x / s2)
    w1 = math.exp(-(x - cfg.g) * (x - cfg.g) / s2)
    new = alpha * w0 * h_perp + beta * w1 * h
    new = new / np.sqrt(abs(new[0]) ** 2 + abs(new[1]) ** 2)
    return x, PureState(new)


def _measure(psi: np.ndarray, basis: int, u: float) -> tuple[int, np.ndarray]:
    # Projective measurement in Z (basis 0) or X (basis 1); outcome 0 is the
    # first basis state (|0> or |+>).
    r = 1.0 / math.sqrt(2.0)
    vecs = (
        (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        if basis == 0
        else (np.array([r, r]), np.array([r, -r]))
    )
    nrm = abs(psi[0]) ** 2 + abs(psi[1]) ** 2
    p0 = abs(np.vdot(vecs[0], psi)) ** 2 / nrm
    out = 0 if u < p0 else 1
    return out, vecs[out].astype(np.complex128)


def _apply_pauli_amps(code: int, psi: np.ndarray) -> np.ndarray:
    if code == 1:
        return np.array([psi[1], psi[0]])
    if code == 2:
        return np.array([-psi[1], psi[0]])  # Y up to a global phase
    if code == 3:
        return np.array([psi[0], -psi[1]])
    return psi


def _pauli_from_uniform(u: float, p: float) -> int:
    if u < 0.5 * p:
        return 1
    if u < p:
        return 2
    if u < 1.5 * p:
        return 3
    return 0


def simulate_photon(
    alice: tuple[int, int],
    eve: EveModel,
    noise: ChannelNoise,
    dark: DarkCountStats,
    cfg: WeakMeasurementConfig,
    rng: np.random.Generator,
) -> PhotonRecord:
    """Reference per-photon pipeline.

    Consumes variates in the documented chunk order (minus Alice's choices,
    which are arguments here) so kernel rows can be replayed against it.
    """
    basis, bit = alice
    r = 1.0 / math.sqrt(2.0)
    prep = ((1.0, 0.0), (0.0, 1.0), (r, r), (r, -r))[2 * basis + bit]
    state = np.array(prep, dtype=np.complex128)

    eve_basis = int(rng.integers(0, 2))
    u_eve = rng.random()
    if eve.kind is not EveKind.NONE:
        _, state = _measure(state, eve_basis, u_eve)

    u_pa = rng.random()
    code_a = _pauli_from_uniform(u_pa, noise.p_a)
    state = _apply_pauli_amps(code_a, state)

    pidx = int(rng.integers(0, 4))
    proj = PROJECTORS[pidx]

    # Weak interaction, inline so the draw order matches the kernels.
    h = np.array([PROJ_COS[pidx], PROJ_SIN[pidx]], dtype=np.complex128)
    h_perp = np.array([-h[1], h[0]])
    beta = complex(np.vdot(h, state))
    alpha = complex(np.vdot(h_perp, state))
    branch = rng.random() < abs(beta) ** 2 / (abs(alpha) ** 2 + abs(beta) ** 2)
    z = rng.standard_normal()
    x = cfg.sigma * z + (cfg.g if branch else 0.0)
    ratio = math.exp(cfg.g * (2.0 * x - cfg.g) / (4.0 * cfg.sigma * cfg.sigma))
    state = alpha * h_perp + (beta * ratio) * h
    state = state / np.sqrt(abs(state[0]) ** 2 + abs(state[1]) ** 2)

    u_pb = rng.random()
    code_b = _pauli_from_uniform(u_pb, noise.p_b)
    state = _apply_pauli_amps(code_b, state)

    bob_basis = int(rng.integers(0, 2))
    u_out = rng.random()
    outcome, _ = _measure(state, bob_basis, u_out)

    # Detection and dark variates are always drawn, used or not, to keep the
    # consumption sequence identical to the batch kernels.
    u_detect = rng.random()
    u_dark = rng.random()
    detected = u_detect < dark.p_signal
    if eve.kind is EveKind.INTERCEPT_RESEND_BLINDING:
        detected = detected and bob_basis == eve_basis
    is_dark = detected and u_dark < dark.d
    if is_dark:
        x = cfg.sigma * z
        outcome = 0 if u_out < 0.5 else 1

    return PhotonRecord(
        alice_basis=basis,
        alice_bit=bit,
        channel_pauli_a=_PAULI_LABELS[code_a],
        channel_pauli_b=_PAULI_LABELS[code_b],
        proj_choice=proj,
        pointer=x if detected else None,
        bob_basis=bob_basis,
        bob_outcome=outcome,
        dark_flag=DarkFlag.DARK_REPLACED_SIGNAL if is_dark else DarkFlag.NONE,
        detected=bool(detected),
    )


@dataclass
class ChunkRecords:
    """Batch of simulated rounds: one entry per photon, chunk-aligned."""

    start: int
    alice_basis: np.ndarray
    alice_bit: np.ndarray
    proj: np.ndarray
    pointer: np.ndarray
    post_a: np.ndarray
    post_b: np.ndarray
    bob_basis: np.ndarray
    bob_outcome: np.ndarray
    pauli_a: np.ndarray
    pauli_b: np.ndarray
    detected: np.ndarray
    dark: np.ndarray

    def __len__(self) -> int:
        return len(self.pointer)

    @property
    def indices(self) -> np.ndarray:
        return self.start + np.arange(len(self), dtype=np.uint32)

    def record(self, i: int) -> PhotonRecord:
        det = bool(self.detected[i])
        return PhotonRecord(
            alice_basis=int(self.alice_basis[i]),
            alice_bit=int(self.alice_bit[i]),
            channel_pauli_a=_PAULI_LABELS[self.pauli_a[i]],
            channel_pauli_b=_PAULI_LABELS[self.pauli_b[i]],
            proj_choice=PROJECTORS[self.proj[i]],
            pointer=float(self.pointer[i]) if det else None,
            bob_basis=int(self.bob_basis[i]),
            bob_outcome=int(self.bob_outcome[i]),
            dark_flag=DarkFlag(int(self.dark[i])),
            detected=det,
        )


def _run_chunk(
    chunk_index: int,
    n: int,
    noise: ChannelNoise,
    dark: DarkCountStats,
    cfg: WeakMeasurementConfig,
    eve: EveModel,
    seed: int,
    kernel,
    same_basis_remeasure: bool,
) -> ChunkRecords:
    rng = chunk_rng(seed, chunk_index)
    draws = draw_chunk(rng, n)
    if same_basis_remeasure:
        # Re-measure in the preparation basis (back-action studies).  The
        # draw sequence is unchanged; only the announced basis is overridden.
        draws = ChunkDraws(**{**draws.__dict__, "bob_basis": draws.alice_basis.copy()})
    r0, r1 = branch_weights(draws.z, cfg.g, cfg.sigma)
    out = kernel.simulate_chunk(
        draws, r0, r1, eve.code, noise.p_a, noise.p_b, dark.d, dark.p_signal, cfg.g, cfg.sigma
    )
    pointer, post_a, post_b, bob_out, pauli_a, pauli_b, detected, dark_f = out
    return ChunkRecords(
        start=chunk_index * CHUNK_SIZE,
        alice_basis=draws.alice_basis,
        alice_bit=draws.alice_bit,
        proj=draws.proj,
        pointer=pointer,
        post_a=post_a,
        post_b=post_b,
        bob_basis=draws.bob_basis,
        bob_outcome=bob_out,
        pauli_a=pauli_a,
        pauli_b=pauli_b,
        detected=detected,
        dark=dark_f,
    )


def simulate_block(
    n_photons: int,
    noise: ChannelNoise,
    dark: DarkCountStats,
    cfg: WeakMeasurementConfig,
    eve: EveModel,
    seed: int,
    backend: str | None = None,
    workers: int = 1,
    same_basis_remeasure: bool = False,
) -> Iterator[ChunkRecords]:
    """Yield simulated chunks in photon-index order.

    Chunk boundaries and per-chunk RNG streams are fixed by CHUNK_SIZE and
    the seed, so the worker count never changes any result.
    """
    if n_photons <= 0:
        raise ValueError("n_photons must be positive")
    kernel = _kernels.get_backend(backend)
    n_chunks = (n_photons + CHUNK_SIZE - 1) // CHUNK_SIZE

    def job(ci: int) -> ChunkRecords:
        size = min(CHUNK_SIZE, n_photons - ci * CHUNK_SIZE)
        return _run_chunk(ci, size, noise, dark, cfg, eve, seed, kernel, same_basis_remeasure)

    if workers <= 1:
        for ci in range(n_chunks):
            yield job(ci)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(job, range(n_chunks))


def backaction_flip_rate(
    cfg: WeakMeasurementConfig,
    n_rounds: int,
    seed: int,
    backend: str | None = None,
) -> tuple[int, int]:
    """Prepare, weakly measure, re-measure in the same basis; count flips.

    Returns (flips, rounds).  The flip fraction converges to the collapse
    probability (1/4)(1 - exp(-g^2 / 8 sigma^2)).
    """
    flips = 0
    for chunk in simulate_block(
        n_rounds,
        ChannelNoise(0.0, 0.0),
        DarkCountStats.ideal(),
        cfg,
        EveModel(),
        seed,
        backend=backend,
        same_basis_remeasure=True,
    ):
        flips += int(np.count_nonzero(chunk.bob_outcome != chunk.alice_bit))
    return flips, n_rounds


def damping_factor(cfg: WeakMeasurementConfig) -> float:
    """Off-diagonal coherence factor exp(-g^2 / 8 sigma^2) of the marginal
    post-interaction state."""
    return math.exp(-cfg.g * cfg.g / (8.0 * cfg.sigma * cfg.sigma))
