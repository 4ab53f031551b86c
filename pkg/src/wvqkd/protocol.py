"""End-to-end protocol execution: block simulation, sifting, ensemble
separation, estimators, attack signatures and the security verdict.

Matched-basis detections become sifted key and are never disclosed;
cross-basis detections are announced and feed the eight pre/post-selected
ensembles from which every estimator is derived.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .analytics import (
    IDEAL_ANOMALOUS_WV,
    PPSKey,
    PROJECTORS,
    ProjectorChoice,
    anomalous_projector,
    blinding_weak_value,
)
from .contextuality import (
    ContextualityReport,
    SecurityVerdict,
    VerdictStatus,
    contextuality_measure,
    verdict,
)
from .noise import (
    ChannelNoise,
    DarkCountStats,
    DeadChannelError,
    DetectorModel,
    dark_params,
    total_qber,
)
from .quantum import SQRT2
from .trajectory import (
    ChunkRecords,
    EveKind,
    EveModel,
    WeakMeasurementConfig,
    simulate_block,
)

_PPS_LIST = list(PPSKey)

# (alice state id, bob outcome state id) -> ensemble index; -1 for
# matched-basis pairs.  State ids: 0 |0>, 1 |1>, 2 |+>, 3 |->.
ENSEMBLE_TABLE = -np.ones((4, 4), dtype=np.int8)
for _key in _PPS_LIST:
    _pre = {"0": 0, "1": 1, "+": 2, "-": 3}[_key.pre_label]
    _post = {"0": 0, "1": 1, "+": 2, "-": 3}[_key.post_label]
    ENSEMBLE_TABLE[_pre, _post] = _key.index

_COMPLEMENT_IDX = (2, 3, 0, 1)

# Per group: projector pair used by the channel-error estimator and the sign
# of the normalized mean difference, p = 1 - sign * (mu - mu_perp) /
# (sqrt(2) (mu + mu_perp)).
_GROUP_PROJ = (0, 1, 1, 0)
_GROUP_SIGN = (+1.0, +1.0, -1.0, -1.0)

_K1 = (1.0 + SQRT2) / 2.0
_K3 = (1.0 - SQRT2) / 2.0
# Per ensemble: how (p_b, p_a) are read off the two plain weak values via
# S = (H+ + H-)/sqrt(2) and D = (H+ - H-)/sqrt(2).  Terms are (const, coef).
_INVERSION = (
    ((_K1, -1.0, "S"), (0.5, -1.0, "D")),  # 1a
    ((0.5, -1.0, "D"), (_K1, -1.0, "S")),  # 1b
    ((_K1, -1.0, "S"), (0.5, +1.0, "D")),  # 2a
    ((0.5, +1.0, "D"), (_K1, -1.0, "S")),  # 2b
    ((_K3, +1.0, "S"), (0.5, -1.0, "D")),  # 3a
    ((0.5, -1.0, "D"), (_K3, +1.0, "S")),  # 3b
    ((_K3, +1.0, "S"), (0.5, +1.0, "D")),  # 4a
    ((0.5, +1.0, "D"), (_K3, +1.0, "S")),  # 4b
)


class DegenerateCouplingError(RuntimeError):
    """Pointer means summed to a non-positive coupling estimate: the data is
    catastrophically noisy or adversarially shaped."""


class MisalignedStreamsError(ValueError):
    """Record stream and announcement streams have different lengths."""


class _MomentAccumulator:
    """Streaming (count, mean, M2) over an array of buckets, merged with the
    parallel-Welford combination rule."""

    def __init__(self, shape: tuple[int, ...]):
        self.n = np.zeros(shape, dtype=np.int64)
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def add_moments(self, n_b: np.ndarray, mean_b: np.ndarray, m2_b: np.ndarray) -> None:
        n_a = self.n
        tot = n_a + n_b
        safe = np.where(tot > 0, tot, 1)
        delta = mean_b - self.mean
        self.mean = np.where(
            n_b > 0, self.mean + delta * (n_b / safe), self.mean
        )
        self.m2 = np.where(
            n_b > 0, self.m2 + m2_b + delta * delta * (n_a * (n_b / safe)), self.m2
        )
        self.n = tot

    def add_batch(self, keys: np.ndarray, values: np.ndarray) -> None:
        size = self.n.size
        counts = np.bincount(keys, minlength=size)
        sums = np.bincount(keys, weights=values, minlength=size)
        sumsq = np.bincount(keys, weights=values * values, minlength=size)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean_b = np.where(counts > 0, sums / np.where(counts > 0, counts, 1), 0.0)
        m2_b = np.maximum(sumsq - sums * mean_b, 0.0)
        self.add_moments(
            counts.reshape(self.n.shape),
            mean_b.reshape(self.n.shape),
            m2_b.reshape(self.n.shape),
        )

    def merge(self, other: "_MomentAccumulator") -> None:
        self.add_moments(other.n, other.mean, other.m2)

    def variance(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n > 1, self.m2 / np.maximum(self.n - 1, 1), 0.0)

    def se_mean(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.sqrt(self.variance() / np.maximum(self.n, 1))


class PPSAccumulator:
    """Pointer statistics per (ensemble, projector), plus the unconditioned
    per-projector statistics over all detected rounds."""

    def __init__(self):
        self.cond = _MomentAccumulator((8, 4))
        self.uncond = _MomentAccumulator((4,))

    def add_cross_records(self, records: ChunkRecords) -> None:
        """Bucket cross-basis records into the eight ensembles."""
        a_state = 2 * records.alice_basis.astype(np.intp) + records.alice_bit
        b_state = 2 * records.bob_basis.astype(np.intp) + records.bob_outcome
        ens = ENSEMBLE_TABLE[a_state, b_state]
        if np.any(ens < 0):
            raise ValueError("matched-basis record passed to ensemble separation")
        keys = ens.astype(np.intp) * 4 + records.proj
        self.cond.add_batch(keys, records.pointer)

    def add_unconditioned(self, records: ChunkRecords) -> None:
        """Feed every detected round, matched or not: the coupling estimate
        uses all weak-measurement data."""
        self.uncond.add_batch(records.proj.astype(np.intp), records.pointer)

    def merge(self, other: "PPSAccumulator") -> None:
        self.cond.merge(other.cond)
        self.uncond.merge(other.uncond)

    @property
    def counts(self) -> np.ndarray:
        return self.cond.n


@dataclass
class Estimates:
    """Everything Bob reads off the pointer statistics."""

    g_plus: float
    g_minus: float
    g_plus_se: float
    g_minus_se: float
    h_w: np.ndarray
    h_w_se: np.ndarray
    counts: np.ndarray
    p_channel: np.ndarray
    p_channel_se: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    p_a_se: np.ndarray
    p_b_se: np.ndarray
    qber: float
    qber_se: float
    p_channel_spread: float
    dark_attenuation: float
    pointer_mean: np.ndarray
    pointer_se: np.ndarray
    clamped: list[str] = field(default_factory=list)


def sift(
    records: ChunkRecords, alice_bases: np.ndarray, alice_bits: np.ndarray
) -> tuple[tuple[np.ndarray, np.ndarray], ChunkRecords]:
    """Split detected rounds into key material and the disclosed
    estimation set.

    Matched-basis detections pair Alice's bit with Bob's outcome;
    cross-basis detections are returned for ensemble separation.  No round
    lands in both.
    """
    if len(alice_bases) != len(records) or len(alice_bits) != len(records):
        raise MisalignedStreamsError(
            f"{len(records)} records vs {len(alice_bases)}/{len(alice_bits)} announcements"
        )
    det = records.detected.astype(bool)
    matched = det & (alice_bases == records.bob_basis)
    cross = det & ~matched
    key_pairs = (
        alice_bits[matched].astype(np.uint8),
        records.bob_outcome[matched].astype(np.uint8),
    )
    return key_pairs, _subset(records, cross)


def _subset(records: ChunkRecords, mask: np.ndarray) -> ChunkRecords:
    out = ChunkRecords(
        start=records.start,
        alice_basis=records.alice_basis[mask],
        alice_bit=records.alice_bit[mask],
        proj=records.proj[mask],
        pointer=records.pointer[mask],
        post_a=records.post_a[mask],
        post_b=records.post_b[mask],
        bob_basis=records.bob_basis[mask],
        bob_outcome=records.bob_outcome[mask],
        pauli_a=records.pauli_a[mask],
        pauli_b=records.pauli_b[mask],
        detected=records.detected[mask],
        dark=records.dark[mask],
    )
    return out


def separate_ensembles(
    cross_records: ChunkRecords, acc: PPSAccumulator | None = None
) -> PPSAccumulator:
    """Route disclosed cross-basis records into their (ensemble, projector)
    buckets; pass an existing accumulator to stream over chunks."""
    if acc is None:
        acc = PPSAccumulator()
    if len(cross_records):
        acc.add_cross_records(cross_records)
    return acc


def _ratio_and_se(m: float, mc: float, v: float, vc: float) -> tuple[float, float]:
    den = m + mc
    if den <= 0.0:
        raise DegenerateCouplingError(
            f"pointer means {m} + {mc} give non-positive normalization"
        )
    h = m / den
    se = math.sqrt(mc * mc * v + m * m * vc) / (den * den)
    return h, se


def estimate(acc: PPSAccumulator, d: float) -> Estimates:
    """Run the full estimator chain on accumulated pointer statistics.

    The coupling strengths come from the unconditioned pair sums divided by
    (1 - d); the per-ensemble weak values are ratio estimates in which the
    dark attenuation cancels; the per-group channel error and per-ensemble
    (p_a, p_b) follow from their closed-form inversions.  Standard errors
    are first-order (delta method) throughout.
    """
    if not 0.0 <= d < 1.0:
        raise ValueError(f"dark attenuation d={d} outside [0, 1)")
    if np.any(acc.cond.n == 0):
        empty = int(np.count_nonzero(acc.cond.n == 0))
        raise ValueError(f"insufficient statistics: {empty} empty ensemble buckets")
    um = acc.uncond.mean
    uv = acc.uncond.se_mean() ** 2
    scale = 1.0 - d
    sums = (um[0] + um[2], um[1] + um[3])
    if sums[0] <= 0.0 or sums[1] <= 0.0:
        raise DegenerateCouplingError(
            f"unconditioned pointer means sum to {sums}, expected positive couplings"
        )
    g_plus = sums[0] / scale
    g_minus = sums[1] / scale
    g_plus_se = math.sqrt(uv[0] + uv[2]) / scale
    g_minus_se = math.sqrt(uv[1] + uv[3]) / scale

    cm = acc.cond.mean
    cv = acc.cond.se_mean() ** 2
    h_w = np.empty((8, 4))
    h_w_se = np.empty((8, 4))
    for e in range(8):
        for j in range(4):
            jc = _COMPLEMENT_IDX[j]
            h_w[e, j], h_w_se[e, j] = _ratio_and_se(cm[e, j], cm[e, jc], cv[e, j], cv[e, jc])

    clamped: list[str] = []
    p_channel = np.empty(4)
    p_channel_se = np.empty(4)
    for grp in range(4):
        j = _GROUP_PROJ[grp]
        jc = _COMPLEMENT_IDX[j]
        ea, eb = 2 * grp, 2 * grp + 1
        n_j = acc.cond.n[ea, j] + acc.cond.n[eb, j]
        n_jc = acc.cond.n[ea, jc] + acc.cond.n[eb, jc]
        mu = (acc.cond.n[ea, j] * cm[ea, j] + acc.cond.n[eb, j] * cm[eb, j]) / n_j
        muc = (acc.cond.n[ea, jc] * cm[ea, jc] + acc.cond.n[eb, jc] * cm[eb, jc]) / n_jc
        v = (
            acc.cond.n[ea, j] ** 2 * cv[ea, j] + acc.cond.n[eb, j] ** 2 * cv[eb, j]
        ) / n_j**2
        vc = (
            acc.cond.n[ea, jc] ** 2 * cv[ea, jc] + acc.cond.n[eb, jc] ** 2 * cv[eb, jc]
        ) / n_jc**2
        den = mu + muc
        if den <= 0.0:
            raise DegenerateCouplingError(
                f"group {grp + 1} pointer means sum to {den}, expected positive"
            )
        ratio = (mu - muc) / den
        se_ratio = 2.0 * math.sqrt(muc * muc * v + mu * mu * vc) / (den * den)
        p = 1.0 - _GROUP_SIGN[grp] * ratio / SQRT2
        p_channel[grp], was = _clamp01(p)
        if was:
            clamped.append(f"p_channel[group{grp + 1}]")
        p_channel_se[grp] = se_ratio / SQRT2

    p_a = np.empty(8)
    p_b = np.empty(8)
    p_a_se = np.empty(8)
    p_b_se = np.empty(8)
    for e in range(8):
        hp, hm = h_w[e, 0], h_w[e, 1]
        sp, sm = h_w_se[e, 0], h_w_se[e, 1]
        s_val = (hp + hm) / SQRT2
        d_val = (hp - hm) / SQRT2
        se_sd = math.sqrt(sp * sp + sm * sm) / SQRT2
        terms = {"S": (s_val, se_sd), "D": (d_val, se_sd)}
        (cb, kb, tb), (ca_, ka, ta) = _INVERSION[e]
        pb_raw = cb + kb * terms[tb][0]
        pa_raw = ca_ + ka * terms[ta][0]
        p_b[e], was_b = _clamp01(pb_raw)
        p_a[e], was_a = _clamp01(pa_raw)
        label = _PPS_LIST[e].value
        if was_b:
            clamped.append(f"p_b[{label}]")
        if was_a:
            clamped.append(f"p_a[{label}]")
        p_b_se[e] = terms[tb][1]
        p_a_se[e] = terms[ta][1]

    qber_raw = float(np.mean(p_channel)) + d / 2.0
    qber, was = _clamp01(qber_raw)
    if was:
        clamped.append("qber")
    qber_se = float(np.sqrt(np.sum(p_channel_se**2)) / 4.0)

    return Estimates(
        g_plus=g_plus,
        g_minus=g_minus,
        g_plus_se=g_plus_se,
        g_minus_se=g_minus_se,
        h_w=h_w,
        h_w_se=h_w_se,
        counts=acc.cond.n.copy(),
        p_channel=p_channel,
        p_channel_se=p_channel_se,
        p_a=p_a,
        p_b=p_b,
        p_a_se=p_a_se,
        p_b_se=p_b_se,
        qber=qber,
        qber_se=qber_se,
        p_channel_spread=float(p_channel.max() - p_channel.min()),
        dark_attenuation=d,
        pointer_mean=acc.cond.mean.copy(),
        pointer_se=acc.cond.se_mean(),
        clamped=clamped,
    )


def _clamp01(x: float) -> tuple[float, bool]:
    if x < 0.0:
        return 0.0, True
    if x > 1.0:
        return 1.0, True
    return float(x), False


def contextuality_reports(
    est: Estimates,
) -> tuple[list[ContextualityReport], list[float]]:
    """Empirical contextuality of each ensemble's designated anomalous
    projector: the ratio weak value rescaled by (1 - d) to the attenuated
    convention, scored against the noiseless anomaly."""
    scale = 1.0 - est.dark_attenuation
    reports = []
    ses = []
    for key in _PPS_LIST:
        proj = anomalous_projector(key)
        j = proj.index
        observed = scale * est.h_w[key.index, j]
        c = contextuality_measure(observed, IDEAL_ANOMALOUS_WV, proj)
        reports.append(
            ContextualityReport(key, proj, observed, IDEAL_ANOMALOUS_WV, c)
        )
        ses.append(scale * est.h_w_se[key.index, j] / (IDEAL_ANOMALOUS_WV - 1.0))
    return reports, ses


_BLINDING_PREDICTION = np.array(
    [
        [blinding_weak_value(key.post_label, proj) for proj in PROJECTORS]
        for key in _PPS_LIST
    ]
)


def detect_blinding(estimates: Estimates, margin: float = 3.0) -> bool:
    """Detector-blinding signature test.

    Requires (i) every designated anomalous weak value suppressed into
    [0, 1] within the margin, (ii) every (ensemble, projector) ratio
    matching the outcome-clustered expectation value within a widened
    margin, and (iii) the time-reversal asymmetry the attack imprints on
    each group, in the predicted direction.  Honest noise fails (i) or
    (ii); a plain intercept-resend attack fails (iii).
    """
    d = estimates.dark_attenuation
    scale = 1.0 - d
    for key in _PPS_LIST:
        j = anomalous_projector(key).index
        att = scale * estimates.h_w[key.index, j]
        se = scale * estimates.h_w_se[key.index, j]
        if att > 1.0 + margin * se or att < -margin * se:
            return False

    # Widened window: the pattern match must not flake for a genuine attack
    # across 32 simultaneous buckets.
    wide = margin + 2.0
    diff = np.abs(estimates.h_w - _BLINDING_PREDICTION)
    if np.any(diff > wide * estimates.h_w_se + 1e-12):
        return False

    for grp in range(4):
        ea, eb = 2 * grp, 2 * grp + 1
        for j in range(4):
            gap = _BLINDING_PREDICTION[ea, j] - _BLINDING_PREDICTION[eb, j]
            if abs(gap) < 1e-9:
                continue
            delta = estimates.h_w[ea, j] - estimates.h_w[eb, j]
            se_delta = math.hypot(estimates.h_w_se[ea, j], estimates.h_w_se[eb, j])
            if math.copysign(1.0, delta) != math.copysign(1.0, gap):
                return False
            if abs(delta) <= margin * se_delta:
                return False
    return True


@dataclass(frozen=True)
class ProtocolConfig:
    """One protocol run.  block_size is the raw block length 2N."""

    block_size: int
    noise: ChannelNoise = ChannelNoise()
    wm: WeakMeasurementConfig = WeakMeasurementConfig(g=0.1, sigma=1.0)
    eve: EveModel = EveModel()
    detector: DetectorModel | None = None
    dark: float | None = None
    seed: int = 0
    margin: float = 3.0
    workers: int = 1
    backend: str | None = None
    dark_calibration_split: bool = False

    def __post_init__(self):
        if self.block_size <= 0:
            raise ValueError("block_size must be positive")
        if self.block_size < 10_000:
            warnings.warn(
                "block_size below 10^4: estimator statistics will be unstable",
                stacklevel=2,
            )
        if self.dark is not None and not 0.0 <= self.dark <= 1.0:
            raise ValueError("dark attenuation must lie in [0, 1]")
        if self.margin < 0.0:
            raise ValueError("margin must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def dark_stats(self) -> DarkCountStats:
        if self.dark is not None:
            p_signal = 1.0
            if self.detector is not None:
                p_signal = dark_params(self.detector).p_signal
            return DarkCountStats.with_attenuation(self.dark, p_signal)
        if self.detector is not None:
            return dark_params(self.detector)
        return DarkCountStats.ideal()

    def to_dict(self) -> dict:
        # Canonical, result-determining parameters only: worker count and
        # backend choice never alter any output, so they stay out of the
        # embedded config and its hash.
        out = {
            "photons": self.block_size,
            "noise": {"p_a": self.noise.p_a, "p_b": self.noise.p_b},
            "weak_measurement": {"g": self.wm.g, "sigma": self.wm.sigma},
            "eve": self.eve.kind.value,
            "seed": self.seed,
            "margin": self.margin,
            "dark_calibration_split": self.dark_calibration_split,
        }
        if self.detector is not None:
            out["detector"] = {
                k: getattr(self.detector, k)
                for k in ("r_d1", "r_d2", "t", "eta", "kappa", "l", "c")
            }
        if self.dark is not None:
            out["dark"] = self.dark
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolConfig":
        det = None
        if "detector" in data and data["detector"] is not None:
            det = DetectorModel(**data["detector"])
        return cls(
            block_size=data["photons"],
            noise=ChannelNoise(**data.get("noise", {})),
            wm=WeakMeasurementConfig(**data.get("weak_measurement", {"g": 0.1})),
            eve=EveModel.parse(data.get("eve", "none")),
            detector=det,
            dark=data.get("dark"),
            seed=data.get("seed", 0),
            margin=data.get("margin", 3.0),
            workers=data.get("workers", 1),
            dark_calibration_split=data.get("dark_calibration_split", False),
        )

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ProtocolTranscript:
    """Outcome of one run: the stub boundary emits the raw sifted keys and
    the verdict; reconciliation and privacy amplification live elsewhere."""

    sifted_key_alice: np.ndarray
    sifted_key_bob: np.ndarray
    estimates: Estimates | None
    contextuality: list[ContextualityReport]
    contextuality_se: list[float]
    verdict: SecurityVerdict
    metadata: dict
    sifted_indices: np.ndarray
    disclosed_indices: np.ndarray
    disclosed_bits: np.ndarray

    def to_json_dict(self, include_keys: bool = True) -> dict:
        est = self.estimates
        public: dict = {
            "cross_count": int(len(self.disclosed_indices)),
            "ensemble_statistics": [],
            "estimates": None,
            "contextuality": [
                {
                    "ensemble": r.ensemble.value,
                    "projector": r.projector.label,
                    "observed_wv": r.observed_wv,
                    "ideal_wv": r.ideal_wv,
                    "c_value": r.c_value,
                    "c_se": se,
                }
                for r, se in zip(self.contextuality, self.contextuality_se)
            ],
            "verdict": {
                "status": self.verdict.status.value,
                "min_c": self.verdict.min_c,
                "margin": self.verdict.margin,
                "reason": self.verdict.reason,
                "pooled_c": self.verdict.pooled_c,
            },
        }
        if est is not None:
            for key in _PPS_LIST:
                for proj in PROJECTORS:
                    e, j = key.index, proj.index
                    public["ensemble_statistics"].append(
                        {
                            "ensemble": key.value,
                            "projector": proj.label,
                            "count": int(est.counts[e, j]),
                            "pointer_mean": est.pointer_mean[e, j],
                            "pointer_se": est.pointer_se[e, j],
                            "h_w": est.h_w[e, j],
                            "h_w_se": est.h_w_se[e, j],
                        }
                    )
            public["estimates"] = {
                "g_plus": est.g_plus,
                "g_minus": est.g_minus,
                "g_plus_se": est.g_plus_se,
                "g_minus_se": est.g_minus_se,
                "p_channel": est.p_channel.tolist(),
                "p_channel_se": est.p_channel_se.tolist(),
                "p_a": est.p_a.tolist(),
                "p_b": est.p_b.tolist(),
                "p_a_se": est.p_a_se.tolist(),
                "p_b_se": est.p_b_se.tolist(),
                "qber": est.qber,
                "qber_se": est.qber_se,
                "p_channel_spread": est.p_channel_spread,
                "dark_attenuation": est.dark_attenuation,
                "clamped": est.clamped,
            }
        private: dict = {
            "diagnostics": {
                "key_error_rate": self.metadata["counts"].get("key_error_rate"),
            }
        }
        if include_keys:
            private["sifted_key_alice"] = _bits_to_str(self.sifted_key_alice)
            private["sifted_key_bob"] = _bits_to_str(self.sifted_key_bob)
        return {"metadata": self.metadata, "public": public, "private": private}


def _bits_to_str(bits: np.ndarray) -> str:
    if len(bits) == 0:
        return ""
    return "".join(np.where(bits.astype(bool), "1", "0").tolist())


def run_protocol(cfg: ProtocolConfig) -> ProtocolTranscript:
    """Execute the protocol on a block of cfg.block_size photons."""
    dark_stats = cfg.dark_stats()
    acc = PPSAccumulator()
    key_alice: list[np.ndarray] = []
    key_bob: list[np.ndarray] = []
    sifted_idx: list[np.ndarray] = []
    cross_idx: list[np.ndarray] = []
    cross_bits: list[np.ndarray] = []
    n_detected = 0
    n_dark = 0
    n_calibration = 0

    for chunk in simulate_block(
        cfg.block_size,
        cfg.noise,
        dark_stats,
        cfg.wm,
        cfg.eve,
        cfg.seed,
        backend=cfg.backend,
        workers=cfg.workers,
    ):
        indices = chunk.indices
        if cfg.dark_calibration_split:
            # Odd rounds are spent on Bob's path-blocked dark calibration;
            # they never enter the key or the estimators.
            keep = (indices % 2) == 0
            n_calibration += int(np.count_nonzero(~keep))
            chunk = _subset(chunk, keep)
            indices = indices[keep]
        det = chunk.detected.astype(bool)
        n_detected += int(np.count_nonzero(det))
        n_dark += int(np.count_nonzero(chunk.dark))
        detected_records = _subset(chunk, det)
        det_indices = indices[det]
        acc.add_unconditioned(detected_records)
        (ka, kb), cross_records = sift(
            detected_records, detected_records.alice_basis, detected_records.alice_bit
        )
        key_alice.append(ka)
        key_bob.append(kb)
        matched_mask = detected_records.alice_basis == detected_records.bob_basis
        sifted_idx.append(det_indices[matched_mask])
        cross_idx.append(det_indices[~matched_mask])
        cross_bits.append(cross_records.alice_bit.copy())
        separate_ensembles(cross_records, acc)

    if n_detected == 0:
        raise DeadChannelError("no photon was ever detected")

    sifted_key_alice = np.concatenate(key_alice) if key_alice else np.empty(0, np.uint8)
    sifted_key_bob = np.concatenate(key_bob) if key_bob else np.empty(0, np.uint8)
    key_errors = int(np.count_nonzero(sifted_key_alice != sifted_key_bob))
    counts = {
        "photons": cfg.block_size,
        "detected": n_detected,
        "dark_events": n_dark,
        "calibration_rounds": n_calibration,
        "sifted_pairs": int(len(sifted_key_alice)),
        "cross_disclosed": int(sum(len(c) for c in cross_idx)),
        "key_errors": key_errors,
        "key_error_rate": key_errors / len(sifted_key_alice) if len(sifted_key_alice) else None,
    }
    metadata = {
        "schema": 1,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "backend": _kernels.get_backend(cfg.backend).NAME,
        "counts": counts,
    }

    empty_buckets = int(np.count_nonzero(acc.cond.n == 0))
    if empty_buckets:
        sv = SecurityVerdict(
            VerdictStatus.ABORT,
            0.0,
            cfg.margin,
            f"insufficient statistics: {empty_buckets} empty ensemble buckets",
            float("nan"),
        )
        return ProtocolTranscript(
            sifted_key_alice,
            sifted_key_bob,
            None,
            [],
            [],
            sv,
            metadata,
            np.concatenate(sifted_idx) if sifted_idx else np.empty(0, np.uint32),
            np.concatenate(cross_idx) if cross_idx else np.empty(0, np.uint32),
            np.concatenate(cross_bits) if cross_bits else np.empty(0, np.uint8),
        )

    est = estimate(acc, dark_stats.d)
    reports, ses = contextuality_reports(est)
    blinded = detect_blinding(est, cfg.margin)
    sv = verdict(reports, ses, cfg.margin, blinded)
    return ProtocolTranscript(
        sifted_key_alice,
        sifted_key_bob,
        est,
        reports,
        ses,
        sv,
        metadata,
        np.concatenate(sifted_idx),
        np.concatenate(cross_idx),
        np.concatenate(cross_bits),
    )


def expected_qber(cfg: ProtocolConfig) -> float:
    """Analytic QBER for an honest run of this configuration."""
    return total_qber(cfg.noise.p_channel, cfg.dark_stats().d)
