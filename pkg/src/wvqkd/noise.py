"""Channel and detector parameter sets, dark-count attenuation, QBER split."""

from __future__ import annotations

from dataclasses import dataclass


class DeadChannelError(ValueError):
    """No photons and no dark counts: nothing ever clicks."""


@dataclass(frozen=True)
class ChannelNoise:
    """Bit-error probabilities before (p_a) and after (p_b) the weak
    measurement."""

    p_a: float = 0.0
    p_b: float = 0.0

    def __post_init__(self):
        for name in ("p_a", "p_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name}={v} outside [0, 1/2]")

    @property
    def p_channel(self) -> float:
        return self.p_a + self.p_b


@dataclass(frozen=True)
class DetectorModel:
    """Physical detector/link parameters.

    r_d1, r_d2: dark count rates (1/s); t: detection window (s);
    eta: average detector efficiency; kappa: channel loss rate (dB/km);
    l: fiber length (km); c: bulk optical loss (dB).
    """

    r_d1: float = 0.0
    r_d2: float = 0.0
    t: float = 1e-9
    eta: float = 1.0
    kappa: float = 0.0
    l: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        for name in ("r_d1", "r_d2", "t", "eta", "kappa", "l", "c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.eta > 1.0:
            raise ValueError("eta must not exceed 1")
        if self.r_d1 * self.t > 1.0 or self.r_d2 * self.t > 1.0:
            raise ValueError("dark count probability r_d * t exceeds 1")


@dataclass(frozen=True)
class DarkCountStats:
    """Per-window click probabilities and the attenuation parameter d."""

    p_d1: float
    p_d2: float
    p_dark: float
    p_photon: float
    p_signal: float
    d: float

    def __post_init__(self):
        for name in ("p_d1", "p_d2", "p_dark", "p_photon", "p_signal", "d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.p_signal + 1e-15 < self.p_dark or self.p_signal + 1e-15 < self.p_photon:
            raise ValueError("p_signal must dominate p_dark and p_photon")
        if self.p_signal > 0 and abs(self.d - self.p_dark / self.p_signal) > 1e-12:
            raise ValueError("d inconsistent with p_dark / p_signal")

    @classmethod
    def ideal(cls) -> "DarkCountStats":
        """Lossless link, dark-free detectors."""
        return cls(0.0, 0.0, 0.0, 1.0, 1.0, 0.0)

    @classmethod
    def with_attenuation(cls, d: float, p_signal: float = 1.0) -> "DarkCountStats":
        """Synthetic stats that inject a chosen dark fraction d directly."""
        return cls(0.0, 0.0, d * p_signal, p_signal * (1.0 - d), p_signal, d)


def dark_params(det: DetectorModel) -> DarkCountStats:
    """Evaluate the dark-count parameter chain for a detector model.

    p_d_i = r_d_i * t, combined by inclusion-exclusion into p_dark;
    p_photon = eta * 10^(-(kappa*l + c)/10); p_signal combines photon and
    dark clicks; d = p_dark / p_signal.
    """
    p_d1 = det.r_d1 * det.t
    p_d2 = det.r_d2 * det.t
    p_dark = p_d1 + p_d2 - p_d1 * p_d2
    p_photon = det.eta * 10.0 ** (-(det.kappa * det.l + det.c) / 10.0)
    p_signal = p_photon + p_dark - p_photon * p_dark
    if p_signal <= 0.0:
        raise DeadChannelError("dead channel: no photons and no dark counts")
    return DarkCountStats(p_d1, p_d2, p_dark, p_photon, p_signal, p_dark / p_signal)


def total_qber(p_channel: float, d: float) -> float:
    """QBER = p_channel + d/2: dark clicks are uncorrelated, so they err on
    half the matched-basis rounds."""
    if not 0.0 <= p_channel <= 1.0 or not 0.0 <= d <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    return p_channel + 0.5 * d
