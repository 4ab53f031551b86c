"""Contextuality scoring and the channel-security decision rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .analytics import IDEAL_ANOMALOUS_WV, PPSKey, ProjectorChoice, is_anomalous

#: Weight of the classical component in the convex-mixture security argument.
#: Equal quantum/classical proportions give the decision rule C > 1/2.
SECURITY_MIXTURE_WEIGHT = 0.5

#: Channel-error threshold at zero dark counts: 1/2 - sqrt(2)/4.
SECURE_P_CHANNEL_MAX = 0.5 - math.sqrt(2.0) / 4.0

#: Dark attenuation beyond which no channel error rate is secure.
SECURE_DARK_MAX = (math.sqrt(2.0) - 1.0) / (2.0 * (math.sqrt(2.0) + 1.0))

_DENOM = IDEAL_ANOMALOUS_WV - 1.0  # 1/sqrt(2) - 1/2


class NonAnomalousReferenceError(ValueError):
    """The supplied ideal weak value sits inside [0, 1]: the caller scored
    the wrong projector."""


class VerdictStatus(str, enum.Enum):
    SECURE = "secure"
    ABORT = "abort"
    BLINDING_SIGNATURE = "blinding_signature"


def contextuality_measure(
    observed_wv: float, ideal_wv: float, proj: ProjectorChoice | None = None
) -> float:
    """Normalized distance of an anomalous weak value from the projector
    spectrum, relative to its noiseless size.

    Zero whenever the observed value sits inside [0, 1] (boundary values
    included: conservative for security).  ``proj`` only labels error
    messages; projector eigenvalues are always {0, 1}.
    """
    if not is_anomalous(ideal_wv):
        label = proj.label if proj is not None else "projector"
        raise NonAnomalousReferenceError(
            f"ideal weak value {ideal_wv} for {label} is not anomalous"
        )
    if 0.0 <= observed_wv <= 1.0:
        return 0.0
    near = 0.0 if observed_wv < 0.0 else 1.0
    c = abs(observed_wv - near) / abs(ideal_wv - near)
    return min(c, 1.0)


def analytic_contextuality(p_channel: float, d: float = 0.0) -> float:
    """Closed-form measure for symmetric channel noise,
    ((1-d)(1/2 + (1-p)/sqrt(2)) - 1) / (1/sqrt(2) - 1/2), clamped to [0, 1]."""
    if not 0.0 <= p_channel <= 1.0 or not 0.0 <= d <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    c = ((1.0 - d) * (0.5 + (1.0 - p_channel) / math.sqrt(2.0)) - 1.0) / _DENOM
    return min(1.0, max(0.0, c))


def secure_noise_region(p_channel: float, d: float) -> bool:
    """True iff p_channel (1 - d) + d (1 + 1/sqrt(2)) < 1/2 - sqrt(2)/4,
    strictly.  Equivalent to the analytic measure exceeding 1/2."""
    if not 0.0 <= p_channel <= 1.0 or not 0.0 <= d <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    lhs = p_channel * (1.0 - d) + d * (1.0 + 1.0 / math.sqrt(2.0))
    return lhs < SECURE_P_CHANNEL_MAX


@dataclass(frozen=True)
class ContextualityReport:
    """Contextuality score of one ensemble's designated anomalous projector."""

    ensemble: PPSKey
    projector: ProjectorChoice
    observed_wv: float
    ideal_wv: float
    c_value: float


@dataclass(frozen=True)
class SecurityVerdict:
    status: VerdictStatus
    min_c: float
    margin: float
    reason: str = ""
    pooled_c: float = field(default=float("nan"))


def verdict(
    reports: Sequence[ContextualityReport],
    standard_errors: Sequence[float],
    margin: float = 3.0,
    blinding_flag: bool = False,
) -> SecurityVerdict:
    """Security decision over the per-ensemble contextuality scores.

    Blinding signature wins outright; otherwise the channel is secure iff
    every ensemble clears C - margin * SE > 1/2.  The minimum gates the
    verdict so adversarially asymmetric noise cannot hide behind a pooled
    average; the pooled value is still reported.
    """
    if not reports:
        raise ValueError("no contextuality reports supplied")
    if len(reports) != len(standard_errors):
        raise ValueError("reports and standard errors are misaligned")
    min_c = min(r.c_value for r in reports)
    pooled = sum(r.c_value for r in reports) / len(reports)
    if blinding_flag:
        return SecurityVerdict(
            VerdictStatus.BLINDING_SIGNATURE,
            min_c,
            margin,
            "weak values collapsed to outcome expectation values",
            pooled,
        )
    worst = min(r.c_value - margin * se for r, se in zip(reports, standard_errors))
    if worst > 0.5:
        return SecurityVerdict(VerdictStatus.SECURE, min_c, margin, "", pooled)
    return SecurityVerdict(
        VerdictStatus.ABORT,
        min_c,
        margin,
        "contextuality not established above 1/2",
        pooled,
    )
