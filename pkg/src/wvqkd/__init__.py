"""wvqkd: weak-value QKD simulator and analytics engine.

Evaluates the protocol's closed-form weak values, simulates it photon by
photon with exact weak-measurement back-action, and certifies channel
security through a contextuality measure, including eavesdropper attack
signatures.
"""

__version__ = "0.1.0"

from ._kernels import available_backends, default_backend_name
from .analytics import PPSKey, ProjectorChoice, pps_weak_value
from .contextuality import (
    SecurityVerdict,
    VerdictStatus,
    analytic_contextuality,
    contextuality_measure,
    secure_noise_region,
)
from .noise import ChannelNoise, DarkCountStats, DetectorModel, dark_params, total_qber
from .protocol import ProtocolConfig, ProtocolTranscript, run_protocol
from .quantum import (
    DensityMatrix,
    Effect,
    Operator2,
    PureState,
    born_probability,
    depolarize,
    h_projector,
    weak_value,
)
from .trajectory import EveKind, EveModel, WeakMeasurementConfig, collapse_probability

__all__ = [
    "__version__",
    "available_backends",
    "default_backend_name",
    "PPSKey",
    "ProjectorChoice",
    "pps_weak_value",
    "SecurityVerdict",
    "VerdictStatus",
    "analytic_contextuality",
    "contextuality_measure",
    "secure_noise_region",
    "ChannelNoise",
    "DarkCountStats",
    "DetectorModel",
    "dark_params",
    "total_qber",
    "ProtocolConfig",
    "ProtocolTranscript",
    "run_protocol",
    "DensityMatrix",
    "Effect",
    "Operator2",
    "PureState",
    "born_probability",
    "depolarize",
    "h_projector",
    "weak_value",
    "EveKind",
    "EveModel",
    "WeakMeasurementConfig",
    "collapse_probability",
]
