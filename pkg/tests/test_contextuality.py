import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wvqkd.analytics import IDEAL_ANOMALOUS_WV, PPSKey, anomalous_projector, pps_weak_value
from wvqkd.contextuality import (
    SECURE_DARK_MAX,
    SECURE_P_CHANNEL_MAX,
    SECURITY_MIXTURE_WEIGHT,
    ContextualityReport,
    NonAnomalousReferenceError,
    SecurityVerdict,
    VerdictStatus,
    analytic_contextuality,
    contextuality_measure,
    secure_noise_region,
    verdict,
)
from wvqkd.noise import ChannelNoise

IDEAL = IDEAL_ANOMALOUS_WV


def test_measure_examples():
    assert contextuality_measure(1.2071068, 1.2071068) == pytest.approx(1.0, abs=1e-7)
    assert contextuality_measure(1.1035534, 1.2071068) == pytest.approx(0.5, abs=1e-6)
    expected = (1.1275274 - 1.0) / (1.2071068 - 1.0)
    assert contextuality_measure(1.1275274, 1.2071068) == pytest.approx(
        expected, abs=1e-12
    )
    assert expected == pytest.approx(0.615756, abs=1e-6)


def test_measure_zero_inside_spectrum():
    for observed in (0.0, 0.3, 1.0):
        assert contextuality_measure(observed, IDEAL) == 0.0


def test_measure_negative_side():
    # Negative anomalies are scored against the 0 eigenvalue.
    assert contextuality_measure(-0.1, -0.2071068) == pytest.approx(
        0.1 / 0.2071068, abs=1e-7
    )


def test_measure_clamped_to_unit_interval():
    assert contextuality_measure(1.5, IDEAL) == 1.0


def test_non_anomalous_reference_error():
    with pytest.raises(NonAnomalousReferenceError):
        contextuality_measure(1.2, 0.9)


def test_mixture_weight_constant():
    assert SECURITY_MIXTURE_WEIGHT == 0.5


def test_secure_region_thresholds():
    assert secure_noise_region(0.14644, 0.0)
    assert not secure_noise_region(0.14645, 0.0)
    # The printed 0.0857864 rounds a hair below the exact dark threshold
    # (sqrt(2)-1)/(2(sqrt(2)+1)) = 0.08578643763...; the flip sits there.
    assert secure_noise_region(0.0, SECURE_DARK_MAX - 1e-9)
    assert not secure_noise_region(0.0, SECURE_DARK_MAX + 1e-9)
    assert not secure_noise_region(0.0, 0.08578644)
    assert secure_noise_region(0.0, 0.0)
    assert SECURE_P_CHANNEL_MAX == pytest.approx(0.1464466, abs=1e-7)
    assert SECURE_DARK_MAX == pytest.approx(0.0857864, abs=1e-7)


def test_boundary_equivalence_grid():
    # C(p, d) > 1/2 iff the closed-form noise inequality holds, everywhere.
    for i in range(0, 301):
        p = i * 0.001
        for j in range(0, 121):
            d = j * 0.001
            assert (analytic_contextuality(p, d) > 0.5) == secure_noise_region(p, d)


def test_analytic_consistency_across_ensembles():
    # Every ensemble's designated anomalous projector reproduces the same
    # closed-form measure, for dark fractions well beyond the secure range.
    for p_a, p_b in ((0.0, 0.0), (0.05, 0.03), (0.02, 0.1)):
        noise = ChannelNoise(p_a, p_b)
        for d in (0.0, 0.02, 0.08):
            expected = ((1.0 - d) * (0.5 + (1.0 - noise.p_channel) / math.sqrt(2.0)) - 1.0) / (
                1.0 / math.sqrt(2.0) - 0.5
            )
            expected = min(1.0, max(0.0, expected))
            for key in PPSKey:
                observed = pps_weak_value(key, anomalous_projector(key), noise, d)
                c = contextuality_measure(observed, IDEAL)
                assert c == pytest.approx(expected, abs=1e-12)


@given(p=st.floats(0.0, 1.0), d=st.floats(0.0, 1.0))
def test_clamp_and_range(p, d):
    c = analytic_contextuality(p, d)
    assert 0.0 <= c <= 1.0


@given(p=st.floats(0.0, 0.9), d=st.floats(0.0, 0.9), dp=st.floats(0.0, 0.1))
def test_monotone_in_noise(p, d, dp):
    assert analytic_contextuality(p + dp, d) <= analytic_contextuality(p, d) + 1e-12
    assert analytic_contextuality(p, d + dp) <= analytic_contextuality(p, d) + 1e-12


def _reports(c_values):
    reports = []
    for key, c in zip(PPSKey, c_values):
        proj = anomalous_projector(key)
        reports.append(ContextualityReport(key, proj, IDEAL * c, IDEAL, c))
    return reports


def test_verdict_secure_trivial():
    v = verdict(_reports([1.0] * 8), [0.0] * 8, margin=3.0, blinding_flag=False)
    assert v.status is VerdictStatus.SECURE
    assert v.min_c == 1.0


def test_verdict_blinding_signature():
    v = verdict(_reports([0.0] * 8), [0.0] * 8, margin=3.0, blinding_flag=True)
    assert v.status is VerdictStatus.BLINDING_SIGNATURE


def test_verdict_derived_example():
    # c from p_a = 0.05, p_b = 0.03, d = 0; 0.73 - 3 * 0.01 > 0.5 -> secure.
    c = analytic_contextuality(0.08, 0.0)
    assert c == pytest.approx(0.7268629, abs=1e-7)
    v = verdict(_reports([c] * 8), [0.01] * 8, margin=3.0, blinding_flag=False)
    assert v.status is VerdictStatus.SECURE
    assert v.min_c == pytest.approx(c)


def test_verdict_abort_on_margin():
    v = verdict(_reports([0.55] * 8), [0.02] * 8, margin=3.0, blinding_flag=False)
    assert v.status is VerdictStatus.ABORT


def test_verdict_requires_reports():
    with pytest.raises(ValueError):
        verdict([], [], 3.0, False)
    with pytest.raises(ValueError):
        verdict(_reports([1.0] * 8), [0.0] * 7, 3.0, False)


def test_verdict_gates_on_minimum():
    cs = [0.9] * 7 + [0.51]
    v = verdict(_reports(cs), [0.01] * 8, margin=3.0, blinding_flag=False)
    assert v.status is VerdictStatus.ABORT
    assert v.min_c == pytest.approx(0.51)
    assert v.pooled_c == pytest.approx(sum(cs) / 8.0)
