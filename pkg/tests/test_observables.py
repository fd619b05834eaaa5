import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from nhmetric.algebra import PAULI, SIGMA_Z
from nhmetric.errors import NumericalError, SingularEta, ZeroState
from nhmetric.evolution import IntegratorConfig, evolve_factored, evolve_mode
from nhmetric.model import ModeParams
from nhmetric.observables import (
    METRIC,
    NORM,
    ExpectationMethod,
    adiabatic_result,
    adiabatic_value,
    asymptotic_sigma_z,
    asymptotic_value,
    endpoint_sigma_z,
    expect_metric,
    expect_norm,
    metric_limit_value,
    norm_limit_value,
    parity_report,
    simulated_asymptotic_bloch,
)

gammas = st.floats(0.1, 3.0)
ratios = st.floats(-3.0, 3.0)
scales = st.floats(0.05, 50.0)


def test_closed_form_matches_reference(oracle):
    for k, g, F, zm, zn in oracle["closed_form"]:
        assert asymptotic_value(k, g, F, METRIC) == pytest.approx(zm, abs=1e-12), (k, g, F)
        assert asymptotic_value(k, g, F, NORM) == pytest.approx(zn, abs=1e-12), (k, g, F)


def test_limit_values_match_reference(oracle):
    for k, g, F, zm, zn in oracle["closed_form_limits"]:
        assert asymptotic_value(k, g, F, METRIC) == pytest.approx(zm, abs=1e-12)
        assert asymptotic_value(k, g, F, NORM) == pytest.approx(zn, abs=1e-12)
        assert metric_limit_value(g, F) == pytest.approx(zm, abs=1e-12)
        if k * g < 0:
            assert norm_limit_value(g, F) == pytest.approx(zn, abs=1e-12)


def test_landau_zener(oracle):
    for k, F, lz in oracle["landau_zener"]:
        for m in (METRIC, NORM):
            assert asymptotic_value(k, 0.0, F, m) == pytest.approx(lz, abs=1e-14)


@given(ratios, gammas, scales)
def test_closed_form_bounded(r, g, s):
    F = g * g / s
    for m in (METRIC, NORM):
        v = asymptotic_value(r * g, g, F, m)
        assert math.isfinite(v) and abs(v) <= 1 + 1e-12


@given(ratios, gammas, scales)
def test_metric_closed_form_even(r, g, s):
    F = g * g / s
    assert asymptotic_value(r * g, g, F, METRIC) == asymptotic_value(-r * g, g, F, METRIC)


@given(ratios, gammas, scales)
def test_closed_form_continuous_near_boundary(r, g, s):
    # the removable singularities at |k| = gamma are continuous
    F = g * g / s
    for sign in (1, -1):
        k = sign * g
        for m in (METRIC, NORM):
            a = asymptotic_value(k * (1 + 1e-7), g, F, m)
            b = asymptotic_value(k, g, F, m)
            assert a == pytest.approx(b, abs=1e-4)


@given(ratios, gammas)
def test_adiabatic_limit_of_closed_form(r, g):
    assume(abs(abs(r) - 1) > 0.05)
    F = g * g / 1e4
    for m in (METRIC, NORM):
        assert asymptotic_value(r * g, g, F, m) == pytest.approx(adiabatic_value(r * g, g, m), abs=1e-6)


def test_adiabatic_laws():
    assert adiabatic_value(0.5, 1.0, METRIC) == 0.5
    assert adiabatic_value(-0.5, 1.0, NORM) == -0.5
    assert adiabatic_value(1.1, 1.0, METRIC) == -1.0
    assert adiabatic_value(1.1, 1.0, NORM) == -1.0
    assert adiabatic_value(1.0, 1.0, NORM) == 1.0
    assert adiabatic_value(-1.0, 1.0, NORM) == -1.0
    assert adiabatic_value(1.0, 1.0, METRIC) == -1.0
    r = adiabatic_result(ModeParams(0.2, 1.0, 1.0), "norm")
    assert r.regime == "adiabatic_limit" and r.value == pytest.approx(0.2)


def test_asymptotic_sigma_z_result():
    r = asymptotic_sigma_z(ModeParams.from_scale(0.5, 1.0, 2.5), "metric")
    assert r.method is METRIC and r.regime == "finite_F"
    assert r.value == pytest.approx(0.5010378294319926, abs=1e-14)


def test_method_parse():
    assert ExpectationMethod.parse("Norm") is NORM
    with pytest.raises(ValueError):
        ExpectationMethod.parse("both")


def test_dual_form_expectation_on_trajectory():
    p = ModeParams.from_scale(0.5, 1.0, 0.5)
    tr = evolve_mode(p, IntegratorConfig(sample_count=11, rel_tol=1e-12, abs_tol=1e-12))
    for s in tr:
        for n, O in enumerate(PAULI):
            v = expect_metric(s.psi, s.rho, s.eta, O)
            assert v.real == pytest.approx(s.bloch_metric[n], abs=1e-9)
            assert v.real == pytest.approx(np.vdot(s.Psi, O @ s.Psi).real, abs=1e-12)
        assert expect_norm(s.psi, SIGMA_Z).real == pytest.approx(s.sigma_z_norm, abs=1e-12)


def test_expectation_errors():
    with pytest.raises(ZeroState):
        expect_norm(np.zeros(2), SIGMA_Z)
    with pytest.raises(SingularEta):
        expect_metric(np.array([1.0, 0.0]), np.eye(2), np.zeros((2, 2)), SIGMA_Z)
    # inconsistent rho and eta are caught by the cross-check
    with pytest.raises(NumericalError):
        expect_metric(np.array([1.0, 0.0]), 4 * np.eye(2), np.eye(2), SIGMA_Z)


def test_hermitian_limit_methods_agree():
    p = ModeParams(1.0, 0.0, 2.0)
    sim = simulated_asymptotic_bloch(p)
    assert np.allclose(sim[METRIC], sim[NORM], atol=1e-6)
    assert sim[METRIC][2] == pytest.approx(2 * math.exp(-math.pi / 2) - 1, abs=1e-4)


@pytest.mark.parametrize("kr", [0.2, 0.5, 1.1, 1.5, 2.0])
def test_simulated_asymptotics_match_closed_form(kr):
    p = ModeParams.from_scale(kr, 1.0, 2.5)
    sim = simulated_asymptotic_bloch(p)
    for m in (METRIC, NORM):
        assert sim[m][2] == pytest.approx(asymptotic_value(p.k, p.gamma, p.F, m), abs=1e-3)


def test_endpoint_sigma_z():
    p = ModeParams.from_scale(0.5, 1.0, 25.0)
    tr = evolve_factored(p, IntegratorConfig(sample_count=2))
    assert endpoint_sigma_z(tr, "metric") == tr.final.sigma_z_metric
    assert endpoint_sigma_z(tr, NORM) == tr.final.sigma_z_norm


def test_parity_report():
    rows = parity_report(1.0, 0.4, [-1.1, -0.2, 0.0, 0.2, 1.1], IntegratorConfig(sample_count=41))
    by_k = {r.k: r for r in rows}
    for r in rows:
        assert r.metric_z_even < 1e-6
        assert r.metric_x_odd < 1e-6
    # the naive state has no definite parity in a PT-broken mode
    assert by_k[0.2].norm_z_even > 1e-2
    # after the sweep the naive value is nearly odd, as the closed form says
    odd = abs(asymptotic_value(0.2, 1.0, 0.4, NORM) + asymptotic_value(-0.2, 1.0, 0.4, NORM))
    assert by_k[0.2].norm_z_odd == pytest.approx(odd, abs=1e-4)
    with pytest.raises(ValueError):
        parity_report(1.0, 0.4, [0.0, 0.3])


def test_sigma_x_parity_of_closed_form_sweep():
    cfg = IntegratorConfig()
    a = simulated_asymptotic_bloch(ModeParams.from_scale(0.5, 1.0, 2.5), cfg)
    b = simulated_asymptotic_bloch(ModeParams.from_scale(-0.5, 1.0, 2.5), cfg)
    assert np.allclose(a[METRIC] * [-1, -1, 1], b[METRIC], atol=1e-6)
