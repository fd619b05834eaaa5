import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhmetric.algebra import SIGMA_Z, det, hermiticity_residual
from nhmetric.errors import (
    ConfigError,
    ConservationViolation,
    MetricBreakdown,
    WindowTooSmall,
)
from nhmetric.evolution import (
    IntegratorConfig,
    adiabatic_frame,
    check_window,
    evolve_factored,
    evolve_mode,
    initial_condition,
    metric_via_propagator,
    mirror_state,
    nonadiabaticity,
    rhs,
    scattering_matrix,
    sweep_point,
)
from nhmetric.model import ModeParams, hamiltonian

GAMMA = 1.0
ROUTES = [evolve_mode, evolve_factored]
# the direct pair drifts by about tol * cond(rho); PT-broken modes need the tight setting
TIGHT = dict(rel_tol=1e-12, abs_tol=1e-12)


def oracle_cfg():
    return IntegratorConfig.symmetric(80.0, sample_count=5, rel_tol=1e-12, abs_tol=1e-12)


@pytest.mark.parametrize("route", ROUTES)
@pytest.mark.parametrize("k", ["0.5", "2.0"])
def test_trajectory_matches_reference_integrator(oracle, route, k):
    p = ModeParams(float(k), GAMMA, 2.0)
    tr = route(p, oracle_cfg())
    ref = np.array(oracle["trajectories"][k])
    assert np.allclose(tr.times, ref[:, 0], rtol=1e-15)
    assert np.allclose([s.sigma_z_metric for s in tr], ref[:, 1], atol=1e-7)
    assert np.allclose([s.sigma_z_norm for s in tr], ref[:, 2], atol=1e-7)
    assert np.allclose(tr.bloch_metric[:, 0], ref[:, 3], atol=1e-7)


def test_direct_route_conserves_pairing():
    p = ModeParams.from_scale(0.5, GAMMA, 0.5)
    tr = evolve_mode(p, IntegratorConfig(**TIGHT))
    assert tr.pairing_dev < 1e-7
    for s in tr:
        assert abs(np.vdot(s.Psi, s.Psi).real - 1.0) < 1e-7
        assert np.allclose(s.eta @ s.eta, s.rho, rtol=1e-10, atol=1e-12)


@settings(max_examples=25)
@given(st.floats(-2.5, 2.5), st.floats(-1.5, 1.5).filter(lambda g: abs(g) > 0.05),
       st.floats(0.1, 2.0))
def test_factored_route_invariants(k, g, scale):
    p = ModeParams.from_scale(k, g, scale)
    tr = evolve_factored(p, IntegratorConfig(sample_count=41).covering(p))
    for s in tr:
        assert abs(np.linalg.norm(s.Psi) - 1.0) < 1e-9
        assert s.herm_residual <= 1e-8 * max(1.0, np.max(np.abs(s.h)))
        assert hermiticity_residual(s.h) < 1e-12
        # eta and psi are stored in matching gauges
        assert np.allclose(s.eta @ s.psi, s.Psi, atol=1e-6)


def test_direct_and_factored_agree():
    p = ModeParams.from_scale(1.5, GAMMA, 2.5)
    cfg = IntegratorConfig(sample_count=51, **TIGHT)
    a, b = evolve_mode(p, cfg), evolve_factored(p, cfg)
    for x, y in zip(a, b):
        assert np.allclose(x.h, y.h, atol=1e-7 * max(1.0, np.max(np.abs(x.h))))
        assert np.allclose(x.bloch_metric, y.bloch_metric, atol=1e-8)
        assert np.allclose(x.bloch_norm, y.bloch_norm, atol=1e-8)


def test_metric_via_propagator_matches_direct():
    p = ModeParams.from_scale(0.5, GAMMA, 0.5)
    cfg = IntegratorConfig(sample_count=21, **TIGHT)
    d = evolve_mode(p, cfg)
    for s, (t, rho) in zip(d, metric_via_propagator(p, cfg)):
        assert s.t == t
        phys = s.rho * math.exp(2 * s.log_gauge)
        assert np.max(np.abs(phys - rho)) <= 1e-7 * np.max(np.abs(rho))


def test_gauge_window_independence():
    p = ModeParams.from_scale(0.5, GAMMA, 0.5)
    a = evolve_mode(p, IntegratorConfig(sample_count=41, gauge_window=(0.1, 10.0), **TIGHT))
    b = evolve_mode(p, IntegratorConfig(sample_count=41, gauge_window=(0.8, 1.25), **TIGHT))
    assert a.rescalings == 0 and b.rescalings > 0
    assert np.max(np.abs(a.bloch_metric - b.bloch_metric)) <= 1e-9
    assert np.max(np.abs(a.bloch_norm - b.bloch_norm)) <= 1e-9


def test_scalar_gauge_leaves_mapped_quantities():
    from nhmetric.evolution import mapped_quantities
    p = ModeParams.from_scale(0.5, GAMMA, 0.5)
    s = evolve_mode(p, IntegratorConfig(sample_count=3, **TIGHT))[1]
    _, _, h1, P1 = mapped_quantities(p, s.t, s.psi, s.rho)
    _, _, h2, P2 = mapped_quantities(p, s.t, 3.0 * s.psi, s.rho / 9.0)
    assert np.allclose(h1, h2, atol=1e-12) and np.allclose(P1, P2, atol=1e-12)


def test_hermitian_limit():
    p = ModeParams(1.0, 0.0, 1.0)
    tr = evolve_mode(p, IntegratorConfig(sample_count=21))
    for s in tr:
        assert np.allclose(s.rho, np.eye(2), atol=1e-9)
        assert np.allclose(s.h, hamiltonian(p, s.t), atol=1e-8 * max(1.0, abs(s.t)))
        assert np.allclose(s.bloch_metric, s.bloch_norm, atol=1e-9)


def test_eta_dot_matches_finite_difference():
    p = ModeParams.from_scale(1.5, GAMMA, 2.5)
    s = 1 / math.sqrt(p.F)
    t, dt = 0.3, 1e-4
    cfg = IntegratorConfig(t_start=-80, t_end=80, sample_count=2, rel_tol=1e-12, abs_tol=1e-12)
    runs = [evolve_mode(p, IntegratorConfig(t_start=-80, t_end=x / s, sample_count=1,
                                            rel_tol=1e-12, abs_tol=1e-12))[0]
            for x in (t - dt, t, t + dt)]
    assert cfg.t_end == 80
    fd = (runs[2].eta * math.exp(runs[2].log_gauge) - runs[0].eta * math.exp(runs[0].log_gauge)) / (2 * dt)
    ed = runs[1].eta_dot * math.exp(runs[1].log_gauge)
    assert np.allclose(ed, fd, atol=1e-6 * max(1.0, np.max(np.abs(ed))))


def test_k_parity_of_mapped_hamiltonian():
    cfg = IntegratorConfig(sample_count=41)
    for k in (0.2, 1.1):
        p = ModeParams.from_scale(k, GAMMA, 2.5)
        a, b = evolve_factored(p, cfg), evolve_factored(p.mirrored(), cfg)
        for x, y in zip(a, b):
            assert np.max(np.abs(SIGMA_Z @ x.h @ SIGMA_Z - y.h)) <= 1e-6 * max(1.0, np.max(np.abs(x.h)))
            # the mirrored mapped state is sz Psi up to a phase
            assert np.allclose(x.bloch_metric * [-1, -1, 1], y.bloch_metric, atol=1e-6)


def test_mirror_state():
    psi = np.array([0.6, 0.8j])
    assert np.allclose(mirror_state(psi), [0.6, -0.8j])


def test_single_sample_window():
    p = ModeParams.from_scale(2.0, GAMMA, 2.5)
    tr = evolve_factored(p, IntegratorConfig(sample_count=1))
    assert len(tr) == 1
    assert tr[0].t == pytest.approx(80 / math.sqrt(p.F))


def test_window_checks():
    p = ModeParams.from_scale(2.0, GAMMA, 25.0)
    with pytest.raises(WindowTooSmall):
        evolve_factored(p, IntegratorConfig())
    wide = IntegratorConfig().covering(p)
    assert wide.t_start < -80
    check_window(p, wide.t0(p))
    s = initial_condition(p, wide.t0(p))
    assert np.allclose(s.rho, np.eye(2)) and s.pairing() == 1.0
    with pytest.raises(WindowTooSmall):
        check_window(p, 1.0)


@pytest.mark.parametrize("kw", [dict(t_start=1, t_end=0), dict(rel_tol=0), dict(sample_count=0),
                                dict(gauge_window=(2.0, 3.0)), dict(max_step=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        IntegratorConfig(**kw)


def test_strongly_broken_mode_is_rejected_by_direct_route():
    p = ModeParams.from_scale(0.2, GAMMA, 25.0)
    with pytest.raises((ConservationViolation, MetricBreakdown)):
        evolve_mode(p, IntegratorConfig(sample_count=11))
    with pytest.raises(MetricBreakdown):
        q = ModeParams.from_scale(0.2, GAMMA, 400.0)
        evolve_factored(q, IntegratorConfig(sample_count=11).covering(q))


def test_rhs_matches_equations_of_motion():
    from nhmetric.evolution import EvolutionState
    p = ModeParams(0.3, 0.8, 1.2)
    s = EvolutionState(0.7, np.array([0.6, 0.8j]), np.array([[2.0, 0.5j], [-0.5j, 1.0]]))
    dpsi, drho = rhs(p, s)
    H = hamiltonian(p, s.t)
    assert np.allclose(1j * dpsi, H @ s.psi)
    assert np.allclose(1j * drho, H.conj().T @ s.rho - s.rho @ H)


def test_adiabatic_frame():
    p = ModeParams.from_scale(1.5, GAMMA, 2.5)
    for t in (-30.0, 30.0):
        R = adiabatic_frame(p, t)
        assert det(R) == pytest.approx(1.0)
        Hd = np.linalg.solve(R, hamiltonian(p, t) @ R)
        assert abs(Hd[0, 1]) < 1e-12 and abs(Hd[1, 0]) < 1e-12
    assert nonadiabaticity(ModeParams.from_scale(0.2, GAMMA, 2.5), 0.0) == math.inf


def test_scattering_matrix_is_unimodular():
    p = ModeParams.from_scale(1.5, GAMMA, 2.5)
    # det U = 1 holds exactly; the integrator drifts by about tol * window
    assert det(scattering_matrix(p, IntegratorConfig(**TIGHT))) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("k", [0.2, 1.5])
def test_frame_readout_converges_with_window(k):
    # the asymptotic readout must not get worse as the window grows
    p = ModeParams.from_scale(k, GAMMA, 2.5)
    ref = None
    errs = []
    for w in (40.0, 80.0, 160.0, 320.0):
        sp = sweep_point(p, IntegratorConfig.symmetric(w, rel_tol=1e-12, abs_tol=1e-12))
        z = np.array([sp.bloch_metric[2], sp.bloch_norm[2]])
        errs.append(z)
    ref = errs[-1]
    d = [np.max(np.abs(z - ref)) for z in errs[:-1]]
    for a, b in zip(d, d[1:]):
        assert b <= max(a, 1e-10)
