"""Time evolution of one momentum mode in the metric framework.

Two integration routes produce the same :class:`TrajectorySample` records:

``evolve_mode``
    integrates the state ``psi`` and the metric ``rho`` as one coupled linear
    system.  This is the textbook route.  Its weak point is conditioning:
    ``rho`` has condition number ``~exp(2 pi (gamma^2 - k^2) / F)`` after a
    PT-broken mode has crossed its exceptional points, and the pairing
    ``<psi|rho|psi>`` then loses roughly ``tol * cond(rho)`` digits.

``evolve_factored``
    integrates the propagator ``U`` (``i U' = H U``) instead and reads
    everything off its polar decomposition.  Because ``tr H = 0`` the exact
    ``U`` is unimodular, so ``rho = adj(U)^dagger adj(U)``, the Dyson map is
    ``eta = Q adj(U)`` and the mapped state is ``Psi = Q psi(t_start)``, where
    ``Q`` is the unitary polar factor of ``U``.  ``Q`` and the mapped
    Hamiltonian only involve the large singular direction of ``U``, so they
    stay accurate however ill-conditioned the metric becomes.

``metric_via_propagator`` exposes the propagator metric as an independent
check of the direct route, and ``scattering_matrix`` strips the adiabatic
dressing at both ends of the window to give the ``t -> +-inf`` transition
amplitudes.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import integrator
from .algebra import (
    IDENTITY, SIGMA_Z, adjoint, adjugate, bloch_vector, det, hermiticity_residual,
    inverse, polar_unitary, positive_sqrt, sylvester_sqrt_derivative,
)
from .errors import (
    ConfigError, ConservationViolation, MetricBreakdown, NotPositiveDefinite,
    NumericalError, SingularMatrix, SingularPropagator, StepSizeUnderflow,
    WindowTooSmall,
)
from .model import ModeParams, hamiltonian

TOL_CONS = 1e-7
NORTH_POLE = np.array([1.0, 0.0], dtype=complex)


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings; ``t_start``/``t_end`` are in units of ``1/sqrt(F)``."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    t_start: float = -80.0
    t_end: float = 80.0
    max_step: float = math.inf
    sample_count: int = 401
    gauge_window: tuple = (0.1, 10.0)
    tol_cons: float = TOL_CONS
    dominance: float = 10.0

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ConfigError("t_start must be smaller than t_end")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigError("tolerances must be positive")
        if not self.max_step > 0:
            raise ConfigError("max_step must be positive")
        if int(self.sample_count) < 1:
            raise ConfigError("sample_count must be at least 1")
        lo, hi = self.gauge_window
        if not 0 < lo < 1 < hi:
            raise ConfigError("gauge window must bracket 1")

    @classmethod
    def symmetric(cls, window=80.0, **kw):
        return cls(t_start=-window, t_end=window, **kw)

    def covering(self, p):
        """Copy whose window is widened, if needed, to pass the dominance check."""
        scale = max(abs(p.k), abs(p.gamma), math.sqrt(p.F))
        need = self.dominance * scale / math.sqrt(p.F) * (1 + 1e-12)
        if -self.t_start >= need:
            return self
        return replace(self, t_start=-need, t_end=max(self.t_end, need))

    def t0(self, p):
        """Physical start time for the mode ``p``."""
        return self.t_start / math.sqrt(p.F)

    def times(self, p):
        """Output grid in physical time; a single sample sits at ``t_end``."""
        s = 1.0 / math.sqrt(p.F)
        if self.sample_count == 1:
            return np.array([self.t_end * s])
        return np.linspace(self.t_start * s, self.t_end * s, int(self.sample_count))


@dataclass
class EvolutionState:
    """Gauge-rescaled pair: the physical state is ``exp(-log_gauge) psi``."""

    t: float
    psi: np.ndarray
    rho: np.ndarray
    log_gauge: float = 0.0

    def pairing(self):
        return float(np.vdot(self.psi, self.rho @ self.psi).real)

    def physical(self):
        """Unscaled ``(psi, rho)``; may overflow for strongly broken modes."""
        c = math.exp(self.log_gauge)
        return self.psi / c, self.rho * c * c


@dataclass
class TrajectorySample:
    t: float
    psi: np.ndarray
    rho: np.ndarray
    eta: np.ndarray
    eta_dot: np.ndarray
    Psi: np.ndarray
    h: np.ndarray
    bloch_metric: np.ndarray
    bloch_norm: np.ndarray
    sigma_z_metric: float
    sigma_z_norm: float
    herm_residual: float
    log_gauge: float = 0.0
    pairing: float = 1.0


@dataclass
class Trajectory:
    """Samples of one mode plus integrator bookkeeping; iterates like a list."""

    params: ModeParams
    samples: list
    route: str
    accepted: int = 0
    rejected: int = 0
    rescalings: int = 0
    pairing_dev: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def bloch_metric(self):
        return np.array([s.bloch_metric for s in self.samples])

    @property
    def bloch_norm(self):
        return np.array([s.bloch_norm for s in self.samples])

    @property
    def final(self):
        return self.samples[-1]


def check_window(p, t_start, dominance=10.0):
    """Raise :class:`WindowTooSmall` unless ``F t_start`` dominates the mode."""
    scale = max(abs(p.k), abs(p.gamma), math.sqrt(p.F))
    if not p.F * abs(t_start) >= dominance * scale or t_start >= 0:
        raise WindowTooSmall(
            f"F|t_start| = {p.F * abs(t_start):.4g} < {dominance:g} * {scale:.4g}"
        )


def initial_condition(p, t_start, dominance=10.0):
    """North-pole state with the trivial metric, deep in the diabatic regime."""
    check_window(p, t_start, dominance)
    return EvolutionState(float(t_start), NORTH_POLE.copy(), IDENTITY.copy(), 0.0)


def rhs(p, s):
    """Time derivatives ``(dpsi, drho)`` of the coupled pair."""
    h = hamiltonian(p, s.t)
    hd = adjoint(h)
    dpsi = -1j * (h @ s.psi)
    drho = -1j * (hd @ s.rho - s.rho @ h)
    return dpsi, drho


def _check_status(raw):
    if raw.status == integrator.STATUS_STEP_UNDERFLOW:
        raise StepSizeUnderflow("step size fell below the floating-point spacing")
    if raw.status == integrator.STATUS_MAX_STEPS:
        raise StepSizeUnderflow("step budget exhausted")
    if raw.status == integrator.STATUS_NOT_FINITE:
        raise MetricBreakdown("solution left the floating-point range")


def _run(kind, p, cfg, y0, t0, times):
    raw = integrator.integrate(
        kind, p.k, p.gamma, p.F, y0, t0, times,
        rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
        gauge_window=cfg.gauge_window,
    )
    _check_status(raw)
    return raw


# direct route ---------------------------------------------------------------

def mapped_quantities(p, t, psi, rho):
    """``(eta, eta_dot, h, Psi)`` from a (possibly rescaled) pair.

    A scalar gauge ``(c psi, rho / c^2)`` leaves ``Psi`` and ``h`` unchanged.
    """
    try:
        eta = positive_sqrt(rho)
    except NotPositiveDefinite as exc:
        raise MetricBreakdown(f"metric lost positivity at t = {t:.6g}: {exc}") from None
    H = hamiltonian(p, t)
    rho_dot = -1j * (adjoint(H) @ rho - rho @ H)
    eta_dot = sylvester_sqrt_derivative(eta, rho_dot)
    try:
        eta_inv = inverse(eta)
    except SingularMatrix as exc:
        raise MetricBreakdown(str(exc)) from None
    h = eta @ H @ eta_inv + 1j * eta_dot @ eta_inv
    return eta, eta_dot, h, eta @ psi


def _gauge_check(p, t, psi, rho, Psi, h, tol=1e-9):
    # observables must not see the scalar rescaling
    c = 2.0
    _, _, h2, Psi2 = mapped_quantities(p, t, c * psi, rho / (c * c))
    scale = max(1.0, float(np.max(np.abs(h))))
    if (np.max(np.abs(Psi2 - Psi)) > tol * max(1.0, np.linalg.norm(Psi))
            or np.max(np.abs(h2 - h)) > tol * scale):
        raise NumericalError(f"gauge factor leaked into observables at t = {t:.6g}")


def _sample(t, psi, rho, eta, eta_dot, Psi, h, herm_res, log_gauge):
    bm = bloch_vector(Psi)
    bn = bloch_vector(psi)
    with np.errstate(over="ignore", invalid="ignore"):
        pairing = float(np.vdot(psi, rho @ psi).real)
    return TrajectorySample(
        t=float(t), psi=psi, rho=rho, eta=eta, eta_dot=eta_dot, Psi=Psi, h=h,
        bloch_metric=bm, bloch_norm=bn, sigma_z_metric=float(bm[2]),
        sigma_z_norm=float(bn[2]), herm_residual=float(herm_res),
        log_gauge=float(log_gauge), pairing=pairing,
    )


def evolve_mode(p, cfg=IntegratorConfig(), check_gauge=True, strict=True):
    """Integrate ``psi`` and ``rho`` jointly from the north pole and ``rho = 1``.

    Raises :class:`MetricBreakdown` when the integrated metric stops being
    positive definite and :class:`ConservationViolation` when
    ``<psi|rho|psi>`` drifts from 1 by more than ``cfg.tol_cons``.  With
    ``strict=False`` the drift is only recorded in ``Trajectory.pairing_dev``.
    """
    times = cfg.times(p)
    s0 = initial_condition(p, cfg.t0(p), cfg.dominance)
    y0 = np.concatenate([s0.psi, s0.rho.ravel()])
    raw = _run(integrator.PAIR, p, cfg, y0, s0.t, times)
    if strict and raw.pairing_dev > cfg.tol_cons:
        raise ConservationViolation(
            f"|<psi|rho|psi> - 1| reached {raw.pairing_dev:.3e} (tolerance {cfg.tol_cons:g})"
        )
    samples = []
    for t, y, lg in zip(times, raw.ys, raw.log_gauge):
        psi = y[:2].copy()
        rho = y[2:].reshape(2, 2).copy()
        eta, eta_dot, h, Psi = mapped_quantities(p, t, psi, rho)
        if check_gauge:
            _gauge_check(p, t, psi, rho, Psi, h)
        samples.append(
            _sample(t, psi, rho, eta, eta_dot, Psi, h, hermiticity_residual(h), lg)
        )
    return Trajectory(p, samples, "direct", raw.accepted, raw.rejected,
                      raw.rescalings, raw.pairing_dev)


# propagator route -----------------------------------------------------------

def _propagate(p, cfg, times, t0=None):
    t0 = cfg.t0(p) if t0 is None else t0
    y0 = IDENTITY.ravel().copy()
    raw = _run(integrator.PROPAGATOR, p, cfg, y0, t0, times)
    return raw


def propagator_mapped(p, t, U):
    """Polar-factor route for a positive multiple ``U`` of the propagator.

    Returns ``(Q, h, residual)``: the unitary factor, the mapped Hamiltonian
    ``i Q' Q^dagger`` and the size of its traceless anti-Hermitian part, which
    vanishes identically for an exactly unimodular propagator.
    """
    H = hamiltonian(p, t)
    Q = polar_unitary(U, 1.0)
    B = adjoint(adjugate(U))
    M = U + B
    M_dot = -1j * (H @ U) - 1j * (adjoint(H) @ B)
    X = 1j * (M_dot @ adjoint(M)) / abs(det(M))
    anti = 0.5 * (X - adjoint(X))
    anti -= 0.5 * np.trace(anti) * IDENTITY
    h = 0.5 * (X + adjoint(X))
    return Q, h, float(np.max(np.abs(anti)))


def _scaled(m, log_factor):
    if log_factor > 700.0:
        return np.full((2, 2), np.inf + 0j)
    return m * math.exp(log_factor)


def evolve_factored(p, cfg=IntegratorConfig(), psi0=None, allow_overflow=False):
    """Same records as :func:`evolve_mode`, computed from the propagator.

    ``psi`` and ``rho`` are reported in the gauge of the rescaled propagator
    ``U_s = exp(log_gauge) U``.  ``Psi`` comes straight from the polar factor,
    so the mapped dynamics stays accurate where the metric itself is too
    ill-conditioned to store.  If the metric overflows, the run aborts with
    :class:`MetricBreakdown` unless ``allow_overflow`` is set, in which case
    ``rho``, ``eta`` and ``eta_dot`` are left non-finite.
    """
    times = cfg.times(p)
    check_window(p, cfg.t0(p), cfg.dominance)
    psi0 = NORTH_POLE if psi0 is None else np.asarray(psi0, dtype=complex)
    raw = _propagate(p, cfg, times)
    samples = []
    for t, y, lg in zip(times, raw.ys, raw.log_gauge):
        U = y.reshape(2, 2)
        Q, h, res = propagator_mapped(p, t, U)
        A = adjugate(U)
        # U_s = c U: rho_s = adj(U_s)^dag adj(U_s) / c^4, eta_s = Q adj(U_s) / c^2
        rho = _scaled(adjoint(A) @ A, -4.0 * lg)
        eta = _scaled(Q @ A, -2.0 * lg)
        if not allow_overflow and not (np.all(np.isfinite(rho)) and np.all(np.isfinite(eta))):
            raise MetricBreakdown(f"metric exceeds floating-point range at t = {t:.6g}")
        with np.errstate(invalid="ignore"):
            eta = 0.5 * (eta + adjoint(eta))
        H = hamiltonian(p, t)
        with np.errstate(invalid="ignore", over="ignore"):
            eta_dot = -1j * (h @ eta - eta @ H)
        psi = U @ psi0
        Psi = Q @ psi0
        samples.append(_sample(t, psi, rho, eta, eta_dot, Psi, h, res, lg))
    return Trajectory(p, samples, "factored", raw.accepted, raw.rejected,
                      raw.rescalings, 0.0)


def metric_via_propagator(p, cfg=IntegratorConfig()):
    """``[(t, rho)]`` with ``rho = (U^dagger)^-1 U^-1`` in physical normalisation."""
    times = cfg.times(p)
    check_window(p, cfg.t0(p), cfg.dominance)
    raw = _propagate(p, cfg, times)
    out = []
    for t, y, lg in zip(times, raw.ys, raw.log_gauge):
        U = y.reshape(2, 2)
        d = det(U)
        if not abs(d) > 0.0:
            raise SingularPropagator(f"det U underflowed at t = {t:.6g}")
        A = adjugate(U)
        # U_s = c U  =>  U^-1 = adj(U_s) / c
        c = math.exp(lg)
        with np.errstate(over="ignore"):
            rho = adjoint(A) @ A / (c * c)
        if not np.all(np.isfinite(rho)):
            raise SingularPropagator(f"metric exceeds floating-point range at t = {t:.6g}")
        out.append((float(t), rho))
    return out


# asymptotics ----------------------------------------------------------------

def adiabatic_frame(p, t):
    """Unimodular matrix whose columns are the instantaneous eigenvectors.

    Column 0 belongs to the eigenvalue that connects to the north pole for
    ``t -> -inf`` and to the south pole for ``t -> +inf``; the normalisation is
    the one in which the frame is parallel transported, so that the adiabatic
    amplitudes carry no extra geometric phase.
    """
    a = p.F * t
    b = p.k + p.gamma
    c = p.k - p.gamma
    e2 = a * a + b * c
    if not e2 > 0.0:
        raise WindowTooSmall(f"spectrum is not real at t = {t:.6g}")
    E = math.sqrt(e2)
    if a < 0:
        n = math.sqrt(2.0 * E * (E - a))
        return np.array([[E - a, b], [-c, E - a]], dtype=complex) / n
    n = math.sqrt(2.0 * E * (E + a))
    return np.array([[E + a, -b], [c, E + a]], dtype=complex) / n


def nonadiabaticity(p, t):
    """Frame rotation rate over the gap, ``F (|k| + |gamma|) / (4 E^3)``."""
    e2 = (p.F * t) ** 2 + (p.k - p.gamma) * (p.k + p.gamma)
    if not e2 > 0.0:
        return math.inf
    return p.F * (abs(p.k) + abs(p.gamma)) / (4.0 * e2 ** 1.5)


def _scatter(p, cfg, max_nonadiabaticity):
    s = 1.0 / math.sqrt(p.F)
    t0, t1 = cfg.t_start * s, cfg.t_end * s
    if not t0 < 0 < t1:
        raise ConfigError("the window must contain t = 0")
    for t in (t0, t1):
        if nonadiabaticity(p, t) > max_nonadiabaticity:
            raise WindowTooSmall(f"window edge t = {t:.6g} is not in the adiabatic regime")
    raw = _propagate(p, cfg, np.array([t1]), t0=t0)
    U = raw.ys[-1].reshape(2, 2)
    return adjugate(adiabatic_frame(p, t1)) @ U @ adiabatic_frame(p, t0), U


def scattering_matrix(p, cfg=IntegratorConfig(), max_nonadiabaticity=1e-3):
    """Transition matrix between adiabatic frames at the window edges.

    ``S = R(t_end)^-1 U(t_end, t_start) R(t_start)`` up to a positive scalar.
    Column 0 is the asymptotic image of the north pole; its Bloch vector is
    the ``t -> +inf`` limit of the naive state, and that of the unitary polar
    factor of ``S`` the limit of the mapped state.
    """
    return _scatter(p, cfg, max_nonadiabaticity)[0]


@dataclass(frozen=True)
class SweepPoint:
    """Asymptotic and literal end-of-window Bloch vectors of one mode."""

    bloch_metric: np.ndarray
    bloch_norm: np.ndarray
    endpoint_metric: np.ndarray
    endpoint_norm: np.ndarray


def sweep_point(p, cfg=IntegratorConfig(), max_nonadiabaticity=1e-3):
    """One integration serving both the asymptotic and the raw readout.

    The raw values start from the north pole at ``t_start`` and are read at
    ``t_end``; they carry the finite-window oscillation that the asymptotic
    values remove.
    """
    S, U = _scatter(p, cfg, max_nonadiabaticity)
    return SweepPoint(
        bloch_vector(polar_unitary(S, 1.0)[:, 0]), bloch_vector(S[:, 0]),
        bloch_vector(polar_unitary(U, 1.0)[:, 0]), bloch_vector(U[:, 0]),
    )


def asymptotic_bloch(p, cfg=IntegratorConfig(), max_nonadiabaticity=1e-3):
    """``(bloch_metric, bloch_norm)`` of the scattered north-pole state."""
    S = scattering_matrix(p, cfg, max_nonadiabaticity)
    return bloch_vector(polar_unitary(S, 1.0)[:, 0]), bloch_vector(S[:, 0])


def mirror_state(psi):
    """Image of a state under ``k -> -k``: ``sz psi``."""
    return SIGMA_Z @ psi
