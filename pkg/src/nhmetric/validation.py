"""Acceptance checks, one group per numbered criterion.

Every check yields a :class:`Check` record.  Records with ``gating=False``
are diagnostics: they are printed but do not decide the verdict.  The
independent oracles used here (composite Simpson, Riemann sums, closed-form
Gaussian integrals, finite differences) deliberately avoid the code paths
they verify.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .algebra import IDENTITY, SIGMA_Z, positive_sqrt, sylvester_sqrt_derivative
from .defects import defect_density, defect_density_finite_F
from .errors import NHMetricError
from .evolution import (
    IntegratorConfig, evolve_factored, evolve_mode, metric_via_propagator,
)
from .integrator import PAIR, integrate
from .model import ModeParams, ep_times, hamiltonian, instantaneous_eigenvalues, spectrum_on_grid
from .observables import (
    METRIC, NORM, asymptotic_value, metric_limit_value,
    parity_report, simulated_asymptotic_bloch,
)

WINDOW = 80.0
GAMMA = 1.0
CRITERIA = (1, 2, 3, 4, 5, 6, 7)


@dataclass
class Check:
    criterion: int
    name: str
    value: float
    tol: float
    passed: bool
    gating: bool = True
    note: str = ""
    above: bool = False  # pass means value > tol

    def line(self):
        tag = ("PASS" if self.passed else "FAIL") if self.gating else "info"
        ok_cmp, bad_cmp = (">", "<=") if self.above else ("<=", ">")
        cmp = ok_cmp if self.passed else bad_cmp
        s = f"[{tag}] C{self.criterion} {self.name}: {self.value:.3e} {cmp} {self.tol:.0e}"
        return s + (f"  ({self.note})" if self.note else "")


def _check(criterion, name, value, tol, gating=True, note="", above=False):
    value = float(value)
    ok = math.isfinite(value) and ((value > tol) if above else (value <= tol))
    return Check(criterion, name, value, tol, bool(ok), gating, note, above)


def _failed(criterion, name, tol, exc, gating=True):
    return Check(criterion, name, math.inf, tol, False, gating,
                 f"{type(exc).__name__}: {exc}")


def _cfg(window=WINDOW, **kw):
    return IntegratorConfig.symmetric(window, **kw)


# 1 -------------------------------------------------------------------------

def criterion1(cfg=None):
    cfg = cfg or _cfg()
    out = []
    for s in (2.5, 25.0):
        for kr in (0.2, 0.5, 1.1, 1.5, 2.0):
            p = ModeParams.from_scale(kr * GAMMA, GAMMA, s)
            sim = simulated_asymptotic_bloch(p, cfg)
            for m in (METRIC, NORM):
                ref = asymptotic_value(p.k, p.gamma, p.F, m)
                out.append(_check(1, f"asymptotic {m.value} k={kr}g g2/F={s}",
                                  abs(sim[m][2] - ref), 1e-3))
            # literal finite-window endpoint, reported only
            try:
                tr = evolve_factored(p, _cfg(cfg.t_end, sample_count=2))
                for m in (METRIC, NORM):
                    z = tr.final.sigma_z_metric if m is METRIC else tr.final.sigma_z_norm
                    ref = asymptotic_value(p.k, p.gamma, p.F, m)
                    out.append(_check(1, f"raw endpoint {m.value} k={kr}g g2/F={s}",
                                      abs(z - ref), 1e-3, gating=False))
            except NHMetricError as exc:
                out.append(_failed(1, f"raw endpoint k={kr}g g2/F={s}", 1e-3, exc, gating=False))
        p = ModeParams.from_scale(GAMMA, GAMMA, s)
        sim = simulated_asymptotic_bloch(p, cfg)
        lim = metric_limit_value(p.gamma, p.F)
        out.append(_check(1, f"k=g limit metric g2/F={s}", abs(sim[METRIC][2] - lim), 5e-3))
        out.append(_check(1, f"k=g limit norm g2/F={s}", abs(sim[NORM][2] - 1.0), 5e-3))
    return out


# 2 -------------------------------------------------------------------------

def criterion2(cfg=None):
    cfg = cfg or _cfg()
    out = []
    k = 1.0
    for s in (0.1, 0.5, 1.0):
        F = k * k / s
        p = ModeParams(k, 0.0, F)
        lz = 2.0 * math.exp(-2.0 * math.pi * k * k / (2.0 * F)) - 1.0
        sim = simulated_asymptotic_bloch(p, cfg)
        for m in (METRIC, NORM):
            out.append(_check(2, f"LZ {m.value} k2/F={s}", abs(sim[m][2] - lz), 1e-4))
        out.append(_check(2, f"metric vs norm asymptotic k2/F={s}",
                          abs(sim[METRIC][2] - sim[NORM][2]), 1e-6))
        tr = evolve_mode(p, replace(cfg, sample_count=201))
        diff = np.max(np.abs(tr.bloch_metric - tr.bloch_norm))
        out.append(_check(2, f"metric vs norm trajectory k2/F={s}", diff, 1e-6))
        out.append(_check(2, f"raw endpoint vs LZ k2/F={s}",
                          abs(tr.final.sigma_z_norm - lz), 1e-4, gating=False))
    return out


# 3 -------------------------------------------------------------------------

def _simpson(f, a, b, panels=1_000_000):
    n = panels + panels % 2
    x = np.linspace(a, b, n + 1)
    y = f(x)
    return (b - a) / (3.0 * n) * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def _oracle_adiabatic(gamma, method, k_max):
    g = abs(gamma)
    # regions evaluated with their own analytic branch, end points included
    if method is METRIC:
        ptb = _simpson(lambda k: 1.0 - 2.0 * k * k / (gamma * gamma), -g, g)
    else:
        ptb = _simpson(lambda k: k / gamma, -g, g)
    tails = 2 * _simpson(lambda k: -np.ones_like(k), g, k_max)
    return tails / (2 * math.pi), ptb / (2 * math.pi)


def _oracle_finite(gamma, F, method, k_max):
    g = abs(gamma)
    eps = 1e-12 * max(1.0, g)
    f = lambda k: _eq_vec(k, gamma, F, method)
    tails = _simpson(f, -k_max, -g - eps) + _simpson(f, g + eps, k_max)
    ptb = _simpson(f, -g + eps, g - eps)
    return tails / (2 * math.pi), ptb / (2 * math.pi)


def _eq_vec(k, gamma, F, method):
    # plain vectorised closed form, only ever multiplied by exp(-2 pi |delta|)
    d = (k * k - gamma * gamma) / (2 * F)
    y = np.exp(-2 * np.pi * np.abs(d))
    g2, k2 = gamma * gamma, k * k
    pos = d >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if method is METRIC:
            return np.where(pos, ((2 * k2 - g2) * y - k2) / (k2 - g2 * y),
                            ((2 * k2 - g2) - k2 * y) / (k2 * y - g2))
        return np.where(pos, (2 * k * y - k + gamma) / (2 * gamma * y + k - gamma),
                        (2 * k - (k - gamma) * y) / (2 * gamma + (k - gamma) * y))


def criterion3():
    out = []
    g = GAMMA
    pi = math.pi
    dm = defect_density(g, METRIC)
    dn = defect_density(g, NORM)
    out.append(_check(3, "adiabatic metric PTb = g/(3 pi)", abs(dm.sigma_ptb - g / (3 * pi)), 1e-6))
    out.append(_check(3, "adiabatic norm PTb = 0", abs(dn.sigma_ptb), 1e-8))
    out.append(_check(3, "adiabatic metric PTs = g/pi - 1", abs(dm.sigma_pts - (g / pi - 1)), 1e-6))
    out.append(_check(3, "adiabatic norm PTs = g/pi - 1", abs(dn.sigma_pts - (g / pi - 1)), 1e-6))
    F = g * g / 400.0
    fm = defect_density_finite_F(g, F, METRIC)
    fn = defect_density_finite_F(g, F, NORM)
    out.append(_check(3, "g2/F=400 metric PTb vs g/(3 pi)", abs(fm.sigma_ptb - g / (3 * pi)), 2e-2))
    out.append(_check(3, "g2/F=400 norm PTb vs 0", abs(fn.sigma_ptb), 2e-2))
    out.append(_check(3, "g2/F=400 metric PTs vs g/pi - 1", abs(fm.sigma_pts - (g / pi - 1)), 2e-2))
    out.append(_check(3, "g2/F=400 norm PTs vs g/pi - 1", abs(fn.sigma_pts - (g / pi - 1)), 2e-2))
    # Simpson oracle on every case above
    for d in (dm, dn):
        pts, ptb = _oracle_adiabatic(g, d.method, d.k_max)
        out.append(_check(3, f"Simpson oracle adiabatic {d.method.value}",
                          max(abs(pts - d.sigma_pts), abs(ptb - d.sigma_ptb)), 1e-7))
    for d in (fm, fn):
        pts, ptb = _oracle_finite(g, F, d.method, d.k_max)
        out.append(_check(3, f"Simpson oracle g2/F=400 {d.method.value}",
                          max(abs(pts - d.sigma_pts), abs(ptb - d.sigma_ptb)), 1e-7))
    return out


# 4 -------------------------------------------------------------------------

def criterion4(cfg=None):
    cfg = cfg or _cfg()
    out = []
    F = GAMMA ** 2 / 2.5
    ks = (0.2, 0.5, 1.1, 2.0)
    rows = parity_report(GAMMA, F, [s * k for k in ks for s in (1, -1)], cfg)
    for r in rows:
        out.append(_check(4, f"metric sz even k={r.k:g}", r.metric_z_even, 1e-6))
        out.append(_check(4, f"metric sx odd k={r.k:g}", r.metric_x_odd, 1e-6))
        if r.k == 0.2:
            out.append(_check(4, "norm sz parity residual k=0.2g", r.norm_z_even, 1e-2, above=True))
    direct = parity_report(GAMMA, F, [0.2, -0.2], cfg,
                           evolve=lambda p, c: evolve_mode(p, c, strict=False, check_gauge=False))
    out.append(_check(4, "metric sz even k=0.2g, direct pair route", direct[0].metric_z_even,
                      1e-6, gating=False))
    F4 = GAMMA ** 2 / 400.0
    for k in (0.2, 0.5, -0.5, 0.8):
        p = ModeParams(k, GAMMA, F4)
        sim = simulated_asymptotic_bloch(p, cfg)
        out.append(_check(4, f"norm adiabatic law k={k:g} g2/F=400 (simulated)",
                          abs(sim[NORM][2] - k / GAMMA), 2e-2))
        out.append(_check(4, f"norm adiabatic law k={k:g} g2/F=400 (closed form)",
                          abs(asymptotic_value(k, GAMMA, F4, NORM) - k / GAMMA), 2e-2))
    return out


# 5 -------------------------------------------------------------------------

def criterion5(cfg=None):
    cfg = cfg or _cfg()
    p = ModeParams.from_scale(GAMMA, GAMMA, 2.5)
    lim = metric_limit_value(p.gamma, p.F)
    out = []
    for label, run in (("direct", evolve_mode), ("factored", evolve_factored)):
        tr = run(p, cfg)
        dev = np.max(np.abs(tr.bloch_norm - np.array([0.0, 0.0, 1.0])))
        out.append(_check(5, f"norm state frozen at north pole ({label})", dev, 1e-9))
        out.append(_check(5, f"metric sz(t_end) vs k=g limit ({label})",
                          abs(tr.final.sigma_z_metric - lim), 5e-3))
    return out


# 6 -------------------------------------------------------------------------

GRID_K = (0.0, 0.2, 0.5, 1.0, 1.1, 2.0)
GRID_SCALE = (0.5, 2.5, 25.0, 400.0)


def criterion6(cfg=None, grid_k=GRID_K, grid_scale=GRID_SCALE):
    # long windows accumulate error in proportion to the tolerance
    cfg = cfg or _cfg(sample_count=201, rel_tol=1e-12, abs_tol=1e-12)
    out = []
    worst = {"pair": 0.0, "pair_f": 0.0, "herm": 0.0, "herm_d": 0.0, "par": 0.0, "orc": 0.0}
    fails = {k: [] for k in worst}
    n = 0
    for s in grid_scale:
        for kr in grid_k:
            n += 1
            p = ModeParams.from_scale(kr * GAMMA, GAMMA, s)
            c = cfg.covering(p)
            tag = f"k={kr}g g2/F={s}"

            def note(key, v, tol):
                worst[key] = max(worst[key], v)
                if not v <= tol:
                    fails[key].append(tag)

            # conservation and oracle equivalence belong to the direct pair route
            try:
                d = evolve_mode(p, c, strict=False, check_gauge=False)
                note("pair", d.pairing_dev, 1e-7)
                herm = max(x.herm_residual / np.max(np.abs(x.h)) for x in d)
                note("herm_d", herm, 1e-6)
                orc = 0.0
                for x, (t, r) in zip(d, metric_via_propagator(p, c)):
                    phys = x.rho * math.exp(2 * x.log_gauge)
                    orc = max(orc, np.max(np.abs(phys - r)) / np.max(np.abs(r)))
                note("orc", orc, 1e-6)
            except NHMetricError as exc:
                for key in ("pair", "herm_d", "orc"):
                    worst[key] = math.inf
                    fails[key].append(f"{tag} ({type(exc).__name__})")
            # the mapped Hamiltonian from the propagator route
            fa = evolve_factored(p, c, allow_overflow=True)
            note("pair_f", max(abs(x.pairing - 1.0) for x in fa), 1e-7)
            note("herm", max(x.herm_residual / np.max(np.abs(x.h)) for x in fa), 1e-6)
            fb = evolve_factored(p.mirrored(), c, allow_overflow=True)
            par = max(np.max(np.abs(SIGMA_Z @ a.h @ SIGMA_Z - b.h)) / max(1.0, np.max(np.abs(a.h)))
                      for a, b in zip(fa, fb))
            note("par", par, 1e-6)

    def summary(key):
        f = fails[key]
        return f"{len(f)}/{n} fail" + (": " + ", ".join(f) if f else "")

    out.append(_check(6, "pairing |<psi|rho|psi> - 1| (direct pair route)", worst["pair"], 1e-7,
                      note=summary("pair")))
    out.append(_check(6, "pairing |<psi|rho|psi> - 1| (propagator route, stored floats)",
                      worst["pair_f"], 1e-7, gating=False, note=summary("pair_f")))
    out.append(_check(6, "max|h - h^dag|/|h|", worst["herm"], 1e-6, note=summary("herm")))
    out.append(_check(6, "max|h - h^dag|/|h| (direct pair route)", worst["herm_d"], 1e-6,
                      gating=False, note=summary("herm_d")))
    out.append(_check(6, "sz h_k sz = h_-k", worst["par"], 1e-6, note=summary("par")))
    out.append(_check(6, "direct rho vs propagator rho (relative, entrywise)", worst["orc"], 1e-6,
                      note=summary("orc")))
    out.extend(_hermitian_limit(cfg))
    out.append(_eta_dot_check())
    return out


def _hermitian_limit(cfg):
    worst = 0.0
    for k in (0.0, 0.3, 1.0, 2.0):
        p = ModeParams(k, 0.0, 0.4)
        tr = evolve_mode(p, cfg.covering(p))
        for x in tr:
            rho = x.rho * math.exp(2 * x.log_gauge)
            worst = max(worst, np.max(np.abs(rho - IDENTITY)),
                        np.max(np.abs(x.h - hamiltonian(p, x.t))) / max(1.0, np.max(np.abs(x.h))))
    return [_check(6, "gamma=0: rho = 1, h = H", worst, 1e-10)]


def _eta_dot_check():
    p = ModeParams.from_scale(1.1, 1.0, 2.5)
    t_mid = 3.0
    errs = []
    for h in (2e-2, 1e-2, 5e-3):
        ts = np.array([t_mid - h, t_mid, t_mid + h])
        y0 = np.array([1, 0, 1, 0, 0, 1], dtype=complex)
        t0 = -80.0 / math.sqrt(p.F)
        raw = integrate(PAIR, p.k, p.gamma, p.F, y0, t0, ts, rtol=1e-13, atol=1e-13)
        rhos = [y[2:].reshape(2, 2) for y in raw.ys]
        etas = [positive_sqrt(r) for r in rhos]
        H = hamiltonian(p, t_mid)
        rho = rhos[1]
        x = sylvester_sqrt_derivative(etas[1], -1j * (H.conj().T @ rho - rho @ H))
        fd = (etas[2] - etas[0]) / (2 * h)
        errs.append(np.max(np.abs(fd - x)))
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    # second order: halving h divides the error by ~4
    dev = max(abs(r - 4.0) for r in ratios)
    return _check(6, "eta_dot: finite-difference error ratio under halving vs 4", dev, 0.5,
                  note=f"errors {errs[0]:.2e}, {errs[1]:.2e}, {errs[2]:.2e}")


# 7 -------------------------------------------------------------------------

def criterion7():
    out = []
    F = GAMMA ** 2 / 2.5
    worst_root = 0.0
    mismatches = 0
    for kr in (0.0, 0.2, 0.5, 0.99, 1.0, 1.1, 2.0, -0.2, -1.0):
        p = ModeParams(kr * GAMMA, GAMMA, F)
        for t in ep_times(p):
            worst_root = max(worst_root, np.max(np.abs(instantaneous_eigenvalues(p, t))))
        T = WINDOW / math.sqrt(F)
        ts = np.linspace(-T, T, 40001)
        E = spectrum_on_grid(p, ts)[:, 0]
        eps = ep_times(p)
        if len(eps) == 2:
            expect = (ts > eps[0]) & (ts < eps[1])
        else:
            expect = np.zeros_like(ts, dtype=bool)
        mismatches += int(np.count_nonzero((E.imag != 0) != expect))
    out.append(_check(7, "|E(t_EP)|", worst_root, 1e-12))
    out.append(_check(7, "grid points with Im E != 0 outside the EP interval or = 0 inside",
                      mismatches, 0))
    return out


RUNNERS = {1: criterion1, 2: criterion2, 3: criterion3, 4: criterion4,
           5: criterion5, 6: criterion6, 7: criterion7}


def run(criteria=CRITERIA, echo=None):
    """Run the selected criteria; returns ``(checks, passed)``."""
    checks = []
    for c in criteria:
        res = RUNNERS[c]()
        if echo:
            for r in res:
                echo(r.line())
        checks.extend(res)
    return checks, all(c.passed for c in checks if c.gating)


def verdict(checks, criterion):
    return all(c.passed for c in checks if c.gating and c.criterion == criterion)
