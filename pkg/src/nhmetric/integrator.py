"""Adaptive Dormand-Prince 8(5,3) integration of the two linear systems.

The kernel is compiled with numba; it integrates either

* ``PAIR``: the state ``psi`` together with the metric ``rho``
  (``i psi' = H psi``, ``i rho' = H^dagger rho - rho H``), or
* ``PROPAGATOR``: the 2x2 evolution operator ``i U' = H U``,

for ``H(t) = [[F t, k + gamma], [k - gamma, -F t]]``.  Both systems are linear
and homogeneous, so a positive scalar rescaling of the unknown is exact; the
kernel applies one whenever the state leaves a conditioning window and keeps
the running logarithm of the applied factors.

Tableau and error estimator follow Hairer, Norsett & Wanner; the coefficients
are taken from scipy.
"""

from dataclasses import dataclass

import numba
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

PAIR = 0
PROPAGATOR = 1

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2
STATUS_NOT_FINITE = 3

_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXP = -1.0 / 8.0


@numba.njit(cache=True)
def _rhs(kind, t, y, p, out):
    a = p[2] * t
    b = p[0] + p[1]
    c = p[0] - p[1]
    if kind == PAIR:
        x0 = y[0]
        x1 = y[1]
        out[0] = -1j * (a * x0 + b * x1)
        out[1] = -1j * (c * x0 - a * x1)
        r00 = y[2]
        r01 = y[3]
        r10 = y[4]
        r11 = y[5]
        # H^T rho - rho H, H real: H^T = [[a, c], [b, -a]]
        out[2] = -1j * ((a * r00 + c * r10) - (r00 * a + r01 * c))
        out[3] = -1j * ((a * r01 + c * r11) - (r00 * b - r01 * a))
        out[4] = -1j * ((b * r00 - a * r10) - (r10 * a + r11 * c))
        out[5] = -1j * ((b * r01 - a * r11) - (r10 * b - r11 * a))
    else:
        for j in range(2):
            u0 = y[j]
            u1 = y[2 + j]
            out[j] = -1j * (a * u0 + b * u1)
            out[2 + j] = -1j * (c * u0 - a * u1)


@numba.njit(cache=True)
def _gauge_size(kind, y):
    if kind == PAIR:
        return np.sqrt(abs(y[0]) ** 2 + abs(y[1]) ** 2)
    s = 0.0
    for i in range(4):
        s += abs(y[i]) ** 2
    return np.sqrt(0.5 * s)


@numba.njit(cache=True)
def _pairing(y):
    # <psi|rho|psi>
    x0 = y[0]
    x1 = y[1]
    v = (
        np.conj(x0) * (y[2] * x0 + y[3] * x1)
        + np.conj(x1) * (y[4] * x0 + y[5] * x1)
    )
    return v.real


@numba.njit(cache=True)
def _post_step(kind, y, lo, hi):
    """Hermitise rho and rescale; returns log of the factor applied to y."""
    if kind == PAIR:
        off = 0.5 * (y[3] + np.conj(y[4]))
        y[3] = off
        y[4] = np.conj(off)
        y[2] = y[2].real
        y[5] = y[5].real
    n = _gauge_size(kind, y)
    if n >= lo and n <= hi:
        return 0.0
    c = 1.0 / n
    if kind == PAIR:
        y[0] *= c
        y[1] *= c
        for i in range(2, 6):
            y[i] *= n * n
    else:
        for i in range(4):
            y[i] *= c
    return np.log(c)


@numba.njit(cache=True)
def _err_norm(K, h, scale, n):
    e5 = 0.0
    e3 = 0.0
    for i in range(n):
        s5 = 0j
        s3 = 0j
        for j in range(_NS + 1):
            s5 += _E5[j] * K[j, i]
            s3 += _E3[j] * K[j, i]
        e5 += abs(s5 / scale[i]) ** 2
        e3 += abs(s3 / scale[i]) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * n)


@numba.njit(cache=True)
def integrate_kernel(kind, params, y0, t0, t_out, rtol, atol, max_step,
                     gauge_lo, gauge_hi, max_steps):
    """Integrate from ``t0`` through every time in ``t_out`` (ascending).

    Returns ``(ys, log_gauge, pairing_dev, stats)``.  ``ys[j]`` is the rescaled
    unknown at ``t_out[j]``; ``log_gauge[j]`` is the cumulative log of the
    scalar factors applied to it.  ``pairing_dev`` is the largest
    ``|<psi|rho|psi> - 1|`` seen on any accepted step (PAIR only).  ``stats`` is
    ``[status, accepted, rejected, rescalings]``.
    """
    n = y0.shape[0]
    m = t_out.shape[0]
    ys = np.zeros((m, n), dtype=np.complex128)
    logs = np.zeros(m)
    stats = np.zeros(4, dtype=np.int64)
    K = np.zeros((_NS + 1, n), dtype=np.complex128)
    y = y0.copy()
    y_new = np.zeros(n, dtype=np.complex128)
    yt = np.zeros(n, dtype=np.complex128)
    scale = np.zeros(n)
    t = t0
    logg = 0.0
    dev = 0.0
    if kind == PAIR:
        dev = abs(_pairing(y) - 1.0)

    j = 0
    while j < m and t_out[j] <= t:
        ys[j] = y
        logs[j] = logg
        j += 1
    if j == m:
        return ys, logs, dev, stats

    _rhs(kind, t, y, params, K[0])
    # initial step (Hairer's heuristic, first stage only)
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + abs(y[i]) * rtol
        d0 += abs(y[i] / sc) ** 2
        d1 += abs(K[0, i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, max_step, t_out[m - 1] - t)

    h_prop = h
    steps = 0
    while j < m:
        if steps >= max_steps:
            stats[0] = STATUS_MAX_STEPS
            break
        steps += 1
        target = t_out[j]
        h = h_prop
        last = False
        if t + h >= target - 1e-14 * max(1.0, abs(target)):
            h = target - t
            last = True
        if h <= 10.0 * np.spacing(max(abs(t), 1.0)) and not last:
            stats[0] = STATUS_STEP_UNDERFLOW
            break

        for s in range(1, _NS):
            for i in range(n):
                acc = 0j
                for q in range(s):
                    acc += _A[s, q] * K[q, i]
                yt[i] = y[i] + h * acc
            _rhs(kind, t + _C[s] * h, yt, params, K[s])
        for i in range(n):
            acc = 0j
            for q in range(_NS):
                acc += _B[q] * K[q, i]
            y_new[i] = y[i] + h * acc
        t_new = target if last else t + h
        _rhs(kind, t_new, y_new, params, K[_NS])
        finite = True
        for i in range(n):
            if not (np.isfinite(y_new[i].real) and np.isfinite(y_new[i].imag)):
                finite = False
            scale[i] = atol + max(abs(y[i]), abs(y_new[i])) * rtol
        if not finite:
            stats[0] = STATUS_NOT_FINITE
            break
        err = _err_norm(K, h, scale, n)

        if err <= 1.0:
            stats[1] += 1
            t = t_new
            for i in range(n):
                y[i] = y_new[i]
            lc = _post_step(kind, y, gauge_lo, gauge_hi)
            if lc != 0.0:
                logg += lc
                stats[3] += 1
                _rhs(kind, t, y, params, K[0])
            else:
                for i in range(n):
                    K[0, i] = K[_NS, i]
            if kind == PAIR:
                d = abs(_pairing(y) - 1.0)
                if d > dev:
                    dev = d
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err ** _ERR_EXP)
            if last:
                ys[j] = y
                logs[j] = logg
                j += 1
                # a step clipped onto a sample says little about the scale
                h_prop = min(max(h * factor, h_prop), max_step)
            else:
                h_prop = min(h * factor, max_step)
        else:
            stats[2] += 1
            h_prop = h * max(_MIN_FACTOR, _SAFETY * err ** _ERR_EXP)
    return ys, logs, dev, stats


@dataclass
class RawSolution:
    times: np.ndarray
    ys: np.ndarray
    log_gauge: np.ndarray
    pairing_dev: float
    status: int
    accepted: int
    rejected: int
    rescalings: int


def integrate(kind, k, gamma, F, y0, t0, t_out, rtol=1e-10, atol=1e-10,
              max_step=np.inf, gauge_window=(0.1, 10.0), max_steps=10_000_000):
    t_out = np.ascontiguousarray(t_out, dtype=float)
    if np.any(np.diff(t_out) <= 0):
        raise ValueError("output times must be strictly increasing")
    params = np.array([k, gamma, F], dtype=float)
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    ys, logs, dev, stats = integrate_kernel(
        kind, params, y0, float(t0), t_out, float(rtol), float(atol),
        float(max_step), float(gauge_window[0]), float(gauge_window[1]),
        int(max_steps),
    )
    return RawSolution(t_out, ys, logs, float(dev), int(stats[0]),
                       int(stats[1]), int(stats[2]), int(stats[3]))
