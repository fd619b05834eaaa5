"""The driven two-level Hamiltonian ``k sx + i gamma sy + F t sz``.

A single momentum mode is identified by :class:`ModeParams`.  Modes with
``|k| < |gamma|`` cross two exceptional points during the sweep and are
called PT-broken; the remaining ones keep a real spectrum at all times.
"""

from dataclasses import dataclass
import math

import numpy as np

from .algebra import SIGMA_Y, SIGMA_Z
from .errors import ConfigError


@dataclass(frozen=True)
class ModeParams:
    k: float
    gamma: float
    F: float

    def __post_init__(self):
        for name in ("k", "gamma", "F"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.F > 0:
            raise ConfigError(f"quench force F must be positive, got {self.F}")

    @classmethod
    def from_scale(cls, k, gamma, nonherm_scale):
        """Build a mode from ``gamma**2 / F`` instead of ``F``."""
        if not nonherm_scale > 0:
            raise ConfigError("nonherm_scale must be positive")
        return cls(k, gamma, gamma * gamma / nonherm_scale)

    @property
    def delta(self):
        """Adiabaticity parameter ``(k^2 - gamma^2) / (2F)``."""
        return (self.k * self.k - self.gamma * self.gamma) / (2.0 * self.F)

    @property
    def nonherm_scale(self):
        return self.gamma * self.gamma / self.F

    @property
    def pt_broken(self):
        return abs(self.k) < abs(self.gamma)

    def mirrored(self):
        """The mode at ``-k`` with the same ``gamma`` and ``F``."""
        return ModeParams(-self.k, self.gamma, self.F)


def hamiltonian(p, t):
    return np.array(
        [[p.F * t, p.k + p.gamma], [p.k - p.gamma, -p.F * t]], dtype=complex
    )


def _principal_pair(e2):
    e = np.sqrt(complex(e2))
    # E+ with Re >= 0, and Im >= 0 when purely imaginary
    if e.real < 0 or (e.real == 0 and e.imag < 0):
        e = -e
    return np.array([e, -e])


_EPS = np.finfo(float).eps


def discriminant(p, t):
    """``E^2 = F^2 t^2 + k^2 - gamma^2``, snapped to 0 within its rounding error.

    The square root magnifies an O(eps) error in ``E^2`` to O(sqrt(eps)) in
    ``E``, so without the snap an exceptional point could never be hit.
    """
    a = (p.F * np.asarray(t, dtype=float)) ** 2
    b = (p.k - p.gamma) * (p.k + p.gamma)
    e2 = a + b
    return np.where(np.abs(e2) <= 4.0 * _EPS * (a + abs(b)), 0.0, e2)


def instantaneous_eigenvalues(p, t):
    """Returns ``(E+, E-)`` with ``E+ = sqrt(F^2 t^2 + k^2 - gamma^2)``."""
    return _principal_pair(float(discriminant(p, t)))


def spectrum_on_grid(p, times):
    """Vectorised ``instantaneous_eigenvalues`` over an array of times."""
    e2 = discriminant(p, times)
    e = np.where(e2 >= 0, np.sqrt(np.abs(e2)) + 0j, 1j * np.sqrt(np.abs(e2)))
    return np.stack([e, -e], axis=-1)


def ep_times(p):
    """Times at which the two eigenvalues coalesce."""
    ak, ag = abs(p.k), abs(p.gamma)
    if ak > ag:
        return ()
    if ak == ag:
        return (0.0,)
    tau = math.sqrt((ag - ak) * (ag + ak)) / p.F
    return (-tau, tau)


# PT = P T with P = sigma_y, T = -i sigma_y K; as an antilinear operator M K
_PT_LINEAR = SIGMA_Y @ (-1j * SIGMA_Y)


def apply_pt(psi):
    return _PT_LINEAR @ np.conj(psi)


def check_pt_commutator(p, t):
    """``max|PT H (PT)^-1 - H|``; zero when H commutes with PT."""
    h = hamiltonian(p, t)
    conj_h = _PT_LINEAR @ np.conj(h) @ np.linalg.inv(_PT_LINEAR)
    return float(np.max(np.abs(conj_h - h)))


def check_k_parity(p, t):
    """``max|sz H(k, gamma) sz - H(-k, -gamma)|``."""
    flipped = ModeParams(-p.k, -p.gamma, p.F)
    lhs = SIGMA_Z @ hamiltonian(p, t) @ SIGMA_Z
    return float(np.max(np.abs(lhs - hamiltonian(flipped, t))))
