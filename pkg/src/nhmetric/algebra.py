"""Closed-form kernels for 2x2 complex matrices.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``; vectors have shape ``(2,)``.  Dimension two is fixed, so
every routine below uses explicit formulas instead of LAPACK calls.
"""

import numpy as np

from .errors import NotHermitian, NotPositiveDefinite, SingularMatrix, SingularSystem

TOL_HERM = 1e-9
TOL_PD = 1e-9
TOL_DET = 1e-300

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_matrix(m):
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return m


def adjoint(m):
    return np.conj(m).T


def multiply(a, b):
    return a @ b


def add(a, b):
    return a + b


def scale(c, m):
    return c * m


def det(m):
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def adjugate(m):
    """Classical adjoint, ``adj(M) M = det(M) I``."""
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)


def _pow2_scale(m):
    """``(m / 2^e, e)`` with the largest entry of the result in ``[0.5, 1)``."""
    e = int(np.frexp(np.max(np.abs(m)))[1])
    return np.ldexp(m.real, -e) + 1j * np.ldexp(m.imag, -e), e


def inverse(m, tol_det=TOL_DET):
    """Inverse via the adjugate; ``tol_det`` bounds ``|det|`` of the rescaled matrix."""
    u, e = _pow2_scale(as_matrix(m))
    d = det(u)
    if not np.isfinite(d) or abs(d) < tol_det:
        raise SingularMatrix(f"|det| = {abs(det(m)):.3e} is numerically zero")
    inv = adjugate(u) / d
    return np.ldexp(inv.real, -e) + 1j * np.ldexp(inv.imag, -e)


def hermiticity_residual(m):
    return float(np.max(np.abs(m - adjoint(m))))


def is_hermitian(m, tol=TOL_HERM):
    """Entrywise test ``max|M - M^dagger| <= tol * max(1, max|M|)``."""
    m = as_matrix(m)
    return hermiticity_residual(m) <= tol * max(1.0, float(np.max(np.abs(m))))


def herm_eigen(m, tol=TOL_HERM):
    """Eigen-decomposition of a Hermitian 2x2 matrix.

    Returns ``(w, v)`` with ascending real eigenvalues ``w`` and the
    orthonormal eigenvectors stored as the columns of ``v``.
    """
    m = as_matrix(m)
    if not is_hermitian(m, tol):
        raise NotHermitian(f"residual {hermiticity_residual(m):.3e}")
    # exact power-of-two scaling keeps tiny or huge entries representable
    u, e = _pow2_scale(m)
    w, v = _herm_eigen_unit(u)
    return np.ldexp(w, e), v


def _herm_eigen_unit(m):
    a = m[0, 0].real
    d = m[1, 1].real
    b = 0.5 * (m[0, 1] + np.conj(m[1, 0]))
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = np.hypot(half, abs(b))
    w = np.array([mean - r, mean + r])
    if r == 0.0:
        return w, np.eye(2, dtype=complex)
    # lower eigenvector; pick the better conditioned of the two null-space forms
    if half >= 0.0:
        v0 = np.array([-b, half + r], dtype=complex)
    else:
        v0 = np.array([half - r, np.conj(b)], dtype=complex)
    # r can sit far below 1 when the spectrum is nearly degenerate
    e = int(np.frexp(np.max(np.abs(v0)))[1])
    v0 = np.ldexp(v0.real, -e) + 1j * np.ldexp(v0.imag, -e)
    v0 /= np.linalg.norm(v0)
    v1 = np.array([-np.conj(v0[1]), np.conj(v0[0])])
    return w, np.column_stack([v0, v1])


def _spectral(w, v):
    return (v * w) @ adjoint(v)


def is_positive_definite(m, tol=TOL_PD):
    try:
        w, _ = herm_eigen(m)
    except NotHermitian:
        return False
    return w[0] > tol * max(1.0, abs(w[1]))


def positive_sqrt(rho, tol=TOL_PD):
    """Hermitian positive square root ``eta`` with ``eta @ eta == rho``.

    This is the root that reduces to the identity when ``rho`` does, all other
    square roots differing from it by a unitary rotation.
    """
    w, v = herm_eigen(rho)
    if not w[0] > tol * max(1.0, abs(w[1])):
        raise NotPositiveDefinite(f"eigenvalues {w[0]:.3e}, {w[1]:.3e}")
    return _spectral(np.sqrt(w), v)


def sylvester_sqrt_derivative(eta, rho_dot):
    """Solve ``X eta + eta X = rho_dot`` for Hermitian ``X``.

    With ``rho = eta @ eta`` this is the time derivative of the positive root.
    """
    s, v = herm_eigen(eta)
    if s[0] <= 0.0:
        raise NotPositiveDefinite(f"eta eigenvalues {s[0]:.3e}, {s[1]:.3e}")
    denom = s[:, None] + s[None, :]
    if np.min(denom) < np.finfo(float).tiny:
        raise SingularSystem("eigenvalue sum underflows")
    rt = adjoint(v) @ as_matrix(rho_dot) @ v
    x = v @ (rt / denom) @ adjoint(v)
    return 0.5 * (x + adjoint(x))


def polar_unitary(m, det_phase=None):
    """Unitary factor ``Q`` of the polar decomposition ``M = Q P``.

    Uses the 2x2 Cayley-Hamilton identity ``M + |det M| M^{-dagger} = tr(P) Q``,
    written with the adjugate so that no inverse is formed.  When the phase of
    ``det M`` is known exactly (``det_phase``, e.g. ``1`` for a positive
    multiple of a unimodular propagator) the result does not depend on the
    small singular value of ``M`` at all, which is what keeps it accurate for
    extremely ill-conditioned inputs.
    """
    # Q is invariant under positive scaling; normalise so det cannot under/overflow
    m, _ = _pow2_scale(as_matrix(m))
    if det_phase is None:
        d = det(m)
        det_phase = d / abs(d) if abs(d) > 0.0 else 1.0
    # |det M| M^{-dagger} = det_phase * adj(M)^dagger
    s = m + det_phase * adjoint(adjugate(m))
    norm2 = abs(det(s))
    if not norm2 > 0.0:
        raise SingularMatrix("polar factor undefined")
    return s / np.sqrt(norm2)


def bloch_vector(psi):
    """Bloch vector of ``psi`` (normalised internally)."""
    psi = np.asarray(psi, dtype=complex)
    n2 = float(np.vdot(psi, psi).real)
    a, b = psi
    c = np.conj(a) * b
    return np.array([2 * c.real, 2 * c.imag, abs(a) ** 2 - abs(b) ** 2]) / n2
