"""Independent reference computations used by the tests.

Nothing here imports the coefficient code under test: the gain kernel is
rebuilt from the interaction-time average of the Jaynes-Cummings map, and
the loss term from dense ladder-operator products.
"""
import numpy as np
from scipy import integrate


def jc_averaged_coefficients(n, m, chi, Gamma=1.0):
    """``(A_{n,m}, B_{n,m})`` as Gamma-weighted averages over the interaction time.

    An excited atom interacting for time tau maps ``rho_{n,m}`` to
    ``cos(g sqrt(n+1) tau) cos(g sqrt(m+1) tau) rho_{n,m}`` plus
    ``sin(g sqrt(n+1) tau) sin(g sqrt(m+1) tau) rho_{n,m}`` into ``(n+1, m+1)``.
    """
    g = 0.5 * Gamma * np.sqrt(chi)  # chi = 4 g^2 / Gamma^2
    a, b = g * np.sqrt(n + 1.0), g * np.sqrt(m + 1.0)

    # products of trig functions -> sums of single cosines; exp(-60) is below double precision
    T = 60.0 / Gamma

    def avg_cos(w):
        if w == 0:
            return 1.0 - np.exp(-Gamma * T)
        val, _ = integrate.quad(lambda t: Gamma * np.exp(-Gamma * t), 0, T, wvar=w,
                                weight="cos", epsabs=1e-15, epsrel=1e-13, limit=400)
        return val

    A = 0.5 * (avg_cos(a - b) + avg_cos(a + b))
    B = 0.5 * (avg_cos(a - b) - avg_cos(a + b))
    return A, B


def ladder(N):
    a = np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1)
    return a, a.T.copy()


def loss_superop(rho, gamma, n_b):
    """Dense thermal-reservoir damping applied to ``rho``."""
    N = rho.shape[0]
    a, ad = ladder(N)
    n_op = ad @ a
    # a a^dag on the truncated space is wrong in its last entry; callers keep support low
    aad = a @ ad
    return (-0.5 * gamma * (1 + n_b) * (n_op @ rho - 2 * a @ rho @ ad + rho @ n_op)
            - 0.5 * gamma * n_b * (aad @ rho - 2 * ad @ rho @ a + rho @ aad))


def gain_superop(rho, chi, Gamma=1.0):
    """``(M - 1) rho`` for an excited two-level atom, built element by element."""
    N = rho.shape[0]
    out = np.zeros_like(rho)
    for n in range(N):
        for m in range(N):
            A, B = jc_averaged_coefficients(n, m, chi, Gamma)
            out[n, m] += (A - 1.0) * rho[n, m]
            if n + 1 < N and m + 1 < N:
                out[n + 1, m + 1] += B * rho[n, m]
    return out


def dense_offdiag_rhs(c, gamma, n_b, r, chi, pad=6):
    """``d sigma_{n-1,n}/dt`` from dense operators, for ``c`` supported well below the cutoff."""
    K = c.size
    N = K + 1 + pad
    sigma = np.zeros((N, N))
    for k, ck in enumerate(c, start=1):
        sigma[k - 1, k] = ck
    d = loss_superop(sigma, gamma, n_b) + r * gain_superop(sigma, chi)
    return np.array([d[k - 1, k] for k in range(1, K + 1)]), d
