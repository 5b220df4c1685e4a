"""Gain coefficients and tridiagonal generators of the laser master equation.

The master equation ``d rho/dt = r (M - 1) rho + L rho`` preserves
``n - m``, so the populations (``n = m``) and the first coherences
(``m = n - 1``) each evolve under a tridiagonal generator.  Both are kept
as three coefficient vectors; full matrices are never formed here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .model import LaserParams, Truncation, TruncationTooSmall, validate_params

MIN_N_MAX = 8


def _denominator(n, m, chi, chi2_terms=True):
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    d = 2.0 + chi * (n + m + 2.0)
    if chi2_terms:
        d = d + 0.125 * chi**2 * (n - m) ** 2
    return d


def gain_A(n, m, chi: float, chi2_terms: bool = True):
    """Coefficient multiplying ``rho_{n,m}`` in ``(M rho)_{n,m}``.

    Vectorised over ``n`` and ``m``.  ``chi2_terms=False`` drops the
    ``chi^2 (n-m)^2 / 8`` pieces, which vanish anyway on the diagonal.
    """
    return 1.0 - gain_A_deficit(n, m, chi, chi2_terms)


def gain_A_deficit(n, m, chi: float, chi2_terms: bool = True):
    """``1 - A_{n,m}`` evaluated without cancellation."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    num = chi * (1.0 + 0.5 * (n + m))
    if chi2_terms:
        num = num + 0.125 * chi**2 * (n - m) ** 2
    out = num / _denominator(n, m, chi, chi2_terms)
    return out[()] if out.ndim == 0 else out


def gain_B(n, m, chi: float, chi2_terms: bool = True):
    """Coefficient multiplying ``rho_{n,m}`` in ``(M rho)_{n+1,m+1}``."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    out = chi * np.sqrt((n + 1.0) * (m + 1.0)) / _denominator(n, m, chi, chi2_terms)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TridiagGenerator:
    """Tridiagonal generator ``dx_i/dt = sub_i x_{i-1} + diag_i x_i + sup_i x_{i+1}``.

    All three vectors have the full sector length; ``sub[0]`` and
    ``sup[-1]`` are zero.  ``offset`` is the photon number of ``x_0``
    (0 for populations, 1 for the coherences ``sigma_{n-1,n}``).
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    sector: str
    offset: int

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub[1:] * x[:-1]
        y[:-1] += self.sup[:-1] * x[1:]
        return y

    def to_sparse(self, fmt: str = "csc") -> sparse.spmatrix:
        return sparse.diags([self.sub[1:], self.diag, self.sup[:-1]], [-1, 0, 1],
                            format=fmt)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def column_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[:-1] += self.sub[1:]
        s[1:] += self.sup[:-1]
        return s

    def symmetrize(self):
        """Diagonal similarity ``D G D^-1`` that makes ``G`` symmetric.

        Returns ``(diag, offdiag, log_d)``: the symmetric tridiagonal matrix
        and ``log D``.  Off-diagonals are ``sqrt(sub_{i+1} sup_i)``, which
        leaves the spectrum unchanged whenever the products are
        non-negative.  Where a product vanishes the matrix decouples and
        ``log_d`` restarts from zero.
        """
        prod = self.sub[1:] * self.sup[:-1]
        if np.any(prod < 0):
            raise ValueError("generator is not symmetrizable (sub*sup < 0)")
        offdiag = np.sqrt(prod)
        step = np.zeros(self.size - 1)
        ok = prod > 0
        with np.errstate(divide="ignore"):
            step[ok] = 0.5 * (np.log(self.sup[:-1][ok]) - np.log(self.sub[1:][ok]))
        log_d = np.concatenate([[0.0], np.cumsum(step)])
        return self.diag.copy(), offdiag, log_d


def _check_trunc(trunc: Truncation) -> int:
    if trunc.n_max is None:
        raise TruncationTooSmall("generator assembly needs an explicit n_max")
    if trunc.n_max < MIN_N_MAX:
        raise TruncationTooSmall(f"n_max = {trunc.n_max} < {MIN_N_MAX}")
    return trunc.n_max


def population_rates(params: LaserParams, n):
    """Upward and downward transition rates out of photon number ``n``."""
    n = np.asarray(n, dtype=float)
    g, nb = params.gamma, params.n_b
    # r * B_{n,n} = alpha (n+1) / (1 + chi (n+1))
    up = params.r * gain_B(n, n, params.chi) + g * nb * (n + 1.0)
    down = g * (1.0 + nb) * n
    return up, down


def assemble_diagonal_generator(params: LaserParams, trunc: Truncation) -> TridiagGenerator:
    """Birth-death generator for ``p_n``, ``n = 0..n_max``.

    The upward rate out of ``n_max`` is dropped so that every column sums
    to zero and probability is conserved exactly on the truncated chain.
    """
    validate_params(params)
    n_max = _check_trunc(trunc)
    n = np.arange(n_max + 1, dtype=float)
    up, down = population_rates(params, n)
    up[-1] = 0.0
    sub = np.zeros_like(n)
    sup = np.zeros_like(n)
    sub[1:] = up[:-1]
    sup[:-1] = down[1:]
    return TridiagGenerator(sub=sub, diag=-(up + down), sup=sup, sector="diagonal", offset=0)


def assemble_offdiag_generator(params: LaserParams, trunc: Truncation,
                               chi2_terms: bool = True) -> TridiagGenerator:
    """Generator for ``c_n = sigma_{n-1,n}``, ``n = 1..n_max``.

    With ``c_{n_max+1} = 0``::

        dc_n/dt = r[(A_{n-1,n} - 1) c_n + B_{n-2,n-1} c_{n-1}]
                  - (gamma/2)(1+n_b)(2n-1) c_n + gamma(1+n_b) sqrt(n(n+1)) c_{n+1}
                  - (gamma/2) n_b (2n+1) c_n + gamma n_b sqrt((n-1)n) c_{n-1}

    ``chi2_terms=False`` uses the gain coefficients without their
    ``chi^2 (n-m)^2/8`` pieces.  Those pieces are *not* small on the scale
    of the linewidth: they shift the slow decay rate by about
    ``gamma chi / 8``.
    """
    validate_params(params)
    n_max = _check_trunc(trunc)
    g, nb, r, chi = params.gamma, params.n_b, params.r, params.chi
    n = np.arange(1, n_max + 1, dtype=float)
    diag = (-r * gain_A_deficit(n - 1, n, chi, chi2_terms)
            - 0.5 * g * (1.0 + nb) * (2 * n - 1) - 0.5 * g * nb * (2 * n + 1))
    sub = r * gain_B(n - 2, n - 1, chi, chi2_terms) + g * nb * np.sqrt((n - 1) * n)
    sub[0] = 0.0
    sup = g * (1.0 + nb) * np.sqrt(n * (n + 1))
    sup[-1] = 0.0
    return TridiagGenerator(sub=sub, diag=diag, sup=sup, sector="offdiag1", offset=1)
