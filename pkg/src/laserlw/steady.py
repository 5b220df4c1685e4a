"""Stationary photon-number distribution and its balance identities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import population_rates
from .model import (
    DivergentDistribution,
    LaserParams,
    PhotonDistribution,
    Truncation,
    TruncationTooSmall,
    ZeroMean,
    validate_params,
)

N_MAX_CAP = 50_000_000
MIN_AUTO_N_MAX = 32


def _log_ratios(params: LaserParams, n_max: int) -> np.ndarray:
    # log(p_{n+1}/p_n) for n = 0..n_max-1
    n = np.arange(n_max, dtype=float)
    up, _ = population_rates(params, n)
    down = params.gamma * (1.0 + params.n_b) * (n + 1.0)
    with np.errstate(divide="ignore"):
        return np.log(up) - np.log(down)


def _estimate_moments(params: LaserParams) -> tuple[float, float]:
    if params.r > 0 and params.alpha_ratio > 1:
        a = params.alpha_ratio
        nbar = (a - 1.0) / params.chi
        var = nbar * a / (a - 1.0) * (1.0 + params.n_b)
    else:
        # at or below threshold: roughly geometric with ratio (alpha/gamma + n_b)/(1 + n_b)
        q = min(0.999, (params.alpha_ratio + params.n_b) / (1.0 + params.n_b))
        nbar = q / (1.0 - q)
        var = nbar * (1.0 + nbar)
    return nbar, var


def _build(params: LaserParams, n_max: int) -> tuple[np.ndarray, float]:
    """Normalised distribution on ``0..n_max`` and a bound on the mass beyond."""
    lr = _log_ratios(params, n_max + 1)
    logp = np.concatenate([[0.0], np.cumsum(lr[:-1])])
    if np.any(np.isnan(logp)) or np.any(logp == np.inf):
        raise DivergentDistribution("non-finite log-probabilities")
    logp -= logp.max()
    p = np.exp(logp)
    total = p.sum()
    p /= total
    # ratios p_{n+1}/p_n are non-increasing in n, so the tail beyond n_max
    # is dominated by a geometric series with the last ratio
    rho = math.exp(lr[-1]) if np.isfinite(lr[-1]) else 0.0
    tail = math.inf if rho >= 1.0 else p[-1] * rho / (1.0 - rho)
    return p, tail


def steady_distribution(params: LaserParams, trunc: Truncation | None = None
                        ) -> PhotonDistribution:
    """Exact stationary distribution from detailed balance.

    ``p_{n+1}/p_n = [alpha/(1+chi(n+1)) + gamma n_b] / [gamma (1+n_b)]``,
    accumulated in log space.  With ``trunc.n_max`` unset, the cutoff starts
    near ``nbar + 12 sigma`` and doubles until the tail mass is below
    ``trunc.tail_mass_bound``.  An explicit ``n_max`` that leaves more tail
    mass than that raises :class:`TruncationTooSmall`.
    """
    validate_params(params)
    trunc = trunc or Truncation()
    if trunc.n_max is not None:
        p, tail = _build(params, trunc.n_max)
        if not tail < trunc.tail_mass_bound:
            raise TruncationTooSmall(
                f"n_max = {trunc.n_max} leaves tail mass {tail:.3g} "
                f">= {trunc.tail_mass_bound:.3g}")
        return PhotonDistribution.from_probabilities(p, tail_mass=tail)

    nbar, var = _estimate_moments(params)
    n_max = max(MIN_AUTO_N_MAX, math.ceil(nbar + 12.0 * math.sqrt(var)))
    while True:
        if n_max > N_MAX_CAP:
            raise DivergentDistribution(
                f"tail mass still above {trunc.tail_mass_bound:g} at n_max = {N_MAX_CAP}")
        p, tail = _build(params, n_max)
        if tail < trunc.tail_mass_bound:
            return PhotonDistribution.from_probabilities(p, tail_mass=tail)
        n_max *= 2


def thermal_distribution(n_b: float, n_max: int) -> PhotonDistribution:
    """Geometric distribution with mean ``n_b`` truncated at ``n_max``."""
    n = np.arange(n_max + 1, dtype=float)
    if n_b == 0:
        p = (n == 0).astype(float)
    else:
        p = np.exp(n * math.log(n_b / (1.0 + n_b)))
    return PhotonDistribution.from_probabilities(p)


def moments(dist: PhotonDistribution) -> tuple[float, float, float]:
    """``(nbar, var, Q)`` recomputed from ``dist.p``."""
    p = np.asarray(dist.p, dtype=float)
    n = np.arange(p.size, dtype=float)
    nbar = float(n @ p)
    var = float(((n - nbar) ** 2) @ p)
    if nbar == 0:
        raise ZeroMean("Mandel Q is undefined for a zero mean photon number")
    return nbar, var, var / nbar - 1.0


@dataclass(frozen=True)
class BalanceResiduals:
    photon_number: float
    variance: float

    def ok(self, tol: float = 1e-8) -> bool:
        return self.photon_number < tol and self.variance < tol


def check_balance(dist: PhotonDistribution, params: LaserParams) -> BalanceResiduals:
    """Residuals of the exact stationary identities.

    ``photon_number`` is the relative defect of the mean-photon-number
    balance ``(r chi/2) sum (n+1) p_n / (1+chi(n+1)) = gamma (nbar - n_b)``;
    ``variance`` is the defect of ``d(Delta n^2)/dt = 0`` written as a single
    sum over ``p_n``, normalised by the sum of absolute values of its terms.
    """
    p = np.asarray(dist.p, dtype=float)
    n = np.arange(p.size, dtype=float)
    g, nb, chi = params.gamma, params.n_b, params.chi
    alpha = params.alpha
    nbar = float(n @ p)

    gain = alpha * np.sum((n + 1.0) * p / (1.0 + chi * (n + 1.0)))
    scale = g * nbar if nbar > 0 else g
    r1 = abs(gain - g * (nbar - nb)) / scale

    t_gain = p * alpha * (n + 1.0) * (2 * n + 1.0 - 2 * nbar) / (1.0 + chi * (n + 1.0))
    t_mean = -p * 2.0 * nbar * g * (nb - n)
    t_loss = p * g * (nb * (n + 1.0) * (2 * n + 1.0) - (1.0 + nb) * n * (2 * n - 1.0))
    denom = np.sum(np.abs(t_gain) + np.abs(t_mean) + np.abs(t_loss))
    r2 = abs(np.sum(t_gain + t_mean + t_loss)) / denom if denom > 0 else 0.0
    return BalanceResiduals(photon_number=float(r1), variance=float(r2))
