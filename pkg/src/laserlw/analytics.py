"""Closed-form photon statistics and linewidth expressions.

Functions taking ``params`` require the laser to be above threshold.
The ones taking ``nbar`` explicitly are plain formulas and accept any
consistent set of numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import LaserParams, ThermalNotSupported, validate_params


def _laser(params: LaserParams) -> tuple[float, float, float, float]:
    validate_params(params, laser=True)
    return params.gamma, params.alpha, params.chi, params.n_b


def mean_photon(params: LaserParams) -> float:
    """Mean photon number to lowest order, ``(alpha/gamma - 1)/chi``."""
    _laser(params)
    return (params.alpha_ratio - 1.0) / params.chi


def linewidth_eq22(nbar: float, chi: float, gamma: float = 1.0, n_b: float = 0.0) -> float:
    """Linewidth as a function of the mean photon number."""
    x = chi * nbar
    return gamma / (2.0 * nbar) * ((2.0 + x) / (1.0 + x) + 2.0 * n_b)


def linewidth_threshold(nbar: float, gamma: float = 1.0, n_b: float = 0.0) -> float:
    """``chi nbar -> 0`` limit of :func:`linewidth_eq22`."""
    return gamma * (1.0 + n_b) / nbar


def linewidth_eq23(nbar: float, params: LaserParams) -> float:
    """Linewidth with ``chi`` eliminated in favour of the gain."""
    g, a, _, nb = _laser(params)
    return (a + g) / (2.0 * nbar) * (g / a) + g / nbar * nb


def linewidth_eq24(params: LaserParams) -> float:
    """Linewidth as a function of the above-threshold ratio."""
    g, a, chi, nb = _laser(params)
    return 0.5 * g * chi * g / (a - g) * (1.0 + g / a + 2.0 * nb)


def linewidth_far(params: LaserParams) -> float:
    """Far-above-threshold limit ``chi gamma^2 (1 + 2 n_b) / (2 alpha)``."""
    g, a, chi, nb = _laser(params)
    return chi * g * g / (2.0 * a) * (1.0 + 2.0 * nb)


def variance_eq27(params: LaserParams) -> float:
    """Relative photon-number variance ``Delta n^2 / nbar``."""
    g, a, _, nb = _laser(params)
    return a / (a - g) * (1.0 + nb)


def mandel_q(params: LaserParams) -> float:
    g, a, _, nb = _laser(params)
    return (g + nb * a) / (a - g)


def relative_intensity_fluctuation(params: LaserParams) -> float:
    """Normalised second factorial moment excess, ``Q / nbar``."""
    return mandel_q(params) / mean_photon(params)


def linewidth_eq28(nbar: float, q: float, gamma: float = 1.0, n_b: float = 0.0) -> float:
    """Linewidth expressed through the Mandel Q parameter."""
    if not q > -1:
        raise ValueError(f"Q must exceed -1, got {q}")
    if math.isinf(q):
        return gamma / nbar * (1.0 + n_b)
    return gamma / (2.0 * nbar) * (1.0 + q / (1.0 + q)) * (1.0 + n_b)


def linewidth_pd(params: LaserParams | None = None, *, nbar: float | None = None,
                 alpha: float | None = None, gamma: float = 1.0) -> float:
    """Standard phase-diffusion linewidth ``(gamma + alpha) / (4 nbar)``.

    Either pass ``params`` (``nbar`` then follows from the gain), or give
    ``nbar`` and ``alpha`` directly.  Only defined without thermal photons.
    """
    if params is not None:
        g, a, chi, nb = _laser(params)
        if nb > 0:
            raise ThermalNotSupported("the phase-diffusion formula holds for n_b = 0 only")
        return 0.25 * g * chi * (a + g) / (a - g)
    if nbar is None or alpha is None:
        raise TypeError("give params, or both nbar and alpha")
    return (gamma + alpha) / (4.0 * nbar)


def linewidth_eq18(params: LaserParams, nbar: float, var: float) -> float:
    """Linewidth before the injection rate is eliminated.

    Uses ``r`` from ``params`` together with the supplied moments.
    """
    validate_params(params)
    g, r, chi = params.gamma, params.r, params.chi
    s = 1.0 / (1.0 + chi * nbar)
    return g - 0.5 * r * chi * s * (1.0 - chi * s * (0.5 + var / nbar))


def balanced_gain_prefactor(nbar: float, var: float, chi: float, gamma: float = 1.0,
                        n_b: float = 0.0) -> float:
    """Next-to-leading photon-number balance for ``r chi / (2 (1 + chi nbar))``."""
    s = chi / (1.0 + chi * nbar)
    return gamma * (1.0 + s * (1.0 + var / nbar) - (1.0 + n_b) / nbar)


def linewidth_balanced_gain(nbar: float, var: float, chi: float, gamma: float = 1.0,
                            n_b: float = 0.0) -> float:
    """:func:`linewidth_eq18` with the gain replaced by :func:`balanced_gain_prefactor`.

    The variance drops out to leading order; the result reproduces
    :func:`linewidth_eq22` up to second-order corrections.
    """
    s = chi / (1.0 + chi * nbar)
    pref = balanced_gain_prefactor(nbar, var, chi, gamma, n_b)
    return gamma - pref * (1.0 - s * (0.5 + var / nbar))


@dataclass(frozen=True)
class Validity:
    valid: bool
    left_ratio: float
    right_ratio: float
    margin: float


def validity(params: LaserParams, margin: float = 10.0) -> Validity:
    """Check ``sqrt(chi(1+n_b)) << alpha/gamma - 1 << 1/chi`` with a numeric margin.

    Both ratios must be at least ``margin`` for the point to count as valid.
    """
    if margin < 1:
        raise ValueError(f"margin must be >= 1, got {margin}")
    validate_params(params)
    excess = params.alpha_ratio - 1.0
    left = excess / math.sqrt(params.chi * (1.0 + params.n_b))
    right = (1.0 / params.chi) / excess if excess > 0 else -math.inf
    return Validity(valid=bool(left >= margin and right >= margin),
                    left_ratio=left, right_ratio=right, margin=margin)
