"""One-point pipeline: steady state, both numeric linewidths, closed forms."""
from __future__ import annotations

import math

import numpy as np

from . import analytics
from .dynamics import fit_decay_rate, initial_offdiag, propagate_correlation, slowest_decay_rate
from .kernels import assemble_offdiag_generator
from .model import LaserParams, LinewidthReport, OffDiagState, Truncation, validate_params
from .steady import steady_distribution

# propagate until g has fallen to this fraction of g(0) when t_max is automatic
AUTO_DECAY_FRACTION = 1e-4


def auto_t_max(rate: float) -> float:
    return math.log(1.0 / AUTO_DECAY_FRACTION) / rate


def linewidth_report(params: LaserParams, trunc: Truncation | None = None, *,
                     numeric: bool = True, t_max: float | None = None, rtol: float = 1e-8,
                     margin: float = 10.0, chi2_terms: bool = True) -> LinewidthReport:
    """Collect every linewidth estimate for ``params``.

    ``r = 0`` is the empty cavity: only the numeric entries are filled.
    Otherwise the point must be above threshold.
    """
    empty = params.r == 0
    validate_params(params, laser=not empty)

    fields: dict = {"params": params, "margin": margin}
    if numeric:
        dist = steady_distribution(params, trunc)
        tr = Truncation(n_max=dist.n_max, tail_mass_bound=(trunc or Truncation()).tail_mass_bound)
        G1 = assemble_offdiag_generator(params, tr, chi2_terms=chi2_terms)
        eig = slowest_decay_rate(G1)
        c0 = initial_offdiag(dist)
        if dist.nbar == 0.0:
            # the vacuum carries no field correlation; follow a one-photon coherence instead
            c0 = OffDiagState(c=np.eye(G1.size)[0], t=0.0)
        trace = propagate_correlation(c0, G1, t_max or auto_t_max(eig.rate),
                                      rtol=rtol, truncation=tr)
        fit = fit_decay_rate(trace)
        fields.update(lw_numeric_eig=eig.linewidth, lw_numeric_fit=fit.linewidth,
                      lw_numeric_fit_err=2.0 * fit.uncertainty, n_max=dist.n_max)
        if not empty:
            fields.update(nbar_numeric=dist.nbar, q_numeric=dist.q)
    if empty:
        return LinewidthReport(**fields)

    g, nb = params.gamma, params.n_b
    nbar = analytics.mean_photon(params)
    q = analytics.mandel_q(params)
    v = analytics.validity(params, margin)
    fields.update(
        nbar_analytic=nbar, q_analytic=q,
        lw_eq22=analytics.linewidth_eq22(nbar, params.chi, g, nb),
        lw_eq23=analytics.linewidth_eq23(nbar, params),
        lw_eq24=analytics.linewidth_eq24(params),
        lw_eq24a=analytics.linewidth_far(params),
        lw_eq28=analytics.linewidth_eq28(nbar, q, g, nb),
        lw_eq31=analytics.linewidth_pd(params) if nb == 0 else None,
        valid=v.valid, left_ratio=v.left_ratio, right_ratio=v.right_ratio,
    )
    return LinewidthReport(**fields)
