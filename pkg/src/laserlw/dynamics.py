"""Two-time field correlation, decay-rate extraction and the power spectrum.

The correlation ``g(t) = <a^dag(t) a(0)>_s = sum_n sqrt(n) c_n(t)`` follows
from propagating ``c(0) = sqrt(n) p_n`` with the first off-diagonal
generator.  The linewidth is obtained twice, independently: from an
exponential fit to the propagated trace, and from the slowest eigenvalue
of the generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.integrate import BDF

from .kernels import TridiagGenerator, gain_A_deficit, gain_B
from .model import (
    CorrelationTrace,
    InsufficientDecay,
    LaserParams,
    NoConvergence,
    NonFiniteState,
    NonPositiveSamples,
    OffDiagState,
    PhotonDistribution,
    StiffnessFailure,
    Truncation,
    WindowNotReached,
    ZeroDenominator,
)


def initial_offdiag(dist: PhotonDistribution) -> OffDiagState:
    """``c_n(0) = sqrt(n) p_n`` for ``n = 1..n_max`` (the sector of ``a rho``)."""
    p = np.asarray(dist.p, dtype=float)
    n = np.arange(1, p.size, dtype=float)
    return OffDiagState(c=np.sqrt(n) * p[1:], t=0.0)


def _weights(size: int) -> np.ndarray:
    return np.sqrt(np.arange(1, size + 1, dtype=float))


def propagate_correlation(c0: OffDiagState, G1: TridiagGenerator, t_max: float,
                          times=None, n_samples: int = 2001, rtol: float = 1e-8,
                          atol: float | None = None, keep_states: bool = False,
                          truncation: Truncation | None = None) -> CorrelationTrace:
    """Integrate ``dc/dt = G1 c`` and sample ``g(t)``.

    Uses variable-order BDF with the sparse tridiagonal Jacobian, so the
    step size follows the slow mode once the fast transients have died.
    Samples are taken from the integrator's dense output on ``times``
    (default: ``n_samples`` uniform points on ``[0, t_max]``).

    Raises
    ------
    StiffnessFailure
        The step size collapsed.
    NonFiniteState
        The state left the finite floats.
    """
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    if G1.sector != "offdiag1":
        raise ValueError("propagate_correlation needs the first off-diagonal generator")
    if c0.c.size != G1.size:
        raise ValueError(f"state has {c0.c.size} entries, generator {G1.size}")
    if times is None:
        times = np.linspace(0.0, t_max, n_samples)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times[0] < 0 or times[-1] > t_max or np.any(np.diff(times) <= 0):
        raise ValueError("times must increase strictly within [0, t_max]")

    y0 = np.array(c0.c, dtype=float)
    scale = float(np.max(np.abs(y0))) or 1.0
    if atol is None:
        atol = rtol * 1e-6 * scale
    jac = G1.to_sparse("csc")
    w = _weights(G1.size)

    values = np.empty(times.size)
    states = np.empty((times.size, G1.size)) if keep_states else None
    solver = BDF(lambda t, y: jac @ y, 0.0, y0, t_max, rtol=rtol, atol=atol, jac=jac)

    k = 0
    while k < times.size and times[k] <= 0.0:
        values[k] = w @ y0
        if keep_states:
            states[k] = y0
        k += 1
    while k < times.size:
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessFailure(
                f"integrator failed at t = {solver.t:.6g}: {msg}; "
                "try a larger n_max, a smaller t_max or a looser rtol")
        if not np.all(np.isfinite(solver.y)):
            raise NonFiniteState(f"non-finite state at t = {solver.t:.6g}")
        j = np.searchsorted(times, solver.t, side="right")
        if j > k:
            interp = solver.dense_output()
            ys = np.atleast_2d(interp(times[k:j]).T)
            if solver.t == times[j - 1]:
                ys[-1] = solver.y
            values[k:j] = ys @ w
            if keep_states:
                states[k:j] = ys
            k = j
        if solver.status == "finished" and k < times.size:
            raise StiffnessFailure("integration finished before the last sample time")

    return CorrelationTrace(times=times, values=values,
                            truncation=truncation or Truncation(n_max=G1.size),
                            method="integration", states=states)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    uncertainty: float
    n_points: int
    t_window: tuple[float, float]

    @property
    def linewidth(self) -> float:
        """FWHM ``2 * rate`` of the Lorentzian belonging to ``exp(-rate |t|)``."""
        return 2.0 * self.rate


def fit_decay_rate(trace: CorrelationTrace, window: tuple[float, float] = (0.8, 0.2)
                   ) -> DecayFit:
    """Least-squares slope of ``ln g`` over the samples with ``f_lo <= g/g(0) <= f_hi``.

    The uncertainty is the largest absolute residual divided by the time
    span of the window.
    """
    f_hi, f_lo = window
    if not 0 < f_lo < f_hi <= 1:
        raise ValueError(f"window must satisfy 0 < f_lo < f_hi <= 1, got {window}")
    t = np.asarray(trace.times, dtype=float)
    g = np.asarray(trace.values, dtype=float)
    g0 = g[0]
    if not g0 > 0:
        raise NonPositiveSamples(f"g(0) = {g0} is not positive")
    below = np.nonzero(g < f_lo * g0)[0]
    if below.size == 0:
        raise WindowNotReached(
            f"g(t_max)/g(0) = {g[-1] / g0:.4g} never drops below {f_lo}; increase t_max")
    stop = below[0]
    start = int(np.argmax(g[:stop] <= f_hi * g0)) if np.any(g[:stop] <= f_hi * g0) else stop
    sel = slice(start, stop)
    ts, gs = t[sel], g[sel]
    if ts.size < 3:
        raise WindowNotReached(f"only {ts.size} samples inside the fit window; refine the grid")
    if np.any(gs <= 0):
        raise NonPositiveSamples("non-positive samples inside the fit window")
    slope, icpt = np.polyfit(ts, np.log(gs), 1)
    resid = np.log(gs) - (slope * ts + icpt)
    span = ts[-1] - ts[0]
    return DecayFit(rate=float(-slope), uncertainty=float(np.max(np.abs(resid)) / span),
                    n_points=int(ts.size), t_window=(float(ts[0]), float(ts[-1])))


@dataclass(frozen=True)
class EigenDecay:
    rate: float
    iterations: int
    vector: np.ndarray
    log_d: np.ndarray

    @property
    def linewidth(self) -> float:
        return 2.0 * self.rate


def slowest_decay_rate(G1: TridiagGenerator, tol: float = 1e-10, max_iter: int = 200
                       ) -> EigenDecay:
    """Decay rate of the slowest mode of ``G1`` by inverse iteration.

    ``G1`` is first brought to symmetric form by a diagonal similarity.
    The resulting matrix is negative definite, so ``-T`` is Cholesky
    factored once and each iteration costs one banded solve.  The
    eigenvalue is the Rayleigh quotient; iteration stops once successive
    estimates agree to ``tol`` (relative).  ``vector`` is the eigenvector
    of the symmetric form.
    """
    d, e, log_d = G1.symmetrize()
    n = d.size
    ab = np.zeros((2, n))
    ab[0, 1:] = -e
    ab[1] = -d
    try:
        factor = (linalg.cholesky_banded(ab, lower=False), False)

        def solve(x):
            return linalg.cho_solve_banded(factor, x)
    except linalg.LinAlgError:
        lu = np.zeros((3, n))
        lu[0, 1:], lu[1], lu[2, :-1] = -e, -d, -e

        def solve(x):
            return linalg.solve_banded((1, 1), lu, x)

    def apply(x):
        y = d * x
        y[1:] += e * x[:-1]
        y[:-1] += e * x[1:]
        return y

    x = np.full(n, 1.0 / math.sqrt(n))
    mu_old = None
    for it in range(1, max_iter + 1):
        y = solve(x)
        if not np.all(np.isfinite(y)):
            raise NoConvergence("inverse iteration produced non-finite values")
        x = y / np.linalg.norm(y)
        mu = float(x @ apply(x))
        if mu_old is not None and abs(mu - mu_old) <= tol * abs(mu):
            if mu >= 0:
                raise NoConvergence(f"slowest eigenvalue {mu} is not negative")
            return EigenDecay(rate=-mu, iterations=it, vector=x, log_d=log_d)
        mu_old = mu
    raise NoConvergence(f"no convergence to {tol:g} after {max_iter} iterations")


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    S: np.ndarray
    fwhm: float
    peak: float
    tail_rate: float | None


def _cos_transform(t: np.ndarray, f: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exact ``int_0^T f(t) cos(w t) dt`` for piecewise-linear ``f``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.empty(w.shape)
    h = np.diff(t)
    slope = np.diff(f) / h
    mid = 0.5 * (t[1:] + t[:-1])
    zero = w == 0
    if np.any(zero):
        out[zero] = np.sum(0.5 * h * (f[1:] + f[:-1]))
    wn = w[~zero]
    res = np.empty(wn.shape)
    # cap the (frequency x interval) work array near 2**22 entries
    chunk = max(1, (1 << 22) // max(h.size, 1))
    for i in range(0, wn.size, chunk):
        W = wn[i:i + chunk, None]
        # cos(w t_{k+1}) - cos(w t_k) = -2 sin(w mid_k) sin(w h_k / 2)
        dcos = -2.0 * np.sin(W * mid) * np.sin(0.5 * W * h)
        res[i:i + chunk] = (dcos @ slope) / W[:, 0] ** 2
    out[~zero] = f[-1] * np.sin(wn * t[-1]) / wn + res
    return out


def spectrum(trace: CorrelationTrace, nbar: float, omega=None, nu: float = 0.0,
             tail_rate: float | None = None) -> Spectrum:
    """Power spectrum ``S(w) = (1/pi) int_0^inf g(t)/nbar cos((w - nu) t) dt``.

    The sampled trace is integrated exactly as a piecewise-linear function.
    Beyond the last sample ``g`` is continued as an exponential with the
    fitted decay rate (``tail_rate`` overrides the fit); this is required
    when the trace has not decayed below ``1e-4`` of ``g(0)``.  The FWHM is
    located by bracketing and bisection on ``S`` itself.
    """
    t = np.asarray(trace.times, dtype=float)
    f = np.asarray(trace.values, dtype=float) / nbar
    decayed = abs(f[-1]) < 1e-4 * abs(f[0])
    if tail_rate is None:
        try:
            tail_rate = fit_decay_rate(trace).rate
        except (WindowNotReached, NonPositiveSamples):
            if not decayed:
                raise InsufficientDecay(
                    "trace has not decayed below 1e-4 of g(0) and no tail rate "
                    "could be fitted; increase t_max") from None
            tail_rate = None

    def S(w):
        w = np.atleast_1d(np.asarray(w, dtype=float)) - nu
        val = _cos_transform(t, f, w)
        if tail_rate is not None:
            T = t[-1]
            lam = tail_rate
            val += f[-1] * (lam * np.cos(w * T) - w * np.sin(w * T)) / (lam**2 + w**2)
        return val / math.pi

    scale = tail_rate if tail_rate else 1.0 / max(t[-1], 1e-300)
    if omega is None:
        omega = nu + scale * np.linspace(-10.0, 10.0, 401)
    omega = np.asarray(omega, dtype=float)
    S_vals = S(omega)

    peak_height = float(S(nu)[0])
    half = 0.5 * peak_height

    def edge(sign):
        step = scale
        hi = nu + sign * step
        while float(S(hi)[0]) > half:
            step *= 2.0
            hi = nu + sign * step
            if step > 1e6 * scale:
                raise InsufficientDecay("spectrum never falls to half maximum")
        return optimize.brentq(lambda x: float(S(x)[0]) - half, *sorted((nu, hi)),
                               xtol=1e-14 * scale, rtol=1e-12)

    fwhm = edge(+1.0) - edge(-1.0)
    return Spectrum(omega=omega, S=S_vals, fwhm=float(fwhm), peak=nu, tail_rate=tail_rate)


@dataclass(frozen=True)
class NumericB:
    times: np.ndarray
    excess: np.ndarray

    @property
    def b(self) -> np.ndarray:
        return 1.0 + self.excess


def numeric_b(states, params: LaserParams, chi2_terms: bool = True) -> NumericB:
    """The gain factor ``b(t) = Tr[a^dag M sigma(t)] / Tr[a^dag sigma(t)]``.

    ``states`` is a sequence of :class:`OffDiagState`.  ``excess`` holds
    ``b - 1`` computed without cancellation.  With ``chi2_terms=False``
    this is ``b = 1 + (1/4) sum chi/(1 + chi(n+1/2)) sqrt(n) c_n / sum sqrt(n) c_n``.
    """
    states = list(states)
    if not states:
        raise ValueError("no states given")
    size = states[0].c.size
    n = np.arange(1, size + 1, dtype=float)
    chi = params.chi
    # Tr[a^dag M sigma] - Tr[a^dag sigma] = sum_n c_n (sqrt(n+1) B_{n-1,n} - sqrt(n)(1 - A_{n-1,n}))
    extra = (np.sqrt(n + 1.0) * gain_B(n - 1, n, chi, chi2_terms)
             - np.sqrt(n) * gain_A_deficit(n - 1, n, chi, chi2_terms))
    w = np.sqrt(n)
    C = np.array([s.c for s in states])
    den = C @ w
    if np.any(np.abs(den) < np.finfo(float).tiny * 1e10):
        raise ZeroDenominator("g(t) underflowed while evaluating b(t)")
    return NumericB(times=np.array([s.t for s in states]), excess=(C @ extra) / den)
