"""Domain types, errors and parameter validation.

Rates are measured in units of the cavity damping ``gamma`` (default 1),
times in ``1/gamma``.  The atom-field coupling enters only through the
saturation parameter ``chi``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


class LaserError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(LaserError, ValueError):
    """Invalid physical configuration."""


class NonPositiveRate(ParameterError):
    pass


class NegativeThermal(ParameterError):
    pass


class BelowThreshold(ParameterError):
    pass


class ThermalNotSupported(ParameterError):
    pass


class ConfigError(LaserError):
    """Malformed or incomplete configuration file."""


class NumericalError(LaserError, ArithmeticError):
    """A numerical procedure failed; usually fixable by changing n_max/t_max."""


class TruncationTooSmall(NumericalError):
    pass


class DivergentDistribution(NumericalError):
    pass


class ZeroMean(NumericalError):
    pass


class StiffnessFailure(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class WindowNotReached(NumericalError):
    pass


class NonPositiveSamples(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class InsufficientDecay(NumericalError):
    pass


class ZeroDenominator(NumericalError):
    pass


@dataclass(frozen=True)
class LaserParams:
    """Physical configuration of the single-mode laser.

    Attributes
    ----------
    chi : saturation parameter ``4 g^2 / Gamma^2``
    r : atomic injection rate
    gamma : cavity damping constant
    n_b : mean thermal photon number
    nu : cavity frequency offset used to centre the spectrum
    """

    chi: float
    r: float
    gamma: float = 1.0
    n_b: float = 0.0
    nu: float = 0.0

    @classmethod
    def from_alpha_ratio(cls, alpha_ratio: float, chi: float, gamma: float = 1.0,
                         n_b: float = 0.0, nu: float = 0.0) -> "LaserParams":
        # alpha = r chi / 2
        return cls(chi=chi, r=2.0 * alpha_ratio * gamma / chi, gamma=gamma, n_b=n_b, nu=nu)

    @property
    def alpha(self) -> float:
        """Linear gain ``r chi / 2``."""
        return 0.5 * self.r * self.chi

    @property
    def alpha_ratio(self) -> float:
        return self.alpha / self.gamma

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LaserParams":
        return cls(**{k: float(v) for k, v in d.items()})


def validate_params(params: LaserParams, laser: bool = False) -> LaserParams:
    """Check the invariants of ``params`` and return it unchanged.

    With ``laser=True`` the point must also lie above threshold
    (``alpha_ratio > 1``), as required by every closed-form linewidth.
    """
    for name in ("gamma", "chi", "r", "n_b", "nu"):
        if not math.isfinite(getattr(params, name)):
            raise ParameterError(f"{name} must be finite, got {getattr(params, name)!r}")
    if params.gamma <= 0:
        raise NonPositiveRate(f"gamma must be > 0, got {params.gamma}")
    if params.chi <= 0:
        raise NonPositiveRate(f"chi must be > 0, got {params.chi}")
    if params.r < 0:
        raise NonPositiveRate(f"r must be >= 0, got {params.r}")
    if params.n_b < 0:
        raise NegativeThermal(f"n_b must be >= 0, got {params.n_b}")
    if laser and params.alpha_ratio <= 1.0:
        raise BelowThreshold(
            f"alpha/gamma = {params.alpha_ratio:.6g} <= 1: the laser is not above threshold")
    return params


@dataclass(frozen=True)
class Truncation:
    """Photon-number cutoff.  ``n_max=None`` selects it automatically."""

    n_max: int | None = None
    tail_mass_bound: float = 1e-12

    def __post_init__(self):
        if self.n_max is not None and self.n_max < 1:
            raise TruncationTooSmall(f"n_max must be >= 1, got {self.n_max}")
        if not 0 < self.tail_mass_bound < 1:
            raise ParameterError(f"tail_mass_bound must lie in (0, 1), got {self.tail_mass_bound}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Truncation":
        n_max = d.get("n_max")
        return cls(n_max=None if n_max is None else int(n_max),
                   tail_mass_bound=float(d.get("tail_mass_bound", 1e-12)))


def _array_eq(a, b) -> bool:
    return a is b or (a is not None and b is not None and np.array_equal(a, b))


@dataclass(frozen=True, eq=False)
class PhotonDistribution:
    """Diagonal steady-state distribution ``p[n]``, ``n = 0..n_max``."""

    p: np.ndarray
    nbar: float
    var: float
    q: float
    tail_mass: float = 0.0

    @classmethod
    def from_probabilities(cls, p, tail_mass: float = 0.0) -> "PhotonDistribution":
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("p must be a non-empty 1-d array")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        p = p / p.sum()
        p.setflags(write=False)
        n = np.arange(p.size, dtype=float)
        nbar = float(n @ p)
        var = float(((n - nbar) ** 2) @ p)
        q = var / nbar - 1.0 if nbar > 0 else math.nan
        return cls(p=p, nbar=nbar, var=var, q=q, tail_mass=float(tail_mass))

    @property
    def n_max(self) -> int:
        return self.p.size - 1

    def __eq__(self, other):
        if not isinstance(other, PhotonDistribution):
            return NotImplemented
        return (_array_eq(self.p, other.p) and self.nbar == other.nbar
                and self.var == other.var and (self.q == other.q or
                                               (math.isnan(self.q) and math.isnan(other.q)))
                and self.tail_mass == other.tail_mass)

    def to_dict(self) -> dict[str, Any]:
        return {"p": self.p.tolist(), "nbar": self.nbar, "var": self.var,
                "q": self.q, "tail_mass": self.tail_mass}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PhotonDistribution":
        p = np.array(d["p"], dtype=float)
        p.setflags(write=False)
        return cls(p=p, nbar=float(d["nbar"]), var=float(d["var"]), q=float(d["q"]),
                   tail_mass=float(d.get("tail_mass", 0.0)))


@dataclass(frozen=True, eq=False)
class OffDiagState:
    """First off-diagonal sector ``c[k] = sigma_{n-1,n}`` with ``n = k + 1``."""

    c: np.ndarray
    t: float = 0.0

    @property
    def n_max(self) -> int:
        return self.c.size

    def g(self) -> float:
        """Field correlation ``sum_n sqrt(n) c_n``."""
        return float(np.sqrt(np.arange(1, self.c.size + 1)) @ self.c)

    def __eq__(self, other):
        if not isinstance(other, OffDiagState):
            return NotImplemented
        return self.t == other.t and _array_eq(self.c, other.c)

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c.tolist(), "t": self.t}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "OffDiagState":
        return cls(c=np.array(d["c"], dtype=float), t=float(d["t"]))


@dataclass(frozen=True, eq=False)
class CorrelationTrace:
    """Samples of ``g(t) = <a^dag(t) a(0)>_s``.

    ``states`` optionally holds the sector snapshots, one row per sample.
    """

    times: np.ndarray
    values: np.ndarray
    truncation: Truncation
    method: str = "integration"
    states: np.ndarray | None = None

    METHODS = ("integration", "eigen")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(f"method must be one of {self.METHODS}, got {self.method!r}")
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")

    def snapshots(self) -> list[OffDiagState]:
        if self.states is None:
            raise ValueError("trace was propagated without keep_states=True")
        return [OffDiagState(c=row, t=float(t)) for t, row in zip(self.times, self.states)]

    def __eq__(self, other):
        if not isinstance(other, CorrelationTrace):
            return NotImplemented
        return (_array_eq(self.times, other.times) and _array_eq(self.values, other.values)
                and self.truncation == other.truncation and self.method == other.method
                and _array_eq(self.states, other.states))

    def to_dict(self) -> dict[str, Any]:
        return {"times": self.times.tolist(), "values": self.values.tolist(),
                "truncation": self.truncation.to_dict(), "method": self.method,
                "states": None if self.states is None else self.states.tolist()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CorrelationTrace":
        states = d.get("states")
        return cls(times=np.array(d["times"], dtype=float),
                   values=np.array(d["values"], dtype=float),
                   truncation=Truncation.from_dict(d["truncation"]),
                   method=d["method"],
                   states=None if states is None else np.array(states, dtype=float))


@dataclass(frozen=True)
class LinewidthReport:
    """All linewidth estimates for one parameter point.

    Closed-form entries are ``None`` where the formula does not apply
    (empty cavity, or the phase-diffusion result with thermal photons).
    """

    params: LaserParams
    lw_numeric_fit: float | None = None
    lw_numeric_fit_err: float | None = None
    lw_numeric_eig: float | None = None
    lw_eq22: float | None = None
    lw_eq23: float | None = None
    lw_eq24: float | None = None
    lw_eq24a: float | None = None
    lw_eq28: float | None = None
    lw_eq31: float | None = None
    q_analytic: float | None = None
    q_numeric: float | None = None
    nbar_analytic: float | None = None
    nbar_numeric: float | None = None
    valid: bool = False
    left_ratio: float | None = None
    right_ratio: float | None = None
    margin: float = 10.0
    n_max: int | None = None

    LINEWIDTHS = ("lw_eq22", "lw_eq23", "lw_eq24", "lw_eq24a", "lw_eq28", "lw_eq31",
                  "lw_numeric_eig", "lw_numeric_fit")

    def normalized(self, name: str) -> float | None:
        """Linewidth ``name`` in units of ``chi * gamma``."""
        v = getattr(self, name)
        return None if v is None else v / (self.params.chi * self.params.gamma)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["params"] = self.params.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LinewidthReport":
        d = dict(d)
        d["params"] = LaserParams.from_dict(d["params"])
        return cls(**d)


@dataclass(frozen=True)
class RunConfig:
    """Resolved contents of a ``key = value`` configuration file."""

    params: LaserParams | None
    truncation: Truncation = field(default_factory=Truncation)
    t_max: float | None = None
    rtol: float = 1e-8
    chi2_terms: bool = True
    grid: tuple[float, ...] | None = None
    numeric_every: int = 4
    raw: dict[str, str] = field(default_factory=dict)

    def resolved(self) -> dict[str, Any]:
        """Flat view used for CSV provenance headers."""
        out: dict[str, Any] = {}
        if self.params is not None:
            out.update(self.params.to_dict())
            out["alpha_ratio"] = self.params.alpha_ratio
        out["n_max"] = "auto" if self.truncation.n_max is None else self.truncation.n_max
        out["tail_mass_bound"] = self.truncation.tail_mass_bound
        out["t_max"] = "auto" if self.t_max is None else self.t_max
        out["rtol"] = self.rtol
        out["chi2_terms"] = self.chi2_terms
        if self.grid is not None:
            out["grid"] = ", ".join(repr(float(a)) for a in self.grid)
            out["numeric_every"] = self.numeric_every
        return out


_FLOAT_KEYS = {"gamma", "n_b", "chi", "r", "alpha_ratio", "nu", "tail_mass_bound", "t_max",
               "rtol", "grid_start", "grid_stop"}
_INT_KEYS = {"n_max", "grid_points", "numeric_every"}
_OTHER_KEYS = {"grid_spacing", "grid", "chi2_terms"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _OTHER_KEYS


def parse_config_text(text: str, source: str = "<config>", require_point: bool = True
                      ) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment).

    ``require_point=False`` is used by sweeps, where the gain comes from
    the grid rather than from ``r``/``alpha_ratio``.
    """
    raw: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
        lines[key] = lineno

    vals: dict[str, Any] = {}
    for key, value in raw.items():
        try:
            if key in _FLOAT_KEYS:
                vals[key] = float(value)
            elif key in _INT_KEYS:
                vals[key] = int(value)
            elif key == "grid":
                vals[key] = tuple(float(v) for v in value.replace(",", " ").split())
            elif key == "chi2_terms":
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                vals[key] = value.lower() in ("true", "1", "yes")
            else:
                vals[key] = value
        except ValueError:
            raise ConfigError(f"{source}:{lines[key]}: bad value for {key!r}: {value!r}") from None

    if "chi" not in vals:
        raise ConfigError(f"{source}: missing required key 'chi'")
    if "r" in vals and "alpha_ratio" in vals:
        raise ConfigError(f"{source}: give exactly one of 'r' and 'alpha_ratio', not both")

    grid = _parse_grid(vals, source)
    gamma = vals.get("gamma", 1.0)
    common = dict(gamma=gamma, n_b=vals.get("n_b", 0.0), nu=vals.get("nu", 0.0))
    if "r" in vals:
        params = LaserParams(chi=vals["chi"], r=vals["r"], **common)
    elif "alpha_ratio" in vals:
        params = LaserParams.from_alpha_ratio(vals["alpha_ratio"], vals["chi"], **common)
    elif require_point:
        raise ConfigError(f"{source}: missing required key 'r' (or 'alpha_ratio')")
    else:
        # sweep template; gain is filled in per grid point
        params = LaserParams(chi=vals["chi"], r=0.0, **common)
    try:
        validate_params(params)
        trunc = Truncation(n_max=vals.get("n_max"),
                           tail_mass_bound=vals.get("tail_mass_bound", 1e-12))
    except LaserError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    t_max = vals.get("t_max")
    if t_max is not None and t_max <= 0:
        raise ConfigError(f"{source}:{lines['t_max']}: t_max must be > 0")
    rtol = vals.get("rtol", 1e-8)
    if not 0 < rtol < 1:
        raise ConfigError(f"{source}:{lines['rtol']}: rtol must lie in (0, 1)")
    every = vals.get("numeric_every", 4)
    if every < 1:
        raise ConfigError(f"{source}:{lines['numeric_every']}: numeric_every must be >= 1")
    return RunConfig(params=params, truncation=trunc, t_max=t_max, rtol=rtol,
                     chi2_terms=vals.get("chi2_terms", True), grid=grid,
                     numeric_every=every, raw=raw)


def _parse_grid(vals: dict[str, Any], source: str) -> tuple[float, ...] | None:
    if "grid" in vals:
        if any(k in vals for k in ("grid_start", "grid_stop", "grid_points")):
            raise ConfigError(f"{source}: 'grid' excludes grid_start/grid_stop/grid_points")
        return vals["grid"]
    keys = ("grid_start", "grid_stop", "grid_points")
    if not any(k in vals for k in keys):
        return None
    missing = [k for k in keys if k not in vals]
    if missing:
        raise ConfigError(f"{source}: missing required key {missing[0]!r}")
    start, stop, num = vals["grid_start"], vals["grid_stop"], vals["grid_points"]
    if num < 1:
        raise ConfigError(f"{source}: grid_points must be >= 1")
    spacing = vals.get("grid_spacing", "linear").lower()
    if spacing in ("lin", "linear"):
        return tuple(float(a) for a in np.linspace(start, stop, num))
    if spacing in ("log", "geometric"):
        if start <= 0 or stop <= 0:
            raise ConfigError(f"{source}: log grid needs positive endpoints")
        return tuple(float(a) for a in np.geomspace(start, stop, num))
    raise ConfigError(f"{source}: grid_spacing must be 'linear' or 'log', got {spacing!r}")


def load_config(path: str | Path, require_point: bool = True) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, source=str(path), require_point=require_point)
