import json
import math

import numpy as np
import pytest

from laserlw.model import (
    BelowThreshold,
    ConfigError,
    CorrelationTrace,
    LaserParams,
    LinewidthReport,
    NegativeThermal,
    NonPositiveRate,
    OffDiagState,
    ParameterError,
    PhotonDistribution,
    Truncation,
    parse_config_text,
    load_config,
    validate_params,
)


def test_alpha_ratio_sets_gain():
    p = LaserParams.from_alpha_ratio(2.0, chi=1e-3)
    assert p.r == pytest.approx(4000.0)
    assert p.alpha == pytest.approx(2.0)
    assert p.alpha_ratio == pytest.approx(2.0)


@pytest.mark.parametrize("kw,exc", [
    (dict(chi=1e-3, r=1.0, gamma=0.0), NonPositiveRate),
    (dict(chi=-1.0, r=1.0), NonPositiveRate),
    (dict(chi=1e-3, r=-1.0), NonPositiveRate),
    (dict(chi=1e-3, r=1.0, n_b=-0.1), NegativeThermal),
    (dict(chi=math.nan, r=1.0), ParameterError),
])
def test_validation_rejects(kw, exc):
    with pytest.raises(exc):
        validate_params(LaserParams(**kw))


def test_threshold_check():
    with pytest.raises(BelowThreshold):
        validate_params(LaserParams.from_alpha_ratio(1.0, chi=1e-3), laser=True)
    validate_params(LaserParams.from_alpha_ratio(1.0, chi=1e-3))
    validate_params(LaserParams.from_alpha_ratio(1.01, chi=1e-3), laser=True)


def test_parameter_errors_are_value_errors():
    assert issubclass(BelowThreshold, ValueError)


def _json_round(obj):
    return type(obj).from_dict(json.loads(json.dumps(obj.to_dict())))


def test_serialization_round_trips():
    p = LaserParams.from_alpha_ratio(3.0, chi=1e-2, n_b=0.5, nu=2.0)
    assert _json_round(p) == p
    t = Truncation(n_max=500, tail_mass_bound=1e-10)
    assert _json_round(t) == t
    d = PhotonDistribution.from_probabilities([0.2, 0.5, 0.3], tail_mass=1e-14)
    assert _json_round(d) == d
    s = OffDiagState(c=np.array([0.1, 0.2, 0.3]), t=4.5)
    assert _json_round(s) == s
    tr = CorrelationTrace(times=np.linspace(0, 1, 5), values=np.exp(-np.linspace(0, 1, 5)),
                          truncation=t, method="eigen")
    assert _json_round(tr) == tr
    rep = LinewidthReport(params=p, lw_eq22=0.5, lw_numeric_eig=0.51, valid=True, n_max=77)
    assert _json_round(rep) == rep


def test_distribution_moments():
    d = PhotonDistribution.from_probabilities([0.0, 0.0, 0.0, 2.0])
    assert (d.nbar, d.var, d.q) == (3.0, 0.0, -1.0)
    assert math.isnan(PhotonDistribution.from_probabilities([1.0, 0.0]).q)


def test_trace_method_checked():
    with pytest.raises(ValueError):
        CorrelationTrace(times=np.zeros(2), values=np.zeros(2), truncation=Truncation(),
                         method="euler")


def test_report_normalization():
    p = LaserParams.from_alpha_ratio(2.0, chi=1e-3)
    rep = LinewidthReport(params=p, lw_eq24=7.5e-4)
    assert rep.normalized("lw_eq24") == pytest.approx(0.75)
    assert rep.normalized("lw_eq22") is None


def test_config_parsing():
    cfg = parse_config_text("gamma = 1\nchi = 1e-3  # comment\nalpha_ratio = 2\nn_b = 0.5\n"
                            "n_max = 3000\nchi2_terms = false\n")
    assert cfg.params.alpha_ratio == pytest.approx(2.0)
    assert cfg.params.n_b == 0.5
    assert cfg.truncation.n_max == 3000
    assert cfg.chi2_terms is False


def test_config_grid():
    cfg = parse_config_text("chi = 1e-3\ngrid_start = 1\ngrid_stop = 10\ngrid_points = 3\n"
                            "grid_spacing = log\n", require_point=False)
    assert cfg.grid == pytest.approx((1.0, math.sqrt(10.0), 10.0))
    cfg = parse_config_text("chi = 1e-3\ngrid = 1.5, 2, 3\n", require_point=False)
    assert cfg.grid == (1.5, 2.0, 3.0)


@pytest.mark.parametrize("text,fragment", [
    ("gamma = 1\nr = 4000\n", "missing required key 'chi'"),
    ("chi = 1e-3\nr = 1\nalpha_ratio = 2\n", "exactly one"),
    ("chi = 1e-3\nfoo = 1\n", "cfg.txt:2: unknown key 'foo'"),
    ("chi = 1e-3\nchi = 2\n", "duplicate"),
    ("chi = abc\nr = 1\n", "cfg.txt:1: bad value for 'chi'"),
    ("chi = 1e-3\nr = 1\nn_b = -1\n", "n_b"),
    ("chi = 1e-3\njunk\n", "cfg.txt:2"),
    ("chi = 1e-3\n", "missing required key 'r'"),
])
def test_config_errors_name_the_problem(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, source="cfg.txt")
    assert fragment in str(info.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
