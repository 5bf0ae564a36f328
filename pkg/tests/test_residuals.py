import numpy as np
import pytest

from delaycomp import ScenarioConfig, convergence_study
from delaycomp.errors import ConfigError
from delaycomp.residuals import BOUNDARY_EQUATIONS, EXACT_FLOOR, \
    INTERIOR_EQUATIONS, _rung_norms, analysis_window_start, fit_order


def base_config(**kw):
    base = dict(plant="linear", plant_params=dict(a=1.0, b=1.0, k=2.0),
                X0=(1.0,), true_delay=0.5, schedule_kind="constant",
                schedule_params=dict(value=0.5), num_intervals=16,
                dt=2e-3, horizon=2.5, stride=250, margin=1.0)
    base.update(kw)
    return ScenarioConfig(**base)


def test_short_ladder_rejected():
    with pytest.raises(ConfigError):
        convergence_study(base_config(), [(16, 2e-3), (32, 1e-3)])


def test_non_monotone_ladder_rejected():
    with pytest.raises(ConfigError):
        convergence_study(base_config(),
                          [(32, 2e-3), (16, 1e-3), (64, 5e-4)])


def test_window_must_contain_centers():
    with pytest.raises(ConfigError) as exc:
        _rung_norms(base_config(margin=10.0))
    assert "window" in str(exc.value)


def test_analysis_window_tracks_estimate_peak():
    cfg = base_config(schedule_kind="sinusoid",
                      schedule_params=dict(base=0.5, amplitude=0.1,
                                           omega=1.0), horizon=4.0)
    _, schedule = cfg.build()
    start = analysis_window_start(cfg, schedule)
    assert abs(start - 1.6) < 2e-3


def test_equilibrium_study_is_exact():
    report = convergence_study(base_config(X0=(0.0,)),
                               [(16, 2e-3), (32, 1e-3), (64, 5e-4)])
    assert report.passed
    for name in INTERIOR_EQUATIONS + BOUNDARY_EQUATIONS:
        assert report.slopes[name] == "exact", name
        assert report.finest(name) <= EXACT_FLOOR


def test_fit_order_on_synthetic_norms():
    ms = [50, 100, 200]
    norms = [4.0 / m ** 2 for m in ms]
    assert abs(fit_order(ms, norms) - 2.0) < 1e-12
    assert fit_order(ms, [1e-15, 9e-15, 2e-16]) == "exact"


def test_blowup_rung_aborts_with_partial_report():
    cfg = base_config(plant_params=dict(a=1.0, b=1.0, k=0.0), X0=(2.0,),
                      horizon=25.0, dt=5e-3, stride=100, margin=1.0)
    report = convergence_study(cfg, [(16, 5e-3), (32, 5e-3), (64, 5e-3)])
    assert report.aborted
    assert not report.passed
    assert "blow-up" in report.failure


def test_report_serialization_shapes():
    report = convergence_study(base_config(X0=(0.0,)),
                               [(16, 2e-3), (32, 1e-3), (64, 5e-4)])
    d = report.to_dict()
    assert d["passed"] is True
    assert len(d["rungs"]) == 3
    assert d["rungs"][0]["M"] == 16
    rows = report.csv_rows()
    assert len(rows) == 3 * len(report.rungs[0].max_norms)
    text = report.table()
    assert "state" in text and "pass" in text


def test_real_mini_study_converges():
    # the margin keeps the sampling window clear of the kink echoes of
    # the zero pre-history; echoes at multiples of the delay smooth out
    # by one derivative order per round trip, so the window starts past
    # the eleventh echo where the third spatial derivative is clean
    # weak feedback and a lively estimate keep the field amplitudes well
    # above the sampling noise floor inside the late analysis window
    cfg = base_config(plant_params=dict(a=1.0, b=1.0, k=1.3),
                      true_delay=0.25, schedule_kind="sinusoid",
                      schedule_params=dict(base=0.25, amplitude=0.1,
                                           omega=2.5),
                      horizon=3.5, margin=2.75, stride=100, dt=4e-3)
    ladder = [(25, 4e-3), (50, 2e-3), (100, 1e-3)]
    caps = dict(whatxx=5e-3)
    report = convergence_study(cfg, ladder, caps=caps, slope_min=1.5)
    assert not report.aborted
    assert report.passed, report.table()
