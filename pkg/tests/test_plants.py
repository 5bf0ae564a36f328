import numpy as np
import pytest

from delaycomp import DelayBounds, check_derivative_consistency, \
    check_lyapunov, make_plant
from delaycomp.errors import UsageError
from delaycomp.plants import Controller

PLANTS = ["integrator", "linear", "cubic", "double_integrator"]


def sample_states(dim, rng):
    return [rng.uniform(-1.5, 1.5, size=dim) for _ in range(8)]


@pytest.mark.parametrize("name", PLANTS)
def test_analytic_derivatives_match_finite_differences(name):
    bundle = make_plant(name)
    rng = np.random.default_rng(7)
    samples = [(X, float(rng.uniform(-1.0, 1.0)))
               for X in sample_states(bundle.model.dim, rng)]
    report = check_derivative_consistency(bundle.model, bundle.controller,
                                          samples)
    for entry in report.entries:
        assert entry.passed, f"{name}.{entry.name}: {entry.max_error}"


@pytest.mark.parametrize("name", PLANTS)
def test_controller_vanishes_at_origin(name):
    bundle = make_plant(name)
    zero = np.zeros(bundle.model.dim)
    assert bundle.controller.kappa(zero) == 0.0
    assert np.allclose(bundle.model.f(zero, 0.0), 0.0)


@pytest.mark.parametrize("name", PLANTS)
def test_lyapunov_certificate(name):
    bundle = make_plant(name)
    if bundle.certificate is None:
        pytest.skip("no certificate attached")
    rng = np.random.default_rng(3)
    report = check_lyapunov(bundle.certificate, bundle.model,
                            bundle.controller,
                            sample_states(bundle.model.dim, rng), tol=1e-9)
    for entry in report.entries:
        assert entry.passed, f"{name}.{entry.name}: {entry.max_error}"


def test_linear_without_stabilizing_gain_has_no_certificate():
    assert make_plant("linear", a=1.0, b=1.0, k=0.5).certificate is None
    assert make_plant("linear", a=1.0, b=1.0, k=2.0).certificate is not None


def test_eval_f_checks_state_shape():
    bundle = make_plant("double_integrator")
    with pytest.raises(UsageError):
        bundle.model.eval_f(np.zeros(3), 0.0)


def test_hess_fallback_matches_analytic():
    bundle = make_plant("cubic")
    X = np.array([0.7])
    analytic = bundle.model.hess_X(X, 0.2)
    stripped = bundle.model
    stripped.d2f_dX2 = None
    fd = stripped.hess_X(X, 0.2)
    assert np.max(np.abs(analytic - fd)) < 1e-6


def test_controller_third_fallback():
    bundle = make_plant("cubic")
    ctrl = bundle.controller
    stripped = Controller(dim=1, kappa=ctrl.kappa,
                          dkappa_dX=ctrl.dkappa_dX,
                          d2kappa_dX2=ctrl.d2kappa_dX2)
    fd = stripped.third(np.array([0.4]))
    assert np.max(np.abs(fd - 6.0)) < 1e-4


def test_unknown_plant_name():
    with pytest.raises(UsageError):
        make_plant("pendulum")


def test_delay_bounds_validation():
    DelayBounds(d_lower=0.2, d_upper=1.0, true_delay=0.5)
    with pytest.raises(UsageError):
        DelayBounds(d_lower=0.6, d_upper=1.0, true_delay=0.5)
    with pytest.raises(UsageError):
        DelayBounds(d_lower=0.2, d_upper=0.4, true_delay=0.5)
