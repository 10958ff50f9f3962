import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import lambertw

from zeno_steer import bounds
from zeno_steer.bounds import (
    OMEGA,
    BoundInputs,
    epsilon,
    lambert_w0,
    required_measurement_rate,
    success_bound,
)
from zeno_steer.errors import DomainError
from zeno_steer.linalg import schatten_inf_norm

from conftest import random_hermitian


def test_epsilon_examples():
    assert epsilon(BoundInputs(0.0, 0.0, 2.0, 7)) == 0.0
    assert epsilon(BoundInputs(math.pi / 2, 0.0, 1.0, 100)) == pytest.approx(math.pi**2 / 100 * math.exp(math.pi / 100), rel=1e-15)
    assert epsilon(BoundInputs(math.pi / 2, 0.0, 1.0, 100)) == pytest.approx(0.10185, abs=5e-6)
    assert epsilon(BoundInputs(math.pi / 2, 0.0, 1.0, 10)) == pytest.approx(math.pi**2 / 10 * math.exp(math.pi / 10), rel=1e-15)
    assert epsilon(BoundInputs(math.pi / 2, 0.0, 1.0, 10)) == pytest.approx(1.3513, abs=5e-5)


def test_success_bound_examples():
    assert success_bound(0.0) == 1.0
    assert abs(success_bound(OMEGA)) <= 1e-10
    assert success_bound(0.101847) == pytest.approx(0.88723, abs=1e-5)
    assert success_bound(0.6) < 0
    with pytest.raises(DomainError):
        success_bound(-0.1)


def test_inputs_validation():
    with pytest.raises(DomainError):
        BoundInputs(-1.0, 0.0, 1.0, 1)
    with pytest.raises(DomainError):
        BoundInputs(1.0, 0.0, 0.0, 1)
    with pytest.raises(DomainError):
        BoundInputs(1.0, 0.0, 1.0, 0)
    with pytest.raises(DomainError):
        BoundInputs(math.inf, 0.0, 1.0, 3)


def test_lambert_examples():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-15)
    root = brentq(lambda w: w * math.exp(w) - 1.0, 0.0, 1.0, xtol=1e-16)
    assert lambert_w0(1.0) == pytest.approx(root, rel=1e-14)
    assert OMEGA == pytest.approx(root, rel=1e-15)
    with pytest.raises(DomainError):
        lambert_w0(-0.1)


@pytest.mark.parametrize("x", np.logspace(-12, 12, 49))
def test_lambert_matches_scipy(x):
    assert lambert_w0(x) == pytest.approx(lambertw(x).real, rel=1e-13)


def test_lambert_monotone_and_below_identity():
    xs = np.linspace(0, 50, 400)
    ws = [lambert_w0(x) for x in xs]
    assert all(b > a for a, b in zip(ws, ws[1:]))
    assert all(w <= x for w, x in zip(ws, xs))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 20))
def test_lambert_inverts(x):
    assert lambert_w0(x * math.exp(x)) == pytest.approx(x, rel=1e-10, abs=1e-300)


def _rate_by_bisection(delta, a, tau):
    # continuous N solving log(eps e^eps) = log delta, in logs to avoid overflow
    def f(n):
        log_eps = math.log(4 * a * a * tau * tau / n) + 2 * a * tau / n
        if log_eps > 6:
            return 1e6
        return log_eps + math.exp(log_eps) - math.log(delta)

    return brentq(f, 1e-9, 1e16, xtol=1e-14, rtol=1e-15) / tau


def test_rate_examples():
    lam = required_measurement_rate(0.1, 1.0, 0.0, 1.0)
    assert lam == pytest.approx(45.8, abs=0.05)
    assert lam == pytest.approx(_rate_by_bisection(0.1, 1.0, 1.0), rel=1e-10)
    assert required_measurement_rate(0.3, 0.0, 0.0, 2.0) == 0.0
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(DomainError):
            required_measurement_rate(bad, 1.0, 0.0, 1.0)


def test_rate_round_trip_example():
    lam = required_measurement_rate(0.05, 2.0, 0.5, 3.0)
    n = math.ceil(lam * 3.0)
    eps = epsilon(BoundInputs(2.0, 0.5, 3.0, n))
    assert eps * math.exp(eps) <= 0.05


@settings(max_examples=60, deadline=None)
@given(
    delta=st.floats(1e-6, 0.99),
    k=st.floats(0, 10),
    h=st.floats(0, 10),
    tau=st.floats(0.01, 20),
)
def test_rate_round_trip_property(delta, k, h, tau):
    lam = required_measurement_rate(delta, k, h, tau)
    if k + h == 0:
        assert lam == 0
        return
    n = max(1, math.ceil(lam * tau))
    eps = epsilon(BoundInputs(k, h, tau, n))
    assert eps * math.exp(eps) <= delta + 1e-9
    if k + h > 1e-6:
        assert lam == pytest.approx(_rate_by_bisection(delta, k + h, tau), rel=1e-8)


def test_rate_monotonicity():
    deltas = np.linspace(0.01, 0.9, 30)
    rates = [required_measurement_rate(d, 1.0, 0.5, 2.0) for d in deltas]
    assert all(b < a for a, b in zip(rates, rates[1:]))
    ks = np.linspace(0.1, 5, 30)
    rk = [required_measurement_rate(0.1, k, 0.3, 1.0) for k in ks]
    assert all(b > a for a, b in zip(rk, rk[1:]))
    hs = np.linspace(0.1, 5, 30)
    rh = [required_measurement_rate(0.1, 0.3, h, 1.0) for h in hs]
    assert all(b > a for a, b in zip(rh, rh[1:]))


@settings(max_examples=100, deadline=None)
@given(k=st.floats(0, 10), h=st.floats(0, 10), tau=st.floats(0.01, 10), n=st.integers(1, 10**6))
def test_two_forms_agree(k, h, tau, n):
    a = k + h
    if a == 0:
        return
    lam = n / tau
    other = 4 * a * a * tau / lam * math.exp(2 * a / lam)
    assert epsilon(BoundInputs(k, h, tau, n)) == pytest.approx(other, rel=1e-12)


def test_bath_excluded_norm_gives_smaller_epsilon(rng):
    for _ in range(20):
        coupling = random_hermitian(rng, 4) * 0.1
        hb = np.kron(np.eye(2), random_hermitian(rng, 2)) * 3
        full, excl = schatten_inf_norm(coupling + hb), schatten_inf_norm(coupling)
        if full >= excl:
            assert epsilon(BoundInputs(1.0, excl, 1.0, 50)) <= epsilon(BoundInputs(1.0, full, 1.0, 50))


def test_mutated_prefactor_breaks_identity(monkeypatch):
    from zeno_steer import acceptance

    real = bounds.epsilon

    def mutated(inputs):
        return real(inputs) * 3.9 / 4.0

    monkeypatch.setattr(bounds, "epsilon", mutated)
    ok, _ = acceptance.formula_identity({})
    assert not ok
