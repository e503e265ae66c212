import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from covertfading.numerics import (QuadratureError, QuadratureSpec, e1_scaled, ei,
                                   exp_mixture_log_integral, log_int_identity, logsumexp,
                                   reg_gamma_q, reg_gamma_q_inv)
from oracles import EI_POSITIVE, EI_TABLE, REG_GAMMA_Q


@pytest.mark.parametrize("x, ref", EI_TABLE)
def test_ei_negative_axis(x, ref):
    assert ei(x) == pytest.approx(float(ref), rel=1e-13)


@pytest.mark.parametrize("x, ref", EI_POSITIVE)
def test_ei_positive_axis(x, ref):
    assert ei(x) == pytest.approx(ref, rel=1e-13)


def test_ei_examples():
    assert ei(-1.0) == pytest.approx(-0.219383934395520, abs=1e-13)
    assert ei(-10.0) == pytest.approx(-4.15696892968532e-6, rel=1e-12)
    assert ei(-800.0) == 0.0 or abs(ei(-800.0)) < 1e-300
    with pytest.raises(ValueError):
        ei(0.0)


def test_ei_continuous_at_branch_switch():
    below, above = ei(-6.0 + 1e-12), ei(-6.0 - 1e-12)
    assert below == pytest.approx(above, rel=1e-10)


@given(st.floats(min_value=1e-8, max_value=700.0))
def test_e1_scaled_is_scaled_exponential_integral(t):
    # e^t E1(t) = -e^t Ei(-t); compare where e^t stays finite
    if t < 600:
        assert e1_scaled(t) == pytest.approx(-math.exp(t) * ei(-t), rel=1e-12)
    # bracket 1/(t+1) < e^t E1(t) < 1/t
    assert 1.0 / (t + 1.0) < e1_scaled(t) < 1.0 / t


def test_log_int_identity_example_and_quadrature():
    assert log_int_identity(1.0, 1.0) == pytest.approx(0.596347362323194, abs=1e-14)
    for c, lam in [(0.3, 2.0), (5.0, 0.1), (1e-3, 10.0)]:
        ref, _ = integrate.quad(lambda x: math.log1p(c * x) * lam * math.exp(-lam * x), 0,
                                np.inf, epsrel=1e-13, limit=400)
        assert log_int_identity(c, lam) == pytest.approx(ref, rel=1e-10)
    assert log_int_identity(1.0, 1e300) < 1e-299
    with pytest.raises(ValueError):
        log_int_identity(0.0, 1.0)


@pytest.mark.parametrize("a, x, ref", REG_GAMMA_Q)
def test_reg_gamma_q_oracle(a, x, ref):
    assert reg_gamma_q(a, x) == pytest.approx(ref, rel=1e-12)


def test_reg_gamma_q_domain():
    assert reg_gamma_q(3.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        reg_gamma_q(0.0, 1.0)
    with pytest.raises(ValueError):
        reg_gamma_q(1.0, -1.0)


def test_reg_gamma_q_inv_pfa_threshold():
    # two real samples under H0: energy / 2 ~ Gamma(1)
    assert 2.0 * reg_gamma_q_inv(1.0, 0.01) == pytest.approx(9.21034037, abs=1e-8)


@given(st.floats(min_value=0.05, max_value=5000.0), st.floats(min_value=1e-12, max_value=0.999))
def test_reg_gamma_q_inv_round_trip(a, q):
    x = reg_gamma_q_inv(a, q)
    assert reg_gamma_q(a, x) == pytest.approx(q, rel=1e-10)


def test_reg_gamma_q_inv_domain():
    for q in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            reg_gamma_q_inv(2.0, q)


def test_logsumexp_stable():
    assert logsumexp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0))
    assert logsumexp([-1000.0, -1000.0]) == pytest.approx(-1000.0 + math.log(2.0))
    assert logsumexp([0.0, 0.0], b=[1.0, -1.0]) == -np.inf


@pytest.mark.parametrize("method", ["window", "laguerre", "adaptive"])
def test_exp_mixture_log_integral_matches_closed_form(method):
    # int exp(-a x) lam e^{-lam x} dx = lam / (lam + a)
    lam, a = 2.0, 3.0
    got = exp_mixture_log_integral(lambda x: -a * x, lam, QuadratureSpec(method=method))
    assert got == pytest.approx(math.log(lam / (lam + a)), abs=1e-8)


def test_exp_mixture_log_integral_nonintegrable():
    with pytest.raises(QuadratureError):
        exp_mixture_log_integral(lambda x: 2.0 * x, 1.0)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(method="simpson")
    with pytest.raises(ValueError):
        QuadratureSpec(node_count=1)
    assert QuadratureSpec(node_count=32).doubled().node_count == 64
