import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from covertfading.bounds import (ConverseMoments, Direction, UnsupportedConfigurationError,
                                 converse_moments, kl_bound_ei, kl_bound_quartic,
                                 kl_bound_simple, kl_mc, kl_report, pe_floor)
from covertfading.detectors import block_llr
from covertfading.model import Field, Hypothesis, SystemParams, sample_energies
from covertfading.parallel import derive_rng
from oracles import EI_GAP_R1, EI_GAP_R10

UNIT = SystemParams(n=1, num_blocks=1, fading_rate=1.0, noise_var=1.0, alice_power=1.0)


def _with_ratio(r, block_len=1, field=Field.COMPLEX):
    # r = lambda s0 / sa with lambda = s0 = 1
    return SystemParams.from_blocks(1, block_len, fading_rate=1.0, alice_power=1.0 / r,
                                    field=field)


def test_bound_values_unit_scenario():
    assert kl_bound_ei(UNIT) == pytest.approx(EI_GAP_R1, rel=1e-12)
    assert kl_bound_simple(UNIT) == 0.5
    assert kl_bound_quartic(UNIT) == 1.0
    assert kl_bound_ei(_with_ratio(10.0)) == pytest.approx(EI_GAP_R10, rel=1e-8)


def test_bounds_scale_with_kappa_and_blocks():
    p = SystemParams(n=12, num_blocks=3, fading_rate=1.0, alice_power=1.0)
    assert kl_bound_ei(p) == pytest.approx(4 * EI_GAP_R1)
    assert kl_bound_ei(p, whole_slot=True) == pytest.approx(12 * EI_GAP_R1)
    real = p.replace(field=Field.REAL)
    assert kl_bound_ei(real) == pytest.approx(2 * EI_GAP_R1)
    assert kl_bound_simple(real, whole_slot=True) == pytest.approx(3 * 2 * 0.5)


def test_ei_gap_continuous_across_series_switch():
    lo, hi = kl_bound_ei(_with_ratio(50.0 - 1e-9)), kl_bound_ei(_with_ratio(50.0 + 1e-9))
    assert lo == pytest.approx(hi, rel=1e-9)


@given(st.floats(1e-3, 1e4))
def test_ei_bound_positive_and_below_corrected_quartic(r):
    p = _with_ratio(r)
    assert 0.0 < kl_bound_ei(p) <= kl_bound_quartic(p) * (1 + 1e-12)


def test_halved_quartic_undercuts_ei_bound_for_large_ratio():
    # kappa (1/r - e^r E1(r)) ~ kappa (1/r^2 - 2/r^3): above kappa / (2 r^2) once r > ~1.6
    assert kl_bound_ei(_with_ratio(1.0)) < kl_bound_simple(_with_ratio(1.0))
    assert kl_bound_ei(_with_ratio(2.0)) > kl_bound_simple(_with_ratio(2.0))


def test_zero_power():
    p = UNIT.replace(alice_power=0.0)
    assert kl_bound_ei(p) == 0.0 and kl_bound_simple(p) == 0.0
    assert kl_mc(p, "f1_f0", 10_000, derive_rng(0)) == (0.0, 0.0)
    rep = kl_report(p, 10_000, derive_rng(0))
    assert rep.d_f0_f1_mc == 0.0 and rep.bound_ei == 0.0 and rep.pe_floor == 1.0


def test_pe_floor():
    assert pe_floor(0.0) == 1.0
    assert pe_floor(2.0) == 0.0
    assert pe_floor(50.0) == 0.0
    assert pe_floor(0.02) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        pe_floor(-1e-3)


def _exact_kl_f1_f0(p):
    # D(f1 || f0) = int f1(S) llr(S) dS with f1 the exponential mixture of gamma laws
    k, s0, sa, lam = p.kappa, p.noise_var, p.alice_power, p.fading_rate

    def f1(S):
        dens = lambda x: (lam * math.exp(-lam * x) * S ** (k - 1) * math.exp(-S / (2 * (s0 + sa * x)))
                          / (math.gamma(k) * (2 * (s0 + sa * x)) ** k))
        return integrate.quad(dens, 0, np.inf, limit=200)[0]

    return integrate.quad(lambda S: f1(S) * block_llr(S, p), 0, np.inf, limit=200)[0]


def test_kl_mc_agrees_with_exact_divergence():
    exact = _exact_kl_f1_f0(UNIT)
    est, se = kl_mc(UNIT, Direction.F1_F0, 200_000, derive_rng(3, "kl"))
    assert abs(est - exact) < 4 * se
    assert exact <= kl_bound_ei(UNIT)


def test_kl_mc_requires_enough_samples():
    with pytest.raises(ValueError):
        kl_mc(UNIT, "f1_f0", 9_999, derive_rng(0))


def test_kl_report_fields():
    p = SystemParams(n=8, num_blocks=4, fading_rate=2.0, alice_power=0.5)
    rep = kl_report(p, 20_000, derive_rng(9))
    assert rep.num_blocks == 4 and rep.direction is Direction.F0_F1
    assert rep.d_f1_f0_mc > 0 and rep.d_f0_f1_mc > 0
    assert rep.slot_bound_ei == pytest.approx(4 * rep.bound_ei)
    assert rep.pe_floor == pytest.approx(pe_floor(rep.slot_d_f0_f1))


def test_converse_moments_values_and_field_guard():
    p = SystemParams(n=4, num_blocks=1, fading_rate=2.0, noise_var=1.5, alice_power=0.5)
    m = converse_moments(p)
    assert isinstance(m, ConverseMoments)
    assert m.e0_yp == 0.0 and m.var0_yp == 1.5 ** 2
    assert m.mean_gap == pytest.approx(2 * 0.5 / 2.0)
    assert m.var1_yp == pytest.approx(1.5 ** 2 + 2 * 0.25 / 4 + 2 * 0.5 * 1.5 / 2 + 4 * 0.25 / 4)
    with pytest.raises(UnsupportedConfigurationError):
        converse_moments(p.replace(field=Field.REAL))


def test_converse_moments_monte_carlo():
    p = SystemParams(n=4, num_blocks=1, fading_rate=2.0, noise_var=1.5, alice_power=0.5)
    m = converse_moments(p)
    e = sample_energies(p, Hypothesis.H1, 400_000, derive_rng(5, "yp"))[:, 0]
    yp = e / (2 * 2.0) - 2.0 * 1.5
    assert yp.mean() == pytest.approx(m.e1_yp, abs=4 * yp.std() / math.sqrt(len(yp)))
    assert yp.var() == pytest.approx(m.var1_yp, rel=0.02)
