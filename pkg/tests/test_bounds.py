"""Closed-form bounds and the scale-recursion constants calculator."""

import math

import mpmath as mp
import numpy as np
import pytest

from rswlab.bounds import (
    LogScaleValue,
    bootstrap_constants,
    decorrelation_bound,
    rho_sequence,
    rsw_bound,
)


def test_annulus_bound_exact_exponent():
    out = rsw_bound("annulus", m=0.5, beta=0.0)
    assert out.sign == 1
    assert float(out.log2_abs) == -1396.0


def test_annulus_bound_with_correction():
    out = rsw_bound("annulus", m=0.5, beta=1e-6)
    # the correction dwarfs 2^-1396: the bound goes negative
    assert out.sign == -1
    assert float(out.log2_abs) == pytest.approx(math.log2(9e-3), rel=1e-6)


def test_svlr_bound():
    out = rsw_bound("svlr", m=0.5, beta=0.0, rho=0.75)
    assert out.sign == 1 and float(out.log2_abs) == -37.0
    out = rsw_bound("svlr", m=0.5, beta=0.0, rho=1.0)
    assert float(out.log2_abs) == pytest.approx(35.0 - 96.0)


def test_surr_exponent():
    out = rsw_bound("surr_exponent", m=0.5)
    assert out.sign == 1 and float(out.log2_abs) == -1396.0
    out = rsw_bound("surr_exponent", m=0.5, beta1=1e-4, beta2=0.3, beta3=0.0)
    assert out.sign == 0  # positive part clips to zero


def test_godzilla_kind():
    out = rsw_bound("godzilla", r=1, R=100)
    assert out.sign == 1
    expect = mp.mpf(2) ** -1397 * mp.log(mp.mpf(8) / 100, 2)
    assert mp.almosteq(mp.mpf(out.log2_abs), expect)
    # vacuous when 8r >= R
    assert float(rsw_bound("godzilla", r=2, R=8).log2_abs) == 0.0


def test_bound_param_validation():
    with pytest.raises(ValueError):
        rsw_bound("svlr", m=0.5, beta=0.0, rho=0.5)
    with pytest.raises(ValueError):
        rsw_bound("annulus", m=1.5)
    with pytest.raises(ValueError):
        rsw_bound("warp", m=0.5)


def test_logscale_record():
    rec = LogScaleValue.from_float(-0.25).record()
    assert rec == {"sign": -1, "log2_abs": -2.0}
    tiny = rsw_bound("godzilla", r=1, R=1000).record()
    assert isinstance(tiny["log2_abs"], str)  # beyond float range, kept exact


def test_bootstrap_constants_paper_instantiation():
    out = bootstrap_constants(16.0, 12.0 / 5.0, 5.0)
    assert all(out.conditions().values())
    t = (2 * (12.0 / 5.0) / 5.0) ** (1.0 / 3.0)
    assert out.eta == pytest.approx((1 - t) / 3)
    assert out.epsilon == pytest.approx(0.5 - out.eta)
    assert out.c == pytest.approx(1.0 / ((1 + out.eta) * (1 - 2 * out.eta) ** 2))
    assert out.nu == pytest.approx(out.epsilon * 5.0 - 2.4 * out.c * (1 + out.eta))
    assert out.log2_lambda_star == 1398.0
    # log2 N = lambda*/(1-2eps-eta) * (5608 + 4*log2 lambda*), astronomically big
    lam = mp.mpf(2) ** 1398
    expect = lam / (1 - 2 * out.epsilon - out.eta) * (5608 + 4 * 1398)
    assert mp.almosteq(out.log2_N, expect, rel_eps=mp.mpf(1e-12))
    assert out.log2_N_bar > out.log2_N  # the 3-lambda iterate dominates


def test_bootstrap_sign_conditions_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        alpha = float(rng.uniform(0.05, 8.0))
        beta = float(2 * alpha + rng.uniform(1e-3, 10.0))
        C = float(rng.uniform(0.1, 50.0))
        out = bootstrap_constants(C, alpha, beta)
        assert all(out.conditions().values()), (C, alpha, beta)


def test_bootstrap_rejects_boundary():
    with pytest.raises(ValueError):
        bootstrap_constants(1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        bootstrap_constants(1.0, 1.0, 1.9)


def test_rho_sequence_recursion():
    rho = 0.75
    for k in range(12):
        assert rho_sequence(k) == pytest.approx(rho)
        rho = 2 * rho - 2.0 / 3.0
    assert rho_sequence(4) == pytest.approx(2.0 / 3.0 + 16.0 / 12.0)


def test_decorrelation_ising():
    out = decorrelation_bound("ising", N=8, beta0=0.01)
    assert out["rate"] == pytest.approx(-0.5 * math.log(8 * math.tanh(0.08)),
                                        rel=1e-12)
    assert out["rate"] == pytest.approx(0.22420862795284005)
    full = decorrelation_bound("ising", N=8, beta0=0.01, n=16, ell=10,
                               prefactor=2.0)
    assert full["bound"] == pytest.approx(2.0 * 256 * math.exp(-out["rate"] * 10))
    with pytest.raises(ValueError):
        decorrelation_bound("ising", N=8, beta0=1.0)


def test_decorrelation_gaussian():
    out = decorrelation_bound("gaussian", n=2, delta_K=0.0)
    assert out["bound"] == 0.0
    out = decorrelation_bound("gaussian", n=3, delta_K=1e-10, n_T=1.0)
    assert out["bound"] == pytest.approx(16 * 3 ** 2.4 * (1e-10) ** 0.2)
    # proportional to n^{12/5} d^{-D/5} under the power-decay envelope
    b1 = decorrelation_bound("gaussian", n=4, delta_K=2.0 ** -25)["bound"]
    b2 = decorrelation_bound("gaussian", n=4, delta_K=4.0 ** -25)["bound"]
    assert b1 / b2 == pytest.approx(2.0 ** 5)
