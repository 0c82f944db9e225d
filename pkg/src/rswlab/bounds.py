"""Closed-form bound evaluators and the scale-recursion constants.

The chained crossing inequalities produce constants like 2^-1396 whose
magnitudes cannot be exponentiated in floating point, and the recursion
constants N and N-bar live at doubly-exponential scale (lambda* >= 2^1398,
so log2 N itself overflows a double).  Everything here therefore works in
log2 scale, with mpmath carrying values whose log2 exceeds the float range;
results expose both a float view (when representable) and the (sign, log2)
pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp

mp.mp.prec = 200


@dataclass(frozen=True)
class LogScaleValue:
    """sign * 2^log2_abs, with log2_abs possibly an mpmath value."""

    sign: int
    log2_abs: object  # float or mp.mpf; -inf when the value is exactly 0

    @classmethod
    def from_float(cls, x: float) -> "LogScaleValue":
        if x == 0:
            return cls(0, float("-inf"))
        return cls(1 if x > 0 else -1, math.log2(abs(x)))

    @classmethod
    def from_log2(cls, sign: int, log2_abs) -> "LogScaleValue":
        return cls(sign, log2_abs)

    def as_float(self) -> float:
        if self.sign == 0:
            return 0.0
        l2 = float(self.log2_abs)
        if l2 > 1023:
            return math.inf * self.sign
        if l2 < -1074:
            return 0.0
        return self.sign * 2.0 ** l2

    def record(self) -> dict:
        l2 = mp.mpf(self.log2_abs)
        if l2 != 0 and not (1e-300 < abs(l2) < 1e300):
            return {"sign": self.sign, "log2_abs": mp.nstr(l2, 17)}
        return {"sign": self.sign, "log2_abs": float(l2)}


def _log2_sub(a: LogScaleValue, b_log2: float) -> LogScaleValue:
    """a - 2^b_log2 for positive a (log-domain subtraction)."""
    if a.sign <= 0:
        raise ValueError("expected a positive minuend")
    x, y = float(a.log2_abs), float(b_log2)
    if x == y:
        return LogScaleValue(0, float("-inf"))
    hi, lo = max(x, y), min(x, y)
    mag = hi + math.log2(1.0 - 2.0 ** (lo - hi)) if hi - lo < 60 else hi
    return LogScaleValue(1 if x > y else -1, mag)


def rsw_bound(kind: str, **params) -> LogScaleValue:
    """Closed-form lower bounds of the crossing-inequality chain.

    kinds:
      svlr          (m, beta, rho):  (4^9/m^17)(m^2/4)^(24 rho) - 2304 rho^2 sqrt(beta/m)
      annulus       (m, beta):       m^700 / 2^696 - 9 sqrt(beta)
      surr_exponent (m, beta1, beta2, beta3):
                    (m^700/2^696 - 9 sqrt(beta1) - 2 beta2 - 2 beta3)_+
      godzilla      (r, R):          (8 r / R)^(2^-1397)
    """
    if kind == "svlr":
        m, beta, rho = params["m"], params.get("beta", 0.0), params["rho"]
        if not 0 < m <= 1 or beta < 0 or rho < 0.75:
            raise ValueError("need m in (0,1], beta >= 0, rho >= 3/4")
        main_log2 = 18.0 - 17.0 * math.log2(m) + 24.0 * rho * (2 * math.log2(m) - 2)
        main = LogScaleValue(1, main_log2)
        if beta == 0:
            return main
        corr = 2304.0 * rho * rho * math.sqrt(beta / m)
        return _log2_sub(main, math.log2(corr))
    if kind == "annulus":
        m, beta = params["m"], params.get("beta", 0.0)
        if not 0 < m <= 1 or beta < 0:
            raise ValueError("need m in (0,1], beta >= 0")
        main = LogScaleValue(1, 700.0 * math.log2(m) - 696.0)
        if beta == 0:
            return main
        return _log2_sub(main, math.log2(9.0 * math.sqrt(beta)))
    if kind == "surr_exponent":
        m = params["m"]
        b1 = params.get("beta1", 0.0)
        b2 = params.get("beta2", 0.0)
        b3 = params.get("beta3", 0.0)
        if not 0 < m <= 1 or min(b1, b2, b3) < 0:
            raise ValueError("need m in (0,1], betas >= 0")
        cur = LogScaleValue(1, 700.0 * math.log2(m) - 696.0)
        for corr in (9.0 * math.sqrt(b1), 2.0 * b2, 2.0 * b3):
            if corr > 0:
                if cur.sign <= 0:
                    return LogScaleValue(0, float("-inf"))
                cur = _log2_sub(cur, math.log2(corr))
        if cur.sign <= 0:
            return LogScaleValue(0, float("-inf"))  # positive part
        return cur
    if kind == "godzilla":
        r, R = params["r"], params["R"]
        if not 0 < r < R:
            raise ValueError("need 0 < r < R")
        base = 8.0 * r / R
        if base >= 1.0:
            return LogScaleValue(1, 0.0)  # vacuous bound, capped at 1
        exponent = mp.mpf(2) ** -1397
        return LogScaleValue(1, exponent * mp.log(base, 2))
    raise ValueError(f"unknown bound kind {kind!r}")


@dataclass
class BootstrapConstants:
    """Constants of the one-step scale recursion and its iterate threshold."""

    eta: float
    c: float
    epsilon: float
    nu: float
    log2_lambda_star: float
    log2_N: object          # mp.mpf: exceeds the float exponent range
    log2_N_bar: object
    metadata: dict = field(default_factory=dict)

    def conditions(self) -> dict:
        return {
            "eta_positive": self.eta > 0,
            "c_above_1_plus_eta": self.c > 1 + self.eta,
            "two_eps_plus_eta_below_1": 2 * self.epsilon + self.eta < 1,
            "nu_positive": self.nu > 0,
        }

    def record(self) -> dict:
        return {
            "eta": self.eta, "c": self.c, "epsilon": self.epsilon, "nu": self.nu,
            "log2_lambda_star": self.log2_lambda_star,
            "log2_N": mp.nstr(self.log2_N, 17),
            "log2_N_bar": mp.nstr(self.log2_N_bar, 17),
            "conditions": self.conditions(),
        }


def _log2_N(log2_lambda, epsilon: float, eta: float):
    """log2 of (16^1402 lambda^4)^(lambda / (1 - 2 eps - eta)), lambda as log2."""
    lam = mp.mpf(2) ** mp.mpf(log2_lambda)
    return lam / (1 - 2 * epsilon - eta) * (4 * 1402 + 4 * mp.mpf(log2_lambda))


def bootstrap_constants(C: float, alpha: float, beta: float) -> BootstrapConstants:
    """eta, c, eps, nu, lambda*, N, N-bar from the decorrelation constants.

    Requires beta > 2 alpha > 0.  lambda* and the two N's are reported in
    log2 (N and N-bar as arbitrary-precision values since their log2 exceeds
    the double range).  N-bar uses lambda -> 3 lambda inside N, maximized
    with (4/3)^(lambda/eta).
    """
    if not (C > 0 and alpha > 0 and beta > 2 * alpha):
        raise ValueError("need C > 0 and beta > 2*alpha > 0")
    eta = (1.0 - (2.0 * alpha / beta) ** (1.0 / 3.0)) / 3.0
    c = 1.0 / ((1.0 + eta) * (1.0 - 2.0 * eta) ** 2)
    epsilon = 0.5 - eta
    nu = epsilon * beta - alpha * c * (1.0 + eta)
    log2_lambda_star = max(math.log2(4.0 * C),
                           math.log2(4.0 * (1.0 + eta) / nu),
                           1398.0)
    log2_N = _log2_N(log2_lambda_star, epsilon, eta)
    log2_N_3lam = _log2_N(log2_lambda_star + math.log2(3.0), epsilon, eta)
    lam = mp.mpf(2) ** mp.mpf(log2_lambda_star)
    log2_43 = lam / eta * mp.log(mp.mpf(4) / 3, 2)
    log2_N_bar = log2_N_3lam if log2_N_3lam > log2_43 else log2_43
    out = BootstrapConstants(
        eta=eta, c=c, epsilon=epsilon, nu=nu,
        log2_lambda_star=log2_lambda_star, log2_N=log2_N, log2_N_bar=log2_N_bar,
        metadata={"C": C, "alpha": alpha, "beta": beta})
    bad = [k for k, ok in out.conditions().items() if not ok]
    if bad:
        raise ArithmeticError(f"sign conditions failed: {bad}")
    return out


def rho_sequence(k: int) -> float:
    """rho_0 = 3/4, rho_{j+1} = 2 rho_j - 2/3; closed form 2/3 + 2^k/12."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return 2.0 / 3.0 + 2.0 ** k / 12.0


def decorrelation_bound(kind: str, **params) -> dict:
    """Decorrelation rates: theta(n, ell) bounds for the two model families.

    ising:    rate c = -1/2 log(N tanh(beta0 N)) and bound C n^2 e^{-c ell}
              (the prefactor C is configurable; the theory fixes only the rate).
    gaussian: 16 n_T^(6/5) n^(12/5) delta_K^(1/5).
    """
    if kind == "ising":
        N = params["N"]
        beta0 = params["beta0"]
        x = N * math.tanh(beta0 * N)
        if x >= 1.0:
            raise ValueError("N tanh(beta0 N) >= 1: no decay rate")
        rate = -0.5 * math.log(x)
        out = {"rate": rate}
        if "n" in params and "ell" in params:
            out["bound"] = (params.get("prefactor", 1.0)
                            * params["n"] ** 2 * math.exp(-rate * params["ell"]))
        return out
    if kind == "gaussian":
        n_T = params.get("n_T", 1.0)
        n = params["n"]
        delta_K = params["delta_K"]
        if delta_K < 0:
            raise ValueError("delta_K must be >= 0")
        return {"bound": 16.0 * n_T ** 1.2 * n ** 2.4 * delta_K ** 0.2}
    raise ValueError(f"unknown decorrelation kind {kind!r}")
