"""Covariance kernels for the Gaussian sign fields.

All kernels are stationary, isotropic enough for the lattice symmetry group
(they depend on the Euclidean distance only), and normalized to K(x,x) = 1:

* ``iid``            -- identity covariance; its sign field is exactly fair
                        site percolation;
* ``bessel_j0``      -- J0(|x-y|), the planar random-wave correlation;
* ``smoothed_wave``  -- the Hankel transform of a smooth bump chi supported
                        around 1, normalized to 1 at distance 0; approaches
                        the J0 kernel as the bump narrows;
* ``power_decay``    -- (1 + |x-y|^2)^(-D/2), positive definite with decay
                        exponent D;
* ``mixture``        -- the kernel of u*f + sqrt(1-u^2)*f0 with f0 i.i.d.:
                        off-diagonal entries scaled by u^2.

J0 is evaluated in-package: power series below 12, Hankel asymptotic
expansion beyond, absolute error comfortably below 1e-10 (cross-checked
against mpmath in the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad as _quad

_SERIES_CUT = 12.0


def _j0_series(x: np.ndarray) -> np.ndarray:
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, 80):
        term = term * q / (k * k)
        acc = acc + term
        if np.all(np.abs(term) < 1e-18):
            break
    return acc


def _j0_asymptotic(x: np.ndarray) -> np.ndarray:
    # Hankel expansion: sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)]
    inv64x2 = 1.0 / (64.0 * x * x)
    p = np.ones_like(x)
    tp = np.ones_like(x)
    q = -1.0 / (8.0 * x)
    tq = q.copy()
    for k in range(1, 10):
        tp = -tp * ((4 * k - 3) ** 2) * ((4 * k - 1) ** 2) * inv64x2 \
            / ((2 * k - 1) * (2 * k))
        p = p + tp
        tq = -tq * ((4 * k - 1) ** 2) * ((4 * k + 1) ** 2) * inv64x2 \
            / ((2 * k) * (2 * k + 1))
        q = q + tq
    chi = x - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x) -> np.ndarray | float:
    """J0 for nonnegative real arguments (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    a = np.abs(np.atleast_1d(arr))
    out = np.empty_like(a)
    small = a < _SERIES_CUT
    if small.any():
        out[small] = _j0_series(a[small])
    if (~small).any():
        out[~small] = _j0_asymptotic(a[~small])
    return float(out[0]) if scalar else out.reshape(arr.shape)


@dataclass(frozen=True)
class Kernel:
    """Stationary unit-variance covariance kernel."""

    kind: str
    radial: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def eval_dist(self, d) -> np.ndarray | float:
        arr = np.asarray(d, dtype=float)
        scalar = arr.ndim == 0
        out = np.asarray(self.radial(np.atleast_1d(arr)), dtype=float)
        return float(out[0]) if scalar else out.reshape(arr.shape)

    def __call__(self, x, y) -> float:
        d = math.hypot(x[0] - y[0], x[1] - y[1])
        return float(self.eval_dist(d))

    def descriptor(self) -> dict:
        return {"kind": self.kind, **self.params}


def kernel_eval(kernel: Kernel, x, y) -> float:
    """K(x, y) for lattice vertices."""
    return kernel(x, y)


def iid_kernel() -> Kernel:
    return Kernel("iid", lambda d: (d == 0).astype(float))


def j0_kernel() -> Kernel:
    return Kernel("j0", lambda d: np.where(d == 0, 1.0, bessel_j0(d)))


def power_decay_kernel(c: float = 1.0, D: float = 25.0) -> Kernel:
    """(1 + d^2)^(-D/2): positive definite, |K(d)| <= min(1, c d^-D)."""
    if D <= 0:
        raise ValueError("decay exponent must be positive")

    def radial(d):
        return (1.0 + d * d) ** (-D / 2.0)

    return Kernel("power_decay", radial, {"c": c, "D": D})


def tail_sup(kernel: Kernel, d: float) -> float:
    """Upper bound for sup_{|x-y| >= d} |K(x,y)| (the truncation level delta_K)."""
    if d <= 0:
        return 1.0
    if kernel.kind == "iid":
        return 0.0 if d >= 1 else 1.0
    if kernel.kind == "power_decay":
        return float(kernel.eval_dist(d))
    if kernel.kind == "j0":
        # |J0| is bounded by its monotone envelope sqrt(2/(pi x)) for x >= 1
        return 1.0 if d < 1 else math.sqrt(2.0 / (math.pi * d))
    if kernel.kind == "mixture":
        base = kernel_from_descriptor(kernel.params["base"])
        return kernel.params["u"] ** 2 * tail_sup(base, d)
    # generic fallback: scan a dense grid of the tail out to where the
    # envelope of the base oscillation has clearly decayed
    ds = np.linspace(d, d + 200.0, 4001)
    return float(np.max(np.abs(kernel.eval_dist(ds))))


def bump_chi(width: float = 0.3) -> Callable[[float], float]:
    """Smooth bump s -> exp(-1/(1 - ((s-1)/w)^2)) supported on [1-w, 1+w]."""
    if not 0 < width < 1:
        raise ValueError("bump width must lie in (0, 1)")

    def chi(s: float) -> float:
        t = (s - 1.0) / width
        if abs(t) >= 1.0:
            return 0.0
        return math.exp(-1.0 / (1.0 - t * t))

    return chi


def smoothed_wave_kernel(width: float = 0.3,
                         chi: Optional[Callable[[float], float]] = None,
                         rtol: float = 1e-10) -> Kernel:
    """Radial Hankel transform of chi(s^2): K(rho) ∝ ∫ chi(s^2) J0(rho s) s ds.

    Normalized so K(0) = 1.  chi defaults to a smooth bump around 1 of the
    given width; the support of chi(s^2) in s is [sqrt(1-w), sqrt(1+w)].
    """
    chi_fn = chi if chi is not None else bump_chi(width)
    s_lo = math.sqrt(max(0.0, 1.0 - width))
    s_hi = math.sqrt(1.0 + width)

    norm, err = _quad(lambda s: chi_fn(s * s) * s, s_lo, s_hi,
                      epsabs=0.0, epsrel=rtol, limit=200)
    if norm <= 0 or not math.isfinite(norm):
        raise ValueError("chi integrates to a nonpositive mass")
    if err > 1e-6 * norm:
        raise ArithmeticError(f"quadrature did not converge: mass err {err}")

    cache: dict[float, float] = {}

    def k_of(rho: float) -> float:
        if rho == 0.0:
            return 1.0
        got = cache.get(rho)
        if got is not None:
            return got
        val, e = _quad(lambda s: chi_fn(s * s) * float(bessel_j0(rho * s)) * s,
                       s_lo, s_hi, epsabs=1e-13, epsrel=rtol, limit=400)
        if e > 1e-7:
            raise ArithmeticError(
                f"quadrature did not converge at distance {rho}: err {e}")
        out = val / norm
        cache[rho] = out
        return out

    def radial(d):
        return np.array([k_of(float(x)) for x in d])

    return Kernel("smoothed_wave", radial, {"width": width})


def interpolate_kernel(kernel: Kernel, u: float) -> Kernel:
    """Kernel of u*f + sqrt(1-u^2)*f0 with f0 i.i.d.: off-diagonals times u^2."""
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    if u == 1.0:
        return kernel
    base = kernel.radial

    def radial(d):
        return np.where(d == 0, 1.0, (u * u) * np.asarray(base(d), dtype=float))

    return Kernel("mixture", radial, {"u": u, "base": kernel.descriptor()})


def kernel_from_descriptor(desc: dict) -> Kernel:
    kind = desc.get("kind")
    if kind == "iid":
        return iid_kernel()
    if kind == "j0":
        return j0_kernel()
    if kind == "power_decay":
        return power_decay_kernel(desc.get("c", 1.0), desc.get("D", 25.0))
    if kind == "smoothed_wave":
        return smoothed_wave_kernel(desc.get("width", 0.3))
    raise ValueError(f"unknown kernel kind {kind!r}")
