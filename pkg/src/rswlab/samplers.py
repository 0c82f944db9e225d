"""Model samplers behind a common interface.

Every sampler turns (grid, seed, replica) into a +-1 sign array,
deterministically; replicas are independent Philox/hash streams, so batches
can be produced in any order or in parallel without changing the output.

Families:

* ``BernoulliSampler(p)``         -- i.i.d. signs, P[+1] = p;
* ``GaussianSampler(kernel, u)``  -- sign of a centered Gaussian field with
                                     the kernel interpolated toward i.i.d.
                                     by u (u = 1: the kernel itself);
* ``IsingSampler(model)``         -- depth-truncated backward heat-bath
                                     sampling of the Ising measure;
* ``CoarseSampler(u, n_meso)``    -- per-vertex Bernoulli(u) mixture of
                                     i.i.d. signs and block-constant signs
                                     on an n_meso x n_meso partition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .gaussian import GaussianModel, gaussian_sample, signs_from_values
from .ising import IsingModel
from .kernels import Kernel, interpolate_kernel, iid_kernel
from .lattice import Box, GridGeometry, LatticeSpec, UNION_JACK
from .rng import replica_rng
from .topology import Configuration


class Sampler(Protocol):
    def descriptor(self) -> dict: ...
    def sample_signs(self, grid: GridGeometry, seed: int,
                     replica: int, negate: bool = False) -> np.ndarray: ...
    def sample_batch(self, grid: GridGeometry, seed: int, rep0: int,
                     count: int, negate: bool = False) -> np.ndarray: ...
    @property
    def symmetric(self) -> bool: ...
    @property
    def range_ell(self) -> Optional[int]: ...


class _BatchByLoop:
    def sample_batch(self, grid, seed, rep0, count, negate=False):
        out = np.empty((count, grid.nx, grid.ny), dtype=np.int8)
        for i in range(count):
            out[i] = self.sample_signs(grid, seed, rep0 + i, negate=negate)
        return out


@dataclass
class BernoulliSampler(_BatchByLoop):
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    def descriptor(self):
        return {"model": "bernoulli", "p": self.p}

    @property
    def symmetric(self):
        return self.p == 0.5

    @property
    def range_ell(self):
        return 1

    def sample_signs(self, grid, seed, replica, negate=False):
        rng = replica_rng(seed, replica, 0xB0)
        u = rng.random((grid.nx, grid.ny))
        signs = np.where(u < self.p, 1, -1).astype(np.int8)
        return -signs if negate else signs


@dataclass
class GaussianSampler(_BatchByLoop):
    """Sign field of a Gaussian model; u interpolates the kernel toward i.i.d."""

    kernel: Kernel
    u: float = 1.0
    spec: LatticeSpec = UNION_JACK
    _models: dict = None

    def __post_init__(self):
        if self._models is None:
            object.__setattr__(self, "_models", {})

    def descriptor(self):
        return {"model": "gaussian", "kernel": self.kernel.descriptor(), "u": self.u}

    @property
    def symmetric(self):
        return True

    @property
    def range_ell(self):
        return None

    def effective_kernel(self) -> Kernel:
        if self.u == 0.0:
            return iid_kernel()
        return interpolate_kernel(self.kernel, self.u)

    def model_for(self, grid: GridGeometry) -> GaussianModel:
        half = max(abs(grid.x0), abs(grid.y0),
                   abs(grid.x0 + grid.nx - 1), abs(grid.y0 + grid.ny - 1))
        key = half
        model = self._models.get(key)
        if model is None:
            model = GaussianModel.build(self.effective_kernel(), Box(half), self.spec)
            self._models[key] = model
        return model

    def sample_signs(self, grid, seed, replica, negate=False):
        model = self.model_for(grid)
        vals = model.sample_values(seed, replica).reshape(
            (model.grid.nx, model.grid.ny))
        if negate:
            vals = -vals
        ox, oy = grid.x0 - model.grid.x0, grid.y0 - model.grid.y0
        return signs_from_values(vals[ox:ox + grid.nx, oy:oy + grid.ny])

    def sample_config(self, seed: int, replica: int = 0,
                      box: Optional[Box] = None) -> Configuration:
        model = (GaussianModel.build(self.effective_kernel(), box, self.spec)
                 if box is not None else None)
        if model is None:
            raise ValueError("pass the box to sample a full configuration")
        return gaussian_sample(model, seed, replica)


@dataclass
class IsingSampler(_BatchByLoop):
    model: IsingModel

    def descriptor(self):
        return self.model.descriptor()

    @property
    def symmetric(self):
        return True  # zero field: the measure is invariant under global flip

    @property
    def range_ell(self):
        return 2 * self.model.depth

    def sample_signs(self, grid, seed, replica, negate=False):
        from .ising import _Backward
        bw = _Backward(self.model, seed, replica)
        signs = np.empty((grid.nx, grid.ny), dtype=np.int8)
        for ix in range(grid.nx):
            for iy in range(grid.ny):
                s, _ = bw.resolve(grid.vertex(ix, iy), 0.0, 1)
                signs[ix, iy] = s
        return (-signs).astype(np.int8) if negate else signs


@dataclass
class CoarseSampler(_BatchByLoop):
    """Remark-style coarse-grained mixture of block-constant and i.i.d. signs."""

    u: float
    n_meso: int

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError("u must lie in [0, 1]")
        if self.n_meso < 1:
            raise ValueError("n_meso must be >= 1")

    def descriptor(self):
        return {"model": "coarse", "u": self.u, "n_meso": self.n_meso}

    @property
    def symmetric(self):
        return True

    @property
    def range_ell(self):
        return 2 * self.n_meso

    def sample_signs(self, grid, seed, replica, negate=False):
        rng = replica_rng(seed, replica, 0xC0)
        # blocks are anchored at the grid corner, so a box whose side equals
        # n_meso is a single block
        xs = np.arange(grid.nx)[:, None]
        ys = np.arange(grid.ny)[None, :]
        bi = np.floor_divide(xs, self.n_meso)
        bj = np.floor_divide(ys, self.n_meso)
        blocks = rng.integers(0, 2, size=(int(bi.max()) + 1,
                                          int(bj.max()) + 1)) * 2 - 1
        f1 = blocks[bi, bj]
        f0 = rng.integers(0, 2, size=(grid.nx, grid.ny)) * 2 - 1
        eps = rng.random((grid.nx, grid.ny)) < self.u
        signs = np.where(eps, f1, f0).astype(np.int8)
        return -signs if negate else signs


# ---------------------------------------------------------------------------
# box-level entry points
# ---------------------------------------------------------------------------

def sample_bernoulli(spec: LatticeSpec, box: Box, p: float, seed: int,
                     replica: int = 0) -> Configuration:
    """I.i.d. signs with P[+1] = p on a centered box."""
    n = box.half_side
    grid = GridGeometry(spec, -n, -n, 2 * n + 1, 2 * n + 1)
    signs = BernoulliSampler(p).sample_signs(grid, seed, replica)
    return Configuration(grid=grid, signs=signs, box=box,
                         meta={"model": "bernoulli", "p": p, "seed": seed,
                               "replica": replica})


def coarse_mixture_sample(spec: LatticeSpec, box: Box, n_meso: int, u: float,
                          seed: int, replica: int = 0) -> Configuration:
    n = box.half_side
    grid = GridGeometry(spec, -n, -n, 2 * n + 1, 2 * n + 1)
    signs = CoarseSampler(u, n_meso).sample_signs(grid, seed, replica)
    return Configuration(grid=grid, signs=signs, box=box,
                         meta={"model": "coarse", "u": u, "n_meso": n_meso,
                               "seed": seed, "replica": replica})


def sampler_from_descriptor(desc: dict) -> Sampler:
    from .kernels import kernel_from_descriptor
    kind = desc.get("model")
    if kind == "bernoulli":
        return BernoulliSampler(float(desc["p"]))
    if kind == "gaussian":
        kernel = kernel_from_descriptor(desc.get("kernel", {"kind": "j0"}))
        return GaussianSampler(kernel, float(desc.get("u", 1.0)))
    if kind == "ising":
        model = IsingModel(beta=float(desc["beta"]), beta0=float(desc["beta0"]),
                           depth=int(desc.get("depth", 8)),
                           degree_max=int(desc.get("N", 8)))
        return IsingSampler(model)
    if kind == "coarse":
        return CoarseSampler(float(desc["u"]), int(desc["n_meso"]))
    raise ValueError(f"unknown model {kind!r}")
