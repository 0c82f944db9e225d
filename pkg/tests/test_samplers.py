"""Sampler-level distributional checks and descriptor plumbing."""

import math

import numpy as np
import pytest

from rswlab.ising import IsingModel
from rswlab.kernels import j0_kernel
from rswlab.lattice import Box, GridGeometry, UNION_JACK
from rswlab.samplers import (
    BernoulliSampler,
    CoarseSampler,
    GaussianSampler,
    IsingSampler,
    coarse_mixture_sample,
    sample_bernoulli,
    sampler_from_descriptor,
)


def test_bernoulli_endpoints():
    box = Box(3)
    all_pos = sample_bernoulli(UNION_JACK, box, 1.0, seed=1)
    assert (all_pos.signs == 1).all()
    all_neg = sample_bernoulli(UNION_JACK, box, 0.0, seed=1)
    assert (all_neg.signs == -1).all()


def test_bernoulli_frequency():
    box = Box(4)
    reps = 4000
    total = 0
    cells = box.size()
    for rep in range(reps):
        cfg = sample_bernoulli(UNION_JACK, box, 0.3, seed=9, replica=rep)
        total += int((cfg.signs == 1).sum())
    freq = total / (reps * cells)
    assert abs(freq - 0.3) < 4 * math.sqrt(0.3 * 0.7 / (reps * cells))


def test_coarse_endpoints():
    box = Box(3)
    iid = coarse_mixture_sample(UNION_JACK, box, n_meso=2, u=0.0, seed=3)
    assert len(np.unique(iid.signs)) == 2
    const = coarse_mixture_sample(UNION_JACK, box, n_meso=box.size(), u=1.0, seed=3)
    # n_meso covering the whole box: one block, one sign
    assert len(np.unique(const.signs)) == 1
    blocky = coarse_mixture_sample(UNION_JACK, box, n_meso=7, u=1.0, seed=4)
    assert len(np.unique(blocky.signs)) == 1  # box side is 7: single block


def test_coarse_blocks_are_constant_at_u1():
    g = GridGeometry(UNION_JACK, 0, 0, 8, 8)
    signs = CoarseSampler(1.0, 4).sample_signs(g, 5, 0)
    for bi in range(2):
        for bj in range(2):
            block = signs[4 * bi:4 * bi + 4, 4 * bj:4 * bj + 4]
            assert len(np.unique(block)) == 1


def test_coarse_u_interpolates():
    g = GridGeometry(UNION_JACK, 0, 0, 40, 40)
    s = CoarseSampler(0.9, 4)
    signs = s.sample_signs(g, 6, 0)
    # strong block alignment but not perfect at u = 0.9
    agree = 0
    cells = 0
    for bi in range(10):
        for bj in range(10):
            block = signs[4 * bi:4 * bi + 4, 4 * bj:4 * bj + 4]
            maj = 1 if (block == 1).sum() >= 8 else -1
            agree += int((block == maj).sum())
            cells += block.size
    assert 0.85 < agree / cells < 1.0


def test_negation_symmetry_across_models():
    g = GridGeometry(UNION_JACK, -3, -3, 7, 7)
    samplers = [BernoulliSampler(0.5), GaussianSampler(j0_kernel()),
                IsingSampler(IsingModel(beta=-0.01, beta0=0.01, depth=6)),
                CoarseSampler(0.5, 3)]
    for s in samplers:
        a = s.sample_signs(g, 11, 2)
        b = s.sample_signs(g, 11, 2, negate=True)
        assert (a == -b).all(), s.descriptor()
        assert s.symmetric


def test_descriptor_roundtrip():
    descs = [
        {"model": "bernoulli", "p": 0.5},
        {"model": "gaussian", "kernel": {"kind": "j0"}, "u": 0.3},
        {"model": "ising", "beta": -0.01, "beta0": 0.01, "depth": 8},
        {"model": "coarse", "u": 0.9, "n_meso": 4},
    ]
    for d in descs:
        s = sampler_from_descriptor(d)
        assert s.descriptor()["model"] == d["model"]
    with pytest.raises(ValueError):
        sampler_from_descriptor({"model": "voter"})


def test_ising_sampler_range():
    s = IsingSampler(IsingModel(beta=-0.01, beta0=0.01, depth=6))
    assert s.range_ell == 12
    g = GridGeometry(UNION_JACK, 0, 0, 5, 5)
    a = s.sample_signs(g, 3, 0)
    b = s.sample_signs(g, 3, 0)
    assert (a == b).all()  # deterministic


def test_ising_finite_range_decorrelation():
    """Spins at graph distance beyond twice the depth are uncorrelated."""
    model = IsingModel(beta=-0.01, beta0=0.01, depth=2)
    from rswlab.ising import _Backward
    reps = 12000
    prods = np.empty(reps)
    for rep in range(reps):
        bw = _Backward(model, 31, rep)
        a, _ = bw.resolve((0, 0), 0.0, 1)
        b, _ = bw.resolve((6, 0), 0.0, 1)  # distance 6 > 2k = 4
        prods[rep] = a * b
    se = prods.std(ddof=1) / math.sqrt(reps)
    assert abs(prods.mean()) <= 3 * se
