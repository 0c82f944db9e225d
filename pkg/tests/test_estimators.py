"""Estimators: exact-oracle agreement, endpoint trivia, reproducibility,
coupling-based distances, and the inequality checkers."""

import math

import numpy as np
import pytest

from rswlab.estimators import (
    ExplorationRecipe,
    FamilyMember,
    QuadFamily,
    TruncatedGaussianSampler,
    check_long_rect_to_annulus,
    check_rect_to_l,
    check_square_to_long_rect,
    estimate_beta,
    estimate_m,
    estimate_pi,
    estimate_psi,
    estimate_theta,
    quad_above_crossing,
)
from rswlab.ising import IsingModel
from rswlab.kernels import j0_kernel, power_decay_kernel
from rswlab.samplers import (
    BernoulliSampler,
    GaussianSampler,
    IsingSampler,
)
from rswlab.topology import (
    Configuration,
    annulus_slit_quad,
    is_glued,
    leftmost_crossing,
    rect_quad,
)

import oracles


def test_pi_endpoints():
    q = rect_quad(8, 8)
    assert estimate_pi(BernoulliSampler(1.0), q, 50, 1).value == 1.0
    assert estimate_pi(BernoulliSampler(0.0), q, 50, 1).value == 0.0


def test_pi_matches_exact_enumeration():
    """MC frequency against the exactly enumerated probability on R_{4,6}
    for p in {0.3, 0.5, 0.7}."""
    q = rect_quad(4, 6)
    qs = oracles.QuadSets(q)
    cells = sorted(q.interior)
    n = len(cells)
    for p in (0.3, 0.5, 0.7):
        exact = 0.0
        for bits in range(1 << n):
            pos = {cells[i] for i in range(n) if (bits >> i) & 1}
            if oracles.crossing_exists(qs, pos):
                exact += p ** len(pos) * (1 - p) ** (n - len(pos))
        est = estimate_pi(BernoulliSampler(p), q, 4000, seed=2)
        assert abs(est.value - exact) < 3 * max(est.stderr, 1e-6), (p, exact, est.value)


def test_pi_reproducible_bit_exact():
    q = rect_quad(8, 10)
    a = estimate_pi(BernoulliSampler(0.5), q, 500, seed=77)
    b = estimate_pi(BernoulliSampler(0.5), q, 500, seed=77)
    assert a.value == b.value and a.stderr == b.stderr
    c = estimate_pi(BernoulliSampler(0.5), q, 500, seed=78)
    assert c.value != a.value or c.metadata != a.metadata


def test_sign_symmetry_of_crossing_frequency():
    """Negating the sign draws negates the configuration; for symmetric
    models the +1 and -1 crossing frequencies agree within error."""
    q = rect_quad(8, 12)
    g = q.grid
    s = BernoulliSampler(0.5)
    a = s.sample_signs(g, 5, 3)
    b = s.sample_signs(g, 5, 3, negate=True)
    assert (a == -b).all()
    from rswlab.topology import crossing_indicator_batch
    reps = 3000
    plus = minus = 0
    for rep in range(0, reps, 256):
        k = min(256, reps - rep)
        batch = s.sample_batch(g, 5, rep, k)
        plus += int(crossing_indicator_batch(q, batch == 1).sum())
        minus += int(crossing_indicator_batch(q, batch == -1).sum())
    se = math.sqrt(0.5 / reps)
    assert abs(plus - minus) / reps < 4 * se


def test_m_estimate():
    assert estimate_m(BernoulliSampler(1.0), 8, 50, 1).value == 1.0
    assert estimate_m(BernoulliSampler(0.0), 8, 50, 1).value == 0.0
    est = estimate_m(BernoulliSampler(0.5), 8, 3000, seed=4)
    assert est.value >= 0.5 - 3 * est.stderr
    with pytest.raises(ValueError):
        estimate_m(BernoulliSampler(0.5), 12, 10, 1)


def test_psi_endpoints_and_regression():
    assert estimate_psi(BernoulliSampler(1.0), 4, 20, 1).value == 1.0
    assert estimate_psi(BernoulliSampler(0.0), 4, 20, 1).value == 0.0
    # pinned regression value: strictly positive at a supercritical level
    est = estimate_psi(BernoulliSampler(0.62), 4, 400, seed=10)
    assert est.value > 0
    est2 = estimate_psi(BernoulliSampler(0.62), 4, 400, seed=10)
    assert est2.value == est.value


def test_beta_endpoints_and_trend():
    fam = QuadFamily.annulus_family([2, 4, 8], 16, 32)
    fam.validate()
    assert estimate_beta(BernoulliSampler(1.0), fam, 40, 1).value == 0.0
    assert estimate_beta(BernoulliSampler(0.0), fam, 40, 1).value == 1.0
    est = estimate_beta(BernoulliSampler(0.5), fam, 600, seed=3)
    members = {m["metadata"]["member"]: m for m in est.metadata["members"]}
    vals = [members[f"A[{r},16]@(0, 0)"]["value"] for r in (2, 4, 8)]
    errs = [members[f"A[{r},16]@(0, 0)"]["stderr"] for r in (2, 4, 8)]
    # non-gluing decreases as R/r grows (i.e. increases with r), within noise
    assert vals[0] <= vals[1] + 3 * (errs[0] + errs[1])
    assert vals[1] <= vals[2] + 3 * (errs[1] + errs[2])


def test_beta_family_validation():
    bad = QuadFamily(members=[FamilyMember(annulus_slit_quad((0, 0), 2, 6),
                                           2, 6, 4)])
    with pytest.raises(ValueError):
        bad.validate()
    with pytest.raises(ValueError):
        estimate_beta(BernoulliSampler(0.5), QuadFamily(), 10, 1)


def test_exploration_recipe_runs():
    fam = QuadFamily(recipes=[ExplorationRecipe(8, 8)])
    est = estimate_beta(BernoulliSampler(0.5), fam, 200, seed=6)
    rec = est.metadata["members"][0]
    assert rec["metadata"]["effective"] > 0
    assert 0.0 <= est.value <= 1.0


def test_quad_above_crossing_geometry():
    q = rect_quad(8, 8)
    g = q.grid
    rng = np.random.default_rng(8)
    built = 0
    while built < 20:
        signs = (rng.integers(0, 2, (g.nx, g.ny)) * 2 - 1).astype(np.int8)
        cfg = Configuration(grid=g, signs=signs)
        low = leftmost_crossing(cfg, q)
        if low is None:
            continue
        above = quad_above_crossing(q, low)
        built += 1
        assert set(above.gamma1) <= set(low)          # lower arc on the crossing
        assert set(above.circuit) <= set(q.circuit) | set(q.interior)
        # gluing of the new quad is decidable on the same configuration
        is_glued(cfg, above)


def test_theta_identity_coupling():
    s = BernoulliSampler(0.5)
    est = estimate_theta(s, BernoulliSampler(0.5), 4, 100, seed=1)
    assert est.value == 0.0


def test_theta_requires_recipe():
    with pytest.raises(ValueError):
        estimate_theta(BernoulliSampler(0.5), BernoulliSampler(0.4), 4, 10, 1)
    with pytest.raises(ValueError):
        estimate_theta(GaussianSampler(j0_kernel()), BernoulliSampler(0.5), 4, 10, 1)


def test_theta_ising_depth_pair():
    m12 = IsingModel(beta=-0.01, beta0=0.01, depth=12)
    m4 = IsingModel(beta=-0.01, beta0=0.01, depth=4)
    n = 2
    est = estimate_theta(IsingSampler(m12), IsingSampler(m4), n, 400, seed=9)
    size = (2 * n + 1) ** 2
    bound = size * (m12.delta * 8) ** 4
    assert est.value <= min(1.0, bound) + 3 * est.stderr
    assert est.metadata["per_vertex_disagreement"] <= (m12.delta * 8) ** 4 * 1.5


def test_theta_gaussian_truncation():
    kernel = power_decay_kernel(D=25.0)
    sampler = GaussianSampler(kernel)
    trunc = TruncatedGaussianSampler(kernel, 3.0)
    est = estimate_theta(sampler, trunc, 2, 500, seed=12)
    from rswlab.bounds import decorrelation_bound
    bound = decorrelation_bound("gaussian", n=2,
                                delta_K=est.metadata["delta_K"])["bound"]
    assert bound < 1.0
    assert est.value <= bound


def test_check_rect_to_l_bernoulli():
    rep = check_rect_to_l(BernoulliSampler(0.5), l=16, L=32, lp=16, Lp=24,
                          reps=800, seed=5, beta_reps=200)
    assert not rep.violated
    rep1 = check_rect_to_l(BernoulliSampler(1.0), l=16, L=32, lp=16, Lp=24,
                           reps=50, seed=5, beta_reps=20)
    assert rep1.lhs == 1.0 and not rep1.violated
    rep0 = check_rect_to_l(BernoulliSampler(0.0), l=16, L=32, lp=16, Lp=24,
                           reps=50, seed=5, beta_reps=20)
    assert rep0.lhs == 0.0 and rep0.rhs <= 0.0 and not rep0.violated


def test_check_rect_to_l_preconditions():
    with pytest.raises(ValueError):
        check_rect_to_l(BernoulliSampler(0.5), l=16, L=24, lp=16, Lp=32,
                        reps=10, seed=1)  # Lp > L
    with pytest.raises(ValueError):
        check_rect_to_l(BernoulliSampler(0.5), l=16, L=32, lp=16, Lp=24,
                        reps=10, seed=1, ell=2)  # 2*ell >= delta


def test_chain_checkers_run_clean():
    s = BernoulliSampler(0.5)
    rep = check_square_to_long_rect(s, 8, rho=1.0, reps=600, seed=7, beta_reps=100)
    assert not rep.violated
    rep = check_long_rect_to_annulus(s, 8, reps=200, seed=7, beta_reps=60)
    assert not rep.violated
