"""Monte Carlo estimators for crossing probabilities and coupling distances.

All estimates are frequencies of indicator events over independent replicas,
bit-reproducible from (seed, reps, descriptor): replica i always uses the
stream keyed (seed, i), and aggregation is a fixed-order sum of per-batch
counts, so neither batch size nor worker scheduling affects the result.
RSWLAB_THREADS caps the number of worker threads used for batched
replica groups (the dense flood kernels release the GIL inside numpy).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .gaussian import (
    GaussianMaximalCoupling,
    cholesky_with_jitter,
    covariance_on_box,
    shifted_truncation,
)
from .ising import IsingModel, cftp_spins_at_depths
from .kernels import Kernel, tail_sup
from .lattice import Annulus, Box, GridGeometry, UNION_JACK
from .rng import replica_rng
from .samplers import GaussianSampler, IsingSampler, Sampler
from .topology import (
    Configuration,
    Quad,
    annulus_slit_quad,
    crossing_indicator_batch,
    leftmost_crossing_in_mask,
    quad_in_class,
    rect_quad,
    surrounds_annulus,
)

_BATCH = 256


@dataclass
class MCEstimate:
    """A Bernoulli-indicator frequency with its binomial standard error."""

    value: float
    stderr: float
    n_samples: int
    seed: int
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, hits: int, reps: int, seed: int, **meta) -> "MCEstimate":
        v = hits / reps
        return cls(value=v, stderr=math.sqrt(v * (1 - v) / reps),
                   n_samples=reps, seed=seed, metadata=meta)

    def record(self) -> dict:
        return {"value": self.value, "stderr": self.stderr,
                "n_samples": self.n_samples, "seed": self.seed,
                "metadata": self.metadata}


def _thread_count() -> int:
    raw = os.environ.get("RSWLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _batched_count(reps: int, count_batch: Callable[[int, int], int]) -> int:
    """Sum of count_batch(rep0, k) over fixed batches, optionally threaded."""
    chunks = [(r0, min(_BATCH, reps - r0)) for r0 in range(0, reps, _BATCH)]
    workers = _thread_count()
    if workers == 1 or len(chunks) == 1:
        return sum(count_batch(r0, k) for r0, k in chunks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(count_batch, r0, k) for r0, k in chunks]
        return sum(f.result() for f in futures)  # fixed submission order


# ---------------------------------------------------------------------------
# crossing probabilities
# ---------------------------------------------------------------------------

def estimate_pi(sampler: Sampler, quad: Quad, reps: int, seed: int) -> MCEstimate:
    """Frequency of a positive crossing of the quad."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    g = quad.grid

    def count(rep0: int, k: int) -> int:
        signs = sampler.sample_batch(g, seed, rep0, k)
        return int(crossing_indicator_batch(quad, signs == 1).sum())

    hits = _batched_count(reps, count)
    return MCEstimate.from_counts(hits, reps, seed,
                                  descriptor=sampler.descriptor(),
                                  quad=quad.name)


def estimate_m(sampler: Sampler, n: int, reps: int, seed: int) -> MCEstimate:
    """min(pi of the 3n/4 x n rectangle, pi of the n/2 x (n/2+4) almost-square)."""
    if n < 8 or n % 8:
        raise ValueError("n must be a positive multiple of 8")
    wide = estimate_pi(sampler, rect_quad(3 * n // 4, n), reps, seed)
    square = estimate_pi(sampler, rect_quad(n // 2, n // 2 + 4), reps, seed)
    low = wide if wide.value <= square.value else square
    return MCEstimate(value=low.value, stderr=low.stderr, n_samples=reps,
                      seed=seed, metadata={
                          "descriptor": sampler.descriptor(), "n": n,
                          "pi_wide": wide.record(), "pi_square": square.record()})


def estimate_psi(sampler: Sampler, n: int, reps: int, seed: int) -> MCEstimate:
    """Frequency of a positive circuit surrounding the annulus A(n, 2n)."""
    ann = Annulus((0, 0), n, 2 * n)
    grid = GridGeometry(UNION_JACK, -2 * n, -2 * n, 4 * n + 1, 4 * n + 1)
    hits = 0
    for rep in range(reps):
        signs = sampler.sample_signs(grid, seed, rep)
        cfg = Configuration(grid=grid, signs=signs, box=Box(2 * n))
        hits += surrounds_annulus(cfg, ann, 1)
    return MCEstimate.from_counts(hits, reps, seed,
                                  descriptor=sampler.descriptor(), n=n)


# ---------------------------------------------------------------------------
# non-gluing frequency over a quad family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyMember:
    """Deterministic member of a class family."""

    quad: Quad
    r: int
    R: int
    L: int


@dataclass(frozen=True)
class ExplorationRecipe:
    """The quad above the lowest crossing of a rectangle, discovered per sample."""

    a: int
    b: int


@dataclass
class QuadFamily:
    members: Sequence[FamilyMember] = ()
    recipes: Sequence[ExplorationRecipe] = ()

    def validate(self):
        for m in self.members:
            got = quad_in_class(m.quad, m.r, m.R, m.L)
            if not got.member:
                raise ValueError(f"{m.quad!r} fails class membership ({m.r},{m.R},{m.L})")

    @classmethod
    def annulus_family(cls, rs: Sequence[int], R: int, L: int,
                       recipes: Sequence[ExplorationRecipe] = ()) -> "QuadFamily":
        members = [FamilyMember(annulus_slit_quad((0, 0), r, R), r, R, L)
                   for r in rs]
        return cls(members=members, recipes=recipes)


def quad_above_crossing(rect: Quad, crossing) -> Quad:
    """The explored quad sitting above a crossing of a rectangle quad.

    Arcs: the upper stretches of the rectangle's left and right sides, the
    crossing itself as the lower arc, and the top of the rectangle.  The
    junctions are repaired to strong simplicity; gluing of the result is a
    positive vertical crossing from just above the discovered interface to
    the top.
    """
    from .topology import _assemble_circuit  # shared circuit repair
    left = list(rect.gamma)          # top -> bottom
    right = list(rect.gamma_prime)   # bottom -> top
    top = list(rect.gamma2)          # right -> left
    y_att_l = crossing[0][1]
    y_att_r = crossing[-1][1]
    left_upper = [v for v in left if v[1] >= y_att_l]
    right_upper = [v for v in right if v[1] >= y_att_r]
    return _assemble_circuit(rect.spec, left_upper, list(crossing),
                             right_upper, top)


def estimate_beta(sampler: Sampler, family: QuadFamily, reps: int,
                  seed: int) -> MCEstimate:
    """Maximum non-gluing frequency over the family (lower-bound proxy).

    Deterministic members report the marginal frequency of not being glued;
    exploration recipes rediscover their quad per sample from the lowest
    crossing.  The family maximum stands in for the supremum over explored
    quads, which is not computable.
    """
    if not family.members and not family.recipes:
        raise ValueError("family is empty")
    per_member = []
    for m in family.members:
        dual = m.quad.dual()
        g = m.quad.grid

        def count(rep0: int, k: int, _dual=dual, _g=g) -> int:
            signs = sampler.sample_batch(_g, seed, rep0, k)
            glued = crossing_indicator_batch(_dual, signs == 1)
            return int(k - glued.sum())

        misses = _batched_count(reps, count)
        per_member.append(MCEstimate.from_counts(
            misses, reps, seed, member=m.quad.name, r=m.r, R=m.R, L=m.L))

    for rec in family.recipes:
        base = rect_quad(rec.a, rec.b)
        g = base.grid
        misses = 0
        effective = 0
        skipped = 0
        for rep in range(reps):
            signs = sampler.sample_signs(g, seed, rep)
            low = leftmost_crossing_in_mask(base, signs == 1)
            if low is None:
                continue
            effective += 1
            try:
                above = quad_above_crossing(base, low)
            except ValueError:
                skipped += 1
                continue
            gx, gy = above.grid.x0 - g.x0, above.grid.y0 - g.y0
            pos = (signs == 1)[gx:gx + above.grid.nx, gy:gy + above.grid.ny]
            glued = bool(crossing_indicator_batch(above.dual(), pos[None])[0])
            misses += not glued
        denom = max(effective - skipped, 1)
        per_member.append(MCEstimate.from_counts(
            misses, denom, seed, member=f"explored[{rec.a}x{rec.b}]",
            effective=effective, skipped=skipped))

    best = max(per_member, key=lambda e: e.value)
    return MCEstimate(value=best.value, stderr=best.stderr, n_samples=reps,
                      seed=seed, metadata={
                          "descriptor": sampler.descriptor(),
                          "members": [e.record() for e in per_member],
                          "argmax": best.metadata.get("member")})


# ---------------------------------------------------------------------------
# coupling-based total-variation samples
# ---------------------------------------------------------------------------

@dataclass
class TruncatedGaussianSampler:
    """Gaussian sign field with covariance truncated beyond a distance.

    Carries the coupling recipe: Y has covariance T_{delta,eps}(A) with
    delta = sup of |K| beyond the distance and eps = (n delta)^(3/5).
    """

    base: Kernel
    distance: float

    def descriptor(self):
        return {"model": "gaussian-truncated", "kernel": self.base.descriptor(),
                "distance": self.distance}


def estimate_theta(sampler_a, sampler_b, box_n: int, reps: int,
                   seed: int) -> MCEstimate:
    """Sampled upper bound for the total-variation distance on Lambda_n.

    Requires a coupling recipe: identical descriptors (identity coupling),
    two Ising samplers differing only in depth (shared-mark coupling), or a
    Gaussian sampler against its truncated version (additive-noise plus
    maximal coupling).  Anything else raises.
    """
    if sampler_a.descriptor() == sampler_b.descriptor():
        return MCEstimate.from_counts(0, reps, seed,
                                      descriptor=sampler_a.descriptor(),
                                      coupling="identity")
    if isinstance(sampler_a, IsingSampler) and isinstance(sampler_b, IsingSampler):
        return _theta_ising_depths(sampler_a.model, sampler_b.model,
                                   box_n, reps, seed)
    if isinstance(sampler_a, GaussianSampler) and isinstance(
            sampler_b, TruncatedGaussianSampler):
        return _theta_gaussian_truncation(sampler_a, sampler_b, box_n, reps, seed)
    raise ValueError(
        "no coupling recipe for this model pair: total variation is not "
        "estimable from independent samples")


def _theta_ising_depths(model_a: IsingModel, model_b: IsingModel,
                        box_n: int, reps: int, seed: int) -> MCEstimate:
    if (model_a.beta, model_a.beta0, model_a.degree_max) != (
            model_b.beta, model_b.beta0, model_b.degree_max):
        raise ValueError("depth coupling needs identical (beta, beta0, N)")
    ka, kb = model_a.depth, model_b.depth
    verts = list(Box(box_n).vertices())
    diff_any = 0
    diff_vertices = 0
    for rep in range(reps):
        spins = cftp_spins_at_depths(model_a, verts, seed, rep, [ka, kb])
        d = sum(spins[ka][v] != spins[kb][v] for v in verts)
        diff_vertices += d
        diff_any += d > 0
    est = MCEstimate.from_counts(diff_any, reps, seed,
                                 coupling="ising-depth", k_a=ka, k_b=kb,
                                 box_n=box_n)
    est.metadata["per_vertex_disagreement"] = diff_vertices / (reps * len(verts))
    return est


def _theta_gaussian_truncation(sampler_a: GaussianSampler,
                               sampler_b: TruncatedGaussianSampler,
                               box_n: int, reps: int, seed: int) -> MCEstimate:
    kernel = sampler_a.effective_kernel()
    A, _ = covariance_on_box(kernel, Box(box_n))
    n = A.shape[0]
    delta = tail_sup(kernel, sampler_b.distance)
    if delta <= 0:
        delta = 1e-300  # finite range: truncation changes nothing
    epsilon = (n * delta) ** 0.6
    B = shifted_truncation(A, delta, epsilon)
    C = A + epsilon * np.eye(n)
    LA, _ = cholesky_with_jitter(A)
    coupling = GaussianMaximalCoupling(C, B)
    mismatches = 0
    for rep in range(reps):
        rng = replica_rng(seed, rep, 0x7E)
        x = LA @ rng.standard_normal(n)
        z = x + math.sqrt(epsilon) * rng.standard_normal(n)
        _, y = coupling.draw(rng, z=z)
        mismatches += bool(((x > 0) != (y > 0)).any())
    est = MCEstimate.from_counts(mismatches, reps, seed,
                                 coupling="gaussian-truncation",
                                 distance=sampler_b.distance, box_n=box_n)
    est.metadata.update({"delta_K": delta, "epsilon": epsilon, "dim": n})
    return est


# ---------------------------------------------------------------------------
# inequality checkers
# ---------------------------------------------------------------------------

@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    sigma: float
    violated: bool
    terms: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "sigma": self.sigma,
                "violated": self.violated, "terms": self.terms}


def _even_floor(x: float) -> int:
    return max(2, 2 * int(math.floor(x / 2.0)))


def _even_ceil(x: float) -> int:
    return max(2, 2 * int(math.ceil(x / 2.0)))


def _beta_family_for_scale(r_scale: int, R_scale: int, L: int,
                           recipe: Optional[ExplorationRecipe]) -> QuadFamily:
    """Family members near the requested class scale, when they exist.

    Slit-annulus members need r >= 2 and R >= r + 4 (thinner rings admit no
    vertical crossing at all and would report non-gluing identically 1).
    Members are class-checked at their own (r, R, L); the family is the
    documented proxy for the scale's supremum.  Below the slit threshold
    only the exploration recipe (if any) contributes, and an empty family
    means the caller proceeds with beta-hat = 0.
    """
    members = []
    r_eff = max(2, r_scale)
    if R_scale >= r_eff + 4:
        quad = annulus_slit_quad((0, 0), r_eff, R_scale)
        if quad_in_class(quad, r_eff, R_scale, L).member:
            members.append(FamilyMember(quad, r_eff, R_scale, L))
    recipes = [recipe] if recipe is not None else []
    return QuadFamily(members=members, recipes=recipes)


def check_rect_to_l(sampler: Sampler, l: int, L: int, lp: int, Lp: int,
                    reps: int, seed: int, ell: int = 0,
                    beta_reps: Optional[int] = None) -> InequalityReport:
    """pi(L-shape) >= pi(R) * pi(R') - 2 beta-hat at the (2 ell, delta) scale.

    R = [0,L]x[0,l] crossed horizontally, R' = [L-lp,L]x[0,Lp] crossed
    vertically, and the L-shaped quad joins the left of R to the top of R'.
    Requires Lp <= L and 2*ell < delta = min(l/4, (L-lp)/2).  Violations
    beyond 4 combined standard errors are flagged.
    """
    from .topology import l_quad
    if any(d % 2 for d in (l, L, lp, Lp)):
        raise ValueError("dimensions must be even")
    if Lp > L:
        raise ValueError("need L' <= L")
    delta = min(l / 4.0, (L - lp) / 2.0)
    if not 2 * ell < delta:
        raise ValueError(f"need 2*ell < delta = {delta}")

    lshape = l_quad(l, L, lp, Lp)
    pi_l = estimate_pi(sampler, lshape, reps, seed)
    pi_r = estimate_pi(sampler, rect_quad(L, l), reps, seed)
    # vertical crossing probability of R' via the dual quad
    rp = rect_quad(lp, Lp)
    g = rp.grid
    dual = rp.dual()

    def count(rep0: int, k: int) -> int:
        signs = sampler.sample_batch(g, seed, rep0, k)
        return int(crossing_indicator_batch(dual, signs == 1).sum())

    hits = _batched_count(reps, count)
    pi_rp = MCEstimate.from_counts(hits, reps, seed, quad=rp.name + "*")

    d_scale = int(delta)
    family = _beta_family_for_scale(max(1, 2 * ell), d_scale, L,
                                    ExplorationRecipe(_even_ceil(L / 2), l))
    b_reps = beta_reps if beta_reps is not None else max(200, reps // 8)
    beta_hat = estimate_beta(sampler, family, b_reps, seed)

    rhs = pi_r.value * pi_rp.value - 2 * beta_hat.value
    margin = pi_l.value - rhs
    sigma = math.sqrt(
        pi_l.stderr ** 2
        + (pi_rp.value * pi_r.stderr) ** 2
        + (pi_r.value * pi_rp.stderr) ** 2
        + (2 * beta_hat.stderr) ** 2)
    return InequalityReport(
        name="rect_to_l", lhs=pi_l.value, rhs=rhs, margin=margin, sigma=sigma,
        violated=margin < -4 * sigma,
        terms={"pi_L": pi_l.record(), "pi_R": pi_r.record(),
               "pi_Rp": pi_rp.record(), "beta_hat": beta_hat.record(),
               "delta": delta, "ell": ell})


def check_square_to_long_rect(sampler: Sampler, n: int, rho: float,
                              reps: int, seed: int, ell: int = 0,
                              beta_reps: Optional[int] = None) -> InequalityReport:
    """pi(R_{rho n, n}) >= (4^9/m^17)(m^2/4)^(24 rho) - 2304 rho^2 sqrt(beta/m)."""
    if rho < 0.75:
        raise ValueError("need rho >= 3/4")
    m_hat = estimate_m(sampler, n, reps, seed)
    lhs = estimate_pi(sampler, rect_quad(_even_floor(rho * n), n), reps, seed)
    family = _beta_family_for_scale(max(1, 2 * ell), max(2, n // 8),
                                    _even_ceil(2 * rho * n), None)
    b_reps = beta_reps if beta_reps is not None else max(200, reps // 8)
    if family.members or family.recipes:
        beta_hat = estimate_beta(sampler, family, b_reps, seed)
        bval, bstderr = beta_hat.value, beta_hat.stderr
        brec = beta_hat.record()
    else:
        bval, bstderr, brec = 0.0, 0.0, None
    m = max(m_hat.value, 1e-9)
    rhs = (4.0 ** 9 / m ** 17) * (m * m / 4.0) ** (24 * rho) \
        - 2304.0 * rho * rho * math.sqrt(bval / m)
    margin = lhs.value - rhs
    # sensitivity of the closed form to m-hat and beta-hat noise
    d_dm = abs((48 * rho - 17) * rhs / m) if rhs > 0 else 0.0
    d_db = 2304.0 * rho * rho * 0.5 / math.sqrt(max(bval, 1e-12) * m)
    sigma = math.sqrt(lhs.stderr ** 2 + (d_dm * m_hat.stderr) ** 2
                      + (d_db * bstderr) ** 2)
    return InequalityReport(
        name="square_to_long_rect", lhs=lhs.value, rhs=rhs, margin=margin,
        sigma=sigma, violated=margin < -4 * sigma,
        terms={"m": m_hat.record(), "pi": lhs.record(), "beta_hat": brec,
               "rho": rho, "n": n})


def check_long_rect_to_annulus(sampler: Sampler, n: int, reps: int, seed: int,
                               ell: int = 0,
                               beta_reps: Optional[int] = None) -> InequalityReport:
    """psi(n) >= pi(R_{4n,n})^4 - 8 beta-hat at scale (2 ell, n/4, 4n)."""
    psi = estimate_psi(sampler, n, reps, seed)
    pi4 = estimate_pi(sampler, rect_quad(4 * n, n), reps, seed)
    family = _beta_family_for_scale(max(1, 2 * ell), max(2, n // 4), 4 * n, None)
    b_reps = beta_reps if beta_reps is not None else max(200, reps // 8)
    if family.members or family.recipes:
        beta_hat = estimate_beta(sampler, family, b_reps, seed)
        bval, bstderr, brec = beta_hat.value, beta_hat.stderr, beta_hat.record()
    else:
        bval, bstderr, brec = 0.0, 0.0, None
    rhs = pi4.value ** 4 - 8 * bval
    margin = psi.value - rhs
    sigma = math.sqrt(psi.stderr ** 2
                      + (4 * pi4.value ** 3 * pi4.stderr) ** 2
                      + (8 * bstderr) ** 2)
    return InequalityReport(
        name="long_rect_to_annulus", lhs=psi.value, rhs=rhs, margin=margin,
        sigma=sigma, violated=margin < -4 * sigma,
        terms={"psi": psi.record(), "pi_4n": pi4.record(), "beta_hat": brec,
               "n": n})
