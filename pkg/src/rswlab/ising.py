"""Ising spins via a depth-truncated backward heat-bath exploration.

The single-site update at inverse temperature beta draws, at each Poisson
mark of a vertex, a triple (eps, omega, U): with probability 1 - delta the
new spin is the fair coin omega; with probability delta it is +1 exactly
when U < q, where q rescales the heat-bath probability p = e^{beta n} /
(e^{beta n} + e^{-beta n}) around 1/2 by 1/delta and n sums the neighbour
spins.  Here delta = tanh(beta0 * N) with N the maximum degree; the
identity (1-delta)/2 + delta q = p makes the two-step update exact whenever
|beta| <= beta0.

Sampling the stationary state of a vertex at time 0 walks its marks
backwards: an eps = 0 mark resolves the branch, an eps = 1 mark branches
into the neighbours just before that time.  Truncating after k generations
and finishing unresolved branches with independent fair coins produces the
finite-range measure mu_{beta,k}; the expected number of live branches
after k generations is at most (delta N)^k, which requires N tanh(beta0 N)
< 1.  All mark randomness is a pure function of (seed, vertex, mark index),
so overlapping explorations are automatically consistent.

``boundary`` switches the sampler to the finite-volume conditional chain:
neighbours outside the sampled region are frozen to the boundary map
(absent entries contribute 0, i.e. free boundary), which makes the
stationary law the finite-volume Gibbs measure with that boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

import numpy as np

from .lattice import Box, GridGeometry, LatticeSpec, UNION_JACK, Vertex, neighbors
from .rng import CH_COIN, CH_EPS, CH_GAP, CH_OMEGA, CH_U, coin, exponential, mix, u01
from .topology import Configuration


def ising_conditional_prob(beta: float, neighbor_sum: int) -> float:
    """Heat-bath probability of +1 given the neighbour spin sum."""
    x = beta * neighbor_sum
    return 1.0 / (1.0 + math.exp(-2.0 * x))


def ising_q(p: float, delta: float) -> float:
    """Rescaled threshold q with (1-delta)/2 + delta*q = p; requires |p-1/2| <= delta/2."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if abs(p - 0.5) > delta / 2 + 1e-12:
        raise ValueError(
            f"|p - 1/2| = {abs(p-0.5):.6g} exceeds delta/2 = {delta/2:.6g}; "
            "the temperature is outside the coupling regime")
    return min(1.0, max(0.0, 0.5 + (p - 0.5) / delta))


@dataclass(frozen=True)
class IsingModel:
    """Inverse temperature, rate bound, exploration depth, and max degree."""

    beta: float
    beta0: float
    depth: int
    degree_max: int = 8
    spec: LatticeSpec = UNION_JACK

    def __post_init__(self):
        if self.beta0 <= 0:
            raise ValueError("beta0 must be positive")
        if abs(self.beta) > self.beta0 + 1e-15:
            raise ValueError("need |beta| <= beta0")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.degree_max * self.delta >= 1.0:
            raise ValueError(
                "N tanh(beta0 N) >= 1: the backward exploration need not die out")

    @property
    def delta(self) -> float:
        return math.tanh(self.beta0 * self.degree_max)

    def descriptor(self) -> dict:
        return {"model": "ising", "beta": self.beta, "beta0": self.beta0,
                "depth": self.depth, "N": self.degree_max}


class _Backward:
    """One sample's backward exploration with shared mark randomness."""

    def __init__(self, model: IsingModel, seed: int, replica: int,
                 region: Optional[frozenset] = None,
                 boundary: Optional[dict] = None):
        self.model = model
        self.key = mix(seed, replica, 0x15)
        self.region = region
        self.boundary = boundary or {}
        self.mark_times: dict[Vertex, list[float]] = {}
        # (vertex, mark index) -> (spin, determined, budget left when computed);
        # determined entries are budget-independent and always reusable, an
        # undetermined entry is recomputed when revisited with more budget so
        # that truncation never strikes below the minimal-generation depth.
        self.memo: dict[tuple[Vertex, int], tuple[int, bool, int]] = {}
        self.nodes = 0
        self.truncated = 0

    # mark index i >= 1 counts backwards from time 0
    def _time(self, v: Vertex, i: int) -> float:
        times = self.mark_times.setdefault(v, [])
        while len(times) < i:
            j = len(times) + 1
            gap = exponential(self.key, v[0], v[1], j, CH_GAP)
            times.append((times[-1] if times else 0.0) - gap)
        return times[i - 1]

    def _mark_before(self, v: Vertex, t: float) -> int:
        i = 1
        while self._time(v, i) >= t:
            i += 1
        return i

    def resolve(self, v: Vertex, t: float, gen: int) -> tuple[int, bool]:
        """(spin, determined) of v just before time t, within the depth budget."""
        if self.region is not None and v not in self.region:
            return self.boundary.get(v, 0), True
        i = self._mark_before(v, t)
        budget = self.model.depth - gen
        got = self.memo.get((v, i))
        if got is not None and (got[1] or got[2] >= budget):
            return got[0], got[1]
        self.nodes += 1
        if gen > self.model.depth:
            self.truncated += 1
            out = (coin(self.key, v[0], v[1], i, CH_COIN), False)
            self.memo[(v, i)] = (*out, budget)
            return out
        eps = u01(self.key, v[0], v[1], i, CH_EPS) < self.model.delta
        if not eps:
            out = (coin(self.key, v[0], v[1], i, CH_OMEGA), True)
            self.memo[(v, i)] = (*out, budget)
            return out
        tm = self._time(v, i)
        s = 0
        det = True
        for u in neighbors(self.model.spec, v):
            su, du = self.resolve(u, tm, gen + 1)
            s += su
            det = det and du
        p = ising_conditional_prob(self.model.beta, s)
        q = ising_q(p, self.model.delta)
        spin = 1 if u01(self.key, v[0], v[1], i, CH_U) < q else -1
        out = (spin, det)
        self.memo[(v, i)] = (*out, budget)
        return out


def ising_cftp_sample(model: IsingModel, box: Box, seed: int, replica: int = 0,
                      boundary: Optional[dict] = None,
                      region: Optional[Iterable[Vertex]] = None,
                      ) -> tuple[Configuration, np.ndarray, dict]:
    """Sample mu_{beta,k} on a box; returns (configuration, determined mask, stats).

    With ``boundary`` given, samples the finite-volume conditional chain on
    ``region`` (default: the box) with outside spins frozen to the boundary
    map.  Without it, the exploration recurses freely (infinite volume).
    """
    n = box.half_side
    grid = GridGeometry(model.spec, -n, -n, 2 * n + 1, 2 * n + 1)
    reg = None
    if boundary is not None:
        reg = frozenset(region) if region is not None else frozenset(box.vertices())
    bw = _Backward(model, seed, replica, region=reg, boundary=boundary)
    signs = np.empty((grid.nx, grid.ny), dtype=np.int8)
    determined = np.empty((grid.nx, grid.ny), dtype=bool)
    for v in box.vertices():
        s, det = bw.resolve(v, 0.0, 1)
        signs[grid.index(v)] = s
        determined[grid.index(v)] = det
    stats = {
        "nodes": bw.nodes,
        "truncated": bw.truncated,
        "determined_fraction": float(determined.mean()),
    }
    cfg = Configuration(grid=grid, signs=signs, box=box,
                        meta={**model.descriptor(), "seed": seed, "replica": replica})
    return cfg, determined, stats


def cftp_spins_at_depths(model: IsingModel, vertices: list[Vertex], seed: int,
                         replica: int, depths: list[int]) -> dict[int, dict[Vertex, int]]:
    """Values of the listed vertices under shared marks, one per truncation depth.

    Explores the mark tree once to the largest depth and re-evaluates it per
    smaller budget, which realizes the shared-randomness coupling between
    mu_{beta,k} and mu_{beta,k'} exactly.
    """
    kmax = max(depths)
    deep = IsingModel(model.beta, model.beta0, kmax, model.degree_max, model.spec)
    key = mix(seed, replica, 0x15)

    mark_times: dict[Vertex, list[float]] = {}

    def time_of(v, i):
        times = mark_times.setdefault(v, [])
        while len(times) < i:
            j = len(times) + 1
            times.append((times[-1] if times else 0.0)
                         - exponential(key, v[0], v[1], j, CH_GAP))
        return times[i - 1]

    def mark_before(v, t):
        i = 1
        while time_of(v, i) >= t:
            i += 1
        return i

    memo: dict[tuple[Vertex, int, int], int] = {}

    def value(v: Vertex, i: int, budget: int) -> int:
        got = memo.get((v, i, budget))
        if got is not None:
            return got
        if budget <= 0:
            out = coin(key, v[0], v[1], i, CH_COIN)
        elif u01(key, v[0], v[1], i, CH_EPS) >= deep.delta:
            out = coin(key, v[0], v[1], i, CH_OMEGA)
        else:
            tm = time_of(v, i)
            s = sum(value(u, mark_before(u, tm), budget - 1)
                    for u in neighbors(deep.spec, v))
            q = ising_q(ising_conditional_prob(deep.beta, s), deep.delta)
            out = 1 if u01(key, v[0], v[1], i, CH_U) < q else -1
        memo[(v, i, budget)] = out
        return out

    out: dict[int, dict[Vertex, int]] = {}
    for k in depths:
        out[k] = {v: value(v, mark_before(v, 0.0), k) for v in vertices}
    return out


# ---------------------------------------------------------------------------
# exact Gibbs enumeration (the oracle for CFTP validation)
# ---------------------------------------------------------------------------

def ising_exact_gibbs(vertex_set: Iterable[Vertex], beta: float,
                      boundary: Optional[dict] = None,
                      spec: LatticeSpec = UNION_JACK) -> dict[tuple[int, ...], float]:
    """Exact finite-volume Gibbs distribution by enumeration of all states.

    Returns {tuple of spins in sorted vertex order: probability}.  Absent
    boundary entries contribute nothing (free boundary).  The Hamiltonian is
    -sum_{i~j in set} s_i s_j - sum_{i in set, j outside} s_i w_j, and the
    measure is proportional to exp(-beta * H).
    """
    vs = sorted(set(map(tuple, vertex_set)))
    if len(vs) > 12:
        raise ValueError("exact enumeration is capped at 12 vertices")
    boundary = boundary or {}
    inside = set(vs)
    edges = []
    outer = []
    for v in vs:
        for u in neighbors(spec, v):
            if u in inside:
                if v < u:
                    edges.append((v, u))
            elif u in boundary:
                outer.append((v, boundary[u]))
    weights = {}
    total = 0.0
    for assignment in product((1, -1), repeat=len(vs)):
        s = dict(zip(vs, assignment))
        h = -sum(s[a] * s[b] for a, b in edges) - sum(s[a] * w for a, w in outer)
        wgt = math.exp(-beta * h)
        weights[assignment] = wgt
        total += wgt
    return {a: w / total for a, w in weights.items()}
