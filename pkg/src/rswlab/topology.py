"""Discrete planar topology on sign configurations.

Central objects:

* strongly simple paths/circuits: vertex sequences in which two entries are
  adjacent exactly when consecutive (cyclically, for circuits);
* quads ``Q = (gamma, gamma1, gamma', gamma2)``: four disjoint arcs whose
  concatenation is a strongly simple circuit, together with the bounded
  component ``Q°`` of the complement;
* crossings of a quad: sign-constant strongly simple paths through ``Q°``
  joining a vertex adjacent to ``gamma`` to one adjacent to ``gamma'``, whose
  interior vertices touch no boundary vertex and whose endpoints stay at
  graph distance >= 2 from ``gamma1 ∪ gamma2``;
* annulus circuits: strongly simple circuits of one sign generating the
  fundamental group of a square annulus.

Existence queries reduce to reachability: a crossing exists iff there is a
walk from an admissible start to an admissible end through the admissible
core, because strong loop-erasure of such a walk is itself a crossing.  The
reduction is validated exhaustively against direct path enumeration in the
test suite.  Reachability runs on dense boolean grids and is batched across
Monte Carlo replicas.

The annulus-circuit detector runs two independent algorithms (winding-number
consistency on a cut annulus, and absence of an opposite-sign traversal) and
aborts if they ever disagree.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .lattice import (
    Annulus,
    Box,
    GridGeometry,
    LatticeSpec,
    UNION_JACK,
    Vertex,
    neighbors,
)

PathT = tuple[Vertex, ...]


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

def is_path(spec: LatticeSpec, p: Sequence[Vertex]) -> bool:
    """Consecutive vertices adjacent, no vertex repeated."""
    if len(p) == 0:
        return False
    if len(set(p)) != len(p):
        return False
    return all(spec.adjacent(p[i], p[i + 1]) for i in range(len(p) - 1))


def is_strongly_simple(spec: LatticeSpec, p: Sequence[Vertex]) -> bool:
    """p_i ~ p_j if and only if |i - j| = 1."""
    k = len(p)
    if k == 0:
        return False
    for i in range(k):
        for j in range(i + 1, k):
            if spec.adjacent(p[i], p[j]) != (j - i == 1):
                return False
    return True


def is_strongly_simple_circuit(spec: LatticeSpec, p: Sequence[Vertex]) -> bool:
    """Circuit variant: indices mod k, k >= 4."""
    k = len(p)
    if k < 4:
        return False
    for i in range(k):
        for j in range(i + 1, k):
            d = j - i
            expect = d == 1 or d == k - 1
            if spec.adjacent(p[i], p[j]) != expect:
                return False
    return True


def loop_erase(spec: LatticeSpec, walk: Sequence[Vertex]) -> PathT:
    """Strong loop-erasure of a nearest-neighbour walk.

    Inductive rule: from the current output vertex, jump to the walk entry of
    largest index adjacent to it.  The result is strongly simple, starts at
    ``walk[0]``, and uses only vertices of the walk; when the walk ends at a
    vertex it visits only once, the erasure ends there as well.
    """
    if len(walk) == 0:
        raise ValueError("empty walk")
    for i in range(len(walk) - 1):
        if not spec.adjacent(walk[i], walk[i + 1]):
            raise ValueError(f"walk entries {i},{i+1} not adjacent")
    out = [walk[0]]
    li = 0
    n = len(walk)
    while True:
        last = out[-1]
        nxt = None
        for j in range(n - 1, li, -1):
            if spec.adjacent(walk[j], last):
                nxt = j
                break
        if nxt is None:
            return tuple(out)
        out.append(walk[nxt])
        li = nxt


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------

@dataclass
class Configuration:
    """Sign assignment on a rectangle of the lattice.

    ``signs`` is an int8 array of +-1 indexed ``[ix, iy]`` for vertex
    ``(grid.x0 + ix, grid.y0 + iy)``.  ``values`` optionally carries the real
    field the signs were derived from (sign(v) = +1 iff value(v) > 0; exact
    zeros are rejected at sampling time).  ``box`` is set when the
    configuration was sampled on a centered box Lambda_n.
    """

    grid: GridGeometry
    signs: np.ndarray
    values: Optional[np.ndarray] = None
    box: Optional[Box] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.signs.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("signs shape does not match grid")
        if not np.isin(self.signs, (-1, 1)).all():
            raise ValueError("signs must be +-1")

    def sign(self, v: Vertex) -> int:
        return int(self.signs[self.grid.index(v)])

    def value(self, v: Vertex) -> float:
        if self.values is None:
            raise ValueError("configuration carries no real values")
        return float(self.values[self.grid.index(v)])

    def sign_mask_on(self, grid: GridGeometry, sign: int) -> np.ndarray:
        """Boolean mask of ``sign`` on a sub-rectangle ``grid`` of this grid."""
        ox = grid.x0 - self.grid.x0
        oy = grid.y0 - self.grid.y0
        if ox < 0 or oy < 0 or ox + grid.nx > self.grid.nx or oy + grid.ny > self.grid.ny:
            raise ValueError("requested grid not contained in configuration")
        sub = self.signs[ox:ox + grid.nx, oy:oy + grid.ny]
        return sub == sign

    def negated(self) -> "Configuration":
        return Configuration(
            grid=self.grid,
            signs=(-self.signs).astype(np.int8),
            values=None if self.values is None else -self.values,
            box=self.box,
            meta=dict(self.meta),
        )


def config_from_signs(spec: LatticeSpec, box: Box,
                      sign_of: dict[Vertex, int]) -> Configuration:
    """Assemble a Configuration on a centered box from an explicit map."""
    n = box.half_side
    grid = GridGeometry(spec, -n, -n, 2 * n + 1, 2 * n + 1)
    signs = np.empty((grid.nx, grid.ny), dtype=np.int8)
    for v in box.vertices():
        signs[grid.index(v)] = sign_of[v]
    return Configuration(grid=grid, signs=signs, box=box)


# ---------------------------------------------------------------------------
# quads
# ---------------------------------------------------------------------------

class Quad:
    """A quad (gamma, gamma1, gamma', gamma2) with cached grid masks.

    The four arcs, concatenated in order, must form a strongly simple
    circuit; ``interior`` is the bounded component of the complement of the
    circuit.  ``dual()`` rotates the roles one step: the horizontal crossings
    of the dual are the vertical crossings of the original.
    """

    def __init__(self, spec: LatticeSpec, gamma: Sequence[Vertex],
                 gamma1: Sequence[Vertex], gamma_prime: Sequence[Vertex],
                 gamma2: Sequence[Vertex], validate: bool = True,
                 name: str = ""):
        self.spec = spec
        self.gamma = tuple(map(tuple, gamma))
        self.gamma1 = tuple(map(tuple, gamma1))
        self.gamma_prime = tuple(map(tuple, gamma_prime))
        self.gamma2 = tuple(map(tuple, gamma2))
        self.name = name
        self.circuit = self.gamma + self.gamma1 + self.gamma_prime + self.gamma2
        if validate:
            self._validate()
        self._build_grid()

    # -- construction -------------------------------------------------------

    def _validate(self):
        arcs = [self.gamma, self.gamma1, self.gamma_prime, self.gamma2]
        if any(len(a) == 0 for a in arcs):
            raise ValueError("all four arcs must be nonempty")
        allv = self.circuit
        if len(set(allv)) != len(allv):
            raise ValueError("arcs are not disjoint")
        if not is_strongly_simple_circuit(self.spec, allv):
            raise ValueError("arc concatenation is not a strongly simple circuit")

    def _build_grid(self):
        xs = [v[0] for v in self.circuit]
        ys = [v[1] for v in self.circuit]
        # margin 1 so the exterior flood can wrap around the circuit
        g = GridGeometry(self.spec, min(xs) - 1, min(ys) - 1,
                         max(xs) - min(xs) + 3, max(ys) - min(ys) + 3)
        self.grid = g
        self.boundary_mask = g.mask_of(self.circuit)
        border = np.zeros((g.nx, g.ny), dtype=bool)
        border[0, :] = border[-1, :] = True
        border[:, 0] = border[:, -1] = True
        exterior = g.flood(border & ~self.boundary_mask, ~self.boundary_mask)
        self.interior_mask = ~exterior & ~self.boundary_mask
        if not self.interior_mask.any():
            raise ValueError("quad has empty interior")
        self.g_mask = g.mask_of(self.gamma)
        self.g1_mask = g.mask_of(self.gamma1)
        self.gp_mask = g.mask_of(self.gamma_prime)
        self.g2_mask = g.mask_of(self.gamma2)
        # crossing admissibility: interior roles
        side = self.g1_mask | self.g2_mask
        far_sides = ~side & ~g.dilate(side)          # graph distance >= 2
        touch_boundary = g.dilate(self.boundary_mask)
        self.core_mask = self.interior_mask & ~touch_boundary
        self.src_mask = self.interior_mask & g.dilate(self.g_mask) & far_sides
        self.tgt_mask = self.interior_mask & g.dilate(self.gp_mask) & far_sides

    # -- basic queries -------------------------------------------------------

    @cached_property
    def interior(self) -> frozenset:
        return frozenset(self.grid.vertices_of(self.interior_mask))

    @cached_property
    def support(self) -> frozenset:
        return self.interior | frozenset(self.circuit)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.support

    def interior_size(self) -> int:
        return int(self.interior_mask.sum())

    def dual(self) -> "Quad":
        q = Quad(self.spec, self.gamma1, self.gamma_prime, self.gamma2,
                 self.gamma, validate=False, name=self.name + "*")
        return q

    def fits_in(self, grid: GridGeometry) -> bool:
        return (grid.x0 <= self.grid.x0 and grid.y0 <= self.grid.y0
                and grid.x0 + grid.nx >= self.grid.x0 + self.grid.nx
                and grid.y0 + grid.ny >= self.grid.y0 + self.grid.ny)

    def bounding_box_half_side(self) -> int:
        m = 0
        for v in self.circuit:
            m = max(m, abs(v[0]), abs(v[1]))
        return m

    def __repr__(self):
        return (f"Quad({self.name or 'arcs'}: |interior|={self.interior_size()}, "
                f"perimeter={len(self.circuit)})")


def _col(x: int, y_from: int, y_to: int) -> list[Vertex]:
    step = 1 if y_to >= y_from else -1
    return [(x, y) for y in range(y_from, y_to + step, step)]


def _row(y: int, x_from: int, x_to: int) -> list[Vertex]:
    step = 1 if x_to >= x_from else -1
    return [(x, y) for x in range(x_from, x_to + step, step)]


def rect_quad(a: int, b: int, x0: int = 0, y0: int = 0,
              spec: LatticeSpec = UNION_JACK) -> Quad:
    """The rectangle quad on [x0, x0+a] x [y0, y0+b], crossed left-to-right.

    gamma is the full left side (corners included), gamma' the full right
    side; gamma1/gamma2 are the open bottom/top.  Both dimensions must be
    even: at an odd-dimension corner the two boundary vertices flanking the
    corner are lattice-adjacent, so the boundary walk would not be a strongly
    simple circuit.
    """
    if a < 2 or b < 2:
        raise ValueError("rectangle quad needs a, b >= 2")
    if a % 2 or b % 2:
        raise ValueError("rectangle quad needs even side lengths on this lattice")
    gamma = _col(x0, y0 + b, y0)                      # left, top to bottom
    gamma1 = _row(y0, x0 + 1, x0 + a - 1)             # bottom, left to right
    gammap = _col(x0 + a, y0, y0 + b)                 # right, bottom to top
    gamma2 = _row(y0 + b, x0 + a - 1, x0 + 1)         # top, right to left
    return Quad(spec, gamma, gamma1, gammap, gamma2, name=f"R[{a}x{b}]@({x0},{y0})")


def l_quad(l: int, L: int, lp: int, Lp: int, spec: LatticeSpec = UNION_JACK) -> Quad:
    """L-shaped quad: union of R = [0,L]x[0,l] and R' = [L-lp,L]x[0,Lp].

    gamma is the left side of R; gamma' is the top side of R'.  All four
    dimensions must be even, with Lp > l and lp < L.
    """
    if any(d % 2 for d in (l, L, lp, Lp)):
        raise ValueError("l_quad needs even dimensions on this lattice")
    if not (0 < l < Lp and 0 < lp < L):
        raise ValueError("need 0 < l < Lp and 0 < lp < L")
    gamma = _col(0, l, 0)                              # left of R, top to bottom
    gamma1 = _row(0, 1, L - 1) + _col(L, 0, Lp - 1)    # bottom then right side up
    gammap = _row(Lp, L, L - lp)                       # top of R', right to left
    gamma2 = (_col(L - lp, Lp - 1, l)                  # down the inner side
              + _row(l, L - lp - 1, 1))                # then along the top of R
    return Quad(spec, gamma, gamma1, gammap, gamma2,
                name=f"L[l={l},L={L},lp={lp},Lp={Lp}]")


def annulus_slit_quad(center: Vertex, r: int, R: int,
                      spec: LatticeSpec = UNION_JACK) -> Quad:
    """The annulus x + A(r, R) cut open along a slit on the +x axis.

    gamma runs along the inner square ring C(r), gamma' along the outer ring
    C(R); the two slit sides (rows y0 and y0+2, east of the rings) are gamma1
    and gamma2.  The row y0+1 east of the inner ring is left out of the
    circuit, so the slit gap connects the central hole to the exterior and
    the interior of the quad is exactly the cut ring.  Any positive vertical
    crossing of the dual is a near-circuit of the annulus.
    """
    if not 2 <= r < R - 1:
        raise ValueError("need 2 <= r < R - 1 (the inner ring must reach the slit)")
    if (center[0] + center[1]) % 2:
        raise ValueError("slit annulus needs an even-parity center: ring corners "
                         "at odd parity touch their flanking vertices diagonally")
    cx, cy = center

    def ring_cycle(rad: int) -> list[Vertex]:
        # counterclockwise square ring starting at (rad, 0), center-relative
        pts = [(rad, y) for y in range(0, rad)]
        pts += [(x, rad) for x in range(rad, -rad, -1)]
        pts += [(-rad, y) for y in range(rad, -rad, -1)]
        pts += [(x, -rad) for x in range(-rad, rad)]
        pts += [(rad, y) for y in range(-rad, 0)]
        return [(cx + x, cy + y) for x, y in pts]

    inner = ring_cycle(r)
    outer = ring_cycle(R)
    # inner arc: counterclockwise from (r, 2) the long way around to (r, 0),
    # leaving (r, 1) to the slit gap; outer arc runs clockwise from (R, 0)
    # back to (R, 2), leaving (R, 1) out.
    gamma = inner[2:] + inner[:1]
    gammap = [outer[0]] + [outer[j] for j in range(len(outer) - 1, 1, -1)]
    gamma1 = _row(cy, cx + r + 1, cx + R - 1)      # slit south side, outward
    gamma2 = _row(cy + 2, cx + R - 1, cx + r + 1)  # slit north side, inward
    return Quad(spec, gamma, gamma1, gammap, gamma2,
                name=f"A[{r},{R}]@{center}")


# ---------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------

def _role_masks(quad: Quad, allowed: np.ndarray):
    """Clip quad role masks by an admissibility mask on the quad grid."""
    return allowed & quad.src_mask, allowed & quad.core_mask, allowed & quad.tgt_mask


def crossing_indicator_batch(quad: Quad, allowed_batch: np.ndarray) -> np.ndarray:
    """Vector of crossing-existence indicators.

    ``allowed_batch`` has shape (B, nx, ny) on the quad grid and marks the
    vertices usable by the crossing (typically a sign mask).
    """
    g = quad.grid
    S = allowed_batch & quad.src_mask
    M = allowed_batch & quad.core_mask
    T = allowed_batch & quad.tgt_mask
    reach = g.flood(g.dilate(S) & M, M)
    hits = (S & T).any(axis=(-2, -1))
    hits |= ((g.dilate(S | reach)) & T).any(axis=(-2, -1))
    return hits


def crossing_exists(config: Configuration, quad: Quad, sign: int = 1) -> bool:
    allowed = config.sign_mask_on(quad.grid, sign)
    return bool(crossing_indicator_batch(quad, allowed[None])[0])


def _walk_to_target(quad: Quad, S: np.ndarray, M: np.ndarray,
                    T: np.ndarray) -> Optional[list[Vertex]]:
    """Scalar BFS for a walk source -> core* -> target; returns vertex list."""
    g = quad.grid
    direct = S & T
    if direct.any():
        ix, iy = np.argwhere(direct)[0]
        return [g.vertex(int(ix), int(iy))]
    parent: dict[Vertex, Optional[Vertex]] = {}
    frontier: deque[Vertex] = deque()
    for ix, iy in np.argwhere(S):
        v = g.vertex(int(ix), int(iy))
        parent[v] = None
        frontier.append(v)
    while frontier:
        u = frontier.popleft()
        for w in neighbors(quad.spec, u):
            if not g.contains(w) or w in parent:
                continue
            wi = g.index(w)
            if T[wi]:
                parent[w] = u
                path = [w]
                while path[-1] is not None and parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            if M[wi]:
                parent[w] = u
                frontier.append(w)
    return None


def is_crossing(config_or_mask, quad: Quad, path: Sequence[Vertex],
                sign: Optional[int] = 1) -> bool:
    """Direct check of the crossing conditions for an explicit path."""
    if len(path) == 0:
        return False
    g = quad.grid
    if isinstance(config_or_mask, Configuration):
        allowed = (config_or_mask.sign_mask_on(g, sign) if sign is not None
                   else np.ones((g.nx, g.ny), dtype=bool))
    else:
        allowed = config_or_mask
    if not is_strongly_simple(quad.spec, path):
        return False
    for v in path:
        if not g.contains(v):
            return False
        if not quad.interior_mask[g.index(v)] or not allowed[g.index(v)]:
            return False
    x, y = path[0], path[-1]
    if not quad.src_mask[g.index(x)] or not quad.tgt_mask[g.index(y)]:
        return False
    return all(quad.core_mask[g.index(v)] for v in path[1:-1])


def find_crossing(config: Configuration, quad: Quad,
                  sign: int = 1) -> Optional[PathT]:
    """A crossing of the quad by ``sign``-vertices, or None if there is none.

    Completeness: returns a path exactly when one exists (exhaustively
    validated against direct enumeration on small quads).
    """
    if not quad.fits_in(config.grid):
        raise ValueError("quad does not fit inside the configuration")
    allowed = config.sign_mask_on(quad.grid, sign)
    return find_crossing_in_mask(quad, allowed)


def find_crossing_in_mask(quad: Quad, allowed: np.ndarray) -> Optional[PathT]:
    """Crossing using only vertices of ``allowed`` (mask on the quad grid)."""
    S, M, T = _role_masks(quad, allowed)
    walk = _walk_to_target(quad, S, M, T)
    if walk is None:
        return None
    path = loop_erase(quad.spec, walk)
    assert is_crossing(allowed, quad, path, sign=None), "loop-erased walk not a crossing"
    return path


def find_crossing_in_set(quad: Quad, vertices: Iterable[Vertex]) -> Optional[PathT]:
    """Crossing contained in an explicit vertex set (no sign constraint)."""
    mask = np.zeros((quad.grid.nx, quad.grid.ny), dtype=bool)
    for v in vertices:
        if quad.grid.contains(v):
            mask[quad.grid.index(v)] = True
    return find_crossing_in_mask(quad, mask)


def is_glued(config: Configuration, quad: Quad) -> bool:
    """A quad is glued when it is vertically crossed by a positive path."""
    return crossing_exists(config, quad.dual(), 1)


# ---------------------------------------------------------------------------
# Jordan split, leftmost crossing, tubular frontier
# ---------------------------------------------------------------------------

def _lower_region_mask(quad: Quad, path_mask: np.ndarray) -> np.ndarray:
    """Component(s) of interior minus crossing adjacent to gamma1."""
    g = quad.grid
    allowed = quad.interior_mask & ~path_mask
    seeds = g.dilate(quad.g1_mask) & allowed
    return g.flood(seeds, allowed)


def _mask_of_path(quad: Quad, path: Sequence[Vertex]) -> np.ndarray:
    m = np.zeros((quad.grid.nx, quad.grid.ny), dtype=bool)
    for v in path:
        m[quad.grid.index(v)] = True
    return m


def jordan_split(quad: Quad, crossing: Sequence[Vertex],
                 config: Optional[Configuration] = None,
                 sign: Optional[int] = 1) -> tuple[frozenset, frozenset]:
    """Split interior minus crossing into the gamma1 side and the rest.

    Returns (V1, V2) with V1 the union of components adjacent to gamma1.
    Raises if the path is not a crossing of the quad.
    """
    check_mask = (config.sign_mask_on(quad.grid, sign) if config is not None
                  else np.ones((quad.grid.nx, quad.grid.ny), dtype=bool))
    if not is_crossing(check_mask, quad, tuple(crossing), sign=None):
        raise ValueError("path is not a crossing of the quad")
    pm = _mask_of_path(quad, crossing)
    v1 = _lower_region_mask(quad, pm)
    v2 = quad.interior_mask & ~pm & ~v1
    g = quad.grid
    return frozenset(g.vertices_of(v1)), frozenset(g.vertices_of(v2))


def leftmost_crossing(config: Configuration, quad: Quad,
                      sign: int = 1) -> Optional[PathT]:
    """The minimal positive crossing in the lower-region inclusion order.

    Minimality means the gamma1-side Jordan component of the result is
    contained in that of every other crossing; the paper-facing name
    "leftmost" matches quads whose first arc runs along the left.
    """
    if not quad.fits_in(config.grid):
        raise ValueError("quad does not fit inside the configuration")
    allowed = config.sign_mask_on(quad.grid, sign)
    return leftmost_crossing_in_mask(quad, allowed)


def leftmost_crossing_in_mask(quad: Quad, allowed: np.ndarray) -> Optional[PathT]:
    """Descend to the minimal crossing by exclusion.

    The minimal crossing lies inside the closed lower region of every
    crossing, and differs from a non-minimal one in at least one vertex; so
    while some vertex w of the current crossing can be dodged by a crossing
    confined to the current closed lower region minus w, descend to that
    crossing.  At a fixed point no such dodge exists, which forces
    minimality.  Each accepted dodge shrinks the lower region, bounding the
    number of iterations.
    """
    cross = find_crossing_in_mask(quad, allowed)
    if cross is None:
        return None
    g = quad.grid
    for _ in range(4 * quad.interior_size() + 8):
        cm = _mask_of_path(quad, cross)
        lower = _lower_region_mask(quad, cm)
        closed = (lower | cm) & allowed
        descended = False
        for w in cross:
            wi = g.index(w)
            closed[wi] = False
            d = find_crossing_in_mask(quad, closed)
            closed[wi] = True
            if d is not None:
                cross = d
                descended = True
                break
        if not descended:
            return cross
    raise RuntimeError("leftmost crossing did not stabilise")


def tubular_frontier(quad: Quad, V: Iterable[Vertex], ell: int) -> frozenset:
    """Frontier of the ell-neighbourhood of V inside the quad support.

    Returns the vertices of V_ell having a neighbour in the support outside
    V_ell; for V the lower region of a crossing this frontier crosses the
    quad (no sign constraint).
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    g = quad.grid
    vm = np.zeros((g.nx, g.ny), dtype=bool)
    for v in V:
        vm[g.index(v)] = True
    support = quad.interior_mask | quad.boundary_mask
    cur = vm & support
    for _ in range(ell):
        cur = (cur | g.dilate(cur)) & support
    outside = support & ~cur
    frontier = cur & g.dilate(outside)
    return frozenset(g.vertices_of(frontier))


# ---------------------------------------------------------------------------
# annuli: traversals, surrounding circuits
# ---------------------------------------------------------------------------

def _annulus_masks(grid: GridGeometry, ann: Annulus):
    ix = np.arange(grid.x0, grid.x0 + grid.nx)[:, None] - ann.center[0]
    iy = np.arange(grid.y0, grid.y0 + grid.ny)[None, :] - ann.center[1]
    d = np.maximum(np.abs(ix), np.abs(iy))
    ring = (d > ann.inner) & (d <= ann.outer)
    inner_shell = d == ann.inner + 1
    outer_shell = d == ann.outer
    return ring, inner_shell, outer_shell


def traversal_exists(config: Configuration, ann: Annulus, sign: int) -> bool:
    """Is there a sign-constant path across the annulus, inner shell to outer?"""
    g = config.grid
    ring, inner, outer = _annulus_masks(g, ann)
    ok = (config.signs == sign) & ring
    reach = g.flood(ok & inner, ok)
    return bool((reach & outer).any())


def _winding_inconsistent(config: Configuration, ann: Annulus, sign: int) -> bool:
    """Does the sign-set contain a closed walk of nonzero winding number?

    Assigns an integer potential over each connected component of the sign
    set in the annulus, incrementing across a horizontal cut east of the
    hole; a contradictory assignment witnesses a cycle with nonzero winding.
    """
    g = config.grid
    ring, _, _ = _annulus_masks(g, ann)
    ok = (config.signs == sign) & ring
    cx, cy = ann.center
    spec = config.grid.spec

    def cut_step(u: Vertex, w: Vertex) -> int:
        # +-1 when the edge crosses the half-line y = cy + 1/2, x > cx + inner
        if {u[1], w[1]} != {cy, cy + 1}:
            return 0
        if u[0] + w[0] <= 2 * cx + 2 * ann.inner:
            return 0
        return 1 if w[1] > u[1] else -1

    potential: dict[Vertex, int] = {}
    xs, ys = np.nonzero(ok)
    todo = [(g.x0 + int(x), g.y0 + int(y)) for x, y in zip(xs, ys)]
    members = set(todo)
    for root in todo:
        if root in potential:
            continue
        potential[root] = 0
        frontier = deque([root])
        while frontier:
            u = frontier.popleft()
            for w in neighbors(spec, u):
                if w not in members:
                    continue
                p = potential[u] + cut_step(u, w)
                if w in potential:
                    if potential[w] != p:
                        return True
                else:
                    potential[w] = p
                    frontier.append(w)
    return False


def surrounds_annulus(config: Configuration, ann: Annulus, sign: int = 1) -> bool:
    """Does the sign-set contain a circuit generating pi_1 of the annulus?

    Decided by two independent routes which must agree: absence of an
    opposite-sign traversal, and winding-number inconsistency of the sign
    set on the cut annulus.  Disagreement aborts, since it would falsify the
    planar duality this detector relies on.
    """
    g = config.grid
    if not (g.x0 <= ann.center[0] - ann.outer
            and g.y0 <= ann.center[1] - ann.outer
            and g.x0 + g.nx > ann.center[0] + ann.outer
            and g.y0 + g.ny > ann.center[1] + ann.outer):
        raise ValueError("annulus not contained in the configuration")
    via_duality = not traversal_exists(config, ann, -sign)
    via_winding = _winding_inconsistent(config, ann, sign)
    if via_duality != via_winding:
        raise RuntimeError(
            f"annulus detectors disagree on {ann}: duality={via_duality}, "
            f"winding={via_winding}; configuration hash "
            f"{hash(config.signs.tobytes())}"
        )
    return via_duality


# ---------------------------------------------------------------------------
# quad classes Q_{r,R,L}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassMembership:
    member: bool
    exact: bool            # False when only the sufficient condition was used
    witness: Optional[Vertex] = None


def _path_traverses(path: Sequence[Vertex], x: Vertex, r: int, R: int) -> bool:
    """Does the path contain a contiguous stretch across the annulus shells?

    The stretch must stay inside the closed shell band r..R around x, start
    within distance 1 of the inner box and end on one of the two outermost
    inside shells (boundary arcs of a quad may occupy the extreme shells, so
    crossings can be forced to turn one short of them).
    """
    band = [max(abs(v[0] - x[0]), abs(v[1] - x[1])) for v in path]
    n = len(path)
    i = 0
    while i < n:
        if r <= band[i] <= R:
            j = i
            lo = hi = False
            while j < n and r <= band[j] <= R:
                lo = lo or band[j] <= r + 1
                hi = hi or band[j] >= R - 1
                j += 1
            if lo and hi:
                return True
            i = j
        else:
            i += 1
    return False


def enumerate_crossings(quad: Quad, allowed: Optional[np.ndarray] = None,
                        limit: Optional[int] = None) -> list[PathT]:
    """All crossings of the quad within an admissibility mask (DFS).

    Exponential; intended for quads with small interiors (class membership
    checks and validation).
    """
    g = quad.grid
    if allowed is None:
        allowed = np.ones((g.nx, g.ny), dtype=bool)
    S, M, T = _role_masks(quad, allowed)
    spec = quad.spec
    src = [g.vertex(int(x), int(y)) for x, y in np.argwhere(S)]
    out: list[PathT] = []

    def extend(path: list[Vertex]):
        if limit is not None and len(out) >= limit:
            return
        last = path[-1]
        li = g.index(last)
        if T[li]:
            out.append(tuple(path))
        # extending past `last` makes it an inner vertex: it must be core,
        # unless it is the starting vertex (exempt from the core condition)
        if not (M[li] or len(path) == 1):
            return
        for w in neighbors(spec, last):
            if not g.contains(w):
                continue
            wi = g.index(w)
            if not (M[wi] or T[wi]) or w in path:
                continue
            # strong simplicity: w may touch only the current last vertex
            if any(spec.adjacent(w, u) for u in path[:-1]):
                continue
            extend(path + [w])

    for s in src:
        extend([s])
    return out


def quad_in_class(quad: Quad, r: int, R: int, L: int,
                  exact_limit: int = 20) -> ClassMembership:
    """Is the quad in the class Q_{r,R,L}?

    Exact test (small interiors): some x in Lambda_L makes every sign-free
    crossing traverse x + A(r,R).  Larger quads fall back to the sufficient
    condition: one end arc inside x + Lambda_r and the other not inside the
    open box x + Lambda_R.
    """
    if not (1 <= r <= R <= L):
        raise ValueError("need 1 <= r <= R <= L")
    if quad.bounding_box_half_side() > L:
        return ClassMembership(False, True, None)

    suff = _sufficient_witness(quad, r, R, L)
    if quad.interior_size() > exact_limit:
        return ClassMembership(suff is not None, False, suff)

    crossings = enumerate_crossings(quad)
    if not crossings:
        return ClassMembership(True, True, (0, 0))  # vacuous: no crossing at all
    # candidate centers: Lambda_L clipped to a window around the quad
    xs = [v[0] for v in quad.circuit]
    ys = [v[1] for v in quad.circuit]
    for x in range(max(-L, min(xs) - R), min(L, max(xs) + R) + 1):
        for y in range(max(-L, min(ys) - R), min(L, max(ys) + R) + 1):
            if all(_path_traverses(c, (x, y), r, R) for c in crossings):
                return ClassMembership(True, True, (x, y))
    return ClassMembership(False, True, None)


def _sufficient_witness(quad: Quad, r: int, R: int, L: int) -> Optional[Vertex]:
    """Center x with one end arc inside x+Lambda_r and the other outside x+Lambda_R."""
    for inner_arc, outer_arc in ((quad.gamma, quad.gamma_prime),
                                 (quad.gamma_prime, quad.gamma)):
        xs = [v[0] for v in inner_arc]
        ys = [v[1] for v in inner_arc]
        lo_x, hi_x = max(xs) - r, min(xs) + r
        lo_y, hi_y = max(ys) - r, min(ys) + r
        for x in range(max(lo_x, -L), min(hi_x, L) + 1):
            for y in range(max(lo_y, -L), min(hi_y, L) + 1):
                if all(max(abs(v[0] - x), abs(v[1] - y)) >= R for v in outer_arc):
                    return (x, y)
    return None


def subquad_in_annulus(quad: Quad, r: int, R: int, L: int) -> tuple[Vertex, Quad]:
    """A sub-quad with end arcs on the annulus shells of a class witness.

    Given a quad of class Q_{r,R,L} with witness x, extracts arcs a ⊂ x+C(r)
    and a' ⊂ x+C(R) (shell components separating gamma from gamma') joined by
    stretches of gamma1 and gamma2, so that any gluing of the sub-quad is a
    gluing of the original quad.
    """
    membership = quad_in_class(quad, r, R, L)
    if not membership.member:
        raise ValueError("quad is not in the requested class")
    x = membership.witness
    g = quad.grid
    support = quad.interior_mask | quad.boundary_mask

    def shell_components(radius: int) -> list[list[Vertex]]:
        ix = np.arange(g.x0, g.x0 + g.nx)[:, None] - x[0]
        iy = np.arange(g.y0, g.y0 + g.ny)[None, :] - x[1]
        d = np.maximum(np.abs(ix), np.abs(iy))
        shell = (d == radius) & support
        comps = []
        for m in g.components(shell):
            comps.append(g.vertices_of(m))
        return comps

    def separates(component: list[Vertex]) -> bool:
        cm = g.mask_of(component)
        free = (quad.interior_mask | quad.boundary_mask) & ~cm
        start = g.flood(quad.g_mask & free, free)
        return not bool((start & quad.gp_mask).any())

    inner_comps = [c for c in shell_components(r + 1) if separates(c)]
    outer_comps = [c for c in shell_components(R) if separates(c)]
    if not inner_comps or not outer_comps:
        raise ValueError("no separating shell components; witness unusable")

    def order_along(arc: Sequence[Vertex], comps):
        best = []
        for c in comps:
            cset = set(c)
            idxs = [i for i, v in enumerate(arc)
                    if v in cset or any(quad.spec.adjacent(v, w) for w in cset)]
            if idxs:
                best.append((min(idxs), c))
        best.sort(key=lambda t: t[0])
        return best

    g1_hits_inner = order_along(quad.gamma1, inner_comps)
    g1_hits_outer = order_along(quad.gamma1, outer_comps)
    g2_hits_inner = order_along(quad.gamma2, inner_comps)
    g2_hits_outer = order_along(quad.gamma2, outer_comps)
    if not g1_hits_inner or not g1_hits_outer or not g2_hits_inner \
            or not g2_hits_outer:
        raise ValueError("dual arcs do not meet the separating shell components")
    i_inner, comp_inner = g1_hits_inner[0]
    i_outer, comp_outer = g1_hits_outer[0]
    j_inner = next(i for i, c in g2_hits_inner if c is comp_inner)
    j_outer = next(i for i, c in g2_hits_outer if c is comp_outer)

    def path_within(component: list[Vertex]) -> list[Vertex]:
        # order the component as a path, gamma1 contact -> gamma2 contact
        cset = set(component)
        e1 = [v for v in component if any(
            quad.spec.adjacent(v, w) or v == w for w in quad.gamma1)]
        e2 = [v for v in component if any(
            quad.spec.adjacent(v, w) or v == w for w in quad.gamma2)]
        if not e1 or not e2:
            raise ValueError("shell component does not reach both dual arcs")
        start, goal = e1[0], e2[0]
        parent = {start: None}
        q = deque([start])
        while q:
            u = q.popleft()
            if u == goal:
                break
            for w in neighbors(quad.spec, u):
                if w in cset and w not in parent:
                    parent[w] = u
                    q.append(w)
        if goal not in parent:
            raise ValueError("shell component not path-connected between arcs")
        path = [goal]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    a = path_within(comp_inner)      # gamma1 side -> gamma2 side
    ap = path_within(comp_outer)

    # gamma1 stretch oriented inner-contact -> outer-contact, gamma2 stretch
    # outer-contact -> inner-contact, so the cyclic order is
    # a(reversed) . b . ap . bp
    lo, hi = sorted((i_inner, i_outer))
    b = list(quad.gamma1[lo:hi + 1])
    if i_inner > i_outer:
        b.reverse()
    lo2, hi2 = sorted((j_inner, j_outer))
    bp = list(quad.gamma2[lo2:hi2 + 1])
    if j_inner < j_outer:
        bp.reverse()

    circuit = _assemble_circuit(quad.spec, a[::-1], b, ap, bp, reorient=False)
    return x, circuit


def _assemble_circuit(spec: LatticeSpec, a, b, ap, bp, reorient: bool = True) -> Quad:
    """Join four candidate arcs into a valid quad, trimming overlaps."""
    def orient(arc: list[Vertex], after: list[Vertex]) -> list[Vertex]:
        if not reorient or not after:
            return arc
        tail = after[-1]
        d_first = abs(arc[0][0] - tail[0]) + abs(arc[0][1] - tail[1])
        d_last = abs(arc[-1][0] - tail[0]) + abs(arc[-1][1] - tail[1])
        return arc if d_first <= d_last else arc[::-1]

    a = list(a)
    b = orient(list(b), a)
    ap = orient(list(ap), b)
    bp = orient(list(bp), ap)
    walk: list[Vertex] = []
    for arc in (a, b, ap, bp):
        for v in arc:
            if v not in walk:
                walk.append(v)
    # circular strong loop-erasure: repeatedly drop vertices breaking the
    # circuit condition, reconnecting through remaining vertices
    cyc = _strongify_circuit(spec, walk)
    q = len(cyc)
    # split back into four arcs at the nearest preserved representatives
    marks = []
    for arc in (a, b, ap, bp):
        reps = [cyc.index(v) for v in arc if v in cyc]
        if not reps:
            raise ValueError("an arc vanished during circuit assembly")
        marks.append(min(reps))
    order = sorted(range(4), key=lambda i: marks[i])
    cuts = sorted(marks)
    pieces = []
    for i in range(4):
        j = (i + 1) % 4
        if cuts[j] > cuts[i]:
            pieces.append(cyc[cuts[i]:cuts[j]])
        else:
            pieces.append(cyc[cuts[i]:] + cyc[:cuts[j]])
    arcs = [None] * 4
    for rank, idx in enumerate(order):
        arcs[idx] = pieces[rank]
    return Quad(spec, arcs[0], arcs[1], arcs[2], arcs[3], name="subquad")


def _strongify_circuit(spec: LatticeSpec, walk: list[Vertex]) -> list[Vertex]:
    """Greedy repair of a closed vertex walk into a strongly simple circuit."""
    cyc = list(walk)
    changed = True
    guard = 0
    while changed:
        guard += 1
        if guard > 10 * len(walk) + 50:
            raise ValueError("could not repair circuit to strong simplicity")
        changed = False
        k = len(cyc)
        if k < 4:
            raise ValueError("circuit too short after repair")
        for i in range(k):
            for d in range(2, k - 1):
                j = (i + d) % k
                if spec.adjacent(cyc[i], cyc[j]):
                    # shortcut: drop the arc strictly between i and j (short side)
                    if d <= k - d:
                        drop = [(i + t) % k for t in range(1, d)]
                    else:
                        drop = [(j + t) % k for t in range(1, k - d)]
                    keep = [cyc[t] for t in range(k) if t not in set(drop)]
                    cyc = keep
                    changed = True
                    break
            if changed:
                break
        if not changed:
            for i in range(len(cyc)):
                if not spec.adjacent(cyc[i], cyc[(i + 1) % len(cyc)]):
                    raise ValueError("circuit disconnected during repair")
    return cyc
