"""Symmetric periodic triangulation of the plane with vertices in Z^2.

The default (and only shipped) lattice is the Union-Jack / tetrakis square
tiling encoded on Z^2: every pair of nearest neighbours is adjacent, and every
unit square carries exactly one diagonal, the one joining its two corners of
even coordinate-parity.  Vertices of even parity therefore have degree 8 and
odd-parity vertices degree 4.  This encoding is invariant under translation by
(2,0)/(0,2), rotation by pi/2 about the origin, and horizontal reflection, and
every bounded face is a triangle.

Adjacency is computed on the fly from coordinates; nothing is stored per
vertex, so boxes with sides in the thousands need no adjacency structure.
Batched reachability uses dense boolean grids (see :class:`GridGeometry`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

Vertex = tuple[int, int]

# Neighbour offsets: 4 axial always, 4 diagonal only from even-parity vertices.
_AXIAL = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIAGONAL = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class LatticeSpec:
    """Immutable description of a symmetric triangulation.

    ``adjacent`` must be symmetric, irreflexive, and invariant under the
    square-lattice symmetry group (translations by ``period``, rotation by
    pi/2 about the origin, horizontal reflection).
    """

    name: str
    period: int
    degree_max: int
    adjacent: Callable[[Vertex, Vertex], bool]
    neighbor_offsets: Callable[[Vertex], tuple[tuple[int, int], ...]]


def _uj_adjacent(v: Vertex, w: Vertex) -> bool:
    dx = abs(v[0] - w[0])
    dy = abs(v[1] - w[1])
    if dx + dy == 1:
        return True
    if dx == 1 and dy == 1:
        return (v[0] + v[1]) % 2 == 0  # diagonal edges join even-parity pairs
    return False


def _uj_offsets(v: Vertex) -> tuple[tuple[int, int], ...]:
    if (v[0] + v[1]) % 2 == 0:
        return _AXIAL + _DIAGONAL
    return _AXIAL


UNION_JACK = LatticeSpec(
    name="union-jack",
    period=2,
    degree_max=8,
    adjacent=_uj_adjacent,
    neighbor_offsets=_uj_offsets,
)

_LATTICES = {"union-jack": UNION_JACK}


def get_lattice(name: str) -> LatticeSpec:
    try:
        return _LATTICES[name]
    except KeyError:
        raise ValueError(f"unknown lattice {name!r}; available: {sorted(_LATTICES)}")


@dataclass(frozen=True)
class Box:
    """The box Lambda_n = [-n, n]^2 intersected with the vertex set."""

    half_side: int

    def __post_init__(self):
        if self.half_side < 0:
            raise ValueError("half_side must be >= 0")

    @property
    def n(self) -> int:
        return self.half_side

    def __contains__(self, v: Vertex) -> bool:
        return max(abs(v[0]), abs(v[1])) <= self.half_side

    def vertices(self) -> Iterable[Vertex]:
        n = self.half_side
        for x in range(-n, n + 1):
            for y in range(-n, n + 1):
                yield (x, y)

    def size(self) -> int:
        return (2 * self.half_side + 1) ** 2


@dataclass(frozen=True)
class Annulus:
    """x + A(r, R) with A(r, R) = [-R, R]^2 minus [-r, r]^2 (sup-norm shells r+1..R)."""

    center: Vertex
    inner: int
    outer: int

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise ValueError("require 0 < inner < outer")

    def __contains__(self, v: Vertex) -> bool:
        d = max(abs(v[0] - self.center[0]), abs(v[1] - self.center[1]))
        return self.inner < d <= self.outer


def neighbors(spec: LatticeSpec, v: Vertex) -> list[Vertex]:
    """All lattice neighbours of ``v``, ordered lexicographically by (x, y)."""
    out = [(v[0] + dx, v[1] + dy) for dx, dy in spec.neighbor_offsets(v)]
    out.sort()
    return out


def graph_distance(
    spec: LatticeSpec,
    v: Vertex,
    w: Vertex,
    region: Optional[set[Vertex]] = None,
) -> Optional[int]:
    """BFS distance from v to w; paths restricted to ``region`` when given.

    Returns None when w is unreachable from v inside the region.
    """
    if region is not None and (v not in region or w not in region):
        raise ValueError("endpoints must lie in the search region")
    if v == w:
        return 0
    seen = {v}
    frontier = deque([(v, 0)])
    while frontier:
        u, d = frontier.popleft()
        for x in neighbors(spec, u):
            if x == w:
                return d + 1
            if x in seen or (region is not None and x not in region):
                continue
            seen.add(x)
            frontier.append((x, d + 1))
    return None


def set_distance(spec: LatticeSpec, v: Vertex, targets: set[Vertex]) -> int:
    """Unrestricted graph distance from v to a nonempty vertex set."""
    if v in targets:
        return 0
    seen = {v}
    frontier = deque([(v, 0)])
    while frontier:
        u, d = frontier.popleft()
        for x in neighbors(spec, u):
            if x in targets:
                return d + 1
            if x not in seen:
                seen.add(x)
                frontier.append((x, d + 1))
    raise ValueError("target set unreachable (empty?)")


def r_neighborhood(
    spec: LatticeSpec, U: set[Vertex], r: int, ambient: set[Vertex]
) -> set[Vertex]:
    """U_r within ambient: vertices of ambient at graph distance <= r from U.

    Distances are measured in the full lattice, matching the definition of
    U_r as a plain metric neighbourhood; only the result is clipped to
    ambient.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if not U <= ambient:
        raise ValueError("U must be a subset of ambient")
    current = set(U)
    reached = set(U)
    for _ in range(r):
        nxt = set()
        for v in current:
            for w in neighbors(spec, v):
                if w not in reached:
                    reached.add(w)
                    nxt.add(w)
        if not nxt:
            break
        current = nxt
    return reached & ambient


class GridGeometry:
    """Dense-grid view of a rectangle of the lattice, for vectorised floods.

    Grids are boolean arrays indexed ``[..., ix, iy]`` with vertex
    ``(x0 + ix, y0 + iy)``.  ``dilate`` expands a set by one lattice step,
    honouring the parity rule for diagonal edges; arbitrary leading batch
    axes are supported.
    """

    def __init__(self, spec: LatticeSpec, x0: int, y0: int, nx: int, ny: int):
        if spec.name != "union-jack":
            raise ValueError("grid geometry currently implements the union-jack rule")
        self.spec = spec
        self.x0, self.y0, self.nx, self.ny = x0, y0, nx, ny
        ix = np.arange(x0, x0 + nx)[:, None]
        iy = np.arange(y0, y0 + ny)[None, :]
        self.even = ((ix + iy) % 2 == 0)

    def contains(self, v: Vertex) -> bool:
        return 0 <= v[0] - self.x0 < self.nx and 0 <= v[1] - self.y0 < self.ny

    def index(self, v: Vertex) -> tuple[int, int]:
        return (v[0] - self.x0, v[1] - self.y0)

    def vertex(self, ix: int, iy: int) -> Vertex:
        return (self.x0 + ix, self.y0 + iy)

    def mask_of(self, vertices: Iterable[Vertex]) -> np.ndarray:
        m = np.zeros((self.nx, self.ny), dtype=bool)
        for v in vertices:
            m[self.index(v)] = True
        return m

    def vertices_of(self, mask: np.ndarray) -> list[Vertex]:
        xs, ys = np.nonzero(mask)
        return [(self.x0 + int(x), self.y0 + int(y)) for x, y in zip(xs, ys)]

    @staticmethod
    def _shift(a: np.ndarray, dx: int, dy: int) -> np.ndarray:
        """a translated by (dx, dy) on the last two axes, zero-filled."""
        out = np.zeros_like(a)
        nx, ny = a.shape[-2], a.shape[-1]
        sx = slice(max(dx, 0), nx + min(dx, 0))
        sy = slice(max(dy, 0), ny + min(dy, 0))
        tx = slice(max(-dx, 0), nx + min(-dx, 0))
        ty = slice(max(-dy, 0), ny + min(-dy, 0))
        out[..., sx, sy] = a[..., tx, ty]
        return out

    def dilate(self, mask: np.ndarray) -> np.ndarray:
        """One-step neighbourhood of ``mask`` (excluding mask itself is not
        guaranteed; union with the input if closure is wanted)."""
        out = np.zeros_like(mask)
        for dx, dy in _AXIAL:
            out |= self._shift(mask, dx, dy)
        diag_src = mask & self.even  # diagonal edges live on the even sublattice
        for dx, dy in _DIAGONAL:
            out |= self._shift(diag_src, dx, dy)
        return out

    def flood(self, seeds: np.ndarray, allowed: np.ndarray) -> np.ndarray:
        """Connected closure of ``seeds`` inside ``allowed`` (seeds clipped too)."""
        cur = seeds & allowed
        while True:
            nxt = cur | (self.dilate(cur) & allowed)
            if (nxt == cur).all():
                return cur
            cur = nxt

    def components(self, allowed: np.ndarray) -> list[np.ndarray]:
        """Connected components of the allowed set, as masks."""
        remaining = allowed.copy()
        comps = []
        while remaining.any():
            ix, iy = np.argwhere(remaining)[0]
            seed = np.zeros_like(allowed)
            seed[ix, iy] = True
            comp = self.flood(seed, remaining)
            comps.append(comp)
            remaining &= ~comp
        return comps
