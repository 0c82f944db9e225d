"""Annulus circuits, quad classes, sub-quads, and the self-duality facts."""

import numpy as np
import pytest

from rswlab.lattice import Annulus, Box, GridGeometry, UNION_JACK
from rswlab.topology import (
    Configuration,
    annulus_slit_quad,
    is_glued,
    quad_in_class,
    rect_quad,
    subquad_in_annulus,
    surrounds_annulus,
    traversal_exists,
)


def _box_config(n, fill=1):
    grid = GridGeometry(UNION_JACK, -n, -n, 2 * n + 1, 2 * n + 1)
    return Configuration(grid=grid,
                         signs=np.full((grid.nx, grid.ny), fill, dtype=np.int8),
                         box=Box(n))


def test_all_positive_surrounds():
    cfg = _box_config(6, 1)
    assert surrounds_annulus(cfg, Annulus((0, 0), 2, 6), 1)
    assert not surrounds_annulus(cfg, Annulus((0, 0), 2, 6), -1)


def test_blocking_column_breaks_circuit():
    # a full-height negative column on the innermost shell cuts every circuit
    cfg = _box_config(6, 1)
    x = cfg.grid.index((3, 0))[0]
    cfg.signs[x, :] = -1
    assert not surrounds_annulus(cfg, Annulus((0, 0), 2, 6), 1)
    # one shell further out it no longer does: the ring passes inside it
    cfg2 = _box_config(6, 1)
    x = cfg2.grid.index((4, 0))[0]
    cfg2.signs[x, :] = -1
    assert surrounds_annulus(cfg2, Annulus((0, 0), 2, 6), 1)


def test_detectors_cross_validate_on_random_configs():
    """Winding and dual-obstruction detectors agree on 10^4 random
    configurations of A(2,6); any disagreement raises inside the call."""
    ann = Annulus((0, 0), 2, 6)
    grid = GridGeometry(UNION_JACK, -6, -6, 13, 13)
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(10_000):
        signs = (rng.integers(0, 2, (13, 13), dtype=np.int8) * 2 - 1)
        cfg = Configuration(grid=grid, signs=signs, box=Box(6))
        hits += surrounds_annulus(cfg, ann, 1)
    assert hits > 0  # tiny but positive at fair signs on this small annulus


def test_traversal_blocks_circuit_and_vice_versa():
    ann = Annulus((0, 0), 2, 6)
    grid = GridGeometry(UNION_JACK, -6, -6, 13, 13)
    rng = np.random.default_rng(1)
    for _ in range(500):
        signs = (rng.integers(0, 2, (13, 13), dtype=np.int8) * 2 - 1)
        cfg = Configuration(grid=grid, signs=signs, box=Box(6))
        assert surrounds_annulus(cfg, ann, 1) == (not traversal_exists(cfg, ann, -1))


def test_annulus_must_fit():
    cfg = _box_config(4, 1)
    with pytest.raises(ValueError):
        surrounds_annulus(cfg, Annulus((0, 0), 2, 6), 1)


# ---------------------------------------------------------------------------
# quad classes
# ---------------------------------------------------------------------------

def test_slit_quad_is_in_its_class():
    q = annulus_slit_quad((0, 0), 2, 6)
    got = quad_in_class(q, 2, 6, 16)
    assert got.member
    # translated copy (even-parity center) still in class inside a big box
    q2 = annulus_slit_quad((4, -2), 2, 6)
    assert quad_in_class(q2, 2, 6, 16).member
    # but not inside a box too small to contain it
    assert not quad_in_class(q2, 2, 6, 8).member
    # odd-parity centers cannot carry the ring circuit
    with pytest.raises(ValueError):
        annulus_slit_quad((3, -2), 2, 6)


def test_small_rectangle_in_wide_class_and_out_of_wider():
    # crossings of a 3-column quad sweep Chebyshev distance exactly 2, so a
    # west-centered annulus with R - r = 4 is traversed by all of them ...
    q = rect_quad(4, 6)
    got = quad_in_class(q, 2, 6, 16, exact_limit=25)
    assert got.exact and got.member
    # ... while R - r = 5 demands a bigger sweep than any crossing has
    got = quad_in_class(q, 2, 7, 16, exact_limit=25)
    assert got.exact and not got.member


def test_exact_and_sufficient_agree_on_small_quads():
    # sufficient-condition witnesses imply exact membership where both run
    q = annulus_slit_quad((0, 0), 2, 6)
    exact = quad_in_class(q, 2, 6, 16, exact_limit=200)
    suff = quad_in_class(q, 2, 6, 16, exact_limit=0)
    assert exact.exact and not suff.exact
    assert suff.member
    assert exact.member


def test_degenerate_class_precondition():
    q = rect_quad(4, 6)
    with pytest.raises(ValueError):
        quad_in_class(q, 0, 2, 16)
    with pytest.raises(ValueError):
        quad_in_class(q, 3, 2, 16)


# ---------------------------------------------------------------------------
# sub-quad in annulus
# ---------------------------------------------------------------------------

def test_subquad_of_slit_quad():
    q = annulus_slit_quad((0, 0), 2, 8)
    x, sub = subquad_in_annulus(q, 2, 8, 16)
    assert max(abs(x[0]), abs(x[1])) <= 16
    assert set(sub.circuit) <= set(q.circuit) | set(q.interior)
    band = [max(abs(v[0] - x[0]), abs(v[1] - x[1])) for v in sub.gamma]
    assert set(band) == {3}      # inner arc on the shell just outside Lambda_r
    band_p = [max(abs(v[0] - x[0]), abs(v[1] - x[1])) for v in sub.gamma_prime]
    assert set(band_p) == {8}    # outer arc on the outer shell


def test_subquad_gluing_transfer():
    """is_glued(subquad) implies is_glued(quad) on random configurations
    (positively biased so that gluings actually occur)."""
    q = annulus_slit_quad((0, 0), 2, 8)
    x, sub = subquad_in_annulus(q, 2, 8, 16)
    g = q.grid
    rng = np.random.default_rng(7)
    transfers = 0
    for _ in range(1000):
        signs = np.where(rng.random((g.nx, g.ny)) < 0.85, 1, -1).astype(np.int8)
        cfg = Configuration(grid=g, signs=signs)
        if is_glued(cfg, sub):
            transfers += 1
            assert is_glued(cfg, q)
    assert transfers > 100


def test_subquad_requires_class_membership():
    q = rect_quad(4, 6)
    with pytest.raises(ValueError):
        subquad_in_annulus(q, 1, 2, 16)
