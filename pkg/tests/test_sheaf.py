"""Presheaf of stable groups, stalks, sections, resolution, intervals."""

import math

import pytest

from levelsheaf.maps import TargetRegion, level_betti
from levelsheaf.meshes import circle_height, sphere_height, torus_height
from levelsheaf.sheaf import (
    BasisCover,
    build_presheaf,
    germ_of,
    germ_resolution,
    interval_section_correspondence,
    maximal_sections,
    resolution_sheaf,
    sections_over,
    stalk_at,
)
from levelsheaf.zigzag import build_zigzag, interval_decomposition, span_and_persistence

import functools


@functools.lru_cache(maxsize=None)
def torus_presheaf():
    f = torus_height(16, 8)
    cover = BasisCover.for_map(f, 1.0)
    return f, build_presheaf(f, cover)


@functools.lru_cache(maxsize=None)
def circle_presheaf():
    f = circle_height(48)
    cover = BasisCover.for_map(f, 0.25)
    return f, build_presheaf(f, cover)


def test_cover_construction():
    f = torus_height(16, 8)
    cover = BasisCover.for_map(f, 1.0)
    assert cover.centers[0] <= -5.0 and cover.centers[-1] >= 5.0
    regions = cover.regions()
    # consecutive regions overlap, so the union covers the working range
    for i in range(cover.count - 1):
        assert cover.overlap_regions(i, i + 1)
    with pytest.raises(ValueError):
        BasisCover.for_map(f, -1.0)


def test_presheaf_regular_ranks_match_levels():
    f, P = torus_presheaf()
    for i, c in enumerate(P.cover.centers):
        g = P.groups[i]
        lo, hi = c - P.cover.radius, c + P.cover.radius
        crits = [-3.0, -1.0, 1.0, 3.0]
        if any(lo < cc < hi for cc in crits):
            continue
        if hi <= -3.0 or lo >= 3.0:
            assert g.total_rank() == 0
        else:
            betti = level_betti(f, c + 0.0131)
            assert g.rank(1) == betti[0]   # components of the level
            assert g.rank(0) == betti[1]   # circles of the level


def test_presheaf_composition_law_spot_checks():
    _, P = torus_presheaf()
    assert P.verify_composition(samples=2) >= 1


def test_sections_single_region_match_group():
    _, P = torus_presheaf()
    i = P.cover.count // 2
    secs = sections_over(P, (i,))
    assert len(secs) == P.groups[i].total_rank()


def test_sections_disjoint_union_direct_sum():
    _, P = torus_presheaf()
    lo_i, hi_i = 3, P.cover.count - 4
    assert not P.cover.region(lo_i).intersections(P.cover.region(hi_i))
    secs = sections_over(P, (lo_i, hi_i))
    want = P.groups[lo_i].total_rank() + P.groups[hi_i].total_rank()
    assert len(secs) == want


def test_sections_glue_across_overlaps():
    _, P = torus_presheaf()
    inside = [i for i, c in enumerate(P.cover.centers) if -0.9 < c < 0.9]
    run = tuple(range(min(inside), max(inside) + 1))
    secs = sections_over(P, run, p=1)
    # two level components glue to two independent section threads
    assert len(secs) == 2


def test_maximal_sections_sphere():
    f = sphere_height(4, 6)
    cover = BasisCover.for_map(f, 0.6)
    P = build_presheaf(f, cover, verify=False)
    maxs = maximal_sections(P)
    p1 = [s for s in maxs if s.p == 1]
    assert len(p1) == 1
    hull = p1[0].hull
    assert abs(hull.a - (-1.0)) <= cover.delta + 1e-9
    assert abs(hull.b - 1.0) <= cover.delta + 1e-9
    assert all(s.maximal for s in maxs)


def test_maximal_sections_torus_domains():
    _, P = torus_presheaf()
    maxs = maximal_sections(P)
    for p in (0, 1):
        hulls = sorted((s.hull.a, s.hull.b) for s in maxs if s.p == p)
        assert hulls == [(-3.0, 3.0), (-1.0, 1.0)] or \
            hulls == [(-3.0, 3.0)] + [(-1.0, 1.0)] or \
            hulls == sorted([(-3.0, 3.0), (-1.0, 1.0)])
        assert len(hulls) == 2


def test_stalk_regular_matches_level():
    f, P = circle_presheaf()
    stalk = stalk_at(P, 0.05)
    assert stalk.total_rank() == level_betti(f, 0.05)[0]


def test_stalk_beyond_range_zero():
    _, P = circle_presheaf()
    stalk = stalk_at(P, 1.7)
    assert stalk.total_rank() == 0


def test_stalk_at_saddle_drops_rank():
    f, P = torus_presheaf()
    regular = stalk_at(P, 0.11)
    saddle = stalk_at(P, 1.0)
    assert regular.ranks() == {0: 2, 1: 2}
    assert saddle.ranks() == {0: 1, 1: 1}
    assert any(saddle.rank(p) < regular.rank(p) for p in (0, 1))


def test_distinct_germs_extend_to_distinct_sections():
    # over the line no connected piece of the section space double-covers:
    # distinct basis sections carry distinct overlap germ data
    _, P = torus_presheaf()
    i = [k for k, c in enumerate(P.cover.centers) if abs(c) < 0.4][0]
    secs = sections_over(P, (i - 1, i, i + 1), p=1)
    seen = set()
    for s in secs:
        key = tuple(sorted((k, tuple(sorted(v.items())))
                    for k, v in s.overlap_classes.items()))
        assert key not in seen
        seen.add(key)


def test_resolution_infinity_is_identity():
    _, P = torus_presheaf()
    R = resolution_sheaf(P, math.inf)
    for i in range(P.cover.count):
        assert R.ranks(i) == P.groups[i].ranks()


def test_resolution_monotone_filtration():
    _, P = torus_presheaf()
    r_small = resolution_sheaf(P, 1.0 / 2.0)   # dilate by 2
    r_big = resolution_sheaf(P, 1.0)           # dilate by 1
    for i in range(P.cover.count):
        for p in (0, 1):
            assert r_small.rank(i, p) <= r_big.rank(i, p)
            for col in r_small.blocks[i].get(p, []):
                assert r_big.contains(i, p, col)


def test_germ_resolution_zero_is_grid_minimum():
    from levelsheaf.sheaf import Germ
    f, P = circle_presheaf()
    stalk = stalk_at(P, 0.125)
    zero = Germ(stalk=stalk, coords={0: {}})
    (lo, hi) = f.value_range()
    max_rho = (hi - lo) + 2 * P.cover.radius
    grid_min = 1.0 / (P.cover.delta * math.floor(max_rho / P.cover.delta))
    assert germ_resolution(P, zero) == grid_min


def test_germ_resolution_short_bar():
    f, P = circle_presheaf()
    stalk = stalk_at(P, 0.125)
    # level-point classes die at the extremes: barcode span is (-1, 1)
    secs = [s for s in maximal_sections(P)
            if s.p == 0 and stalk_inside(s, stalk)]
    germs = [germ_of(P, stalk, s) for s in secs]
    nonzero = [g for g in germs if g.coords[0]]
    assert nonzero
    rs = sorted(germ_resolution(P, g) for g in nonzero)
    persistence = 2.0
    want = 2.0 / persistence
    assert any(abs(1.0 / r - 1.0 / want) <= P.cover.delta + 1e-9 for r in rs)


def stalk_inside(section, stalk):
    if len(section.domain) == 1:
        from levelsheaf.sheaf import BasisCover  # noqa: F401
        return True
    return any(True for _ in section.overlap_classes)


def test_interval_section_correspondence_circle():
    f = circle_height(48)
    report = interval_section_correspondence(f)
    assert report.ok
    assert len(report.pairs) == 2
    for iv, sec, dist in report.pairs:
        assert dist <= report.delta + 1e-9


def test_interval_section_correspondence_torus():
    f = torus_height(16, 8)
    report = interval_section_correspondence(f)
    assert report.ok
    Z = build_zigzag(f)
    long_ivs = [iv for iv in interval_decomposition(Z)
                if span_and_persistence(iv, Z.crit)[1] > 0]
    assert len(report.pairs) == sum(iv.multiplicity for iv in long_ivs)


def test_correspondence_constant_map_trivial():
    from levelsheaf.meshes import circle_complex
    from levelsheaf.maps import PLMap
    K = circle_complex(5)
    f = PLMap(K, "real", [1.0] * 5)
    report = interval_section_correspondence(f)
    assert report.pairs == []
    assert report.unmatched_intervals == []
