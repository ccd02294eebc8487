"""The presheaf of stable groups on a finite basis of target regions, its
stalks and germs, sections and maximal sections, and the resolution
filtration.

All sheaf objects here are finite: the basis is a grid of equal regions
covering the target (a bounded working range for the line, the whole
circle otherwise), sections are compatible families over such regions, and
stalks are computed by shrinking until two nested restrictions are
isomorphisms.  Construction is read-only over the underlying map caches, so
a built model can be queried concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DilationExceedsTarget, LevelsheafError, StabilizationFailed
from .intersect import (
    _first_valid,
    _restriction_blocks,
    psi_degrees,
    stable_group,
)
from .linalg import (
    Gf2Solver,
    SparseMatrix,
    ZSolver,
    bits_from_column,
    gf2_columns,
    kernel_basis,
)
from .linalg import rank as matrix_rank
from .maps import CIRCLE, REAL, TargetRegion, circ, map_at_level
from .zigzag import build_zigzag, interval_decomposition, span_and_persistence


@dataclass(frozen=True)
class BasisCover:
    """Equal open regions with centres on a delta grid covering the target.

    For the line the grid spans a bounded working range around the map's
    values; for the circle the radius must stay below a half turn so every
    region is a proper arc.
    """

    target: str
    delta: float
    radius: float
    centers: tuple
    lo: float = 0.0
    hi: float = 0.0

    @classmethod
    def for_map(cls, f, delta, radius=None, margin=None):
        radius = delta if radius is None else radius
        if delta <= 0 or radius < delta / 2.0:
            raise ValueError("need delta > 0 and radius >= delta/2 to cover")
        if f.target == REAL:
            margin = 2 * delta if margin is None else margin
            vlo, vhi = f.value_range()
            lo, hi = vlo - margin, vhi + margin
            n = max(1, math.ceil((hi - lo) / delta))
            centers = tuple(lo + i * delta for i in range(n + 1))
            return cls(REAL, delta, radius, centers, lo, hi)
        if f.target == CIRCLE:
            if radius >= 0.5:
                raise ValueError("circle regions must be shorter than a half turn")
            n = max(3, math.ceil(1.0 / delta))
            centers = tuple(circ(i / n) for i in range(n))
            return cls(CIRCLE, 1.0 / n, radius, centers, 0.0, 1.0)
        raise ValueError("covers need a real or circle target")

    @property
    def count(self):
        return len(self.centers)

    def region(self, i):
        c = self.centers[i]
        if self.target == REAL:
            return TargetRegion.interval(c - self.radius, c + self.radius)
        return TargetRegion.arc(c - self.radius, circ(c + self.radius))

    def regions(self):
        return [self.region(i) for i in range(self.count)]

    def neighbors(self, i):
        out = []
        if self.target == REAL:
            if i > 0:
                out.append(i - 1)
            if i + 1 < self.count:
                out.append(i + 1)
        else:
            out.append((i - 1) % self.count)
            out.append((i + 1) % self.count)
        return [j for j in out if j != i]

    def overlap_regions(self, i, j):
        return self.region(i).intersections(self.region(j))

    def runs(self):
        """Connected unions of basis regions: contiguous index spans, plus
        the full circle when the target wraps."""
        n = self.count
        out = []
        if self.target == REAL:
            for i in range(n):
                for j in range(i, n):
                    out.append(tuple(range(i, j + 1)))
            return out
        for length in range(1, n):
            for start in range(n):
                out.append(tuple((start + k) % n for k in range(length)))
        out.append(tuple(range(n)))
        return out

    def hull(self, indices):
        """The union interval (or arc) of a contiguous run of regions."""
        if self.target == REAL:
            cs = [self.centers[i] for i in indices]
            return TargetRegion.interval(min(cs) - self.radius,
                                         max(cs) + self.radius)
        if len(indices) >= self.count:
            return TargetRegion.whole()
        a = self.centers[indices[0]] - self.radius
        b = self.centers[indices[-1]] + self.radius
        return TargetRegion.arc(a, circ(b))


class PresheafModel:
    """Stable groups of every basis region, with restriction matrices into
    arbitrary subregions computed and cached on demand."""

    def __init__(self, f, cover, ring="z2", max_rounds=4):
        self.map = f
        self.cover = cover
        self.ring = ring
        self.max_rounds = max_rounds
        needed = cover.regions()
        for i in range(cover.count):
            for j in cover.neighbors(i):
                if i < j or cover.target == CIRCLE:
                    needed.extend(cover.overlap_regions(i, j))
        self.level = self._common_level(needed)
        self._groups = {}
        self.groups = [self.group(cover.region(i)) for i in range(cover.count)]
        self._res = {}

    def _common_level(self, regions):
        for k in range(self.max_rounds + 1):
            fk = map_at_level(self.map, k)
            if all(_first_valid(fk, r) is not None for r in regions):
                return k
        raise StabilizationFailed(
            "no refinement level certifies every cover region")

    def group(self, region, level=None):
        """Stable group of any region, at the model's level or deeper."""
        level = self.level if level is None else level
        key = (region.key(), level)
        hit = self._groups.get(key)
        if hit is None:
            x = _first_valid(map_at_level(self.map, level), region)
            if x is None:
                raise LevelsheafError(
                    f"region {region} is not certifiable at level {level}")
            hit = stable_group(self.map, region, self.ring, level=level, x=x)
            self._groups[key] = hit
        return hit

    def group_at_valid_level(self, region):
        for k in range(self.level, self.level + self.max_rounds + 1):
            if _first_valid(map_at_level(self.map, k), region) is not None:
                return self.group(region, k), k
        raise StabilizationFailed(f"no level certifies {region}")

    def restriction(self, outer, inner, level=None):
        """Blocks {p: matrix} of the stable restriction, in image bases."""
        level = self.level if level is None else level
        key = (outer.key(), inner.key(), level)
        hit = self._res.get(key)
        if hit is None:
            g_out = self.group(outer, level)
            g_in = self.group(inner, level)
            blocks, injective = _restriction_blocks(self.map, g_out, g_in,
                                                    self.ring)
            if not injective:
                raise LevelsheafError(
                    f"restriction {outer} -> {inner} failed injectivity")
            hit = blocks
            self._res[key] = hit
        return hit

    def ranks(self):
        return [g.ranks() for g in self.groups]

    def verify_composition(self, samples=3):
        """res over a nested triple must equal the composite of the two
        restriction steps; checked on shrunk overlaps of neighbours."""
        checked = 0
        for i in range(self.cover.count):
            if checked >= samples:
                break
            for j in self.cover.neighbors(i):
                pieces = self.cover.overlap_regions(i, j)
                if not pieces:
                    continue
                v = pieces[0]
                w = _shrink(v)
                u = self.cover.region(i)
                try:
                    uv = self.restriction(u, v)
                    vw = self.restriction(v, w)
                    uw = self.restriction(u, w)
                except (LevelsheafError, StabilizationFailed):
                    continue
                for p in uw:
                    left = (vw[p] @ uv[p])
                    if self.ring == "z2":
                        left = left.mod2()
                    if left != uw[p]:
                        raise LevelsheafError(
                            "restriction composition law failed")
                checked += 1
                break
        return checked


def _shrink(region, factor=0.5):
    if region.kind == "interval":
        c = (region.a + region.b) / 2.0
        h = (region.b - region.a) * factor / 2.0
        return TargetRegion.interval(c - h, c + h)
    length = region.length
    c = circ(region.a + length / 2.0)
    h = length * factor / 2.0
    return TargetRegion.arc(c - h, circ(c + h))


def build_presheaf(f, cover, ring="z2", verify=True):
    """Stable groups over the whole cover; the composition law is spot
    checked on shrunk overlap triples unless verify is False."""
    model = PresheafModel(f, cover, ring)
    if verify:
        model.verify_composition()
    return model


# -- stalks and germs ----------------------------------------------------------

@dataclass
class Stalk:
    """The stabilized stable group at a point, with its witness region."""

    x: float
    region: TargetRegion
    group: object
    level: int

    def ranks(self):
        return self.group.ranks()

    def rank(self, p):
        return self.group.rank(p)

    def total_rank(self):
        return self.group.total_rank()


@dataclass
class Germ:
    """An element of a stalk: coordinates per degree in the witness basis.

    The carrying region and its stable coordinates are kept so the germ can
    be re-expressed at deeper refinement levels when needed."""

    stalk: Stalk
    coords: dict
    source_region: object = None
    source_coords: dict = None
    p: int = 0

    def coords_at(self, P, level):
        if level == self.stalk.level or self.source_region is None:
            return self.coords
        g_out = P.group(self.source_region, level)
        g_in = P.group(self.stalk.region, level)
        blocks, _ = _restriction_blocks(P.map, g_out, g_in, P.ring)
        return {self.p: blocks[self.p].apply(self.source_coords, P.ring)}


def stalk_at(P, x, shrink=0.7, max_steps=8):
    """Direct limit at x, realized by shrinking regions around x until two
    consecutive restrictions are isomorphisms."""
    cover = P.cover
    rho = cover.radius
    regions = []
    for s in range(max_steps):
        r = rho * (shrink ** s)
        if cover.target == REAL:
            regions.append(TargetRegion.interval(x - r, x + r))
        else:
            regions.append(TargetRegion.arc(x - r, circ(x + r)))
    iso_run = 0
    for s in range(len(regions) - 1):
        outer, inner = regions[s], regions[s + 1]
        try:
            g_out, lv_out = P.group_at_valid_level(outer)
            g_in, lv_in = P.group_at_valid_level(inner)
            lv = max(lv_out, lv_in)
            blocks, injective = _restriction_blocks(
                P.map, P.group(outer, lv), P.group(inner, lv), P.ring)
        except (LevelsheafError, StabilizationFailed):
            break
        if injective and _blocks_iso(blocks, P.ring):
            iso_run += 1
            if iso_run == 2:
                g, lv = P.group_at_valid_level(regions[s + 1])
                return Stalk(x=x, region=regions[s + 1], group=g, level=lv)
        else:
            iso_run = 0
    raise StabilizationFailed(
        f"stalk at {x} did not stabilize within {max_steps} shrinks")


def _blocks_iso(blocks, ring):
    for M in blocks.values():
        if M.rows != M.cols:
            return False
        if matrix_rank(M, ring) != M.cols:
            return False
    return True


def germ_of(P, stalk, section):
    """Germ of a section at a stalk point inside its domain."""
    for idx in section.domain:
        region = P.cover.region(idx)
        if region.contains_point(stalk.x):
            g_reg, lv_reg = P.group_at_valid_level(region)
            lv = max(lv_reg, stalk.level)
            blocks = {}
            g_out = P.group(region, lv)
            g_in = P.group(stalk.region, lv)
            blocks, injective = _restriction_blocks(P.map, g_out, g_in, P.ring)
            coords = blocks[section.p].apply(section.data[idx], P.ring)
            return Germ(stalk=stalk, coords={section.p: coords})
    raise ValueError("stalk point is outside the section domain")


# -- sections -------------------------------------------------------------------
#
# Sections are computed on the cover's own level/slab structure: overlaps
# of consecutive regions are regular slices carrying stable groups, the
# regions act as slabs carrying their full homology, and the inclusions
# between them form an alternating diagram.  Sections over a union of
# regions are the compatible tuples of that diagram; maximal sections are
# its interval summands.  This avoids choosing cohomology representatives
# inside regions that straddle a critical value, where such choices are
# genuinely ambiguous.

class SectionModel:
    """A compatible family over a union of basis regions, in one degree.

    `overlap_classes` carries the stable coordinates on the overlaps of
    consecutive domain regions (the germ data); `region_classes` the induced
    homology coordinates inside each region of the domain.
    """

    def __init__(self, p, domain, hull, overlap_classes, region_classes,
                 maximal=False):
        self.p = p
        self.domain = tuple(domain)
        self.hull = hull
        self.overlap_classes = overlap_classes
        self.region_classes = region_classes
        self.maximal = maximal

    def __repr__(self):
        return (f"SectionModel(p={self.p}, domain={self.domain}, "
                f"hull={self.hull}, maximal={self.maximal})")


def _overlap_between(cover, i, j):
    pieces = cover.overlap_regions(i, j)
    if len(pieces) != 1:
        raise LevelsheafError(
            f"regions {i} and {j} do not overlap in a single piece")
    return pieces[0]


class _CoverDiagram:
    """Inclusion diagram of one degree p over a contiguous run of regions.

    Positions alternate overlap, region, overlap, ... with virtual empty
    overlaps padding both ends, so the arrows all point from overlaps into
    regions.  Overlap positions carry the image basis of the intersection
    map; region positions carry the full homology of the preimage.
    """

    def __init__(self, P, indices, p):
        self.P = P
        self.indices = tuple(indices)
        self.p = p
        f = P.map
        qdim = f.domain.dimension - 1 - p if f.target != "point" else \
            f.domain.dimension - p
        self.qdim = qdim
        fk = map_at_level(f, P.level)
        from .complexes import homology, reindex
        from .maps import preimage_at_level
        self.region_bases = []
        self.region_F = []
        for i in self.indices:
            F = preimage_at_level(f, P.cover.region(i), P.level)
            self.region_F.append(F)
            self.region_bases.append(homology(F, qdim, P.ring))
        self.overlap_slices = []
        for a in range(len(self.indices) - 1):
            i, j = self.indices[a], self.indices[a + 1]
            piece = _overlap_between(P.cover, i, j)
            self.overlap_slices.append(P.group(piece).slices[p])
        if (P.cover.target == CIRCLE
                and len(self.indices) == P.cover.count):
            i, j = self.indices[-1], self.indices[0]
            piece = _overlap_between(P.cover, i, j)
            self.wrap_slice = P.group(piece).slices[p]
        else:
            self.wrap_slice = None

    def _incl_columns(self, slice_, region_pos):
        """Columns of the inclusion of an overlap's stable classes into the
        homology of a neighbouring region, as GF(2) bits."""
        basis = self.region_bases[region_pos]
        F_big = self.region_F[region_pos]
        from .complexes import reindex
        cols = []
        target = slice_.psi.target
        gens = target.representatives + target.torsion_reps
        for coords in slice_.image_basis:
            chain = None
            for k, v in coords.items():
                piece = gens[k].scale(v)
                chain = piece if chain is None else chain + piece
            if chain is None:
                cols.append(0)
                continue
            lifted = reindex(chain, F_big)
            out = basis.express(lifted)
            assert out is not None
            bits = 0
            for idx, v in enumerate(out):
                if v % 2:
                    bits |= 1 << idx
            cols.append(bits)
        return cols

    def row(self):
        """The run as a zigzag row (real targets, or circle arcs that do
        not wrap)."""
        n = len(self.indices)
        dims = [0]
        for a in range(n):
            dims.append(self.region_bases[a].betti)
            dims.append(self.overlap_slices[a].rank if a < n - 1 else 0)
        forwards = [[]]
        backwards = []
        for a in range(n - 1):
            sl = self.overlap_slices[a]
            backwards.append(self._incl_columns(sl, a))
            forwards.append(self._incl_columns(sl, a + 1))
        backwards.append([])
        from .zigzag import ZigzagRow
        return ZigzagRow(dims=dims, forwards=forwards, backwards=backwards)

    def section_basis(self):
        """Kernel basis of the compatibility constraints: one unknown block
        per overlap (stable coords), agreement inside every shared region."""
        n = len(self.indices)
        if n == 1:
            g = self.P.groups[self.indices[0]]
            rank = g.rank(self.p)
            return [({0: {k: 1}}, None) for k in range(rank)], rank
        slices = list(self.overlap_slices)
        wrap = self.wrap_slice
        blocks = [s.rank for s in slices] + ([wrap.rank] if wrap else [])
        offs = [0]
        for b in blocks:
            offs.append(offs[-1] + b)
        incl = {}
        for a, sl in enumerate(slices):
            incl[(a, a)] = self._incl_columns(sl, a)
            incl[(a, a + 1)] = self._incl_columns(sl, a + 1)
        if wrap:
            w = len(slices)
            incl[(w, len(self.indices) - 1)] = self._incl_columns(wrap,
                                                                  n - 1)
            incl[(w, 0)] = self._incl_columns(wrap, 0)
        # constraints: for each region with two flanking overlaps, the two
        # inclusion images agree in its homology
        ent = []
        row_off = 0
        def add_rows(o_left, o_right, region_pos):
            nonlocal row_off
            nrows = self.region_bases[region_pos].betti
            for c, bits in enumerate(incl[(o_left, region_pos)]):
                for r in _bit_rows(bits):
                    ent.append((row_off + r, offs[o_left] + c, 1))
            for c, bits in enumerate(incl[(o_right, region_pos)]):
                for r in _bit_rows(bits):
                    ent.append((row_off + r, offs[o_right] + c, 1))
            row_off += nrows
        for a in range(1, n - 1):
            add_rows(a - 1, a, a)
        if wrap:
            w = len(slices)
            add_rows(w, 0, 0)
            add_rows(n - 2, w, n - 1)
        A = SparseMatrix(row_off, offs[-1], _dedup(ent))
        kernel = kernel_basis(A, "z2")
        sections = []
        for vec in kernel:
            data = {}
            for a in range(len(blocks)):
                lo, hi = offs[a], offs[a + 1]
                data[a] = {k - lo: v for k, v in vec.items() if lo <= k < hi}
            sections.append((data, None))
        return sections, len(sections)


def _bit_rows(bits):
    out = []
    while bits:
        out.append(_lsb_local(bits))
        bits &= bits - 1
    return out


def _lsb_local(x):
    return (x & -x).bit_length() - 1


def _dedup(entries):
    acc = {}
    for r, c, v in entries:
        acc[(r, c)] = (acc.get((r, c), 0) + v) % 2
    return [(r, c, v) for (r, c), v in acc.items() if v]


def _section_from_tuple(P, diagram, data):
    indices = diagram.indices
    overlap_classes = {}
    region_classes = {}
    for a, coords in data.items():
        if a < len(diagram.overlap_slices):
            overlap_classes[(indices[a], indices[a + 1])] = coords
        else:
            overlap_classes[(indices[-1], indices[0])] = coords
    for pos, i in enumerate(indices):
        if pos < len(diagram.overlap_slices):
            sl = diagram.overlap_slices[pos]
            cols = diagram._incl_columns(sl, pos)
            bits = 0
            for k, v in data.get(pos, {}).items():
                if v % 2:
                    bits ^= cols[k]
            region_classes[i] = {r: 1 for r in _bit_rows(bits)}
        elif pos - 1 >= 0 and pos - 1 in data:
            sl = diagram.overlap_slices[pos - 1]
            cols = diagram._incl_columns(sl, pos)
            bits = 0
            for k, v in data.get(pos - 1, {}).items():
                if v % 2:
                    bits ^= cols[k]
            region_classes[i] = {r: 1 for r in _bit_rows(bits)}
    return overlap_classes, region_classes


def sections_over(P, indices, p=None):
    """Basis of the sections over a union of basis regions.

    Disconnected unions split into their connected runs and contribute
    independent blocks.  For a single region the sections are the stable
    group itself.
    """
    if P.ring != "z2":
        raise LevelsheafError("section computations run over GF(2)")
    degrees = list(psi_degrees(P.map)) if p is None else [p]
    runs = _connected_runs(P.cover, tuple(indices))
    out = []
    for deg in degrees:
        for run in runs:
            diagram = _CoverDiagram(P, run, deg)
            basis, _ = diagram.section_basis()
            for data, _ in basis:
                if len(run) == 1:
                    overlap_classes = {}
                    region_classes = {run[0]: data[0]}
                else:
                    overlap_classes, region_classes = _section_from_tuple(
                        P, diagram, data)
                out.append(SectionModel(p=deg, domain=run,
                                        hull=P.cover.hull(run),
                                        overlap_classes=overlap_classes,
                                        region_classes=region_classes))
    return out


def _connected_runs(cover, indices):
    idx = sorted(set(indices))
    if not idx:
        return []
    if cover.target == CIRCLE and len(idx) == cover.count:
        return [tuple(idx)]
    runs = []
    cur = [idx[0]]
    for i in idx[1:]:
        if i == cur[-1] + 1:
            cur.append(i)
        else:
            runs.append(tuple(cur))
            cur = [i]
    runs.append(tuple(cur))
    if (cover.target == CIRCLE and len(runs) > 1
            and runs[0][0] == 0 and runs[-1][-1] == cover.count - 1):
        first = runs.pop(0)
        runs[-1] = runs[-1] + first
    return runs


def maximal_sections(P):
    """Maximal sections per degree, one per interval summand of the cover
    diagram, with multiplicity; their domains are the runs of regions the
    summands span.  Summands confined to a single overlap fall below the
    cover resolution and are not representable over basis regions."""
    if P.ring != "z2":
        raise LevelsheafError("section computations run over GF(2)")
    from .zigzag import decompose_row
    cover = P.cover
    n = cover.count
    out = []
    full = tuple(range(n))
    for deg in psi_degrees(P.map):
        if cover.target == CIRCLE:
            diagram = _CoverDiagram(P, full, deg)
            basis, _ = diagram.section_basis()
            for data, _ in basis:
                overlap_classes, region_classes = _section_from_tuple(
                    P, diagram, data)
                out.append(SectionModel(p=deg, domain=full,
                                        hull=TargetRegion.whole(),
                                        overlap_classes=overlap_classes,
                                        region_classes=region_classes,
                                        maximal=True))
            continue
        diagram = _CoverDiagram(P, full, deg)
        row = diagram.row()
        counts = decompose_row(row)
        reps = {run: iter(s for s in sections_over(P, run, deg))
                for run in set(_positions_to_run(b, d, n)
                               for (b, d) in counts
                               if _positions_to_run(b, d, n))}
        for (b, d), mult in sorted(counts.items()):
            run = _positions_to_run(b, d, n)
            if not run:
                continue
            hull = _germ_hull(cover, b, d, run)
            for _ in range(mult):
                rep = next(reps[run], None)
                sec = rep if rep is not None else SectionModel(
                    p=deg, domain=run, hull=hull,
                    overlap_classes={}, region_classes={})
                out.append(SectionModel(p=deg, domain=run,
                                        hull=hull,
                                        overlap_classes=sec.overlap_classes,
                                        region_classes=sec.region_classes,
                                        maximal=True))
    return out


def _germ_hull(cover, b, d, run):
    """Extent of the germ field of an interval summand: the span of its
    covered overlaps, since only overlaps carry germ data; a summand that
    covers no overlap lives on its single region."""
    overlaps = [i for i in range(cover.count - 1) if b <= 2 * i + 2 <= d]
    if not overlaps:
        return cover.hull(run)
    lo_piece = _overlap_between(cover, overlaps[0], overlaps[0] + 1)
    hi_piece = _overlap_between(cover, overlaps[-1], overlaps[-1] + 1)
    return TargetRegion.interval(lo_piece.a, hi_piece.b)


def _positions_to_run(b, d, n):
    """Region indices covered by positions b..d of the padded diagram."""
    lo = max(0, (b - 1 + 1) // 2)
    hi = min(n - 1, (d - 1) // 2)
    if lo > hi:
        return ()
    return tuple(range(lo, hi + 1))

# -- resolution filtration --------------------------------------------------------

def restriction_image(P, outer, inner, level=None):
    """Columns spanning the image of the stable restriction, per degree,
    computed from every cohomology generator of the outer preimage (not
    just preferred quotient representatives), in the inner image bases."""
    level = P.level if level is None else level
    g_out = P.group(outer, level)
    g_in = P.group(inner, level)
    from .intersect import _psi_chain, _source_generators
    from .complexes import reindex
    fk = map_at_level(P.map, level)
    cols = {}
    for p, s_out in g_out.slices.items():
        s_in = g_in.slices[p]
        F_in = s_in.psi.preimage
        out = []
        for gen in _source_generators(s_out.psi.source):
            c_in = reindex(gen, F_in, strict=False)
            z = _psi_chain(fk, F_in, s_in.psi.regular_value, c_in, P.ring)
            coords = s_in.psi.target.express(z)
            assert coords is not None
            y = s_in.express_image({i: v for i, v in enumerate(coords) if v})
            if y is None:
                raise LevelsheafError("restriction image left the stable group")
            out.append(y)
        cols[p] = out
    return cols



class ResolutionSheaf:
    """Per-region subgroups of a presheaf: the classes extending over the
    1/r dilation of each region, together with the inclusion columns."""

    def __init__(self, base, r):
        self.base = base
        self.r = r
        self.blocks = {}
        cover = base.cover
        rho = 0.0 if math.isinf(r) else 1.0 / r
        for i in range(cover.count):
            region = cover.region(i)
            big = dilate_snapped(cover, region, rho)
            if big.kind != "whole" and big == region:
                cols = {p: [{k: 1} for k in range(base.groups[i].rank(p))]
                        for p in psi_degrees(base.map)}
            else:
                _, lv = base.group_at_valid_level(big)
                image = restriction_image(base, big, region, level=lv)
                cols = {}
                for p, raw in image.items():
                    if base.ring == "z2":
                        solver = Gf2Solver()
                        keep = [j for j, col in enumerate(raw)
                                if solver.add_column(bits_from_column(col))]
                        cols[p] = [raw[j] for j in keep]
                    else:
                        cols[p] = raw
            self.blocks[i] = cols

    def rank(self, i, p):
        return len(self.blocks[i].get(p, []))

    def ranks(self, i):
        return {p: len(cols) for p, cols in self.blocks[i].items()}

    def contains(self, i, p, coords):
        """Whether a stable class of region i lies in this subgroup."""
        cols = self.blocks[i].get(p, [])
        nt = self.base.groups[i].rank(p)
        A = SparseMatrix.from_columns(nt, cols)
        if self.base.ring == "z2":
            return Gf2Solver(gf2_columns(A)).contains(bits_from_column(coords))
        return ZSolver(A).solve(coords) is not None


def dilate_snapped(cover, region, rho):
    """Dilate by rho and round outward to the cover grid, saturating at the
    working range on the line and at the whole circle otherwise."""
    if rho == 0.0:
        return region
    if region.kind == "whole":
        return region
    if cover.target == REAL:
        a = region.a - rho
        b = region.b + rho
        a = cover.lo - cover.radius + cover.delta * math.floor(
            (a - (cover.lo - cover.radius)) / cover.delta)
        b = cover.lo + cover.delta * math.ceil((b - cover.lo) / cover.delta)
        lo_cap = cover.lo - cover.radius
        hi_cap = cover.hi + cover.radius
        return TargetRegion.interval(max(a, lo_cap), min(b, hi_cap))
    length = region.length + 2 * rho
    if length >= 1.0:
        return TargetRegion.whole()
    snapped = cover.delta * math.ceil((length - region.length) / (2 * cover.delta))
    if region.length + 2 * snapped >= 1.0:
        return TargetRegion.whole()
    return TargetRegion.arc(region.a - snapped, circ(region.b + snapped))


def resolution_sheaf(P, r):
    """The subpresheaf of classes extending over 1/r dilations."""
    if r <= 0:
        raise ValueError("resolution parameter must be positive")
    return ResolutionSheaf(P, r)


def germ_resolution(P, germ):
    """Smallest grid resolution r with the germ extending over the 1/r
    dilation of its witness region; infinity when even one grid step of
    dilation loses it."""
    stalk = germ.stalk
    cover = P.cover
    if cover.target == REAL:
        max_rho = (cover.hi - cover.lo) + 2 * cover.radius
    else:
        max_rho = 0.5
    steps = int(math.floor(max_rho / cover.delta))
    for k in range(steps, 0, -1):
        rho = k * cover.delta
        big = dilate_snapped(cover, stalk.region, rho)
        try:
            _, lv = P.group_at_valid_level(big)
            lv = max(lv, stalk.level)
            image = restriction_image(P, big, stalk.region, level=lv)
        except (LevelsheafError, StabilizationFailed):
            continue
        ok = True
        for p, coords in germ.coords_at(P, lv).items():
            cols = image.get(p, [])
            nt = P.group(stalk.region, lv).rank(p)
            A = SparseMatrix.from_columns(nt, cols)
            if P.ring == "z2":
                ok = Gf2Solver(gf2_columns(A)).contains(bits_from_column(coords))
            else:
                ok = ZSolver(A).solve(coords) is not None
            if not ok:
                break
        if ok:
            return 1.0 / rho
    return math.inf


# -- intervals versus sections -----------------------------------------------------

@dataclass
class CorrespondenceReport:
    pairs: list
    unmatched_intervals: list
    unmatched_sections: list
    delta: float

    @property
    def ok(self):
        return not self.unmatched_intervals and not self.unmatched_sections


def interval_section_correspondence(f, cover=None, ring="z2", tolerance=None):
    """Match every nonzero-persistence interval of the level-set zigzag with
    a maximal section of the sheaf whose domain agrees with the interval
    span up to one cover resolution.  Mismatches are reported, not raised.
    """
    Z = build_zigzag(f)
    intervals = []
    m = f.domain.dimension
    for iv in interval_decomposition(Z):
        span, pers, flag = span_and_persistence(iv, Z.crit)
        if pers > 0:
            for _ in range(iv.multiplicity):
                intervals.append((iv, span, m - 1 - iv.dim))
    if cover is None:
        crit = Z.crit
        gaps = [b - a for a, b in zip(crit.critical, crit.critical[1:])]
        step = (min(gaps) if gaps else 1.0) / 2.0
        cover = BasisCover.for_map(f, step)
    P = build_presheaf(f, cover, ring, verify=False)
    sections = [s for s in maximal_sections(P)]
    tol = (cover.delta if tolerance is None else tolerance) + 1e-9
    pairs = []
    used = set()
    unmatched = []
    for iv, (lo, hi), p in intervals:
        best = None
        for k, s in enumerate(sections):
            if k in used or s.p != p or s.hull.kind != "interval":
                continue
            d = max(abs(s.hull.a - lo), abs(s.hull.b - hi))
            if d <= tol and (best is None or d < best[0]):
                best = (d, k)
        if best is None:
            unmatched.append((iv, (lo, hi), p))
        else:
            used.add(best[1])
            pairs.append((iv, sections[best[1]], best[0]))
    leftover = [s for k, s in enumerate(sections) if k not in used]
    return CorrespondenceReport(pairs=pairs, unmatched_intervals=unmatched,
                                unmatched_sections=leftover,
                                delta=cover.delta)
