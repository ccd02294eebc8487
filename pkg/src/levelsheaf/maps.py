"""Piecewise-linear maps to the line or the circle, target regions, and
combinatorial preimages.

Circle values are canonicalized into [0,1) with arc length as the metric.
A simplex is considered to map into a region when its whole linear image
does: for the line that is the interval hull of its vertex values, for the
circle the minimal covering arc.  Preimage extraction, barycentric
refinement, and the exact level-set cell complex all live here.

Complexes, maps, and towers are immutable once built; the module-level
caches are only ever extended, so concurrent readers are safe.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

from .complexes import SimplicialComplex
from .errors import (
    AmbiguousGeodesic,
    DomainMismatch,
    NoRegularSample,
    StabilizationFailed,
    XHitsVertexValue,
)
from .linalg import Gf2Solver, SparseMatrix, gf2_columns

REAL, CIRCLE, POINT = "real", "circle", "point"


def circ(v):
    """Canonical circle coordinate in [0, 1)."""
    w = math.fmod(v, 1.0)
    if w < 0:
        w += 1.0
    return 0.0 if w == 1.0 else w


def circ_gap(a, b):
    """Counterclockwise span from a to b in [0, 1)."""
    return circ(b - a)


def circ_dist(a, b):
    g = circ_gap(a, b)
    return min(g, 1.0 - g)


def covering_arc(values):
    """Minimal arc (start, length) containing all circle values."""
    pts = sorted({circ(v) for v in values})
    if not pts:
        raise ValueError("no values")
    if len(pts) == 1:
        return pts[0], 0.0
    best_gap, best_i = -1.0, 0
    n = len(pts)
    for i in range(n):
        gap = circ_gap(pts[i], pts[(i + 1) % n])
        if gap > best_gap:
            best_gap, best_i = gap, i
    start = pts[(best_i + 1) % n]
    return start, 1.0 - best_gap


@dataclass(frozen=True)
class TargetRegion:
    """An open interval of the line, an open arc of the circle, or the
    whole target.  Arcs run counterclockwise from a over length (b-a) mod 1."""

    kind: str
    a: float = 0.0
    b: float = 0.0

    @classmethod
    def interval(cls, a, b):
        if not a < b:
            raise ValueError(f"interval needs a < b, got ({a}, {b})")
        return cls("interval", float(a), float(b))

    @classmethod
    def arc(cls, a, b):
        a, b = circ(a), circ(b)
        length = circ_gap(a, b)
        if length <= 0.0:
            raise ValueError("arc must have positive length")
        return cls("arc", a, b)

    @classmethod
    def whole(cls):
        return cls("whole")

    @property
    def length(self):
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "arc":
            return circ_gap(self.a, self.b)
        return math.inf

    def key(self):
        return (self.kind, self.a, self.b)

    def contains_point(self, x):
        if self.kind == "whole":
            return True
        if self.kind == "interval":
            return self.a < x < self.b
        return 0.0 < circ_gap(self.a, x) < self.length

    def contains_hull(self, lo, hi):
        """Closed interval [lo, hi] inside an open interval region."""
        if self.kind == "whole":
            return True
        if self.kind != "interval":
            raise ValueError("hull test on a non-interval region")
        return self.a < lo and hi < self.b

    def contains_arc(self, start, length):
        if self.kind == "whole":
            return True
        if self.kind != "arc":
            raise ValueError("arc test on a non-arc region")
        off = circ_gap(self.a, start)
        return 0.0 < off and off + length < self.length

    def contains_region(self, other):
        """Whether other is a subset, up to exact endpoint comparison."""
        if self.kind == "whole":
            return True
        if other.kind == "whole":
            return False
        if self.kind != other.kind:
            return False
        if self.kind == "interval":
            return self.a <= other.a and other.b <= self.b
        off = circ_gap(self.a, other.a)
        return off + other.length <= self.length + 1e-12

    def dilate(self, eps):
        if eps < 0:
            raise ValueError("negative dilation")
        if self.kind == "whole" or eps == 0:
            return self
        if self.kind == "interval":
            return TargetRegion.interval(self.a - eps, self.b + eps)
        if self.length + 2 * eps >= 1.0:
            return TargetRegion.whole()
        return TargetRegion.arc(self.a - eps, circ(self.b + eps))

    def intersections(self, other):
        """Common part with another region: a list of disjoint regions."""
        if self.kind == "whole":
            return [other]
        if other.kind == "whole":
            return [self]
        if self.kind != other.kind:
            raise ValueError("regions live on different targets")
        if self.kind == "interval":
            lo, hi = max(self.a, other.a), min(self.b, other.b)
            return [TargetRegion.interval(lo, hi)] if lo < hi else []
        out = []
        base = self.a
        for shift in (-1.0, 0.0, 1.0):
            oa = circ_gap(base, other.a) + shift
            lo, hi = max(0.0, oa), min(self.length, oa + other.length)
            if lo < hi:
                out.append(TargetRegion.arc(circ(base + lo), circ(base + hi)))
        return out


class PLMap:
    """A vertex-valued map from a simplicial complex to the line, circle,
    or point, extended linearly over simplices."""

    __slots__ = ("domain", "target", "values", "__weakref__")

    def __init__(self, domain, target, values=None):
        if target not in (REAL, CIRCLE, POINT):
            raise ValueError(f"unknown target kind {target!r}")
        self.domain = domain
        self.target = target
        if target == POINT:
            self.values = None
            return
        values = tuple(float(v) for v in values)
        if len(values) != domain.vertex_count:
            raise ValueError("one value per vertex of the domain is required")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("vertex values must be finite")
        if target == CIRCLE:
            values = tuple(circ(v) for v in values)
        self.values = values

    def simplex_values(self, s):
        return [self.values[v] for v in s]

    def value_range(self):
        return min(self.values), max(self.values)

    def with_values(self, values):
        return PLMap(self.domain, self.target, values)

    def __repr__(self):
        return f"PLMap(target={self.target}, {self.domain!r})"


def wildness(f, g):
    """Largest vertex-wise target distance between two maps."""
    if f.domain is not g.domain or f.target != g.target:
        raise DomainMismatch("maps must share a domain complex and target")
    if f.target == POINT:
        return 0.0
    if f.target == REAL:
        return max((abs(a - b) for a, b in zip(f.values, g.values)), default=0.0)
    return max((circ_dist(a, b) for a, b in zip(f.values, g.values)), default=0.0)


# -- simplex geometry against regions and samples ---------------------------

def simplex_in_region(values, s, region, target):
    if region.kind == "whole":
        return True
    vals = [values[v] for v in s]
    if target == REAL:
        return region.contains_hull(min(vals), max(vals))
    start, length = covering_arc(vals)
    return region.contains_arc(start, length)


def simplex_crosses(values, s, x, target):
    """Whether the linear image of the closed simplex contains x strictly."""
    vals = [values[v] for v in s]
    if target == REAL:
        return min(vals) < x < max(vals)
    start, length = covering_arc(vals)
    return 0.0 < circ_gap(start, x) < length


def edge_crossing_sign(a, b, x, target):
    """Signed crossing of the value path a -> b over the point x.

    Real paths run monotonically; circle paths take the shorter arc, with
    counterclockwise crossings counted +1.
    """
    if target == REAL:
        if x == a or x == b:
            raise XHitsVertexValue(f"sample {x} hits a vertex value")
        if a < x < b:
            return 1
        if b < x < a:
            return -1
        return 0
    a, b, x = circ(a), circ(b), circ(x)
    if a == b:
        return 0
    if x == a or x == b:
        raise XHitsVertexValue(f"sample {x} hits a vertex value")
    fwd = circ_gap(a, b)
    if fwd == 0.5:
        raise AmbiguousGeodesic(f"values {a} and {b} are antipodal")
    if fwd < 0.5:
        return 1 if circ_gap(a, x) < fwd else 0
    back = 1.0 - fwd
    return -1 if circ_gap(b, x) < back else 0


def _merge_closed(intervals):
    merged = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def _line_gaps(forbidden, a, b):
    """Open gaps of [a, b] minus merged closed intervals, as (mid, half)."""
    out = []
    cur = a

    def push(u, v):
        mid = (u + v) / 2.0
        if u < mid < v:
            out.append((mid, (v - u) / 2.0, u, v))

    for lo, hi in _merge_closed(forbidden):
        lo, hi = max(lo, a), min(hi, b)
        if hi < a or lo > b:
            continue
        if lo > cur:
            push(cur, lo)
        cur = max(cur, hi)
    if b > cur:
        push(cur, b)
    return out


def sample_candidates(f, region, forbidden=None, limit=24):
    """Candidate sample points in the region, most robust first.

    `forbidden` is an optional list of closed value intervals to stay out of
    (for a pair of maps, the per-vertex homotopy tracks); by default only
    the vertex values themselves are avoided.  Candidates are gap midpoints
    ordered by decreasing distance to the region boundary, then by
    decreasing gap width, ties broken towards smaller coordinates.
    """
    if f.target == REAL:
        if forbidden is None:
            forbidden = [(v, v) for v in f.values]
        if region.kind == "whole":
            if not forbidden:
                return [0.0]
            lo = min(i[0] for i in forbidden)
            hi = max(i[1] for i in forbidden)
            if lo == hi:
                return [hi + 1.0]
            gaps = _line_gaps(forbidden, lo, hi)
            gaps.sort(key=lambda g: (-g[1], g[0]))
            return [g[0] for g in gaps[:limit]] or [hi + 1.0]
        a, b = region.a, region.b
        gaps = _line_gaps(forbidden, a, b)
        scored = [(min(m - a, b - m), h, m) for m, h, _, _ in gaps if h > 0]
        scored.sort(key=lambda t: (-t[0], -t[1], t[2]))
        return [m for _, _, m in scored[:limit]]
    # circle target: work in coordinates lifted from the region start
    if forbidden is None:
        forbidden = [(v, v) for v in (f.values or ())]
    if region.kind == "whole":
        if not forbidden:
            return [0.0]
        arcs = []
        base = circ(forbidden[0][0])
        for lo, hi in forbidden:
            t0 = circ_gap(base, lo)
            w = circ_gap(lo, hi)
            if w > 0.5:
                raise ValueError("forbidden arc longer than a half circle")
            arcs.append((t0, t0 + w))
        # unroll one extra period so wrap-around gaps merge correctly
        doubled = arcs + [(lo + 1.0, hi + 1.0) for lo, hi in arcs]
        gaps = _line_gaps(doubled, 0.0, 2.0)
        best = {}
        for m, h, glo, ghi in gaps:
            if h <= 0 or ghi - glo > 1.0:
                continue
            key = round(circ(base + m), 12)
            if key not in best or h > best[key]:
                best[key] = h
        cands = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
        return [circ(k) for k, _ in cands[:limit]] or [circ(base + 0.5)]
    a, length = region.a, region.length
    lifted = []
    for lo, hi in forbidden:
        t0 = circ_gap(a, lo)
        w = circ_gap(lo, hi)
        if w > 0.5:
            raise ValueError("forbidden arc longer than a half circle")
        for shift in (-1.0, 0.0):
            s, e = t0 + shift, t0 + w + shift
            if e > 0.0 and s < length:
                lifted.append((max(s, 0.0), min(e, length)))
    gaps = _line_gaps(lifted, 0.0, length)
    scored = [(min(m, length - m), h, m) for m, h, _, _ in gaps if h > 0]
    scored.sort(key=lambda t: (-t[0], -t[1], t[2]))
    return [circ(a + m) for _, _, m in scored[:limit]]


def regular_sample(f, region, forbidden=None):
    """Most robust admissible sample point in the region."""
    cands = sample_candidates(f, region, forbidden)
    if not cands:
        raise NoRegularSample(f"no admissible sample in {region}")
    return cands[0]


# -- preimages and level sets -----------------------------------------------

def preimage_subcomplex(f, region):
    """Subcomplex of simplices whose whole linear image lies in the region.

    Membership is checked facet-recursively, which keeps the result closed
    under faces even on very coarse circle-valued meshes.
    """
    K = f.domain
    if f.target == POINT or region.kind == "whole":
        return K.subcomplex(K.all_simplices())
    kept = []
    kept_sets = []
    for p, level in enumerate(K.simplices):
        good = set()
        for s in level:
            if not simplex_in_region(f.values, s, region, f.target):
                continue
            if p > 0:
                lower = kept_sets[p - 1]
                if any(s[:i] + s[i + 1:] not in lower for i in range(len(s))):
                    continue
            good.add(s)
        kept_sets.append(good)
        kept.extend(good)
    return K.subcomplex(kept)


def level_betti(f, x, max_dim=None):
    """Betti numbers over GF(2) of the exact level set at a regular point.

    The level set of a PL map at a non-vertex value is a regular cell
    complex with one (p-1)-cell per crossing p-simplex and incidences given
    by crossing facets; its homology needs no mesh refinement at all.
    """
    K = f.domain
    if f.target == POINT:
        raise ValueError("level sets need a real or circle target")
    for v in f.values:
        if v == x:
            raise XHitsVertexValue(f"{x} is a vertex value")
    top = K.dimension if max_dim is None else min(max_dim + 1, K.dimension)
    cells = []
    index = []
    for p in range(1, top + 1):
        level = [s for s in K.simplices[p]
                 if simplex_crosses(f.values, s, x, f.target)]
        cells.append(level)
        index.append({s: i for i, s in enumerate(level)})
    betti = []
    prev_rank = 0
    for d in range(len(cells)):
        n = len(cells[d])
        if d + 1 < len(cells):
            ent = []
            for j, s in enumerate(cells[d + 1]):
                for i in range(len(s)):
                    face = s[:i] + s[i + 1:]
                    k = index[d].get(face)
                    if k is not None:
                        ent.append((k, j, 1))
            nxt = SparseMatrix(n, len(cells[d + 1]), ent)
            rank_next = Gf2Solver(gf2_columns(nxt)).rank
        else:
            rank_next = 0
        betti.append(n - prev_rank - rank_next)
        prev_rank = rank_next
    while betti and betti[-1] == 0:
        betti.pop()
    return tuple(betti)


# -- barycentric refinement ---------------------------------------------------

def subdivide_complex(K):
    """Barycentric subdivision; returns (K', provenance) where provenance
    maps each new vertex id to the simplex of K it is the barycenter of."""
    new_id = {}
    provenance = []
    for level in K.simplices:
        for s in level:
            new_id[s] = len(provenance)
            provenance.append(s)
    maximal = []
    for s in K.maximal_simplices():
        maximal.extend(_flags(s, new_id))
    K2 = SimplicialComplex.from_maximal(len(provenance), maximal)
    return K2, provenance


def _flags(s, new_id):
    import itertools as _it
    out = []
    for perm in _it.permutations(s):
        chain = []
        for k in range(1, len(s) + 1):
            chain.append(new_id[tuple(sorted(perm[:k]))])
        out.append(tuple(sorted(chain)))
    return out


def interpolate_values(values, provenance, target):
    """Value of each barycenter: the mean of its simplex's vertex values,
    taken inside the minimal covering arc for circle targets."""
    out = []
    for s in provenance:
        vals = [values[v] for v in s]
        if target == REAL:
            out.append(sum(vals) / len(vals))
        else:
            start, _ = covering_arc(vals)
            lifted = [circ_gap(start, v) for v in vals]
            out.append(circ(start + sum(lifted) / len(lifted)))
    return tuple(out)


class SubdivisionTower:
    """Lazy chain of barycentric subdivisions of one complex."""

    def __init__(self, base):
        self.levels = [base]
        self.provenance = [None]

    def complex(self, k):
        while len(self.levels) <= k:
            K2, prov = subdivide_complex(self.levels[-1])
            self.levels.append(K2)
            self.provenance.append(prov)
        return self.levels[k]

    def lift(self, values, target, k):
        vals = tuple(values)
        for i in range(1, k + 1):
            self.complex(i)
            vals = interpolate_values(vals, self.provenance[i], target)
        return vals


_towers = weakref.WeakKeyDictionary()
_map_levels = weakref.WeakKeyDictionary()


def tower_for(K):
    t = _towers.get(K)
    if t is None:
        t = SubdivisionTower(K)
        _towers[K] = t
    return t


def map_at_level(f, k):
    """The same map on the k-fold barycentric subdivision of its domain."""
    if k == 0:
        return f
    cache = _map_levels.get(f)
    if cache is None:
        cache = {}
        _map_levels[f] = cache
    hit = cache.get(k)
    if hit is None:
        tower = tower_for(f.domain)
        K2 = tower.complex(k)
        if f.target == POINT:
            hit = PLMap(K2, POINT)
        else:
            hit = PLMap(K2, f.target, tower.lift(f.values, f.target, k))
        cache[k] = hit
    return hit


_preimages = weakref.WeakKeyDictionary()


def preimage_at_level(f, region, k):
    cache = _preimages.get(f)
    if cache is None:
        cache = {}
        _preimages[f] = cache
    key = (region.key(), k)
    hit = cache.get(key)
    if hit is None:
        hit = preimage_subcomplex(map_at_level(f, k), region)
        cache[key] = hit
    return hit


def barycentric_subdivide(K, f=None):
    """One barycentric subdivision; values are interpolated onto barycenters."""
    if f is not None and f.domain is not K:
        raise DomainMismatch("map does not live on this complex")
    K2, prov = subdivide_complex(K)
    if f is None:
        return K2, None
    if f.target == POINT:
        return K2, PLMap(K2, POINT)
    return K2, PLMap(K2, f.target, interpolate_values(f.values, prov, f.target))


def _betti_vector(F, ring="z2"):
    from .complexes import betti_numbers
    return tuple(betti_numbers(F, ring))


def stabilized_preimage(f, region, max_rounds=5):
    """Preimage refined until two consecutive rounds have equal Betti
    numbers over GF(2); returns (map at that level, preimage subcomplex)."""
    prev = None
    prev_betti = None
    for k in range(max_rounds + 1):
        F = preimage_at_level(f, region, k)
        b = _betti_vector(F)
        if prev_betti is not None and b == prev_betti:
            return map_at_level(f, k), F
        prev, prev_betti = F, b
    raise StabilizationFailed(
        f"preimage Betti numbers did not settle within {max_rounds} rounds")


def crossing_star_inside(f, region, x):
    """Every top simplex whose image straddles x maps entirely into the
    region.  This is the mesh-fineness certificate that makes the
    intersection chains exact."""
    K = f.domain
    m = K.dimension
    if m < 0 or f.target == POINT:
        return True
    for s in K.simplices[m]:
        if simplex_crosses(f.values, s, x, f.target):
            if not simplex_in_region(f.values, s, region, f.target):
                return False
    return True


def working_range(f, margin):
    lo, hi = f.value_range()
    return lo - margin, hi + margin
