"""Level-set zigzag of a real-valued map and its interval decomposition.

Critical values are the vertex values across which the exact level-set
Betti numbers change.  Between them, thin slabs around regular samples and
wide slabs across each critical value form an alternating diagram of
subcomplex inclusions; its GF(2) homology in each dimension is a zigzag of
vector spaces that decomposes into interval summands.  The decomposition is
computed by a left-to-right sweep maintaining a basis of threads, and the
result is certified against position and arrow ranks before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

from .complexes import homology, reindex
from .errors import LevelsheafError, StabilizationFailed
from .intersect import check_duality
from .linalg import Gf2Solver, _lsb
from .maps import REAL, TargetRegion, level_betti, map_at_level, preimage_at_level


@dataclass(frozen=True)
class CriticalData:
    """Critical values, interleaved regular samples, slab half-width, and
    the value range of the map."""

    critical: tuple
    samples: tuple
    delta: float
    lo: float
    hi: float

    @property
    def count(self):
        return len(self.critical)

    def positions(self):
        return 2 * len(self.critical) + 1

    def even_region(self, i):
        r = self.samples[i]
        return TargetRegion.interval(r - self.delta, r + self.delta)

    def odd_region(self, i):
        return TargetRegion.interval(self.samples[i] - self.delta,
                                     self.samples[i + 1] + self.delta)


def critical_values(f, confirm_with_duality=False):
    """Candidate critical values are the distinct vertex values; a value is
    kept when the exact level-set Betti numbers differ across it.  With
    confirm_with_duality=True every pruned interior value is double-checked
    to pass the shrinking-isomorphism test (slower, mesh permitting)."""
    if f.target != REAL:
        raise ValueError("the level-set zigzag needs a real-valued map")
    vals = sorted(set(f.values))
    if len(vals) == 1:
        v = vals[0]
        return CriticalData(critical=(v,), samples=(v - 0.5, v + 0.5),
                            delta=0.25, lo=v, hi=v)
    mids = [(a + b) / 2.0 for a, b in zip(vals, vals[1:])]
    bettis = [()] + [level_betti(f, x) for x in mids] + [()]
    critical = [v for i, v in enumerate(vals) if bettis[i] != bettis[i + 1]]
    if not critical:
        critical = [vals[0]]
    if confirm_with_duality:
        for i, v in enumerate(vals):
            if bettis[i] == bettis[i + 1] and bettis[i] != ():
                side = mids[i - 1] if i > 0 else mids[0]
                if not check_duality(f, side):
                    raise LevelsheafError(
                        f"pruned value {v} fails the duality confirmation")
    gaps = [b - a for a, b in zip(critical, critical[1:])]
    g = min(gaps) if gaps else 1.0
    samples = [critical[0] - g / 2.0]
    for a, b in zip(critical, critical[1:]):
        samples.append(_clear_sample(vals, a, b))
    samples.append(critical[-1] + g / 2.0)
    return CriticalData(critical=tuple(critical), samples=tuple(samples),
                        delta=g / 4.0, lo=vals[0], hi=vals[-1])


def _clear_sample(vals, a, b):
    """A regular sample in the middle half of (a, b), away from all vertex
    values: the midpoint of the widest value gap there."""
    lo, hi = a + (b - a) / 4.0, b - (b - a) / 4.0
    inner = [v for v in vals if lo < v < hi]
    stops = [lo] + inner + [hi]
    best = None
    for u, v in zip(stops, stops[1:]):
        if v > u and (best is None or v - u > best[0]):
            best = (v - u, (u + v) / 2.0)
    return best[1]


# -- the diagram ----------------------------------------------------------------

@dataclass
class ZigzagRow:
    """One homological dimension of the zigzag: dims[k] for the 2l+1
    positions, forward arrow columns V_{2i} -> V_{2i+1}, and backward arrow
    columns V_{2i+2} -> V_{2i+1}, all as GF(2) bit columns."""

    dims: list
    forwards: list
    backwards: list

    def check_shapes(self):
        l = (len(self.dims) - 1) // 2
        if len(self.forwards) != l or len(self.backwards) != l:
            raise ValueError("arrow lists do not match the position count")
        for i in range(l):
            if len(self.forwards[i]) != self.dims[2 * i]:
                raise ValueError(f"forward arrow {i} has wrong column count")
            if len(self.backwards[i]) != self.dims[2 * i + 2]:
                raise ValueError(f"backward arrow {i} has wrong column count")


@dataclass
class ZigzagDiagram:
    """All homology rows of the level-set zigzag of one map, over GF(2)."""

    crit: CriticalData
    rows: dict
    level: int
    map: object

    def positions(self):
        return self.crit.positions()


def _apply_cols(cols, vec_bits):
    out = 0
    v = vec_bits
    while v:
        j = _lsb(v)
        out ^= cols[j]
        v &= v - 1
    return out


def build_zigzag(f, crit=None, max_rounds=4, size_budget=400_000):
    """Assemble the level-set zigzag on a refinement level at which every
    thin slab has the Betti numbers of its exact level set and the wide
    slabs have settled."""
    if f.target != REAL:
        raise ValueError("the level-set zigzag needs a real-valued map")
    if crit is None:
        crit = critical_values(f)
    l = crit.count
    even_regions = [crit.even_region(i) for i in range(l + 1)]
    odd_regions = [crit.odd_region(i) for i in range(l)]
    level_targets = [level_betti(f, r) for r in crit.samples]
    m = f.domain.dimension
    prev_odd = None
    chosen = None
    for k in range(max_rounds + 1):
        evens = [preimage_at_level(f, r, k) for r in even_regions]
        ok = True
        for F, want in zip(evens, level_targets):
            have = tuple(homology(F, q).betti for q in range(m))
            wantp = tuple(want) + (0,) * (m - len(want))
            if have != wantp:
                ok = False
                break
        odds = [preimage_at_level(f, r, k) for r in odd_regions]
        ob = tuple(tuple(homology(F, q).betti for q in range(m)) for F in odds)
        if ok and prev_odd == ob:
            chosen = k
            break
        prev_odd = ob
        total = sum(len(lv) for lv in map_at_level(f, k).domain.simplices)
        if total * 6 > size_budget:
            break
    if chosen is None:
        raise StabilizationFailed(
            "zigzag positions did not reach their level-set homology")
    k = chosen
    evens = [preimage_at_level(f, r, k) for r in even_regions]
    odds = [preimage_at_level(f, r, k) for r in odd_regions]
    rows = {}
    for q in range(m):
        dims = []
        bases = []
        for i in range(2 * l + 1):
            F = evens[i // 2] if i % 2 == 0 else odds[i // 2]
            h = homology(F, q)
            dims.append(h.betti)
            bases.append(h)
        forwards = []
        backwards = []
        for i in range(l):
            forwards.append(_inclusion_columns(bases[2 * i], bases[2 * i + 1]))
            backwards.append(_inclusion_columns(bases[2 * i + 2], bases[2 * i + 1]))
        rows[q] = ZigzagRow(dims=dims, forwards=forwards, backwards=backwards)
    return ZigzagDiagram(crit=crit, rows=rows, level=k, map=f)


def _inclusion_columns(src, dst):
    cols = []
    for rep in src.representatives:
        lifted = reindex(rep, dst.complex)
        coords = dst.express(lifted)
        assert coords is not None, "included cycle failed to express"
        bits = 0
        for i, v in enumerate(coords):
            if v % 2:
                bits |= 1 << i
        cols.append(bits)
    return cols


# -- interval decomposition ------------------------------------------------------

@dataclass(frozen=True)
class IntervalZigzag:
    """An interval summand supported on positions b..d with a multiplicity,
    in one homological dimension of the level-set classes."""

    b: int
    d: int
    multiplicity: int
    dim: int


@dataclass
class _Thread:
    birth: int
    vec: int


def decompose_row(row):
    """Interval multiset of one zigzag row by sequential basis maintenance.

    Threads sweep left to right: a forward arrow closes the youngest thread
    of any dependency among images, a backward arrow closes the oldest
    thread in each new cokernel direction and pulls the others back through
    preimages.  The output is certified against all position and arrow
    ranks before returning.  Returns a dict {(b, d): multiplicity}.
    """
    row.check_shapes()
    dims = row.dims
    l = (len(dims) - 1) // 2
    bare = []
    threads = [_Thread(0, 1 << j) for j in range(dims[0])]
    live = list(range(len(threads)))

    def order_live():
        # threads born at even positions carry a kernel constraint at their
        # birth and may only absorb siblings born there or later; threads
        # born at position 0 or at odd positions are unconstrained.  Playing
        # constrained threads first, youngest to oldest, then free threads
        # oldest to youngest, makes every greedy dependency close the one
        # thread whose closure is a valid summand.
        evens = [t for t in live if threads[t].birth % 2 == 0 and threads[t].birth > 0]
        frees = [t for t in live if t not in set(evens)]
        evens.sort(key=lambda t: (-threads[t].birth, t))
        frees.sort(key=lambda t: (threads[t].birth, t))
        return evens + frees

    for i in range(l):
        pos = 2 * i
        cols = row.forwards[i]
        reduced = []
        pivot = {}
        dead = []
        for t in order_live():
            img = _apply_cols(cols, threads[t].vec)
            combo = 0
            while img:
                p = _lsb(img)
                kk = pivot.get(p)
                if kk is None:
                    break
                img ^= reduced[kk][0]
                combo ^= reduced[kk][1]
            if img:
                pivot[_lsb(img)] = len(reduced)
                reduced.append((img, combo | (1 << t)))
                threads[t].vec = _apply_cols(cols, threads[t].vec)
            else:
                # conceptually the thread's source vector absorbs the older
                # survivors of the dependency; only the closed pair matters
                bare.append((threads[t].birth, pos))
                dead.append(t)
        for t in dead:
            live.remove(t)
        for j in range(dims[2 * i + 1]):
            img = 1 << j
            while img:
                p = _lsb(img)
                kk = pivot.get(p)
                if kk is None:
                    break
                img ^= reduced[kk][0]
            if img:
                pivot[_lsb(img)] = len(reduced)
                reduced.append((img, 0))
                threads.append(_Thread(2 * i + 1, 1 << j))
                live.append(len(threads) - 1)
        # backward arrow from the even position 2i+2: a thread survives when
        # its vector lies in the image after borrowing older dead vectors
        cols_b = row.backwards[i]
        imB = Gf2Solver(cols_b)
        comb = Gf2Solver(cols_b)
        n_b = len(cols_b)
        dead = []
        for t in order_live():
            w = threads[t].vec
            residue, combo = comb.reduce(w)
            if residue:
                comb.add_column(w)
                bare.append((threads[t].birth, 2 * i + 1))
                dead.append(t)
            else:
                w_adj = w
                for k in _bits(combo >> n_b):
                    w_adj ^= threads[dead[k]].vec
                res2, bcombo = imB.reduce(w_adj)
                assert res2 == 0
                threads[t].vec = bcombo
        for t in dead:
            live.remove(t)
        for kv in imB.zero_combos:
            threads.append(_Thread(2 * i + 2, kv))
            live.append(len(threads) - 1)
    for t in live:
        bare.append((threads[t].birth, 2 * l))
    counts = {}
    for b, d in bare:
        counts[(b, d)] = counts.get((b, d), 0) + 1
    _certify(row, counts)
    return counts


def _bits(mask):
    while mask:
        j = _lsb(mask)
        yield j
        mask &= mask - 1


def _certify(row, counts):
    """Position and arrow ranks must match the interval multiset exactly."""
    dims = row.dims
    l = (len(dims) - 1) // 2
    for k in range(len(dims)):
        total = sum(m for (b, d), m in counts.items() if b <= k <= d)
        if total != dims[k]:
            raise LevelsheafError(f"decomposition misses position {k} rank")
    for i in range(l):
        want = sum(m for (b, d), m in counts.items()
                   if b <= 2 * i and 2 * i + 1 <= d)
        have = Gf2Solver(row.forwards[i]).rank
        if want != have:
            raise LevelsheafError(
                f"forward arrow {i}: rank {have} but {want} covering intervals")
        want = sum(m for (b, d), m in counts.items()
                   if b <= 2 * i + 1 and 2 * i + 2 <= d)
        have = Gf2Solver(row.backwards[i]).rank
        if want != have:
            raise LevelsheafError(
                f"backward arrow {i}: rank {have} but {want} covering intervals")


def interval_decomposition(Z):
    """Multiset of interval summands of every row of the diagram."""
    out = []
    for q in sorted(Z.rows):
        counts = decompose_row(Z.rows[q])
        for (b, d), mult in sorted(counts.items()):
            out.append(IntervalZigzag(b=b, d=d, multiplicity=mult, dim=q))
    return out


def span_and_persistence(interval, crit):
    """The open interval of values spanned by an interval summand and its
    length.  Summands confined to one level position are read with the
    enclosing critical pair and flagged; summands confined to a single wide
    slab carry the enclosed critical value with zero persistence."""
    b, d = interval.b, interval.d
    l = crit.count
    k_min = (b + 1) // 2
    k_max = d // 2
    if k_min > k_max:
        c = crit.critical[b // 2]
        return (c, c), 0.0, "slab-only"
    lo = crit.critical[k_min - 1] if k_min >= 1 else crit.lo
    hi = crit.critical[k_max] if k_max <= l - 1 else crit.hi
    flag = "level-only" if b == d else ""
    return (lo, hi), hi - lo, flag


# -- output ----------------------------------------------------------------------

def barcode_lines(Z, intervals=None):
    """Text barcode: one line per interval with dimension, span, and
    multiplicity; degenerate readings are flagged."""
    if intervals is None:
        intervals = interval_decomposition(Z)
    lines = []
    for iv in intervals:
        (lo, hi), pers, flag = span_and_persistence(iv, Z.crit)
        tag = f"  ({flag})" if flag else ""
        lines.append(f"dim {iv.dim}: [{lo:g}, {hi:g}] x{iv.multiplicity}{tag}")
    return lines


def barcode_svg(Z, intervals=None, width=640, bar_height=14):
    """A plain static SVG with one horizontal bar per interval copy."""
    if intervals is None:
        intervals = interval_decomposition(Z)
    crit = Z.crit
    lo, hi = crit.lo, crit.hi
    if hi <= lo:
        hi = lo + 1.0
    pad = 40
    scale = (width - 2 * pad) / (hi - lo)
    rows = []
    for iv in sorted(intervals, key=lambda iv: (iv.dim, iv.b, iv.d)):
        (a, b), pers, flag = span_and_persistence(iv, crit)
        for _ in range(iv.multiplicity):
            rows.append((iv.dim, a, b, flag))
    height = 2 * pad + bar_height * max(len(rows), 1)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">']
    parts.append(f'<line x1="{pad}" y1="{height - pad / 2}" x2="{width - pad}" '
                 f'y2="{height - pad / 2}" stroke="#333" stroke-width="1"/>')
    for c in crit.critical:
        cx = pad + (c - lo) * scale
        parts.append(f'<line x1="{cx:.2f}" y1="{pad / 2}" x2="{cx:.2f}" '
                     f'y2="{height - pad / 2}" stroke="#ccc" stroke-width="1"/>')
        parts.append(f'<text x="{cx:.2f}" y="{height - pad / 4}" '
                     f'font-size="10" text-anchor="middle">{c:g}</text>')
    for idx, (q, a, b, flag) in enumerate(rows):
        x1 = pad + (a - lo) * scale
        x2 = pad + (b - lo) * scale
        y = pad + idx * bar_height
        color = colors[q % len(colors)]
        dash = ' stroke-dasharray="4,3"' if flag else ""
        parts.append(f'<line x1="{x1:.2f}" y1="{y}" x2="{max(x2, x1 + 2):.2f}" '
                     f'y2="{y}" stroke="{color}" stroke-width="6"{dash}/>')
    parts.append("</svg>")
    return "\n".join(parts)
