"""Cup and cap products, the level intersection homomorphism, stable
groups, restrictions, and topological degree.

The intersection map from H^p of a region preimage to H_{m-n-p} of the same
preimage is computed at chain level: each basis cocycle is cupped with the
crossing cochain of a sampled regular value and capped against the
fundamental class restricted to the preimage.  The computation is exact
whenever every top simplex straddling the sample lies inside the preimage;
levels of barycentric refinement are raised until that certificate holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .complexes import (
    Chain,
    Cochain,
    HomologyBasis,
    betti_numbers,
    cohomology,
    fundamental_class,
    homology,
    reindex,
)
from .errors import (
    LevelsheafError,
    NoRegularSample,
    NotACycle,
    NotEquidimensional,
    NotNested,
)
from .linalg import (
    Gf2Solver,
    SparseMatrix,
    ZSolver,
    bits_from_column,
    gf2_columns,
    rank as matrix_rank,
    snf_pieces,
)
from .maps import (
    CIRCLE,
    POINT,
    REAL,
    PLMap,
    TargetRegion,
    crossing_star_inside,
    edge_crossing_sign,
    map_at_level,
    preimage_at_level,
    regular_sample,
    sample_candidates,
)
from .meshes import circle_complex


def target_codim(f):
    return 0 if f.target == POINT else 1


def psi_degrees(f):
    """Cohomology degrees p with a possibly nonzero intersection map."""
    m = f.domain.dimension
    return range(0, max(m - target_codim(f), -1) + 1)


# -- products ----------------------------------------------------------------

def cup(c1, c2):
    """Front-face/back-face product of cochains on a shared complex."""
    if c1.complex is not c2.complex or c1.ring != c2.ring:
        raise ValueError("cup needs cochains on one complex over one ring")
    K = c1.complex
    p, q = c1.dimension, c2.dimension
    out = {}
    if p + q <= K.dimension:
        idx_p, idx_q = K.index[p], K.index[q]
        for j, s in enumerate(K.simplices[p + q]):
            a = c1.coeffs.get(idx_p.get(s[:p + 1], -1), 0)
            if not a:
                continue
            b = c2.coeffs.get(idx_q.get(s[p:], -1), 0)
            if b:
                out[j] = a * b
    return Cochain(K, p + q, out, c1.ring)


def cap(c, z):
    """Evaluate a p-cochain on front faces of a k-chain, emit back faces."""
    if c.complex is not z.complex or c.ring != z.ring:
        raise ValueError("cap needs a cochain and chain on one complex")
    K = c.complex
    p, k = c.dimension, z.dimension
    if p > k:
        raise ValueError(f"cannot cap a {p}-cochain with a {k}-chain")
    out = {}
    idx_p, idx_back = K.index[p], K.index[k - p]
    for j, coeff in z.coeffs.items():
        s = K.simplices[k][j]
        a = c.coeffs.get(idx_p.get(s[:p + 1], -1), 0)
        if a:
            t = idx_back[s[p:]]
            out[t] = out.get(t, 0) + coeff * a
    return Chain(K, k - p, out, c.ring)


def pullback_point_cocycle(f, x, ring="z2"):
    """Crossing cochain of a sample point: the pullback of a point-supported
    top cocycle of the target.  Closed by construction; the closedness is
    checked before returning."""
    K = f.domain
    if f.target == POINT:
        return Cochain(K, 0, {i: 1 for i in range(K.simplex_count(0))}, ring)
    out = {}
    for j, (u, v) in enumerate(K.simplices[1] if K.dimension >= 1 else []):
        s = edge_crossing_sign(f.values[u], f.values[v], x, f.target)
        if s:
            out[j] = 1 if ring == "z2" else s
    c = Cochain(K, 1, out, ring)
    if not c.coboundary().is_zero():
        raise AssertionError("crossing cochain failed to be closed")
    return c


# -- the chain-level intersection ---------------------------------------------

def _psi_chain(fk, F, x, c, ring, gamma=None):
    """(c cup crossing cochain) cap (fundamental class restricted to F).

    c is a cocycle on the subcomplex F; the result is a chain on F supported
    by simplices touching the sampled level.  Raises NotACycle when its
    boundary fails to vanish, which signals a mesh too coarse for x.
    """
    K = fk.domain
    m = K.dimension
    n = target_codim(fk)
    p = c.dimension
    qdim = m - n - p
    assert 0 <= qdim <= m
    if gamma is None:
        gamma = fundamental_class(K, ring)
    out = {}
    top_idx = F.index[m] if F.dimension == m else {}
    front_idx = F.index[p] if p <= F.dimension else {}
    back_idx = F.index[qdim] if qdim <= F.dimension else {}
    values = fk.values
    for j, coeff in gamma.coeffs.items():
        s = K.simplices[m][j]
        if s not in top_idx:
            continue
        a = c.coeffs.get(front_idx.get(s[:p + 1], -1), 0)
        if not a:
            continue
        if n:
            sign = edge_crossing_sign(values[s[p]], values[s[p + 1]], x, fk.target)
            if not sign:
                continue
        else:
            sign = 1
        t = back_idx[s[p + n:]]
        out[t] = out.get(t, 0) + coeff * a * sign
    z = Chain(F, qdim, out, ring)
    if not z.boundary().is_zero():
        raise NotACycle(
            "intersection chain has boundary; refine the mesh near the sample")
    return z


@dataclass
class IntersectionMap:
    """Matrix of the intersection homomorphism in chosen bases.

    Columns index the generators of H^p of the preimage, rows the
    generators of H_{m-n-p}; `regular_value` is the sampled point used for
    the crossing cochain, `level` the refinement depth it needed.
    """

    region: TargetRegion
    p: int
    ring: str
    source: HomologyBasis
    target: HomologyBasis
    matrix: SparseMatrix
    regular_value: float
    level: int
    preimage: object
    image_chains: list = field(default_factory=list)

    def is_isomorphism(self):
        ns, nt = self.source.total_rank, self.target.total_rank
        if ns != nt:
            return False
        if ns == 0:
            return True
        if self.ring == "z2":
            return matrix_rank(self.matrix, "z2") == ns
        if self.source.torsion or self.target.torsion:
            raise LevelsheafError("integer isomorphism test needs free groups")
        facs = [abs(v) for v in snf_pieces(self.matrix)[0].entries.values()]
        return len(facs) == ns and all(v == 1 for v in facs)

    def image_rank(self):
        if self.ring == "z2":
            return matrix_rank(self.matrix, "z2")
        return matrix_rank(self.matrix, "z")


def _source_generators(basis):
    return basis.representatives + basis.torsion_reps


def _psi_slice(fk, F, x, region, p, ring, level):
    n = target_codim(fk)
    qdim = fk.domain.dimension - n - p
    source = cohomology(F, p, ring)
    target = homology(F, qdim, ring)
    cols = []
    chains = []
    for gen in _source_generators(source):
        z = _psi_chain(fk, F, x, gen, ring)
        chains.append(z)
        coords = target.express(z)
        assert coords is not None, "intersection chain is not a cycle in F"
        cols.append({i: v for i, v in enumerate(coords) if v})
    matrix = SparseMatrix.from_columns(target.total_rank, cols)
    return IntersectionMap(region=region, p=p, ring=ring, source=source,
                           target=target, matrix=matrix, regular_value=x,
                           level=level, preimage=F, image_chains=chains)


# -- level search -------------------------------------------------------------

SIZE_BUDGET = 120_000  # total simplices; refinement stops growing past this


def find_level(f, region, max_rounds=5, stabilize=False, sample_for=None,
               extra_regions=(), size_budget=SIZE_BUDGET):
    """Smallest refinement level whose sampled point has its crossing star
    inside the preimage (and, optionally, whose preimage Betti numbers agree
    with the previous round).  Returns (level, x)."""
    prev_b = None
    seen_candidates = False
    for k in range(max_rounds + 1):
        fk = map_at_level(f, k)
        if stabilize:
            b = tuple(betti_numbers(preimage_at_level(f, region, k)))
            ok_b = prev_b == b
            prev_b = b
            if not ok_b:
                if _too_big(fk.domain, size_budget):
                    break
                continue
        cands = sample_for(fk) if sample_for else sample_candidates(fk, region)
        for x in cands:
            seen_candidates = True
            if crossing_star_inside(fk, region, x) and all(
                    crossing_star_inside(fk, r, x) for r in extra_regions):
                return k, x
        if _too_big(fk.domain, size_budget):
            break
    if not seen_candidates:
        raise NoRegularSample(f"no admissible sample in {region}")
    raise NotACycle(
        f"no refinement level up to {max_rounds} certifies the sample "
        f"for {region}")


def _too_big(K, budget):
    return sum(len(level) for level in K.simplices) * 6 > budget


def _first_valid(fk, region):
    for x in sample_candidates(fk, region):
        if crossing_star_inside(fk, region, x):
            return x
    return None


def intersection_hom(f, region, p, ring="z2", max_rounds=5):
    """The intersection homomorphism on H^p of the region preimage."""
    level, x = find_level(f, region, max_rounds=max_rounds, stabilize=True)
    fk = map_at_level(f, level)
    F = preimage_at_level(f, region, level)
    return _psi_slice(fk, F, x, region, p, ring, level)


# -- stable groups ------------------------------------------------------------

class StableSlice:
    """One cohomology degree of a stable group: the image of the
    intersection map with a chosen basis and preferred source classes."""

    def __init__(self, psi):
        self.psi = psi
        ring = psi.ring
        M = psi.matrix
        ns = psi.source.total_rank
        if ring == "z2":
            solver = Gf2Solver()
            picks = []
            for j in range(ns):
                if solver.add_column(bits_from_column(M.column(j))):
                    picks.append({j: 1})
            self.source_picks = picks
        else:
            if psi.source.torsion or psi.target.torsion:
                raise LevelsheafError(
                    "integer stable groups need torsion-free (co)homology")
            work = snf_pieces(M)
            _, _, _, V, _ = work
            rk = len(work[0].entries)
            vcols = V.columns()
            self.source_picks = [vcols[i] for i in range(rk)]
        self.image_basis = [M.apply(pick, ring) for pick in self.source_picks]
        self._img_solver = None

    @property
    def rank(self):
        return len(self.image_basis)

    def pick_cochains(self):
        """The preferred source classes as explicit cocycles on the preimage."""
        gens = _source_generators(self.psi.source)
        out = []
        for pick in self.source_picks:
            c = Cochain(self.psi.preimage, self.psi.p, {}, self.psi.ring)
            for j, w in pick.items():
                c = c + gens[j].scale(w)
            out.append(c)
        return out

    def express_image(self, coords):
        """Coordinates of a target-basis vector in the image basis, or None."""
        ring = self.psi.ring
        aug = len(self.image_basis)
        if self._img_solver is None:
            nt = self.psi.target.total_rank
            cols = list(self.image_basis)
            if ring != "z2":
                for k, d in enumerate(self.psi.target.torsion):
                    cols.append({self.psi.target.betti + k: d})
            A = SparseMatrix.from_columns(nt, cols)
            self._img_solver = (Gf2Solver(gf2_columns(A)) if ring == "z2"
                                else ZSolver(A))
        if ring == "z2":
            w = self._img_solver.solve(bits_from_column(coords))
            if w is None:
                return None
            return {i: 1 for i in range(aug) if (w >> i) & 1}
        sol = self._img_solver.solve(coords)
        if sol is None:
            return None
        return {i: v for i, v in sol.items() if i < aug and v}


class StableGroup:
    """Direct sum over p of H^p(preimage) modulo the intersection kernel."""

    def __init__(self, f, region, ring, slices, level):
        self.map = f
        self.region = region
        self.ring = ring
        self.slices = slices
        self.level = level

    def rank(self, p):
        s = self.slices.get(p)
        return 0 if s is None else s.rank

    def ranks(self):
        return {p: s.rank for p, s in self.slices.items()}

    def total_rank(self):
        return sum(s.rank for s in self.slices.values())

    def __repr__(self):
        return f"StableGroup({self.region}, ranks={self.ranks()})"


def stable_group(f, region, ring="z2", max_rounds=5, stabilize=True,
                 level=None, x=None):
    """Image basis of the intersection map in every degree, with the
    quotient data from the region preimage's cohomology."""
    if level is None:
        level, x = find_level(f, region, max_rounds=max_rounds,
                              stabilize=stabilize)
    elif x is None:
        x = regular_sample(map_at_level(f, level), region)
    fk = map_at_level(f, level)
    F = preimage_at_level(f, region, level)
    slices = {}
    for p in psi_degrees(f):
        slices[p] = StableSlice(_psi_slice(fk, F, x, region, p, ring, level))
    return StableGroup(f, region, ring, slices, level)


def restrict_stable(f, outer, inner, ring="z2", max_rounds=5):
    """Matrices of the stable-group restriction from a region to a subregion.

    Returns (blocks, injective) where blocks maps p to the matrix written in
    the image bases of the two stable groups.
    """
    if not outer.contains_region(inner):
        raise NotNested(f"{inner} is not contained in {outer}")
    level = None
    for k in range(max_rounds + 1):
        fk = map_at_level(f, k)
        xo = _first_valid(fk, outer)
        xi = _first_valid(fk, inner)
        if xo is not None and xi is not None:
            level = k
            break
        if _too_big(fk.domain, SIZE_BUDGET):
            break
    if level is None:
        raise NotACycle("no level certifies both regions")
    g_out = stable_group(f, outer, ring, level=level, x=xo)
    g_in = stable_group(f, inner, ring, level=level, x=xi)
    blocks, injective = _restriction_blocks(f, g_out, g_in, ring)
    return blocks, injective


def _restriction_blocks(f, g_out, g_in, ring, g_in_map=None):
    """Express the restriction of each preferred outer class inside the
    inner image basis.  Shared by region nesting and map perturbation."""
    assert g_out.level == g_in.level, "groups must share a refinement level"
    fk = map_at_level(g_in_map or f, g_in.level)
    blocks = {}
    injective = True
    for p, s_out in g_out.slices.items():
        s_in = g_in.slices[p]
        F_in = s_in.psi.preimage
        cols = []
        for c in s_out.pick_cochains():
            c_in = reindex(c, F_in, strict=False)
            z = _psi_chain(fk, F_in, s_in.psi.regular_value, c_in, ring)
            coords = s_in.psi.target.express(z)
            assert coords is not None
            y = s_in.express_image({i: v for i, v in enumerate(coords) if v})
            if y is None:
                raise LevelsheafError(
                    "restricted class left the inner stable group")
            cols.append(y)
        M = SparseMatrix.from_columns(s_in.rank, cols)
        blocks[p] = M
        if matrix_rank(M, ring) != len(cols):
            injective = False
    return blocks, injective


# -- commutativity and duality -------------------------------------------------

def check_commutativity(f, outer, inner, p=None, ring="z2", max_rounds=5):
    """Whether restriction commutes with the intersection maps of a nested
    pair of regions, using one sample point inside the inner region."""
    if not outer.contains_region(inner):
        raise NotNested(f"{inner} is not contained in {outer}")
    level, x = find_level(f, inner, max_rounds=max_rounds,
                          extra_regions=())
    fk = map_at_level(f, level)
    F_out = preimage_at_level(f, outer, level)
    F_in = preimage_at_level(f, inner, level)
    degrees = psi_degrees(f) if p is None else [p]
    for deg in degrees:
        n = target_codim(f)
        qdim = f.domain.dimension - n - deg
        source_out = cohomology(F_out, deg, ring)
        target_out = homology(F_out, qdim, ring)
        for gen in _source_generators(source_out):
            direct = _psi_chain(fk, F_out, x, gen, ring)
            dc = target_out.express(direct)
            gen_in = reindex(gen, F_in, strict=False)
            around = _psi_chain(fk, F_in, x, gen_in, ring)
            ac = target_out.express(reindex(around, F_out))
            if dc != ac:
                return False
    return True


def check_duality(f, x, ring="z2", max_rounds=5, shrinks=8):
    """Shrink a region around x until the preimage Betti numbers settle,
    then report whether the intersection map is an isomorphism in every
    degree.  A mesh too coarse to certify any level reports False."""
    if f.target == POINT:
        g = stable_group(f, TargetRegion.whole(), ring, stabilize=False)
        return all(s.psi.is_isomorphism() for s in g.slices.values())
    if f.target == REAL:
        lo, hi = f.value_range()
        rho0 = max((hi - lo) / 4.0, 1e-3)
        make = lambda r: TargetRegion.interval(x - r, x + r)
    else:
        rho0 = 0.2
        make = lambda r: TargetRegion.arc(x - r, x + r)
    prev = None
    for s in range(shrinks):
        region = make(rho0 * (0.6 ** s))
        try:
            level, xs = find_level(f, region, max_rounds=max_rounds)
        except (NotACycle, NoRegularSample):
            # the mesh cannot certify smaller regions; give up
            return False
        F = preimage_at_level(f, region, level)
        b = tuple(betti_numbers(F))
        if prev == b:
            # a plateau: test it, but keep shrinking if it is not yet a
            # product region (the criterion is existential in the region)
            fk = map_at_level(f, level)
            if all(_psi_slice(fk, F, xs, region, p, ring, level).is_isomorphism()
                   for p in psi_degrees(f)):
                return True
        prev = b
    return False


# -- orientation data and degree ------------------------------------------------

class OrientationData:
    """Bundled orientation choices: the domain fundamental class, its dual
    unit cocycle, a top cocycle pairing to one, its cap against the
    fundamental class, and the analogous pair on a reference target circle.

    Every defining identity is checked numerically at construction.
    """

    def __init__(self, f, ring="z"):
        K = f.domain
        m = K.dimension
        self.gamma = fundamental_class(K, ring)
        self.gamma_dual = Cochain(K, 0, {i: 1 for i in range(K.simplex_count(0))},
                                  ring)
        assert cap(self.gamma_dual, self.gamma) == self.gamma
        j0 = min(self.gamma.coeffs)
        eps = self.gamma.coeffs[j0]
        self.lam = Cochain(K, m, {j0: eps}, ring)
        assert self.lam.evaluate(self.gamma) == 1
        self.lam_dual = cap(self.lam, self.gamma)
        assert sum(self.lam_dual.coeffs.values()) == 1
        if f.target == CIRCLE:
            T = circle_complex(3)
            self.target_complex = T
            self.target_class = fundamental_class(T, ring)
            j = min(self.target_class.coeffs)
            e = self.target_class.coeffs[j]
            self.target_dual = Cochain(T, 1, {j: e}, ring)
            assert self.target_dual.evaluate(self.target_class) == 1
        else:
            self.target_complex = None
            self.target_class = None
            self.target_dual = None


def degree(f, max_rounds=3):
    """The winding multiple of an oriented circle-valued map on a circle."""
    K = f.domain
    if f.target != CIRCLE or K.dimension != 1:
        raise NotEquidimensional(
            "degree needs a circle-valued map on a triangulated circle")
    if homology(K, 0, "z").betti != 1:
        raise NotEquidimensional("degree needs a connected domain")
    orient = OrientationData(f, "z")
    region = TargetRegion.whole()
    level, x = find_level(f, region, max_rounds=max_rounds)
    fk = map_at_level(f, level)
    F = preimage_at_level(f, region, level)
    h0 = homology(F, 0, "z")
    gdual = Cochain(F, 0, {i: 1 for i in range(F.simplex_count(0))}, "z")
    z = _psi_chain(fk, F, x, gdual, "z")
    zc = h0.express(z)
    lam_level = _lambda_dual_at_level(f, orient, level, F)
    lc = h0.express(lam_level)
    assert lc is not None and zc is not None
    nonzero = [(a, b) for a, b in zip(zc, lc) if b]
    assert nonzero, "point class expressed to zero"
    k = nonzero[0][0] // nonzero[0][1]
    assert all(a == k * b for a, b in zip(zc, lc))
    return k


def _lambda_dual_at_level(f, orient, level, F):
    if level == 0:
        return reindex(orient.lam_dual, F)
    # the dual point class of any vertex generates H_0 of the connected
    # refined circle; reuse the construction at the refined level
    fk = map_at_level(f, level)
    o2 = OrientationData(fk, "z")
    return reindex(o2.lam_dual, F)


def signed_crossing_count(f, x):
    """Independent degree oracle: sum of signed crossings over one value."""
    orient = fundamental_class(f.domain, "z")
    total = 0
    for j, coeff in orient.coeffs.items():
        u, v = f.domain.simplices[1][j]
        total += coeff * edge_crossing_sign(f.values[u], f.values[v], x, f.target)
    return total
