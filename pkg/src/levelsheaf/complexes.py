"""Simplicial complexes, chains, and exact (co)homology with chosen bases.

Simplices are strictly sorted vertex tuples; the global vertex order fixes
all orientation signs, so every computation is reproducible.  Complexes are
immutable after construction and cache their boundary matrices and homology
internally; concurrent reads are safe.
"""

from __future__ import annotations

import itertools

from .errors import NotOrientable, NotPseudomanifold
from .linalg import (
    Gf2Solver,
    SparseMatrix,
    ZSolver,
    bits_from_column,
    gf2_columns,
    kernel_basis,
    snf_pieces,
)


class SimplicialComplex:
    """A finite simplicial complex closed under faces.

    `simplices[p]` lists the p-simplices as sorted tuples of vertex ids.
    Vertex ids live in a fixed universe of size `vertex_count`; a subcomplex
    shares its parent's universe, so simplices can be matched across nested
    complexes by tuple identity.
    """

    def __init__(self, vertex_count, simplices_by_dim):
        self.vertex_count = vertex_count
        sims = []
        for p, level in enumerate(simplices_by_dim):
            level = sorted(set(tuple(s) for s in level))
            for s in level:
                if len(s) != p + 1:
                    raise ValueError(f"{s} is not a {p}-simplex")
                if list(s) != sorted(set(s)):
                    raise ValueError(f"simplex {s} is not strictly sorted")
                if s and (s[0] < 0 or s[-1] >= vertex_count):
                    raise ValueError(f"simplex {s} has out-of-range vertices")
            sims.append(level)
        while sims and not sims[-1]:
            sims.pop()
        self.simplices = sims
        self.index = [
            {s: i for i, s in enumerate(level)} for level in sims
        ]
        self._check_closed()
        self._cache = {}

    def _check_closed(self):
        for p in range(1, len(self.simplices)):
            lower = self.index[p - 1]
            for s in self.simplices[p]:
                for i in range(len(s)):
                    face = s[:i] + s[i + 1:]
                    if face not in lower:
                        raise ValueError(f"face {face} of {s} is missing")

    @classmethod
    def from_maximal(cls, vertex_count, maximal):
        """Build the closure of a set of simplices given by vertex tuples."""
        by_dim = {}
        for s in maximal:
            s = tuple(sorted(set(s)))
            if not s:
                continue
            for k in range(1, len(s) + 1):
                for face in itertools.combinations(s, k):
                    by_dim.setdefault(k - 1, set()).add(face)
        levels = [sorted(by_dim.get(p, ())) for p in range(max(by_dim, default=-1) + 1)]
        return cls(vertex_count, levels)

    @property
    def dimension(self):
        return len(self.simplices) - 1

    def simplex_count(self, p):
        if 0 <= p < len(self.simplices):
            return len(self.simplices[p])
        return 0

    def euler_characteristic(self):
        return sum((-1) ** p * len(level) for p, level in enumerate(self.simplices))

    def contains_simplex(self, s):
        p = len(s) - 1
        return 0 <= p < len(self.simplices) and tuple(s) in self.index[p]

    def subcomplex(self, keep):
        """Subcomplex from an iterable of simplex tuples (closed under faces)."""
        by_dim = {}
        for s in keep:
            by_dim.setdefault(len(s) - 1, []).append(tuple(s))
        levels = [by_dim.get(p, []) for p in range(max(by_dim, default=-1) + 1)]
        return SimplicialComplex(self.vertex_count, levels)

    def all_simplices(self):
        for level in self.simplices:
            yield from level

    def maximal_simplices(self):
        out = []
        for p, level in enumerate(self.simplices):
            higher = self.simplices[p + 1] if p + 1 < len(self.simplices) else []
            faces = set()
            for s in higher:
                for i in range(len(s)):
                    faces.add(s[:i] + s[i + 1:])
            out.extend(s for s in level if s not in faces)
        return out

    def __repr__(self):
        counts = ",".join(str(len(level)) for level in self.simplices)
        return f"SimplicialComplex(dim={self.dimension}, counts=[{counts}])"


# -- chains and cochains ----------------------------------------------------

class _Vec:
    """Coefficient vector indexed by the p-simplices of one complex."""

    __slots__ = ("complex", "dimension", "ring", "coeffs")

    def __init__(self, complex, dimension, coeffs=None, ring="z2"):
        self.complex = complex
        self.dimension = dimension
        self.ring = ring
        cleaned = {}
        n = complex.simplex_count(dimension)
        for i, v in (coeffs or {}).items():
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range for dimension {dimension}")
            if ring == "z2":
                v %= 2
            if v:
                cleaned[i] = v
        self.coeffs = cleaned

    @classmethod
    def from_simplices(cls, complex, simplices, ring="z2", dimension=None):
        items = list(simplices)
        if dimension is None:
            if not items:
                raise ValueError("dimension required for an empty list")
            first = items[0][0] if isinstance(items[0], tuple) and isinstance(items[0][0], tuple) else items[0]
            dimension = len(first) - 1
        coeffs = {}
        for item in items:
            if isinstance(item, tuple) and item and isinstance(item[0], tuple):
                s, v = item
            else:
                s, v = item, 1
            i = complex.index[len(s) - 1][tuple(s)]
            coeffs[i] = coeffs.get(i, 0) + v
        return cls(complex, dimension, coeffs, ring)

    def support(self):
        return [self.complex.simplices[self.dimension][i] for i in sorted(self.coeffs)]

    def get(self, simplex):
        idx = self.complex.index[self.dimension].get(tuple(simplex))
        return 0 if idx is None else self.coeffs.get(idx, 0)

    def is_zero(self):
        return not self.coeffs

    def _like(self, coeffs):
        return type(self)(self.complex, self.dimension, coeffs, self.ring)

    def __add__(self, other):
        self._check_compatible(other)
        out = dict(self.coeffs)
        for i, v in other.coeffs.items():
            out[i] = out.get(i, 0) + v
        return self._like(out)

    def __sub__(self, other):
        self._check_compatible(other)
        out = dict(self.coeffs)
        for i, v in other.coeffs.items():
            out[i] = out.get(i, 0) - v
        return self._like(out)

    def scale(self, k):
        return self._like({i: k * v for i, v in self.coeffs.items()})

    def _check_compatible(self, other):
        if (self.complex is not other.complex or self.dimension != other.dimension
                or self.ring != other.ring):
            raise ValueError("incompatible chain arithmetic")

    def __eq__(self, other):
        return (isinstance(other, _Vec) and self.dimension == other.dimension
                and self.ring == other.ring and self.coeffs == other.coeffs
                and self.complex is other.complex)

    def __hash__(self):
        return hash((id(self.complex), self.dimension, self.ring,
                     tuple(sorted(self.coeffs.items()))))

    def __repr__(self):
        return (f"{type(self).__name__}(dim={self.dimension}, ring={self.ring}, "
                f"nnz={len(self.coeffs)})")


class Chain(_Vec):
    def boundary(self):
        if self.dimension == 0 or not self.coeffs:
            return Chain(self.complex, max(self.dimension - 1, 0), {}, self.ring)
        A = boundary_matrix(self.complex, self.dimension, self.ring)
        return Chain(self.complex, self.dimension - 1,
                     A.apply(self.coeffs, self.ring), self.ring)


class Cochain(_Vec):
    def coboundary(self):
        K = self.complex
        if self.dimension + 1 > K.dimension:
            return Cochain(K, self.dimension + 1, {}, self.ring)
        A = boundary_matrix(K, self.dimension + 1, self.ring).transpose()
        return Cochain(K, self.dimension + 1, A.apply(self.coeffs, self.ring),
                       self.ring)

    def evaluate(self, chain):
        """Kronecker pairing with a chain of the same dimension."""
        if chain.dimension != self.dimension or chain.complex is not self.complex:
            raise ValueError("pairing dimension mismatch")
        total = sum(v * chain.coeffs.get(i, 0) for i, v in self.coeffs.items())
        return total % 2 if self.ring == "z2" else total


def reindex(vec, target, strict=True):
    """Carry a chain or cochain to another complex over the same vertex ids.

    With strict=True every simplex must exist in the target (inclusion of a
    subcomplex chain into its parent); with strict=False missing simplices
    are dropped (restriction of a cochain to a subcomplex).
    """
    p = vec.dimension
    coeffs = {}
    if p < len(target.simplices):
        idx = target.index[p]
        for i, v in vec.coeffs.items():
            s = vec.complex.simplices[p][i]
            j = idx.get(s)
            if j is None:
                if strict:
                    raise ValueError(f"simplex {s} missing from target complex")
                continue
            coeffs[j] = v
    elif strict and vec.coeffs:
        raise ValueError("target complex has no simplices in this dimension")
    return type(vec)(target, p, coeffs, vec.ring)


# -- boundary matrices ------------------------------------------------------

def boundary_matrix(K, p, ring="z2"):
    """Matrix of the simplicial boundary from p-chains to (p-1)-chains.

    Entry (face, simplex) is (-1)^i for omission of the i-th vertex of the
    sorted tuple; over GF(2) every incidence is 1.
    """
    if not 1 <= p <= K.dimension:
        raise ValueError(f"p={p} out of range for dimension {K.dimension}")
    key = ("boundary", p, "z" if ring != "z2" else "z2")
    hit = K._cache.get(key)
    if hit is not None:
        return hit
    rows = K.index[p - 1]
    ent = []
    for j, s in enumerate(K.simplices[p]):
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            coef = 1 if ring == "z2" else (-1) ** i
            ent.append((rows[face], j, coef))
    A = SparseMatrix(len(rows), len(K.simplices[p]), ent)
    K._cache[key] = A
    return A


def _boundary_or_zero(K, p, ring):
    if 1 <= p <= K.dimension:
        return boundary_matrix(K, p, ring)
    rows = K.simplex_count(p - 1)
    cols = K.simplex_count(p)
    return SparseMatrix(rows, cols)


# -- homology ---------------------------------------------------------------

class HomologyBasis:
    """A chosen basis of H_p or H^p with explicit representatives.

    `representatives` is a free basis (length == betti); torsion generators
    and their orders are carried separately.  `express` writes any cycle or
    cocycle in these generators, with torsion coordinates reduced modulo
    their orders, and returns None for vectors that are not closed.
    """

    def __init__(self, complex, p, ring, kind, representatives, torsion,
                 torsion_reps, relations):
        self.complex = complex
        self.dimension = p
        self.ring = ring
        self.kind = kind
        self.representatives = representatives
        self.torsion = torsion
        self.torsion_reps = torsion_reps
        self._relations = relations
        self._solver = None

    @property
    def betti(self):
        return len(self.representatives)

    @property
    def total_rank(self):
        return self.betti + len(self.torsion)

    def _build_solver(self):
        n = self.complex.simplex_count(self.dimension)
        gens = self.representatives + self.torsion_reps
        cols = self._relations.columns() + [g.coeffs for g in gens]
        A = SparseMatrix.from_columns(n, cols)
        self.n_relations = self._relations.cols
        if self.ring == "z2":
            return Gf2Solver(gf2_columns(A))
        return ZSolver(A)

    def express(self, vec):
        """Coordinates of a class: free part exact, torsion part canonical."""
        if vec.complex is not self.complex or vec.dimension != self.dimension:
            raise ValueError("expression against a foreign basis")
        if self._solver is None:
            self._solver = self._build_solver()
        if self.ring == "z2":
            w = self._solver.solve(bits_from_column(vec.coeffs))
            if w is None:
                return None
            coords = [(w >> (self.n_relations + i)) & 1
                      for i in range(self.total_rank)]
            return coords
        x = self._solver.solve(vec.coeffs)
        if x is None:
            return None
        coords = [x.get(self.n_relations + i, 0) for i in range(self.total_rank)]
        for k, d in enumerate(self.torsion):
            coords[self.betti + k] %= d
        return coords

    def is_trivial_class(self, vec):
        coords = self.express(vec)
        return coords is not None and not any(coords)

    def __repr__(self):
        return (f"HomologyBasis({self.kind} {self.dimension}, ring={self.ring}, "
                f"betti={self.betti}, torsion={self.torsion})")


def _quotient_basis(K, p, ring, kind, cycle_map, relation_map, vec_cls):
    """Generators of ker(cycle_map)/im(relation_map) inside C_p or C^p."""
    n = K.simplex_count(p)
    if n == 0:
        return HomologyBasis(K, p, ring, kind, [], [], [],
                             SparseMatrix(0, 0))
    if ring == "z2":
        img = Gf2Solver(gf2_columns(relation_map))
        reps = []
        for kv in kernel_basis(cycle_map, "z2"):
            if img.add_column(bits_from_column(kv)):
                reps.append(vec_cls(K, p, kv, ring))
        return HomologyBasis(K, p, ring, kind, reps, [], [], relation_map)
    kernel = kernel_basis(cycle_map, "z")
    k = len(kernel)
    if k == 0:
        return HomologyBasis(K, p, ring, kind, [], [], [], relation_map)
    Kmat = SparseMatrix.from_columns(n, kernel)
    if relation_map.nnz() == 0:
        reps = [vec_cls(K, p, col, ring) for col in kernel]
        return HomologyBasis(K, p, ring, kind, reps, [], [], relation_map)
    solver = ZSolver(Kmat)
    ycols = []
    for col in relation_map.columns():
        y = solver.solve(col)
        assert y is not None, "boundary is not a cycle"
        ycols.append(y)
    Y = SparseMatrix.from_columns(k, ycols)
    D, _, Uinv, _, _ = snf_pieces(Y)
    diag = {r: v for (r, c), v in D.entries.items() if r == c}
    r = len(diag)
    ucols = Uinv.columns()

    def gen(i):
        combo = ucols[i]
        out = {}
        for idx, w in combo.items():
            for row, v in kernel[idx].items():
                out[row] = out.get(row, 0) + w * v
        return vec_cls(K, p, {a: b for a, b in out.items() if b}, ring)

    free_reps = [gen(i) for i in range(r, k)]
    torsion = []
    torsion_reps = []
    for i in range(r):
        if diag[i] not in (1, -1):
            torsion.append(abs(diag[i]))
            torsion_reps.append(gen(i))
    return HomologyBasis(K, p, ring, kind, free_reps, torsion, torsion_reps,
                         relation_map)


def homology(K, p, ring="z2"):
    """Basis of H_p with representatives, Betti number, and torsion over Z."""
    key = ("homology", p, ring)
    hit = K._cache.get(key)
    if hit is not None:
        return hit
    if p < 0 or p > K.dimension:
        res = HomologyBasis(K, p, ring, "homology", [], [], [], SparseMatrix(0, 0))
    else:
        res = _quotient_basis(K, p, ring, "homology",
                              _boundary_or_zero(K, p, ring),
                              _boundary_or_zero(K, p + 1, ring), Chain)
    K._cache[key] = res
    return res


def cohomology(K, p, ring="z2"):
    """Basis of H^p via transposed boundary matrices."""
    key = ("cohomology", p, ring)
    hit = K._cache.get(key)
    if hit is not None:
        return hit
    if p < 0 or p > K.dimension:
        res = HomologyBasis(K, p, ring, "cohomology", [], [], [], SparseMatrix(0, 0))
    else:
        res = _quotient_basis(K, p, ring, "cohomology",
                              _boundary_or_zero(K, p + 1, ring).transpose(),
                              _boundary_or_zero(K, p, ring).transpose(), Cochain)
    K._cache[key] = res
    return res


def betti_numbers(K, ring="z2"):
    return [homology(K, p, ring).betti for p in range(K.dimension + 1)]


# -- fundamental class ------------------------------------------------------

def _facet_cofaces(K):
    m = K.dimension
    cofaces = {}
    for j, s in enumerate(K.simplices[m]):
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            cofaces.setdefault(face, []).append((j, i))
    return cofaces


def is_closed_pseudomanifold(K):
    """True when every (m-1)-simplex lies in exactly two m-simplices."""
    if K.dimension < 1:
        return K.dimension == 0 and len(K.simplices[0]) > 0
    return all(len(v) == 2 for v in _facet_cofaces(K).values())


def fundamental_class(K, ring="z2"):
    """Top class of a closed pseudomanifold; over Z requires orientability.

    Over GF(2) this is the sum of all top simplices.  Over Z the sign of
    each simplex is propagated across shared facets from the lexicographic
    orientation of the first simplex of each component; a contradiction
    raises NotOrientable.  The boundary is checked to vanish exactly.
    """
    key = ("fundamental", ring)
    hit = K._cache.get(key)
    if hit is not None:
        return hit
    m = K.dimension
    if m < 0:
        raise NotPseudomanifold("empty complex")
    if m == 0:
        gamma = Chain(K, 0, {i: 1 for i in range(len(K.simplices[0]))}, ring)
        K._cache[key] = gamma
        return gamma
    cofaces = _facet_cofaces(K)
    if not all(len(v) == 2 for v in cofaces.values()):
        raise NotPseudomanifold(
            "some codimension-1 simplex is not shared by exactly two "
            "top simplices")
    n_top = len(K.simplices[m])
    if ring == "z2":
        gamma = Chain(K, m, {j: 1 for j in range(n_top)}, ring)
        assert gamma.boundary().is_zero()
        K._cache[key] = gamma
        return gamma
    sign = {}
    for start in range(n_top):
        if start in sign:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            j = stack.pop()
            s = K.simplices[m][j]
            for i in range(len(s)):
                face = s[:i] + s[i + 1:]
                for j2, i2 in cofaces[face]:
                    if j2 == j:
                        continue
                    want = -sign[j] * (-1) ** i * (-1) ** i2
                    if j2 in sign:
                        if sign[j2] != want:
                            raise NotOrientable(
                                "orientation propagation found a conflict")
                    else:
                        sign[j2] = want
                        stack.append(j2)
    gamma = Chain(K, m, dict(sign), "z")
    if not gamma.boundary().is_zero():
        raise NotOrientable("no consistent orientation exists")
    K._cache[key] = gamma
    return gamma
