"""Exact sparse matrix algebra over GF(2) and the integers.

Columns over GF(2) are Python ints used as bit vectors (bit i = row i) and
are reduced lazily left to right with the lowest set bit as pivot.  Integer
computations go through Smith normal form with arbitrary-precision entries;
the unimodular transforms and their inverses are tracked as sparse row and
column dictionaries.  Everything here is a pure function of immutable
inputs, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass


def _ring(ring):
    if ring in ("z2", "Z2", "gf2"):
        return "z2"
    if ring in ("z", "Z", "int"):
        return "z"
    raise ValueError(f"unknown ring {ring!r} (expected 'z2' or 'z')")


class SparseMatrix:
    """Immutable sparse matrix with integer entries and no stored zeros."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows, cols, entries=()):
        self.rows = rows
        self.cols = cols
        data = {}
        for r, c, v in entries:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValueError(f"entry ({r},{c}) out of bounds for {rows}x{cols}")
            if (r, c) in data:
                raise ValueError(f"duplicate entry at ({r},{c})")
            if v != 0:
                data[(r, c)] = v
        self.entries = data

    @classmethod
    def from_dense(cls, array):
        rows = len(array)
        cols = len(array[0]) if rows else 0
        ent = [(i, j, array[i][j]) for i in range(rows) for j in range(cols) if array[i][j]]
        return cls(rows, cols, ent)

    @classmethod
    def identity(cls, n):
        return cls(n, n, [(i, i, 1) for i in range(n)])

    @classmethod
    def from_columns(cls, rows, columns):
        """Build from a list of {row: value} dicts."""
        ent = [(r, j, v) for j, col in enumerate(columns) for r, v in col.items()]
        return cls(rows, len(columns), ent)

    def to_dense(self):
        a = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            a[r][c] = v
        return a

    def column(self, j):
        return {r: v for (r, c), v in self.entries.items() if c == j}

    def columns(self):
        cols = [dict() for _ in range(self.cols)]
        for (r, c), v in self.entries.items():
            cols[c][r] = v
        return cols

    def transpose(self):
        return SparseMatrix(self.cols, self.rows,
                            [(c, r, v) for (r, c), v in self.entries.items()])

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        by_row = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc = {}
        for (r, k), v in self.entries.items():
            for c, w in by_row.get(k, ()):
                acc[(r, c)] = acc.get((r, c), 0) + v * w
        return SparseMatrix(self.rows, other.cols,
                            [(r, c, v) for (r, c), v in acc.items() if v])

    def mod2(self):
        return SparseMatrix(self.rows, self.cols,
                            [(r, c, 1) for (r, c), v in self.entries.items() if v % 2])

    def apply(self, vec, ring="z"):
        """Multiply by a sparse vector {index: value}."""
        out = {}
        for (r, c), v in self.entries.items():
            w = vec.get(c)
            if w:
                out[r] = out.get(r, 0) + v * w
        if _ring(ring) == "z2":
            return {r: 1 for r, v in out.items() if v % 2}
        return {r: v for r, v in out.items() if v}

    def nnz(self):
        return len(self.entries)

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(sorted(self.entries.items()))))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"


@dataclass(frozen=True)
class SNFResult:
    """U @ A @ V == D with U, V unimodular and D diagonal, d_i | d_{i+1}."""

    U: SparseMatrix
    D: SparseMatrix
    V: SparseMatrix

    def invariant_factors(self):
        d = {r: v for (r, c), v in self.D.entries.items() if r == c}
        return [d[i] for i in sorted(d)]


# -- GF(2) engine ---------------------------------------------------------

def _lsb(x):
    return (x & -x).bit_length() - 1


def bits_from_column(col):
    b = 0
    for r, v in col.items():
        if v % 2:
            b |= 1 << r
    return b


def column_from_bits(bits):
    col = {}
    while bits:
        r = _lsb(bits)
        col[r] = 1
        bits &= bits - 1
    return col


class Gf2Solver:
    """Incremental column reduction over GF(2).

    Keeps reduced columns R with distinct pivots (lowest set bit) together
    with combinations W expressing each reduced column in the inserted ones.
    """

    def __init__(self, columns=()):
        self.R = []
        self.W = []
        self.pivots = {}
        self.zero_combos = []
        self.n_inserted = 0
        for c in columns:
            self.add_column(c)

    def add_column(self, bits):
        """Insert a column; returns True if it was independent."""
        w = 1 << self.n_inserted
        self.n_inserted += 1
        while bits:
            p = _lsb(bits)
            k = self.pivots.get(p)
            if k is None:
                self.pivots[p] = len(self.R)
                self.R.append(bits)
                self.W.append(w)
                return True
            bits ^= self.R[k]
            w ^= self.W[k]
        self.zero_combos.append(w)
        return False

    @property
    def rank(self):
        return len(self.R)

    def reduce(self, bits):
        """Return (residue, combo) with residue == bits - A@combo over GF(2)."""
        w = 0
        while bits:
            p = _lsb(bits)
            k = self.pivots.get(p)
            if k is None:
                return bits, w
            bits ^= self.R[k]
            w ^= self.W[k]
        return 0, w

    def solve(self, bits):
        residue, w = self.reduce(bits)
        return w if residue == 0 else None

    def contains(self, bits):
        return self.reduce(bits)[0] == 0


def gf2_columns(A):
    cols = [0] * A.cols
    for (r, c), v in A.entries.items():
        if v % 2:
            cols[c] |= 1 << r
    return cols


# -- integer engine -------------------------------------------------------

class _Transform:
    """A unimodular matrix and its inverse, updated by elementary row ops.

    `rows` holds the matrix as row dicts; `inv_cols` holds the inverse as
    column dicts.  Row op L applied to the matrix pairs with the column op
    L^{-1} applied to the inverse from the right.
    """

    def __init__(self, n):
        self.n = n
        self.rows = [{i: 1} for i in range(n)]
        self.inv_cols = [{i: 1} for i in range(n)]

    def swap(self, i, j):
        if i == j:
            return
        self.rows[i], self.rows[j] = self.rows[j], self.rows[i]
        self.inv_cols[i], self.inv_cols[j] = self.inv_cols[j], self.inv_cols[i]

    def negate(self, i):
        self.rows[i] = {k: -v for k, v in self.rows[i].items()}
        self.inv_cols[i] = {k: -v for k, v in self.inv_cols[i].items()}

    def add_multiple(self, src, dst, q):
        """row[dst] += q*row[src]; inverse keeps col[src] -= q*col[dst]."""
        if q == 0:
            return
        row = self.rows[dst]
        for k, v in self.rows[src].items():
            nv = row.get(k, 0) + q * v
            if nv:
                row[k] = nv
            else:
                row.pop(k, None)
        col = self.inv_cols[src]
        for k, v in self.inv_cols[dst].items():
            nv = col.get(k, 0) - q * v
            if nv:
                col[k] = nv
            else:
                col.pop(k, None)

    def matrix(self):
        ent = [(i, j, v) for i, row in enumerate(self.rows) for j, v in row.items()]
        return SparseMatrix(self.n, self.n, ent)

    def inverse_matrix(self):
        ent = [(i, j, v) for j, col in enumerate(self.inv_cols) for i, v in col.items()]
        return SparseMatrix(self.n, self.n, ent)


class _SnfWork:
    """Smith normal form by positional pivoting.

    The working matrix is a list of column dicts plus a row index.  Unit
    pivots are preferred; leftovers fall back to smallest-magnitude pivots
    with Euclidean reduction.  With track=True the row transform U and the
    column transform V (stored transposed) are maintained with inverses so
    that U @ A @ V == D.
    """

    def __init__(self, A, track=True):
        self.m = A.rows
        self.n = A.cols
        self.cols = [dict() for _ in range(self.n)]
        self.row_index = [set() for _ in range(self.m)]
        for (r, c), v in A.entries.items():
            self.cols[c][r] = v
            self.row_index[r].add(c)
        self.track = track
        self.U = _Transform(self.m) if track else None
        self.Vt = _Transform(self.n) if track else None

    # -- elementary operations, mirrored into the transforms --

    def _row_swap(self, i, j):
        if i == j:
            return
        for c in self.row_index[i] | self.row_index[j]:
            col = self.cols[c]
            vi, vj = col.pop(i, None), col.pop(j, None)
            if vi is not None:
                col[j] = vi
            if vj is not None:
                col[i] = vj
        self.row_index[i], self.row_index[j] = self.row_index[j], self.row_index[i]
        if self.track:
            self.U.swap(i, j)

    def _col_swap(self, i, j):
        if i == j:
            return
        for r in set(self.cols[i]) | set(self.cols[j]):
            idx = self.row_index[r]
            has_i, has_j = i in idx, j in idx
            if has_i != has_j:
                if has_i:
                    idx.discard(i)
                    idx.add(j)
                else:
                    idx.discard(j)
                    idx.add(i)
        self.cols[i], self.cols[j] = self.cols[j], self.cols[i]
        if self.track:
            self.Vt.swap(i, j)

    def _row_negate(self, r):
        for c in self.row_index[r]:
            self.cols[c][r] = -self.cols[c][r]
        if self.track:
            self.U.negate(r)

    def _row_add(self, src, dst, q):
        """row[dst] += q*row[src]"""
        if q == 0:
            return
        for c in list(self.row_index[src]):
            col = self.cols[c]
            v = col.get(src)
            if v is None:
                continue
            nv = col.get(dst, 0) + q * v
            if nv:
                col[dst] = nv
                self.row_index[dst].add(c)
            else:
                col.pop(dst, None)
                self.row_index[dst].discard(c)
        if self.track:
            self.U.add_multiple(src, dst, q)

    def _col_add(self, src, dst, q):
        """col[dst] += q*col[src]"""
        if q == 0:
            return
        for r, v in list(self.cols[src].items()):
            col = self.cols[dst]
            nv = col.get(r, 0) + q * v
            if nv:
                col[r] = nv
                self.row_index[r].add(dst)
            else:
                col.pop(r, None)
                self.row_index[r].discard(dst)
        if self.track:
            # column op on A corresponds to a row op on V^T with same roles
            self.Vt.add_multiple(src, dst, q)

    # -- pivoting --

    def _find_pivot(self, t):
        best = None
        for c in range(t, self.n):
            for r, v in self.cols[c].items():
                if r < t:
                    continue
                a = abs(v)
                if a == 1:
                    weight = len(self.cols[c])
                    if best is None or best[0] > 1 or weight < best[3]:
                        best = (1, r, c, weight)
                        if weight == 1:
                            return best
                elif best is None or a < best[0]:
                    best = (a, r, c, len(self.cols[c]))
        return best

    def _clear_at(self, t):
        """Make (t,t) the only nonzero of row t and column t."""
        while True:
            if self.cols[t][t] < 0:
                self._row_negate(t)
            piv = self.cols[t][t]
            for r in [r for r in self.cols[t] if r > t]:
                v = self.cols[t].get(r)
                if v:
                    self._row_add(t, r, -(v // piv))
            # a residue strictly smaller than piv may remain; promote it
            resid = [(abs(v), r) for r, v in self.cols[t].items() if r > t and v]
            if resid:
                _, r = min(resid)
                self._row_swap(t, r)
                continue
            for c in [c for c in self.row_index[t] if c > t]:
                v = self.cols[c].get(t)
                if v:
                    self._col_add(t, c, -(v // piv))
            resid = [(abs(self.cols[c][t]), c) for c in self.row_index[t]
                     if c > t and self.cols[c].get(t)]
            if resid:
                _, c = min(resid)
                self._col_swap(t, c)
                continue
            return

    def run(self):
        t = 0
        limit = min(self.m, self.n)
        while t < limit:
            hit = self._find_pivot(t)
            if hit is None:
                break
            _, r, c, _ = hit
            self._row_swap(t, r)
            self._col_swap(t, c)
            self._clear_at(t)
            t += 1
        self.rank = t
        self._fix_divisibility()
        for i in range(self.rank):
            if self.cols[i][i] < 0:
                self._row_negate(i)
        return self

    def _fix_divisibility(self):
        rk = self.rank
        changed = True
        while changed:
            changed = False
            for i in range(rk - 1):
                a = self.cols[i][i]
                b = self.cols[i + 1][i + 1]
                if b % a == 0:
                    continue
                changed = True
                # fold column i+1 into column i and re-reduce the 2x2 block
                self._col_add(i + 1, i, 1)
                self._clear_at(i)

    def diagonal(self):
        return [self.cols[i][i] for i in range(self.rank)]

    def pieces(self):
        D = SparseMatrix(self.m, self.n,
                         [(i, i, self.cols[i][i]) for i in range(self.rank)])
        if not self.track:
            return D, None, None, None, None
        U = self.U.matrix()
        Uinv = self.U.inverse_matrix()
        V = self.Vt.matrix().transpose()
        Vinv = self.Vt.inverse_matrix().transpose()
        return D, U, Uinv, V, Vinv


def snf_pieces(A):
    """Internal: (D, U, Uinv, V, Vinv) with U @ A @ V == D."""
    return _SnfWork(A, track=True).run().pieces()


def smith_normal_form(A):
    """Smith normal form of an integer matrix."""
    D, U, _, V, _ = snf_pieces(A)
    return SNFResult(U=U, D=D, V=V)


# -- public operations ----------------------------------------------------

def rank(A, ring="z2"):
    """Rank over GF(2), or the rank of the rationalization over the integers."""
    if _ring(ring) == "z2":
        return Gf2Solver(gf2_columns(A)).rank
    return _SnfWork(A, track=False).run().rank


def kernel_basis(A, ring="z2"):
    """Vectors spanning ker A; over the integers, a basis of the kernel lattice.

    Returns sparse {row: value} dicts of length A.cols.
    """
    if _ring(ring) == "z2":
        solver = Gf2Solver(gf2_columns(A))
        return [column_from_bits(w) for w in solver.zero_combos]
    work = _SnfWork(A, track=True).run()
    D, _, _, V, _ = work.pieces()
    vcols = V.columns()
    return [vcols[j] for j in range(work.rank, A.cols)]


def solve(A, b, ring="z2"):
    """One solution x of A @ x = b, or None when b is not in the image.

    b may be a sparse dict {row: value} or a dense sequence of length A.rows.
    The absence of a solution is a value, not an error.
    """
    if not isinstance(b, dict):
        b = {i: v for i, v in enumerate(b) if v}
    else:
        b = {i: v for i, v in b.items() if v}
    for i in b:
        if not 0 <= i < A.rows:
            raise ValueError("right-hand side has entries out of range")
    if _ring(ring) == "z2":
        solver = Gf2Solver(gf2_columns(A))
        w = solver.solve(bits_from_column(b))
        return None if w is None else column_from_bits(w)
    return _solve_z(A, b)


class ZSolver:
    """Repeated integer solves against a fixed matrix via one SNF."""

    def __init__(self, A):
        self.A = A
        self.D, self.U, _, self.V, _ = snf_pieces(A)
        self.d = {r: v for (r, c), v in self.D.entries.items() if r == c}
        self.rank = len(self.d)

    def solve(self, b):
        ub = self.U.apply(b, "z")
        w = {}
        for i, v in ub.items():
            if i < self.rank:
                if v % self.d[i]:
                    return None
                q = v // self.d[i]
                if q:
                    w[i] = q
            elif v:
                return None
        return self.V.apply(w, "z")


def _solve_z(A, b):
    return ZSolver(A).solve(b)
