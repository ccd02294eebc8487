"""Exact linear algebra: hand-checked examples plus randomized properties."""

import itertools
import math
import random

import pytest

from levelsheaf.linalg import (
    Gf2Solver,
    SparseMatrix,
    bits_from_column,
    column_from_bits,
    gf2_columns,
    kernel_basis,
    rank,
    smith_normal_form,
    solve,
)


def d1_matrix(n_vertices, edges, signed=False):
    """Boundary of edges: rows are vertices, one column per edge."""
    ent = []
    for j, (u, v) in enumerate(edges):
        if signed:
            ent.append((u, j, -1))
            ent.append((v, j, 1))
        else:
            ent.append((u, j, 1))
            ent.append((v, j, 1))
    return SparseMatrix(n_vertices, len(edges), ent)


def d2_matrix(edges, faces):
    """Signed boundary of triangles with sorted-vertex orientation."""
    edge_index = {e: i for i, e in enumerate(edges)}
    ent = []
    for j, f in enumerate(faces):
        f = tuple(sorted(f))
        for i in range(3):
            face = tuple(v for k, v in enumerate(f) if k != i)
            ent.append((edge_index[face], j, (-1) ** i))
    return SparseMatrix(len(edges), len(faces), ent)


RP2_FACES = [(1, 2, 4), (1, 2, 5), (1, 3, 4), (1, 3, 6), (1, 5, 6),
             (2, 3, 5), (2, 3, 6), (2, 4, 6), (3, 4, 5), (4, 5, 6)]


def rp2_d2():
    faces = [tuple(sorted(v - 1 for v in f)) for f in RP2_FACES]
    edges = sorted({e for f in faces for e in itertools.combinations(f, 2)})
    return d2_matrix(edges, faces)


def det_bareiss(a):
    """Fraction-free determinant, used as an independent oracle."""
    a = [row[:] for row in a]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def random_sparse(rng, rows, cols, lo=-3, hi=3, density=0.5):
    ent = []
    for i in range(rows):
        for j in range(cols):
            if rng.random() < density:
                v = rng.randint(lo, hi)
                if v:
                    ent.append((i, j, v))
    return SparseMatrix(rows, cols, ent)


# -- rank -------------------------------------------------------------------

def test_rank_identity_gf2():
    assert rank(SparseMatrix.identity(3), "z2") == 3


def test_rank_filled_triangle_boundary():
    # vertices 0,1,2; edges (0,1),(0,2),(1,2); elimination by hand gives 2
    A = d1_matrix(3, [(0, 1), (0, 2), (1, 2)])
    assert rank(A, "z2") == 2


def test_rank_zero_matrix():
    assert rank(SparseMatrix(4, 5), "z2") == 0
    assert rank(SparseMatrix(4, 5), "z") == 0


def test_rank_z_rationalization():
    A = SparseMatrix.from_dense([[2, 4], [1, 2]])
    assert rank(A, "z") == 1


# -- kernel -----------------------------------------------------------------

def test_kernel_identity_empty():
    assert kernel_basis(SparseMatrix.identity(4), "z2") == []


def test_kernel_triangle_circle():
    # hand elimination: the only cycle is the sum of all three edges
    A = d1_matrix(3, [(0, 1), (0, 2), (1, 2)])
    ker = kernel_basis(A, "z2")
    assert len(ker) == 1
    assert ker[0] == {0: 1, 1: 1, 2: 1}


def test_kernel_two_column_sum():
    A = SparseMatrix.from_dense([[1, 1]])
    ker = kernel_basis(A, "z2")
    assert ker == [{0: 1, 1: 1}]


def test_kernel_z_lattice():
    A = SparseMatrix.from_dense([[2, 4]])
    ker = kernel_basis(A, "z")
    assert len(ker) == 1
    v = ker[0]
    # must span the kernel lattice: (2, -1) up to sign, not (4, -2)
    x, y = v.get(0, 0), v.get(1, 0)
    assert 2 * x + 4 * y == 0
    assert abs(math.gcd(x, y)) == 1


# -- solve ------------------------------------------------------------------

def test_solve_identity():
    A = SparseMatrix.identity(3)
    b = {0: 1, 2: 1}
    assert solve(A, b, "z2") == b


def test_solve_underdetermined_postcheck():
    A = SparseMatrix.from_dense([[1, 1]])
    x = solve(A, {0: 1}, "z2")
    assert x is not None
    assert A.apply(x, "z2") == {0: 1}


def test_solve_no_solution():
    A = SparseMatrix.from_dense([[1], [1]])
    assert solve(A, {0: 1}, "z2") is None
    assert solve(SparseMatrix.from_dense([[2]]), {0: 1}, "z") is None


def test_solve_sphere_filling():
    # boundary of the 3-simplex: faces of {0,1,2,3}; fill the equator cycle
    faces = list(itertools.combinations(range(4), 3))
    edges = sorted({e for f in faces for e in itertools.combinations(f, 2)})
    A = d2_matrix(edges, faces)
    eidx = {e: i for i, e in enumerate(edges)}
    cycle = {eidx[(0, 1)]: 1, eidx[(1, 2)]: 1, eidx[(0, 2)]: -1}
    x = solve(A, cycle, "z")
    assert x is not None
    assert A.apply(x, "z") == cycle


# -- Smith normal form ------------------------------------------------------

def check_snf(A, res):
    left = res.U @ A @ res.V
    assert left == res.D
    facs = res.invariant_factors()
    assert all(f > 0 for f in facs)
    for a, b in zip(facs, facs[1:]):
        assert b % a == 0
    assert abs(det_bareiss(res.U.to_dense())) == 1
    assert abs(det_bareiss(res.V.to_dense())) == 1


def test_snf_single_entry():
    A = SparseMatrix.from_dense([[2]])
    res = smith_normal_form(A)
    check_snf(A, res)
    assert res.invariant_factors() == [2]


def test_snf_already_diagonal():
    A = SparseMatrix.from_dense([[1, 0], [0, 6]])
    res = smith_normal_form(A)
    check_snf(A, res)
    assert res.invariant_factors() == [1, 6]


def test_snf_divisibility_fix():
    A = SparseMatrix.from_dense([[2, 0], [0, 3]])
    res = smith_normal_form(A)
    check_snf(A, res)
    assert res.invariant_factors() == [1, 6]


def test_snf_rp2_torsion():
    # one invariant factor 2 in the triangle boundary of projective space
    A = rp2_d2()
    res = smith_normal_form(A)
    check_snf(A, res)
    facs = res.invariant_factors()
    assert facs.count(2) == 1
    assert all(f in (1, 2) for f in facs)
    assert len(facs) == 10


def test_snf_random_roundtrip():
    rng = random.Random(7)
    for _ in range(40):
        A = random_sparse(rng, rng.randint(1, 5), rng.randint(1, 5))
        check_snf(A, smith_normal_form(A))


def test_snf_determinantal_divisors():
    rng = random.Random(11)
    for _ in range(25):
        m, n = rng.randint(1, 4), rng.randint(1, 4)
        A = random_sparse(rng, m, n, density=0.8)
        facs = smith_normal_form(A).invariant_factors()
        dense = A.to_dense()
        for k in range(1, min(m, n) + 1):
            minors = []
            for ri in itertools.combinations(range(m), k):
                for ci in itertools.combinations(range(n), k):
                    sub = [[dense[i][j] for j in ci] for i in ri]
                    minors.append(det_bareiss(sub))
            g = 0
            for v in minors:
                g = math.gcd(g, v)
            if k <= len(facs):
                prod = 1
                for f in facs[:k]:
                    prod *= f
                assert g == prod
            else:
                assert g == 0


# -- properties -------------------------------------------------------------

def test_rank_plus_nullity_gf2():
    rng = random.Random(3)
    for _ in range(50):
        A = random_sparse(rng, rng.randint(1, 8), rng.randint(1, 8),
                          lo=0, hi=1, density=0.4)
        assert rank(A, "z2") + len(kernel_basis(A, "z2")) == A.cols


def test_kernel_vectors_annihilate():
    rng = random.Random(5)
    for _ in range(30):
        A = random_sparse(rng, rng.randint(1, 6), rng.randint(1, 6))
        for v in kernel_basis(A, "z2"):
            assert A.apply(v, "z2") == {}
        for v in kernel_basis(A, "z"):
            assert A.apply(v, "z") == {}


def test_solve_postcheck_random():
    rng = random.Random(9)
    for _ in range(40):
        A = random_sparse(rng, rng.randint(1, 6), rng.randint(1, 6))
        x0 = {j: rng.randint(-2, 2) for j in range(A.cols)}
        b = A.apply(x0, "z")
        x = solve(A, b, "z")
        assert x is not None
        assert A.apply(x, "z") == b
        b2 = A.apply({k: v for k, v in x0.items()}, "z2")
        x2 = solve(A, b2, "z2")
        assert x2 is not None
        assert A.apply(x2, "z2") == b2


def test_gf2_solver_incremental():
    A = d1_matrix(3, [(0, 1), (0, 2), (1, 2)])
    solver = Gf2Solver(gf2_columns(A))
    assert solver.rank == 2
    assert len(solver.zero_combos) == 1
    b = bits_from_column({0: 1, 1: 1})
    w = solver.solve(b)
    assert w is not None
    combo = column_from_bits(w)
    assert A.apply(combo, "z2") == {0: 1, 1: 1}


def test_sparse_matrix_validation():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, [(0, 0, 1), (0, 0, 1)])
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, [(2, 0, 1)])
    # stored zeros are dropped silently
    assert SparseMatrix(2, 2, [(0, 0, 0)]).nnz() == 0
