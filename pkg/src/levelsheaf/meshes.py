"""Builders for the standard test surfaces and maps used throughout.

All values are rounded to nine decimals so symmetric vertices get exactly
equal heights; downstream code groups critical value candidates by exact
float equality.
"""

from __future__ import annotations

import math

from .complexes import SimplicialComplex
from .maps import CIRCLE, REAL, PLMap, circ

_ROUND = 9


def _r(v):
    return round(v, _ROUND)


def circle_complex(n):
    """Triangulated circle with n vertices (n >= 3)."""
    if n < 3:
        raise ValueError("need at least three vertices")
    edges = [tuple(sorted((i, (i + 1) % n))) for i in range(n)]
    return SimplicialComplex.from_maximal(n, edges)


def circle_height(n=12):
    """Height function on a round circle: one minimum, one maximum."""
    K = circle_complex(n)
    vals = [_r(-math.cos(2 * math.pi * i / n)) for i in range(n)]
    return PLMap(K, REAL, vals)


def circle_self_map(degree, n=None):
    """A circle-valued map on a circle of degree `degree`.

    Degree zero folds the circle onto an arc; other degrees wrap uniformly.
    """
    if degree == 0:
        n = n or 6
        K = circle_complex(n)
        vals = [_r(0.1 + 0.3 * (1 - math.cos(2 * math.pi * i / n)) / 2)
                for i in range(n)]
        return PLMap(K, CIRCLE, vals)
    n = n or 3 * abs(degree)
    if n < 3 * abs(degree):
        raise ValueError("need at least 3 vertices per wrap")
    K = circle_complex(n)
    vals = [circ(degree * i / n) for i in range(n)]
    return PLMap(K, CIRCLE, vals)


def sphere_tetra():
    """Boundary of the 3-simplex."""
    import itertools
    return SimplicialComplex.from_maximal(4, itertools.combinations(range(4), 3))


def sphere_octahedron():
    faces = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 1, 4),
             (1, 2, 5), (2, 3, 5), (3, 4, 5), (1, 4, 5)]
    return SimplicialComplex.from_maximal(6, faces)


def sphere_globe(n_rings=5, n_sectors=8):
    """Latitude-longitude sphere; returns (complex, height values)."""
    if n_rings < 2 or n_sectors < 3:
        raise ValueError("globe needs n_rings >= 2 and n_sectors >= 3")
    north = 0
    vid = lambda ring, sector: 1 + ring * n_sectors + (sector % n_sectors)
    south = 1 + n_rings * n_sectors
    faces = []
    for s in range(n_sectors):
        faces.append((north, vid(0, s), vid(0, s + 1)))
        faces.append((south, vid(n_rings - 1, s), vid(n_rings - 1, s + 1)))
    for r in range(n_rings - 1):
        for s in range(n_sectors):
            a, b = vid(r, s), vid(r, s + 1)
            c, d = vid(r + 1, s), vid(r + 1, s + 1)
            faces.append((a, b, d))
            faces.append((a, c, d))
    K = SimplicialComplex.from_maximal(south + 1, faces)
    values = [0.0] * (south + 1)
    values[north] = _r(1.0)
    values[south] = _r(-1.0)
    for r in range(n_rings):
        z = _r(math.cos(math.pi * (r + 1) / (n_rings + 1)))
        for s in range(n_sectors):
            values[vid(r, s)] = z
    return K, values


def sphere_height(n_rings=5, n_sectors=8):
    K, values = sphere_globe(n_rings, n_sectors)
    return PLMap(K, REAL, values)


def torus_grid(nx, ny):
    """Flat torus on an nx-by-ny vertex grid, squares split by a diagonal."""
    if nx < 3 or ny < 3:
        raise ValueError("torus grid needs nx, ny >= 3")
    vid = lambda i, j: (i % nx) * ny + (j % ny)
    faces = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            faces.append((v00, v10, v11))
            faces.append((v00, v01, v11))
    return SimplicialComplex.from_maximal(nx * ny, faces)


def standing_torus(nphi=32, ntheta=8, R=2.0, r=1.0):
    """Torus standing on end; returns (complex, height values).

    Height (R + r cos theta) sin phi has the four classic critical values
    -(R+r), -(R-r), R-r, R+r when nphi % 4 == 0 and ntheta % 2 == 0.
    """
    if nphi % 4 or ntheta % 2:
        raise ValueError("need nphi % 4 == 0 and ntheta % 2 == 0")
    K = torus_grid(nphi, ntheta)
    values = [0.0] * (nphi * ntheta)
    for i in range(nphi):
        s = math.sin(2 * math.pi * i / nphi)
        for j in range(ntheta):
            c = math.cos(2 * math.pi * j / ntheta)
            values[i * ntheta + j] = _r((R + r * c) * s)
    return K, values


def torus_height(nphi=32, ntheta=8, R=2.0, r=1.0):
    K, values = standing_torus(nphi, ntheta, R, r)
    return PLMap(K, REAL, values)


def example_circle_projection(nphi=32, ntheta=8, lo=0.05, hi=0.65):
    """The torus pressed onto a circle: heights rescaled onto an arc.

    The preimage of an arc around one of the two middle critical values is
    a pair of pants.  Returns (map, critical circle values low to high).
    """
    K, values = standing_torus(nphi, ntheta)
    vmin, vmax = -3.0, 3.0
    scale = (hi - lo) / (vmax - vmin)
    vals = [_r(lo + (v - vmin) * scale) for v in values]
    crits = [_r(lo + (c - vmin) * scale) for c in (-3.0, -1.0, 1.0, 3.0)]
    return PLMap(K, CIRCLE, vals), crits


def klein_grid(n=4):
    """Klein bottle from an n-by-n grid with one orientation-reversing wrap."""
    if n < 4:
        raise ValueError("klein grid needs n >= 4")

    def v(i, j):
        if j >= n:
            j -= n
            i = -i
        return (i % n) * n + (j % n)
    faces = []
    for i in range(n):
        for j in range(n):
            v00, v10 = v(i, j), v(i + 1, j)
            v01, v11 = v(i, j + 1), v(i + 1, j + 1)
            faces.append((v00, v10, v11))
            faces.append((v00, v01, v11))
    return SimplicialComplex.from_maximal(n * n, faces)


def projective_plane():
    """Minimal six-vertex triangulation of the projective plane."""
    faces = [(0, 1, 3), (0, 1, 4), (0, 2, 3), (0, 2, 5), (0, 4, 5),
             (1, 2, 4), (1, 2, 5), (1, 3, 5), (2, 3, 4), (3, 4, 5)]
    return SimplicialComplex.from_maximal(6, faces)


def double_torus_height(nphi=16, ntheta=8, level=2.0):
    """Genus-two surface glued from a standing torus and its reflection.

    Both copies carry a triangle levelled at `level`; removing it from each
    and identifying the boundary triangles yields a closed genus-2 surface
    whose height function agrees across the glue circle.
    """
    K, values = standing_torus(nphi, ntheta)
    tri = _pick_glue_triangle(K, values, level)
    values = list(values)
    for vtx in tri:
        values[vtx] = _r(level)
    n = K.vertex_count
    faces_a = [f for f in K.simplices[2] if f != tri]
    mirror = [_r(2 * level - v) for v in values]

    def relabel(vv):
        return vv if vv in tri else vv + n

    faces_b = [tuple(sorted(relabel(vv) for vv in f))
               for f in K.simplices[2] if f != tri]
    used = sorted({vv for f in faces_a + faces_b for vv in f})
    pack = {vv: i for i, vv in enumerate(used)}
    faces = [tuple(sorted(pack[vv] for vv in f)) for f in faces_a + faces_b]
    K2 = SimplicialComplex.from_maximal(len(used), faces)
    vals = [0.0] * len(used)
    for vv, i in pack.items():
        vals[i] = values[vv] if vv < n else mirror[vv - n]
    return PLMap(K2, REAL, vals)


def _pick_glue_triangle(K, values, level):
    best = None
    for f in K.simplices[2]:
        vv = [values[v] for v in f]
        lo, hi = min(vv), max(vv)
        spread = hi - lo
        centre = abs(sum(vv) / 3 - level)
        score = (centre, spread)
        if lo > 1.2 and hi < 2.8 and (best is None or score < best[0]):
            best = (score, f)
    if best is None:
        raise ValueError("no suitable glue triangle away from critical levels")
    return best[1]
