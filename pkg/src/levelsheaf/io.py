"""Text formats for meshes and vertex functions.

Mesh (.smc): line 1 `dim m`, line 2 `vertices n`, then one line per maximal
simplex as space-separated vertex ids.  Function (.fun): header line
`target real|circle`, then one value per vertex line, in vertex order.
"""

from __future__ import annotations

from .complexes import SimplicialComplex
from .errors import MeshFormatError
from .maps import PLMap


def _lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield no, line


def load_mesh(path):
    rows = list(_lines(path))
    if len(rows) < 2:
        raise MeshFormatError(path, 1, "expected 'dim m' and 'vertices n' headers")
    no, line = rows[0]
    parts = line.split()
    if len(parts) != 2 or parts[0] != "dim" or not parts[1].lstrip("-").isdigit():
        raise MeshFormatError(path, no, f"expected 'dim m', got {line!r}")
    dim = int(parts[1])
    no, line = rows[1]
    parts = line.split()
    if len(parts) != 2 or parts[0] != "vertices" or not parts[1].isdigit():
        raise MeshFormatError(path, no, f"expected 'vertices n', got {line!r}")
    n = int(parts[1])
    maximal = []
    for no, line in rows[2:]:
        try:
            ids = [int(tok) for tok in line.split()]
        except ValueError:
            raise MeshFormatError(path, no, f"non-integer vertex id in {line!r}")
        if len(set(ids)) != len(ids):
            raise MeshFormatError(path, no, "repeated vertex in simplex")
        if any(v < 0 or v >= n for v in ids):
            raise MeshFormatError(path, no, "vertex id out of range")
        if len(ids) - 1 > dim:
            raise MeshFormatError(path, no, f"simplex exceeds declared dim {dim}")
        maximal.append(tuple(ids))
    if not maximal:
        raise MeshFormatError(path, len(rows), "mesh has no simplices")
    try:
        K = SimplicialComplex.from_maximal(n, maximal)
    except ValueError as exc:
        raise MeshFormatError(path, rows[-1][0], str(exc))
    return K


def save_mesh(K, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim {K.dimension}\n")
        fh.write(f"vertices {K.vertex_count}\n")
        for s in K.maximal_simplices():
            fh.write(" ".join(str(v) for v in s) + "\n")


def load_function(path):
    """Returns (target_kind, values)."""
    rows = list(_lines(path))
    if not rows:
        raise MeshFormatError(path, 1, "empty function file")
    no, line = rows[0]
    parts = line.split()
    if len(parts) != 2 or parts[0] != "target" or parts[1] not in ("real", "circle"):
        raise MeshFormatError(path, no, f"expected 'target real|circle', got {line!r}")
    target = parts[1]
    values = []
    for no, line in rows[1:]:
        try:
            values.append(float(line))
        except ValueError:
            raise MeshFormatError(path, no, f"not a number: {line!r}")
    return target, values


def save_function(f, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"target {f.target}\n")
        for v in f.values:
            fh.write(f"{v!r}\n")


def load_map(mesh_path, fun_path):
    K = load_mesh(mesh_path)
    target, values = load_function(fun_path)
    if len(values) != K.vertex_count:
        raise MeshFormatError(
            fun_path, 1 + len(values) + 1,
            f"{len(values)} values for {K.vertex_count} vertices")
    return PLMap(K, target, values)
