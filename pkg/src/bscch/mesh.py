"""Triangulated unit disk with an ordered boundary loop as the surface mesh.

The generator is fully deterministic: a polar construction with one center
vertex, ``nr`` concentric rings of ``nb`` vertices each, a fan of triangles
around the center and two triangles per angular sector between rings.  The
outermost ring, in counterclockwise angular order, is the discrete surface.

Meshes are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, MeshParseError, ValidationError

FORMAT_HEADER = "bscch-mesh 1"


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (T, 3), counterclockwise
    boundary_loop: np.ndarray  # (B,) ordered closed cycle, counterclockwise

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.ascontiguousarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles", np.ascontiguousarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "boundary_loop", np.ascontiguousarray(self.boundary_loop, dtype=np.int64))
        validate_mesh(self)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_boundary(self):
        return self.boundary_loop.shape[0]

    @property
    def boundary_edges(self):
        loop = self.boundary_loop
        return np.stack([loop, np.roll(loop, -1)], axis=1)


@dataclass(frozen=True)
class MeshStats:
    h_max: float
    area: float
    perimeter: float
    min_angle: float  # degrees


def _signed_areas(vertices, triangles):
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def validate_mesh(mesh: TriMesh):
    """Raise ValidationError if any structural invariant is violated."""
    v, t, loop = mesh.vertices, mesh.triangles, mesh.boundary_loop
    if v.ndim != 2 or v.shape[1] != 2:
        raise ValidationError("vertices must be an (V,2) array")
    if not np.all(np.isfinite(v)):
        raise ValidationError("non-finite vertex coordinates")
    if t.size and (t.min() < 0 or t.max() >= len(v)):
        raise ValidationError("triangle vertex index out of range")
    if loop.size and (loop.min() < 0 or loop.max() >= len(v)):
        raise ValidationError("boundary index out of range")
    if len(np.unique(loop)) != len(loop):
        raise ValidationError("boundary loop visits a vertex twice")

    areas = _signed_areas(v, t)
    if np.any(areas <= 0):
        raise ValidationError("triangle with non-positive signed area (clockwise or degenerate)")

    # each boundary edge must belong to exactly one triangle, and the loop
    # must be the full set of single-triangle edges
    edges = {}
    for tri in t:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    single = {k for k, cnt in edges.items() if cnt == 1}
    if any(cnt > 2 for cnt in edges.values()):
        raise ValidationError("non-manifold edge")
    loop_edges = {(min(a, b), max(a, b)) for a, b in zip(loop, np.roll(loop, -1))}
    if loop_edges != single:
        raise ValidationError("boundary loop is not the closed cycle of boundary edges")

    # counterclockwise orientation of the loop (positive polygon area)
    x, y = v[loop, 0], v[loop, 1]
    poly_area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if poly_area <= 0:
        raise ValidationError("boundary loop is not counterclockwise")


def generate_disk_mesh(nb: int, nr: int) -> TriMesh:
    """Polar triangulation of the unit disk.

    ``nb`` vertices per ring (even, >= 8), ``nr`` rings.  Produces
    1 + nb*nr vertices and nb*(2nr - 1) triangles; every boundary vertex
    sits exactly on the unit circle.
    """
    if nb < 8 or nb % 2 != 0:
        raise InvalidArgument("nb must be an even integer >= 8")
    if nr < 1:
        raise InvalidArgument("nr must be >= 1")

    angles = 2.0 * np.pi * np.arange(nb) / nb
    cos, sin = np.cos(angles), np.sin(angles)
    verts = [np.zeros((1, 2))]
    for k in range(1, nr + 1):
        rad = k / nr
        verts.append(np.stack([rad * cos, rad * sin], axis=1))
    vertices = np.concatenate(verts, axis=0)

    def ring(k, j):
        return 1 + (k - 1) * nb + (j % nb)

    tris = []
    for j in range(nb):
        tris.append((0, ring(1, j), ring(1, j + 1)))
    for k in range(1, nr):
        for j in range(nb):
            tris.append((ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)))
            tris.append((ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)))
    triangles = np.array(tris, dtype=np.int64)

    loop = np.array([ring(nr, j) for j in range(nb)], dtype=np.int64)
    return TriMesh(vertices=vertices, triangles=triangles, boundary_loop=loop)


def mesh_stats(mesh: TriMesh) -> MeshStats:
    v, t = mesh.vertices, mesh.triangles
    p = v[t]
    e0 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    e1 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
    e2 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
    h_max = float(max(e0.max(), e1.max(), e2.max()))
    area = float(np.sum(_signed_areas(v, t)))

    edges = mesh.boundary_edges
    lens = np.linalg.norm(v[edges[:, 1]] - v[edges[:, 0]], axis=1)
    perimeter = float(np.sum(lens))

    # min angle via the law of cosines over all triangle corners
    def corner(a, b, c):
        cosang = (b**2 + c**2 - a**2) / (2 * b * c)
        return np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))

    ang = np.minimum(np.minimum(corner(e0, e1, e2), corner(e1, e2, e0)), corner(e2, e0, e1))
    return MeshStats(h_max=h_max, area=area, perimeter=perimeter, min_angle=float(ang.min()))


def write_mesh(mesh: TriMesh, path):
    """ASCII mesh file: header, counts, coordinates (17 significant digits),
    triangles, boundary loop."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(FORMAT_HEADER + "\n")
        fh.write(f"{mesh.n_vertices} {len(mesh.triangles)} {mesh.n_boundary}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        for i in mesh.boundary_loop:
            fh.write(f"{i}\n")


def read_mesh(path) -> TriMesh:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()

    def need(idx):
        if idx >= len(lines):
            raise MeshParseError("unexpected end of file", line=idx + 1)
        return lines[idx]

    if need(0).strip() != FORMAT_HEADER:
        raise MeshParseError(f"expected header {FORMAT_HEADER!r}", line=1)
    try:
        nv, nt, nb = (int(tok) for tok in need(1).split())
    except ValueError as exc:
        raise MeshParseError(f"bad counts line: {exc}", line=2) from exc

    idx = 2
    verts = np.empty((nv, 2))
    for i in range(nv):
        toks = need(idx).split()
        try:
            verts[i] = [float(toks[0]), float(toks[1])]
        except (IndexError, ValueError) as exc:
            raise MeshParseError(f"bad vertex line: {exc}", line=idx + 1) from exc
        idx += 1
    tris = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        toks = need(idx).split()
        try:
            tris[i] = [int(toks[0]), int(toks[1]), int(toks[2])]
        except (IndexError, ValueError) as exc:
            raise MeshParseError(f"bad triangle line: {exc}", line=idx + 1) from exc
        idx += 1
    loop = np.empty(nb, dtype=np.int64)
    for i in range(nb):
        try:
            loop[i] = int(need(idx).strip())
        except ValueError as exc:
            raise MeshParseError(f"bad boundary index: {exc}", line=idx + 1) from exc
        idx += 1

    return TriMesh(vertices=verts, triangles=tris, boundary_loop=loop)
