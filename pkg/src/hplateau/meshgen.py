"""Mesh generators: concentric-ring disks, coaxial sphere tilings, refinement.

Sphere tilings are built around an axis: polar caps are concentric-ring
meshes and the zones between prescribed latitude circles are structured
quad strips. Every latitude circle and every bridge meridian lies on mesh
edges, so a Jordan curve assembled from circle arcs and meridian segments
splits the tiling into two disk meshes that share the curve's vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .mesh import MeshError, TriangulatedDisk

__all__ = [
    "RingDisk",
    "ring_disk",
    "zip_rings",
    "Bridge",
    "SphereTiling",
    "coaxial_sphere_tiling",
    "split_by_curve",
    "refine_midpoint",
    "tutte_embedding",
    "torsion_profile",
    "polyline_is_simple",
    "rotation_to_axis",
]

TWO_PI = 2.0 * np.pi


def zip_rings(inner: Sequence[int], inner_angles: np.ndarray,
              outer: Sequence[int], outer_angles: np.ndarray) -> List[Tuple[int, int, int]]:
    """Triangulate the strip between two concentric rings by merging on angle.

    Angles must be ascending in ``[0, 2*pi)``. Triangles are counter-clockwise
    when the rings are counter-clockwise in the plane.
    """
    p, q = len(inner), len(outer)
    a = np.concatenate([inner_angles, [inner_angles[0] + TWO_PI]])
    b = np.concatenate([outer_angles, [outer_angles[0] + TWO_PI]])
    tris = []
    i = j = 0
    while i < p or j < q:
        if i < p and (j >= q or a[i + 1] <= b[j + 1]):
            tris.append((inner[i], outer[j % q], inner[(i + 1) % p]))
            i += 1
        else:
            tris.append((inner[i % p], outer[j], outer[(j + 1) % q]))
            j += 1
    return tris


@dataclass(frozen=True)
class RingDisk:
    """Planar concentric-ring disk: ``points`` in the unit disk, polar ``s, phi``."""

    points: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray
    s: np.ndarray
    phi: np.ndarray
    rings: Tuple[np.ndarray, ...]

    def as_disk(self) -> TriangulatedDisk:
        v = np.column_stack([self.points, np.zeros(len(self.points))])
        return TriangulatedDisk(v, self.triangles, self.boundary_loop)


def ring_disk(m: int, outer_angles: Optional[np.ndarray] = None,
              counts: Optional[Sequence[int]] = None) -> RingDisk:
    """Concentric-ring triangulation of the unit disk with ``m`` rings.

    By default ring ``k`` carries ``6k`` equally spaced vertices at radius
    ``k/m``. ``outer_angles`` overrides the outer ring, ``counts`` the inner ones.
    """
    if m < 1:
        raise ValueError("need at least one ring")
    if outer_angles is None:
        outer_angles = TWO_PI * np.arange(6 * m) / (6 * m)
    outer_angles = np.asarray(outer_angles, dtype=float)
    if counts is None:
        counts = [6 * k for k in range(1, m)]
    counts = list(counts) + [len(outer_angles)]
    s_list, phi_list, rings = [np.zeros(1)], [np.zeros(1)], [np.array([0])]
    start = 1
    for k in range(1, m + 1):
        n_k = counts[k - 1]
        ang = outer_angles if k == m else TWO_PI * np.arange(n_k) / n_k
        s_list.append(np.full(n_k, k / m))
        phi_list.append(ang)
        rings.append(np.arange(start, start + n_k))
        start += n_k
    s = np.concatenate(s_list)
    phi = np.concatenate(phi_list)
    tris: List[Tuple[int, int, int]] = []
    first = rings[1]
    for j in range(len(first)):
        tris.append((0, first[j], first[(j + 1) % len(first)]))
    for k in range(1, m):
        tris += zip_rings(rings[k], phi[rings[k]], rings[k + 1], phi[rings[k + 1]])
    pts = np.column_stack([s * np.cos(phi), s * np.sin(phi)])
    pts[0] = 0.0
    return RingDisk(pts, np.array(tris, dtype=np.int64), rings[-1].copy(), s, phi, tuple(rings))


def rotation_to_axis(axis: Sequence[float]) -> np.ndarray:
    """Right-handed frame ``[e1, e2, e3]`` (rows) with ``e3`` along ``axis``."""
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    if np.allclose(e3, [0, 0, 1]):
        return np.eye(3)
    if np.allclose(e3, [0, 0, -1]):
        return np.diag([1.0, -1.0, -1.0])
    if np.allclose(e3, [1, 0, 0]):
        return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    helper = np.array([0.0, 0.0, 1.0]) if abs(e3[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(helper, e3)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.array([e1, e2, e3])


@dataclass(frozen=True)
class Bridge:
    """Meridian strip crossing the zone between levels ``zone`` and ``zone + 1``."""

    zone: int
    center: float
    half_width: float


@dataclass(frozen=True)
class SphereTiling:
    """Structured triangulation of a sphere around an axis.

    ``level_rows[i]`` holds the vertex ids on latitude circle ``i`` (one per
    entry of ``longitudes``); ``zone_rows[i]`` lists the rows from level ``i``
    to level ``i + 1`` inclusive.
    """

    mesh: TriangulatedDisk
    longitudes: np.ndarray
    level_angles: np.ndarray
    level_rows: Tuple[np.ndarray, ...]
    zone_rows: Tuple[Tuple[np.ndarray, ...], ...]
    north_cap: np.ndarray
    south_cap: np.ndarray
    north_pole: int
    south_pole: int
    frame: np.ndarray
    radius: float
    polar: np.ndarray
    azimuth: np.ndarray


def _longitudes(bridges: Sequence[Bridge], h_phi: float) -> np.ndarray:
    breaks = sorted({(b.center + sgn * b.half_width) % TWO_PI for b in bridges for sgn in (-1, 1)})
    if not breaks:
        n = max(6, int(np.ceil(TWO_PI / h_phi)))
        return TWO_PI * np.arange(n) / n
    out = []
    for k, a in enumerate(breaks):
        b = breaks[(k + 1) % len(breaks)]
        length = (b - a) % TWO_PI
        if length == 0.0:
            length = TWO_PI
        n = max(1, int(np.ceil(length / h_phi - 1e-9)))
        out.extend(a + length * np.arange(n) / n)
    out = np.mod(np.array(out), TWO_PI)
    order = np.argsort(out, kind="stable")
    return out[order]


def coaxial_sphere_tiling(
    level_angles: Sequence[float],
    spacing: float,
    bridges: Sequence[Bridge] = (),
    axis: Sequence[float] = (0.0, 0.0, 1.0),
    radius: float = 1.0,
    n_longitudes: Optional[int] = None,
) -> SphereTiling:
    """Triangulate the sphere with latitude circles at the given polar angles.

    ``spacing`` is the target edge length on the unit sphere. Polar angles are
    measured from the ``+axis`` pole and must be strictly increasing in (0, pi).
    """
    alpha = np.asarray(level_angles, dtype=float)
    if np.any(np.diff(alpha) <= 0) or alpha[0] <= 0 or alpha[-1] >= np.pi:
        raise ValueError("level angles must increase strictly inside (0, pi)")
    frame = rotation_to_axis(axis)
    sin_max = float(np.max(np.sin(alpha)))
    if n_longitudes is not None and not bridges:
        lon = TWO_PI * np.arange(n_longitudes) / n_longitudes
    else:
        lon = _longitudes(bridges, spacing / sin_max)
    for br in bridges:
        if not 0 <= br.zone < len(alpha) - 1:
            raise ValueError(f"bridge zone {br.zone} out of range")
    N = len(lon)
    polar: List[float] = []
    azim: List[float] = []

    def add(pa: np.ndarray, az: np.ndarray) -> np.ndarray:
        start = len(polar)
        polar.extend(np.broadcast_to(pa, az.shape).tolist())
        azim.extend(az.tolist())
        return np.arange(start, start + len(az))

    tris: List[Tuple[int, int, int]] = []

    def cap(alpha_edge: float, outer: np.ndarray, north: bool) -> Tuple[int, np.ndarray]:
        h_r = spacing
        m = max(1, int(round(alpha_edge / h_r)))
        ring_ids = []
        pole = add(np.array(0.0 if north else np.pi), np.zeros(1))[0]
        counts = []
        for k in range(1, m):
            a_k = alpha_edge * k / m
            n_k = max(3, int(round(N * np.sin(a_k) / np.sin(alpha_edge))))
            counts.append(n_k)
            ang = TWO_PI * np.arange(n_k) / n_k
            pa = a_k if north else np.pi - a_k
            ring_ids.append(add(np.array(pa), ang))
        ring_ids.append(outer)
        ring_angles = [np.asarray(azim)[r] for r in ring_ids]
        local: List[Tuple[int, int, int]] = []
        r0 = ring_ids[0]
        for j in range(len(r0)):
            local.append((pole, r0[j], r0[(j + 1) % len(r0)]))
        for k in range(len(ring_ids) - 1):
            local += zip_rings(ring_ids[k], ring_angles[k], ring_ids[k + 1], ring_angles[k + 1])
        if not north:
            local = [(a, c, b) for a, b, c in local]
        tris.extend(local)
        members = np.concatenate([[pole]] + [r for r in ring_ids[:-1]]).astype(np.int64)
        return pole, members

    # rows of latitude vertices from the north level down to the south level
    level_rows: List[np.ndarray] = []
    zone_rows: List[Tuple[np.ndarray, ...]] = []
    row = add(np.array(alpha[0]), lon)
    level_rows.append(row)
    for i in range(len(alpha) - 1):
        a0, a1 = alpha[i], alpha[i + 1]
        n_rows = max(1, int(np.ceil((a1 - a0) / spacing - 1e-9)))
        rows = [row]
        for k in range(1, n_rows + 1):
            rows.append(add(np.array(a0 + (a1 - a0) * k / n_rows), lon))
        zone_rows.append(tuple(rows))
        row = rows[-1]
        level_rows.append(row)
    north_pole, north_members = cap(alpha[0], level_rows[0], True)
    south_pole, south_members = cap(np.pi - alpha[-1], level_rows[-1], False)

    P = np.array(polar)
    A = np.array(azim)
    unit = np.column_stack([np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)])
    verts = radius * (unit @ frame)

    for rows in zone_rows:
        for up, dn in zip(rows[:-1], rows[1:]):
            for j in range(N):
                a, b = up[j], up[(j + 1) % N]
                c, d = dn[j], dn[(j + 1) % N]
                # split along the shorter diagonal; ties go to a-d
                if np.sum((verts[a] - verts[d]) ** 2) <= np.sum((verts[b] - verts[c]) ** 2) * (1 + 1e-12):
                    tris.append((a, c, d))
                    tris.append((a, d, b))
                else:
                    tris.append((a, c, b))
                    tris.append((b, c, d))
    mesh = TriangulatedDisk(verts, np.array(tris, dtype=np.int64), np.zeros(0, dtype=np.int64))
    return SphereTiling(
        mesh=mesh,
        longitudes=lon,
        level_angles=alpha,
        level_rows=tuple(level_rows),
        zone_rows=tuple(zone_rows),
        north_cap=north_members,
        south_cap=south_members,
        north_pole=int(north_pole),
        south_pole=int(south_pole),
        frame=frame,
        radius=radius,
        polar=P,
        azimuth=A,
    )


def _bridge_span(lon: np.ndarray, br: Bridge) -> np.ndarray:
    """Indices ``j`` of longitude intervals ``[lon[j], lon[j+1]]`` inside the bridge."""
    N = len(lon)
    lo = (br.center - br.half_width) % TWO_PI
    d = (lon - lo) % TWO_PI
    d = np.where(d > TWO_PI - 1e-9, 0.0, d)
    start = int(np.argmin(np.abs(d)))
    width = 2.0 * br.half_width
    idx = []
    j = start
    acc = 0.0
    while acc < width - 1e-9:
        nxt = (j + 1) % N
        acc += (lon[nxt] - lon[j]) % TWO_PI
        idx.append(j)
        j = nxt
    return np.array(idx, dtype=np.int64)


def curve_edges(tiling: SphereTiling, bridges: Sequence[Bridge]) -> List[Tuple[int, int]]:
    """Undirected edges of the Jordan curve built from all levels and bridges."""
    lon = tiling.longitudes
    N = len(lon)
    cut: Dict[int, set] = {i: set() for i in range(len(tiling.level_rows))}
    edges: List[Tuple[int, int]] = []
    for br in bridges:
        span = _bridge_span(lon, br)
        cut[br.zone].update(span.tolist())
        cut[br.zone + 1].update(span.tolist())
        rows = tiling.zone_rows[br.zone]
        for jcol in (span[0], (span[-1] + 1) % N):
            for up, dn in zip(rows[:-1], rows[1:]):
                edges.append((int(up[jcol]), int(dn[jcol])))
    for i, row in enumerate(tiling.level_rows):
        for j in range(N):
            if j not in cut[i]:
                edges.append((int(row[j]), int(row[(j + 1) % N])))
    return edges


def split_by_curve(mesh: TriangulatedDisk, edges: Sequence[Tuple[int, int]]) -> Tuple[np.ndarray, int]:
    """Label triangles by connected component after cutting along ``edges``."""
    t = mesh.triangles
    cut = {tuple(sorted(e)) for e in edges}
    m = len(t)
    de = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    owner = np.tile(np.arange(m), 3)
    key = np.sort(de, axis=1)
    order = np.lexsort((key[:, 1], key[:, 0]))
    key, owner = key[order], owner[order]
    same = np.all(key[1:] == key[:-1], axis=1)
    rows, cols = [], []
    for k in np.nonzero(same)[0]:
        if (int(key[k, 0]), int(key[k, 1])) in cut:
            continue
        rows.append(owner[k])
        cols.append(owner[k + 1])
    adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    n_comp, labels = sparse.csgraph.connected_components(adj, directed=False)
    return labels, int(n_comp)


def submesh(mesh: TriangulatedDisk, tri_mask: np.ndarray) -> Tuple[TriangulatedDisk, np.ndarray]:
    """Extract the triangles in ``tri_mask`` with compact vertex numbering.

    Returns the sub-mesh (boundary loop derived from orientation) and the
    original vertex id of each new vertex.
    """
    tris = mesh.triangles[tri_mask]
    used = np.unique(tris)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    sub = TriangulatedDisk.from_arrays(mesh.vertices[used], remap[tris])
    return sub, used


def refine_midpoint(
    mesh: TriangulatedDisk,
    project_boundary: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    project_interior: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> TriangulatedDisk:
    """One level of 1-to-4 midpoint subdivision.

    New boundary vertices are passed through ``project_boundary``; the midpoint
    of an edge is computed symmetrically so two meshes sharing a boundary edge
    produce bit-identical new vertices.
    """
    t = mesh.triangles
    edges = mesh.edges()
    n = mesh.n_vertices
    key = edges[:, 0] * n + edges[:, 1]
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    bmask = mesh.boundary_mask()
    be = mesh.boundary_edges()
    bkey = set((np.minimum(be[:, 0], be[:, 1]) * n + np.maximum(be[:, 0], be[:, 1])).tolist())
    is_b = np.array([k in bkey for k in key.tolist()], dtype=bool)
    if project_boundary is not None and np.any(is_b):
        mids[is_b] = project_boundary(mids[is_b])
    if project_interior is not None and np.any(~is_b):
        mids[~is_b] = project_interior(mids[~is_b])
    lookup = {k: n + i for i, k in enumerate(key.tolist())}

    def mid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return np.array([lookup[k] for k in (lo * n + hi).tolist()], dtype=np.int64)

    m01, m12, m20 = mid(t[:, 0], t[:, 1]), mid(t[:, 1], t[:, 2]), mid(t[:, 2], t[:, 0])
    new_t = np.concatenate([
        np.column_stack([t[:, 0], m01, m20]),
        np.column_stack([t[:, 1], m12, m01]),
        np.column_stack([t[:, 2], m20, m12]),
        np.column_stack([m01, m12, m20]),
    ])
    verts = np.concatenate([mesh.vertices, mids])
    loop = mesh.boundary_loop.tolist()
    new_loop: List[int] = []
    for a, b in zip(loop, loop[1:] + loop[:1]):
        new_loop.append(a)
        new_loop.append(int(mid(np.array([a]), np.array([b]))[0]))
    del bmask
    return TriangulatedDisk(verts, new_t, np.array(new_loop, dtype=np.int64))


def _uniform_laplacian(mesh: TriangulatedDisk) -> sparse.csr_matrix:
    e = mesh.edges()
    n = mesh.n_vertices
    w = np.ones(len(e))
    W = sparse.coo_matrix((np.r_[w, w], (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n)).tocsr()
    deg = np.asarray(W.sum(axis=1)).ravel()
    return (sparse.diags(deg) - W).tocsr()


def tutte_embedding(mesh: TriangulatedDisk) -> np.ndarray:
    """Uniform-weight harmonic embedding of a disk mesh onto the unit disk.

    Boundary vertices go to the unit circle by cumulative chord length, in
    counter-clockwise order, so the embedded triangles are positively oriented.
    """
    loop = mesh.boundary_loop
    if len(loop) < 3:
        raise MeshError("disk mesh needs a boundary loop of at least 3 vertices")
    pts = mesh.vertices[loop]
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
    ang = TWO_PI * cum
    L = _uniform_laplacian(mesh)
    n = mesh.n_vertices
    inner = np.ones(n, dtype=bool)
    inner[loop] = False
    uv = np.zeros((n, 2))
    uv[loop, 0] = np.cos(ang)
    uv[loop, 1] = np.sin(ang)
    ii = np.nonzero(inner)[0]
    if len(ii):
        A = L[ii][:, ii].tocsc()
        B = L[ii][:, loop]
        rhs = -(B @ uv[loop])
        uv[ii] = np.column_stack([spsolve(A, rhs[:, 0]), spsolve(A, rhs[:, 1])])
    return uv


def torsion_profile(mesh: TriangulatedDisk) -> np.ndarray:
    """Solution of ``-Lw = 1`` with ``w = 0`` on the boundary, scaled to max 1."""
    L = _uniform_laplacian(mesh)
    n = mesh.n_vertices
    bmask = mesh.boundary_mask()
    w = np.zeros(n)
    ii = np.nonzero(~bmask)[0]
    if len(ii):
        A = L[ii][:, ii].tocsc()
        w[ii] = spsolve(A, np.ones(len(ii)))
        w /= w.max()
    return w


def polyline_is_simple(samples: np.ndarray, tol: float = 1e-12) -> bool:
    """True when a closed 3-D polyline has no repeated points and no crossings.

    Non-adjacent segment pairs must keep a positive distance (> ``tol`` times
    the polyline scale).
    """
    p = np.asarray(samples, dtype=float)
    n = len(p)
    if n < 3:
        return False
    scale = max(float(np.linalg.norm(p.max(0) - p.min(0))), 1e-300)
    a = p
    b = np.roll(p, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    d = _segment_distance(a[i], b[i], a[j], b[j])
    return bool(np.all(d > tol * scale))


def _segment_distance(p1, q1, p2, q2) -> np.ndarray:
    """Vectorised minimum distance between 3-D segments ``[p1,q1]`` and ``[p2,q2]``."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b
    s = np.where(denom > 1e-300, np.clip((b * f - c * e) / np.where(denom > 1e-300, denom, 1.0), 0, 1), 0.0)
    t = (b * s + f) / np.where(e > 1e-300, e, 1.0)
    s = np.where(t < 0, np.clip(-c / np.where(a > 1e-300, a, 1.0), 0, 1), s)
    s = np.where(t > 1, np.clip((b - c) / np.where(a > 1e-300, a, 1.0), 0, 1), s)
    # second segment degenerate to a point: project it onto the first
    s = np.where(e > 1e-300, s, np.clip(-c / np.where(a > 1e-300, a, 1.0), 0, 1))
    t = np.clip(t, 0, 1)
    diff = (p1 + d1 * s[:, None]) - (p2 + d2 * t[:, None])
    return np.linalg.norm(diff, axis=1)
