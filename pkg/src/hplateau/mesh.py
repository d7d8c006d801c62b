"""Triangle mesh data types, topology validation, area and enclosed volume."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .domain import EuclideanMetric, MetricField

__all__ = [
    "MeshError",
    "DegenerateTriangleError",
    "WatertightError",
    "OrientationError",
    "TriangulatedDisk",
    "ValidationReport",
    "validate_disk",
    "EnclosureRegion",
    "surface_area",
    "oriented_enclosed_volume",
    "boundary_loops",
    "degenerate_tolerance",
    "vertex_rings",
    "ReferenceMap",
]


class MeshError(ValueError):
    pass


class DegenerateTriangleError(MeshError):
    def __init__(self, index: int, area: float):
        super().__init__(f"triangle {index} is degenerate (area {area:.3e})")
        self.index = index


class WatertightError(MeshError):
    def __init__(self, gap_edges: Sequence[Tuple[int, int]]):
        shown = ", ".join(f"({a},{b})" for a, b in list(gap_edges)[:10])
        more = "" if len(gap_edges) <= 10 else f" and {len(gap_edges) - 10} more"
        super().__init__(f"surface is not watertight; open edges: {shown}{more}")
        self.gap_edges = list(gap_edges)


class OrientationError(MeshError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _directed_edges(triangles: np.ndarray) -> np.ndarray:
    t = triangles
    return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=0)


def boundary_loops(triangles: np.ndarray) -> List[List[int]]:
    """Chain the directed boundary edges of a triangle set into closed loops.

    Loops follow the triangle orientation (interior on the left). Edges used by
    more than one loop or dangling chains are returned as open lists.
    """
    triangles = np.asarray(triangles, dtype=np.int64)
    if len(triangles) == 0:
        return []
    de = _directed_edges(triangles)
    und = np.sort(de, axis=1)
    _, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    bmask = counts[inv] == 1
    bedges = de[bmask]
    nxt: dict = {}
    for a, b in bedges.tolist():
        nxt.setdefault(a, []).append(b)
    loops: List[List[int]] = []
    used = set()
    for a, b in sorted(map(tuple, bedges.tolist())):
        if (a, b) in used:
            continue
        loop = [a]
        cur, target = b, a
        used.add((a, b))
        while cur != target:
            loop.append(cur)
            cands = [c for c in nxt.get(cur, []) if (cur, c) not in used]
            if not cands:
                break
            used.add((cur, cands[0]))
            cur = cands[0]
        loops.append(loop)
    return loops


@dataclass(frozen=True, eq=False)
class TriangulatedDisk:
    """Immutable triangle mesh with a designated boundary loop.

    The boundary loop runs with the interior on its left when viewed against
    the triangle normals. Closed surfaces are representable (empty loop) so
    that validation can report them.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshError("vertex coordinates must be finite")
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        b = np.asarray(self.boundary_loop, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "triangles", _readonly(t))
        object.__setattr__(self, "boundary_loop", _readonly(b))

    @classmethod
    def from_arrays(
        cls, vertices: np.ndarray, triangles: np.ndarray, boundary_loop: Optional[Sequence[int]] = None
    ) -> "TriangulatedDisk":
        """Build a mesh, deriving the boundary loop (longest loop) when omitted."""
        if boundary_loop is None:
            loops = boundary_loops(np.asarray(triangles, dtype=np.int64).reshape(-1, 3))
            boundary_loop = max(loops, key=len) if loops else []
        return cls(vertices, triangles, np.asarray(boundary_loop, dtype=np.int64))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edges(self) -> np.ndarray:
        """Unique undirected edges ``(e, 2)`` with sorted endpoints."""
        return np.unique(np.sort(_directed_edges(self.triangles), axis=1), axis=0)

    def boundary_edges(self) -> np.ndarray:
        """Directed boundary edges following triangle orientation."""
        de = _directed_edges(self.triangles)
        und = np.sort(de, axis=1)
        _, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
        return de[counts[inv.reshape(-1)] == 1]

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        be = self.boundary_edges()
        mask[be.ravel()] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        return used & ~self.boundary_mask()

    def triangle_points(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def with_vertices(self, vertices: np.ndarray) -> "TriangulatedDisk":
        return TriangulatedDisk(vertices, self.triangles, self.boundary_loop)

    def flipped(self) -> "TriangulatedDisk":
        """Same surface with reversed orientation."""
        loop = self.boundary_loop[::-1]
        if len(loop):
            loop = np.roll(loop, 1)
        return TriangulatedDisk(self.vertices, self.triangles[:, ::-1], loop)

    def transformed(self, matrix: np.ndarray, offset: Optional[np.ndarray] = None) -> "TriangulatedDisk":
        """Apply ``x -> matrix @ x + offset``; reflections flip the orientation."""
        m = np.asarray(matrix, dtype=float)
        v = self.vertices @ m.T
        if offset is not None:
            v = v + np.asarray(offset, dtype=float)
        out = TriangulatedDisk(v, self.triangles, self.boundary_loop)
        if np.linalg.det(m) < 0:
            out = out.flipped()
            out = TriangulatedDisk(v, out.triangles, out.boundary_loop)
        return out

    def bbox_diagonal(self) -> float:
        if self.n_vertices == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def triangle_normals(self) -> np.ndarray:
        """Unnormalised normals ``(e1 x e2)``; length is twice the area."""
        p = self.triangle_points()
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def vertex_normals(self) -> np.ndarray:
        """Unit area-weighted vertex normals (zero for unused vertices)."""
        n = self.triangle_normals()
        acc = np.zeros((self.n_vertices, 3))
        for k in range(3):
            np.add.at(acc, self.triangles[:, k], n)
        norm = np.linalg.norm(acc, axis=1, keepdims=True)
        return np.divide(acc, norm, out=np.zeros_like(acc), where=norm > 0)


def degenerate_tolerance(mesh: TriangulatedDisk) -> float:
    """Area threshold below which a triangle counts as degenerate."""
    return 1e-12 * mesh.bbox_diagonal() ** 2


def vertex_rings(mesh: TriangulatedDisk, seeds: np.ndarray, rings: int) -> np.ndarray:
    """Mask of vertices within ``rings`` edge hops of the ``seeds`` mask."""
    mask = np.asarray(seeds, dtype=bool).copy()
    e = mesh.edges()
    for _ in range(rings):
        hit = mask[e[:, 0]] | mask[e[:, 1]]
        grown = mask.copy()
        grown[e[hit].ravel()] = True
        mask = grown
    return mask


@dataclass(frozen=True)
class ValidationReport:
    n_vertices: int
    n_edges: int
    n_triangles: int
    euler_characteristic: int
    boundary_cycles: int
    boundary_matches_loop: bool
    orientation_consistent: bool
    inconsistent_edges: int
    nonmanifold_edges: int
    unused_vertices: int
    degenerate_triangles: Tuple[int, ...]
    min_quality: float

    @property
    def is_disk(self) -> bool:
        return (
            self.euler_characteristic == 1
            and self.boundary_cycles == 1
            and self.boundary_matches_loop
            and self.orientation_consistent
            and self.nonmanifold_edges == 0
            and self.unused_vertices == 0
            and not self.degenerate_triangles
        )

    @property
    def valid(self) -> bool:
        return self.is_disk

    def failures(self) -> List[str]:
        out = []
        if self.euler_characteristic != 1:
            out.append(f"euler characteristic {self.euler_characteristic} != 1")
        if self.boundary_cycles != 1:
            out.append(f"{self.boundary_cycles} boundary cycles")
        if not self.boundary_matches_loop:
            out.append("boundary loop does not match mesh boundary")
        if not self.orientation_consistent:
            out.append(f"{self.inconsistent_edges} edges with inconsistent orientation")
        if self.nonmanifold_edges:
            out.append(f"{self.nonmanifold_edges} non-manifold edges")
        if self.unused_vertices:
            out.append(f"{self.unused_vertices} unused vertices")
        if self.degenerate_triangles:
            out.append(f"{len(self.degenerate_triangles)} degenerate triangles")
        return out


def _loops_equal(a: Sequence[int], b: Sequence[int]) -> bool:
    a, b = list(a), list(b)
    if len(a) != len(b) or not a:
        return False
    if b[0] not in a:
        return False
    k = a.index(b[0])
    return a[k:] + a[:k] == b


def validate_disk(mesh: TriangulatedDisk) -> ValidationReport:
    """Topological and geometric sanity report for a disk mesh."""
    t = mesh.triangles
    if len(t) == 0:
        raise MeshError("mesh has no triangles")
    de = _directed_edges(t)
    und = np.sort(de, axis=1)
    uniq, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    n_edges = len(uniq)
    nonmanifold = int(np.sum(counts > 2))
    # an interior edge is consistent when its two uses run in opposite directions
    forward = (de[:, 0] < de[:, 1]).astype(np.int64)
    fwd_count = np.bincount(inv, weights=forward, minlength=n_edges)
    inconsistent = int(np.sum((counts == 2) & (fwd_count != 1)))
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[t.ravel()] = True
    n_used = int(used.sum())
    chi = n_used - n_edges + len(t)
    loops = boundary_loops(t)
    matches = len(loops) == 1 and _loops_equal(loops[0], mesh.boundary_loop.tolist())
    p = mesh.triangle_points()
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    tol = degenerate_tolerance(mesh)
    degenerate = tuple(int(i) for i in np.nonzero(areas < tol)[0])
    l2 = (
        np.sum((p[:, 1] - p[:, 0]) ** 2, axis=1)
        + np.sum((p[:, 2] - p[:, 1]) ** 2, axis=1)
        + np.sum((p[:, 0] - p[:, 2]) ** 2, axis=1)
    )
    quality = np.where(l2 > 0, 4.0 * np.sqrt(3.0) * areas / np.where(l2 > 0, l2, 1.0), 0.0)
    return ValidationReport(
        n_vertices=mesh.n_vertices,
        n_edges=n_edges,
        n_triangles=len(t),
        euler_characteristic=chi,
        boundary_cycles=len(loops),
        boundary_matches_loop=bool(matches),
        orientation_consistent=inconsistent == 0,
        inconsistent_edges=inconsistent,
        nonmanifold_edges=nonmanifold,
        unused_vertices=mesh.n_vertices - n_used,
        degenerate_triangles=degenerate,
        min_quality=float(quality.min()),
    )


def surface_area(mesh: TriangulatedDisk, metric: Optional[MetricField] = None) -> float:
    """Total area of ``mesh`` under ``metric`` (Euclidean by default).

    Raises :class:`DegenerateTriangleError` for triangles whose Euclidean area
    is below the degeneracy threshold.
    """
    metric = metric or EuclideanMetric()
    pts = mesh.triangle_points()
    eu = EuclideanMetric().triangle_areas(pts)
    bad = np.nonzero(eu < degenerate_tolerance(mesh))[0]
    if len(bad):
        raise DegenerateTriangleError(int(bad[0]), float(eu[bad[0]]))
    areas = eu if metric.euclidean else metric.triangle_areas(pts)
    return float(np.sum(areas))


@dataclass(frozen=True, eq=False)
class EnclosureRegion:
    """Region bounded by a disk and a cap sharing the same boundary loop.

    Both pieces must be oriented outward from the enclosed region; this is
    checked on construction. Boundary vertices are matched by position.
    """

    disk: TriangulatedDisk
    cap: TriangulatedDisk
    weld_tol: float = 1e-10
    closure_check: bool = field(init=False)
    gap_edges: Tuple[Tuple[int, int], ...] = field(init=False)
    cap_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        d, c = self.disk, self.cap
        scale = max(d.bbox_diagonal(), c.bbox_diagonal(), 1.0)
        tree = cKDTree(d.vertices[d.boundary_loop]) if len(d.boundary_loop) else None
        # map every cap vertex to a closed-surface index; boundary ones weld to disk
        cap_index = np.arange(c.n_vertices, dtype=np.int64) + d.n_vertices
        if tree is not None and len(c.boundary_loop):
            dist, idx = tree.query(c.vertices[c.boundary_loop])
            ok = dist <= self.weld_tol * scale
            cap_index[c.boundary_loop[ok]] = d.boundary_loop[idx[ok]]
        object.__setattr__(self, "cap_index", _readonly(cap_index))
        tris = self.closed_triangles()
        de = _directed_edges(tris)
        und = np.sort(de, axis=1)
        uniq, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
        inv = inv.reshape(-1)
        gaps = tuple(tuple(int(x) for x in e) for e in uniq[counts == 1])
        object.__setattr__(self, "gap_edges", gaps)
        object.__setattr__(self, "closure_check", len(gaps) == 0)
        if self.closure_check:
            forward = (de[:, 0] < de[:, 1]).astype(np.int64)
            fwd = np.bincount(inv, weights=forward, minlength=len(uniq))
            if np.any((counts == 2) & (fwd != 1)):
                raise OrientationError(
                    "disk and cap are not consistently oriented outward from the region"
                )

    def closed_vertices(self) -> np.ndarray:
        return np.concatenate([self.disk.vertices, self.cap.vertices], axis=0)

    def closed_triangles(self) -> np.ndarray:
        return np.concatenate([self.disk.triangles, self.cap_index[self.cap.triangles]], axis=0)

    def closed_points(self) -> np.ndarray:
        return self.closed_vertices()[self.closed_triangles()]

    def with_disk(self, disk: TriangulatedDisk) -> "EnclosureRegion":
        return EnclosureRegion(disk, self.cap, self.weld_tol)


def oriented_enclosed_volume(region: EnclosureRegion, metric: Optional[MetricField] = None) -> float:
    """Oriented volume of the region bounded by ``disk`` and ``cap``.

    Euclidean: ``(1/6) sum v0 . (v1 x v2)`` over the closed surface. Blended
    cylinder metric: divergence-theorem flux in the cylindrical chart.
    """
    if not region.closure_check:
        raise WatertightError(region.gap_edges)
    metric = metric or EuclideanMetric()
    return metric.flux_volume(region.closed_points())


@dataclass(frozen=True, eq=False)
class ReferenceMap:
    """Piecewise-linear map from a planar reference disk into space.

    ``reference`` is a counter-clockwise triangulation lying in the plane
    ``z = 0``; ``image`` holds one point per reference vertex. The map's
    orientation is the one induced by the reference triangles.
    """

    reference: TriangulatedDisk
    image: np.ndarray

    def __post_init__(self) -> None:
        ref = self.reference
        if np.any(ref.vertices[:, 2] != 0.0):
            raise MeshError("reference triangulation must lie in the plane z = 0")
        img = np.asarray(self.image, dtype=float)
        if img.shape != (ref.n_vertices, 3):
            raise MeshError(f"image must be ({ref.n_vertices}, 3), got {img.shape}")
        if not np.all(np.isfinite(img)):
            raise MeshError("image coordinates must be finite")
        p = ref.vertices[ref.triangles][:, :, :2]
        signed = 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )
        tol = degenerate_tolerance(ref)
        bad = np.nonzero(signed <= tol)[0]
        if len(bad):
            raise DegenerateTriangleError(int(bad[0]), float(signed[bad[0]]))
        object.__setattr__(self, "image", _readonly(img))

    @classmethod
    def from_disk(cls, disk: TriangulatedDisk) -> "ReferenceMap":
        """Parametrise a disk mesh over its uniform harmonic embedding."""
        from .meshgen import tutte_embedding

        uv = tutte_embedding(disk)
        ref = TriangulatedDisk(np.column_stack([uv, np.zeros(len(uv))]), disk.triangles, disk.boundary_loop)
        return cls(ref, disk.vertices)

    @property
    def triangles(self) -> np.ndarray:
        return self.reference.triangles

    def image_disk(self) -> TriangulatedDisk:
        return TriangulatedDisk(self.image, self.reference.triangles, self.reference.boundary_loop)

    def with_image(self, image: np.ndarray) -> "ReferenceMap":
        return ReferenceMap(self.reference, image)

    def reflected(self) -> "ReferenceMap":
        """Same image with the reference mirrored (``x -> -x``), reversing orientation."""
        rv = self.reference.vertices * np.array([-1.0, 1.0, 1.0])
        ref = TriangulatedDisk(rv, self.reference.triangles[:, ::-1], self.reference.boundary_loop[::-1])
        return ReferenceMap(ref, self.image)
