"""Variational quantities: Dirichlet energy, algebraic volume, F_H, I_H and curvature.

Sign conventions. A disk inside an :class:`EnclosureRegion` is oriented
outward from the enclosed region. The discrete mean curvature vector is

    Hvec_i = (1 / (4 A_i)) sum_j (cot a_ij + cot b_ij) (x_j - x_i)

with ``A_i`` the mixed area, so a round sphere of radius ``r`` gives
``|Hvec| = 1/r`` pointing at the centre. Critical points of
``Area + 2H Vol`` satisfy ``Hvec = H n_out``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .domain import EuclideanMetric, MetricField
from .mesh import (
    EnclosureRegion,
    MeshError,
    ReferenceMap,
    TriangulatedDisk,
    WatertightError,
    oriented_enclosed_volume,
    surface_area,
    vertex_rings,
)

__all__ = [
    "EnergyBreakdown",
    "MeanCurvatureField",
    "cotangents",
    "mixed_areas",
    "dirichlet_energy",
    "algebraic_volume",
    "cap_constant",
    "f_h",
    "i_h",
    "energy_breakdown",
    "equivalence_residual",
    "mean_curvature",
    "h_concavity_check",
]

ENERGY_KEYS = ("dirichlet", "algebraic_volume", "f_h", "area", "volume", "i_h", "defect", "H", "C0", "C2")


def _fsum(a: np.ndarray) -> float:
    return math.fsum(np.asarray(a, dtype=float).ravel().tolist())


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy components; fields that were not evaluated are ``None``."""

    dirichlet: Optional[float] = None
    algebraic_volume: Optional[float] = None
    f_h: Optional[float] = None
    area: Optional[float] = None
    volume: Optional[float] = None
    i_h: Optional[float] = None
    defect: Optional[float] = None
    H: Optional[float] = None
    C0: Optional[float] = None
    C2: Optional[float] = None

    @property
    def C1(self) -> Optional[float]:
        return None if self.C0 is None else self.C0 / 3.0

    @property
    def conformality_defect(self) -> Optional[float]:
        return self.defect

    def merged(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        """Fields of ``self`` filled in from ``other`` where missing."""
        a, b = asdict(self), asdict(other)
        return EnergyBreakdown(**{k: (a[k] if a[k] is not None else b[k]) for k in ENERGY_KEYS})

    def to_dict(self) -> Dict[str, Optional[float]]:
        d = asdict(self)
        return {k: d[k] for k in ENERGY_KEYS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Dict[str, Optional[float]]) -> "EnergyBreakdown":
        return cls(**{k: d.get(k) for k in ENERGY_KEYS})


def cotangents(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Cotangent of the interior angle at each corner, shape ``(m, 3)``."""
    p = points[triangles]
    out = np.empty(triangles.shape, dtype=float)
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        dot = np.einsum("ij,ij->i", a, b)
        if p.shape[-1] == 2:
            cr = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        else:
            cr = np.linalg.norm(np.cross(a, b), axis=1)
        out[:, k] = dot / np.where(cr > 0, cr, np.nan)
    return out


def mixed_areas(points: np.ndarray, triangles: np.ndarray, n_vertices: Optional[int] = None) -> np.ndarray:
    """Mixed Voronoi area per vertex (obtuse triangles split by half and quarters)."""
    n = len(points) if n_vertices is None else n_vertices
    p = points[triangles]
    cot = cotangents(points, triangles)
    area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    obtuse = cot < 0
    any_obtuse = obtuse.any(axis=1)
    acc = np.zeros(n)
    for k in range(3):
        i, j, l = k, (k + 1) % 3, (k + 2) % 3
        eij = np.sum((p[:, j] - p[:, i]) ** 2, axis=1)
        eil = np.sum((p[:, l] - p[:, i]) ** 2, axis=1)
        vor = (eij * cot[:, l] + eil * cot[:, j]) / 8.0
        val = np.where(any_obtuse, np.where(obtuse[:, i], area / 2.0, area / 4.0), vor)
        np.add.at(acc, triangles[:, k], val)
    return acc


def dirichlet_energy(u: ReferenceMap) -> float:
    """Piecewise-linear ``int |u_x|^2 + |u_y|^2`` over the reference disk."""
    ref = u.reference.vertices[:, :2]
    t = u.triangles
    cot = cotangents(ref, t)
    img = u.image
    terms = np.zeros(len(t))
    for k in range(3):
        a, b = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        terms += cot[:, k] * np.sum((img[a] - img[b]) ** 2, axis=1)
    return 0.5 * _fsum(terms)


def _half_dets(points: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("ij,ij->i", points[:, 0], np.cross(points[:, 1], points[:, 2]))


def algebraic_volume(u: ReferenceMap) -> float:
    """``int u . (u_x x u_y)``: sum of ``(1/2) det(v0, v1, v2)`` over image triangles."""
    return _fsum(_half_dets(u.image[u.triangles]))


def cap_constant(cap: TriangulatedDisk) -> float:
    """``C0`` of a cap: ``(1/2) sum det`` so that ``3 Vol = W(disk) + C0``."""
    return _fsum(_half_dets(cap.triangle_points()))


def f_h(u: ReferenceMap, H: float) -> EnergyBreakdown:
    """``F_H = E + (4/3) H W`` together with the area and conformality defect."""
    if H < 0:
        raise ValueError("H must be non-negative")
    E = dirichlet_energy(u)
    W = algebraic_volume(u)
    A = surface_area(u.image_disk())
    return EnergyBreakdown(
        dirichlet=E, algebraic_volume=W, f_h=E + (4.0 / 3.0) * H * W, area=A, defect=E - 2.0 * A, H=float(H)
    )


def i_h(region: EnclosureRegion, H: float, metric: Optional[MetricField] = None) -> EnergyBreakdown:
    """``I_H = Area(disk) + 2 H Vol(region)``; cap constants are filled for the Euclidean metric."""
    if H < 0:
        raise ValueError("H must be non-negative")
    if not region.closure_check:
        raise WatertightError(region.gap_edges)
    metric = metric or EuclideanMetric()
    A = surface_area(region.disk, metric)
    V = oriented_enclosed_volume(region, metric)
    C0 = C2 = None
    if metric.euclidean:
        C0 = cap_constant(region.cap)
        C2 = (4.0 / 3.0) * H * C0
    return EnergyBreakdown(area=A, volume=V, i_h=A + 2.0 * H * V, H=float(H), C0=C0, C2=C2)


def _aligned(u: ReferenceMap, region: EnclosureRegion) -> ReferenceMap:
    disk = region.disk
    if u.image.shape != disk.vertices.shape or not np.array_equal(u.image, disk.vertices):
        raise MeshError("map image does not match the region's disk vertex-wise")

    def canonical(t: np.ndarray) -> np.ndarray:
        # rotate each triangle so its smallest index comes first, keeping the cyclic order
        k = np.argmin(t, axis=1)
        idx = (k[:, None] + np.arange(3)[None, :]) % 3
        return np.take_along_axis(t, idx, axis=1)

    ref = {tuple(r) for r in canonical(disk.triangles).tolist()}
    if len(u.triangles) == len(disk.triangles):
        if all(tuple(r) in ref for r in canonical(u.triangles).tolist()):
            return u
        if all(tuple(r) in ref for r in canonical(u.triangles[:, ::-1]).tolist()):
            return u.reflected()
    raise MeshError("map triangulation does not match the region's disk")


def energy_breakdown(u: ReferenceMap, region: EnclosureRegion, H: float) -> EnergyBreakdown:
    """All fields, with the map oriented like the region's disk."""
    u = _aligned(u, region)
    return f_h(u, H).merged(i_h(region, H))


def equivalence_residual(u: ReferenceMap, region: EnclosureRegion, H: float) -> float:
    """``F_H(u) - (2 I_H - C2)``; equals the conformality defect ``E - 2 Area``."""
    b = energy_breakdown(u, region, H)
    return b.f_h - (2.0 * b.i_h - b.C2)


@dataclass(frozen=True)
class MeanCurvatureField:
    """Discrete mean curvature vectors on interior vertices."""

    vertices: np.ndarray
    vectors: np.ndarray
    mixed_area: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def full(self, n_vertices: int) -> np.ndarray:
        """Vectors scattered to all vertices, NaN on the boundary."""
        out = np.full((n_vertices, 3), np.nan)
        out[self.vertices] = self.vectors
        return out


def curvature_normals(mesh: TriangulatedDisk) -> Tuple[np.ndarray, np.ndarray]:
    """``(sum_j (cot+cot)(x_j - x_i) / 2, mixed area)`` for every vertex."""
    x = mesh.vertices
    t = mesh.triangles
    cot = cotangents(x, t)
    lap = np.zeros_like(x)
    for k in range(3):
        i, j = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        w = 0.5 * cot[:, k][:, None] * (x[j] - x[i])
        np.add.at(lap, i, w)
        np.add.at(lap, j, -w)
    return lap, mixed_areas(x, t)


def mean_curvature(mesh: TriangulatedDisk, metric: Optional[MetricField] = None) -> MeanCurvatureField:
    """Cotangent mean curvature vectors with mixed-area normalisation."""
    if metric is not None and not metric.euclidean:
        raise NotImplementedError("mean curvature is only available for the Euclidean metric")
    lap, amix = curvature_normals(mesh)
    ids = np.nonzero(mesh.interior_mask())[0]
    bad = ids[~(amix[ids] > 0)]
    if len(bad):
        raise MeshError(f"vertex {int(bad[0])} has zero mixed area")
    vec = lap[ids] / (2.0 * amix[ids, None])
    return MeanCurvatureField(ids, vec, amix[ids])


def h_concavity_check(
    region: EnclosureRegion,
    H: float,
    tau: float = 0.05,
    floor: float = 1e-3,
    collar: int = 0,
) -> list:
    """Interior vertices whose curvature vector points into the enclosed region.

    A vertex violates when ``Hvec . n_out < -tau |Hvec|`` and ``|Hvec| > floor``;
    vertices within ``collar`` edge rings of the boundary are skipped.
    """
    disk = region.disk
    field = mean_curvature(disk)
    n_out = disk.vertex_normals()[field.vertices]
    dots = np.einsum("ij,ij->i", field.vectors, n_out)
    mags = field.magnitudes
    viol = (dots < -tau * mags) & (mags > floor)
    if collar > 0:
        near = vertex_rings(disk, disk.boundary_mask(), collar)
        viol &= ~near[field.vertices]
    return [int(v) for v in field.vertices[viol]]
