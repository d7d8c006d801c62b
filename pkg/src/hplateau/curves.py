"""Boundary curves on the sphere together with their two complementary caps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .mesh import EnclosureRegion, MeshError, TriangulatedDisk, validate_disk
from .meshgen import (
    Bridge,
    SphereTiling,
    coaxial_sphere_tiling,
    curve_edges,
    polyline_is_simple,
    split_by_curve,
    submesh,
)

__all__ = [
    "BoundaryCurve",
    "CurveError",
    "spacing_for_resolution",
    "latitude_circle",
    "bridged_circles",
    "symmetric_chain",
    "coaxial_curve",
]


class CurveError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Closed polyline on the boundary sphere and the two caps it separates.

    Both caps are oriented by the outward normal of the ball. ``samples``
    follows the boundary loop of ``cap_minus``; ``cap_plus`` runs the other way.
    """

    samples: np.ndarray
    cap_minus: TriangulatedDisk
    cap_plus: TriangulatedDisk
    radius: float = 1.0
    name: str = "curve"
    params: Dict[str, object] = field(default_factory=dict)
    tiling: Optional[SphereTiling] = field(default=None, repr=False)
    cap_minus_ids: Optional[np.ndarray] = field(default=None, repr=False)
    cap_plus_ids: Optional[np.ndarray] = field(default=None, repr=False)

    def cap(self, side: str) -> TriangulatedDisk:
        return self.cap_minus if side == "minus" else self.cap_plus

    def check(self, tol: float = 1e-9) -> Dict[str, bool]:
        """Evaluate the curve invariants; returns a flag per invariant."""
        on_sphere = bool(np.all(np.abs(np.linalg.norm(self.samples, axis=1) - self.radius) <= tol * self.radius))
        simple = polyline_is_simple(self.samples)
        tiles = False
        try:
            tiles = EnclosureRegion(self.cap_plus, self.cap_minus).closure_check
        except MeshError:
            tiles = False
        disks = validate_disk(self.cap_minus).is_disk and validate_disk(self.cap_plus).is_disk
        return {"on_sphere": on_sphere, "simple": simple, "tiles": bool(tiles), "caps_are_disks": bool(disks)}

    def vector_area(self) -> np.ndarray:
        """``(1/2) sum p_i x p_{i+1}`` along ``samples``."""
        p = self.samples
        return 0.5 * np.cross(p, np.roll(p, -1, axis=0)).sum(axis=0)

    def reference_normal(self) -> np.ndarray:
        """Unit vector area of the curve, pointing out of the minus cap side."""
        v = self.vector_area()
        n = np.linalg.norm(v)
        return v / n if n > 0 else np.array([0.0, 0.0, 1.0])


def spacing_for_resolution(resolution: int) -> float:
    """Target edge length on the unit sphere so a hemisphere cap has about ``resolution`` vertices."""
    # a hemisphere cap with N longitudes carries about 0.16 N^2 vertices
    n_lon = max(12, int(np.ceil(np.sqrt(resolution / 0.16))))
    return 2.0 * np.pi / n_lon


def coaxial_curve(
    level_angles: Sequence[float],
    bridges: Sequence[Bridge],
    spacing: float,
    axis: Sequence[float] = (0.0, 0.0, 1.0),
    radius: float = 1.0,
    minus_contains: str = "south",
    name: str = "curve",
    params: Optional[Dict[str, object]] = None,
    n_longitudes: Optional[int] = None,
) -> BoundaryCurve:
    """Build a curve from latitude circles joined by meridian bridges.

    ``minus_contains`` picks the minus cap: the component holding the
    ``"south"`` or ``"north"`` pole, or ``"not_south"`` for the other one.
    """
    tiling = coaxial_sphere_tiling(level_angles, spacing, bridges, axis, radius, n_longitudes)
    edges = curve_edges(tiling, bridges)
    labels, n_comp = split_by_curve(tiling.mesh, edges)
    if n_comp != 2:
        raise CurveError(f"curve does not separate the sphere into two caps ({n_comp} parts)")
    tris = tiling.mesh.triangles
    south_label = labels[np.nonzero(np.any(tris == tiling.south_pole, axis=1))[0][0]]
    north_label = labels[np.nonzero(np.any(tris == tiling.north_pole, axis=1))[0][0]]
    if minus_contains == "south":
        minus_label = south_label
    elif minus_contains == "north":
        minus_label = north_label
    elif minus_contains == "not_south":
        minus_label = 1 - south_label
    else:
        raise ValueError(f"unknown cap selector {minus_contains!r}")
    cap_minus, ids_m = submesh(tiling.mesh, labels == minus_label)
    cap_plus, ids_p = submesh(tiling.mesh, labels != minus_label)
    for c in (cap_minus, cap_plus):
        rep = validate_disk(c)
        if not rep.is_disk:
            raise CurveError("cap is not a disk: " + "; ".join(rep.failures()))
    samples = cap_minus.vertices[cap_minus.boundary_loop]
    if not polyline_is_simple(samples):
        raise CurveError("curve polyline is not simple")
    return BoundaryCurve(
        samples=samples,
        cap_minus=cap_minus,
        cap_plus=cap_plus,
        radius=radius,
        name=name,
        params=dict(params or {}),
        tiling=tiling,
        cap_minus_ids=ids_m,
        cap_plus_ids=ids_p,
    )


def latitude_circle(z0: float, resolution: int = 2000, radius: float = 1.0) -> BoundaryCurve:
    """Circle ``z = z0`` on the sphere of ``radius``; the minus cap lies below it."""
    if not -radius < z0 < radius:
        raise CurveError("latitude must lie strictly between the poles")
    spacing = spacing_for_resolution(resolution)
    n_lon = int(round(2.0 * np.pi / spacing))
    alpha = float(np.arccos(z0 / radius))
    return coaxial_curve(
        [alpha], [], spacing, radius=radius, name="circle",
        params={"z0": z0, "rho": float(np.sqrt(radius**2 - z0**2)), "resolution": resolution},
        n_longitudes=n_lon,
    )


def bridged_circles(
    z: float = 0.1,
    bridge_width: float = 0.25,
    resolution: int = 2000,
    radius: float = 1.0,
    bridge_center: float = 0.0,
) -> BoundaryCurve:
    """Two circles ``z = +-z`` joined by a meridian bridge of angular width ``bridge_width``.

    The minus cap is the zone between the circles with the bridge removed;
    the plus cap is both polar caps joined through the bridge.
    """
    if not 0 < z < radius:
        raise CurveError("circle height must lie in (0, radius)")
    if not 0 < bridge_width < np.pi:
        raise CurveError("bridge width must lie in (0, pi)")
    spacing = spacing_for_resolution(resolution)
    alpha = np.arccos(np.array([z, -z]) / radius)
    br = [Bridge(0, bridge_center, 0.5 * bridge_width)]
    return coaxial_curve(
        alpha, br, spacing, radius=radius, minus_contains="not_south", name="gamma1",
        params={"z": z, "bridge_width": bridge_width, "resolution": resolution},
    )


def symmetric_chain(
    inner: float = 0.3,
    outer: float = 0.6,
    bridge_width: float = 0.3,
    resolution: int = 2000,
    radius: float = 1.0,
) -> BoundaryCurve:
    """Great circle ``x = 0`` plus circle pairs at ``x = +-inner, +-outer``, chained by bridges.

    Bridges alternate between azimuth 0 and pi around the x axis, which makes
    the curve invariant under ``z -> -z``; the antipodal map also preserves the
    curve and exchanges its two caps.
    """
    if not 0 < inner < outer < radius:
        raise CurveError("need 0 < inner < outer < radius")
    spacing = spacing_for_resolution(resolution)
    xs = np.array([outer, inner, 0.0, -inner, -outer])
    alpha = np.arccos(xs / radius)
    hw = 0.5 * bridge_width
    bridges = [Bridge(0, np.pi, hw), Bridge(1, 0.0, hw), Bridge(2, np.pi, hw), Bridge(3, 0.0, hw)]
    return coaxial_curve(
        alpha, bridges, spacing, axis=(1.0, 0.0, 0.0), radius=radius, minus_contains="south",
        name="gamma2", params={"inner": inner, "outer": outer, "bridge_width": bridge_width, "resolution": resolution},
    )
