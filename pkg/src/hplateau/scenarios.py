"""Analytic oracles and explicit fixture constructions.

* spherical caps spanning round circles of the unit sphere;
* the cylinder family ``E_n`` (annulus, wall, bottom) whose ``I_H`` deficit
  grows like ``2 pi n (1 - H)`` in the blended-metric cylinder, and its slanted
  variant whose integer vertical translates are pairwise disjoint;
* bridged-circle boundary curves with the immersed bridged-caps surface;
* crease and tent fixtures for the swap/fold surgery;
* random immersed sheets for the self-intersection detector;
* a string-addressable registry writing hpmesh files and a JSON manifest.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .curves import BoundaryCurve, CurveError, bridged_circles, latitude_circle, symmetric_chain
from .domain import ModifiedCylinder
from .hpmesh import write_hpmesh
from .mesh import EnclosureRegion, ReferenceMap, TriangulatedDisk, oriented_enclosed_volume, surface_area
from .meshgen import ring_disk

__all__ = [
    "CapSolution",
    "spherical_cap",
    "CounterexampleFamily",
    "counterexample_surface",
    "counterexample_energy",
    "slanted_family",
    "energy_slope",
    "translated_union",
    "NonexampleFixture",
    "nonexample_curves",
    "bridged_caps_surface",
    "CreaseFixture",
    "crease_fixture",
    "tent_fixture",
    "random_immersed_sheet",
    "caps_intersect",
    "Scenario",
    "SCENARIOS",
    "build_scenario",
    "emit_scenario",
]

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------- spherical caps


@dataclass(frozen=True)
class CapSolution:
    """Spherical cap of radius ``1/H`` spanning the circle ``z = z0`` of the unit sphere.

    ``offset`` is the signed height of the cap sphere's centre above the
    plane of the circle. ``flat_volume`` is the volume between the cap and
    the flat disk; ``enclosed_volume`` is the volume between the cap and the
    unit-sphere cap on the same side.
    """

    z0: float
    rho: float
    H: float
    side: str
    R: float
    offset: float
    area: float
    flat_volume: float
    enclosed_volume: float
    mesh: TriangulatedDisk

    @property
    def center(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.z0 + self.offset])

    @property
    def sagitta(self) -> float:
        return self.R - abs(self.offset)


def _segment_volume(radius: float, height: float) -> float:
    return math.pi * height * height * (3.0 * radius - height) / 3.0


def spherical_cap(z0: float, rho: float, H: float, resolution: int = 2000, side: str = "minus") -> CapSolution:
    """Closed-form cap values and a ring mesh realization.

    The minus cap bulges below the circle (toward the lower part of the
    sphere) and is oriented with normals pointing up, away from the region
    it encloses with the lower spherical cap; the plus cap is its mirror image.
    """
    if side not in ("minus", "plus"):
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    if abs(z0 * z0 + rho * rho - 1.0) > 1e-9:
        raise ValueError("circle must lie on the unit sphere (z0^2 + rho^2 = 1)")
    if not H > 0:
        raise ValueError("H must be positive; use the flat disk for H = 0")
    if H * rho > 1.0 + 1e-15:
        raise ValueError(f"cap sphere cannot span circle: H={H} > 1/rho={1.0 / rho}")
    R = 1.0 / H
    c = math.sqrt(max(R * R - rho * rho, 0.0))
    h = R - c
    area = TWO_PI * R * h
    flat = _segment_volume(R, h)
    seg_z = 1.0 + z0 if side == "minus" else 1.0 - z0
    enclosed = _segment_volume(1.0, seg_z) - flat

    m = max(4, int(math.ceil((math.sqrt(12.0 * resolution) - 3.0) / 6.0)))
    rd = ring_disk(m)
    beta0 = math.asin(min(rho / R, 1.0))
    beta = rd.s * beta0
    phi = rd.phi
    # minus: centre above the plane, cap hangs below it
    pts = np.column_stack([
        R * np.sin(beta) * np.cos(phi),
        R * np.sin(beta) * np.sin(phi),
        z0 + c - R * np.cos(beta),
    ])
    loop = rd.boundary_loop
    pts[loop, 0] = rho * np.cos(phi[loop])
    pts[loop, 1] = rho * np.sin(phi[loop])
    pts[loop, 2] = z0
    tris = rd.triangles
    offset = c
    if side == "plus":
        pts[:, 2] = 2.0 * z0 - pts[:, 2]
        tris = tris[:, ::-1]
        loop = loop[::-1]
        offset = -c
    mesh = TriangulatedDisk(pts, tris, loop)
    return CapSolution(float(z0), float(rho), float(H), side, R, offset, area, flat, enclosed, mesh)


# ---------------------------------------------------------------- cylinder family


@dataclass(frozen=True)
class CounterexampleFamily:
    """Member ``E_n`` of the cylinder family with its evaluated energies.

    ``surface`` is the disk ``annulus + wall + bottom`` (corners chamfered),
    oriented outward from the region ``C_n`` it bounds together with the
    reference disk ``{r <= 2, t = 0}`` stored as ``reference``. ``parts``
    labels each triangle: 0 annulus, 1 wall (including chamfers), 2 bottom.
    """

    n: int
    eps: float
    delta: float
    H: float
    surface: TriangulatedDisk
    reference: TriangulatedDisk
    parts: np.ndarray
    area: float
    volume: float
    i_hat: float
    c0: float
    chamfer: float

    def component(self, label: int) -> Tuple[np.ndarray, np.ndarray]:
        """Vertices and triangles of one component (annulus 0, wall 1, bottom 2)."""
        return self.surface.vertices, self.surface.triangles[self.parts == label]


def _chamfer(profile: np.ndarray, size: float) -> np.ndarray:
    """Cut every interior corner of a polyline at distance ``size`` along both legs."""
    out = [profile[0]]
    for k in range(1, len(profile) - 1):
        a, p, b = profile[k - 1], profile[k], profile[k + 1]
        da, db = a - p, b - p
        la, lb = np.linalg.norm(da), np.linalg.norm(db)
        cosang = float(da @ db) / (la * lb)
        if size <= 0 or cosang < -1.0 + 1e-12:
            out.append(p)
            continue
        s = min(size, 0.25 * la, 0.25 * lb)
        out.append(p + s * da / la)
        out.append(p + s * db / lb)
    out.append(profile[-1])
    return np.array(out)


def _resample(profile: np.ndarray, max_step: float, breaks: Sequence[float] = ()) -> Tuple[np.ndarray, np.ndarray]:
    """Insert points so no segment exceeds ``max_step``; returns points and segment ids."""
    pts, seg = [profile[0]], [0]
    for k in range(len(profile) - 1):
        a, b = profile[k], profile[k + 1]
        cuts = [0.0, 1.0]
        for r in breaks:
            if (a[0] - r) * (b[0] - r) < 0:
                cuts.append((r - a[0]) / (b[0] - a[0]))
        cuts = sorted(cuts)
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            length = np.linalg.norm(b - a) * (c1 - c0)
            m = max(1, int(math.ceil(length / max_step - 1e-9)))
            for j in range(1, m + 1):
                w = c0 + (c1 - c0) * j / m
                pts.append(a + w * (b - a))
                seg.append(k)
    return np.array(pts), np.array(seg)


def _surface_of_revolution(profile: np.ndarray, n_theta: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rings of ``n_theta`` vertices for every ``(r, t)`` profile point after the axis point.

    ``profile[0]`` must lie on the axis (``r = 0``). Triangles are oriented
    with normal ``d theta x d s`` where ``s`` runs along the profile.
    """
    th = TWO_PI * np.arange(n_theta) / n_theta
    ring_pts = [np.array([[0.0, 0.0, profile[0, 1]]])]
    for r, t in profile[1:]:
        ring_pts.append(np.column_stack([r * np.cos(th), r * np.sin(th), np.full(n_theta, t)]))
    verts = np.concatenate(ring_pts)
    tris = []
    first = 1 + np.arange(n_theta)
    for j in range(n_theta):
        tris.append((0, first[(j + 1) % n_theta], first[j]))
    for k in range(len(profile) - 2):
        a = 1 + k * n_theta + np.arange(n_theta)
        b = a + n_theta
        for j in range(n_theta):
            j1 = (j + 1) % n_theta
            tris.append((a[j], b[j1], b[j]))
            tris.append((a[j], a[j1], b[j1]))
    return verts, np.array(tris, dtype=np.int64)


def _annulus_radii(r_inner: float, eps: float) -> np.ndarray:
    """Radii from 2 down to ``r_inner`` resolving the blend band ``[2 - 2 eps, 2 - eps]``."""
    blend = np.linspace(2.0 - 2.0 * eps, 2.0 - eps, 5)
    outer = np.linspace(2.0 - eps, 2.0, 3)
    inner = np.linspace(r_inner, 2.0 - 2.0 * eps, max(3, int(math.ceil((2.0 - 2.0 * eps - r_inner) / 0.1)) + 1))
    return np.unique(np.concatenate([inner, blend, outer]))[::-1]


def counterexample_surface(
    n: int,
    eps: float = 0.05,
    delta: float = 0.0,
    chamfer: float = 0.02,
    n_theta: int = 64,
    max_step: float = 0.25,
) -> Tuple[TriangulatedDisk, TriangulatedDisk, np.ndarray]:
    """Mesh ``E_n`` (or its slanted variant) and the reference disk ``t = 0``.

    The generating profile in the ``(r, t)`` half-plane runs from the axis at
    the bottom ``t = -n + delta`` out to radius ``1 - delta``, up the wall to
    ``(1 + delta, 0)`` and along the annulus to the boundary circle ``r = 2``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= delta < 0.25:
        raise ValueError("slant delta must lie in [0, 1/4)")
    corners = np.array([
        [0.0, -n + delta],
        [1.0 - delta, -n + delta],
        [1.0 + delta, 0.0],
        [2.0, 0.0],
    ])
    prof = _chamfer(corners, chamfer)
    # bottom, wall, annulus; the annulus takes its own radii so every n shares it
    annulus_start = len(prof) - 2
    head, _ = _resample(prof[: annulus_start + 1], max_step)
    radii = _annulus_radii(float(prof[annulus_start][0]), eps)
    annulus = np.column_stack([radii[::-1], np.zeros(len(radii))])
    profile = np.concatenate([head, annulus[1:]])
    verts, tris = _surface_of_revolution(profile, n_theta)
    tz = verts[tris][:, :, 2]
    parts = np.ones(len(tris), dtype=np.int64)
    parts[np.all(tz == 0.0, axis=1)] = 0
    parts[np.all(tz == -n + delta, axis=1)] = 2
    surface = TriangulatedDisk.from_arrays(verts, tris)

    # reference disk: same annulus rings, then a flat core
    core = np.linspace(0.0, float(radii[-1]), max(3, int(math.ceil(radii[-1] / max_step)) + 1))
    ref_profile = np.concatenate([np.column_stack([core, np.zeros(len(core))]), annulus[1:]])
    rv, rt = _surface_of_revolution(ref_profile, n_theta)
    # reference is oriented +t (outward from C_n); the revolution gives -t on flat rings
    reference = TriangulatedDisk.from_arrays(rv, rt[:, ::-1])
    return surface, reference, parts


def _evaluate_family(n: int, eps: float, delta: float, H: float, chamfer: float, n_theta: int) -> CounterexampleFamily:
    surface, reference, parts = counterexample_surface(n, eps, delta, chamfer, n_theta)
    metric = ModifiedCylinder(eps).metric
    area = surface_area(surface, metric)
    region = EnclosureRegion(surface, reference)
    volume = oriented_enclosed_volume(region, metric)
    i_hat = area - 2.0 * H * volume
    return CounterexampleFamily(
        n=n, eps=eps, delta=delta, H=H, surface=surface, reference=reference, parts=parts,
        area=area, volume=volume, i_hat=i_hat, c0=area - TWO_PI * n, chamfer=chamfer,
    )


def counterexample_energy(
    n: int, eps: float = 0.05, H: float = 1.5, chamfer: float = 0.02, n_theta: int = 64
) -> Tuple[CounterexampleFamily, float]:
    """Build ``E_n`` and return it with ``I_hat = Area - 2 H Vol(C_n)`` under the blended metric."""
    if not 0.0 < H < 2.0:
        raise ValueError("H must lie in (0, 2)")
    fam = _evaluate_family(n, eps, 0.0, H, chamfer, n_theta)
    return fam, fam.i_hat


def slanted_family(
    n: int, delta: float, H: float = 1.5, eps: float = 0.05, chamfer: float = 0.02, n_theta: int = 64
) -> CounterexampleFamily:
    """Slanted variant: the wall is the cone through ``(1 - delta, -n + delta)`` and ``(1 + delta, 0)``."""
    if not 0.0 < delta < 0.25:
        raise ValueError("slant delta must lie in (0, 1/4)")
    if not 0.0 < H < 2.0:
        raise ValueError("H must lie in (0, 2)")
    return _evaluate_family(n, eps, delta, H, chamfer, n_theta)


def energy_slope(
    H: float, n_values: Sequence[int] = tuple(range(1, 11)), eps: float = 0.05, delta: float = 0.0
) -> Dict[str, object]:
    """Least-squares line through ``I_hat(E_n)`` against ``n``.

    Returns the slope, intercept, the largest fit residual relative to the
    largest ``|I_hat|``, and the values themselves.
    """
    ns = np.asarray(list(n_values), dtype=float)
    vals = []
    for n in n_values:
        fam = slanted_family(int(n), delta, H, eps) if delta > 0 else counterexample_energy(int(n), eps, H)[0]
        vals.append(fam.i_hat)
    vals = np.array(vals)
    slope, intercept = np.polyfit(ns, vals, 1)
    resid = vals - (slope * ns + intercept)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    return {
        "H": float(H),
        "n": [int(n) for n in n_values],
        "i_hat": vals.tolist(),
        "slope": float(slope),
        "intercept": float(intercept),
        "expected_slope": TWO_PI * (1.0 - H),
        "fit_residual": float(np.max(np.abs(resid)) / scale),
    }


def translated_union(mesh: TriangulatedDisk, shift: float) -> TriangulatedDisk:
    """``mesh`` together with its copy translated by ``shift`` along the axis, as one mesh."""
    moved = mesh.vertices + np.array([0.0, 0.0, shift])
    verts = np.concatenate([mesh.vertices, moved])
    tris = np.concatenate([mesh.triangles, mesh.triangles + mesh.n_vertices])
    return TriangulatedDisk(verts, tris, mesh.boundary_loop)


# ---------------------------------------------------------------- bridged circles


@dataclass(frozen=True)
class NonexampleFixture:
    """A bridged boundary curve with its caps and, when available, an immersed spanning surface."""

    kind: str
    curve: BoundaryCurve
    surface: Optional[TriangulatedDisk]
    H: float
    params: Dict[str, float] = field(default_factory=dict)


def bridged_caps_surface(curve: BoundaryCurve, H: float = 0.5) -> TriangulatedDisk:
    """Replace the two polar caps of a bridged-circle curve by spherical caps of radius ``1/H``.

    The upper cap hangs below its circle and the lower one rises above its
    circle, so for close circles the two cross each other. The bridge strip
    stays on the sphere; vertices on the circles are kept bit-exact.
    """
    z = float(curve.params["z"])
    rho = math.sqrt(1.0 - z * z)
    if not 0.0 < H * rho <= 1.0:
        raise ValueError(f"cap sphere cannot span circle: H={H} > 1/rho={1.0 / rho}")
    R = 1.0 / H
    c = math.sqrt(R * R - rho * rho)
    beta0 = math.asin(rho / R)
    alpha0 = math.acos(z)
    cap = curve.cap_plus
    v = np.array(cap.vertices, copy=True)
    r = np.linalg.norm(v, axis=1)
    zz = np.clip(v[:, 2] / r, -1.0, 1.0)
    phi = np.arctan2(v[:, 1], v[:, 0])
    for sign in (1.0, -1.0):
        alpha = np.arccos(sign * zz)
        sel = alpha < alpha0 * (1.0 - 1e-12)
        beta = alpha[sel] / alpha0 * beta0
        v[sel, 0] = R * np.sin(beta) * np.cos(phi[sel])
        v[sel, 1] = R * np.sin(beta) * np.sin(phi[sel])
        v[sel, 2] = sign * (z + c - R * np.cos(beta))
    return cap.with_vertices(v)


def nonexample_curves(kind: str, H: float = 0.5, resolution: int = 2000, **params: float) -> NonexampleFixture:
    """Bridged-circle curve ``gamma1`` or the symmetric chain ``gamma2``.

    ``gamma1`` also carries the immersed bridged-caps surface for ``H``; the
    defaults put the circles close enough that its two caps intersect.
    """
    if kind == "gamma1":
        z = float(params.get("z", 0.1))
        width = float(params.get("bridge_width", 0.25))
        if z <= 0.0:
            raise CurveError("the two circles overlap (need z > 0)")
        curve = bridged_circles(z=z, bridge_width=width, resolution=resolution)
        rho = math.sqrt(1.0 - z * z)
        surface = bridged_caps_surface(curve, H) if H * rho <= 1.0 else None
        return NonexampleFixture("gamma1", curve, surface, float(H), {"z": z, "bridge_width": width})
    if kind == "gamma2":
        inner = float(params.get("inner", 0.3))
        outer = float(params.get("outer", 0.6))
        width = float(params.get("bridge_width", 0.3))
        if not 0.0 < inner < outer:
            raise CurveError("the circles overlap (need 0 < inner < outer)")
        curve = symmetric_chain(inner=inner, outer=outer, bridge_width=width, resolution=resolution)
        return NonexampleFixture("gamma2", curve, None, float(H),
                                 {"inner": inner, "outer": outer, "bridge_width": width})
    raise ValueError(f"unknown nonexample kind {kind!r}")


def caps_intersect(z: float, H: float) -> bool:
    """Whether the two caps of radius ``1/H`` on the circles ``z = +-z`` reach each other."""
    rho = math.sqrt(1.0 - z * z)
    R = 1.0 / H
    sag = R - math.sqrt(R * R - rho * rho)
    return 2.0 * z < 2.0 * sag


# ---------------------------------------------------------------- surgery fixtures


def _grid(nx: int, ny: int, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rectangular grid with every quad split along the same diagonal; returns points, triangles, loop."""
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])

    def idx(i, j):
        return i * ny + j

    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    loop = ([idx(i, 0) for i in range(nx - 1)] + [idx(nx - 1, j) for j in range(ny - 1)]
            + [idx(i, ny - 1) for i in range(nx - 1, 0, -1)] + [idx(0, j) for j in range(ny - 1, 0, -1)])
    return pts, np.array(tris, dtype=np.int64), np.array(loop, dtype=np.int64)


def _fan_cap(points: np.ndarray, loop: np.ndarray) -> TriangulatedDisk:
    """Fan from the centroid of the boundary loop, oriented to close the disk."""
    b = points[loop]
    centre = b.mean(axis=0)
    verts = np.concatenate([b, centre[None, :]])
    n = len(loop)
    tris = np.array([(n, (i + 1) % n, i) for i in range(n)], dtype=np.int64)
    return TriangulatedDisk(verts, tris, np.arange(n)[::-1].copy())


@dataclass(frozen=True)
class CreaseFixture:
    """Immersed sheet whose two patches share their boundary image.

    ``gamma_plus`` and ``gamma_minus`` are vertex loops of the reference
    grid; their images coincide. ``region`` closes the sheet with a fan cap.
    """

    u: ReferenceMap
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    region: EnclosureRegion
    H: float


def _square_loop(ny: int, ci: int, cj: int, K: int, J: int) -> np.ndarray:
    ids = ([(i, cj - J) for i in range(ci - K, ci + K)] + [(ci + K, j) for j in range(cj - J, cj + J)]
           + [(i, cj + J) for i in range(ci + K, ci - K, -1)] + [(ci - K, j) for j in range(cj + J, cj - J, -1)])
    return np.array([i * ny + j for i, j in ids], dtype=np.int64)


def crease_fixture(
    H: float = 0.5,
    steps_per_turn: int = 48,
    patch: int = 4,
    rows: int = 20,
    bulge: float = 0.15,
    ramp: float = -0.15,
) -> CreaseFixture:
    """Helical sheet wound a little more than once, crossing itself along a square loop.

    The reference is the grid ``k = 0..N + 2 m``, ``j = 0..rows``; vertex
    ``(k, j)`` maps to angle ``2 pi (k mod N) / N`` and radius ``0.5 + j/rows``,
    so vertices ``k`` and ``k + N`` share their horizontal position. Height is a
    ramp in ``k`` blended into a bowl on one patch and a dome on the patch one
    turn later; both vanish on the patch boundaries, which therefore coincide.
    """
    N = steps_per_turn
    K = J = patch
    margin = 2 * K + 1
    nk = N + 2 * margin + 1
    nj = rows + 1
    cj = rows // 2
    if cj - 2 * J < 0 or cj + 2 * J > rows:
        raise ValueError("patch does not fit between the rows")
    kP, kQ = margin, margin + N
    k = np.arange(nk)
    j = np.arange(nj)
    pts, tris, loop = _grid(nk, nj, k.astype(float), j.astype(float))
    kk = pts[:, 0].astype(int)
    jj = pts[:, 1].astype(int)
    ang = TWO_PI * (kk % N) / N
    rad = 0.5 + jj / rows
    height = ramp * TWO_PI * (kk - kP - N / 2) / N

    def blend(dist):
        s = np.clip((dist - 1.3) / 0.7, 0.0, 1.0)
        return 1.0 - s * s * (3.0 - 2.0 * s)

    for centre, sign in ((kP, -1.0), (kQ, 1.0)):
        dist = np.maximum(np.abs(kk - centre) / K, np.abs(jj - cj) / J)
        w = blend(dist)
        height = (1.0 - w) * height + w * sign * bulge * (1.0 - dist)
    image = np.column_stack([rad * np.cos(ang), rad * np.sin(ang), height])
    # reference scaled to unit-size steps in both directions
    ref_pts = np.column_stack([pts[:, 0] * (TWO_PI / N), pts[:, 1] / rows, np.zeros(len(pts))])
    reference = TriangulatedDisk(ref_pts, tris, loop)
    u = ReferenceMap(reference, image)
    disk = TriangulatedDisk(image, tris, loop)
    region = EnclosureRegion(disk, _fan_cap(image, loop))
    gp = _square_loop(nj, kP, cj, K, J)
    gm = _square_loop(nj, kQ, cj, K, J)
    return CreaseFixture(u, gp, gm, region, float(H))


def tent_fixture(n: int = 17, height: float = 0.1) -> Tuple[ReferenceMap, np.ndarray, EnclosureRegion]:
    """Unit disk creased along the diameter ``x = 0`` into ``z = height (sqrt(1 - y^2) - |x|)``.

    The disk is the square grid pushed onto the disk by
    ``(x sqrt(1 - y^2/2), y sqrt(1 - x^2/2))``, which keeps ``x = 0`` a grid
    line. Returns the map, the open fold path of interior vertices on the
    diameter and the region closed by a flat fan cap. ``height = 0`` gives a
    flat disk whose fold marker is spurious.
    """
    if n % 2 == 0:
        raise ValueError("grid size must be odd so x = 0 is a grid line")
    g = np.linspace(-1.0, 1.0, n)
    pts, tris, loop = _grid(n, n, g, g)
    X = pts[:, 0] * np.sqrt(1.0 - 0.5 * pts[:, 1] ** 2)
    Y = pts[:, 1] * np.sqrt(1.0 - 0.5 * pts[:, 0] ** 2)
    ref = np.column_stack([X, Y, np.zeros(len(X))])
    img = ref.copy()
    img[:, 2] = height * np.maximum(np.sqrt(np.maximum(1.0 - Y * Y, 0.0)) - np.abs(X), 0.0)
    img[loop, 2] = 0.0
    u = ReferenceMap(TriangulatedDisk(ref, tris, loop), img)
    mid = n // 2
    fold = np.array([mid * n + j for j in range(1, n - 1)], dtype=np.int64)
    region = EnclosureRegion(TriangulatedDisk(img, tris, loop), _fan_cap(img, loop))
    return u, fold, region


# ---------------------------------------------------------------- random immersed sheets


def random_immersed_sheet(seed: int, max_triangles: int = 500) -> TriangulatedDisk:
    """Ruled sheet over a self-crossing profile curve, randomly bent, jittered and rotated.

    The profile ``(t^2 - 1, t^3 - t)`` crosses itself at ``t = +-1``; cross
    terms in ``v`` make the crossing a curve that runs from one side of the
    sheet to the other, so the self-intersection has no interior endpoints.
    """
    rng = np.random.default_rng(seed)
    while True:
        nu = int(rng.integers(10, 19))
        nv = int(rng.integers(6, 14))
        if 2 * (nu - 1) * (nv - 1) <= max_triangles:
            break
    tmax = float(rng.uniform(1.3, 1.6))
    t = np.linspace(-tmax, tmax, nu)
    v = np.linspace(-1.0, 1.0, nv)
    pts, tris, loop = _grid(nu, nv, t, v)
    T, V = pts[:, 0], pts[:, 1]
    a, b, c, e = rng.uniform(-0.3, 0.3, size=4)
    x = T * T - 1.0 + a * V * V + e * T * V
    y = 1.5 * V + b * np.sin(np.pi * V) * T
    z = T**3 - T + c * V
    img = np.column_stack([x, y, z])
    step = 2.0 * tmax / (nu - 1)
    img += rng.normal(scale=0.02 * step, size=img.shape)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    img = img @ q.T + rng.normal(size=3)
    return TriangulatedDisk(img, tris, loop)


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class Scenario:
    """Named fixture: meshes to write and a manifest of parameters and reference values."""

    id: str
    meshes: Dict[str, TriangulatedDisk]
    manifest: Dict[str, object]


def _cap_values(z0: float, H: float) -> Dict[str, float]:
    rho = math.sqrt(1.0 - z0 * z0)
    R = 1.0 / H
    c = math.sqrt(R * R - rho * rho)
    return {"R": R, "offset": c, "area": TWO_PI * R * (R - c), "sagitta": R - c}


def _equator_cap(resolution: int = 2000, H: float = 0.5) -> Scenario:
    curve = latitude_circle(0.0, resolution)
    minus = spherical_cap(0.0, 1.0, H, resolution, "minus")
    plus = spherical_cap(0.0, 1.0, H, resolution, "plus")
    cap = _cap_values(0.0, H)
    manifest = {
        "params": {"z0": 0.0, "rho": 1.0, "H": H, "resolution": resolution},
        "reference": {
            "cap_area": cap["area"],
            "cap_radius": cap["R"],
            "pair_separation": 2.0 * cap["sagitta"],
            "flat_area": math.pi,
            "flat_volume": minus.flat_volume,
        },
    }
    meshes = {"cap_minus": curve.cap_minus, "cap_plus": curve.cap_plus,
              "analytic_minus": minus.mesh, "analytic_plus": plus.mesh}
    return Scenario("equator_cap", meshes, manifest)


def _gamma1(resolution: int = 2000, H: float = 0.5, z: float = 0.1, bridge_width: float = 0.25) -> Scenario:
    fx = nonexample_curves("gamma1", H=H, resolution=resolution, z=z, bridge_width=bridge_width)
    cap = _cap_values(z, H)
    manifest = {
        "params": {"z": z, "bridge_width": bridge_width, "H": H, "resolution": resolution},
        "reference": {
            "apex_distance": 2.0 * z,
            "sagitta_sum": 2.0 * cap["sagitta"],
            "caps_intersect": caps_intersect(z, H),
        },
        "checks": fx.curve.check(),
    }
    meshes = {"cap_minus": fx.curve.cap_minus, "cap_plus": fx.curve.cap_plus}
    if fx.surface is not None:
        meshes["bridged_caps"] = fx.surface
    return Scenario("gamma1_bridge", meshes, manifest)


def _gamma2(resolution: int = 2000, inner: float = 0.3, outer: float = 0.6, bridge_width: float = 0.3) -> Scenario:
    fx = nonexample_curves("gamma2", resolution=resolution, inner=inner, outer=outer, bridge_width=bridge_width)
    manifest = {
        "params": {"inner": inner, "outer": outer, "bridge_width": bridge_width, "resolution": resolution},
        "checks": fx.curve.check(),
    }
    return Scenario("gamma2_symmetric", {"cap_minus": fx.curve.cap_minus, "cap_plus": fx.curve.cap_plus}, manifest)


def _straight(H: float = 1.5, n_max: int = 10, eps: float = 0.05) -> Scenario:
    fit = energy_slope(H, range(1, n_max + 1), eps)
    meshes = {}
    for n in sorted({1, n_max}):
        fam = counterexample_energy(n, eps, H)[0]
        meshes[f"E_{n}"] = fam.surface
    meshes["reference_disk"] = fam.reference
    manifest = {"params": {"H": H, "n_max": n_max, "eps": eps}, "fit": fit,
                "reference": {"expected_slope": TWO_PI * (1.0 - H)}}
    return Scenario("counterexample_straight", meshes, manifest)


def _slanted(H: float = 1.5, n: int = 3, delta: float = 0.1, eps: float = 0.05) -> Scenario:
    from .intersect import self_intersections

    fam = slanted_family(n, delta, H, eps)
    union = translated_union(fam.surface, 1.0)
    disjoint = self_intersections(union).empty
    manifest = {
        "params": {"H": H, "n": n, "delta": delta, "eps": eps},
        "values": {"area": fam.area, "volume": fam.volume, "i_hat": fam.i_hat},
        "checks": {"translates_disjoint": bool(disjoint)},
    }
    return Scenario("counterexample_slanted", {f"E_{n}_slanted": fam.surface}, manifest)


SCENARIOS: Dict[str, Callable[..., Scenario]] = {
    "equator_cap": _equator_cap,
    "gamma1_bridge": _gamma1,
    "gamma2_symmetric": _gamma2,
    "counterexample_straight": _straight,
    "counterexample_slanted": _slanted,
}


def build_scenario(scenario_id: str, **params) -> Scenario:
    try:
        builder = SCENARIOS[scenario_id]
    except KeyError:
        raise KeyError(f"unknown scenario {scenario_id!r}; known: {', '.join(sorted(SCENARIOS))}") from None
    return builder(**params)


def emit_scenario(scenario_id: str, out_dir: str, **params) -> List[str]:
    """Write ``<name>.hpmesh`` files and ``manifest.json``; returns the written paths."""
    sc = build_scenario(scenario_id, **params)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, mesh in sc.meshes.items():
        path = os.path.join(out_dir, f"{name}.hpmesh")
        write_hpmesh(mesh, path)
        written.append(path)
    manifest = dict(sc.manifest)
    manifest["id"] = sc.id
    manifest["meshes"] = sorted(f"{name}.hpmesh" for name in sc.meshes)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written
