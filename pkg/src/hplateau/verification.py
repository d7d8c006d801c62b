"""Reusable verification checks shared by the ``verify`` command and the test suite.

Every check returns a plain dict with a ``passed`` flag and the numbers it
was decided on, so results can be serialised deterministically.
"""

from __future__ import annotations

import math
from typing import Dict, Optional, Tuple

import numpy as np

from .functionals import cap_constant, energy_breakdown
from .intersect import (
    brute_force_intersections,
    self_intersections,
    smooth_fold,
    surgery_swap,
    swap_preserves_orientation,
)
from .mesh import EnclosureRegion, ReferenceMap, TriangulatedDisk
from .meshgen import ring_disk

__all__ = [
    "DELTA_MIN",
    "random_pl_map",
    "z_flux_volume",
    "functional_equivalence",
    "divergence_identity",
    "intersection_oracle",
    "surgery_contract",
    "counterexample_slopes",
]

# smallest I_H decrease demanded of fold smoothing in the surgery contract
DELTA_MIN = 1e-3


def _fan_cap(points: np.ndarray, loop: np.ndarray, lift: np.ndarray) -> TriangulatedDisk:
    b = points[loop]
    apex = b.mean(axis=0) + lift
    verts = np.concatenate([b, apex[None, :]])
    n = len(loop)
    tris = np.array([(n, (i + 1) % n, i) for i in range(n)], dtype=np.int64)
    return TriangulatedDisk(verts, tris, np.arange(n)[::-1].copy())


def random_pl_map(seed: int) -> Tuple[ReferenceMap, EnclosureRegion, float]:
    """Random non-conformal PL map of a ring disk, closed by a fan cap, with a random ``H``.

    The reference disk has jittered interior vertices; the image is a random
    quadratic map plus per-vertex noise. Returns ``(u, region, H)``.
    """
    rng = np.random.default_rng(seed)
    rd = ring_disk(int(rng.integers(3, 7)))
    ref = rd.points.copy()
    interior = np.ones(len(ref), dtype=bool)
    interior[rd.boundary_loop] = False
    m = len(rd.rings) - 1
    ref[interior] += rng.uniform(-0.15, 0.15, size=(int(interior.sum()), 2)) / m
    reference = TriangulatedDisk(np.column_stack([ref, np.zeros(len(ref))]), rd.triangles, rd.boundary_loop)
    x, y = ref[:, 0], ref[:, 1]
    basis = np.column_stack([x, y, x * x, x * y, y * y])
    coeff = rng.normal(size=(5, 3))
    coeff[:2] += np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]) * rng.uniform(0.5, 2.0, size=(2, 1))
    image = basis @ coeff + rng.normal(size=3) + rng.normal(scale=0.05 / m, size=(len(ref), 3))
    u = ReferenceMap(reference, image)
    disk = u.image_disk()
    region = EnclosureRegion(disk, _fan_cap(image, rd.boundary_loop, rng.normal(size=3)))
    return u, region, float(rng.uniform(0.0, 2.0))


def z_flux_volume(points: np.ndarray) -> float:
    """Enclosed volume of closed triangles as the flux of ``(0, 0, z)``.

    Uses the mean height times the signed ``xy``-projected area per triangle,
    which does not share any arithmetic with the origin-cone formula.
    """
    z = points[:, :, 2].mean(axis=1)
    a, b, c = points[:, 0, :2], points[:, 1, :2], points[:, 2, :2]
    proj = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    return math.fsum((z * proj).tolist())


def functional_equivalence(n_maps: int = 100, seed: int = 0, rtol: float = 1e-9) -> Dict[str, object]:
    """``|F_H - (2 I_H - C2) - (E - 2 Area)|`` relative to ``max(|F_H|, E, 1)`` on random maps."""
    worst, worst_defect = 0.0, math.inf
    for k in range(n_maps):
        u, region, H = random_pl_map(seed * 100003 + k)
        b = energy_breakdown(u, region, H)
        err = abs(b.f_h - (2.0 * b.i_h - b.C2) - (b.dirichlet - 2.0 * b.area))
        scale = max(abs(b.f_h), b.dirichlet, 1.0)
        worst = max(worst, err / scale)
        worst_defect = min(worst_defect, b.defect / b.dirichlet)
    return {
        "n_maps": n_maps,
        "max_relative_error": worst,
        "min_relative_defect": worst_defect,
        "passed": bool(worst <= rtol and worst_defect >= -rtol),
    }


def divergence_identity(n_surfaces: int = 100, seed: int = 0, rtol: float = 1e-9) -> Dict[str, object]:
    """``|W - 3 Vol|`` on closed surfaces, with ``Vol`` from :func:`z_flux_volume`."""
    worst = 0.0
    for k in range(n_surfaces):
        _, region, _ = random_pl_map(seed * 100003 + k)
        closed = TriangulatedDisk(region.closed_vertices(), region.closed_triangles())
        W = cap_constant(closed)
        vol = z_flux_volume(closed.triangle_points())
        scale = max(abs(W), float(np.sum(np.linalg.norm(closed.triangle_normals(), axis=1))), 1.0)
        worst = max(worst, abs(W - 3.0 * vol) / scale)
    return {"n_surfaces": n_surfaces, "max_relative_error": worst, "passed": bool(worst <= rtol)}


def _same_segments(a, b, tol: float) -> bool:
    if [(p, q) for p, q, _ in a] != [(p, q) for p, q, _ in b]:
        return False
    return all(np.allclose(sa, sb, rtol=0.0, atol=tol) for (_, _, sa), (_, _, sb) in zip(a, b))


def intersection_oracle(n_fixtures: int = 20, seed: int = 0, max_triangles: int = 500) -> Dict[str, object]:
    """Hashed detector against the all-pairs oracle on random immersed sheets."""
    from .scenarios import random_immersed_sheet

    rows = []
    for k in range(n_fixtures):
        mesh = random_immersed_sheet(seed * 1009 + k, max_triangles)
        fast = self_intersections(mesh)
        slow = brute_force_intersections(mesh, fast.tol)
        rows.append({
            "triangles": int(mesh.n_triangles),
            "segments": int(len(fast.pairs)),
            "match": _same_segments(fast.segment_set(), slow.segment_set(), fast.tol),
            "isolated_points": int(fast.isolated_points),
            "interior_endpoints": int(fast.interior_endpoints),
        })
    ok = all(r["match"] and r["segments"] > 0 and r["isolated_points"] == 0 and r["interior_endpoints"] == 0
             and r["triangles"] <= max_triangles for r in rows)
    return {"fixtures": rows, "passed": bool(ok)}


def surgery_contract(H: float = 0.5, delta_min: float = DELTA_MIN, rtol: float = 1e-9) -> Dict[str, object]:
    """Swap on the crease fixture keeps ``I_H``; smoothing the fold lowers it by ``delta_min``."""
    from .functionals import i_h
    from .intersect import FoldNotSmoothableError, is_embedded
    from .scenarios import crease_fixture

    fx = crease_fixture(H)
    before = i_h(fx.region, H).i_h
    swapped = surgery_swap(fx.u, fx.gamma_plus, fx.gamma_minus)
    region = fx.region.with_disk(swapped.image_disk())
    after = i_h(region, H).i_h
    swap_err = abs(after - before) / max(abs(before), 1.0)
    try:
        _, smoothed = smooth_fold(swapped, fx.gamma_plus, region, H, delta_min=delta_min)
        decrease: Optional[float] = after - smoothed.i_h
    except FoldNotSmoothableError:
        decrease = None
    return {
        "embedded_before": bool(is_embedded(fx.u.image_disk())),
        "orientation_preserved": bool(swap_preserves_orientation(fx.u, fx.gamma_plus, fx.gamma_minus)),
        "i_h_before": before,
        "i_h_swapped": after,
        "swap_relative_error": swap_err,
        "fold_decrease": decrease,
        "delta_min": delta_min,
        "passed": bool(swap_err <= rtol and decrease is not None and decrease >= delta_min),
    }


def counterexample_slopes(
    H_values=(0.5, 1.0, 1.5), n_max: int = 10, eps: float = 0.05, rtol: float = 1e-3
) -> Dict[str, object]:
    """Fitted slope of ``I_hat(E_n)`` against ``2 pi (1 - H)``.

    When the expected slope is zero the error is taken relative to ``2 pi``.
    """
    from .scenarios import energy_slope

    rows = []
    for H in H_values:
        fit = energy_slope(H, range(1, n_max + 1), eps)
        expected = fit["expected_slope"]
        err = abs(fit["slope"] - expected) / (abs(expected) if expected != 0 else 2.0 * math.pi)
        rows.append({"H": float(H), "slope": fit["slope"], "expected": expected, "relative_error": err})
    return {"fits": rows, "passed": bool(all(r["relative_error"] <= rtol for r in rows))}
