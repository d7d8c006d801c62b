"""Minimisation of ``I_H = Area + 2H Vol`` over disks with a fixed boundary in a ball.

Descent runs on interior vertex positions. The first steps use the direction
``d = -(L + mu M)^{-1} g`` where ``g`` is the exact gradient of the discrete
functional, ``L`` the (clipped) cotangent stiffness of the current surface
and ``M`` the lumped mass. Later steps are Newton steps restricted to motion
along the vertex normals, using the exact Hessian; tangential motion only
reparametrises the surface and, left free, lets triangles degenerate.
Armijo backtracking keeps the energy monotone.

Writing the area gradient as ``-2 A_i Hvec_i`` and the volume gradient as
``A_i n_i`` (``A_i`` the mixed area) the per-vertex residual
``|g_i . nu_i| / (2 A_i)`` is the defect of the scalar mean curvature equation
``(Hvec_i - H n_i) . nu_i = 0`` along the unit vertex normal ``nu_i``. The
full vector defect ``|g_i| / (2 A_i)`` also carries a tangential part that
measures mesh parametrisation rather than geometry; it is reported separately.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from .curves import BoundaryCurve
from .domain import AmbientDomain, Ball, feasible_h_range, project_into_domain
from .functionals import EnergyBreakdown, cotangents, h_concavity_check, i_h, mean_curvature, mixed_areas
from .intersect import ih_gradient, is_embedded
from .mesh import EnclosureRegion, MeshError, TriangulatedDisk, degenerate_tolerance
from .meshgen import refine_midpoint, torsion_profile

__all__ = [
    "SolveOptions",
    "SolveReport",
    "PairReport",
    "InfeasibleCurvatureError",
    "check_feasible",
    "initialize_sweep",
    "minimize_ih",
    "rellich_pair",
    "hausdorff_distance",
    "is_radial_graph",
    "enclosure_for",
]


class InfeasibleCurvatureError(ValueError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 2000
    residual_tol: float = 1e-3
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_halvings: int = 30
    mass_shift: float = 1e-3
    sobolev_steps: int = 10
    refinement_levels: int = 0
    side: str = "minus"
    seed: int = 0
    init_offset: float = 0.05
    init_jitter: float = 0.0
    collar_rings: int = 2
    check_embedded: bool = True

    def __post_init__(self) -> None:
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.side not in ("minus", "plus"):
            raise ValueError("side must be 'minus' or 'plus'")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    residual_fraction: float
    full_residual: float
    geometric_residual: float
    ih_trace: Tuple[float, ...]
    embedded: Optional[bool]
    violations: int
    energies: EnergyBreakdown
    min_interior_distance: float
    side: str
    H: float
    message: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ih_trace"] = list(self.ih_trace)
        d["energies"] = self.energies.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class PairReport:
    hausdorff: float
    mean_h_normal_minus: float
    mean_h_normal_plus: float
    opposite_signs: bool
    mirror_error: Optional[float]
    minus: SolveReport
    plus: SolveReport

    def to_dict(self) -> dict:
        return {
            "hausdorff": self.hausdorff,
            "mean_h_normal_minus": self.mean_h_normal_minus,
            "mean_h_normal_plus": self.mean_h_normal_plus,
            "opposite_signs": self.opposite_signs,
            "mirror_error": self.mirror_error,
            "minus": self.minus.to_dict(),
            "plus": self.plus.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def check_feasible(domain: AmbientDomain, H: float) -> None:
    lo, hi = feasible_h_range(domain)
    if not (lo <= H < hi):
        raise InfeasibleCurvatureError(
            f"H={H:g} is outside the feasible range [{lo:g}, {hi:g}) = [0, 1/R) for {domain.describe()}"
        )


def _require_ball(domain: AmbientDomain) -> Ball:
    if not isinstance(domain, Ball):
        raise NotImplementedError("minimisation is only available in a Euclidean ball")
    return domain


def enclosure_for(disk: TriangulatedDisk, boundary: BoundaryCurve, side: str) -> EnclosureRegion:
    """Region between ``disk`` and the cap on ``side``; ``disk`` must be oriented outward from it."""
    cap = boundary.cap_minus if side == "minus" else boundary.cap_plus
    return EnclosureRegion(disk, cap)


def initialize_sweep(boundary: BoundaryCurve, domain: AmbientDomain, side: str = "minus",
                     offset: float = 0.05) -> TriangulatedDisk:
    """Cap on ``side`` pulled radially inward by ``offset * w`` with ``w`` a torsion profile.

    The returned disk is oriented outward from the region it encloses with that cap.
    """
    ball = _require_ball(domain)
    if boundary.cap_minus is None or boundary.cap_plus is None:
        raise ValueError("boundary curve carries no caps")
    if side not in ("minus", "plus"):
        raise ValueError("side must be 'minus' or 'plus'")
    cap = boundary.cap(side)
    w = torsion_profile(cap)
    x = cap.vertices * (1.0 - offset * w)[:, None]
    x = project_into_domain(x, ball)
    return cap.flipped().with_vertices(x)


def _cross_matrices(v: np.ndarray) -> np.ndarray:
    m = np.zeros(v.shape[:-1] + (3, 3))
    m[..., 0, 1], m[..., 0, 2] = -v[..., 2], v[..., 1]
    m[..., 1, 0], m[..., 1, 2] = v[..., 2], -v[..., 0]
    m[..., 2, 0], m[..., 2, 1] = -v[..., 1], v[..., 0]
    return m


def ih_hessian(x: np.ndarray, t: np.ndarray, H: float) -> sparse.csc_matrix:
    """Exact Hessian of ``Area + 2H Vol`` as a ``3n x 3n`` sparse matrix (xyz interleaved)."""
    p = x[t]
    nvec = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    nn = np.linalg.norm(nvec, axis=1)
    nh = nvec / nn[:, None]
    proj = np.eye(3) - nh[:, :, None] * nh[:, None, :]
    N = [_cross_matrices(p[:, (a + 2) % 3] - p[:, (a + 1) % 3]) for a in range(3)]
    Cn = 0.5 * _cross_matrices(nh)
    X = [(H / 3.0) * _cross_matrices(p[:, a]) for a in range(3)]
    rows, cols, vals = [], [], []
    ii = np.arange(3)
    for a in range(3):
        for b in range(3):
            blk = np.einsum("mji,mjk,mkl->mil", N[a], proj, N[b]) / (2.0 * nn[:, None, None])
            if b == (a + 2) % 3:
                blk = blk + Cn + X[(a + 1) % 3]
            elif b == (a + 1) % 3:
                blk = blk - Cn - X[(a + 2) % 3]
            r = 3 * t[:, a, None, None] + ii[None, :, None]
            c = 3 * t[:, b, None, None] + ii[None, None, :]
            rows.append(np.broadcast_to(r, blk.shape).ravel())
            cols.append(np.broadcast_to(c, blk.shape).ravel())
            vals.append(blk.ravel())
    n = 3 * len(x)
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsc()


def _stiffness(x: np.ndarray, t: np.ndarray, n: int, floor: float = 1e-2) -> sparse.csr_matrix:
    cot = np.maximum(cotangents(x, t), floor)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsc()


class _Energy:
    def __init__(self, disk: TriangulatedDisk, cap: TriangulatedDisk, H: float):
        self.t = disk.triangles
        self.H = H
        cp = cap.vertices[cap.triangles]
        self.cap_det = math.fsum(np.einsum("ij,ij->i", cp[:, 0], np.cross(cp[:, 1], cp[:, 2])).tolist())
        self.area_tol = degenerate_tolerance(disk)

    def areas(self, x: np.ndarray) -> np.ndarray:
        p = x[self.t]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    def __call__(self, x: np.ndarray) -> float:
        p = x[self.t]
        area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
        det = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))
        return math.fsum(area.tolist()) + 2.0 * self.H * (math.fsum(det.tolist()) + self.cap_det) / 6.0


def _residuals(disk: TriangulatedDisk, x: np.ndarray, H: float, interior: np.ndarray,
               full: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient and per-vertex residual (normal part, or the full vector when ``full``)."""
    mesh = disk.with_vertices(x)
    g = ih_gradient(mesh, H)
    amix = mixed_areas(x, disk.triangles)[interior]
    if full:
        return g, np.linalg.norm(g[interior], axis=1) / (2.0 * amix)
    nu = mesh.vertex_normals()[interior]
    return g, np.abs(np.einsum("ij,ij->i", g[interior], nu)) / (2.0 * amix)


def _line_search(x, d, slope, current, energy, interior, ball, opts):
    """Armijo backtracking; returns ``(trial, energy)`` or ``None``."""
    step = 1.0
    for _ in range(opts.max_halvings + 1):
        trial = x.copy()
        trial[interior] = project_into_domain(x[interior] + step * d[interior], ball)
        if np.all(energy.areas(trial) > energy.area_tol):
            e = energy(trial)
            if e <= current + opts.armijo_c * step * slope:
                return trial, e
        step *= opts.backtrack
    return None


def _sobolev_direction(x, g, disk, interior, opts):
    n = disk.n_vertices
    L = _stiffness(x, disk.triangles, n)
    M = sparse.diags(mixed_areas(x, disk.triangles)).tocsc()
    A = (L + opts.mass_shift * M)[interior][:, interior].tocsc()
    d = np.zeros_like(x)
    d[interior] = -splu(A).solve(g[interior])
    return d


def _newton_directions(x, g, disk, interior, H):
    """Newton directions along vertex normals for increasing diagonal shifts."""
    K = ih_hessian(x, disk.triangles, H)
    idx = (3 * interior[:, None] + np.arange(3)[None, :]).ravel()
    K = K[idx][:, idx]
    nu = disk.with_vertices(x).vertex_normals()[interior]
    m = len(interior)
    N = sparse.csc_matrix((nu.ravel(), (np.arange(3 * m), np.repeat(np.arange(m), 3))), shape=(3 * m, m))
    Ks = (N.T @ K @ N).tocsc()
    rhs = np.einsum("ij,ij->i", g[interior], nu)
    scale = float(np.mean(np.abs(Ks.diagonal())))
    eye = sparse.identity(m, format="csc")
    for mu in (0.0, 1e-6, 1e-4, 1e-2, 1e-1, 1.0):
        try:
            sol = splu((Ks + (mu * scale) * eye).tocsc()).solve(rhs)
        except RuntimeError:
            continue
        if not np.all(np.isfinite(sol)):
            continue
        d = np.zeros_like(x)
        d[interior] = -sol[:, None] * nu
        yield d


def _descend(
    disk: TriangulatedDisk,
    cap: TriangulatedDisk,
    ball: Ball,
    H: float,
    opts: SolveOptions,
    trace: List[float],
) -> Tuple[np.ndarray, bool, int, str]:
    interior = np.nonzero(disk.interior_mask())[0]
    energy = _Energy(disk, cap, H)
    x = np.array(disk.vertices, copy=True)
    current = energy(x)
    if not trace:
        trace.append(current)
    noise = 1e-12 * (1.0 + abs(current))
    message = "max iterations reached"
    converged = False
    it = 0
    g, res = _residuals(disk, x, H, interior)
    while it < opts.max_iterations:
        if res.max() <= opts.residual_tol:
            converged = True
            message = "residual below tolerance"
            break
        it += 1
        step_taken = None
        if it > opts.sobolev_steps:
            for d in _newton_directions(x, g, disk, interior, H):
                slope = float(np.sum(g * d))
                if not slope < 0:
                    continue
                found = _line_search(x, d, slope, current, energy, interior, ball, opts)
                if found is not None:
                    step_taken = found
                    break
                # accept a full step lost in rounding noise if it reduces the residual
                trial = x.copy()
                trial[interior] = project_into_domain(x[interior] + d[interior], ball)
                if np.all(energy.areas(trial) > energy.area_tol):
                    e = energy(trial)
                    if e <= current + noise:
                        g2, res2 = _residuals(disk, trial, H, interior)
                        if res2.max() < res.max():
                            step_taken = (trial, e)
                            break
        if step_taken is None:
            d = _sobolev_direction(x, g, disk, interior, opts)
            slope = float(np.sum(g * d))
            if slope < 0:
                step_taken = _line_search(x, d, slope, current, energy, interior, ball, opts)
        if step_taken is None:
            message = "line search failed"
            break
        x, current = step_taken
        trace.append(current)
        g, res = _residuals(disk, x, H, interior)
    else:
        if res.max() <= opts.residual_tol:
            converged = True
            message = "residual below tolerance"
    return x, converged, it, message


def minimize_ih(
    init: TriangulatedDisk,
    boundary: BoundaryCurve,
    domain: AmbientDomain,
    H: float,
    opts: Optional[SolveOptions] = None,
) -> Tuple[TriangulatedDisk, SolveReport]:
    """Descend ``I_H`` from ``init`` with boundary vertices pinned."""
    opts = opts or SolveOptions()
    check_feasible(domain, H)
    ball = _require_ball(domain)
    if H > 0.95 / ball.radius:
        warnings.warn(
            f"H={H:g} is close to the critical value 1/R={1 / ball.radius:g}; convergence may be slow",
            RuntimeWarning,
            stacklevel=2,
        )
    region = enclosure_for(init, boundary, opts.side)
    if not region.closure_check:
        raise MeshError("initial disk and cap do not close up")
    disk, cap = init, region.cap
    if opts.init_jitter > 0:
        rng = np.random.default_rng(opts.seed)
        x = np.array(disk.vertices, copy=True)
        inner = disk.interior_mask()
        x[inner] += opts.init_jitter * rng.standard_normal((int(inner.sum()), 3))
        disk = disk.with_vertices(project_into_domain(x, ball))
    trace: List[float] = []
    total_it = 0
    x, converged, it, message = _descend(disk, cap, ball, H, opts, trace)
    total_it += it
    for _ in range(opts.refinement_levels):
        disk = disk.with_vertices(x)
        R = ball.radius

        def to_sphere(p: np.ndarray) -> np.ndarray:
            return R * p / np.linalg.norm(p, axis=1, keepdims=True)

        disk = refine_midpoint(disk, project_boundary=to_sphere)
        cap = refine_midpoint(cap, project_boundary=to_sphere, project_interior=to_sphere)
        x, converged, it, message = _descend(disk, cap, ball, H, opts, trace)
        total_it += it
    out = disk.with_vertices(x)
    region = EnclosureRegion(out, cap)
    report = _report(out, region, ball, H, opts, converged, total_it, trace, message)
    return out, report


def _report(disk, region, ball, H, opts, converged, iterations, trace, message) -> SolveReport:
    interior = np.nonzero(disk.interior_mask())[0]
    g, res = _residuals(disk, disk.vertices, H, interior)
    _, full = _residuals(disk, disk.vertices, H, interior, full=True)
    hfield = mean_curvature(disk)
    nrm = disk.vertex_normals()[hfield.vertices]
    geo = np.linalg.norm(hfield.vectors - H * nrm, axis=1)
    viol = h_concavity_check(region, H, collar=opts.collar_rings)
    dist = ball.radius - np.linalg.norm(disk.vertices[interior], axis=1)
    energies = i_h(region, H)
    embedded = is_embedded(disk) if opts.check_embedded else None
    return SolveReport(
        converged=bool(converged),
        iterations=int(iterations),
        residual=float(res.max()),
        residual_fraction=float(np.mean(res <= opts.residual_tol)),
        full_residual=float(full.max()),
        geometric_residual=float(np.percentile(geo, 95)),
        ih_trace=tuple(float(v) for v in trace),
        embedded=embedded,
        violations=len(viol),
        energies=energies,
        min_interior_distance=float(dist.min()) if len(dist) else float("nan"),
        side=opts.side,
        H=float(H),
        message=message,
    )


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two vertex sets."""
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def is_radial_graph(disk: TriangulatedDisk, cap: TriangulatedDisk, rel_tol: float = 1e-6) -> bool:
    """Whether central projection maps ``disk`` one-to-one onto ``cap``.

    All triangles must keep one orientation under projection and the total
    solid angle must equal the cap's.
    """

    def solid_angles(p: np.ndarray) -> np.ndarray:
        a, b, c = p[:, 0], p[:, 1], p[:, 2]
        na, nb, nc = (np.linalg.norm(v, axis=1) for v in (a, b, c))
        num = np.einsum("ij,ij->i", a, np.cross(b, c))
        den = (na * nb * nc + np.einsum("ij,ij->i", a, b) * nc
               + np.einsum("ij,ij->i", a, c) * nb + np.einsum("ij,ij->i", b, c) * na)
        return 2.0 * np.arctan2(num, den)

    sd = solid_angles(disk.triangle_points())
    sc = solid_angles(cap.triangle_points())
    if not (np.all(sd > 0) or np.all(sd < 0)):
        return False
    return abs(abs(sd.sum()) - abs(sc.sum())) <= rel_tol * max(abs(sc.sum()), 1.0) + 1e-9


def _mean_h_normal(disk: TriangulatedDisk, normal: np.ndarray) -> float:
    f = mean_curvature(disk)
    return float(np.mean(f.vectors @ normal))


def _solve_side(boundary: BoundaryCurve, domain: AmbientDomain, H: float, opts: SolveOptions, side: str):
    o = replace(opts, side=side)
    init = initialize_sweep(boundary, domain, side, o.init_offset)
    return minimize_ih(init, boundary, domain, H, o)


def rellich_pair(
    boundary: BoundaryCurve,
    domain: AmbientDomain,
    H: float,
    opts: Optional[SolveOptions] = None,
    mirror: Optional[np.ndarray] = None,
    jobs: int = 1,
) -> Tuple[TriangulatedDisk, TriangulatedDisk, PairReport]:
    """Solve from both caps and compare the two disks.

    ``mirror`` is an optional reflection matrix; when given, the plus disk is
    compared with the mirrored minus disk vertex-set-wise.
    """
    opts = opts or SolveOptions()
    check_feasible(domain, H)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=2) as ex:
            fm = ex.submit(_solve_side, boundary, domain, H, opts, "minus")
            fp = ex.submit(_solve_side, boundary, domain, H, opts, "plus")
            (dm, rm), (dp, rp) = fm.result(), fp.result()
    else:
        dm, rm = _solve_side(boundary, domain, H, opts, "minus")
        dp, rp = _solve_side(boundary, domain, H, opts, "plus")
    normal = boundary.reference_normal()
    hm = _mean_h_normal(dm, normal)
    hp = _mean_h_normal(dp, normal)
    mirror_err = None
    if mirror is not None:
        mirror_err = hausdorff_distance(dm.vertices @ np.asarray(mirror).T, dp.vertices)
    report = PairReport(
        hausdorff=hausdorff_distance(dm.vertices, dp.vertices),
        mean_h_normal_minus=hm,
        mean_h_normal_plus=hp,
        opposite_signs=bool(hm * hp < 0),
        mirror_error=mirror_err,
        minus=rm,
        plus=rp,
    )
    return dm, dp, report
