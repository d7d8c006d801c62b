"""Ambient domains and metric fields.

Two ambient containers are supported: the Euclidean ball of radius ``R`` and
the solid cylinder ``{r <= 2}`` carrying a blended metric that is Euclidean
for ``r <= 2 - 2*eps`` and switches to a shifted-radius metric near the wall.

Riemannian quantities on the cylinder are evaluated in the cylindrical chart
``(r, theta, t)``: a mesh triangle is read as the chart-linear triangle
spanned by the chart images of its vertices. Walls ``r = const`` are then
represented exactly, which is what makes the height-linear energy laws of
the cylinder families exact rather than polygon-approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy import integrate

__all__ = [
    "MetricField",
    "EuclideanMetric",
    "BlendedCylinderMetric",
    "Ball",
    "ModifiedCylinder",
    "AmbientDomain",
    "feasible_h_range",
    "project_into_domain",
    "triangle_rule",
    "smoothstep5",
]


def smoothstep5(s: np.ndarray) -> np.ndarray:
    """Quintic smoothstep ``6s^5 - 15s^4 + 10s^3`` on ``s`` clipped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def triangle_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric quadrature rule on the reference triangle.

    Returns barycentric points ``(q, 3)`` and weights ``(q,)`` summing to one,
    so that the integral over a triangle is ``area * sum(w * f(points))``.
    ``order=2`` is the 3-point rule, ``order=5`` the 7-point rule.
    """
    if order <= 2:
        a, b = 1.0 / 6.0, 2.0 / 3.0
        pts = np.array([[b, a, a], [a, b, a], [a, a, b]])
        w = np.full(3, 1.0 / 3.0)
        return pts, w
    if order <= 5:
        r15 = np.sqrt(15.0)
        a1 = (6.0 - r15) / 21.0
        a2 = (6.0 + r15) / 21.0
        w1 = (155.0 - r15) / 1200.0
        w2 = (155.0 + r15) / 1200.0
        pts = [[1 / 3, 1 / 3, 1 / 3]]
        wts = [9.0 / 40.0]
        for a, w in ((a1, w1), (a2, w2)):
            b = 1.0 - 2.0 * a
            pts += [[b, a, a], [a, b, a], [a, a, b]]
            wts += [w, w, w]
        return np.array(pts), np.array(wts)
    raise ValueError(f"no triangle rule of order {order}")


class MetricField:
    """Symmetric positive definite metric tensor field on the ambient space."""

    euclidean: bool = False

    def tensor(self, points: np.ndarray) -> np.ndarray:
        """Return the Cartesian metric tensor ``(..., 3, 3)`` at ``points``."""
        raise NotImplementedError

    def triangle_areas(self, tri_points: np.ndarray) -> np.ndarray:
        """Areas of triangles given as ``(m, 3, 3)`` vertex coordinates."""
        raise NotImplementedError

    def flux_volume(self, tri_points: np.ndarray) -> float:
        """Volume enclosed by a closed, outward-oriented triangle surface."""
        raise NotImplementedError


@dataclass(frozen=True)
class EuclideanMetric(MetricField):
    euclidean: bool = field(default=True, init=False)

    def tensor(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(np.eye(3), points.shape[:-1] + (3, 3)).copy()

    def triangle_areas(self, tri_points: np.ndarray) -> np.ndarray:
        e1 = tri_points[:, 1] - tri_points[:, 0]
        e2 = tri_points[:, 2] - tri_points[:, 0]
        return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)

    def flux_volume(self, tri_points: np.ndarray) -> float:
        p0, p1, p2 = tri_points[:, 0], tri_points[:, 1], tri_points[:, 2]
        dets = np.einsum("ij,ij->i", p0, np.cross(p1, p2))
        return float(np.sum(dets) / 6.0)


@dataclass(frozen=True)
class BlendedCylinderMetric(MetricField):
    """Cylinder metric ``dr^2 + f(r) dtheta^2 + dt^2`` with a blended angular factor.

    ``f(r) = psi1(r) r^2 + psi2(r) (r - shift)^2`` where ``psi1`` falls from 1 to
    0 across ``[2 - 2*eps, 2 - eps]`` (quintic smoothstep) and ``psi2 = 1 - psi1``.
    """

    eps: float = 0.05
    shift: float = 1.75
    quad_order: int = 2
    axis_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not 0.0 < self.eps < 0.125:
            raise ValueError(f"blend width eps must lie in (0, 1/8), got {self.eps}")

    @property
    def r_flat(self) -> float:
        return 2.0 - 2.0 * self.eps

    @property
    def r_outer(self) -> float:
        return 2.0 - self.eps

    def psi1(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = (r - self.r_flat) / (self.r_outer - self.r_flat)
        return 1.0 - smoothstep5(s)

    def psi2(self, r: np.ndarray) -> np.ndarray:
        return 1.0 - self.psi1(r)

    def angular_factor(self, r: np.ndarray) -> np.ndarray:
        """``f(r)``, the ``theta-theta`` component in the cylindrical chart."""
        r = np.asarray(r, dtype=float)
        p1 = self.psi1(r)
        p2 = 1.0 - p1
        return p1 * (r * r) + p2 * (r - self.shift) ** 2

    def chart_tensor(self, r: np.ndarray) -> np.ndarray:
        """``diag(1, f(r), 1)`` in the chart ``(r, theta, t)``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape + (3, 3))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = self.angular_factor(r)
        out[..., 2, 2] = 1.0
        return out

    def tensor(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        x, y = points[..., 0], points[..., 1]
        r = np.hypot(x, y)
        out = np.broadcast_to(np.eye(3), points.shape[:-1] + (3, 3)).copy()
        safe = r > self.axis_tol
        rs = np.where(safe, r, 1.0)
        tx, ty = -y / rs, x / rs
        scale = np.where(safe, self.angular_factor(r) / (rs * rs) - 1.0, 0.0)
        out[..., 0, 0] += scale * tx * tx
        out[..., 0, 1] += scale * tx * ty
        out[..., 1, 0] += scale * tx * ty
        out[..., 1, 1] += scale * ty * ty
        return out

    # radial potential P(r) = int_0^r sqrt(f), so that div(P/sqrt(f) d_r) = 1
    @cached_property
    def _p_outer(self) -> float:
        val, _ = integrate.quad(
            lambda s: np.sqrt(self.angular_factor(s)), self.r_flat, self.r_outer,
            epsabs=1e-15, epsrel=1e-14, limit=200,
        )
        return 0.5 * self.r_flat**2 + val

    def radial_potential(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = 0.5 * r * r
        blend = (r > self.r_flat) & (r <= self.r_outer)
        if np.any(blend):
            nodes, weights = np.polynomial.legendre.leggauss(24)
            rb = r[blend]
            half = 0.5 * (rb - self.r_flat)
            s = self.r_flat + half[:, None] * (nodes[None, :] + 1.0)
            vals = np.sqrt(self.angular_factor(s)) @ weights
            out[blend] = 0.5 * self.r_flat**2 + half * vals
        outer = r > self.r_outer
        if np.any(outer):
            ro = r[outer]
            c = self.r_outer - self.shift
            out[outer] = self._p_outer + 0.5 * ((ro - self.shift) ** 2 - c * c)
        return out

    def _chart(self, tri_points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Chart coordinates of each triangle with theta unwrapped per triangle.

        Returns ``(chart, on_axis)`` where ``chart`` is ``(m, 3, 3)`` holding
        ``(r, theta, t)`` per vertex and ``on_axis`` flags triangles touching the axis.
        """
        x, y, z = tri_points[..., 0], tri_points[..., 1], tri_points[..., 2]
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        axis = r <= self.axis_tol
        # reference angle: first vertex not on the axis
        first = np.argmax(~axis, axis=1)
        ref = th[np.arange(len(th)), first]
        d = th - ref[:, None]
        d = d - 2.0 * np.pi * np.round(d / (2.0 * np.pi))
        th_u = ref[:, None] + d
        on_axis = np.any(axis, axis=1)
        if np.any(on_axis):
            cnt = np.maximum((~axis).sum(axis=1), 1)
            mean_th = np.where(~axis, th_u, 0.0).sum(axis=1) / cnt
            th_u = np.where(axis, mean_th[:, None], th_u)
        chart = np.stack([r, th_u, z], axis=-1)
        return chart, on_axis

    def triangle_areas(self, tri_points: np.ndarray) -> np.ndarray:
        tri_points = np.asarray(tri_points, dtype=float)
        chart, on_axis = self._chart(tri_points)
        areas = np.empty(len(tri_points))
        if np.any(on_axis):
            # the chart is singular on the axis; these triangles sit in the flat core
            rmax = np.hypot(tri_points[on_axis, :, 0], tri_points[on_axis, :, 1]).max()
            if rmax > self.r_flat:
                raise ValueError("axis triangle reaches the blend region")
            areas[on_axis] = EuclideanMetric().triangle_areas(tri_points[on_axis])
        sel = ~on_axis
        if np.any(sel):
            c = chart[sel]
            e1 = c[:, 1] - c[:, 0]
            e2 = c[:, 2] - c[:, 0]
            bary, w = triangle_rule(self.quad_order)
            rq = np.einsum("qk,mk->mq", bary, c[:, :, 0])
            f = self.angular_factor(rq)
            g11 = e1[:, 0, None] ** 2 + f * e1[:, 1, None] ** 2 + e1[:, 2, None] ** 2
            g22 = e2[:, 0, None] ** 2 + f * e2[:, 1, None] ** 2 + e2[:, 2, None] ** 2
            g12 = (
                e1[:, 0, None] * e2[:, 0, None]
                + f * e1[:, 1, None] * e2[:, 1, None]
                + e1[:, 2, None] * e2[:, 2, None]
            )
            det = np.maximum(g11 * g22 - g12 * g12, 0.0)
            areas[sel] = 0.5 * (np.sqrt(det) @ w)
        return areas

    def flux_volume(self, tri_points: np.ndarray) -> float:
        tri_points = np.asarray(tri_points, dtype=float)
        chart, on_axis = self._chart(tri_points)
        total = np.zeros(len(tri_points))
        if np.any(on_axis):
            # flat core: the field is (x, y, 0) / 2
            p = tri_points[on_axis]
            cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
            mean = p.mean(axis=1)
            total[on_axis] = 0.25 * (mean[:, 0] * cross[:, 0] + mean[:, 1] * cross[:, 1])
        sel = ~on_axis
        if np.any(sel):
            c = chart[sel]
            cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])[:, 0]
            bary, w = triangle_rule(max(self.quad_order, 2))
            rq = np.einsum("qk,mk->mq", bary, c[:, :, 0])
            total[sel] = 0.5 * cr * (self.radial_potential(rq) @ w)
        return float(np.sum(total))


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball of radius ``radius`` centred at the origin."""

    radius: float = 1.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def metric(self) -> MetricField:
        return EuclideanMetric()

    @property
    def convexity(self) -> float:
        return 1.0 / self.radius

    def describe(self) -> str:
        return f"ball:{self.radius:g}"


@dataclass(frozen=True)
class ModifiedCylinder:
    """Solid cylinder ``r <= 2`` with the blended metric near its wall."""

    eps: float = 0.05
    t_range: Tuple[float, float] = (-np.inf, np.inf)

    def __post_init__(self) -> None:
        if not 0.0 < self.eps < 0.125:
            raise ValueError(f"blend width eps must lie in (0, 1/8), got {self.eps}")

    @property
    def metric(self) -> BlendedCylinderMetric:
        return BlendedCylinderMetric(eps=self.eps)

    @property
    def convexity(self) -> float:
        return 2.0

    @property
    def radius(self) -> float:
        return 2.0

    def describe(self) -> str:
        return f"modcyl:{self.eps:g}"


AmbientDomain = Ball | ModifiedCylinder


def feasible_h_range(domain: AmbientDomain) -> Tuple[float, float]:
    """Half-open interval ``[0, H0)`` of admissible mean curvatures."""
    return (0.0, float(domain.convexity))


def project_into_domain(p: np.ndarray, domain: AmbientDomain) -> np.ndarray:
    """Nearest point of the closed domain; identity for points already inside.

    Works on a single point ``(3,)`` or a batch ``(n, 3)``.
    """
    p = np.asarray(p, dtype=float)
    out = p.copy()
    if isinstance(domain, Ball):
        norm = np.linalg.norm(p, axis=-1, keepdims=True)
        outside = norm > domain.radius
        scale = np.where(outside, domain.radius / np.where(outside, norm, 1.0), 1.0)
        out = p * scale
    elif isinstance(domain, ModifiedCylinder):
        r = np.hypot(p[..., 0], p[..., 1])[..., None]
        outside = r > domain.radius
        scale = np.where(outside, domain.radius / np.where(outside, r, 1.0), 1.0)
        out[..., :2] = p[..., :2] * scale
        lo, hi = domain.t_range
        out[..., 2] = np.clip(p[..., 2], lo, hi)
    else:
        raise TypeError(f"unsupported domain {domain!r}")
    return out
