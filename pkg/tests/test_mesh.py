import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hplateau.curves import latitude_circle
from hplateau.domain import (
    Ball,
    BlendedCylinderMetric,
    EuclideanMetric,
    ModifiedCylinder,
    feasible_h_range,
    project_into_domain,
)
from hplateau.mesh import (
    DegenerateTriangleError,
    EnclosureRegion,
    MeshError,
    OrientationError,
    TriangulatedDisk,
    WatertightError,
    oriented_enclosed_volume,
    surface_area,
    validate_disk,
)
from hplateau.meshgen import ring_disk
from hplateau.scenarios import counterexample_energy
from hplateau.verification import _fan_cap, random_pl_map


def flat_unit_disk(m=26):
    return ring_disk(m).as_disk()


def lower_half_ball(resolution=2000):
    """Lower hemisphere cap closed by the flat disk on the same triangulation."""
    c = latitude_circle(0.0, resolution)
    cap = c.cap_minus
    flat = cap.with_vertices(cap.vertices * np.array([1.0, 1.0, 0.0])).flipped()
    return EnclosureRegion(flat, cap)


# ---------------------------------------------------------------- validation


def test_single_triangle_is_disk():
    m = TriangulatedDisk.from_arrays(np.eye(3), [[0, 1, 2]])
    rep = validate_disk(m)
    assert rep.euler_characteristic == 1
    assert rep.boundary_cycles == 1
    assert rep.is_disk


def test_inconsistent_orientation_flagged():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    m = TriangulatedDisk.from_arrays(v, [[0, 1, 2], [1, 2, 3]])
    rep = validate_disk(m)
    assert not rep.orientation_consistent
    assert rep.inconsistent_edges == 1
    assert not rep.is_disk


def test_closed_tetrahedron_not_disk():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    t = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]
    rep = validate_disk(TriangulatedDisk(v, t))
    assert rep.euler_characteristic == 2
    assert rep.boundary_cycles == 0
    assert not rep.is_disk


def test_degenerate_triangle_reported():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], dtype=float)
    m = TriangulatedDisk.from_arrays(v, [[0, 1, 3], [1, 2, 3]])
    assert validate_disk(m).is_disk
    m2 = TriangulatedDisk.from_arrays(v, [[0, 1, 2]])
    assert validate_disk(m2).degenerate_triangles == (0,)


def test_invalid_vertices_rejected():
    with pytest.raises(MeshError):
        TriangulatedDisk(np.array([[0.0, np.nan, 0.0]]), np.zeros((0, 3)))
    with pytest.raises(MeshError):
        TriangulatedDisk(np.eye(3), [[0, 1, 5]])


# ---------------------------------------------------------------- area


def test_flat_disk_area_close_to_pi():
    d = flat_unit_disk()
    assert d.n_vertices >= 2000
    assert surface_area(d) == pytest.approx(math.pi, rel=5e-3)


def test_euclidean_area_is_cross_product_sum():
    _, region, _ = random_pl_map(7)
    d = region.disk
    expected = math.fsum((0.5 * np.linalg.norm(d.triangle_normals(), axis=1)).tolist())
    assert surface_area(d) == pytest.approx(expected, rel=1e-14)


def test_degenerate_area_input_raises():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    with pytest.raises(DegenerateTriangleError, match="triangle 0"):
        surface_area(TriangulatedDisk(v, [[0, 1, 2]]))


@pytest.mark.parametrize("n", [1, 4])
def test_cylinder_wall_area_is_exact(n):
    fam, _ = counterexample_energy(n, H=1.5)
    v, t = fam.component(1)
    metric = ModifiedCylinder(0.05).metric
    wall = TriangulatedDisk(v, t)
    # the wall includes the two chamfer strips; their area is independent of n
    fam1, _ = counterexample_energy(1, H=1.5)
    v1, t1 = fam1.component(1)
    diff = surface_area(wall, metric) - surface_area(TriangulatedDisk(v1, t1), metric)
    assert diff == pytest.approx(2.0 * math.pi * (n - 1), abs=1e-9)


def test_annulus_area_matches_radial_quadrature():
    eps = 0.05
    fam, _ = counterexample_energy(1, eps=eps, H=1.5)
    v, t = fam.component(0)
    annulus = TriangulatedDisk(v, t)
    r = np.hypot(annulus.vertices[np.unique(t), 0], annulus.vertices[np.unique(t), 1])
    r0, r1 = r.min(), r.max()
    metric = BlendedCylinderMetric(eps=eps)
    oracle, _ = integrate.quad(lambda s: 2 * math.pi * math.sqrt(metric.angular_factor(s)), r0, r1,
                               points=[metric.r_flat, metric.r_outer], epsabs=1e-13, limit=200)
    assert surface_area(annulus, metric) == pytest.approx(oracle, rel=1e-5)


# ---------------------------------------------------------------- volume


def test_half_ball_volume():
    region = lower_half_ball()
    vol = oriented_enclosed_volume(region)
    assert vol == pytest.approx(2 * math.pi / 3, rel=1e-2)


def test_half_ball_volume_monte_carlo_cross_check():
    region = lower_half_ball()
    rng = np.random.default_rng(5)
    p = rng.uniform(-1, 1, size=(200_000, 3))
    inside = (np.linalg.norm(p, axis=1) <= 1) & (p[:, 2] <= 0)
    mc = 8.0 * inside.mean()
    assert oriented_enclosed_volume(region) == pytest.approx(mc, rel=1.5e-2)


def test_zero_volume_when_disk_equals_cap():
    cap = latitude_circle(0.3, 500).cap_minus
    region = EnclosureRegion(cap.flipped(), cap)
    assert abs(oriented_enclosed_volume(region)) < 1e-14


def test_non_watertight_lists_gaps():
    cap = latitude_circle(0.0, 500).cap_minus
    disk = cap.with_vertices(cap.vertices * np.array([1.0, 1.0, 0.0])).flipped()
    holed = TriangulatedDisk(disk.vertices, disk.triangles[1:], disk.boundary_loop)
    region = EnclosureRegion(holed, cap)
    assert not region.closure_check
    with pytest.raises(WatertightError) as exc:
        oriented_enclosed_volume(region)
    assert "open edges" in str(exc.value)
    assert len(region.gap_edges) == 3


def test_inconsistent_closure_orientation_raises():
    cap = latitude_circle(0.0, 500).cap_minus
    disk = cap.with_vertices(cap.vertices * np.array([1.0, 1.0, 0.0]))
    with pytest.raises(OrientationError):
        EnclosureRegion(disk, cap)


def test_solid_cylinder_volume_grows_by_pi_per_unit_height():
    v = [counterexample_energy(n, H=1.0)[0].volume for n in (1, 2, 5)]
    assert v[1] - v[0] == pytest.approx(math.pi, abs=1e-9)
    assert v[2] - v[0] == pytest.approx(4 * math.pi, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), shift=st.tuples(*[st.floats(-5, 5)] * 3))
def test_volume_translation_invariant(seed, shift):
    _, region, _ = random_pl_map(seed)
    s = np.array(shift)
    moved = EnclosureRegion(region.disk.with_vertices(region.disk.vertices + s),
                            region.cap.with_vertices(region.cap.vertices + s))
    a, b = oriented_enclosed_volume(region), oriented_enclosed_volume(moved)
    assert abs(a - b) <= 1e-9 * max(abs(a), 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), lift=st.tuples(*[st.floats(-2, 2)] * 3))
def test_volume_additive_over_splitting(seed, lift):
    _, region, _ = random_pl_map(seed)
    loop = region.disk.boundary_loop
    mid = _fan_cap(region.disk.vertices, loop, np.array(lift))
    whole = oriented_enclosed_volume(region)
    part_a = oriented_enclosed_volume(EnclosureRegion(region.disk, mid))
    part_b = oriented_enclosed_volume(EnclosureRegion(mid.flipped(), region.cap))
    assert abs(whole - (part_a + part_b)) <= 1e-9 * max(abs(whole), abs(part_a), abs(part_b), 1.0)


# ---------------------------------------------------------------- domains and metric


def test_feasible_ranges():
    assert feasible_h_range(Ball(1.0)) == (0.0, 1.0)
    assert feasible_h_range(Ball(2.0)) == (0.0, 0.5)
    assert feasible_h_range(ModifiedCylinder(0.05)) == (0.0, 2.0)


def test_domain_validation():
    with pytest.raises(ValueError):
        Ball(0.0)
    with pytest.raises(ValueError):
        ModifiedCylinder(0.2)


def test_project_into_ball():
    b = Ball(1.0)
    assert np.allclose(project_into_domain(np.array([2.0, 0, 0]), b), [1, 0, 0])
    assert np.array_equal(project_into_domain(np.array([0.5, 0, 0]), b), [0.5, 0, 0])


def test_project_into_cylinder_clamps_radius():
    p = np.array([2.3 * math.cos(0.7), 2.3 * math.sin(0.7), -4.0])
    q = project_into_domain(p, ModifiedCylinder(0.05))
    assert math.hypot(q[0], q[1]) == pytest.approx(2.0)
    assert math.atan2(q[1], q[0]) == pytest.approx(0.7)
    assert q[2] == -4.0


def test_partition_of_unity_on_many_radii():
    m = BlendedCylinderMetric(eps=0.05)
    r = np.linspace(0.0, 2.0, 10_000)
    assert np.all(np.abs(m.psi1(r) + m.psi2(r) - 1.0) <= 1e-15)
    assert np.all(m.psi1(r[r <= 1.9]) == 1.0)
    assert np.all(m.psi1(r[r >= 1.95]) == 0.0)


@given(eps=st.floats(0.01, 0.12), frac=st.floats(0, 1))
def test_metric_is_euclidean_in_flat_core(eps, frac):
    m = BlendedCylinderMetric(eps=eps)
    r = frac * (2.0 - 2.0 * eps)
    assert m.angular_factor(np.array([r]))[0] == r * r
    p = np.array([[r * 0.6, r * 0.8, 1.0]])
    assert np.allclose(m.tensor(p)[0], np.eye(3), atol=1e-14)


def test_metric_positive_definite():
    m = BlendedCylinderMetric(eps=0.05)
    r = np.linspace(0.01, 2.0, 500)
    assert np.all(m.angular_factor(r) > 0)
    assert np.allclose(EuclideanMetric().tensor(np.zeros((4, 3))), np.eye(3))
