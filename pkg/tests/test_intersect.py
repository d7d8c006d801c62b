import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hplateau.functionals import i_h
from hplateau.intersect import (
    FoldNotSmoothableError,
    SurgeryError,
    brute_force_intersections,
    default_tolerance,
    hash_candidate_pairs,
    is_embedded,
    seam_dihedral_angles,
    self_intersections,
    smooth_fold,
    subdisk_triangles,
    surgery_swap,
    swap_preserves_orientation,
)
from hplateau.mesh import EnclosureRegion, TriangulatedDisk, surface_area
from hplateau.meshgen import ring_disk
from hplateau.scenarios import crease_fixture, nonexample_curves, random_immersed_sheet, tent_fixture, translated_union


@pytest.fixture(scope="module")
def sigma1_small():
    return nonexample_curves("gamma1", H=0.5, resolution=300).surface


@pytest.fixture(scope="module")
def crease():
    return crease_fixture(0.5)


def triangle_areas(mesh):
    return 0.5 * np.linalg.norm(mesh.triangle_normals(), axis=1)


# ---------------------------------------------------------------- detection


def test_flat_disk_is_embedded():
    d = ring_disk(10).as_disk()
    assert self_intersections(d).empty
    assert is_embedded(d)


def test_single_triangle_is_embedded():
    assert is_embedded(TriangulatedDisk.from_arrays(np.eye(3), [[0, 1, 2]]))


def test_offset_duplicate_does_not_intersect():
    d = ring_disk(6).as_disk()
    tol = default_tolerance(d)
    assert self_intersections(translated_union(d, 10 * tol), tol).empty


def test_default_tolerance_scales_with_mesh():
    d = ring_disk(4).as_disk()
    assert default_tolerance(d) == pytest.approx(1e-8 * d.bbox_diagonal())


def test_bridged_caps_have_closed_intersection_curve(sigma1_small):
    c = self_intersections(sigma1_small)
    assert not is_embedded(sigma1_small)
    assert len(c.curves) >= 1
    assert any(c.closed_flags)
    assert not any(c.structure_flags.values())
    slow = brute_force_intersections(sigma1_small, c.tol)
    assert c.segment_set() == slow.segment_set()


def test_complex_serialises(sigma1_small):
    d = json.loads(self_intersections(sigma1_small).to_json())
    assert set(d) >= {"curves", "junctions", "structure", "closed"}
    assert all(len(p) == 3 for p in d["curves"][0])
    assert set(d["structure"]) == {"isolated_points", "interior_endpoints", "coplanar_contact"}


def test_every_segment_in_exactly_one_curve(sigma1_small):
    c = self_intersections(sigma1_small)
    ids = np.concatenate(c.curve_segments)
    assert sorted(ids.tolist()) == list(range(len(c.pairs)))


def test_hash_candidates_cover_overlapping_boxes():
    mesh = random_immersed_sheet(3, 200)
    p = mesh.triangle_points()
    lo, hi = p.min(axis=1), p.max(axis=1)
    n = len(p)
    i, j = np.triu_indices(n, 1)
    overlap = np.all((lo[i] <= hi[j]) & (lo[j] <= hi[i]), axis=1)
    shared = np.array([len(set(a) & set(b)) > 0 for a, b in zip(mesh.triangles[i].tolist(), mesh.triangles[j].tolist())])
    need = {(int(a), int(b)) for a, b in zip(i[overlap & ~shared], j[overlap & ~shared])}
    got = {tuple(sorted(map(int, r))) for r in hash_candidate_pairs(mesh.vertices, mesh.triangles)}
    assert need <= got


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(1000, 100_000))
def test_hash_matches_brute_force_on_random_sheets(seed):
    mesh = random_immersed_sheet(seed, 300)
    fast = self_intersections(mesh)
    slow = brute_force_intersections(mesh, fast.tol)
    assert [s[:2] for s in fast.segment_set()] == [s[:2] for s in slow.segment_set()]
    for a, b in zip(fast.segment_set(), slow.segment_set()):
        assert np.allclose(a[2], b[2], atol=fast.tol, rtol=0)
    assert fast.isolated_points == 0 and fast.interior_endpoints == 0


# ---------------------------------------------------------------- surgery


def test_crease_fixture_is_immersed(crease):
    assert not is_embedded(crease.u.image_disk())
    assert swap_preserves_orientation(crease.u, crease.gamma_plus, crease.gamma_minus)


def test_swap_preserves_point_set_area_and_volume(crease):
    w = surgery_swap(crease.u, crease.gamma_plus, crease.gamma_minus)
    a = np.unique(np.round(crease.u.image, 12), axis=0)
    b = np.unique(np.round(w.image, 12), axis=0)
    assert np.array_equal(a, b)
    r0 = i_h(crease.region, 0.5)
    r1 = i_h(crease.region.with_disk(w.image_disk()), 0.5)
    assert r1.area == pytest.approx(r0.area, rel=1e-9)
    assert r1.volume == pytest.approx(r0.volume, rel=1e-9)


def test_swap_is_an_involution(crease):
    w = surgery_swap(crease.u, crease.gamma_plus, crease.gamma_minus)
    ww = surgery_swap(w, crease.gamma_plus, crease.gamma_minus)
    assert np.array_equal(ww.image, crease.u.image)
    assert np.allclose(triangle_areas(ww.image_disk()), triangle_areas(crease.u.image_disk()), rtol=1e-9)


def test_swap_creates_fold_along_seam(crease):
    before = seam_dihedral_angles(crease.u.image_disk(), crease.gamma_plus)
    w = surgery_swap(crease.u, crease.gamma_plus, crease.gamma_minus)
    after = seam_dihedral_angles(w.image_disk(), crease.gamma_plus)
    assert after.min() < math.pi - 0.1
    assert after.min() < before.min()


def test_swap_rejects_unmatched_loops(crease):
    shifted = crease.gamma_minus + 1
    with pytest.raises(SurgeryError):
        surgery_swap(crease.u, crease.gamma_plus, shifted)


def test_swap_rejects_overlapping_subdisks(crease):
    with pytest.raises(SurgeryError, match="disjoint"):
        surgery_swap(crease.u, crease.gamma_plus, crease.gamma_plus)


def test_subdisk_is_inside_loop(crease):
    inside = subdisk_triangles(crease.u.reference, crease.gamma_plus)
    # an 8 x 8 square of grid cells, two triangles each
    assert inside.sum() == 2 * 8 * 8


def test_tent_smooths_toward_flat_disk():
    u, fold, region = tent_fixture()
    start = i_h(region, 0.5)
    assert seam_dihedral_angles(u.image_disk(), fold).min() < math.pi - 0.1
    out, energies = smooth_fold(u, fold, region, 0.5)
    assert energies.i_h < start.i_h
    flat = surface_area(TriangulatedDisk(u.reference.vertices, u.triangles, u.reference.boundary_loop))
    assert energies.area == pytest.approx(flat, rel=1e-2)
    assert seam_dihedral_angles(out.image_disk(), fold).min() >= math.pi - 0.1


def test_spurious_fold_not_smoothable():
    u, fold, region = tent_fixture(height=0.0)
    with pytest.raises(FoldNotSmoothableError, match="fold not smoothable"):
        smooth_fold(u, fold, region, 0.0)


def test_smooth_fold_checks_region(crease):
    other = EnclosureRegion(crease.region.disk, crease.region.cap)
    w = surgery_swap(crease.u, crease.gamma_plus, crease.gamma_minus)
    with pytest.raises(ValueError):
        smooth_fold(w, crease.gamma_plus, other, 0.5)
