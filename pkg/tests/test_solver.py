import json
import math

import numpy as np
import pytest

from hplateau.curves import latitude_circle
from hplateau.domain import Ball, ModifiedCylinder
from hplateau.intersect import is_embedded
from hplateau.mesh import validate_disk
from hplateau.solver import (
    InfeasibleCurvatureError,
    SolveOptions,
    check_feasible,
    hausdorff_distance,
    initialize_sweep,
    is_radial_graph,
    minimize_ih,
    rellich_pair,
)

BALL = Ball(1.0)


def same_points(a, b):
    return len(a) == len(b) and sorted(map(tuple, a.tolist())) == sorted(map(tuple, b.tolist()))


def cap_area(rho, H):
    R = 1.0 / H
    return 2 * math.pi * R * (R - math.sqrt(R * R - rho * rho))


# ---------------------------------------------------------------- options and feasibility


def test_options_validated():
    with pytest.raises(ValueError):
        SolveOptions(residual_tol=0.0)
    with pytest.raises(ValueError):
        SolveOptions(max_iterations=0)
    with pytest.raises(ValueError):
        SolveOptions(side="up")


@pytest.mark.parametrize("H", [-0.1, 1.0, 1.5])
def test_infeasible_h_cites_bound(H):
    with pytest.raises(InfeasibleCurvatureError, match=r"\[0, 1\)"):
        check_feasible(BALL, H)


def test_cylinder_domain_rejected_for_minimisation(get_curve):
    c = get_curve("equator")
    init = initialize_sweep(c, BALL)
    with pytest.raises(NotImplementedError, match="Euclidean ball"):
        minimize_ih(init, c, ModifiedCylinder(0.05), 0.5)


def test_near_critical_h_warns():
    c = latitude_circle(0.0, 300)
    with pytest.warns(RuntimeWarning, match="critical"):
        minimize_ih(initialize_sweep(c, BALL), c, BALL, 0.97, SolveOptions(max_iterations=1))


# ---------------------------------------------------------------- initialisation


def test_sweep_init_lies_inside_ball(get_curve):
    c = get_curve("equator")
    d = initialize_sweep(c, BALL, "minus")
    inner = d.interior_mask()
    assert np.all(np.linalg.norm(d.vertices[inner], axis=1) < 1.0)
    assert np.all(d.vertices[inner, 2] < 0)
    assert validate_disk(d).is_disk
    assert same_points(d.vertices[d.boundary_loop], c.samples)


def test_sweep_init_sides_are_mirror_images(get_curve):
    c = get_curve("equator")
    lo = initialize_sweep(c, BALL, "minus")
    hi = initialize_sweep(c, BALL, "plus")
    assert hausdorff_distance(lo.vertices * np.array([1, 1, -1.0]), hi.vertices) <= 1e-9


def test_sweep_init_for_bridged_circles(get_curve):
    c = get_curve("gamma1")
    d = initialize_sweep(c, BALL, "minus")
    assert validate_disk(d).is_disk
    assert d.n_triangles == c.cap_minus.n_triangles


# ---------------------------------------------------------------- minimisation


def test_flat_disk_for_zero_curvature(solve):
    disk, rep = solve("equator", 0.0)
    assert rep.converged
    assert rep.energies.area == pytest.approx(math.pi, rel=5e-3)
    assert rep.residual <= SolveOptions().residual_tol
    assert np.max(np.abs(disk.vertices[:, 2])) < 1e-3


def test_equator_cap_matches_closed_form(solve):
    disk, rep = solve("equator", 0.5)
    assert rep.converged
    assert rep.energies.area == pytest.approx(cap_area(1.0, 0.5), rel=1e-2)
    assert rep.embedded and rep.violations == 0


def test_latitude_circle_cap(solve):
    disk, rep = solve("rho09", 0.5)
    assert rep.converged
    assert rep.energies.area == pytest.approx(cap_area(0.9, 0.5), rel=1e-2)


def test_bridged_circles_minimiser_embedded(solve):
    disk, rep = solve("gamma1", 0.5)
    assert rep.converged
    assert is_embedded(disk)


def test_report_invariants(solve):
    _, rep = solve("equator", 0.5)
    trace = np.array(rep.ih_trace)
    assert np.all(np.diff(trace) <= 1e-10 * np.abs(trace[:-1]))
    assert rep.min_interior_distance > 0
    assert rep.residual_fraction >= 0.95
    d = json.loads(rep.to_json())
    assert {"converged", "iterations", "residual", "ih_trace", "embedded", "violations", "energies"} <= set(d)


def test_boundary_pinned(solve, get_curve):
    disk, _ = solve("equator", 0.5)
    c = get_curve("equator")
    assert same_points(disk.vertices[disk.boundary_loop], c.samples)


def test_refinement_reduces_cap_error():
    c = latitude_circle(0.0, 300)
    errs = []
    for levels in (0, 1):
        opts = SolveOptions(refinement_levels=levels)
        _, rep = minimize_ih(initialize_sweep(c, BALL), c, BALL, 0.5, opts)
        assert rep.converged
        errs.append(abs(rep.energies.area - cap_area(1.0, 0.5)))
    # one halving of the mesh size should at least halve the error (order >= 1)
    assert errs[1] < 0.5 * errs[0]


def test_non_convergence_reported():
    c = latitude_circle(0.0, 300)
    _, rep = minimize_ih(initialize_sweep(c, BALL), c, BALL, 0.5, SolveOptions(max_iterations=1))
    assert not rep.converged
    assert rep.iterations == 1


def test_solve_is_deterministic():
    c = latitude_circle(0.2, 300)
    opts = SolveOptions(init_jitter=1e-3, seed=4)
    a, ra = minimize_ih(initialize_sweep(c, BALL), c, BALL, 0.3, opts)
    b, rb = minimize_ih(initialize_sweep(c, BALL), c, BALL, 0.3, opts)
    assert np.array_equal(a.vertices, b.vertices)
    assert ra.to_json() == rb.to_json()


# ---------------------------------------------------------------- Rellich pair


def test_rellich_pair_on_equator(get_curve):
    mirror = np.diag([1.0, 1.0, -1.0])
    dm, dp, rep = rellich_pair(get_curve("equator"), BALL, 0.5, mirror=mirror)
    assert rep.minus.converged and rep.plus.converged
    assert rep.opposite_signs
    assert rep.hausdorff == pytest.approx(2 * (2 - math.sqrt(3)), rel=1e-2)
    assert rep.mirror_error <= 10 * SolveOptions().residual_tol
    assert json.loads(rep.to_json())["minus"]["side"] == "minus"


def test_rellich_pair_coincides_without_curvature(get_curve):
    _, _, rep = rellich_pair(get_curve("equator"), BALL, 0.0)
    assert rep.hausdorff <= 1e-4


def test_rellich_pair_on_bridged_circles_are_graphs(get_curve):
    c = get_curve("gamma1")
    dm, dp, rep = rellich_pair(c, BALL, 0.5, jobs=2)
    assert rep.minus.converged and rep.plus.converged
    assert rep.minus.embedded and rep.plus.embedded
    assert is_radial_graph(dm, c.cap_minus)
    assert is_radial_graph(dp, c.cap_plus)
