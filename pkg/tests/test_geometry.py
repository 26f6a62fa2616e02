"""Tests for fluxspec.geometry."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from fluxspec import geometry
from fluxspec.closed_form import BallSpec, BoxSpec


def test_domain_spec_validates_parameters() -> None:
    with pytest.raises(ValueError, match="needs BoxSpec"):
        geometry.DomainSpec("box", BallSpec(2))
    with pytest.raises(ValueError, match="at least 16 segments"):
        geometry.disk(1.0, segments=8)


def test_domain_ids_and_flags() -> None:
    assert geometry.disk(1.0).domain_id == "ball-n2-R1"
    assert geometry.rectangle(1.0, 0.5).domain_id == "box-1x0.5"
    assert geometry.regular_polygon(5).domain_id == "regular-5"
    assert geometry.disk().has_closed_form
    assert not geometry.sector(1.0).has_closed_form
    assert geometry.DomainSpec("box", BoxSpec((1.0, 1.0, 1.0))).dimension == 3


def test_regular_polygon_has_horizontal_bottom_side() -> None:
    spec = geometry.regular_polygon(6)
    vertices = np.array(spec.params.vertices)  # type: ignore[union-attr]
    assert vertices[0, 1] == pytest.approx(vertices[-1, 1])
    assert vertices[:, 1].min() == pytest.approx(vertices[0, 1])
    with pytest.raises(ValueError):
        geometry.regular_polygon(2)


def test_isosceles_and_rhombus_shapes() -> None:
    loop = geometry.make_domain(geometry.isosceles_triangle(math.pi / 3))
    assert loop.perimeter == pytest.approx(3.0)
    rhombus = geometry.make_domain(geometry.rhombus(math.pi / 2))
    assert rhombus.area == pytest.approx(1.0)
    assert rhombus.perimeter == pytest.approx(4.0)
    with pytest.raises(ValueError):
        geometry.isosceles_triangle(math.pi)


def test_make_domain_orients_counterclockwise() -> None:
    clockwise = geometry.polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    loop = geometry.make_domain(clockwise)
    assert loop.area == pytest.approx(1.0)
    assert geometry.signed_area(loop.vertices) > 0


def test_make_domain_rejects_invalid_polygons() -> None:
    bowtie = geometry.polygon([(0, 0), (1, 1), (1, 0), (0, 1)])
    with pytest.raises(ValueError, match="intersect"):
        geometry.make_domain(bowtie)
    flat = geometry.polygon([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(ValueError, match="degenerate"):
        geometry.make_domain(flat)
    with pytest.raises(ValueError, match="planar"):
        geometry.make_domain(geometry.DomainSpec("ball", BallSpec(3)))


def test_curved_loops_lie_on_the_curve() -> None:
    loop = geometry.make_domain(geometry.ellipse(2.0, 1.0, segments=40))
    x, y = loop.vertices[:, 0], loop.vertices[:, 1]
    assert np.allclose((x / 2.0) ** 2 + y**2, 1.0)
    assert set(loop.tags) == {"ellipse"}

    sector = geometry.make_domain(geometry.sector(1.0, segments=20))
    assert len(sector.vertices) == 22
    assert sector.tags[0] == "none"
    assert np.allclose(np.hypot(*sector.vertices[1:].T), 1.0)


@pytest.mark.parametrize(
    "spec",
    [
        geometry.rectangle(1.0, 0.5),
        geometry.disk(1.0, 32),
        geometry.equilateral(2.0),
        geometry.sector(1.2, 24),
        geometry.polygon([(0, 0), (2, 0), (2, 2), (1, 1), (0, 2)]),
    ],
)
def test_refined_meshes_are_valid(spec: geometry.DomainSpec) -> None:
    mesh = geometry.mesh_at_level(spec, 2)
    geometry.validate_mesh(mesh)
    assert mesh.level == 2
    assert np.all(mesh.triangle_areas > 0)
    assert len(mesh.boundary_loop()) == len(mesh.boundary_edges)


def test_refinement_counts() -> None:
    mesh = geometry.triangulate(geometry.make_domain(geometry.equilateral(2.0)))
    assert (mesh.node_count, len(mesh.triangles)) == (3, 1)
    refined = geometry.refine(mesh, 2)
    assert refined.node_count == 15
    assert len(refined.triangles) == 16
    assert len(refined.boundary_edges) == 12
    # Midpoint refinement of a polygon keeps its area and perimeter.
    assert refined.area == pytest.approx(mesh.area)
    assert refined.perimeter == pytest.approx(mesh.perimeter)
    with pytest.raises(ValueError):
        geometry.refine(mesh, 0)


def test_refinement_projects_curved_boundary() -> None:
    spec = geometry.disk(1.0, 32)
    coarse = geometry.mesh_at_level(spec, 0)
    fine = geometry.mesh_at_level(spec, 3)
    radii = np.hypot(*fine.nodes[fine.boundary_nodes].T)
    assert np.allclose(radii, 1.0)
    assert coarse.area < fine.area < math.pi
    assert fine.perimeter < 2 * math.pi


def test_min_angle_is_preserved_by_refinement() -> None:
    mesh = geometry.mesh_at_level(geometry.isosceles_triangle(math.pi / 4), 0)
    refined = geometry.refine(mesh, 2)
    assert refined.min_angle() == pytest.approx(mesh.min_angle())
    assert mesh.min_angle() == pytest.approx(math.pi / 4)


def test_mesh_arrays_are_read_only() -> None:
    mesh = geometry.mesh_at_level(geometry.rectangle(1.0, 1.0), 1)
    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 5.0


def test_validate_mesh_detects_flipped_triangle() -> None:
    mesh = geometry.mesh_at_level(geometry.rectangle(1.0, 1.0), 1)
    triangles = mesh.triangles.copy()
    triangles[0] = triangles[0][::-1]
    broken = geometry.Mesh(
        nodes=mesh.nodes.copy(),
        triangles=triangles,
        boundary_edges=mesh.boundary_edges.copy(),
        curved_tags=mesh.curved_tags,
    )
    with pytest.raises(ValueError, match="non-positive"):
        geometry.validate_mesh(broken)


def test_build_mesh_reaches_target() -> None:
    mesh = geometry.build_mesh(geometry.rectangle(0.5, 0.5), target_nodes=500)
    assert mesh.node_count == 545
    assert mesh.level == 4


def test_build_mesh_respects_cap(caplog: pytest.LogCaptureFixture) -> None:
    mesh = geometry.build_mesh(
        geometry.rectangle(0.5, 0.5), target_nodes=500, max_nodes=200
    )
    assert mesh.node_count == 145
    assert "Stopping refinement" in caplog.text


def test_build_mesh_pair_is_one_level_apart() -> None:
    coarse, fine = geometry.build_mesh_pair(geometry.equilateral(2.0), target_nodes=100)
    assert fine.level == coarse.level + 1
    assert fine.node_count >= 100


def test_refinement_is_deterministic() -> None:
    spec = geometry.ellipse(1.5, 1.0, segments=32)
    first = geometry.mesh_at_level(spec, 3)
    second = geometry.refine(geometry.mesh_at_level(spec, 1), 2)
    assert np.array_equal(first.nodes, second.nodes)
    assert np.array_equal(first.triangles, second.triangles)
    assert np.array_equal(first.boundary_edges, second.boundary_edges)
    assert first.curved_tags == second.curved_tags


def test_write_mesh(tmp_path: Path) -> None:
    mesh = geometry.mesh_at_level(geometry.rectangle(1.0, 1.0), 0)
    path = tmp_path / "square.txt"
    geometry.write_mesh(mesh, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "5 4 4"
    assert len(lines) == 1 + 5 + 4 + 4
    x, y = (float(v) for v in lines[1].split())
    assert (x, y) == (-1.0, -1.0)
