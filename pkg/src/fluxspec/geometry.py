"""Planar domains, their triangulation and uniform refinement.

Curved boundaries (circles, ellipses, sector arcs) are approximated by
inscribed polygons whose vertices lie exactly on the curve; refinement projects
new boundary midpoints back onto the curve. Every mesh-derived perimeter and
area is that of the discrete mesh, not of the smooth domain.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .closed_form import BallSpec, BoxSpec, EquilateralSpec, SectorSpec

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]
DomainKind = Literal["ball", "box", "polygon", "ellipse", "sector", "equilateral"]
CurveTag = Literal["none", "circle", "ellipse", "arc"]

MIN_SEGMENTS = 16
AREA_EPS = 1e-12


@dataclass(frozen=True)
class PolygonSpec:
    """Simple polygon given by its vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 3:
            raise ValueError("A polygon needs at least three vertices")


@dataclass(frozen=True)
class EllipseSpec:
    """Ellipse (x/a)² + (y/b)² <= 1 centred at the origin."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ValueError(
                f"Ellipse semi-axes must be positive, got {(self.a, self.b)!r}"
            )


ShapeParams = Union[
    BallSpec, BoxSpec, PolygonSpec, EllipseSpec, SectorSpec, EquilateralSpec
]

_KIND_TYPES: dict[str, type] = {
    "ball": BallSpec,
    "box": BoxSpec,
    "polygon": PolygonSpec,
    "ellipse": EllipseSpec,
    "sector": SectorSpec,
    "equilateral": EquilateralSpec,
}


@dataclass(frozen=True)
class DomainSpec:
    """Declarative description of a domain: a variant tag plus its parameters.

    ``segments`` is the number of boundary segments used for curved pieces
    (circle, ellipse, sector arc).
    """

    kind: DomainKind
    params: ShapeParams
    segments: int = 64
    label: str = ""

    def __post_init__(self) -> None:
        expected = _KIND_TYPES.get(self.kind)
        if expected is None:
            raise ValueError(f"Unknown domain kind {self.kind!r}")
        if not isinstance(self.params, expected):
            raise ValueError(
                f"Domain kind {self.kind!r} needs {expected.__name__} parameters"
            )
        if self.kind in ("ball", "ellipse", "sector") and self.segments < MIN_SEGMENTS:
            raise ValueError(
                f"Curved domains need at least {MIN_SEGMENTS} segments, "
                f"got {self.segments}"
            )

    @property
    def domain_id(self) -> str:
        return self.label or f"{self.kind}-{_describe(self.params)}"

    @property
    def has_closed_form(self) -> bool:
        return self.kind in ("ball", "box")

    @property
    def dimension(self) -> int:
        if isinstance(self.params, (BallSpec, BoxSpec)):
            return self.params.n
        return 2


def _describe(params: ShapeParams) -> str:
    if isinstance(params, BallSpec):
        return f"n{params.n}-R{params.R:g}"
    if isinstance(params, BoxSpec):
        return "x".join(f"{a:g}" for a in params.half_lengths)
    if isinstance(params, EllipseSpec):
        return f"{params.a:g}x{params.b:g}"
    if isinstance(params, SectorSpec):
        return f"alpha{params.alpha:.6g}"
    if isinstance(params, EquilateralSpec):
        return f"side{params.side:g}"
    return f"{len(params.vertices)}gon"


# ---------------------------------------------------------------------------
# Domain constructors for the catalog families


def disk(radius: float = 1.0, segments: int = 64, label: str = "") -> DomainSpec:
    return DomainSpec("ball", BallSpec(n=2, R=radius), segments, label)


def rectangle(half_x: float, half_y: float, label: str = "") -> DomainSpec:
    return DomainSpec("box", BoxSpec((half_x, half_y)), label=label)


def ellipse(a: float, b: float, segments: int = 64, label: str = "") -> DomainSpec:
    return DomainSpec("ellipse", EllipseSpec(a, b), segments, label)


def sector(alpha: float, segments: int = 64, label: str = "") -> DomainSpec:
    return DomainSpec("sector", SectorSpec(alpha), segments, label)


def equilateral(side: float = 2.0, label: str = "") -> DomainSpec:
    return DomainSpec("equilateral", EquilateralSpec(side), label=label)


def polygon(vertices: ArrayLike, label: str = "") -> DomainSpec:
    points = tuple((float(x), float(y)) for x, y in np.asarray(vertices, dtype=float))
    return DomainSpec("polygon", PolygonSpec(points), label=label)


def regular_polygon(
    sides: int, circumradius: float = 1.0, label: str = ""
) -> DomainSpec:
    """Regular polygon with a horizontal bottom side."""

    if sides < 3:
        raise ValueError(f"A regular polygon needs at least 3 sides, got {sides}")
    start = -math.pi / 2 + math.pi / sides
    angles = start + 2.0 * math.pi * np.arange(sides) / sides
    vertices = circumradius * np.column_stack((np.cos(angles), np.sin(angles)))
    return polygon(vertices, label or f"regular-{sides}")


def isosceles_triangle(
    aperture: float, leg: float = 1.0, label: str = ""
) -> DomainSpec:
    """Isosceles triangle whose equal sides ``leg`` meet at angle ``aperture``."""

    if not 0 < aperture < math.pi:
        raise ValueError(f"Aperture must lie in (0, π), got {aperture!r}")
    half_base = leg * math.sin(aperture / 2)
    height = leg * math.cos(aperture / 2)
    vertices = [(-half_base, 0.0), (half_base, 0.0), (0.0, height)]
    return polygon(vertices, label or f"isosceles-{aperture:.6g}")


def rhombus(angle: float, side: float = 1.0, label: str = "") -> DomainSpec:
    """Rhombus with interior angle ``angle`` at the vertices on the x-axis."""

    if not 0 < angle < math.pi:
        raise ValueError(f"Rhombus angle must lie in (0, π), got {angle!r}")
    dx = side * math.cos(angle / 2)
    dy = side * math.sin(angle / 2)
    vertices = [(dx, 0.0), (0.0, dy), (-dx, 0.0), (0.0, -dy)]
    return polygon(vertices, label or f"rhombus-{angle:.6g}")


# ---------------------------------------------------------------------------
# Boundary loops


@dataclass(frozen=True, eq=False)
class BoundaryLoop:
    """Counterclockwise simple loop with a projection tag per vertex."""

    vertices: FloatArray
    tags: tuple[CurveTag, ...]
    curve_axes: tuple[float, float] | None = None

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        diffs = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())


def signed_area(vertices: ArrayLike) -> float:
    """Shoelace area; positive for counterclockwise loops."""

    points = np.asarray(vertices, dtype=float)
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o: FloatArray, a: FloatArray, b: FloatArray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def _segments_intersect(
    p1: FloatArray, p2: FloatArray, q1: FloatArray, q2: FloatArray
) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _check_simple(points: FloatArray) -> None:
    count = len(points)
    for i in range(count):
        p1, p2 = points[i], points[(i + 1) % count]
        for j in range(i + 2, count):
            if i == 0 and j == count - 1:
                continue
            q1, q2 = points[j], points[(j + 1) % count]
            if _segments_intersect(p1, p2, q1, q2):
                raise ValueError(f"Polygon edges {i} and {j} intersect")


def make_domain(spec: DomainSpec) -> BoundaryLoop:
    """Return the counterclockwise boundary loop of ``spec``.

    Raises:
        ValueError: For self-intersecting or degenerate polygons and for
            balls/boxes that are not planar.
    """

    params = spec.params
    if spec.dimension != 2:
        raise ValueError(
            f"Only planar domains can be meshed, got dimension {spec.dimension}"
        )
    axes: tuple[float, float] | None = None
    if isinstance(params, BallSpec):
        t = 2.0 * math.pi * np.arange(spec.segments) / spec.segments
        vertices = params.R * np.column_stack((np.cos(t), np.sin(t)))
        tags: list[CurveTag] = ["circle"] * spec.segments
        axes = (params.R, params.R)
    elif isinstance(params, EllipseSpec):
        t = 2.0 * math.pi * np.arange(spec.segments) / spec.segments
        vertices = np.column_stack((params.a * np.cos(t), params.b * np.sin(t)))
        tags = ["ellipse"] * spec.segments
        axes = (params.a, params.b)
    elif isinstance(params, SectorSpec):
        t = params.alpha * (np.arange(spec.segments + 1) / spec.segments - 0.5)
        arc = np.column_stack((np.cos(t), np.sin(t)))
        vertices = np.vstack(([0.0, 0.0], arc))
        tags = ["none"] + ["arc"] * (spec.segments + 1)
        axes = (1.0, 1.0)
    elif isinstance(params, BoxSpec):
        a1, a2 = params.half_lengths
        vertices = np.array([[-a1, -a2], [a1, -a2], [a1, a2], [-a1, a2]])
        tags = ["none"] * 4
    elif isinstance(params, EquilateralSpec):
        vertices = params.vertices
        tags = ["none"] * 3
    else:
        vertices = np.array(params.vertices, dtype=float)
        if signed_area(vertices) < 0:
            logger.debug("Reversing clockwise polygon %s", spec.domain_id)
            vertices = vertices[::-1].copy()
        _check_simple(vertices)
        tags = ["none"] * len(vertices)

    if signed_area(vertices) <= AREA_EPS:
        raise ValueError(f"Domain {spec.domain_id} is degenerate (zero area)")
    return BoundaryLoop(
        vertices=np.asarray(vertices, dtype=float), tags=tuple(tags), curve_axes=axes
    )


# ---------------------------------------------------------------------------
# Meshes


@dataclass(frozen=True, eq=False)
class Mesh:
    """Planar P1 triangulation.

    Attributes:
        nodes: ``(N, 2)`` coordinates.
        triangles: ``(T, 3)`` counterclockwise node indices.
        boundary_edges: ``(B, 2)`` node pairs, oriented with the domain on the left.
        curved_tags: projection target per node (``"none"`` for interior nodes).
        curve_axes: semi-axes of the origin-centred curve used for projection.
        level: number of uniform refinements applied to the initial triangulation.
    """

    nodes: FloatArray
    triangles: IntArray
    boundary_edges: IntArray
    curved_tags: tuple[CurveTag, ...]
    curve_axes: tuple[float, float] | None = None
    level: int = 0

    def __post_init__(self) -> None:
        for array in (self.nodes, self.triangles, self.boundary_edges):
            array.setflags(write=False)

    @property
    def node_count(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def triangle_areas(self) -> FloatArray:
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    @property
    def area(self) -> float:
        return float(self.triangle_areas.sum())

    @property
    def edge_lengths(self) -> FloatArray:
        start, end = self.boundary_edges[:, 0], self.boundary_edges[:, 1]
        diffs = self.nodes[end] - self.nodes[start]
        return np.hypot(diffs[:, 0], diffs[:, 1])

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def isoperimetric_ratio(self) -> float:
        return self.perimeter**2 / self.area

    @property
    def boundary_nodes(self) -> IntArray:
        return np.unique(self.boundary_edges)

    def min_angle(self) -> float:
        p = self.nodes[self.triangles]
        angles = []
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cosine = np.sum(u * v, axis=1) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
            )
            angles.append(np.arccos(np.clip(cosine, -1.0, 1.0)))
        return float(np.min(angles))

    def boundary_loop(self) -> list[int]:
        """Walk the boundary edges and return the node sequence of the loop."""

        successor = {int(i): int(j) for i, j in self.boundary_edges}
        start = int(self.boundary_edges[0, 0])
        loop = [start]
        node = successor[start]
        while node != start:
            loop.append(node)
            node = successor[node]
            if len(loop) > len(successor):
                raise ValueError("Boundary edges do not form a single closed loop")
        return loop


def validate_mesh(mesh: Mesh, reference_area: float | None = None) -> None:
    """Check orientation, edge-manifoldness and area consistency.

    Raises:
        ValueError: If any mesh invariant is violated.
    """

    areas = mesh.triangle_areas
    if np.any(areas <= 0):
        bad = int(np.argmin(areas))
        raise ValueError(
            f"Triangle {bad} has non-positive signed area {areas[bad]:.3e}"
        )

    directed: dict[tuple[int, int], int] = {}
    for tri in mesh.triangles:
        for k in range(3):
            edge = (int(tri[k]), int(tri[(k + 1) % 3]))
            if edge in directed:
                raise ValueError(f"Directed edge {edge} is shared by two triangles")
            directed[edge] = 1
    boundary = {edge for edge in directed if (edge[1], edge[0]) not in directed}
    declared = {(int(i), int(j)) for i, j in mesh.boundary_edges}
    if boundary != declared:
        raise ValueError(
            "Declared boundary edges do not match the open edges of the mesh"
        )

    loop_area = signed_area(mesh.nodes[mesh.boundary_loop()])
    if abs(mesh.area - loop_area) > 1e-12 * max(1.0, loop_area):
        raise ValueError(
            f"Mesh area {mesh.area!r} differs from loop area {loop_area!r}"
        )
    if reference_area is not None and abs(mesh.area - reference_area) > 1e-12 * max(
        1.0, reference_area
    ):
        raise ValueError("Mesh area does not match the reference area")


def _is_convex(vertices: FloatArray) -> bool:
    count = len(vertices)
    scale = max(1.0, float(np.abs(vertices).max())) ** 2
    for i in range(count):
        turn = _cross(vertices[i - 1], vertices[i], vertices[(i + 1) % count])
        if turn < -1e-14 * scale:
            return False
    return True


def _point_in_triangle(
    p: FloatArray, a: FloatArray, b: FloatArray, c: FloatArray
) -> bool:
    return _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0


def _ear_clip(vertices: FloatArray) -> list[tuple[int, int, int]]:
    remaining = list(range(len(vertices)))
    triangles: list[tuple[int, int, int]] = []
    while len(remaining) > 3:
        for position, index in enumerate(remaining):
            prev = remaining[position - 1]
            nxt = remaining[(position + 1) % len(remaining)]
            a, b, c = vertices[prev], vertices[index], vertices[nxt]
            if _cross(a, b, c) <= 0:
                continue
            if any(
                _point_in_triangle(vertices[other], a, b, c)
                for other in remaining
                if other not in (prev, index, nxt)
            ):
                continue
            triangles.append((prev, index, nxt))
            remaining.pop(position)
            break
        else:
            raise ValueError("Ear clipping failed; the polygon is not simple")
    triangles.append((remaining[0], remaining[1], remaining[2]))
    return triangles


def triangulate(loop: BoundaryLoop) -> Mesh:
    """Triangulate a counterclockwise simple loop.

    Convex loops are fanned from the area centroid, non-convex ones are ear
    clipped, and a three-vertex loop becomes a single triangle.

    Raises:
        ValueError: For degenerate (collinear) loops.
    """

    vertices = loop.vertices
    count = len(vertices)
    area = signed_area(vertices)
    if area <= AREA_EPS:
        raise ValueError("Cannot triangulate a degenerate loop")
    edges = np.column_stack((np.arange(count), (np.arange(count) + 1) % count))

    if count == 3:
        nodes = vertices.copy()
        triangles = np.array([[0, 1, 2]])
        tags = loop.tags
    elif _is_convex(vertices):
        x, y = vertices[:, 0], vertices[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        weight = x * yn - xn * y
        centroid = np.array(
            [np.sum((x + xn) * weight), np.sum((y + yn) * weight)]
        ) / (6.0 * area)
        nodes = np.vstack((vertices, centroid))
        triangles = np.column_stack((edges, np.full(count, count)))
        tags = loop.tags + ("none",)
    else:
        nodes = vertices.copy()
        triangles = np.array(_ear_clip(vertices))
        tags = loop.tags

    mesh = Mesh(
        nodes=np.asarray(nodes, dtype=float),
        triangles=np.asarray(triangles, dtype=np.int64),
        boundary_edges=np.asarray(edges, dtype=np.int64),
        curved_tags=tuple(tags),
        curve_axes=loop.curve_axes,
        level=0,
    )
    logger.debug(
        "Triangulated loop: %d nodes, %d triangles", mesh.node_count, len(triangles)
    )
    return mesh


def _project(point: FloatArray, axes: tuple[float, float]) -> FloatArray:
    a, b = axes
    scale = math.sqrt((point[0] / a) ** 2 + (point[1] / b) ** 2)
    return point / scale


def _refine_once(mesh: Mesh) -> Mesh:
    nodes = [tuple(p) for p in mesh.nodes]
    tags = list(mesh.curved_tags)
    boundary = {(int(i), int(j)) for i, j in mesh.boundary_edges}
    midpoints: dict[tuple[int, int], int] = {}

    def midpoint(i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        if key in midpoints:
            return midpoints[key]
        point = 0.5 * (mesh.nodes[i] + mesh.nodes[j])
        tag: CurveTag = "none"
        on_boundary = (i, j) in boundary or (j, i) in boundary
        if on_boundary and tags[i] == tags[j] and tags[i] != "none":
            assert mesh.curve_axes is not None
            point = _project(point, mesh.curve_axes)
            tag = tags[i]
        nodes.append((float(point[0]), float(point[1])))
        tags.append(tag)
        midpoints[key] = len(nodes) - 1
        return midpoints[key]

    triangles: list[tuple[int, int, int]] = []
    for a, b, c in mesh.triangles.tolist():
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        triangles.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])

    edges: list[tuple[int, int]] = []
    for i, j in mesh.boundary_edges.tolist():
        m = midpoints[(min(i, j), max(i, j))]
        edges.extend([(i, m), (m, j)])

    return Mesh(
        nodes=np.array(nodes, dtype=float),
        triangles=np.array(triangles, dtype=np.int64),
        boundary_edges=np.array(edges, dtype=np.int64),
        curved_tags=tuple(tags),
        curve_axes=mesh.curve_axes,
        level=mesh.level + 1,
    )


def refine(mesh: Mesh, levels: int = 1) -> Mesh:
    """Apply ``levels`` rounds of midpoint 4-subdivision with boundary projection."""

    if levels < 1:
        raise ValueError(f"Refinement needs at least one level, got {levels}")
    for _ in range(levels):
        mesh = _refine_once(mesh)
    return mesh


def mesh_at_level(spec: DomainSpec, level: int) -> Mesh:
    """Return the initial triangulation of ``spec`` refined ``level`` times."""

    mesh = triangulate(make_domain(spec))
    return refine(mesh, level) if level > 0 else mesh


def build_mesh(
    spec: DomainSpec, target_nodes: int = 2000, max_nodes: int = 12000
) -> Mesh:
    """Refine until the mesh has at least ``target_nodes`` nodes.

    Refinement stops early if the next level would exceed ``max_nodes``.
    """

    mesh = triangulate(make_domain(spec))
    while mesh.node_count < target_nodes:
        candidate = _refine_once(mesh)
        if candidate.node_count > max_nodes:
            logger.warning(
                "Stopping refinement of %s at %d nodes (cap %d)",
                spec.domain_id,
                mesh.node_count,
                max_nodes,
            )
            break
        mesh = candidate
    logger.info(
        "Mesh for %s: level %d, %d nodes, %d triangles",
        spec.domain_id,
        mesh.level,
        mesh.node_count,
        len(mesh.triangles),
    )
    return mesh


def build_mesh_pair(
    spec: DomainSpec, target_nodes: int = 2000, max_nodes: int = 12000
) -> tuple[Mesh, Mesh]:
    """Return ``(coarse, fine)`` meshes one refinement level apart."""

    fine = build_mesh(spec, target_nodes, max_nodes)
    if fine.level == 0:
        fine = refine(fine, 1)
    coarse = mesh_at_level(spec, fine.level - 1)
    return coarse, fine


def format_mesh(mesh: Mesh) -> str:
    """Serialize ``mesh`` as plain text.

    The first line holds the node, triangle and boundary-edge counts; then come
    node coordinates, triangle indices and boundary edges, one record per line.
    """

    lines = [f"{mesh.node_count} {len(mesh.triangles)} {len(mesh.boundary_edges)}"]
    lines.extend(f"{x:.17g} {y:.17g}" for x, y in mesh.nodes.tolist())
    lines.extend(f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist())
    lines.extend(f"{i} {j}" for i, j in mesh.boundary_edges.tolist())
    return "\n".join(lines) + "\n"


def write_mesh(mesh: Mesh, path: Path) -> None:
    path.write_text(format_mesh(mesh), encoding="utf-8")
    logger.debug("Wrote mesh with %d nodes to %s", mesh.node_count, path)
