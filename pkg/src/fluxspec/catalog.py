"""Named domain presets and the one-parameter observation families."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Tuple

from . import geometry
from .geometry import DomainSpec

DomainFamily = List[Tuple[float, DomainSpec]]


@dataclass(frozen=True)
class Preset:
    """A domain constructor exposed under a CLI name."""

    name: str
    summary: str
    defaults: Mapping[str, float]
    factory: Callable[..., DomainSpec]

    def build(self, segments: int = 64, **params: Any) -> DomainSpec:
        values = dict(self.defaults)
        for key, value in params.items():
            if value is None:
                continue
            if key not in values:
                raise ValueError(f"Domain '{self.name}' takes no parameter '{key}'")
            values[key] = value
        return self.factory(segments=segments, **values)


def _disk(segments: int, radius: float) -> DomainSpec:
    return geometry.disk(radius, segments, label=f"disk-R{radius:g}")


def _square(segments: int, side: float) -> DomainSpec:
    return geometry.rectangle(side / 2, side / 2, label=f"square-{side:g}")


def _rectangle(segments: int, width: float, height: float) -> DomainSpec:
    label = f"rectangle-{width:g}x{height:g}"
    return geometry.rectangle(width / 2, height / 2, label=label)


def _regular(segments: int, sides: float) -> DomainSpec:
    if int(sides) != sides:
        raise ValueError(f"Number of sides must be an integer, got {sides!r}")
    return geometry.regular_polygon(int(sides))


def _isosceles(segments: int, aperture: float) -> DomainSpec:
    return geometry.isosceles_triangle(aperture)


def _equilateral(segments: int, side: float) -> DomainSpec:
    return geometry.equilateral(side, label=f"equilateral-{side:g}")


def _rhombus(segments: int, angle: float) -> DomainSpec:
    return geometry.rhombus(angle)


def _ellipse(segments: int, ratio: float) -> DomainSpec:
    if ratio < 1:
        raise ValueError(f"Axis ratio must be at least 1, got {ratio!r}")
    return geometry.ellipse(ratio, 1.0, segments, label=f"ellipse-{ratio:g}")


def _sector(segments: int, alpha: float) -> DomainSpec:
    return geometry.sector(alpha, segments, label=f"sector-{alpha:.6g}")


PRESETS: Dict[str, Preset] = {
    preset.name: preset
    for preset in (
        Preset("disk", "disk of given radius", {"radius": 1.0}, _disk),
        Preset("square", "square of given side", {"side": 1.0}, _square),
        Preset(
            "rectangle",
            "axis-aligned rectangle",
            {"width": 2.0, "height": 1.0},
            _rectangle,
        ),
        Preset(
            "regular-polygon", "regular polygon, circumradius 1", {"sides": 5}, _regular
        ),
        Preset(
            "isosceles",
            "isosceles triangle, unit legs",
            {"aperture": math.pi / 4},
            _isosceles,
        ),
        Preset("equilateral", "equilateral triangle", {"side": 2.0}, _equilateral),
        Preset("rhombus", "rhombus, unit sides", {"angle": 5 * math.pi / 12}, _rhombus),
        Preset("ellipse", "ellipse with minor semi-axis 1", {"ratio": 1.5}, _ellipse),
        Preset("sector", "unit-radius circular sector", {"alpha": 1.0}, _sector),
    )
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def build_domain(name: str, segments: int = 64, **params: Any) -> DomainSpec:
    """Return the preset ``name`` with ``params`` overriding its defaults.

    Raises:
        ValueError: For unknown presets or parameters.
    """

    preset = PRESETS.get(name)
    if preset is None:
        choices = ", ".join(preset_names())
        raise ValueError(f"Unknown domain '{name}'. Choose from: {choices}")
    return preset.build(segments=segments, **params)


def catalog_domains(segments: int = 64) -> List[DomainSpec]:
    """The planar catalog used by the property checks."""

    return [
        build_domain("square", segments),
        build_domain("disk", segments),
        build_domain("equilateral", segments),
        build_domain("regular-polygon", segments, sides=5),
        build_domain("rhombus", segments, angle=5 * math.pi / 12),
        build_domain("isosceles", segments, aperture=math.pi / 4),
        build_domain("ellipse", segments, ratio=1.5),
    ]


def observation_families(segments: int = 64) -> Dict[str, DomainFamily]:
    """Family grids for the numerical observations, keyed by family name."""

    return {
        "regular-polygon": [
            (float(k), geometry.regular_polygon(k)) for k in (4, 5, 6, 8)
        ],
        "super-equilateral": [
            (a, geometry.isosceles_triangle(a))
            for a in (math.pi / 3, 0.45 * math.pi, 0.6 * math.pi)
        ],
        "sub-equilateral": [
            (a, geometry.isosceles_triangle(a)) for a in (math.pi / 5, math.pi / 4)
        ],
        "ellipse": [
            (r, geometry.ellipse(r, 1.0, segments, label=f"ellipse-{r:g}"))
            for r in (1.0, 1.25, 1.5)
        ],
        "rhombus": [
            (a, geometry.rhombus(a))
            for a in (math.pi / 3, 5 * math.pi / 12, math.pi / 2)
        ],
    }
