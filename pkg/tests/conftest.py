"""Shared meshes and configurations for the fluxspec tests."""

from __future__ import annotations

import math

import pytest

from fluxspec import geometry
from fluxspec.config import MeshConfig, RunConfig, SweepConfig
from fluxspec.fem import SymmetricOperatorPair, assemble


@pytest.fixture(scope="session")
def coarse_config() -> RunConfig:
    return RunConfig(
        mesh=MeshConfig(target_nodes=500, max_nodes=2000, boundary_segments=32),
        sweep=SweepConfig(grid_size=12),
    )


@pytest.fixture(scope="session")
def square_ops() -> SymmetricOperatorPair:
    # Unit square, 145 nodes.
    return assemble(geometry.mesh_at_level(geometry.rectangle(0.5, 0.5), 3))


@pytest.fixture(scope="session")
def disk_ops() -> SymmetricOperatorPair:
    return assemble(geometry.mesh_at_level(geometry.disk(1.0, 32), 2))


@pytest.fixture(scope="session")
def triangle_ops() -> SymmetricOperatorPair:
    return assemble(
        geometry.mesh_at_level(geometry.isosceles_triangle(math.pi / 4), 4)
    )
