"""Run configuration for fluxspec.

This module loads, merges, and persists JSON config files from the global
(~/.fluxspec/global-fluxspec.json) and project (./fluxspec.json) locations and
turns the merged mapping into a validated :class:`RunConfig`.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, MutableMapping

logger = logging.getLogger(__name__)

GLOBAL_DIR: Path = Path.home() / ".fluxspec"
GLOBAL_CONFIG: Path = GLOBAL_DIR / "global-fluxspec.json"
LOCAL_CONFIG_NAME = "fluxspec.json"

MIN_TARGET_NODES = 500
MAX_TARGET_NODES = 12000


@dataclass(frozen=True)
class MeshConfig:
    target_nodes: int = 2000
    max_nodes: int = 12000
    boundary_segments: int = 64


@dataclass(frozen=True)
class SolverConfig:
    dense_limit: int = 3000
    guard_band: float = 1e-6


@dataclass(frozen=True)
class SweepConfig:
    grid_size: int = 50
    low_fraction: float = 1e-4
    high_fraction: float = 1e-3
    workers: int = 1


@dataclass(frozen=True)
class Tolerances:
    mesh: float = 0.02
    equality: float = 1e-9
    divergence_ratio: float = 1.8


@dataclass(frozen=True)
class RunConfig:
    """Validated settings shared by every command."""

    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: str = "."
    seed: int = 20240101

    def __post_init__(self) -> None:
        if not MIN_TARGET_NODES <= self.mesh.target_nodes <= MAX_TARGET_NODES:
            raise ValueError(
                "mesh.target_nodes must lie in "
                f"[{MIN_TARGET_NODES}, {MAX_TARGET_NODES}], "
                f"got {self.mesh.target_nodes}"
            )
        if self.mesh.max_nodes < 1:
            raise ValueError(
                f"mesh.max_nodes must be positive, got {self.mesh.max_nodes}"
            )
        if self.mesh.boundary_segments < 16:
            raise ValueError(
                "mesh.boundary_segments must be at least 16, "
                f"got {self.mesh.boundary_segments}"
            )
        if self.solver.dense_limit < 1:
            raise ValueError("solver.dense_limit must be positive")
        if self.sweep.grid_size < 2:
            raise ValueError(
                f"sweep.grid_size must be at least 2, got {self.sweep.grid_size}"
            )
        if not 0 < self.sweep.low_fraction < 1 or not 0 < self.sweep.high_fraction < 1:
            raise ValueError("sweep fractions must lie in (0, 1)")
        if self.sweep.low_fraction >= 1.0 - self.sweep.high_fraction:
            raise ValueError("sweep.low_fraction leaves an empty c-grid")
        if self.sweep.workers < 1:
            raise ValueError(
                f"sweep.workers must be positive, got {self.sweep.workers}"
            )
        positive = {
            "solver.guard_band": self.solver.guard_band,
            "tolerances.mesh": self.tolerances.mesh,
            "tolerances.equality": self.tolerances.equality,
            "tolerances.divergence_ratio": self.tolerances.divergence_ratio,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ValueError(f"{key} must be positive, got {value!r}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def with_mesh(self, **changes: Any) -> RunConfig:
        """Return a copy with mesh settings replaced, bypassing the node-target floor.

        The acceptance runner uses this to force coarse meshes on purpose.
        """

        clone = copy.copy(self)
        object.__setattr__(clone, "mesh", replace(self.mesh, **changes))
        return clone


_SECTIONS: Dict[str, type] = {
    "mesh": MeshConfig,
    "solver": SolverConfig,
    "sweep": SweepConfig,
    "tolerances": Tolerances,
}


def default_config_dict() -> Dict[str, Any]:
    return RunConfig().to_dict()


def ensure_global_dir() -> None:
    """Create the global configuration directory if it does not already exist."""

    GLOBAL_DIR.mkdir(parents=True, exist_ok=True)


def _load_json(path: Path) -> Dict[str, Any]:
    """Load JSON content from ``path``.

    Raises a ``ValueError`` if the payload is invalid or not a dictionary.
    """

    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValueError(f"Invalid JSON in {path}") from exc

    if not isinstance(data, dict):
        raise ValueError(f"Configuration in {path} must be a JSON object")

    return data


def _merge_dicts(base: MutableMapping[str, Any], override: Mapping[str, Any]) -> None:
    """Recursively merge ``override`` into ``base`` keeping nested dicts intact."""

    for key, value in override.items():
        if key in base and isinstance(base[key], dict) and isinstance(value, dict):
            _merge_dicts(base[key], value)
        else:
            base[key] = value


def _coerce(section: str, key: str, value: Any, expected: Any) -> Any:
    kind = type(expected)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{section}.{key} must be an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{section}.{key} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind):
        raise ValueError(f"{section}.{key} must be a {kind.__name__}, got {value!r}")
    return value


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    """Build a :class:`RunConfig` from a nested mapping, rejecting unknown keys."""

    defaults = RunConfig()
    sections: Dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ValueError(f"Configuration key '{name}' must be an object")
        base = getattr(defaults, name)
        current = asdict(base)
        for key, value in raw.items():
            if key not in current:
                raise ValueError(f"Unknown configuration key '{name}.{key}'")
            current[key] = _coerce(name, key, value, current[key])
        sections[name] = cls(**current)

    unknown = set(data) - set(_SECTIONS) - {"output_dir", "seed"}
    if unknown:
        raise ValueError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
    output_dir = _coerce(
        "", "output_dir", data.get("output_dir", defaults.output_dir), ""
    )
    seed = _coerce("", "seed", data.get("seed", defaults.seed), 0)
    return RunConfig(output_dir=output_dir, seed=seed, **sections)


def load_config(
    local: bool = True, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Return the merged configuration.

    Args:
        local: Merge the project ``fluxspec.json`` file on top of the global config.
        overrides: Nested values (typically CLI flags) applied last.

    Raises:
        ValueError: If any JSON file is malformed or a value is invalid.
    """

    merged = default_config_dict()

    if GLOBAL_CONFIG.exists():
        logger.debug("Loading global config from %s", GLOBAL_CONFIG)
        _merge_dicts(merged, _load_json(GLOBAL_CONFIG))

    local_path = Path.cwd() / LOCAL_CONFIG_NAME
    if local and local_path.exists():
        logger.debug("Loading local config from %s", local_path)
        _merge_dicts(merged, _load_json(local_path))

    if overrides:
        _merge_dicts(merged, overrides)

    return config_from_dict(merged)


def save_config(config: Mapping[str, Any], path: Path) -> None:
    """Persist ``config`` to ``path`` using JSON indentation."""

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(config, handle, indent=4)
        handle.write("\n")
    logger.debug("Saved configuration to %s", path)


def init_local() -> Path:
    """Create a default ``fluxspec.json`` without overwriting existing files."""

    local_path = Path.cwd() / LOCAL_CONFIG_NAME
    if local_path.exists():
        logger.warning("Local config already exists at %s", local_path)
        return local_path

    save_config(default_config_dict(), local_path)
    logger.info("Created new local config at %s", local_path)
    return local_path


def init_global() -> Path:
    """Create the user-wide default config, leaving an existing one untouched."""

    ensure_global_dir()
    if GLOBAL_CONFIG.exists():
        logger.warning("Global config already exists at %s", GLOBAL_CONFIG)
        return GLOBAL_CONFIG

    save_config(default_config_dict(), GLOBAL_CONFIG)
    logger.info("Created new global config at %s", GLOBAL_CONFIG)
    return GLOBAL_CONFIG
