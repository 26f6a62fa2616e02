"""Tests for fluxspec.config."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from fluxspec import config


def _override_paths(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    project_dir = tmp_path / "project"
    project_dir.mkdir()
    global_dir = tmp_path / ".fluxspec"
    monkeypatch.setattr(config, "GLOBAL_DIR", global_dir, raising=False)
    monkeypatch.setattr(
        config, "GLOBAL_CONFIG", global_dir / "global-fluxspec.json", raising=False
    )
    monkeypatch.chdir(project_dir)
    return project_dir


def test_load_config_returns_defaults_when_missing(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    _override_paths(tmp_path, monkeypatch)
    result = config.load_config(local=True)
    assert result == config.RunConfig()
    assert result.mesh.target_nodes == 2000
    assert result.sweep.grid_size == 50
    assert result.solver.guard_band == 1e-6


def test_load_config_merges_local_over_global(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    project_dir = _override_paths(tmp_path, monkeypatch)

    config.ensure_global_dir()
    config.GLOBAL_CONFIG.write_text(
        json.dumps({"mesh": {"target_nodes": 800, "boundary_segments": 48}, "seed": 7})
    )
    (project_dir / config.LOCAL_CONFIG_NAME).write_text(
        json.dumps({"mesh": {"target_nodes": 1200}, "sweep": {"workers": 2}})
    )

    result = config.load_config(local=True)
    assert result.mesh.target_nodes == 1200
    assert result.mesh.boundary_segments == 48
    assert result.sweep.workers == 2
    assert result.seed == 7


def test_load_config_ignores_local_when_disabled(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    project_dir = _override_paths(tmp_path, monkeypatch)
    (project_dir / config.LOCAL_CONFIG_NAME).write_text(
        json.dumps({"mesh": {"target_nodes": 1200}})
    )

    result = config.load_config(local=False)
    assert result.mesh.target_nodes == 2000


def test_overrides_apply_last(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    project_dir = _override_paths(tmp_path, monkeypatch)
    (project_dir / config.LOCAL_CONFIG_NAME).write_text(
        json.dumps({"sweep": {"workers": 2}})
    )

    result = config.load_config(
        overrides={"sweep": {"workers": 4}, "output_dir": "out"}
    )
    assert result.sweep.workers == 4
    assert result.output_dir == "out"


def test_load_config_raises_on_invalid_json(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    _override_paths(tmp_path, monkeypatch)

    config.ensure_global_dir()
    config.GLOBAL_CONFIG.write_text("{invalid}")

    with pytest.raises(ValueError):
        config.load_config(local=False)


def test_load_config_rejects_non_object(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    _override_paths(tmp_path, monkeypatch)
    config.ensure_global_dir()
    config.GLOBAL_CONFIG.write_text("[1, 2]")

    with pytest.raises(ValueError, match="JSON object"):
        config.load_config(local=False)


@pytest.mark.parametrize(
    "payload, message",
    [
        ({"mesh": {"refinement": 3}}, "Unknown configuration key 'mesh.refinement'"),
        ({"plot": {}}, "Unknown configuration keys: plot"),
        ({"mesh": {"target_nodes": "many"}}, "must be an integer"),
        ({"sweep": {"workers": True}}, "must be an integer"),
        ({"mesh": {"target_nodes": 100}}, "mesh.target_nodes must lie in"),
        ({"mesh": {"boundary_segments": 8}}, "at least 16"),
        ({"sweep": {"low_fraction": 0.6, "high_fraction": 0.5}}, "empty c-grid"),
        ({"tolerances": {"mesh": 0}}, "tolerances.mesh must be positive"),
    ],
)
def test_config_from_dict_rejects_invalid_values(
    payload: dict[str, object], message: str
) -> None:
    with pytest.raises(ValueError, match=message):
        config.config_from_dict(payload)


def test_config_from_dict_accepts_integer_for_float() -> None:
    result = config.config_from_dict({"tolerances": {"divergence_ratio": 2}})
    assert result.tolerances.divergence_ratio == 2.0
    assert isinstance(result.tolerances.divergence_ratio, float)


def test_with_mesh_bypasses_node_floor() -> None:
    base = config.RunConfig()
    coarse = base.with_mesh(target_nodes=50, max_nodes=60)

    assert coarse.mesh.target_nodes == 50
    assert coarse.mesh.max_nodes == 60
    assert coarse.sweep == base.sweep
    assert base.mesh.target_nodes == 2000


def test_init_local_writes_defaults(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    project_dir = _override_paths(tmp_path, monkeypatch)

    path = config.init_local()

    assert path == project_dir / config.LOCAL_CONFIG_NAME
    data = json.loads(path.read_text())
    assert data == config.default_config_dict()
    assert config.config_from_dict(data) == config.RunConfig()


def test_init_local_skips_existing_file(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture
) -> None:
    project_dir = _override_paths(tmp_path, monkeypatch)
    config.save_config({"seed": 3}, project_dir / config.LOCAL_CONFIG_NAME)

    config.init_local()

    assert "Local config already exists" in caplog.text
    written = (project_dir / config.LOCAL_CONFIG_NAME).read_text()
    assert json.loads(written) == {"seed": 3}


def test_init_global_creates_directory_once(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture
) -> None:
    _override_paths(tmp_path, monkeypatch)

    path = config.init_global()

    assert path == tmp_path / ".fluxspec" / "global-fluxspec.json"
    assert json.loads(path.read_text()) == config.default_config_dict()

    config.save_config({"seed": 5}, path)
    assert config.init_global() == path
    assert "Global config already exists" in caplog.text
    assert config.load_config(local=False).seed == 5
