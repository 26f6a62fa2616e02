"""Tests for the Click CLI."""

from __future__ import annotations

import importlib
import json
import math
from pathlib import Path
from typing import Any, Sequence

import pytest
from click.testing import CliRunner

from fluxspec import closed_form as cf
from fluxspec import config
from fluxspec.acceptance import AcceptanceReport, CriterionResult, Status
from fluxspec.config import RunConfig
from fluxspec.errors import BracketError

cli_module = importlib.import_module("fluxspec.cli")
from fluxspec.cli import cli


@pytest.fixture(autouse=True)
def _no_global_config(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(config, "GLOBAL_CONFIG", tmp_path / "missing.json")


def _result(path: Path) -> dict[str, Any]:
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["schema"] == "fluxspec-report/1"
    return dict(document["result"])


def test_init_local_command(monkeypatch: pytest.MonkeyPatch) -> None:
    runner = CliRunner()
    called: dict[str, bool] = {}

    def fake_init_local() -> Path:
        called["init"] = True
        return Path("/tmp/project/fluxspec.json")

    monkeypatch.setattr(cli_module, "init_local_config", fake_init_local)

    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["init"])

    assert result.exit_code == 0
    assert called == {"init": True}
    assert "Local config ready at fluxspec.json" in result.output


def test_init_writes_default_config() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["init"])
        written = json.loads(Path("fluxspec.json").read_text(encoding="utf-8"))

    assert result.exit_code == 0
    assert written["mesh"]["target_nodes"] == RunConfig().mesh.target_nodes


def test_init_global_writes_user_config(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    global_dir = tmp_path / "home" / ".fluxspec"
    monkeypatch.setattr(config, "GLOBAL_DIR", global_dir)
    monkeypatch.setattr(config, "GLOBAL_CONFIG", global_dir / "global-fluxspec.json")
    runner = CliRunner()

    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["init", "--global"])
        assert not Path(config.LOCAL_CONFIG_NAME).exists()

    assert result.exit_code == 0, result.output
    assert "Global config ready at" in result.output
    written = json.loads(config.GLOBAL_CONFIG.read_text(encoding="utf-8"))
    assert written == config.default_config_dict()


def test_ball_writes_report_and_sweep() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["--output-dir", "out", "ball", "--dim", "3"])
        summary = _result(Path("out/ball-n3-R1.json"))
        csv_text = Path("out/sweep-ball-n3-R1.csv").read_text(encoding="utf-8")

    assert result.exit_code == 0, result.output
    assert summary["limit_at_mu2"] == pytest.approx(8 * math.pi, rel=1e-9)
    assert summary["limit_at_zero"] == pytest.approx(12 * math.pi)
    assert summary["inequality_gap"] == pytest.approx(0.0, abs=1e-9)
    profile = cf.ball_flux_profile(cf.BallSpec(3), 0.5 * summary["mu2"])
    boundary_value = summary["boundary_value_at_half_mu2"]
    assert boundary_value == pytest.approx(float(profile(1.0)), rel=1e-9)
    assert csv_text.startswith("# schema: fluxspec-sweep/1")


def test_reports_are_byte_identical_across_runs() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        for out in ("first", "second"):
            result = runner.invoke(cli, ["--output-dir", out, "ball", "--dim", "3"])
            assert result.exit_code == 0, result.output
        for name in ("ball-n3-R1.json", "sweep-ball-n3-R1.csv"):
            first = Path("first", name).read_bytes()
            assert first == Path("second", name).read_bytes()


def test_box_cube_has_zero_gap() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            cli, ["--output-dir", "out", "box", "--half-lengths", "1,1"]
        )
        summary = _result(Path("out/box-1x1.json"))

    assert result.exit_code == 0, result.output
    assert summary["gap"] == pytest.approx(0.0, abs=1e-9)
    assert summary["limit_at_mu2"] == pytest.approx(8.0)


def test_triangle_exceeds_half_ratio() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["--output-dir", "out", "triangle"])
        summary = _result(Path("out/triangle-2.json"))

    assert result.exit_code == 0, result.output
    assert summary["limit_at_mu2"] == pytest.approx(10.7412, abs=1e-3)
    assert summary["excess_over_half_ratio"] > 0


def test_sector_alpha0() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["--output-dir", "out", "sector", "--alpha0"])
        summary = _result(Path("out/sector-alpha0.json"))

    assert result.exit_code == 0, result.output
    assert summary["alpha0"] == pytest.approx(1.1748, abs=1e-3)
    assert summary["trial_threshold"] > summary["alpha0"]


@pytest.mark.parametrize(
    "args",
    [
        ["box", "--half-lengths", "1,abc"],
        ["ball", "--dim", "1"],
        ["--target-nodes", "10", "ball"],
    ],
)
def test_invalid_input_exits_with_usage_code(args: list[str]) -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, args)

    assert result.exit_code == 2
    assert "Error:" in result.output


def test_numerical_failure_exits_with_code_3(monkeypatch: pytest.MonkeyPatch) -> None:
    runner = CliRunner()

    def fake_classify(*_: Any, **__: Any) -> None:
        raise BracketError("no sign change")

    monkeypatch.setattr(cli_module, "classification_report", fake_classify)

    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["classify", "--domain", "square"])

    assert result.exit_code == 3
    assert "Error: no sign change" in result.output
    assert '"error": "BracketError"' in result.output


@pytest.mark.slow
def test_classify_reports_comparison_and_solvability() -> None:
    runner = CliRunner()
    args = ["--target-nodes", "500", "--output-dir", "out", "classify"]
    with runner.isolated_filesystem():
        result = runner.invoke(cli, [*args, "--domain", "isosceles"])
        summary = _result(Path("out/classify-isosceles-0.785398.json"))

    assert result.exit_code == 0, result.output
    assert summary["classification"]["verdict"] == "strict"
    assert summary["comparison"]["disk_comparison"] is True
    assert summary["comparison"]["triangle_comparison"] is True
    assert summary["solvability"]["solvable"] is False
    assert summary["solvability"]["limit"] == "not-solvable"


def test_classify_without_domain_lists_presets() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["classify"])

    assert result.exit_code == 0
    assert "Available domains:" in result.output
    assert "• square" in result.output
    assert "• sector" in result.output


def test_classify_rejects_foreign_parameter() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["classify", "--domain", "disk", "--sides", "5"])

    assert result.exit_code == 2
    assert "takes no parameter 'sides'" in result.output


def test_mesh_export() -> None:
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            cli,
            ["--target-nodes", "500", "mesh", "--domain", "square", "--out", "sq.txt"],
        )
        header = Path("sq.txt").read_text(encoding="utf-8").splitlines()[0]

    assert result.exit_code == 0, result.output
    assert header.split()[0] == "545"
    assert "Wrote 545 nodes" in result.output


def _fake_acceptance(status: Status, seen: dict[str, Any]) -> Any:
    def run(config: RunConfig, only: Sequence[str] | None = None) -> AcceptanceReport:
        seen["config"] = config
        seen["only"] = only
        result = CriterionResult(1, "Disk limit at μ₂", "closed-form", status, (), 0.0)
        return AcceptanceReport([result])

    return run


def test_accept_exit_code_reflects_report(monkeypatch: pytest.MonkeyPatch) -> None:
    runner = CliRunner()
    seen: dict[str, Any] = {}
    monkeypatch.setattr(cli_module, "run_acceptance", _fake_acceptance("FAIL", seen))

    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["accept", "--only", "1,closed-form"])

    assert result.exit_code == 1
    assert "[FAIL]  1 Disk limit" in result.output
    assert seen["only"] == ["1", "closed-form"]

    monkeypatch.setattr(cli_module, "run_acceptance", _fake_acceptance("WARN", seen))
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["accept"])

    assert result.exit_code == 0
    assert seen["only"] is None


def test_accept_max_nodes_forces_coarse_mesh(monkeypatch: pytest.MonkeyPatch) -> None:
    runner = CliRunner()
    seen: dict[str, Any] = {}
    monkeypatch.setattr(cli_module, "run_acceptance", _fake_acceptance("PASS", seen))

    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["accept", "--max-nodes", "200"])
        bad = runner.invoke(cli, ["accept", "--max-nodes", "0"])

    assert result.exit_code == 0
    assert seen["config"].mesh.max_nodes == 200
    assert seen["config"].mesh.target_nodes == 200
    assert bad.exit_code == 2
