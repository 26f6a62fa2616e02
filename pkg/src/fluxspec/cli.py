"""Command-line interface for fluxspec."""

from __future__ import annotations

import functools
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar, cast

import click
import questionary

from . import closed_form as cf
from .acceptance import format_report, run_acceptance
from .catalog import build_domain, observation_families, preset_names
from .config import (
    RunConfig,
    init_global as init_global_config,
    init_local as init_local_config,
    load_config,
)
from .errors import NumericalError
from .geometry import DomainSpec, build_mesh, write_mesh
from .serialization import report_json, sweep_csv, write_text
from .sweeps import (
    ClosedFormModel,
    classification_report,
    config_grid,
    flux_model,
    observation_suite,
    sector_study,
    sweep_f,
)

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

EXIT_ACCEPTANCE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _fail(exc: Exception, exit_code: int) -> None:
    click.secho(f"Error: {exc}", fg="red", err=True)
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": exit_code}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(exit_code)


def handle_errors(func: F) -> F:
    """Map ``ValueError`` to exit 2 and numerical failures to exit 3."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except NumericalError as exc:
            _fail(exc, EXIT_NUMERICAL)
        except ValueError as exc:
            _fail(exc, EXIT_USAGE)
        return None

    return cast(F, wrapper)


def _config(ctx: click.Context) -> RunConfig:
    return cast(RunConfig, ctx.obj["config"])


def _output_path(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _emit(config: RunConfig, name: str, kind: str, payload: Any) -> None:
    text = report_json(kind, payload, config)
    write_text(_output_path(config, name), text)
    click.echo(text, nl=False)


@click.group()
@click.version_option(package_name="fluxspec")  # type: ignore[call-arg]
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False),
    help="Directory for CSV/JSON files.",
)
@click.option(
    "--target-nodes", type=int, help="Refine meshes to at least this many nodes."
)
@click.option("--workers", type=int, help="Parallel workers for sweep points.")
@click.pass_context
def cli(
    ctx: click.Context,
    verbose: bool,
    output_dir: Optional[str],
    target_nodes: Optional[int],
    workers: Optional[int],
) -> None:
    """Constant-flux Helmholtz problems and boundary-mean-zero eigenvalues."""

    _configure_logging(verbose)
    overrides: dict[str, Any] = {}
    if output_dir is not None:
        overrides["output_dir"] = output_dir
    if target_nodes is not None:
        overrides["mesh"] = {"target_nodes": target_nodes}
    if workers is not None:
        overrides["sweep"] = {"workers": workers}

    ctx.ensure_object(dict)
    if ctx.invoked_subcommand == "init":
        return
    try:
        ctx.obj["config"] = load_config(local=True, overrides=overrides)
    except ValueError as exc:
        _fail(exc, EXIT_USAGE)


@cli.command(name="init")
@click.option(
    "--global",
    "global_",
    is_flag=True,
    help="Write the user-wide config instead of ./fluxspec.json.",
)
def init_config(global_: bool) -> None:
    """Create a default `fluxspec.json` in the current directory."""

    if global_:
        path = init_global_config()
        click.secho(f"Global config ready at {path}", fg="green")
        return
    path = init_local_config()
    click.secho(f"Local config ready at {path.name}", fg="green")


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ValueError(f"Expected comma-separated numbers, got '{text}'") from exc


def _closed_form_sweep(config: RunConfig, domain: DomainSpec) -> None:
    model = ClosedFormModel(domain)
    records = sweep_f(model, config_grid(model.mu2, config), config.sweep.workers)
    path = _output_path(config, f"sweep-{domain.domain_id}.csv")
    write_text(path, sweep_csv(records, config))


@cli.command()
@click.option(
    "--dim", "n", type=int, default=2, show_default=True, help="Dimension n >= 2."
)
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.pass_context
@handle_errors
def ball(ctx: click.Context, n: int, radius: float) -> None:
    """Closed-form flux functional on the ball B_R in R^n."""

    config = _config(ctx)
    spec = cf.BallSpec(n=n, R=radius)
    domain = DomainSpec("ball", spec)
    _closed_form_sweep(config, domain)
    mu2 = cf.ball_mu2(spec)
    ratio = spec.isoperimetric_ratio
    limit = cf.ball_limit_at_mu2(spec)
    summary = {
        "domain_id": domain.domain_id,
        "mu2": mu2,
        "limit_at_zero": ratio,
        "limit_at_mu2": limit,
        "limit_at_mu2_extrapolated": cf.ball_limit_extrapolated(spec),
        "boundary_value_at_half_mu2": cf.ball_boundary_value(spec, 0.5 * mu2),
        "isoperimetric_target": (n - 1) / n * ratio,
        "inequality_gap": limit - (n - 1) / n * ratio,
        "m0": cf.ball_breaking_threshold(spec),
    }
    _emit(config, f"{domain.domain_id}.json", "ball", summary)


@cli.command()
@click.option("--half-lengths", required=True, help="Comma-separated half-lengths a_i.")
@click.pass_context
@handle_errors
def box(ctx: click.Context, half_lengths: str) -> None:
    """Closed-form flux functional on the box Π(-a_i, a_i)."""

    config = _config(ctx)
    spec = cf.BoxSpec(_parse_floats(half_lengths))
    domain = DomainSpec("box", spec)
    _closed_form_sweep(config, domain)
    m0, lower = cf.box_breaking_threshold(spec)
    summary = {
        "domain_id": domain.domain_id,
        "half_lengths": spec.half_lengths,
        "mu2": spec.mu2,
        "limit_at_zero": spec.isoperimetric_ratio,
        "limit_at_mu2": cf.box_limit_at_mu2(spec),
        "limit_at_mu2_extrapolated": cf.box_limit_extrapolated(spec),
        "gap": cf.box_inequality_gap(spec),
        "m0": m0,
        "m0_lower_bound": lower,
        "maclaurin_means": cf.sym_poly_bundle(spec).maclaurin_means(),
    }
    _emit(config, f"{domain.domain_id}.json", "box", summary)


@cli.command()
@click.option("--side", type=float, default=2.0, show_default=True)
@click.pass_context
@handle_errors
def triangle(ctx: click.Context, side: float) -> None:
    """Equilateral triangle: μ₂ = κ₁ and the boundary functional at μ₂."""

    config = _config(ctx)
    spec = cf.EquilateralSpec(side)
    ratio = spec.perimeter**2 / spec.area
    limit = cf.triangle_f_at_mu2(spec)
    summary = {
        "side": side,
        "mu2": spec.mu2,
        "kappa1": spec.mu2,
        "limit_at_mu2": limit,
        "half_isoperimetric_ratio": 0.5 * ratio,
        "excess_over_half_ratio": limit - 0.5 * ratio,
        "kappa1_same_perimeter": cf.equilateral_kappa1_same_perimeter(spec.perimeter),
    }
    _emit(config, f"triangle-{side:g}.json", "triangle", summary)


@cli.command()
@click.option(
    "--alpha0", "show_alpha0", is_flag=True, help="Print the crossing aperture α₀ only."
)
@click.option(
    "--alpha", "alphas", type=float, multiple=True, help="Aperture(s) to study."
)
@click.option("--no-fem", is_flag=True, help="Skip the finite element comparison.")
@click.pass_context
@handle_errors
def sector(
    ctx: click.Context, show_alpha0: bool, alphas: tuple[float, ...], no_fem: bool
) -> None:
    """Sector apertures: μ₂ parity, trial bound and κ₁ < μ₂."""

    config = _config(ctx)
    if show_alpha0:
        alpha0 = cf.sector_alpha0()
        intercept, slope = cf.sector_linearization()
        summary = {
            "alpha0": alpha0,
            "trial_threshold": cf.sector_trial_threshold(),
            "linearization": {"intercept": intercept, "slope": slope},
        }
        _emit(config, "sector-alpha0.json", "sector-alpha0", summary)
        return
    study = sector_study(alphas or None, config, fem=not no_fem)
    _emit(config, "sector-study.json", "sector", study)


def domain_options(func: F) -> F:
    """Options shared by commands that act on a catalog domain."""

    options = [
        click.option("--domain", "domain_name", type=click.Choice(preset_names())),
        click.option("--sides", type=int),
        click.option("--aperture", type=float),
        click.option("--side", type=float),
        click.option("--radius", type=float),
        click.option("--angle", type=float),
        click.option("--ratio", type=float),
        click.option("--alpha", type=float),
        click.option("--width", type=float),
        click.option("--height", type=float),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _pick_domain() -> str | None:
    if sys.stdin.isatty() and sys.stdout.isatty():
        try:
            return cast(
                Optional[str],
                questionary.select("Select a domain:", choices=preset_names()).ask(),
            )
        except KeyboardInterrupt:
            return None
    click.echo("Available domains:")
    for name in preset_names():
        click.echo(f"  • {name}")
    return None


def _resolve_domain(
    config: RunConfig, domain_name: str | None, params: dict[str, Any]
) -> DomainSpec | None:
    name = domain_name or _pick_domain()
    if name is None:
        return None
    chosen = {key: value for key, value in params.items() if value is not None}
    return build_domain(name, config.mesh.boundary_segments, **chosen)


@cli.command()
@domain_options
@click.option(
    "--method",
    type=click.Choice(["auto", "closed-form", "fem"]),
    default="auto",
    show_default=True,
)
@click.pass_context
@handle_errors
def classify(
    ctx: click.Context, domain_name: str | None, method: str, **params: Any
) -> None:
    """Decide κ₁ = μ₂ or κ₁ < μ₂ from the sign of the boundary functional.

    The report also carries the equal-area disk and equal-perimeter triangle
    comparisons and, for FEM models, the solvability of the problem at μ₂.
    """

    config = _config(ctx)
    domain = _resolve_domain(config, domain_name, params)
    if domain is None:
        return
    result = classification_report(domain, config, method)  # type: ignore[arg-type]
    _emit(config, f"classify-{domain.domain_id}.json", "classification", result)


@cli.command()
@domain_options
@click.option(
    "--method",
    type=click.Choice(["auto", "closed-form", "fem"]),
    default="auto",
    show_default=True,
)
@click.pass_context
@handle_errors
def sweep(
    ctx: click.Context, domain_name: str | None, method: str, **params: Any
) -> None:
    """Tabulate f(c) on the configured c-grid as CSV."""

    config = _config(ctx)
    domain = _resolve_domain(config, domain_name, params)
    if domain is None:
        return
    model = flux_model(domain, config, method)  # type: ignore[arg-type]
    records = sweep_f(model, config_grid(model.mu2, config), config.sweep.workers)
    text = sweep_csv(records, config)
    write_text(_output_path(config, f"sweep-{domain.domain_id}.csv"), text)
    click.echo(text, nl=False)
    failed = sum(1 for record in records if not record.ok)
    if failed:
        click.secho(f"{failed} sweep point(s) skipped or failed", fg="yellow", err=True)


@cli.command()
@domain_options
@click.option("--out", type=click.Path(dir_okay=False), help="Mesh file to write.")
@click.pass_context
@handle_errors
def mesh(
    ctx: click.Context, domain_name: str | None, out: str | None, **params: Any
) -> None:
    """Export the refined mesh of a domain as a plain-text node/element file."""

    config = _config(ctx)
    domain = _resolve_domain(config, domain_name, params)
    if domain is None:
        return
    result = build_mesh(domain, config.mesh.target_nodes, config.mesh.max_nodes)
    path = Path(out) if out else _output_path(config, f"mesh-{domain.domain_id}.txt")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_mesh(result, path)
    click.secho(f"Wrote {result.node_count} nodes to {path}", fg="green")


@cli.command()
@click.option("--tables", is_flag=True, help="Also print the per-family tables.")
@click.pass_context
@handle_errors
def observe(ctx: click.Context, tables: bool) -> None:
    """Reproduce the numerical observations on the catalog families."""

    config = _config(ctx)
    families = observation_families(config.mesh.boundary_segments)
    report = observation_suite(families, config)
    text = report_json("observations", report, config)
    write_text(_output_path(config, "observations.json"), text)
    for item in report.items:
        click.echo(f"[{item.status}] {item.item} {item.description}: {item.detail}")
    if tables:
        for family, rows in report.tables.items():
            click.echo(f"\n{family}")
            click.echo(
                f"  {'parameter':>10} {'limit f':>14} {'P²/(2|Ω|)':>14} "
                f"{'min u_c':>12} class F"
            )
            for row in rows:
                if isinstance(row.limit, float):
                    limit = f"{row.limit:14.8g}"
                else:
                    limit = f"{row.limit:>14}"
                minimum = ""
                if not math.isnan(row.boundary_min):
                    minimum = f"{row.boundary_min:12.6g}"
                click.echo(
                    f"  {row.parameter:10.6g} {limit} {row.half_ratio:14.8g} "
                    f"{minimum:>12} {row.in_class_F}"
                )


@cli.command()
@click.option("--only", "only", help="Comma-separated criterion numbers or groups.")
@click.option("--max-nodes", type=int, help="Cap mesh size (forces coarse meshes).")
@click.pass_context
@handle_errors
def accept(ctx: click.Context, only: str | None, max_nodes: int | None) -> None:
    """Run the acceptance suite; exit 0 iff every criterion passes."""

    config = _config(ctx)
    if max_nodes is not None:
        if max_nodes < 1:
            raise ValueError(f"--max-nodes must be positive, got {max_nodes}")
        config = config.with_mesh(
            max_nodes=max_nodes, target_nodes=min(config.mesh.target_nodes, max_nodes)
        )
    selectors = [token for token in only.split(",")] if only else None
    report = run_acceptance(config, selectors)
    for line in format_report(report):
        click.echo(line)
    if not report.passed:
        sys.exit(EXIT_ACCEPTANCE)


def _configure_logging(verbose: bool = False) -> None:
    """Initialize root logging once for the CLI session."""

    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(
            level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
        )
    if verbose:
        root.setLevel(logging.DEBUG)
