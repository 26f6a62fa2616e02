"""c-sweeps, classification of domains and the numerical observation harness.

Every domain is evaluated through a :class:`FluxModel`: balls and boxes have a
closed-form model, everything else (and balls/boxes on request) a finite
element model built from the run configuration.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Literal, Protocol, Sequence

import numpy as np
from numpy.polynomial import polynomial
from numpy.typing import NDArray
from scipy import optimize

from . import closed_form as cf
from .config import RunConfig
from .errors import InconclusiveError, NearEigenvalueError, NumericalError
from .fem import (
    Spectrum,
    SymmetricOperatorPair,
    assemble,
    eigenfunction_boundary_mean,
    kappa_spectrum,
    neumann_spectrum,
    richardson,
    solve_flux,
)
from .geometry import (
    DomainSpec,
    Mesh,
    build_mesh,
    build_mesh_pair,
    mesh_at_level,
    sector,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Method = Literal["auto", "closed-form", "fem"]
Verdict = Literal["equality", "strict", "inconclusive"]
Ternary = Literal["yes", "no", "inconclusive"]
LimitStatus = Literal["converged", "divergent-negative", "inconclusive"]

LIMIT_EXPONENTS = tuple(range(4, 10))
BISECTION_RTOL = 1e-6
SOLVABILITY_TOL = 1e-3


@dataclass(frozen=True)
class PointValue:
    boundary_integral: float
    boundary_min: float
    residual: float


class FluxModel(Protocol):
    """Evaluates the flux problem of one domain at a given ``c``."""

    domain: DomainSpec

    @property
    def mu2(self) -> float: ...

    @property
    def perimeter(self) -> float: ...

    @property
    def area(self) -> float: ...

    def kappa1(self) -> float: ...

    def evaluate(self, c: float) -> PointValue: ...


@dataclass
class ClosedFormModel:
    """Flux model backed by the explicit ball and box solutions."""

    domain: DomainSpec

    def __post_init__(self) -> None:
        if not self.domain.has_closed_form:
            raise ValueError(f"No closed form for domain kind {self.domain.kind!r}")

    @property
    def mu2(self) -> float:
        params = self.domain.params
        if isinstance(params, cf.BallSpec):
            return cf.ball_mu2(params)
        assert isinstance(params, cf.BoxSpec)
        return params.mu2

    @property
    def perimeter(self) -> float:
        return float(self.domain.params.perimeter)  # type: ignore[union-attr]

    @property
    def area(self) -> float:
        return float(self.domain.params.volume)  # type: ignore[union-attr]

    def kappa1(self) -> float:
        # Balls and boxes satisfy κ₁ = μ₂.
        return self.mu2

    def evaluate(self, c: float) -> PointValue:
        params = self.domain.params
        if isinstance(params, cf.BallSpec):
            f_value = cf.ball_f(params, c)
            boundary_min = cf.ball_boundary_value(params, c)
        else:
            assert isinstance(params, cf.BoxSpec)
            f_value = cf.box_f(params, c)
            boundary_min = cf.box_boundary_min(params, c)
        return PointValue(f_value / c, boundary_min, 0.0)

    def limit_at_mu2(self) -> float:
        params = self.domain.params
        if isinstance(params, cf.BallSpec):
            return cf.ball_limit_at_mu2(params)
        assert isinstance(params, cf.BoxSpec)
        return cf.box_limit_at_mu2(params)


@dataclass
class FemModel:
    """Flux model on a finite element discretization of a planar domain."""

    domain: DomainSpec
    ops: SymmetricOperatorPair
    spectrum: Spectrum
    config: RunConfig
    _kappa: Spectrum | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls, domain: DomainSpec, config: RunConfig, mesh: Mesh | None = None
    ) -> FemModel:
        if mesh is None:
            mesh = build_mesh(domain, config.mesh.target_nodes, config.mesh.max_nodes)
        ops = assemble(mesh)
        spectrum = neumann_spectrum(
            ops, 8, dense_limit=config.solver.dense_limit, seed=config.seed
        )
        logger.info(
            "FEM model for %s: %d nodes, μ₂ = %.10g",
            domain.domain_id,
            ops.size,
            spectrum.values[1],
        )
        return cls(domain=domain, ops=ops, spectrum=spectrum, config=config)

    @property
    def mu2(self) -> float:
        return float(self.spectrum.values[1])

    @property
    def perimeter(self) -> float:
        return self.ops.perimeter

    @property
    def area(self) -> float:
        return self.ops.area

    @property
    def kappa(self) -> Spectrum:
        if self._kappa is None:
            self._kappa = kappa_spectrum(
                self.ops,
                6,
                dense_limit=self.config.solver.dense_limit,
                seed=self.config.seed,
            )
        return self._kappa

    def kappa1(self) -> float:
        return float(self.kappa.values[0])

    def evaluate(self, c: float) -> PointValue:
        sol = solve_flux(self.ops, c, self.spectrum, self.config.solver.guard_band)
        return PointValue(sol.boundary_integral, sol.boundary_min, sol.residual)


def flux_model(
    domain: DomainSpec, config: RunConfig, method: Method = "auto"
) -> FluxModel:
    """Return the closed-form model when available (``auto``) or a FEM model."""

    if method == "closed-form" or (method == "auto" and domain.has_closed_form):
        return ClosedFormModel(domain)
    return FemModel.build(domain, config)


@dataclass(frozen=True)
class SweepRecord:
    """One sample of the boundary functional; ``f_value = c * boundary_integral``."""

    domain_id: str
    c: float
    f_value: float
    boundary_integral: float
    boundary_min: float
    residual: float
    guard_band_hit: bool
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and not self.guard_band_hit


def default_grid(
    mu2: float, size: int = 50, low_fraction: float = 1e-4, high_fraction: float = 1e-3
) -> FloatArray:
    """Geometric grid of ``size`` points on ``[low·μ₂, (1-high)·μ₂]``."""

    if size < 2:
        raise ValueError(f"Grid size must be at least 2, got {size}")
    return np.geomspace(low_fraction * mu2, (1.0 - high_fraction) * mu2, size)


def _sample(model: FluxModel, c: float) -> SweepRecord:
    domain_id = model.domain.domain_id
    nan = math.nan
    try:
        value = model.evaluate(c)
    except NearEigenvalueError as exc:
        logger.warning("Skipping c=%.12g for %s: %s", c, domain_id, exc)
        return SweepRecord(domain_id, c, nan, nan, nan, nan, True, str(exc))
    except NumericalError as exc:
        logger.warning("Solver failure at c=%.12g for %s: %s", c, domain_id, exc)
        return SweepRecord(domain_id, c, nan, nan, nan, nan, False, str(exc))
    f_value = c * value.boundary_integral
    logger.debug("%s: f(%.12g) = %.12g", domain_id, c, f_value)
    return SweepRecord(
        domain_id,
        c,
        f_value,
        value.boundary_integral,
        value.boundary_min,
        value.residual,
        False,
    )


def sweep_f(
    model: FluxModel, grid: Iterable[float] | None = None, workers: int = 1
) -> list[SweepRecord]:
    """Evaluate ``f`` on ``grid`` (ascending), one record per point.

    Solver errors are recorded on the affected point and never abort the sweep.

    Raises:
        ValueError: If a grid point is outside ``(0, μ₂)``.
    """

    mu2 = model.mu2
    points = sorted(float(c) for c in (grid if grid is not None else default_grid(mu2)))
    for c in points:
        if not 0 < c < mu2:
            raise ValueError(f"Sweep point c={c!r} is outside (0, μ₂={mu2:.12g})")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda c: _sample(model, c), points))
    else:
        records = [_sample(model, c) for c in points]
    return sorted(records, key=lambda record: (record.domain_id, record.c))


def config_grid(mu2: float, config: RunConfig) -> FloatArray:
    sweep = config.sweep
    return default_grid(mu2, sweep.grid_size, sweep.low_fraction, sweep.high_fraction)


@dataclass(frozen=True)
class LimitResult:
    """Behaviour of ``f(c)`` as ``c → μ₂⁻``."""

    status: LimitStatus
    value: float | None
    samples: tuple[float, ...] = ()
    ratios: tuple[float, ...] = ()

    @property
    def converged(self) -> bool:
        return self.status == "converged" and self.value is not None

    def as_json_value(self) -> float | str:
        if self.status == "divergent-negative":
            return "divergent-negative"
        if self.value is None:
            return "inconclusive"
        return self.value


def limit_f_at_mu2(
    model: FluxModel,
    exponents: Sequence[int] = LIMIT_EXPONENTS,
    divergence_ratio: float = 1.8,
) -> LimitResult:
    """Estimate ``lim_{c→μ₂⁻} f(c)`` from samples at ``c = μ₂(1 - 2^{-k})``.

    Closed-form models return the exact limit. Otherwise a quadratic in the
    relative distance to μ₂ is fitted; a last ratio of consecutive ``|f|``
    above ``divergence_ratio`` with ``f < 0`` reports ``divergent-negative``.
    Convergence requires the successive differences to shrink.
    """

    if isinstance(model, ClosedFormModel):
        return LimitResult("converged", model.limit_at_mu2())

    mu2 = model.mu2
    deltas = np.array([2.0 ** (-k) for k in exponents])
    values = []
    for delta in deltas:
        c = mu2 * (1.0 - delta)
        values.append(c * model.evaluate(c).boundary_integral)
    samples = np.array(values)
    magnitudes = np.abs(samples)
    ratios = magnitudes[1:] / np.maximum(magnitudes[:-1], 1e-300)
    differences = np.abs(np.diff(samples))
    record = dict(samples=tuple(samples.tolist()), ratios=tuple(ratios.tolist()))

    if ratios[-1] > divergence_ratio and samples[-1] < 0:
        logger.info("%s: f diverges to -∞ at μ₂", model.domain.domain_id)
        return LimitResult("divergent-negative", None, **record)
    shrinking = differences[-1] < 0.75 * differences[-2]
    if shrinking or differences[-1] <= 1e-12 * magnitudes[-1]:
        coefficients = polynomial.polyfit(deltas, samples, 2)
        return LimitResult("converged", float(coefficients[0]), **record)
    logger.warning("%s: limit at μ₂ is inconclusive", model.domain.domain_id)
    return LimitResult("inconclusive", None, **record)


@dataclass(frozen=True)
class DomainClassification:
    domain_id: str
    method: str
    mu2: float
    kappa1: float
    c0: float | None
    verdict: Verdict
    in_class_F: Ternary
    m0: float | None
    limit_f_at_mu2: float | str
    kappa1_spectral: float
    perimeter: float
    area: float
    sign_change: bool
    failed_points: int = 0


def _bisect_c0(model: FluxModel, lo: float, hi: float) -> float:
    def f(c: float) -> float:
        return c * model.evaluate(c).boundary_integral

    return float(optimize.brentq(f, lo, hi, rtol=BISECTION_RTOL, xtol=1e-14))


def classify_domain(
    domain: DomainSpec,
    config: RunConfig | None = None,
    method: Method = "auto",
    model: FluxModel | None = None,
) -> DomainClassification:
    """Decide whether ``κ₁ = μ₂`` from the sign structure of ``f`` below μ₂.

    A sign change locates ``c₀ = κ₁`` by bisection (verdict ``strict``). Without
    one the verdict is ``equality`` when the constrained spectrum confirms
    ``|κ₁ - μ₂| <= tol·μ₂`` and ``inconclusive`` otherwise.
    """

    config = config or RunConfig()
    model = model or flux_model(domain, config, method)
    tol = config.tolerances.mesh
    mu2 = model.mu2
    records = sweep_f(model, config_grid(mu2, config), config.sweep.workers)
    good = [r for r in records if r.ok]
    failed = len(records) - len(good)

    c0: float | None = None
    for previous, current in zip(good, good[1:]):
        if previous.f_value > 0 and current.f_value <= 0:
            c0 = _bisect_c0(model, previous.c, current.c)
            break
    if good and c0 is None and good[0].f_value <= 0:
        raise InconclusiveError(f"f is not positive near c = 0 for {domain.domain_id}")

    kappa1_spectral = model.kappa1()
    if c0 is not None and c0 < mu2 * (1.0 - tol):
        verdict: Verdict = "strict"
        kappa1 = c0
    elif c0 is None and abs(kappa1_spectral - mu2) <= tol * mu2:
        verdict = "equality"
        kappa1 = kappa1_spectral
    else:
        verdict = "inconclusive"
        kappa1 = c0 if c0 is not None else kappa1_spectral
        logger.warning("Verdict for %s is inconclusive", domain.domain_id)

    minimum = min((r.boundary_min for r in good), default=math.nan)
    in_class: Ternary
    if failed or math.isnan(minimum):
        in_class = "inconclusive"
    else:
        in_class = "yes" if minimum > 0 else "no"

    limit = limit_f_at_mu2(model, divergence_ratio=config.tolerances.divergence_ratio)
    m0 = limit.value / mu2 if verdict == "equality" and limit.converged else None

    return DomainClassification(
        domain_id=domain.domain_id,
        method="closed-form" if isinstance(model, ClosedFormModel) else "fem",
        mu2=mu2,
        kappa1=kappa1,
        c0=c0,
        verdict=verdict,
        in_class_F=in_class,
        m0=m0,
        limit_f_at_mu2=limit.as_json_value(),
        kappa1_spectral=kappa1_spectral,
        perimeter=model.perimeter,
        area=model.area,
        sign_change=c0 is not None,
        failed_points=failed,
    )


# ---------------------------------------------------------------------------
# Mesh-converged spectra


def _richardson_all(coarse: FloatArray, fine: FloatArray) -> FloatArray:
    return np.array([richardson(float(a), float(b)) for a, b in zip(coarse, fine)])


@dataclass(frozen=True)
class ExtrapolatedSpectra:
    """Neumann and constrained eigenvalues at two levels and their Richardson values."""

    mu_coarse: FloatArray
    mu_fine: FloatArray
    kappa_coarse: FloatArray
    kappa_fine: FloatArray
    fine_nodes: int

    @property
    def mu(self) -> FloatArray:
        return _richardson_all(self.mu_coarse, self.mu_fine)

    @property
    def kappa(self) -> FloatArray:
        return _richardson_all(self.kappa_coarse, self.kappa_fine)


def extrapolated_spectra(
    domain: DomainSpec, config: RunConfig, k: int = 6
) -> ExtrapolatedSpectra:
    """Compute μ₁..μ_k and κ₁..κ_{k-1} on two consecutive refinement levels."""

    coarse, fine = build_mesh_pair(
        domain, config.mesh.target_nodes, config.mesh.max_nodes
    )
    dense_limit, seed = config.solver.dense_limit, config.seed
    values = []
    for mesh in (coarse, fine):
        ops = assemble(mesh)
        mu = neumann_spectrum(ops, k, dense_limit, seed).values
        kappa = kappa_spectrum(ops, k - 1, dense_limit, seed).values
        values.append((mu, kappa))
    return ExtrapolatedSpectra(
        mu_coarse=values[0][0],
        mu_fine=values[1][0],
        kappa_coarse=values[0][1],
        kappa_fine=values[1][1],
        fine_nodes=fine.node_count,
    )


@dataclass(frozen=True)
class ConvergenceStudy:
    """FEM errors of ``f(c)`` against the closed form on consecutive levels."""

    domain_id: str
    c: float
    exact: float
    nodes: tuple[int, ...]
    errors: tuple[float, ...]

    @property
    def orders(self) -> tuple[float, ...]:
        """``log₂`` of consecutive error ratios; 2 means second-order convergence."""

        return tuple(
            math.log2(coarse / fine) if fine > 0 else math.inf
            for coarse, fine in zip(self.errors, self.errors[1:])
        )


def convergence_order(
    domain: DomainSpec,
    config: RunConfig,
    levels: int = 3,
    c_fraction: float = 0.5,
) -> ConvergenceStudy:
    """Measure the observed order of ``f(c)`` at ``c = c_fraction·μ₂``.

    The finest level is the one :func:`build_mesh` reaches under ``config``;
    the ``levels - 1`` levels below it complete the sequence.

    Raises:
        ValueError: If ``domain`` has no closed form or ``levels < 2``.
    """

    if levels < 2:
        raise ValueError(f"A convergence study needs two levels, got {levels}")
    exact_model = ClosedFormModel(domain)
    c = c_fraction * exact_model.mu2
    exact = c * exact_model.evaluate(c).boundary_integral
    finest = build_mesh(domain, config.mesh.target_nodes, config.mesh.max_nodes)
    start = max(finest.level - levels + 1, 0)
    nodes: list[int] = []
    errors: list[float] = []
    for level in range(start, start + levels):
        ops = assemble(mesh_at_level(domain, level))
        spectrum = neumann_spectrum(ops, 3, config.solver.dense_limit, config.seed)
        value = solve_flux(ops, c, spectrum, config.solver.guard_band).f_value
        nodes.append(ops.size)
        errors.append(abs(value - exact))
        logger.debug(
            "%s level %d: f_h = %.12g, error %.3e",
            domain.domain_id,
            level,
            value,
            errors[-1],
        )
    return ConvergenceStudy(domain.domain_id, c, exact, tuple(nodes), tuple(errors))


# ---------------------------------------------------------------------------
# Solvability and comparison checks


@dataclass(frozen=True)
class Solvability:
    domain_id: str
    mu2: float
    boundary_mean: float
    tolerance: float
    solvable: bool
    limit: float | str
    boundary_sign: int | None


def solvability_at_mu2(
    domain: DomainSpec,
    config: RunConfig | None = None,
    model: FemModel | None = None,
) -> Solvability:
    """Report whether the flux problem is solvable at ``c = μ₂``.

    It is solvable exactly when every μ₂-eigenfunction has zero boundary mean;
    the sign of ``∫u_{μ₂}`` is then the sign of the limit of ``f``.
    """

    config = config or RunConfig()
    model = model or FemModel.build(domain, config)
    mean = abs(eigenfunction_boundary_mean(model.ops, model.spectrum, 1))
    tolerance = SOLVABILITY_TOL * float(np.linalg.norm(model.ops.load))
    solvable = mean <= tolerance
    sign: int | None = None
    limit: float | str = "not-solvable"
    if solvable:
        result = limit_f_at_mu2(
            model, divergence_ratio=config.tolerances.divergence_ratio
        )
        limit = result.as_json_value()
        if result.value is not None:
            sign = int(np.sign(result.value))
    return Solvability(
        domain.domain_id, model.mu2, mean, tolerance, solvable, limit, sign
    )


@dataclass(frozen=True)
class ComparisonReport:
    domain_id: str
    kappa1: float
    mu2: float
    disk_kappa1: float
    disk_comparison: bool
    triangle_kappa1: float | None
    triangle_comparison: bool | None
    sufficient_condition_met: bool
    sufficient_condition_consistent: bool


def _is_triangle(domain: DomainSpec) -> bool:
    if domain.kind == "equilateral":
        return True
    if domain.kind != "polygon":
        return False
    return len(domain.params.vertices) == 3  # type: ignore[union-attr]


def comparison_checks(
    domain: DomainSpec, config: RunConfig | None = None, model: FluxModel | None = None
) -> ComparisonReport:
    """Compare κ₁ with the disk of equal area and, for triangles, with the
    equilateral triangle of equal perimeter; evaluate the sufficient condition
    "∫u_c > 0 for some c in [κ₁, μ₂) implies κ₁ = μ₂".
    """

    config = config or RunConfig()
    model = model or flux_model(domain, config)
    tol = config.tolerances.mesh
    kappa1 = model.kappa1()
    mu2 = model.mu2
    disk = cf.disk_kappa1_same_area(model.area)
    triangle: float | None = None
    triangle_ok: bool | None = None
    if _is_triangle(domain):
        triangle = cf.equilateral_kappa1_same_perimeter(model.perimeter)
        triangle_ok = kappa1 <= triangle * (1.0 + tol)

    met = False
    upper = mu2 * (1.0 - config.sweep.high_fraction)
    if kappa1 < upper:
        for c in np.linspace(kappa1, upper, 8)[1:]:
            record = _sample(model, float(c))
            if record.ok and record.boundary_integral > 0:
                met = True
                break
    consistent = (not met) or abs(kappa1 - mu2) <= tol * mu2
    return ComparisonReport(
        domain_id=domain.domain_id,
        kappa1=kappa1,
        mu2=mu2,
        disk_kappa1=disk,
        disk_comparison=kappa1 <= disk * (1.0 + tol),
        triangle_kappa1=triangle,
        triangle_comparison=triangle_ok,
        sufficient_condition_met=met,
        sufficient_condition_consistent=consistent,
    )


@dataclass(frozen=True)
class ClassificationReport:
    classification: DomainClassification
    comparison: ComparisonReport
    solvability: Solvability | None


def classification_report(
    domain: DomainSpec, config: RunConfig | None = None, method: Method = "auto"
) -> ClassificationReport:
    """Classify ``domain`` and run the comparison and solvability checks.

    All three share one model. Solvability needs the discrete eigenvectors, so
    it is ``None`` for closed-form models.
    """

    config = config or RunConfig()
    model = flux_model(domain, config, method)
    classification = classify_domain(domain, config, model=model)
    comparison = comparison_checks(domain, config, model)
    solvability = None
    if isinstance(model, FemModel):
        solvability = solvability_at_mu2(domain, config, model)
    return ClassificationReport(classification, comparison, solvability)


# ---------------------------------------------------------------------------
# Observation harness


ObservationStatus = Literal["PASS", "WARN"]


@dataclass(frozen=True)
class FamilyRow:
    family: str
    parameter: float
    domain_id: str
    limit: float | str
    half_ratio: float
    boundary_min: float
    in_class_F: Ternary
    error: str | None = None
    area: float = math.nan

    @property
    def limit_value(self) -> float | None:
        return self.limit if isinstance(self.limit, float) else None

    @property
    def scaled_boundary_min(self) -> float:
        """``min u_c / √|Ω|``, invariant under dilation of the domain."""

        return self.boundary_min / math.sqrt(self.area)


@dataclass(frozen=True)
class ObservationItem:
    item: int
    description: str
    status: ObservationStatus
    detail: str


@dataclass
class ObservationReport:
    tables: dict[str, list[FamilyRow]] = field(default_factory=dict)
    items: list[ObservationItem] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(item.status == "PASS" for item in self.items)


def _family_row(
    family: str, parameter: float, domain: DomainSpec, config: RunConfig
) -> FamilyRow:
    try:
        model = FemModel.build(domain, config)
        limit = limit_f_at_mu2(
            model, divergence_ratio=config.tolerances.divergence_ratio
        )
        records = sweep_f(model, config_grid(model.mu2, config), config.sweep.workers)
        good = [r for r in records if r.ok]
        minimum = min(r.boundary_min for r in good)
        in_class: Ternary = "yes" if minimum > 0 else "no"
        if len(good) < len(records):
            in_class = "inconclusive"
        return FamilyRow(
            family=family,
            parameter=parameter,
            domain_id=domain.domain_id,
            limit=limit.as_json_value(),
            half_ratio=0.5 * model.ops.isoperimetric_ratio,
            boundary_min=minimum,
            in_class_F=in_class,
            area=model.area,
        )
    except (NumericalError, ValueError) as exc:
        logger.warning("Observation for %s failed: %s", domain.domain_id, exc)
        return FamilyRow(
            family,
            parameter,
            domain.domain_id,
            "inconclusive",
            math.nan,
            math.nan,
            "inconclusive",
            str(exc),
        )


def _status(ok: bool) -> ObservationStatus:
    return "PASS" if ok else "WARN"


def _is_square(row: FamilyRow) -> bool:
    return row.family == "rhombus" and math.isclose(row.parameter, math.pi / 2)


def _argmin_parameter(rows: list[FamilyRow]) -> float | None:
    valued = [
        (row.limit_value, row.parameter) for row in rows if row.limit_value is not None
    ]
    if len(valued) < len(rows):
        return None
    return min(valued)[1]


def observation_suite(
    families: dict[str, list[tuple[float, DomainSpec]]],
    config: RunConfig | None = None,
) -> ObservationReport:
    """Tabulate the numerical observations on catalog families.

    ``families`` maps a family name (``regular-polygon``, ``super-equilateral``,
    ``sub-equilateral``, ``ellipse``, ``rhombus``) to ``(parameter, domain)``
    pairs. Every observation becomes a PASS/WARN line; nothing here is fatal.
    """

    config = config or RunConfig()
    tol = config.tolerances.mesh
    report = ObservationReport()
    for name, members in families.items():
        report.tables[name] = [
            _family_row(name, parameter, domain, config)
            for parameter, domain in members
        ]
    tables = report.tables

    def rows(name: str) -> list[FamilyRow]:
        return tables.get(name, [])

    def add(item: int, description: str, ok: bool, detail: str) -> None:
        report.items.append(ObservationItem(item, description, _status(ok), detail))

    def at_least_half_ratio(members: list[FamilyRow]) -> list[bool]:
        return [
            r.limit_value is not None and r.limit_value >= r.half_ratio * (1.0 - tol)
            for r in members
        ]

    polygons = rows("regular-polygon")
    if polygons:
        errors = [
            abs(r.limit_value - r.half_ratio) / r.half_ratio
            for r in polygons
            if r.limit_value is not None
        ]
        ok = len(errors) == len(polygons) and max(errors) <= tol
        add(
            1,
            "regular polygons: limit f = P²/(2|Ω|)",
            ok,
            f"max relative gap {max(errors, default=math.nan):.3e}",
        )

    supers = rows("super-equilateral")
    if supers:
        above = [
            r.limit_value is not None and r.limit_value > r.half_ratio for r in supers
        ]
        lowest = _argmin_parameter(supers)
        ok = all(above) and lowest == min(r.parameter for r in supers)
        add(
            2,
            "super-equilateral triangles: limit f > P²/(2|Ω|), least at π/3",
            ok,
            f"minimizing aperture {lowest}",
        )

    subs = rows("sub-equilateral")
    if subs:
        ok = all(r.limit == "divergent-negative" for r in subs)
        add(
            3,
            "sub-equilateral triangles: ∫u_c < 0 near μ₂",
            ok,
            ", ".join(f"{r.parameter:.4g}: {r.limit}" for r in subs),
        )

    ellipses = rows("ellipse")
    if ellipses:
        lowest = _argmin_parameter(ellipses)
        ok = all(at_least_half_ratio(ellipses)) and lowest == min(
            r.parameter for r in ellipses
        )
        add(
            4,
            "ellipses: limit f >= P²/(2|Ω|), least at the disk",
            ok,
            f"minimizing axis ratio {lowest}",
        )

    rhombi = rows("rhombus")
    if rhombi:
        lowest = _argmin_parameter(rhombi)
        square = min(rhombi, key=lambda r: abs(r.parameter - math.pi / 2)).parameter
        ok = all(at_least_half_ratio(rhombi)) and lowest == square
        add(
            5,
            "rhombi: limit f >= P²/(2|Ω|), least at the square",
            ok,
            f"minimizing angle {lowest}",
        )

    # The right-angled rhombus is the square, a regular polygon.
    regular = polygons + [r for r in rhombi if _is_square(r)]
    negatives = subs + supers + [r for r in rhombi if not _is_square(r)]
    if negatives or regular:
        ok = all(r.boundary_min < 0 for r in negatives) and all(
            r.in_class_F == "yes" for r in regular
        )
        add(
            6,
            "triangles and rhombi leave class F; regular polygons stay in it",
            ok,
            ", ".join(f"{r.domain_id}: {r.in_class_F}" for r in negatives + regular),
        )

    if ellipses:
        scaled = [(r.scaled_boundary_min, r.parameter) for r in ellipses]
        finite = all(math.isfinite(value) for value, _ in scaled)
        lowest = min(scaled)[1] if finite else None
        disk = min(r.parameter for r in ellipses)
        ok = (
            all(r.in_class_F == "yes" for r in ellipses)
            and lowest == disk
            and min(scaled)[0] > 0
        )
        add(
            7,
            "ellipses belong to class F; inf min u_c at fixed area least at the disk",
            ok,
            ", ".join(f"{p:.4g}: {value:.4g}" for value, p in scaled),
        )
    return report


# ---------------------------------------------------------------------------
# Sectors


@dataclass(frozen=True)
class SectorRow:
    alpha: float
    mu2: float
    parity: str
    double: bool
    trial_bound: float
    strict_by_bound: bool
    kappa1_fem: float | None
    mu2_fem: float | None
    strict_by_fem: bool | None
    nodes: int | None = None
    error: str | None = None


@dataclass(frozen=True)
class SectorStudy:
    alpha0: float
    trial_threshold: float
    rows: tuple[SectorRow, ...]

    @property
    def counterexample(self) -> bool:
        """True when some aperture has odd-only μ₂ modes and a certified κ₁ < μ₂."""

        return any(
            row.alpha > self.alpha0 and row.parity == "odd" and row.strict_by_bound
            for row in self.rows
        )


def default_sector_alphas() -> tuple[float, ...]:
    alpha0 = cf.sector_alpha0()
    threshold = cf.sector_trial_threshold()
    return (1.0, alpha0, 0.5 * (alpha0 + threshold), 1.25)


def sector_study(
    alphas: Sequence[float] | None = None,
    config: RunConfig | None = None,
    fem: bool = True,
    strict_margin: float = 1e-3,
) -> SectorStudy:
    """Compare κ₁ and μ₂ on sectors by the radial trial bound and by FEM.

    FEM strictness means ``κ₁ < μ₂ (1 - strict_margin)`` on the same mesh.
    """

    config = config or RunConfig()
    alphas = tuple(alphas) if alphas is not None else default_sector_alphas()
    rows = []
    for alpha in alphas:
        spec = cf.SectorSpec(alpha)
        mu2, parity = cf.sector_mu2(spec, config.tolerances.equality)
        bound = cf.sector_trial_bound(spec)
        kappa1_fem = mu2_fem = None
        nodes: int | None = None
        strict_fem: bool | None = None
        error = None
        if fem:
            try:
                domain = sector(alpha, config.mesh.boundary_segments)
                model = FemModel.build(domain, config)
                kappa1_fem, mu2_fem = model.kappa1(), model.mu2
                nodes = model.ops.size
                strict_fem = kappa1_fem < mu2_fem * (1.0 - strict_margin)
            except NumericalError as exc:
                error = str(exc)
                logger.warning("Sector FEM at α=%.6g failed: %s", alpha, exc)
        rows.append(
            SectorRow(
                alpha=alpha,
                mu2=mu2,
                parity=parity,
                double=parity == "double",
                trial_bound=bound,
                strict_by_bound=bound < mu2,
                kappa1_fem=kappa1_fem,
                mu2_fem=mu2_fem,
                strict_by_fem=strict_fem,
                nodes=nodes,
                error=error,
            )
        )
    return SectorStudy(cf.sector_alpha0(), cf.sector_trial_threshold(), tuple(rows))


def monotone_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def positive_decreasing(records: Sequence[SweepRecord]) -> bool:
    """True when every record is valid, positive and strictly below its predecessor."""

    if not records or not all(r.ok for r in records):
        return False
    values = [r.f_value for r in records]
    return all(v > 0 for v in values) and monotone_decreasing(values)
