"""Closed-form solutions of the flux problem and the quantities derived from them.

The flux problem is ``-Δu = c u`` in Ω with ``∂u/∂ν = -1`` on ∂Ω; its boundary
functional is ``f(c, Ω) = c ∫∂Ω u_c dσ``. Explicit solutions exist on balls,
rectangular boxes and (at ``c = μ₂``) on equilateral triangles; sectors only
get their separated-variable eigenvalues and boundary integrals here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal

import numpy as np
from numpy.polynomial import legendre, polynomial
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, optimize, special

from .errors import BracketError
from .special_functions import (
    bessel_j,
    bessel_j_values,
    bracketed_root,
    first_root_j,
    first_root_j_prime,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Parity = Literal["even", "odd", "double"]
ModeKind = Literal["symmetric", "antisymmetric"]

SINGULAR_BAND = 1e-8
EQUALITY_TOL = 1e-9
GAUSS_POINTS = 64
EXTRAPOLATION_EXPONENTS = tuple(range(6, 13))


def unit_ball_volume(n: int) -> float:
    """Return ω_n, the volume of the unit ball in R^n."""

    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def extrapolate_to_mu2(
    func: Callable[[float], float],
    mu2: float,
    exponents: Iterable[int] = EXTRAPOLATION_EXPONENTS,
    degree: int = 3,
) -> float:
    """Estimate ``lim_{c→μ₂⁻} func(c)`` from samples at ``c = μ₂(1 - 2^{-k})``.

    A polynomial of ``degree`` in ``(μ₂ - c)/μ₂`` is fitted by least squares and
    its intercept is returned.
    """

    deltas = np.array([2.0 ** (-k) for k in exponents])
    values = np.array([func(mu2 * (1.0 - delta)) for delta in deltas])
    coefficients = polynomial.polyfit(deltas, values, degree)
    return float(coefficients[0])


# ---------------------------------------------------------------------------
# Balls


@dataclass(frozen=True)
class BallSpec:
    """Ball B_R in R^n."""

    n: int
    R: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"Ball dimension must be an integer >= 2, got {self.n!r}")
        if not math.isfinite(self.R) or self.R <= 0:
            raise ValueError(f"Ball radius must be positive, got {self.R!r}")

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.R**self.n

    @property
    def perimeter(self) -> float:
        return self.n * unit_ball_volume(self.n) * self.R ** (self.n - 1)

    @property
    def isoperimetric_ratio(self) -> float:
        return self.perimeter**2 / self.volume


def ball_mu2(ball: BallSpec) -> float:
    """Return μ₂(B_R) = (p/R)² where p is the first root of
    ``z J'_{n/2}(z) - (n-2)/2 J_{n/2}(z)``.

    Raises:
        BracketError: If the root cannot be bracketed.
    """

    s = ball.n / 2.0
    if ball.n == 2:
        p = first_root_j_prime(1.0)
    else:
        # Equivalent form z J_{s-1}(z) - (n-1) J_s(z), positive near the origin.
        def condition(z: float) -> float:
            return z * bessel_j(s - 1.0, z) - (ball.n - 1) * bessel_j(s, z)

        p = bracketed_root(condition, 0.5, 4.0 * s + 20.0)
    return (p / ball.R) ** 2


def _check_c_below(c: float, mu2: float, label: str) -> float:
    c = float(c)
    if not math.isfinite(c) or c <= 0 or c >= mu2:
        raise ValueError(f"c must lie in (0, μ₂={mu2:.12g}) for {label}, got {c!r}")
    if mu2 - c <= SINGULAR_BAND * max(1.0, mu2):
        raise ValueError(
            f"c={c!r} is numerically singular (within {SINGULAR_BAND:g} of μ₂)"
        )
    return c


@dataclass(frozen=True)
class BallProfile:
    """Radial solution ``r ↦ u_c(r) = a_c r^{1-n/2} J_{n/2-1}(√c r)`` on B_R."""

    ball: BallSpec
    c: float
    amplitude: float

    def __call__(self, r: ArrayLike) -> FloatArray:
        nu = self.ball.n / 2.0 - 1.0
        k = math.sqrt(self.c)
        radii = np.abs(np.asarray(r, dtype=float))
        safe = np.where(radii > 0, radii, 1.0)
        values = bessel_j_values(nu, k * safe) * safe ** (-nu)
        origin = (k / 2.0) ** nu / math.gamma(nu + 1.0)
        return np.asarray(self.amplitude * np.where(radii > 0, values, origin))


def ball_flux_profile(ball: BallSpec, c: float) -> BallProfile:
    """Return the radial flux solution for ``0 < c < μ₂(B_R)``.

    The amplitude follows from ``u'(R) = -1`` and
    ``(r^{-ν} J_ν(kr))' = -k r^{-ν} J_{ν+1}(kr)``.

    Raises:
        ValueError: If ``c`` is outside (0, μ₂) or numerically singular.
    """

    c = _check_c_below(c, ball_mu2(ball), "ball_flux_profile")
    s = ball.n / 2.0
    k = math.sqrt(c)
    amplitude = ball.R ** (s - 1.0) / (k * bessel_j(s, k * ball.R))
    return BallProfile(ball=ball, c=c, amplitude=amplitude)


def _ball_f_unchecked(ball: BallSpec, c: float) -> float:
    s = ball.n / 2.0
    z = math.sqrt(c) * ball.R
    prefactor = ball.n * unit_ball_volume(ball.n) * ball.R ** (ball.n - 2)
    return prefactor * z * bessel_j(s - 1.0, z) / bessel_j(s, z)


def ball_f(ball: BallSpec, c: float) -> float:
    """Return ``f(c, B_R) = n ω_n R^{n-2} z J_{s-1}(z) / J_s(z)`` with ``z = √c R``.

    Raises:
        ValueError: If ``c`` is outside (0, μ₂) or numerically singular.
    """

    c = _check_c_below(c, ball_mu2(ball), "ball_f")
    return _ball_f_unchecked(ball, c)


def ball_boundary_value(ball: BallSpec, c: float) -> float:
    """Return the (constant) boundary value of the radial flux solution."""

    return ball_f(ball, c) / (c * ball.perimeter)


def ball_limit_at_mu2(ball: BallSpec) -> float:
    """Return ``lim_{c→μ₂} f(c, B_R)`` evaluated from the closed form at μ₂."""

    return _ball_f_unchecked(ball, ball_mu2(ball))


def ball_limit_extrapolated(ball: BallSpec) -> float:
    """Return the limit at μ₂ extrapolated from admissible values of ``ball_f``."""

    return extrapolate_to_mu2(lambda c: ball_f(ball, c), ball_mu2(ball))


def ball_breaking_threshold(ball: BallSpec) -> float:
    """Return m₀ = (n-1) P² / (n μ₂ |Ω|) for a ball."""

    return ball_limit_at_mu2(ball) / ball_mu2(ball)


# ---------------------------------------------------------------------------
# Rectangular boxes


@dataclass(frozen=True)
class BoxSpec:
    """Box Π(-a_i, a_i); half-lengths are stored in descending order."""

    half_lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(a) for a in self.half_lengths)
        if len(values) < 2:
            raise ValueError("A box needs at least two half-lengths")
        if any(not math.isfinite(a) or a <= 0 for a in values):
            raise ValueError(f"Box half-lengths must be positive, got {values!r}")
        object.__setattr__(self, "half_lengths", tuple(sorted(values, reverse=True)))

    @property
    def n(self) -> int:
        return len(self.half_lengths)

    @property
    def a(self) -> FloatArray:
        return np.array(self.half_lengths)

    @property
    def volume(self) -> float:
        return 2.0**self.n * float(np.prod(self.a))

    @property
    def perimeter(self) -> float:
        return 2.0**self.n * sym_poly_bundle(self).sigma[self.n - 1]

    @property
    def isoperimetric_ratio(self) -> float:
        return self.perimeter**2 / self.volume

    @property
    def mu2(self) -> float:
        return (math.pi / (2.0 * self.half_lengths[0])) ** 2


@dataclass(frozen=True)
class SymPolyBundle:
    """Elementary symmetric polynomials σ_k of all half-lengths, d_k of a_2..a_n,
    and e_k = d_k / a_1^k."""

    sigma: tuple[float, ...]
    d: tuple[float, ...]
    e: tuple[float, ...]

    def maclaurin_means(self) -> tuple[float, ...]:
        """Return ``(σ_k / C(n, k))^{1/k}`` for k = 1..n (nonincreasing)."""

        n = len(self.sigma) - 1
        return tuple(
            (self.sigma[k] / math.comb(n, k)) ** (1.0 / k) for k in range(1, n + 1)
        )


def _elementary_symmetric(values: Iterable[float]) -> FloatArray:
    coefficients = np.array([1.0])
    for value in values:
        coefficients = np.convolve(coefficients, np.array([1.0, value]))
    return coefficients


def sym_poly_bundle(box: BoxSpec) -> SymPolyBundle:
    """Return the σ, d and e families of ``box`` by repeated convolution."""

    a = box.a
    sigma = _elementary_symmetric(a)
    d = _elementary_symmetric(a[1:])
    e = d / a[0] ** np.arange(len(d))
    return SymPolyBundle(sigma=tuple(sigma), d=tuple(d), e=tuple(e))


@dataclass(frozen=True)
class BoxSolution:
    """Separable flux solution ``u_c(x) = Σ cos(√c x_i) / (√c sin(√c a_i))``."""

    box: BoxSpec
    c: float

    def __call__(self, x: ArrayLike) -> FloatArray:
        points = np.asarray(x, dtype=float)
        k = math.sqrt(self.c)
        terms = np.cos(k * points) / (k * np.sin(k * self.box.a))
        return np.asarray(np.sum(terms, axis=-1))


def _check_box_c(box: BoxSpec, c: float, beyond_mu2: bool) -> float:
    c = float(c)
    upper = (math.pi / box.half_lengths[0]) ** 2 if beyond_mu2 else box.mu2
    if not math.isfinite(c) or c <= 0 or c >= upper:
        raise ValueError(f"c must lie in (0, {upper:.12g}) for this box, got {c!r}")
    sines = np.sin(math.sqrt(c) * box.a)
    if np.any(np.abs(sines) < SINGULAR_BAND):
        raise ValueError(f"c={c!r} makes a sine denominator numerically singular")
    return c


def box_flux_solution(box: BoxSpec, c: float) -> BoxSolution:
    """Return the explicit flux solution on ``box`` for ``0 < c < (π/(2a_1))²``.

    Raises:
        ValueError: If ``c >= μ₂`` or a sine denominator is near zero.
    """

    return BoxSolution(box=box, c=_check_box_c(box, c, beyond_mu2=False))


def _box_f_unchecked(box: BoxSpec, c: float) -> float:
    a = box.a
    k = math.sqrt(c)
    volume = box.volume
    inverse = 1.0 / a
    cross = inverse.sum() - inverse
    terms = k * (volume / a) / np.tan(k * a) + (volume / a) * cross
    return float(terms.sum())


def box_f(box: BoxSpec, c: float, beyond_mu2: bool = False) -> float:
    """Return ``f(c, Ω) = Σ_i [√c |Ω|/a_i cot(√c a_i) + |Ω|/a_i Σ_{j≠i} 1/a_j]``.

    Args:
        box: The box.
        c: Spectral parameter; must be below μ₂ unless ``beyond_mu2`` is set,
            in which case values up to ``(π/a_1)²`` are accepted.
        beyond_mu2: Allow evaluation past μ₂ where the formula stays finite.

    Raises:
        ValueError: If ``c`` is out of range or a sine denominator vanishes.
    """

    return _box_f_unchecked(box, _check_box_c(box, c, beyond_mu2))


def box_boundary_min(box: BoxSpec, c: float) -> float:
    """Return ``min_{∂Ω} u_c``, attained at the corners: ``Σ cot(√c a_i)/√c``."""

    c = _check_box_c(box, c, beyond_mu2=True)
    k = math.sqrt(c)
    return float(np.sum(1.0 / np.tan(k * box.a)) / k)


def box_limit_at_mu2(box: BoxSpec) -> float:
    """Return ``lim_{c→μ₂} f(c, Ω)`` from the symmetric-polynomial form.

    Terms with ``a_i = a_1`` contribute exactly zero (``cot(π/2)``).
    """

    a = box.a
    n = box.n
    sigma = sym_poly_bundle(box).sigma
    total = 2.0 ** (n + 1) * sigma[n - 2]
    for a_i in a[1:]:
        if a_i == a[0]:
            continue
        angle = 0.5 * math.pi * a_i / a[0]
        total += 2.0 ** (n - 1) * math.pi * sigma[n] / (a[0] * a_i) / math.tan(angle)
    return float(total)


def box_limit_extrapolated(box: BoxSpec) -> float:
    """Return the μ₂ limit extrapolated from admissible values of ``box_f``."""

    return extrapolate_to_mu2(lambda c: box_f(box, c), box.mu2)


def box_inequality_gap(box: BoxSpec) -> float:
    """Return ``lim_{c→μ₂} f - (n-1)/n · P²/|Ω|``; nonnegative, zero only at cubes."""

    n = box.n
    return box_limit_at_mu2(box) - (n - 1) / n * box.isoperimetric_ratio


def box_breaking_threshold(box: BoxSpec) -> tuple[float, float]:
    """Return ``(m₀, lower_bound)`` with m₀ = limit/μ₂ and the sharp lower bound
    ``(n-1) P² / (n μ₂ |Ω|)``."""

    mu2 = box.mu2
    n = box.n
    return box_limit_at_mu2(box) / mu2, (n - 1) * box.isoperimetric_ratio / (n * mu2)


# ---------------------------------------------------------------------------
# Equilateral triangles


@dataclass(frozen=True)
class EquilateralSpec:
    """Equilateral triangle with vertices (-a/2, 0), (a/2, 0), (0, a√3/2)."""

    side: float = 2.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.side) or self.side <= 0:
            raise ValueError(f"Triangle side must be positive, got {self.side!r}")

    @property
    def scale(self) -> float:
        return self.side / 2.0

    @property
    def vertices(self) -> FloatArray:
        a = self.side
        return np.array([[-a / 2.0, 0.0], [a / 2.0, 0.0], [0.0, a * math.sqrt(3) / 2]])

    @property
    def area(self) -> float:
        return math.sqrt(3) / 4.0 * self.side**2

    @property
    def perimeter(self) -> float:
        return 3.0 * self.side

    @property
    def mu2(self) -> float:
        return 16.0 * math.pi**2 / (9.0 * self.side**2)


def equilateral_kappa1_same_perimeter(perimeter: float) -> float:
    """Return κ₁ = μ₂ of the equilateral triangle with the given perimeter."""

    return EquilateralSpec(side=perimeter / 3.0).mu2


@dataclass(frozen=True)
class LameMode:
    """Neumann eigenfunction of the equilateral triangle.

    The mode is either symmetric or antisymmetric about the vertical axis.
    """

    spec: EquilateralSpec
    kind: ModeKind
    m: int
    n: int

    @property
    def eigenvalue(self) -> float:
        m, n = self.m, self.n
        return 4.0 * math.pi**2 / 9.0 * (m * m + m * n + n * n) / self.spec.scale**2

    def __call__(self, x: ArrayLike, y: ArrayLike) -> FloatArray:
        s = self.spec.scale
        xs = np.asarray(x, dtype=float) / s
        ys = np.asarray(y, dtype=float) / s
        m, n = self.m, self.n
        ell = -m - n
        trig = np.cos if self.kind == "symmetric" else np.sin
        root3 = math.sqrt(3)
        height = root3 - ys
        total = (
            np.cos(math.pi * ell / root3 * height) * trig(math.pi * (m - n) / 3 * xs)
            + np.cos(math.pi * m / root3 * height) * trig(math.pi * (n - ell) / 3 * xs)
            + np.cos(math.pi * n / root3 * height) * trig(math.pi * (ell - m) / 3 * xs)
        )
        return np.asarray(total)


def triangle_mode(spec: EquilateralSpec, kind: ModeKind, m: int, n: int) -> LameMode:
    """Return the Lamé mode ``T^{m,n}`` of the requested parity.

    Raises:
        ValueError: For ``(m, n) = (0, 0)``, non-integer indices or unknown kind.
    """

    if kind not in ("symmetric", "antisymmetric"):
        raise ValueError(f"Unknown mode kind {kind!r}")
    if int(m) != m or int(n) != n:
        raise ValueError(f"Mode indices must be integers, got {(m, n)!r}")
    if m == 0 and n == 0:
        raise ValueError("The (0, 0) mode is the constant and is not a Lamé mode")
    return LameMode(spec=spec, kind=kind, m=int(m), n=int(n))


@dataclass(frozen=True)
class TriangleFluxSolution:
    """Explicit flux solution at ``c = μ₂`` on an equilateral triangle."""

    spec: EquilateralSpec
    coefficient: float = field(
        default=1.0 / (2.0 * math.pi / 3.0 * math.sin(math.pi / math.sqrt(3)))
    )

    def __call__(self, x: ArrayLike, y: ArrayLike) -> FloatArray:
        s = self.spec.scale
        xs = np.asarray(x, dtype=float) / s
        ys = np.asarray(y, dtype=float) / s
        root3 = math.sqrt(3)
        reference = self.coefficient * (
            2.0 * np.cos(math.pi * xs / root3) * np.cos(math.pi * ys / 3.0)
            + np.cos(math.pi / root3 - 2.0 * math.pi * ys / 3.0)
        )
        return np.asarray(s * reference)


def triangle_flux_solution_at_mu2(spec: EquilateralSpec) -> TriangleFluxSolution:
    """Return the explicit flux solution at c = μ₂ = 16π²/(9a²)."""

    return TriangleFluxSolution(spec=spec)


def polygon_boundary_integral(
    func: Callable[[FloatArray, FloatArray], FloatArray],
    vertices: ArrayLike,
    points: int = GAUSS_POINTS,
) -> float:
    """Integrate ``func(x, y)`` over a closed polygon with Gauss-Legendre per side."""

    corners = np.asarray(vertices, dtype=float)
    nodes, weights = legendre.leggauss(points)
    total = 0.0
    for start, stop in zip(corners, np.roll(corners, -1, axis=0)):
        t = 0.5 * (nodes + 1.0)
        xs = start[0] + t * (stop[0] - start[0])
        ys = start[1] + t * (stop[1] - start[1])
        length = float(np.hypot(*(stop - start)))
        total += 0.5 * length * float(np.dot(weights, func(xs, ys)))
    return total


def triangle_f_at_mu2(spec: EquilateralSpec, points: int = GAUSS_POINTS) -> float:
    """Return ``μ₂ ∫∂Ω u_{μ₂} dσ`` for the equilateral triangle."""

    solution = triangle_flux_solution_at_mu2(spec)
    return spec.mu2 * polygon_boundary_integral(solution, spec.vertices, points)


# ---------------------------------------------------------------------------
# Sectors


@dataclass(frozen=True)
class SectorSpec:
    """Unit-radius sector {0 <= r <= 1, |θ| < α/2}."""

    alpha: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or not 0 < self.alpha <= math.pi:
            raise ValueError(f"Sector aperture must lie in (0, π], got {self.alpha!r}")

    @property
    def nu(self) -> float:
        return math.pi / self.alpha

    @property
    def area(self) -> float:
        return self.alpha / 2.0

    @property
    def perimeter(self) -> float:
        return 2.0 + self.alpha


def _radial_integral_j0(j11: float) -> float:
    value, _ = integrate.quad(
        lambda r: special.jv(0, r), 0.0, j11, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    return float(value)


def sector_linearization() -> tuple[float, float]:
    """Return ``(intercept, slope)`` of ``α ↦ ∫∂S(α) J₀(j₁,₁ r) ds``.

    The boundary integral is exactly affine in α: the two radii contribute the
    intercept and the arc contributes ``α J₀(j₁,₁)``.
    """

    j11 = first_root_j(1.0)
    return 2.0 / j11 * _radial_integral_j0(j11), bessel_j(0.0, j11)


def sector_boundary_integral(spec: SectorSpec) -> float:
    """Return ``∫∂S(α) J₀(j₁,₁ r) ds = (2/j₁,₁)∫₀^{j₁,₁} J₀ + α J₀(j₁,₁)``."""

    intercept, slope = sector_linearization()
    return intercept + spec.alpha * slope


def sector_alpha0() -> float:
    """Return α₀, the aperture with ``j'_{π/α,1} = j_{1,1}``.

    Raises:
        BracketError: If the crossing is not bracketed in (0.5, 2).
    """

    j11 = first_root_j(1.0)

    def crossing(alpha: float) -> float:
        return first_root_j_prime(math.pi / alpha) - j11

    lo, hi = 0.5, 2.0
    if crossing(lo) * crossing(hi) >= 0:
        raise BracketError("α₀ is not bracketed in (0.5, 2)")
    return float(optimize.brentq(crossing, lo, hi, xtol=1e-13))


def sector_mu2(
    spec: SectorSpec, tol: float = EQUALITY_TOL
) -> tuple[float, Parity]:
    """Return μ₂(S(α)) and the parity of its modes with respect to the x-axis.

    The radial mode ``J₀(j₁,₁ r)`` is even; the angular mode
    ``J_ν(j'_{ν,1} r) sin(νθ)`` with ``ν = π/α`` is odd. Roots closer than
    ``tol`` count as one double eigenvalue.
    """

    radial = first_root_j(1.0)
    angular = first_root_j_prime(spec.nu)
    if abs(angular - radial) <= tol:
        return radial**2, "double"
    if radial < angular:
        return radial**2, "even"
    return angular**2, "odd"


def sector_trial_bound(spec: SectorSpec) -> float:
    """Return the Rayleigh quotient of ``J₀(j₁,₁ r)`` minus its boundary mean.

    This is an upper bound for κ₁(S(α)); the gradient and mass integrals are
    computed by radial quadrature.
    """

    j11 = first_root_j(1.0)
    alpha = spec.alpha
    mass, _ = integrate.quad(
        lambda r: special.jv(0, j11 * r) ** 2 * r, 0.0, 1.0, epsabs=1e-14
    )
    energy, _ = integrate.quad(
        lambda r: (j11 * special.jv(1, j11 * r)) ** 2 * r, 0.0, 1.0, epsabs=1e-14
    )
    boundary = sector_boundary_integral(spec)
    # J₀(j₁,₁ r) has zero mean over S(α), so the shift only adds |S| mean².
    denominator = alpha * mass + spec.area * (boundary / spec.perimeter) ** 2
    return alpha * energy / denominator


def sector_trial_threshold() -> float:
    """Return α̂₁ > α₀ where the trial bound meets μ₂(S(α)).

    On (α₀, α̂₁) the bound certifies κ₁ < μ₂ while μ₂ has only odd modes.
    """

    alpha0 = sector_alpha0()
    intercept, slope = sector_linearization()
    alpha_zero = -intercept / slope

    def excess(alpha: float) -> float:
        return sector_trial_bound(SectorSpec(alpha)) - first_root_j_prime(
            math.pi / alpha
        ) ** 2

    return float(optimize.brentq(excess, alpha0, alpha_zero, xtol=1e-12))


# ---------------------------------------------------------------------------
# Disks of equal area


def disk_kappa1_same_area(area: float) -> float:
    """Return κ₁ = μ₂ of the disk with the given area."""

    radius = math.sqrt(area / math.pi)
    return ball_mu2(BallSpec(n=2, R=radius))


