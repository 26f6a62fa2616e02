"""Tests for the P1 finite element operators and eigensolvers."""

from __future__ import annotations

import math
from typing import Any

import numpy as np
import pytest

from fluxspec import closed_form as cf
from fluxspec import fem, geometry
from fluxspec.errors import (
    ConvergenceError,
    DegenerateMeshError,
    NearEigenvalueError,
)
from fluxspec.fem import (
    SymmetricOperatorPair,
    assemble,
    eigenfunction_boundary_mean,
    eigenvalue_group,
    kappa_of_m,
    kappa_spectrum,
    neumann_spectrum,
    richardson,
    solution_norm_checks,
    solve_flux,
)
from fluxspec.geometry import DomainSpec


def test_assembly_identities(square_ops: SymmetricOperatorPair) -> None:
    ones = np.ones(square_ops.size)
    assert np.abs(square_ops.stiffness @ ones).max() < 1e-12
    assert square_ops.area == pytest.approx(1.0)
    assert square_ops.perimeter == pytest.approx(4.0)
    assert square_ops.isoperimetric_ratio == pytest.approx(16.0)
    assert abs(square_ops.stiffness - square_ops.stiffness.T).max() < 1e-14
    # Linear functions have constant gradient: xᵀKx equals the area.
    x = square_ops.mesh.nodes[:, 0]
    assert float(x @ (square_ops.stiffness @ x)) == pytest.approx(1.0)


def test_assembly_rejects_degenerate_triangle() -> None:
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    mesh = geometry.Mesh(
        nodes=nodes,
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
        curved_tags=("none",) * 3,
    )
    with pytest.raises(DegenerateMeshError) as info:
        assemble(mesh)
    assert info.value.index == 0


def test_neumann_spectrum_of_square(square_ops: SymmetricOperatorPair) -> None:
    spectrum = neumann_spectrum(square_ops, 6)
    values = spectrum.values
    assert abs(values[0]) < 1e-9
    assert np.all(np.diff(values) >= -1e-12)
    assert values[1] == pytest.approx(math.pi**2, rel=0.02)
    assert values[1] == pytest.approx(values[2], rel=1e-10)
    assert spectrum.orthonormality_error(square_ops.mass) < 1e-10
    assert eigenvalue_group(spectrum, 1) == [1, 2]


def test_eigenvectors_have_positive_peaks(square_ops: SymmetricOperatorPair) -> None:
    vectors = neumann_spectrum(square_ops, 4).vectors
    peaks = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(4)]
    assert np.all(peaks > 0)


def test_spectrum_rejects_bad_counts(square_ops: SymmetricOperatorPair) -> None:
    with pytest.raises(ValueError):
        neumann_spectrum(square_ops, 0)
    with pytest.raises(ValueError):
        neumann_spectrum(square_ops, 21)


def test_sparse_path_matches_dense(square_ops: SymmetricOperatorPair) -> None:
    dense = neumann_spectrum(square_ops, 4)
    sparse = neumann_spectrum(square_ops, 4, dense_limit=10)
    assert sparse.values == pytest.approx(dense.values, rel=1e-8, abs=1e-10)

    dense_kappa = kappa_spectrum(square_ops, 3)
    sparse_kappa = kappa_spectrum(square_ops, 3, dense_limit=10)
    assert sparse_kappa.values == pytest.approx(dense_kappa.values, rel=1e-8)
    assert np.abs(square_ops.load @ sparse_kappa.vectors).max() < 1e-8


def test_symmetric_eigenfunctions_have_zero_boundary_mean(
    square_ops: SymmetricOperatorPair,
) -> None:
    spectrum = neumann_spectrum(square_ops, 4)
    assert abs(eigenfunction_boundary_mean(square_ops, spectrum, 1)) < 1e-10
    constant = eigenfunction_boundary_mean(square_ops, spectrum, 0)
    assert abs(constant) == pytest.approx(4.0, rel=1e-8)


def test_kappa_equals_mu2_on_square_and_disk(
    square_ops: SymmetricOperatorPair, disk_ops: SymmetricOperatorPair
) -> None:
    for ops in (square_ops, disk_ops):
        mu = neumann_spectrum(ops, 3).values
        kappa = kappa_spectrum(ops, 2).values
        assert kappa[0] == pytest.approx(mu[1], rel=1e-8)


def test_kappa_is_strictly_below_mu2_on_thin_triangle(
    triangle_ops: SymmetricOperatorPair,
) -> None:
    mu = neumann_spectrum(triangle_ops, 3).values
    kappa = kappa_spectrum(triangle_ops, 2).values
    assert kappa[0] < mu[1] * (1 - 1e-3)


def test_constrained_spectrum_interlaces(triangle_ops: SymmetricOperatorPair) -> None:
    mu = neumann_spectrum(triangle_ops, 7).values
    kappa = kappa_spectrum(triangle_ops, 6)
    slack = 1e-9 * mu[-1]
    for i in range(6):
        assert mu[i] - slack <= kappa.values[i] <= mu[i + 1] + slack
    assert np.abs(triangle_ops.load @ kappa.vectors).max() < 1e-9
    assert kappa.orthonormality_error(triangle_ops.mass) < 1e-9


def test_kappa_of_m_duality(square_ops: SymmetricOperatorPair) -> None:
    kappa1 = kappa_spectrum(square_ops, 1).values[0]
    previous = kappa1 * (1 + 1e-9)
    for m in (1.0, 2.0, 4.0):
        value, minimizer = kappa_of_m(square_ops, m)
        assert value < previous
        previous = value
        # m κ(m) = f(κ(m)) holds exactly for the discrete problem.
        solution = solve_flux(square_ops, value)
        assert m * value == pytest.approx(solution.f_value, rel=1e-7)
        assert float(minimizer @ (square_ops.mass @ minimizer)) == pytest.approx(1.0)


def test_kappa_of_m_sparse_path(square_ops: SymmetricOperatorPair) -> None:
    dense, _ = kappa_of_m(square_ops, 2.0)
    sparse, _ = kappa_of_m(square_ops, 2.0, dense_limit=10)
    assert sparse == pytest.approx(dense, rel=1e-8)
    with pytest.raises(ValueError):
        kappa_of_m(square_ops, 0.0)


def test_kappa_of_m_limits(square_ops: SymmetricOperatorPair) -> None:
    heavy, _ = kappa_of_m(square_ops, 1e12)
    assert -1e-9 < heavy <= 1e-6
    light, _ = kappa_of_m(square_ops, 1e-9)
    kappa1 = kappa_spectrum(square_ops, 1).values[0]
    assert light == pytest.approx(kappa1, rel=1e-3)


def test_kappa_of_m_rejects_inaccurate_pairs(
    square_ops: SymmetricOperatorPair, monkeypatch: pytest.MonkeyPatch
) -> None:
    eigh = fem.linalg.eigh

    def shifted_eigh(*args: Any, **kwargs: Any) -> tuple[Any, Any]:
        values, vectors = eigh(*args, **kwargs)
        return values + 1.0, vectors

    monkeypatch.setattr(fem.linalg, "eigh", shifted_eigh)
    with pytest.raises(ConvergenceError) as info:
        kappa_of_m(square_ops, 2.0)
    assert info.value.residuals[0] > 1e-8


def _flux_errors(
    domain: DomainSpec, levels: range, exact: float, c: float
) -> list[float]:
    errors: list[float] = []
    for level in levels:
        ops = assemble(geometry.mesh_at_level(domain, level))
        errors.append(abs(solve_flux(ops, c).f_value - exact))
    return errors


@pytest.mark.slow
@pytest.mark.parametrize("shape", ["square", "disk"])
def test_flux_functional_converges_at_second_order(shape: str) -> None:
    if shape == "square":
        c = 0.5 * math.pi**2
        domain = geometry.rectangle(0.5, 0.5)
        exact = cf.box_f(cf.BoxSpec((0.5, 0.5)), c)
        levels = range(3, 6)
    else:
        disk = cf.BallSpec(2)
        c = 0.5 * cf.ball_mu2(disk)
        domain = geometry.disk(1.0, 32)
        exact = cf.ball_f(disk, c)
        levels = range(2, 5)
    errors = _flux_errors(domain, levels, exact, c)
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert all(1.6 <= order <= 2.4 for order in orders), orders


def test_solve_flux_small_c_recovers_isoperimetric_ratio(
    disk_ops: SymmetricOperatorPair,
) -> None:
    mu2 = disk_ops.reference_spectrum.values[1]
    solution = solve_flux(disk_ops, 1e-6 * mu2)
    assert solution.f_value == pytest.approx(disk_ops.isoperimetric_ratio, rel=1e-3)
    assert solution.backward_error <= 1e-8
    assert solution.boundary_min > 0


def test_solve_flux_matches_disk_closed_form(disk_ops: SymmetricOperatorPair) -> None:
    c = 1.5
    solution = solve_flux(disk_ops, c)
    assert solution.f_value == pytest.approx(cf.ball_f(cf.BallSpec(2), c), rel=0.03)


def test_solve_flux_guard_band(square_ops: SymmetricOperatorPair) -> None:
    mu2 = square_ops.reference_spectrum.values[1]
    with pytest.raises(NearEigenvalueError):
        solve_flux(square_ops, mu2)
    with pytest.raises(NearEigenvalueError):
        solve_flux(square_ops, mu2 * (1 + 1e-8))
    with pytest.raises(ValueError):
        solve_flux(square_ops, -1.0)


def test_solution_norm_checks(square_ops: SymmetricOperatorPair) -> None:
    mu2 = square_ops.reference_spectrum.values[1]
    solution = solve_flux(square_ops, 0.5 * mu2)
    diagnostics = solution_norm_checks(solution, square_ops)
    assert diagnostics.passed
    edge_integral = diagnostics.edge_boundary_integral
    assert edge_integral == pytest.approx(solution.boundary_integral)
    assert solution.f_value == pytest.approx(solution.c * solution.boundary_integral)


def test_richardson() -> None:
    assert richardson(1.0 + 4e-2, 1.0 + 1e-2) == pytest.approx(1.0)
