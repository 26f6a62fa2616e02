"""P1 finite elements for the flux problem and its eigenvalue companions.

All discrete objects live on one :class:`SymmetricOperatorPair`: the stiffness
matrix ``K``, the consistent mass matrix ``M`` and the boundary load ``b`` with
``b_i = ∫∂Ω φ_i dσ``. The flux problem becomes ``(K - cM) u = -b``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from scipy import linalg, sparse
from scipy.sparse.linalg import LinearOperator, eigsh, splu
from scipy.sparse.linalg import norm as spnorm

from .errors import (
    ConvergenceError,
    DegenerateMeshError,
    NearEigenvalueError,
    SingularFactorizationError,
)
from .geometry import Mesh

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MIN_TRIANGLE_AREA = 1e-14
MAX_EIGENPAIRS = 20
RESIDUAL_TOL = 1e-8
GROUP_TOL = 1e-6
GUARD_BAND = 1e-6
DENSE_LIMIT = 3000
SHIFT = -0.01
DEFAULT_SEED = 20240101


@dataclass(frozen=True, eq=False)
class SymmetricOperatorPair:
    """Assembled stiffness, mass and boundary load of one mesh."""

    stiffness: sparse.csc_matrix
    mass: sparse.csc_matrix
    load: FloatArray
    mesh: Mesh

    @property
    def size(self) -> int:
        return int(self.load.shape[0])

    @property
    def area(self) -> float:
        ones = np.ones(self.size)
        return float(ones @ (self.mass @ ones))

    @property
    def perimeter(self) -> float:
        return float(self.load.sum())

    @property
    def isoperimetric_ratio(self) -> float:
        return self.perimeter**2 / self.area

    @cached_property
    def reference_spectrum(self) -> Spectrum:
        """Low Neumann spectrum used for the guard band of :func:`solve_flux`."""

        return neumann_spectrum(self, min(8, self.size - 1))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with M-orthonormal eigenvectors stored as columns."""

    values: FloatArray
    vectors: FloatArray
    residuals: FloatArray

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def orthonormality_error(self, mass: sparse.csc_matrix) -> float:
        gram = self.vectors.T @ (mass @ self.vectors)
        return float(np.abs(gram - np.eye(len(self))).max())


@dataclass(frozen=True)
class FluxSolution:
    c: float
    u: FloatArray
    boundary_integral: float
    f_value: float
    boundary_min: float
    residual: float
    backward_error: float = 0.0


@dataclass(frozen=True)
class NormDiagnostics:
    """Independent consistency checks for one :class:`FluxSolution`."""

    residual: float
    backward_error: float
    edge_boundary_integral: float
    boundary_sum_gap: float
    green_defect: float

    @property
    def passed(self) -> bool:
        return (
            self.backward_error <= RESIDUAL_TOL
            and self.boundary_sum_gap <= 1e-12
            and self.green_defect <= RESIDUAL_TOL
        )


def assemble(mesh: Mesh) -> SymmetricOperatorPair:
    """Assemble the exact P1 stiffness, mass and boundary load of ``mesh``.

    Raises:
        DegenerateMeshError: If a triangle has area at most 1e-14.
    """

    areas = mesh.triangle_areas
    small = np.flatnonzero(areas <= MIN_TRIANGLE_AREA)
    if small.size:
        index = int(small[0])
        raise DegenerateMeshError(index, float(areas[index]))

    t1, t2, t3 = mesh.triangles[:, 0], mesh.triangles[:, 1], mesh.triangles[:, 2]
    v1, v2, v3 = mesh.nodes[t1], mesh.nodes[t2], mesh.nodes[t3]
    v2mv1 = v2 - v1
    v3mv2 = v3 - v2
    v1mv3 = v1 - v3
    # 4 * area, so that the off-diagonal entries come out as -cot/2.
    vol = 4.0 * areas
    a12 = np.sum(v3mv2 * v1mv3, axis=1) / vol
    a23 = np.sum(v1mv3 * v2mv1, axis=1) / vol
    a31 = np.sum(v2mv1 * v3mv2, axis=1) / vol
    a11 = -a12 - a31
    a22 = -a12 - a23
    a33 = -a31 - a23
    local_k = np.column_stack((a12, a12, a23, a23, a31, a31, a11, a22, a33)).reshape(-1)
    i = np.column_stack((t1, t2, t2, t3, t3, t1, t1, t2, t3)).reshape(-1)
    j = np.column_stack((t2, t1, t3, t2, t1, t3, t1, t2, t3)).reshape(-1)
    size = mesh.node_count
    stiffness = sparse.csc_matrix((local_k, (i, j)), shape=(size, size))

    m_ii = areas / 6.0
    m_ij = areas / 12.0
    local_m = np.column_stack(
        (m_ij, m_ij, m_ij, m_ij, m_ij, m_ij, m_ii, m_ii, m_ii)
    ).reshape(-1)
    mass = sparse.csc_matrix((local_m, (i, j)), shape=(size, size))

    half = 0.5 * mesh.edge_lengths
    load = np.zeros(size)
    np.add.at(load, mesh.boundary_edges[:, 0], half)
    np.add.at(load, mesh.boundary_edges[:, 1], half)

    logger.debug("Assembled operators: %d nodes, nnz(K)=%d", size, stiffness.nnz)
    return SymmetricOperatorPair(stiffness=stiffness, mass=mass, load=load, mesh=mesh)


def _normalize_signs(vectors: FloatArray) -> FloatArray:
    """Flip each column so its largest-magnitude component is positive."""

    peaks = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[peaks, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _residuals(
    ops: SymmetricOperatorPair, values: FloatArray, vectors: FloatArray
) -> FloatArray:
    mass_vectors = ops.mass @ vectors
    defect = ops.stiffness @ vectors - mass_vectors * values
    return np.linalg.norm(defect, axis=0) / np.linalg.norm(mass_vectors, axis=0)


def _finish_spectrum(
    ops: SymmetricOperatorPair, values: FloatArray, vectors: FloatArray
) -> Spectrum:
    order = np.argsort(values)
    values = np.asarray(values[order], dtype=float)
    vectors = _normalize_signs(np.asarray(vectors[:, order], dtype=float))
    residuals = _residuals(ops, values, vectors)
    limit = RESIDUAL_TOL * np.maximum(1.0, np.abs(values))
    if np.any(residuals > limit):
        raise ConvergenceError(
            f"Eigenpair residuals exceed {RESIDUAL_TOL:g}",
            residuals=tuple(float(r) for r in residuals),
        )
    return Spectrum(values=values, vectors=vectors, residuals=residuals)


def _start_vector(size: int, seed: int) -> FloatArray:
    return np.random.default_rng(seed).standard_normal(size)


def _check_count(ops: SymmetricOperatorPair, k: int, reserved: int = 0) -> None:
    if k < 1 or k > MAX_EIGENPAIRS:
        raise ValueError(
            f"Number of eigenpairs must lie in [1, {MAX_EIGENPAIRS}], got {k}"
        )
    if k >= ops.size - reserved:
        raise ValueError(f"Mesh with {ops.size} nodes cannot provide {k} eigenpairs")


def neumann_spectrum(
    ops: SymmetricOperatorPair,
    k: int = 6,
    dense_limit: int = DENSE_LIMIT,
    seed: int = DEFAULT_SEED,
) -> Spectrum:
    """Return the first ``k`` eigenpairs of ``K v = μ M v``.

    Meshes with at most ``dense_limit`` nodes use a dense symmetric-definite
    solver; larger meshes use Lanczos in shift-invert mode around a small
    negative shift with a sparse LU of ``K - σM``.

    Raises:
        ValueError: If ``k`` is outside [1, 20].
        ConvergenceError: If any residual exceeds the tolerance.
    """

    _check_count(ops, k)
    if ops.size <= dense_limit:
        logger.debug("Neumann spectrum: dense path, %d nodes", ops.size)
        values, vectors = linalg.eigh(
            ops.stiffness.toarray(), ops.mass.toarray(), subset_by_index=[0, k - 1]
        )
    else:
        logger.debug("Neumann spectrum: shift-invert Lanczos, %d nodes", ops.size)
        try:
            lu = splu(sparse.csc_matrix(ops.stiffness - SHIFT * ops.mass))
        except RuntimeError as exc:
            raise SingularFactorizationError(str(exc)) from exc
        op_inv = LinearOperator(shape=ops.stiffness.shape, matvec=lu.solve, dtype=float)
        values, vectors = eigsh(
            ops.stiffness,
            k,
            ops.mass,
            sigma=SHIFT,
            OPinv=op_inv,
            v0=_start_vector(ops.size, seed),
        )
    return _finish_spectrum(ops, values, vectors)


def eigenvalue_group(
    spectrum: Spectrum, index: int, tol: float = GROUP_TOL
) -> list[int]:
    """Return the indices whose eigenvalues match ``values[index]`` to ``tol``."""

    if not 0 <= index < len(spectrum):
        raise ValueError(
            f"Eigenvalue index {index} outside spectrum of size {len(spectrum)}"
        )
    target = spectrum.values[index]
    scale = max(abs(target), 1e-12)
    return [
        j
        for j, value in enumerate(spectrum.values)
        if abs(value - target) <= tol * scale
    ]


def eigenfunction_boundary_mean(
    ops: SymmetricOperatorPair, spectrum: Spectrum, index: int
) -> float:
    """Return ``bᵀv`` for the eigenvector at ``index``.

    For a numerically multiple eigenvalue the result is the largest ``|bᵀv|``
    over M-unit vectors of the grouped eigenspace, which is the Euclidean norm
    of the projections of ``b`` on the group's basis.
    """

    group = eigenvalue_group(spectrum, index)
    if len(group) == 1:
        return float(ops.load @ spectrum.vectors[:, index])
    projections = ops.load @ spectrum.vectors[:, group]
    return float(np.linalg.norm(projections))


def _householder_vector(load: FloatArray) -> FloatArray:
    """Return ``v`` such that ``I - 2vvᵀ/vᵀv`` maps ``load`` to a multiple of e₀."""

    v = load.copy()
    v[0] += math.copysign(float(np.linalg.norm(load)), float(load[0]))
    return v


def _reflect_both_sides(matrix: FloatArray, v: FloatArray) -> FloatArray:
    """Return ``H A H`` for the reflector ``H`` defined by ``v``."""

    vtv = float(v @ v)
    p = 2.0 * (matrix @ v) / vtv
    g = float(v @ p) / vtv
    w = p - g * v
    return matrix - np.outer(v, w) - np.outer(w, v)


def _kappa_dense(ops: SymmetricOperatorPair, k: int) -> tuple[FloatArray, FloatArray]:
    v = _householder_vector(ops.load)
    stiffness = _reflect_both_sides(ops.stiffness.toarray(), v)[1:, 1:]
    mass = _reflect_both_sides(ops.mass.toarray(), v)[1:, 1:]
    values, reduced = linalg.eigh(stiffness, mass, subset_by_index=[0, k - 1])
    padded = np.vstack((np.zeros((1, k)), reduced))
    vectors = padded - np.outer(v, 2.0 * (v @ padded) / float(v @ v))
    return values, vectors


def _kappa_sparse(
    ops: SymmetricOperatorPair, k: int, seed: int
) -> tuple[FloatArray, FloatArray]:
    size = ops.size
    column = sparse.csc_matrix(ops.load.reshape(-1, 1))
    bordered = sparse.bmat(
        [[ops.stiffness - SHIFT * ops.mass, column], [column.T, None]], format="csc"
    )
    try:
        lu = splu(bordered)
    except RuntimeError as exc:
        raise SingularFactorizationError(str(exc)) from exc

    def constrained_solve(rhs: FloatArray) -> FloatArray:
        extended = np.concatenate((np.ravel(rhs), [0.0]))
        return np.asarray(lu.solve(extended)[:size])

    op_inv = LinearOperator(shape=(size, size), matvec=constrained_solve, dtype=float)
    start = _start_vector(size, seed)
    start -= ops.load * (ops.load @ start) / (ops.load @ ops.load)
    values, vectors = eigsh(
        ops.stiffness, k, ops.mass, sigma=SHIFT, OPinv=op_inv, v0=start
    )
    return values, vectors


def kappa_spectrum(
    ops: SymmetricOperatorPair,
    k: int = 6,
    dense_limit: int = DENSE_LIMIT,
    seed: int = DEFAULT_SEED,
) -> Spectrum:
    """Return the first ``k`` eigenpairs restricted to ``bᵀw = 0``.

    The dense path reflects ``b`` onto the first coordinate and deletes it,
    which yields an orthonormal basis of the constraint hyperplane. The sparse
    path runs shift-invert Lanczos with the bordered operator
    ``[[K - σM, b], [bᵀ, 0]]``.

    Raises:
        ValueError: If ``b`` vanishes or ``k`` is out of range.
        ConvergenceError: If residuals exceed the tolerance.
    """

    if not np.any(ops.load):
        raise ValueError("The boundary load vanishes; the constraint is empty")
    _check_count(ops, k, reserved=1)
    if ops.size <= dense_limit:
        logger.debug("Kappa spectrum: Householder reduction, %d nodes", ops.size)
        values, vectors = _kappa_dense(ops, k)
    else:
        logger.debug("Kappa spectrum: bordered shift-invert, %d nodes", ops.size)
        values, vectors = _kappa_sparse(ops, k, seed)
    spectrum = _finish_spectrum_constrained(ops, values, vectors)
    defect = np.abs(ops.load @ spectrum.vectors) / (
        np.linalg.norm(ops.load) * np.linalg.norm(spectrum.vectors, axis=0)
    )
    if np.any(defect > 1e-10):
        raise ConvergenceError(
            "Constrained eigenvectors leave the boundary-mean-zero hyperplane",
            residuals=tuple(float(d) for d in defect),
        )
    return spectrum


def _finish_spectrum_constrained(
    ops: SymmetricOperatorPair, values: FloatArray, vectors: FloatArray
) -> Spectrum:
    """Order and sign-normalize constrained pairs.

    Residuals are projected onto ``bᵀw = 0`` before they are checked.
    """

    order = np.argsort(values)
    values = np.asarray(values[order], dtype=float)
    vectors = _normalize_signs(np.asarray(vectors[:, order], dtype=float))
    mass_vectors = ops.mass @ vectors
    defect = ops.stiffness @ vectors - mass_vectors * values
    # The multiplier term β b is the component of the defect along b.
    b = ops.load
    defect -= np.outer(b, (b @ defect) / (b @ b))
    residuals = np.linalg.norm(defect, axis=0) / np.linalg.norm(mass_vectors, axis=0)
    limit = RESIDUAL_TOL * np.maximum(1.0, np.abs(values))
    if np.any(residuals > limit):
        raise ConvergenceError(
            f"Constrained residuals exceed {RESIDUAL_TOL:g}",
            residuals=tuple(float(r) for r in residuals),
        )
    return Spectrum(values=values, vectors=vectors, residuals=residuals)


def kappa_of_m(
    ops: SymmetricOperatorPair,
    m: float,
    dense_limit: int = DENSE_LIMIT,
    seed: int = DEFAULT_SEED,
) -> tuple[float, FloatArray]:
    """Return ``κ(m)`` and its M-normalized minimizer.

    ``κ(m)`` is the smallest eigenvalue of ``(K + bbᵀ/m) u = λ M u``. The sparse
    path inverts the shifted rank-one update with the Sherman-Morrison formula.

    Raises:
        ValueError: If ``m`` is not positive.
        SingularFactorizationError: If the shifted stiffness cannot be factorized.
        ConvergenceError: If the normwise backward error exceeds 1e-8.
    """

    m = float(m)
    if not math.isfinite(m) or m <= 0:
        raise ValueError(f"Mass parameter m must be positive, got {m!r}")
    b = ops.load
    if ops.size <= dense_limit:
        penalized = ops.stiffness.toarray() + np.outer(b, b) / m
        values, vectors = linalg.eigh(
            penalized, ops.mass.toarray(), subset_by_index=[0, 0]
        )
    else:
        try:
            lu = splu(sparse.csc_matrix(ops.stiffness - SHIFT * ops.mass))
        except RuntimeError as exc:
            raise SingularFactorizationError(str(exc)) from exc
        solved_load = lu.solve(b)
        denominator = m + float(b @ solved_load)

        def shifted_solve(rhs: FloatArray) -> FloatArray:
            base = lu.solve(np.ravel(rhs))
            return np.asarray(base - solved_load * (float(b @ base) / denominator))

        def penalized_product(x: FloatArray) -> FloatArray:
            x = np.ravel(x)
            return np.asarray(ops.stiffness @ x + b * (float(b @ x) / m))

        shape = ops.stiffness.shape
        values, vectors = eigsh(
            LinearOperator(shape=shape, matvec=penalized_product, dtype=float),
            1,
            ops.mass,
            sigma=SHIFT,
            OPinv=LinearOperator(shape=shape, matvec=shifted_solve, dtype=float),
            v0=_start_vector(ops.size, seed),
        )
    minimizer = _normalize_signs(np.asarray(vectors, dtype=float))[:, 0]
    value = float(values[0])
    backward = _penalized_backward_error(ops, m, value, minimizer)
    if not np.isfinite(backward) or backward > RESIDUAL_TOL:
        raise ConvergenceError(
            f"kappa(m) backward error {backward:.3e} at m={m!r}", (backward,)
        )
    logger.debug("kappa(m=%.6g) = %.12g", m, value)
    return value, minimizer


def _penalized_backward_error(
    ops: SymmetricOperatorPair, m: float, value: float, vector: FloatArray
) -> float:
    """Normwise backward error of one pair of ``(K + bbᵀ/m) u = λ M u``.

    The penalty enters the scale through ``‖bbᵀ‖∞ = ‖b‖∞ ‖b‖₁``, so the check
    stays meaningful when ``1/m`` dominates the stiffness.
    """

    b = ops.load
    defect = (
        ops.stiffness @ vector
        + b * (float(b @ vector) / m)
        - value * (ops.mass @ vector)
    )
    penalty = float(np.abs(b).max() * np.abs(b).sum()) / m
    operator_norm = (
        float(spnorm(ops.stiffness, np.inf))
        + penalty
        + abs(value) * float(spnorm(ops.mass, np.inf))
    )
    scale = operator_norm * float(np.linalg.norm(vector))
    return float(np.linalg.norm(defect)) / max(scale, 1e-300)


def solve_flux(
    ops: SymmetricOperatorPair,
    c: float,
    spectrum: Spectrum | None = None,
    guard_band: float = GUARD_BAND,
) -> FluxSolution:
    """Solve ``(K - cM) u = -b`` and evaluate the boundary functional.

    ``c`` is rejected when it lies within ``guard_band * μ₂`` of a computed
    Neumann eigenvalue other than the trivial ``μ₁ = 0``.

    Raises:
        ValueError: If ``c`` is not positive.
        NearEigenvalueError: If ``c`` falls inside the guard band.
        SingularFactorizationError: If ``K - cM`` cannot be factorized.
        ConvergenceError: If the residual stays above 1e-8 after one refinement step.
    """

    c = float(c)
    if not math.isfinite(c) or c <= 0:
        raise ValueError(f"c must be positive, got {c!r}")
    spectrum = spectrum if spectrum is not None else ops.reference_spectrum
    if len(spectrum) > 1:
        band = guard_band * float(spectrum.values[1])
        for value in spectrum.values[1:]:
            if abs(c - value) < band:
                raise NearEigenvalueError(c, float(value))

    shifted = sparse.csc_matrix(ops.stiffness - c * ops.mass)
    try:
        lu = splu(shifted)
    except RuntimeError as exc:
        raise SingularFactorizationError(f"K - cM is singular at c={c!r}") from exc
    rhs = -ops.load
    u = lu.solve(rhs)
    u += lu.solve(rhs - shifted @ u)
    defect = float(np.linalg.norm(shifted @ u - rhs))
    residual = defect / float(np.linalg.norm(rhs))
    backward = _backward_error(defect, shifted, u, rhs)
    if not np.isfinite(backward) or backward > RESIDUAL_TOL:
        raise ConvergenceError(
            f"Flux solve backward error {backward:.3e} at c={c!r}", (backward,)
        )

    boundary_integral = float(ops.load @ u)
    return FluxSolution(
        c=c,
        u=u,
        boundary_integral=boundary_integral,
        f_value=c * boundary_integral,
        boundary_min=float(u[ops.mesh.boundary_nodes].min()),
        residual=residual,
        backward_error=backward,
    )


def _backward_error(
    defect: float, matrix: sparse.csc_matrix, u: FloatArray, rhs: FloatArray
) -> float:
    """Normwise backward error ``‖r‖ / (‖A‖‖u‖ + ‖f‖)``; u grows like 1/c as c → 0."""

    scale = float(spnorm(matrix, np.inf)) * float(np.linalg.norm(u))
    return defect / (scale + float(np.linalg.norm(rhs)))


def solution_norm_checks(
    sol: FluxSolution, ops: SymmetricOperatorPair
) -> NormDiagnostics:
    """Recompute the residual, the edge-summed boundary integral and Green's identity.

    Green's identity for the weak form reads ``c uᵀMu - uᵀKu - bᵀu = 0``.
    """

    u = sol.u
    shifted = sparse.csc_matrix(ops.stiffness - sol.c * ops.mass)
    defect = float(np.linalg.norm(shifted @ u + ops.load))
    residual = defect / float(np.linalg.norm(ops.load))
    backward = _backward_error(defect, shifted, u, -ops.load)

    edges = ops.mesh.boundary_edges
    lengths = ops.mesh.edge_lengths
    edge_integral = float(np.sum(lengths * 0.5 * (u[edges[:, 0]] + u[edges[:, 1]])))
    magnitude = max(1.0, abs(sol.boundary_integral))
    gap = abs(edge_integral - sol.boundary_integral) / magnitude

    mass_term = sol.c * float(u @ (ops.mass @ u))
    energy = float(u @ (ops.stiffness @ u))
    load_term = float(ops.load @ u)
    scale = max(abs(mass_term), abs(energy), abs(load_term), 1e-300)
    green = abs(mass_term - energy - load_term) / scale

    diagnostics = NormDiagnostics(
        residual=residual,
        backward_error=backward,
        edge_boundary_integral=edge_integral,
        boundary_sum_gap=gap,
        green_defect=green,
    )
    if not diagnostics.passed:
        logger.warning(
            "Flux solution diagnostics failed at c=%.6g: %s", sol.c, diagnostics
        )
    return diagnostics


def richardson(coarse: float, fine: float) -> float:
    """Richardson-extrapolate two values one uniform refinement apart (O(h²))."""

    return fine + (fine - coarse) / 3.0
