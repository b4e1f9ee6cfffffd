"""Quasi-momentum fiber matrices, zone scans, and ground-space extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ConvergenceError,
    HoppingOperator,
    _refine_scan,
)

DEFAULT_TOL_THETA = 1e-9
DEFAULT_GRID_PER_DIM = 64
DEFAULT_REFINEMENTS = 6


@dataclass(frozen=True)
class FloquetMatrix:
    """The fiber of a periodic hopping operator at quasi-momentum theta."""

    theta: np.ndarray
    matrix: np.ndarray

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float)
        matrix = np.asarray(self.matrix, dtype=complex)
        scale = np.abs(matrix).max() or 1.0
        if np.abs(matrix - matrix.conj().T).max() > 1e-13 * scale:
            raise ValueError("fiber matrix is not Hermitian to rounding precision")
        theta.setflags(write=False)
        matrix.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "matrix", matrix)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class GroundSpaceData:
    """Full fiber eigendata at one theta plus the degenerate ground basis."""

    theta: np.ndarray
    eigenvalues: np.ndarray  # ascending, full spectrum
    p: int
    basis: np.ndarray  # cell_size x p, orthonormal columns
    gap: float | None  # None when p == cell_size
    fiber: FloquetMatrix
    eigenvectors: np.ndarray  # all columns, for downstream pseudoinverses

    @property
    def e0(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class ThetaSet:
    minimizers: tuple[np.ndarray, ...]
    E0: float
    resolution: float


def build_floquet(hopping: HoppingOperator, theta) -> FloquetMatrix:
    """Assemble the fiber matrix M(theta)(k,k') = sum_m e^{i theta.m} H0(k, k'-m)."""
    theta = np.asarray(theta, dtype=float)
    matrix = hopping.fiber(theta)
    matrix = 0.5 * (matrix + matrix.conj().T)  # symmetrize rounding noise only
    return FloquetMatrix(theta, matrix)


def fiber_eigh(fiber: FloquetMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with an explicit residual certificate."""
    try:
        eigenvalues, vectors = np.linalg.eigh(fiber.matrix)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"dense eigensolver failed on fiber at theta={fiber.theta}") from exc
    scale = max(fiber.norm, 1e-300)
    residual = np.abs(fiber.matrix @ vectors - vectors * eigenvalues).max()
    if residual > 1e-12 * scale:
        raise ConvergenceError(f"eigenpair residual {residual:.3e} exceeds 1e-12 * norm")
    ortho = np.abs(vectors.conj().T @ vectors - np.eye(len(eigenvalues))).max()
    if ortho > 1e-12:
        raise ConvergenceError(f"eigenvector orthonormality defect {ortho:.3e}")
    return eigenvalues, vectors


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive."""
    fixed = np.array(vectors)
    for j in range(fixed.shape[1]):
        pivot = int(np.argmax(np.abs(fixed[:, j])))
        entry = fixed[pivot, j]
        if abs(entry) > 0:
            fixed[:, j] *= np.conj(entry) / abs(entry)
    return fixed


def scan_theta_set(
    hopping: HoppingOperator,
    grid_per_dim: int = DEFAULT_GRID_PER_DIM,
    refinements: int = DEFAULT_REFINEMENTS,
    tol_theta: float = DEFAULT_TOL_THETA,
) -> ThetaSet:
    """Locate the minimizer set of the lowest band over [0, 2pi/N)^d.

    Runs the requested number of bisection rounds and keeps refining until the
    per-round improvement of the minimum drops below tol_theta; raises
    ConvergenceError if that never happens.
    """
    candidates, minimum, spacing = _refine_scan(
        hopping,
        grid_per_dim,
        min_refinements=refinements,
        tol=tol_theta,
        keep_tol=tol_theta,
    )
    # cluster candidates at the coarse-grid scale (a flat minimum keeps a
    # whole blob within tol_theta of E0); one representative per cluster,
    # the best value with lexicographic tie-break
    width = 2.0 * np.pi / hopping.geometry.N
    radius = width / grid_per_dim

    def torus_dist(a: np.ndarray, b: np.ndarray) -> float:
        delta = np.abs(a - b)
        return float(np.minimum(delta, width - delta).max())

    clusters: list[list[tuple[np.ndarray, float]]] = []
    for theta, value in sorted(candidates, key=lambda c: (c[1], tuple(c[0]))):
        for cluster in clusters:
            if any(torus_dist(theta, other) <= radius for other, _ in cluster):
                cluster.append((theta, value))
                break
        else:
            clusters.append([(theta, value)])
    kept = sorted(
        (min(cluster, key=lambda c: (c[1], tuple(c[0])))[0] for cluster in clusters),
        key=tuple,
    )
    return ThetaSet(tuple(kept), minimum, spacing)


def ground_space(
    hopping: HoppingOperator,
    theta,
    tol_deg: float | None = None,
) -> GroundSpaceData:
    """Eigendata of the fiber at theta with the near-degenerate ground cluster."""
    fiber = build_floquet(hopping, theta)
    eigenvalues, vectors = fiber_eigh(fiber)
    if tol_deg is None:
        tol_deg = max(1e-10, 1e-8 * fiber.norm)
    p = int(np.count_nonzero(eigenvalues <= eigenvalues[0] + tol_deg))
    basis = _fix_phases(vectors[:, :p])
    gap = None if p == len(eigenvalues) else float(eigenvalues[p] - eigenvalues[0])
    return GroundSpaceData(
        theta=np.asarray(theta, dtype=float),
        eigenvalues=eigenvalues,
        p=p,
        basis=basis,
        gap=gap,
        fiber=fiber,
        eigenvectors=vectors,
    )
