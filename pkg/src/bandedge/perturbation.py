"""Expansion coefficients of the spectral bottom under weak disorder.

First order comes from diagonalizing the ground-space restriction of the
single-cell potential; second order from the potential coupling the ground
space to its orthogonal complement through the inverse of the fiber there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .floquet import GroundSpaceData, _fix_phases, fiber_eigh, build_floquet
from .model import (
    ConvergenceError,
    DisorderSupport,
    HoppingOperator,
    SingleCellPotential,
    alloy_periodic_background,
)

CASE_LINEAR = "Linear"
CASE_QUADRATIC = "Quadratic"
CASE_NO_MOTION = "NoMotion"


def case_tolerance(potential: SingleCellPotential, disorder: DisorderSupport) -> float:
    return 1e-10 * (1.0 + potential.norm * disorder.coupling_scale)


@dataclass(frozen=True)
class PerturbationMatrix:
    """Ground-space restriction of the potential, diagonalized."""

    A: np.ndarray  # p x p Hermitian, in the incoming ground basis
    P: np.ndarray  # ascending eigenvalues P_1 <= ... <= P_p
    diagonalizing_basis: np.ndarray  # cell_size x p, <V psi_i, psi_j> = P_i delta_ij


@dataclass(frozen=True)
class EdgeCoefficients:
    theta: np.ndarray
    regime: str
    P: np.ndarray
    A1: float | None
    A2: float | None
    A1_prime: float | None
    A2_prime: float | None
    case: str
    nondegenerate: bool
    V01_dim: int | None = None

    def first_order(self) -> float:
        return self.A1 if self.regime == DisorderSupport.SIGN_CHANGING else self.A1_prime

    def second_order(self) -> float:
        return self.A2 if self.regime == DisorderSupport.SIGN_CHANGING else self.A2_prime


def perturbation_matrix(
    ground: GroundSpaceData, potential: SingleCellPotential
) -> PerturbationMatrix:
    A = ground.basis.conj().T @ potential.matrix @ ground.basis
    A = 0.5 * (A + A.conj().T)
    P, rotation = np.linalg.eigh(A)
    basis = _fix_phases(ground.basis @ rotation)
    return PerturbationMatrix(A=A, P=P, diagonalizing_basis=basis)


def coeff_A1(pert: PerturbationMatrix, disorder: DisorderSupport) -> float:
    """First-order coefficient min(s_plus * P_1, s_minus * P_p), always <= 0."""
    if disorder.regime != DisorderSupport.SIGN_CHANGING:
        raise ValueError("first-order sign-changing coefficient needs the sign-changing regime")
    return float(min(disorder.s_plus * pert.P[0], disorder.s_minus * pert.P[-1]))


SUBSPACE_FULL = "full"
SUBSPACE_V01 = "v01"


def _second_order_operator(
    ground: GroundSpaceData, potential: SingleCellPotential, gap_tol: float
) -> np.ndarray:
    """V Q (fiber restricted to the complement)^+ Q V, as a full-cell matrix."""
    if ground.gap is None or ground.gap <= gap_tol:
        raise ConvergenceError(
            f"spectral gap {ground.gap} too small for the second-order pseudoinverse"
        )
    vectors = ground.eigenvectors
    eigenvalues = ground.eigenvalues
    p = ground.p
    inv = np.zeros_like(eigenvalues)
    inv[p:] = 1.0 / (eigenvalues[p:] - eigenvalues[0])
    pinv = (vectors * inv) @ vectors.conj().T
    return potential.matrix @ pinv @ potential.matrix


def coeff_A2(
    ground: GroundSpaceData,
    pert: PerturbationMatrix,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    subspace: str = SUBSPACE_FULL,
    gap_tol: float = 1e-12,
    tol_deg: float = 1e-10,
) -> float:
    """Second-order coefficient via the closed-form pseudoinverse eigenproblem.

    Returns -c^2 * lambda_max(B* V Q (H|_perp)^+ Q V B) with B spanning the
    requested ground subspace and c^2 the squared extremal coupling.
    """
    B = _subspace_basis(pert, subspace, tol_deg)
    if disorder.regime == DisorderSupport.SIGN_CHANGING:
        c2 = max(disorder.s_minus**2, disorder.s_plus**2)
    else:
        c2 = disorder.s_plus**2
    operator = _second_order_operator(ground, potential, gap_tol)
    restricted = B.conj().T @ operator @ B
    restricted = 0.5 * (restricted + restricted.conj().T)
    top = float(np.linalg.eigvalsh(restricted)[-1])
    return -c2 * max(top, 0.0)


def _subspace_basis(pert: PerturbationMatrix, subspace: str, tol_deg: float) -> np.ndarray:
    if subspace == SUBSPACE_FULL:
        return pert.diagonalizing_basis
    if subspace == SUBSPACE_V01:
        keep = pert.P <= pert.P[0] + tol_deg
        return pert.diagonalizing_basis[:, keep]
    raise ValueError(f"unknown subspace {subspace!r}")


def coeff_A2_variational(
    ground: GroundSpaceData,
    pert: PerturbationMatrix,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    subspace: str = SUBSPACE_FULL,
    iters: int = 200,
    seeds: int = 8,
    seed: int = 0,
    tol: float = 1e-12,
    gap_tol: float = 1e-12,
    tol_deg: float = 1e-10,
) -> float:
    """Independent estimate of the second-order coefficient by alternating ascent.

    Maximizes |<psi, V phi>|^2 / <H phi, phi> over unit psi in the ground
    subspace and phi in its orthogonal complement, from several random starts.
    """
    B = _subspace_basis(pert, subspace, tol_deg)
    if ground.gap is None or ground.gap <= gap_tol:
        raise ConvergenceError("spectral gap too small for the variational second-order estimate")
    if disorder.regime == DisorderSupport.SIGN_CHANGING:
        c2 = max(disorder.s_minus**2, disorder.s_plus**2)
    else:
        c2 = disorder.s_plus**2

    vectors = ground.eigenvectors
    eigenvalues = ground.eigenvalues
    p = ground.p
    n = vectors.shape[0]
    if p == n or B.shape[1] == 0:
        return 0.0
    inv = np.zeros_like(eigenvalues)
    inv[p:] = 1.0 / (eigenvalues[p:] - eigenvalues[0])
    pinv = (vectors * inv) @ vectors.conj().T
    V = potential.matrix

    def objective(psi: np.ndarray, phi: np.ndarray) -> float:
        h_energy = np.real(np.vdot(phi, (ground.fiber.matrix - eigenvalues[0] * np.eye(n)) @ phi))
        if h_energy <= 0:
            return 0.0
        return float(abs(np.vdot(psi, V @ phi)) ** 2 / h_energy)

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(seeds):
        coeff = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
        psi = B @ coeff
        psi /= np.linalg.norm(psi)
        value = 0.0
        converged = False
        for _ in range(iters):
            phi = pinv @ (V @ psi)
            norm_phi = np.linalg.norm(phi)
            if norm_phi < 1e-300:
                value = 0.0
                converged = True
                break
            phi /= norm_phi
            projected = B @ (B.conj().T @ (V @ phi))
            norm_psi = np.linalg.norm(projected)
            if norm_psi < 1e-300:
                value = 0.0
                converged = True
                break
            psi = projected / norm_psi
            new_value = objective(psi, phi)
            if abs(new_value - value) <= tol * (1.0 + new_value):
                value = new_value
                converged = True
                break
            value = new_value
        if not converged:
            raise ConvergenceError(
                f"alternating ascent did not settle in {iters} iterations; best={-c2 * max(best, value):.6e}"
            )
        best = max(best, value)
    return -c2 * best


def coeffs_positive_regime(
    ground: GroundSpaceData,
    pert: PerturbationMatrix,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    tol_deg: float = 1e-10,
) -> tuple[float, float, int]:
    """First and second coefficients for nonnegative couplings, plus dim of the
    minimal-eigenvalue subspace used for the second order."""
    if disorder.regime != DisorderSupport.POSITIVE:
        raise ValueError("positive-regime coefficients need the positive regime")
    P1 = float(pert.P[0])
    A1_prime = min(disorder.s_plus * P1, disorder.s_minus * P1)
    A2_prime = coeff_A2(ground, pert, potential, disorder, subspace=SUBSPACE_V01, tol_deg=tol_deg)
    V01_dim = int(np.count_nonzero(pert.P <= pert.P[0] + tol_deg))
    return A1_prime, A2_prime, V01_dim


def nondegeneracy_check(
    ground: GroundSpaceData, potential: SingleCellPotential, tol: float = 1e-12
) -> bool:
    """True iff the potential acts nontrivially on the ground space."""
    return bool(np.linalg.norm(potential.matrix @ ground.basis) > tol * (1.0 + potential.norm))


def edge_coefficients(
    ground: GroundSpaceData,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    tol_case: float | None = None,
) -> EdgeCoefficients:
    """Assemble the coefficient record and classify the leading behavior."""
    pert = perturbation_matrix(ground, potential)
    if tol_case is None:
        tol_case = case_tolerance(potential, disorder)
    nondeg = nondegeneracy_check(ground, potential)

    if disorder.regime == DisorderSupport.SIGN_CHANGING:
        A1 = coeff_A1(pert, disorder)
        A2 = coeff_A2(ground, pert, potential, disorder) if ground.gap else 0.0
        if ground.gap is None:
            A2 = 0.0
        if abs(A1) > tol_case:
            case = CASE_LINEAR
        elif abs(A2) > tol_case:
            case = CASE_QUADRATIC
        else:
            case = CASE_NO_MOTION
        return EdgeCoefficients(
            theta=ground.theta,
            regime=disorder.regime,
            P=pert.P,
            A1=A1,
            A2=A2,
            A1_prime=None,
            A2_prime=None,
            case=case,
            nondegenerate=nondeg,
        )

    if ground.gap is None:
        P1 = float(pert.P[0])
        A1_prime = min(disorder.s_plus * P1, disorder.s_minus * P1)
        A2_prime = 0.0
        V01_dim = int(np.count_nonzero(pert.P <= pert.P[0] + 1e-10))
    else:
        A1_prime, A2_prime, V01_dim = coeffs_positive_regime(ground, pert, potential, disorder)
    P1 = float(pert.P[0])
    if abs(P1) > tol_case:
        case = CASE_LINEAR
    elif abs(A2_prime) > tol_case:
        case = CASE_QUADRATIC
    else:
        case = CASE_NO_MOTION
    return EdgeCoefficients(
        theta=ground.theta,
        regime=disorder.regime,
        P=pert.P,
        A1=None,
        A2=None,
        A1_prime=A1_prime,
        A2_prime=A2_prime,
        case=case,
        nondegenerate=nondeg,
        V01_dim=V01_dim,
    )


def edge_bound(coeffs: EdgeCoefficients, epsilon: float, warn_threshold: float = 0.1) -> float:
    """Predicted bound on the spectral bottom shift at coupling strength epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if coeffs.case == CASE_LINEAR:
        return epsilon * coeffs.first_order()
    if coeffs.case == CASE_QUADRATIC:
        return epsilon**2 * coeffs.second_order()
    return 0.0


@dataclass(frozen=True)
class PFReport:
    applicable: bool
    simple: bool | None = None
    strictly_positive: bool | None = None
    min_entry: float | None = None
    gap: float | None = None

    @property
    def passed(self) -> bool:
        return bool(self.applicable and self.simple and self.strictly_positive)


def perron_frobenius_check(
    hopping: HoppingOperator, tol_pos: float = 1e-12
) -> PFReport:
    """At theta = 0 the lowest fiber state of -Delta + W is simple and positive."""
    W = alloy_periodic_background(hopping)
    if W is None:
        return PFReport(applicable=False)
    theta0 = np.zeros(hopping.geometry.d)
    fiber = build_floquet(hopping, theta0)
    eigenvalues, vectors = fiber_eigh(fiber)
    scale = max(float(np.abs(eigenvalues).max()), 1.0)
    simple = bool(len(eigenvalues) == 1 or eigenvalues[1] - eigenvalues[0] > 1e-10 * scale)
    psi = _fix_phases(vectors[:, :1])[:, 0]
    if np.abs(psi.imag).max() > 1e-10:
        positive = False
        min_entry = float("nan")
    else:
        min_entry = float(psi.real.min())
        positive = min_entry > tol_pos
    gap = float(eigenvalues[1] - eigenvalues[0]) if len(eigenvalues) > 1 else None
    return PFReport(
        applicable=True,
        simple=simple,
        strictly_positive=positive,
        min_entry=min_entry,
        gap=gap,
    )
