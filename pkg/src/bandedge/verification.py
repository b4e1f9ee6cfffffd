"""Independent numerical oracles for the predicted spectral-edge bounds.

Everything here recomputes spectra from scratch (finite tori, truncated trial
states, coupling sweeps) so that the perturbation-theory coefficients are
checked against brute force rather than against themselves.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .floquet import build_floquet, fiber_eigh, ground_space
from .model import (
    ConvergenceError,
    DisorderSupport,
    HoppingOperator,
    SingleCellPotential,
    alloy_periodic_background,
    preset_model,
)
from .perturbation import (
    CASE_LINEAR,
    CASE_NO_MOTION,
    CASE_QUADRATIC,
    EdgeCoefficients,
    edge_bound,
    edge_coefficients,
)

DENSE_SITE_CUTOFF = 4096


@dataclass(frozen=True)
class FiberMinResult:
    epsilon: float
    theta: np.ndarray
    q_star: float
    value: float


@dataclass(frozen=True)
class BoxSpectrumSample:
    L: int
    omega: np.ndarray
    epsilon: float
    lambda_min: float
    boundary: str = "Periodic"


@dataclass(frozen=True)
class ExponentFit:
    epsilons: np.ndarray
    values: np.ndarray
    eta: float
    prefactor: float
    r_squared: float
    excluded: int = 0


def fiber_min_over_q(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    theta,
    epsilon: float,
    guard_points: int = 9,
) -> FiberMinResult:
    """Minimum over the coupling support of the perturbed fiber bottom.

    The smallest eigenvalue of an affine Hermitian family is concave in the
    coupling, so the minimum over [s_minus, s_plus] sits at an endpoint; an
    interior grid guards that assumption.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    theta = np.asarray(theta, dtype=float)
    base = build_floquet(hopping, theta).matrix

    def bottom(q: float) -> float:
        return float(np.linalg.eigvalsh(base + epsilon * q * potential.matrix)[0])

    lo = bottom(disorder.s_minus)
    hi = bottom(disorder.s_plus)
    if lo <= hi:
        q_star, value = disorder.s_minus, lo
    else:
        q_star, value = disorder.s_plus, hi

    interior = np.linspace(disorder.s_minus, disorder.s_plus, guard_points + 2)[1:-1]
    for q in interior:
        if bottom(q) < value - 1e-12 * (1.0 + abs(value)):
            raise ConvergenceError(
                f"interior coupling q={q} beats both endpoints; concavity violated"
            )
    return FiberMinResult(epsilon=epsilon, theta=theta, q_star=q_star, value=value)


@dataclass(frozen=True)
class SandwichRow:
    epsilon: float
    value: float
    predicted: float
    residual: float
    lower_ok: bool
    upper_ok: bool


@dataclass(frozen=True)
class SandwichReport:
    case: str
    coefficients: EdgeCoefficients
    remainder_power: float | None
    C: float
    rows: tuple[SandwichRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.lower_ok and r.upper_ok for r in self.rows)


def fiber_bound_sandwich(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    theta,
    epsilon_list,
    slack_factor: float = 1.25,
) -> SandwichReport:
    """Check the coupling-swept fiber bottom against the predicted expansion.

    The remainder constant C is fitted from the two largest epsilons (where
    the remainder dominates rounding); every epsilon must then stay within
    C * slack_factor times the remainder power, so residuals decaying at the
    predicted order or faster pass.
    """
    epsilons = sorted(float(e) for e in epsilon_list)
    ground = ground_space(hopping, theta)
    coeffs = edge_coefficients(ground, potential, disorder)
    power = {CASE_LINEAR: 1.5, CASE_QUADRATIC: 3.0, CASE_NO_MOTION: None}[coeffs.case]

    results = [fiber_min_over_q(hopping, potential, disorder, theta, e) for e in epsilons]
    residuals = [r.value - edge_bound(coeffs, r.epsilon) for r in results]

    floor = 1e-12 * (1.0 + abs(ground.e0))
    if power is None:
        C = 0.0
        rows = tuple(
            SandwichRow(
                epsilon=r.epsilon,
                value=r.value,
                predicted=0.0,
                residual=res,
                lower_ok=res >= -floor,
                upper_ok=True,
            )
            for r, res in zip(results, residuals)
        )
        return SandwichReport(coeffs.case, coeffs, None, C, rows)

    C = max(abs(res) / (r.epsilon**power) for r, res in zip(results[-2:], residuals[-2:]))
    rows = []
    for r, res in zip(results, residuals):
        slack = slack_factor * C * r.epsilon**power + floor
        rows.append(
            SandwichRow(
                epsilon=r.epsilon,
                value=r.value,
                predicted=edge_bound(coeffs, r.epsilon),
                residual=res,
                lower_ok=res >= -slack,
                upper_ok=res <= slack,
            )
        )
    return SandwichReport(coeffs.case, coeffs, power, C, rows)


def _apply_lattice_operator(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    coupling: float,
    u: np.ndarray,
    n_cells: int,
) -> np.ndarray:
    """Apply H0 + coupling * (potential in every cell) to a truncated vector.

    One space dimension; ``u`` covers n_cells consecutive cells, zero outside.
    """
    geom = hopping.geometry
    if geom.d != 1:
        raise NotImplementedError("direct lattice application implemented for d = 1")
    N = geom.N
    size = n_cells * N
    y = np.zeros(size, dtype=complex)
    for (k, kp, m), value in hopping:
        shift = kp[0] + m[0] - k[0]
        xs = np.arange(k[0], size, N)
        targets = xs + shift
        valid = (targets >= 0) & (targets < size)
        y[xs[valid]] += value * u[targets[valid]]
    if coupling != 0.0:
        blocks = u.reshape(n_cells, N)
        y += coupling * (blocks @ potential.matrix.T).reshape(size)
    return y


def quasiperiodic_rayleigh(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    q: float,
    epsilon: float,
    theta,
    u0,
    n_list,
) -> list[float]:
    """Rayleigh quotients of truncated quasi-periodic extensions of a cell vector.

    The extension obeys u(x + k) = e^{-i theta.k} u(x) for sublattice shifts k
    and is cut to a window of n cells per dimension; the quotients converge to
    the fiber quotient at rate O(1/n).
    """
    geom = hopping.geometry
    theta = np.asarray(theta, dtype=float)
    u0 = np.asarray(u0, dtype=complex)
    if u0.shape != (geom.cell_size,) or not np.linalg.norm(u0):
        raise ValueError("u0 must be a nonzero cell vector")
    coupling = epsilon * q

    sites = hopping.geometry.cell_sites()
    norm0 = float(np.vdot(u0, u0).real)
    v_energy = float(np.vdot(u0, potential.matrix @ u0).real)

    quotients = []
    for n in n_list:
        n = int(n)
        # hopping energy counted per offset: a hop displacing by t cells
        # survives truncation in (n - |t_i|)+ window positions per dimension
        h_energy = 0.0 + 0.0j
        for (k, kp, m), value in hopping:
            t = np.array(m) // geom.N
            count = 1.0
            for ti in t:
                count *= max(0, n - abs(int(ti)))
            phase = np.exp(-1j * float(np.dot(theta, m)))
            i, j = geom.site_index(k), geom.site_index(kp)
            h_energy += np.conj(u0[i]) * value * phase * u0[j] * count
        total_cells = float(n**geom.d)
        quotient = (h_energy.real + coupling * v_energy * total_cells) / (norm0 * total_cells)
        quotients.append(float(quotient))
    return quotients


def fiber_quotient(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    q: float,
    epsilon: float,
    theta,
    u0,
) -> float:
    """The limiting value of quasiperiodic_rayleigh for the same data."""
    u0 = np.asarray(u0, dtype=complex)
    matrix = build_floquet(hopping, theta).matrix + epsilon * q * potential.matrix
    return float(np.vdot(u0, matrix @ u0).real / np.vdot(u0, u0).real)


SAMPLER_ENDPOINT = "EndpointBernoulli"
SAMPLER_UNIFORM = "Uniform"
SAMPLER_CONSTANT = "PeriodicConstant"


def _draw_couplings(
    disorder: DisorderSupport, n_cells: int, sampler: str, seed, q: float | None
) -> np.ndarray:
    if sampler == SAMPLER_CONSTANT:
        if q is None:
            raise ValueError("PeriodicConstant sampler needs q")
        return np.full(n_cells, float(q))
    rng = np.random.default_rng(seed)
    if sampler == SAMPLER_ENDPOINT:
        return rng.choice([disorder.s_minus, disorder.s_plus], size=n_cells)
    if sampler == SAMPLER_UNIFORM:
        return rng.uniform(disorder.s_minus, disorder.s_plus, size=n_cells)
    raise ValueError(f"unknown sampler {sampler!r}")


def assemble_torus(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    epsilon: float,
    L: int,
    omega: np.ndarray,
) -> sp.csr_matrix:
    """The random operator on a torus of L^d cells with periodic boundary."""
    geom = hopping.geometry
    d, N = geom.d, geom.N
    side = L * N
    n_sites = side**d
    cells = list(itertools.product(range(L), repeat=d))
    strides = [side ** (d - 1 - i) for i in range(d)]

    def site_id(coords) -> int:
        return sum((c % side) * s for c, s in zip(coords, strides))

    rows: list[int] = []
    cols: list[int] = []
    vals: list[complex] = []
    for ci, cell in enumerate(cells):
        base = [c * N for c in cell]
        for (k, kp, m), value in hopping:
            x = site_id([b + kk for b, kk in zip(base, k)])
            y = site_id([b + kk + mm for b, kk, mm in zip(base, kp, m)])
            rows.append(x)
            cols.append(y)
            vals.append(value)
        if epsilon != 0.0:
            w = epsilon * omega[ci]
            if w != 0.0:
                cell_sites = geom.cell_sites()
                ids = [site_id([b + kk for b, kk in zip(base, s)]) for s in cell_sites]
                for a, ia in enumerate(ids):
                    for b, ib in enumerate(ids):
                        v = potential.matrix[a, b]
                        if v != 0.0:
                            rows.append(ia)
                            cols.append(ib)
                            vals.append(w * v)
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n_sites, n_sites)).tocsr()
    # wraparound at L = 1, 2 folds distinct hops onto the same entry; the COO
    # constructor already accumulated duplicates
    return matrix


def box_min_eig(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    disorder: DisorderSupport,
    epsilon: float,
    L: int,
    sampler: str = SAMPLER_ENDPOINT,
    seed=0,
    q: float | None = None,
    dense_cutoff: int = DENSE_SITE_CUTOFF,
) -> BoxSpectrumSample:
    """Certified smallest eigenvalue of one disorder realization on a torus."""
    geom = hopping.geometry
    n_cells = L**geom.d
    omega = _draw_couplings(disorder, n_cells, sampler, seed, q)
    matrix = assemble_torus(hopping, potential, epsilon, L, omega)
    n_sites = matrix.shape[0]
    scale = float(abs(matrix).sum(axis=1).max())  # inf-norm bound on the operator norm

    if n_sites <= dense_cutoff:
        dense = matrix.toarray()
        eigenvalues, vectors = np.linalg.eigh(dense)
        lam = float(eigenvalues[0])
        vec = vectors[:, 0]
    else:
        try:
            lams, vecs = spla.eigsh(matrix, k=1, which="SA", tol=1e-12, maxiter=20000)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"iterative eigensolver failed on {n_sites} sites") from exc
        lam = float(lams[0])
        vec = vecs[:, 0]
    residual = float(np.linalg.norm(matrix @ vec - lam * vec))
    if residual > 1e-10 * max(scale, 1e-300):
        raise ConvergenceError(f"eigenpair residual {residual:.3e} exceeds certificate bound")
    return BoxSpectrumSample(L=L, omega=omega, epsilon=epsilon, lambda_min=lam)


def torus_dual_minimum(
    hopping: HoppingOperator,
    potential: SingleCellPotential,
    epsilon: float,
    q: float,
    L: int,
) -> float:
    """Fiber-decomposition value of the constant-coupling torus bottom.

    The torus of L^d cells is exactly the direct sum of fibers on the dual
    grid theta_j = 2 pi j / (L N).
    """
    geom = hopping.geometry
    axis = 2.0 * np.pi * np.arange(L) / (L * geom.N)
    best = np.inf
    for combo in itertools.product(axis, repeat=geom.d):
        theta = np.array(combo)
        matrix = build_floquet(hopping, theta).matrix + epsilon * q * potential.matrix
        best = min(best, float(np.linalg.eigvalsh(matrix)[0]))
    return best


def fit_exponent(epsilons, values) -> ExponentFit:
    """Least-squares slope of log(-value) against log(epsilon)."""
    epsilons = np.asarray(list(epsilons), dtype=float)
    values = np.asarray(list(values), dtype=float)
    usable = values < 0
    excluded = int(np.count_nonzero(~usable))
    if excluded:
        import warnings

        warnings.warn(f"fit_exponent: excluded {excluded} nonnegative value(s)", stacklevel=2)
    eps = epsilons[usable]
    vals = values[usable]
    if len(eps) < 3:
        raise ValueError(f"need at least 3 negative values to fit, have {len(eps)}")
    x = np.log(eps)
    y = np.log(-vals)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ExponentFit(
        epsilons=eps,
        values=vals,
        eta=float(slope),
        prefactor=float(np.exp(intercept)),
        r_squared=r2,
        excluded=excluded,
    )


QUARTIC_TRIAL_K = 4.0


def quartic_required_n(epsilon: float, xi: float, K: float = QUARTIC_TRIAL_K) -> int:
    """Window size keeping truncation error under a tenth of the target scale."""
    return int(np.ceil(K * epsilon ** -(1.0 + 2.0 * xi)))


def quartic_trial_energy(
    epsilon: float,
    xi: float,
    n: int | None = None,
    K: float = QUARTIC_TRIAL_K,
) -> float:
    """Rayleigh quotient of the two-momentum trial state for the quartic model.

    The trial state superposes the theta = 0 ground state and an
    epsilon^xi-weighted copy at theta = epsilon^xi, truncated to n cells, with
    constant coupling q = 1.
    """
    if xi <= 0.25:
        raise ValueError("xi must exceed 1/4")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    required = quartic_required_n(max(epsilon, 1e-6), xi, K)
    if n is None:
        n = required
    elif epsilon > 0 and n < required:
        raise ValueError(
            f"n={n} too small for epsilon={epsilon}, xi={xi}: truncation error "
            f"dominates the target scale; need n >= {required}"
        )

    hopping, potential, _ = preset_model("quartic")
    N = hopping.geometry.N
    eta = epsilon**xi

    def truncated_state(theta: float) -> np.ndarray:
        # ground fiber state (1, e^{-i theta}, e^{-2i theta})/sqrt(3) extended
        # by u(x + 3) = e^{-3 i theta} u(x): a plane wave e^{-i theta x}
        xs = np.arange(n * N)
        return np.exp(-1j * theta * xs) / np.sqrt(3.0)

    u = truncated_state(0.0) + eta * truncated_state(eta)
    y = _apply_lattice_operator(hopping, potential, epsilon * 1.0, u, n)
    return float(np.vdot(u, y).real / np.vdot(u, u).real)


KS_FOLDED = "folded"
KS_ONE_MINUS_COS = "one_minus_cos"
KS_LITERAL = "literal"


def _ks_dispersion(theta: np.ndarray, N: int, variant: str) -> float:
    if variant == KS_ONE_MINUS_COS:
        return float(np.sum(1.0 - np.cos(theta)))
    if variant == KS_LITERAL:
        return float(2 * len(theta) - np.sum(np.cos(theta)))
    if variant == KS_FOLDED:
        best = np.inf
        for branch in itertools.product(range(N), repeat=len(theta)):
            shifted = theta + 2.0 * np.pi * np.array(branch) / N
            best = min(best, float(np.sum(2.0 * (1.0 - np.cos(shifted)))))
        return best
    raise ValueError(f"unknown dispersion variant {variant!r}")


@dataclass(frozen=True)
class KirschSimonReport:
    a_minus: float
    a_plus: float
    variant: str
    violations: tuple[dict, ...]
    n_points: int

    @property
    def passed(self) -> bool:
        return not self.violations


def kirsch_simon_sandwich(
    hopping: HoppingOperator,
    theta_grid,
    variant: str = KS_FOLDED,
    tol: float = 1e-9,
) -> KirschSimonReport:
    """Two-sided comparison of the lowest band with the free dispersion.

    The band motion E0(theta) - E0(0) of -Delta + W is sandwiched between
    (a_minus/a_plus)^2 and (a_plus/a_minus)^2 times a free-Laplacian
    dispersion factor, where a_minus/a_plus are the extreme entries of the
    positive ground state at theta = 0.
    """
    if alloy_periodic_background(hopping) is None:
        raise ValueError("sandwich check applies only to operators of the form -Delta + W")
    geom = hopping.geometry
    theta0 = np.zeros(geom.d)
    eigenvalues, vectors = fiber_eigh(build_floquet(hopping, theta0))
    psi = vectors[:, 0]
    pivot = psi[int(np.argmax(np.abs(psi)))]
    psi = psi * (np.conj(pivot) / abs(pivot))
    if np.abs(psi.imag).max() > 1e-10 or psi.real.min() <= 0:
        raise ConvergenceError("ground state at theta = 0 is not strictly positive")
    a_minus = float(psi.real.min())
    a_plus = float(psi.real.max())
    e0 = float(eigenvalues[0])
    lo_factor = (a_minus / a_plus) ** 2
    hi_factor = (a_plus / a_minus) ** 2

    violations = []
    count = 0
    for theta in theta_grid:
        theta = np.asarray(theta, dtype=float)
        count += 1
        motion = float(np.linalg.eigvalsh(build_floquet(hopping, theta).matrix)[0]) - e0
        disp = _ks_dispersion(theta, geom.N, variant)
        lower = lo_factor * disp
        upper = hi_factor * disp
        if motion < lower - tol or motion > upper + tol:
            violations.append(
                {"theta": theta.tolist(), "motion": motion, "lower": lower, "upper": upper}
            )
    return KirschSimonReport(
        a_minus=a_minus,
        a_plus=a_plus,
        variant=variant,
        violations=tuple(violations),
        n_points=count,
    )
