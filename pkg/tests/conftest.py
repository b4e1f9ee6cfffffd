import itertools

import numpy as np

from bandedge.model import (
    DisorderSupport,
    HoppingOperator,
    LatticeGeometry,
    SingleCellPotential,
)


def random_hopping(rng: np.random.Generator, d: int = 1, N: int = 2) -> HoppingOperator:
    """Random Hermitian finite-range hopping table on the cell of period N."""
    geom = LatticeGeometry(d, N)
    sites = geom.cell_sites()
    offsets = [tuple(o) for o in itertools.product((-N, 0, N), repeat=d)]
    raw = {}
    for k in sites:
        for kp in sites:
            for m in offsets:
                raw[(k, kp, m)] = complex(rng.standard_normal(), rng.standard_normal())
    coeffs = {}
    for (k, kp, m), value in raw.items():
        mirror = raw[(kp, k, tuple(-x for x in m))]
        coeffs[(k, kp, m)] = 0.5 * (value + np.conj(mirror))
    return HoppingOperator(geom, coeffs)


def random_potential(rng: np.random.Generator, size: int) -> SingleCellPotential:
    raw = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return SingleCellPotential(0.5 * (raw + raw.conj().T))


def sign_changing(rng: np.random.Generator) -> DisorderSupport:
    return DisorderSupport(
        -float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.2, 2.0)), DisorderSupport.SIGN_CHANGING
    )


def no_motion_model():
    """Decoupled site-0 chain plus an isolated site-1 level; V kills the ground space."""
    geom = LatticeGeometry(1, 2)
    coeffs = {
        ((0,), (0,), (0,)): 2.0,
        ((0,), (0,), (2,)): -1.0,
        ((0,), (0,), (-2,)): -1.0,
        ((1,), (1,), (0,)): 5.0,
    }
    hopping = HoppingOperator(geom, coeffs)
    potential = SingleCellPotential(np.diag([0.0, 1.0]))
    disorder = DisorderSupport(-1.0, 1.0, DisorderSupport.SIGN_CHANGING)
    return hopping, potential, disorder
