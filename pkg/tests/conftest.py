import math

import numpy as np
import pytest

from periwave import elliptic
from periwave.spectral import DispersionSymbol, Field, PeriodicGrid
from periwave.waves import (
    Constraint,
    Nonlinearity,
    cnoidal_wave,
    bbm_dnoidal_wave,
    ilw_wave,
    solve_newton,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def kdv_stable():
    """Cnoidal wave in the certifiable regime (omega > 0)."""
    return cnoidal_wave(TWO_PI, 0.99, 256)


@pytest.fixture(scope="session")
def kdv_midk():
    """Cnoidal wave on the omega < 0 part of the zero-mean branch."""
    return cnoidal_wave(TWO_PI, 0.9, 256)


@pytest.fixture(scope="session")
def ilw_stable():
    return ilw_wave(TWO_PI, 1.0, 0.97, 256)


@pytest.fixture(scope="session")
def bbm_wave():
    return bbm_dnoidal_wave(TWO_PI, 0.99, 256)


def make_gkdv2_wave(N=128):
    """mKdV (p=2) wave from the exact cn ansatz, polished by Newton at A = 0."""
    L = TWO_PI
    grid = PeriodicGrid(L, N)
    k = 0.8
    K = elliptic.complete_K(k)
    alpha = 4.0 * K / L
    amp = math.sqrt(6.0) * k * alpha
    omega = alpha * alpha * (2.0 * k * k - 1.0)
    _, cn, _ = elliptic.jacobi_sn_cn_dn(alpha * grid.nodes, k)
    return solve_newton(
        Field(grid, amp * cn),
        omega,
        Constraint.fixed_A(0.0),
        DispersionSymbol.second_derivative(L),
        Nonlinearity.power_law(2),
        tol=1e-11,
    )


def make_gkdv3_wave(N=128):
    L = TWO_PI
    grid = PeriodicGrid(L, N)
    return solve_newton(
        Field(grid, 1.2 * np.cos(grid.nodes)),
        -1.1,
        Constraint.fixed_A(0.0),
        DispersionSymbol.second_derivative(L),
        Nonlinearity.power_law(3),
        tol=1e-11,
    )


def make_bo_wave(N=128):
    L = TWO_PI
    grid = PeriodicGrid(L, N)
    return solve_newton(
        Field(grid, np.cos(grid.nodes)),
        -0.5,
        Constraint.zero_mean(),
        DispersionSymbol.hilbert_derivative(L),
        Nonlinearity.quadratic(),
        tol=1e-11,
    )


@pytest.fixture(scope="session")
def gkdv2_wave():
    return make_gkdv2_wave()


@pytest.fixture(scope="session")
def gkdv3_wave():
    return make_gkdv3_wave()


@pytest.fixture(scope="session")
def bo_wave():
    return make_bo_wave()


@pytest.fixture(scope="session")
def wave_corpus(kdv_stable, gkdv2_wave, gkdv3_wave, bo_wave, ilw_stable):
    """The identity-suite corpus: KdV, gKdV p=2,3, BO, ILW."""
    return {
        "kdv": kdv_stable,
        "gkdv_p2": gkdv2_wave,
        "gkdv_p3": gkdv3_wave,
        "bo": bo_wave,
        "ilw": ilw_stable,
    }
