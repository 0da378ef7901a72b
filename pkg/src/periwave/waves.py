"""Traveling-wave profiles: Newton solver, closed forms, and families.

The profile equation is ``M phi + omega phi - f(phi) + A = 0`` for the
standard evolution and ``omega M phi + (omega - 1) phi - f(phi) + A = 0``
for the regularized one.  Translation degeneracy is removed by solving on
the even (cosine) subspace about x = 0, so no phase conditions or Lagrange
multipliers are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import elliptic
from .spectral import (
    DispersionSymbol,
    Field,
    PeriodicGrid,
    apply_multiplier,
    integral,
    multiplier_matrix,
)

__all__ = [
    "Nonlinearity",
    "Constraint",
    "TravelingWave",
    "WaveFamily",
    "SolverError",
    "ConvergenceError",
    "BifurcationError",
    "DegenerateBranchError",
    "ResolutionError",
    "NearSingularError",
    "residual",
    "solve_newton",
    "cnoidal_wave",
    "ilw_wave",
    "bbm_dnoidal_wave",
    "constant_state",
    "continue_family",
    "param_derivatives",
]


class SolverError(RuntimeError):
    """Base class for wave-solver failures."""


class ConvergenceError(SolverError):
    pass


class BifurcationError(SolverError):
    """Singular Jacobian on the symmetric subspace."""


class DegenerateBranchError(SolverError):
    """Newton collapsed onto the constant-state branch."""


class ResolutionError(SolverError):
    """Requested construction is not resolved at the given truncation."""


class NearSingularError(SolverError):
    """Linearized operator is numerically singular beyond its kernel."""


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Nonlinearity:
    """Flux f(u), its derivative, and its primitive W with W' = f.

    ``degree`` is the polynomial degree of f, used to decide when product
    evaluation needs dealiasing by zero padding.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]
    primitive: Callable[[np.ndarray], np.ndarray]
    degree: int
    params: tuple = ()

    @classmethod
    def power_law(cls, p: int, c: float = 1.0) -> "Nonlinearity":
        """f(u) = c u^(p+1) / (p+1); p = 1, c = 1 is the KdV flux u^2/2."""
        if p < 1:
            raise ValueError(f"power-law exponent must be >= 1, got {p}")
        p = int(p)

        def f(u):
            return c * u ** (p + 1) / (p + 1)

        def fprime(u):
            return c * u**p

        def primitive(u):
            return c * u ** (p + 2) / ((p + 1) * (p + 2))

        return cls(f"power(p={p},c={c:g})", f, fprime, primitive, p + 1, (p, c))

    @classmethod
    def kdv(cls) -> "Nonlinearity":
        return cls.power_law(1, 1.0)

    @classmethod
    def quadratic(cls) -> "Nonlinearity":
        """f(u) = u^2 (the ILW/BO convention)."""
        return cls(
            "quadratic",
            lambda u: u * u,
            lambda u: 2.0 * u,
            lambda u: u**3 / 3.0,
            2,
        )

    def is_kdv_flux(self) -> bool:
        return self.params == (1, 1.0)


def _dealiased_apply(values: np.ndarray, func, degree: int) -> np.ndarray:
    """Evaluate a degree-d polynomial map alias-free by zero padding."""
    N = values.shape[0]
    M = int(math.ceil(N * (degree + 1) / 2))
    M += M % 2
    if M <= N:
        return func(values)
    spec = np.fft.fft(values)
    padded = np.zeros(M, dtype=complex)
    half = N // 2
    padded[:half] = spec[:half]
    padded[-half:] = spec[-half:]
    up = np.fft.ifft(padded).real * (M / N)
    out = np.fft.fft(func(up)) * (N / M)
    spec_out = np.zeros(N, dtype=complex)
    spec_out[:half] = out[:half]
    spec_out[-half:] = out[-half:]
    return np.fft.ifft(spec_out).real


def _eval_flux(nl: Nonlinearity, values: np.ndarray, dealias: bool) -> np.ndarray:
    if dealias and nl.degree >= 3:
        return _dealiased_apply(values, nl.f, nl.degree)
    return nl.f(values)


# ---------------------------------------------------------------------------
# constraints and waves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    """How the integration constant A is pinned during a solve."""

    mode: str  # "fixed_A" | "zero_mean" | "fixed_mean"
    value: float = 0.0

    @classmethod
    def fixed_A(cls, A: float) -> "Constraint":
        return cls("fixed_A", float(A))

    @classmethod
    def zero_mean(cls) -> "Constraint":
        return cls("zero_mean", 0.0)

    @classmethod
    def fixed_mean(cls, target: float) -> "Constraint":
        return cls("fixed_mean", float(target))

    def target_mean(self) -> float:
        return 0.0 if self.mode == "zero_mean" else self.value


@dataclass(frozen=True)
class TravelingWave:
    profile: Field
    omega: float
    A: float
    symbol: DispersionSymbol
    nonlinearity: Nonlinearity
    variant: str = "standard"
    residual_norm: float = float("nan")
    constraint: str = ""
    newton_history: tuple = ()

    def __post_init__(self):
        if self.variant not in ("standard", "regularized"):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.profile.grid

    @property
    def sobolev_index(self) -> float:
        """The energy-space exponent m/2 of the underlying symbol."""
        return 0.5 * self.symbol.order


def _linear_coefficients(variant: str, omega: float) -> tuple[float, float]:
    """(a, b) such that the linear part of the profile map is a*M + b*I."""
    if variant == "standard":
        return 1.0, omega
    return omega, omega - 1.0


def residual(w: TravelingWave) -> Field:
    """Pointwise residual of the profile equation for the wave's variant."""
    a, b = _linear_coefficients(w.variant, w.omega)
    Mphi = apply_multiplier(w.symbol, w.profile)
    vals = a * Mphi.values + b * w.profile.values - w.nonlinearity.f(w.profile.values) + w.A
    return w.profile.with_values(vals)


def constant_state(
    grid: PeriodicGrid,
    c: float,
    omega: float,
    symbol: DispersionSymbol,
    nonlinearity: Nonlinearity,
    variant: str = "standard",
) -> TravelingWave:
    """The trivial branch phi == c with A chosen so the profile equation holds."""
    _, b = _linear_coefficients(variant, omega)
    A = float(nonlinearity.f(np.asarray(c)) - b * c)
    w = TravelingWave(
        profile=Field.constant(grid, c),
        omega=omega,
        A=A,
        symbol=symbol,
        nonlinearity=nonlinearity,
        variant=variant,
        residual_norm=0.0,
        constraint="constant",
    )
    return replace(w, residual_norm=residual(w).sup_norm())


# ---------------------------------------------------------------------------
# Newton solver on the even subspace
# ---------------------------------------------------------------------------

def _symmetrize(values: np.ndarray) -> np.ndarray:
    reflected = np.concatenate(([values[0]], values[:0:-1]))
    return 0.5 * (values + reflected)


def _embed_even(v: np.ndarray, N: int) -> np.ndarray:
    """Even field from its values on nodes 0..N/2."""
    return np.concatenate((v, v[-2:0:-1]))


def solve_newton(
    guess: Field,
    omega: float,
    constraint: Constraint,
    symbol: DispersionSymbol,
    nonlinearity: Nonlinearity,
    tol: float = 1e-10,
    max_iter: int = 50,
    variant: str = "standard",
    dealias: bool = True,
) -> TravelingWave:
    """Newton iteration for the profile equation on the cosine subspace.

    Under ``fixed_A`` the constant A is prescribed; under ``zero_mean`` or
    ``fixed_mean`` A joins the unknowns and the mean of phi supplies the
    extra equation.  The guess is symmetrized about x = 0 first; an even
    profile makes the translation mode phi' odd, hence invisible to the
    reduced Jacobian.
    """
    grid = guess.grid
    N = grid.size
    half = N // 2
    K = half + 1

    v = _symmetrize(guess.values)[: K].copy()
    if np.ptp(v) < 1e-14 * (1.0 + np.abs(v).max()):
        raise ValueError("guess is constant; the trivial branch is excluded")

    a_M, b_lin = _linear_coefficients(variant, omega)
    theta_mat = multiplier_matrix(symbol, grid)
    lin_mat = a_M * theta_mat + b_lin * np.eye(N)

    solve_A = constraint.mode in ("zero_mean", "fixed_mean")
    A = constraint.value if constraint.mode == "fixed_A" else 0.0
    target_mean = constraint.target_mean()

    # row weights of mean(phi) with respect to the reduced coordinates
    mean_row = np.full(K, 2.0 * grid.spacing / grid.length)
    mean_row[0] = grid.spacing / grid.length
    mean_row[-1] = grid.spacing / grid.length

    history = []
    for _ in range(max_iter):
        phi = _embed_even(v, N)
        with np.errstate(over="ignore", invalid="ignore"):
            res_full = lin_mat @ phi - _eval_flux(nonlinearity, phi, dealias) + A
        sup = float(np.abs(res_full).max())
        if not np.isfinite(sup):
            raise ConvergenceError(f"Newton iterates diverged (omega={omega})")
        history.append(sup)
        if solve_A:
            mean_defect = float(grid.spacing * phi.sum() / grid.length - target_mean)
        else:
            mean_defect = 0.0
        if sup <= tol and abs(mean_defect) <= tol:
            break

        with np.errstate(over="ignore", invalid="ignore"):
            jac_full = lin_mat - np.diag(nonlinearity.fprime(phi))
        jac = jac_full[:K, :K].copy()
        jac[:, 1:half] += jac_full[:K, : half : -1]

        try:
            if solve_A:
                aug = np.zeros((K + 1, K + 1))
                aug[:K, :K] = jac
                aug[:K, K] = 1.0
                aug[K, :K] = mean_row
                rhs = np.concatenate((res_full[:K], [mean_defect]))
                step = np.linalg.solve(aug, rhs)
                v -= step[:K]
                A -= step[K]
            else:
                v -= np.linalg.solve(jac, res_full[:K])
        except np.linalg.LinAlgError as exc:
            raise BifurcationError(
                f"singular Jacobian on the symmetric subspace (omega={omega})"
            ) from exc
        if not np.all(np.isfinite(v)):
            raise ConvergenceError(f"Newton iterates diverged (omega={omega})")
    else:
        raise ConvergenceError(
            f"no convergence in {max_iter} iterations (omega={omega}, "
            f"last residual {history[-1]:.3e})"
        )

    phi = _embed_even(v, N)
    if np.ptp(phi) < 1e-10 * (1.0 + np.abs(phi).max()):
        raise DegenerateBranchError(
            f"Newton collapsed to the constant branch (omega={omega})"
        )
    wave = TravelingWave(
        profile=Field(grid, phi),
        omega=float(omega),
        A=float(A),
        symbol=symbol,
        nonlinearity=nonlinearity,
        variant=variant,
        constraint=constraint.mode,
        newton_history=tuple(history),
    )
    res_norm = residual(wave).sup_norm()
    if res_norm > 10.0 * max(tol, 1e-12):
        raise ConvergenceError(
            f"converged iterate fails the pointwise residual check: {res_norm:.3e}"
        )
    return replace(wave, residual_norm=res_norm)


# ---------------------------------------------------------------------------
# closed-form reference waves
# ---------------------------------------------------------------------------

def _dn_squared_profile(L: float, k: float, N: int):
    """Samples of dn^2(2K x / L, k) - E/K on the standard grid, plus constants."""
    K = elliptic.complete_K(k)
    E = elliptic.complete_E(k)
    e = E / K
    alpha = 2.0 * K / L
    grid = PeriodicGrid(L, N)
    _, _, dn = elliptic.jacobi_sn_cn_dn(alpha * grid.nodes, k)
    return grid, dn**2 - e, alpha, e


def cnoidal_wave(L: float, k, N: int, residual_tol: float = 1e-9) -> TravelingWave:
    """Zero-mean dnoidal-squared wave of the KdV flux f(u) = u^2/2.

    The ansatz phi = beta (dn^2(2K x / L, k) - E/K) solves the profile
    equation with M = -d^2/dx^2 once the dn^4, dn^2 and constant terms are
    matched, which forces

        beta  = 12 alpha^2,           alpha = 2K/L,
        omega = 4 alpha^2 (2 - k^2 - 3 E/K),
        A     = -2 beta alpha^2 (1 - k^2) + omega beta E/K + beta^2 E^2 / (2 K^2).

    These relations are certified here by the pointwise residual check; A
    also equals (1/2L) integral phi^2 because the profile has zero mean.
    """
    k = float(k)
    if not (0.0 < k < 1.0):
        raise ValueError(f"cnoidal modulus must lie in (0, 1), got {k}")
    grid, shape, alpha, e = _dn_squared_profile(L, k, N)
    beta = 12.0 * alpha**2
    omega = 4.0 * alpha**2 * (2.0 - k * k - 3.0 * e)
    A = -2.0 * beta * alpha**2 * (1.0 - k * k) + omega * beta * e + 0.5 * (beta * e) ** 2
    wave = TravelingWave(
        profile=Field(grid, beta * shape),
        omega=omega,
        A=A,
        symbol=DispersionSymbol.second_derivative(L),
        nonlinearity=Nonlinearity.kdv(),
        constraint="zero_mean",
    )
    res_norm = residual(wave).sup_norm()
    if res_norm > residual_tol:
        raise ResolutionError(
            f"cnoidal residual {res_norm:.3e} above {residual_tol:.1e}; increase N"
        )
    return replace(wave, residual_norm=res_norm)


def bbm_dnoidal_wave(L: float, k, N: int, residual_tol: float = 1e-9) -> TravelingWave:
    """Zero-mean dnoidal-squared wave of the regularized (BBM-type) equation.

    Same ansatz as ``cnoidal_wave`` applied to
    omega M phi + (omega - 1) phi - phi^2/2 + A = 0 with M = -d^2/dx^2,
    which yields omega = 1 / (1 - 4 alpha^2 (2 - k^2 - 3E/K)) and
    beta = 12 omega alpha^2.
    """
    k = float(k)
    if not (0.0 < k < 1.0):
        raise ValueError(f"dnoidal modulus must lie in (0, 1), got {k}")
    grid, shape, alpha, e = _dn_squared_profile(L, k, N)
    denom = 1.0 - 4.0 * alpha**2 * (2.0 - k * k - 3.0 * e)
    if abs(denom) < 1e-12:
        raise SolverError("degenerate dnoidal speed (denominator vanished)")
    omega = 1.0 / denom
    beta = 12.0 * omega * alpha**2
    A = (
        -2.0 * omega * beta * alpha**2 * (1.0 - k * k)
        + (omega - 1.0) * beta * e
        + 0.5 * (beta * e) ** 2
    )
    wave = TravelingWave(
        profile=Field(grid, beta * shape),
        omega=omega,
        A=A,
        symbol=DispersionSymbol.second_derivative(L),
        nonlinearity=Nonlinearity.kdv(),
        variant="regularized",
        constraint="zero_mean",
    )
    res_norm = residual(wave).sup_norm()
    if res_norm > residual_tol:
        raise ResolutionError(
            f"dnoidal residual {res_norm:.3e} above {residual_tol:.1e}; increase N"
        )
    return replace(wave, residual_norm=res_norm)


def ilw_wave(
    L: float,
    delta: float,
    k,
    N: int,
    residual_tol: float = 1e-8,
    tail_tol: float = 1e-12,
) -> TravelingWave:
    """Zero-mean intermediate-long-wave profile from the Jacobi Zeta series.

    The complex-shifted Zeta combination reduces to the real cosine series

        phi(x) = sum_{n>=1} d_n cos(2 pi n x / L),
        d_n = (8 pi / L) q^n sinh(2 pi n delta / L) / (1 - q^{2n}),

    because sin at argument shifted by +-i delta produces conjugate
    sinh/cosh factors whose difference is real and even.  The series
    converges only while 2 pi delta / L < pi K'/K (the Zeta poles stay off
    the evaluation strip); outside that window a ResolutionError is raised.
    The speed omega is the least-squares minimizer of the profile-equation
    residual with A = (1/L) integral phi^2, then certified pointwise.
    """
    k = float(k)
    if not (0.0 < k < 1.0):
        raise ValueError(f"ilw modulus must lie in (0, 1), got {k}")
    if delta <= 0:
        raise ValueError(f"ilw depth must be positive, got {delta}")
    grid = PeriodicGrid(L, N)
    q = elliptic.nome(k)
    growth = q * math.exp(2.0 * math.pi * delta / L)
    if growth >= 1.0 - 1e-9:
        raise ResolutionError(
            f"zeta series diverges for delta={delta}, L={L}, k={k} "
            f"(needs delta < L K'/(2K) = {-L * math.log(q) / (2 * math.pi):.4f})"
        )
    n_cut = grid.size // 2 - 1
    n = np.arange(1, n_cut + 1, dtype=float)
    d = (8.0 * math.pi / L) * q**n * np.sinh(2.0 * math.pi * n * delta / L) / (1.0 - q ** (2 * n))
    scale = np.abs(d).max()
    tail = abs(d[-1]) * growth / (1.0 - growth)
    if tail > tail_tol * scale:
        raise ResolutionError(
            f"cosine-series tail {tail:.2e} above {tail_tol:.1e} x max coefficient; increase N"
        )
    spectrum = np.zeros(N, dtype=complex)
    spectrum[1 : n_cut + 1] = 0.5 * d * N
    spectrum[-1 : -n_cut - 1 : -1] = 0.5 * d * N
    phi = Field.from_spectrum(grid, spectrum)

    symbol = DispersionSymbol.ilw(delta, L)
    nl = Nonlinearity.quadratic()
    A = integral(phi * phi) / L
    Mphi = apply_multiplier(symbol, phi)
    fixed_part = Mphi.values - phi.values**2 + A
    omega = -float(phi.values @ fixed_part) / float(phi.values @ phi.values)
    wave = TravelingWave(
        profile=phi,
        omega=omega,
        A=A,
        symbol=symbol,
        nonlinearity=nl,
        constraint="zero_mean",
    )
    res_norm = residual(wave).sup_norm()
    if res_norm > residual_tol:
        raise ResolutionError(
            f"ilw residual {res_norm:.3e} above {residual_tol:.1e}; increase N"
        )
    return replace(wave, residual_norm=res_norm)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveFamily:
    """Ordered waves along a one-parameter sweep sharing grid/symbol/flux."""

    waves: tuple
    parameter: str
    values: np.ndarray
    max_profile_jump: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self) -> int:
        return len(self.waves)

    def __iter__(self):
        return iter(self.waves)

    def __getitem__(self, i) -> TravelingWave:
        return self.waves[i]

    @property
    def omegas(self) -> np.ndarray:
        return np.array([w.omega for w in self.waves])

    @property
    def constants(self) -> np.ndarray:
        return np.array([w.A for w in self.waves])


def continue_family(
    seed: TravelingWave,
    parameter: str,
    values: Sequence[float],
    constraint: Constraint | None = None,
    omega_map: Callable[[float], float] | None = None,
    A_map: Callable[[float], float] | None = None,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> WaveFamily:
    """Natural-parameter continuation: each converged wave seeds the next.

    ``parameter`` is "omega" (constraint carried along), "A" (fixed-A
    solves at the seed speed), or "xi" with explicit omega/A maps.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("parameter grid must be a nonempty 1-D sequence")

    if parameter == "omega":
        if constraint is None:
            constraint = (
                Constraint.fixed_A(seed.A)
                if seed.constraint == "fixed_A"
                else Constraint.zero_mean()
            )
    elif parameter == "A":
        pass
    elif parameter == "xi":
        if omega_map is None or A_map is None:
            raise ValueError("xi-continuation needs omega_map and A_map")
    else:
        raise ValueError(f"unknown continuation parameter {parameter!r}")

    waves = []
    guess = seed.profile
    max_jump = 0.0
    for value in values:
        if parameter == "omega":
            omega, con = float(value), constraint
        elif parameter == "A":
            omega, con = seed.omega, Constraint.fixed_A(float(value))
        else:
            omega, con = float(omega_map(value)), Constraint.fixed_A(float(A_map(value)))
        try:
            w = solve_newton(
                guess,
                omega,
                con,
                seed.symbol,
                seed.nonlinearity,
                tol=tol,
                max_iter=max_iter,
                variant=seed.variant,
            )
        except SolverError as exc:
            raise type(exc)(f"continuation failed at {parameter}={value}: {exc}") from exc
        if waves:
            max_jump = max(max_jump, (w.profile - waves[-1].profile).sup_norm())
        waves.append(w)
        guess = w.profile
    return WaveFamily(tuple(waves), parameter, values, max_jump)


# ---------------------------------------------------------------------------
# parameter derivatives along the (omega, A) surface
# ---------------------------------------------------------------------------

def speed_gradient_field(w: TravelingWave) -> Field:
    """Right-hand side -d(residual)/d(omega): phi for the standard variant,
    M phi + phi for the regularized one."""
    if w.variant == "standard":
        return w.profile
    return apply_multiplier(w.symbol, w.profile) + w.profile


def param_derivatives(w: TravelingWave, lin, zero_tol: float | None = None) -> tuple[Field, Field]:
    """Surface derivatives eta = d phi/d omega and beta = d phi/d A.

    Obtained from the linear solves L eta = -(speed gradient) and
    L beta = -1 on the orthogonal complement of the translation kernel.
    Requires the zero eigenvalue (when present) to be simple; a second
    near-zero eigenvalue raises NearSingularError.  ``zero_tol`` overrides
    the operator's kernel band (useful near bifurcation points, where the
    default band can swallow a physical small eigenvalue).
    """
    tol = lin.zero_tol if zero_tol is None else float(zero_tol)
    lam = np.sort(np.abs(lin.eigenvalues))
    if lam.size >= 2 and lam[1] <= 10.0 * tol:
        raise NearSingularError(
            f"second-smallest |eigenvalue| {lam[1]:.3e} within the kernel band"
        )
    g = speed_gradient_field(w)
    eta = lin.solve_on_complement(-g, zero_tol=tol)
    beta = lin.solve_on_complement(Field.constant(w.grid, -1.0), zero_tol=tol)
    return eta, beta
