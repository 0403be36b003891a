"""Explicit conjugation of the cocycle at E = 0 and its perturbation.

With g solving the homological equation

    g(theta + w) - g(theta) = f(theta + w),                    (first stage)

set k(theta) = -exp(-K g(theta - w) - K g(theta)), k_hat = mean(k), and
solve

    h(theta + w) - h(theta) = k_hat - k(theta)                 (second stage)

for h.  Then

    C(theta) = [[1, h(theta)], [0, 1]]
             . [[0, exp(-K g(theta-w))], [-exp(K g(theta-w)), exp(K g(theta))]]

conjugates the E = 0 cocycle to the constant A_0 = [[1, k_hat], [0, 1]], and
for general E the conjugated cocycle is A_0 + E F(theta) with the rank-one
F(theta) = C(theta+w) [[-1, 0], [0, 0]] C(theta)^{-1}.

Each Fourier division costs a strip: if f lives on |Im z| < h the solutions
live on h - beta and h - 2 beta, where beta is the frequency's approximation
exponent — only its finite-stage proxy is computable, so every report
carries it.  C is kept factored through g and h (never entrywise), which
makes det C = 1 structural rather than numerical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cocycle import SL2Matrix, _rotation_scan, lyapunov_scan
from .errors import DomainError, ResolutionError, SmallDivisorError
from .fourier import FourierSeries, ModelParams, decay_certificate_ok, exp_of_series, zero_series
from .frequencies import Frequency, beta

DIVISOR_FLOOR = 1e-10
_RESIDUAL_GRID = 4096
_WIDTH_NUDGE = 1.0 - 1e-9  # evaluate norms just inside a strip boundary


def _beta_budget(omega: Frequency) -> float:
    """Finite-stage beta proxy used for strip accounting (0 when the stored
    expansion is too short to estimate anything)."""
    if omega.exact or len(omega.cf) < 3:
        return 0.0
    return beta(omega, min(30, len(omega.cf))).value


def solve_homological(rhs: FourierSeries, omega: Frequency, shift_arg: bool,
                      divisor_floor: float = DIVISOR_FLOOR, *,
                      stage: str = "") -> FourierSeries:
    """Solve a cohomological equation by coefficient-wise Fourier division.

    shift_arg=True solves  y(theta+w) - y(theta) = rhs(theta+w):
        y_k = rhs_k e^{2 pi i k w} / (e^{2 pi i k w} - 1).
    shift_arg=False solves y(theta+w) - y(theta) = -rhs(theta):
        y_k = -rhs_k / (e^{2 pi i k w} - 1)
    (the second-stage equation with rhs = k - k_hat).  In both cases the
    mean of y is gauged to zero and rhs must have zero mean to be solvable.

    The output strip is the input strip minus the frequency's beta proxy.
    Any retained mode whose divisor magnitude 2|sin(pi k w)| falls below
    divisor_floor is a hard error — silently dropping it would fake
    solvability for frequencies too well approximated by rationals.
    """
    if not (divisor_floor > 0.0):
        raise DomainError("divisor_floor must be positive")
    scale = max(1.0, float(np.max(np.abs(rhs.coeffs))))
    if abs(rhs.mean) > 1e-12 * scale:
        raise DomainError(
            f"homological rhs must have zero mean, got {rhs.mean!r}"
        )
    beta_used = _beta_budget(omega)
    width = rhs.strip_h - beta_used
    if width <= 0.0:
        raise DomainError(
            f"strip budget exhausted: input width {rhs.strip_h} does not "
            f"exceed the beta proxy {beta_used:.6g}"
        )
    m = rhs.order
    if m == 0:
        return zero_series(width)
    ks = np.arange(-m, m + 1)
    phases = omega.mode_phases(ks)
    for k in range(1, m + 1):
        if rhs.coefficient(k) == 0 and rhs.coefficient(-k) == 0:
            continue
        dist = omega.mode_distance(k)
        divisor = 2.0 * math.sin(math.pi * dist)
        if divisor < divisor_floor:
            raise SmallDivisorError(k, divisor, omega.nearest_convergent_q(k),
                                    divisor_floor, stage=stage)
    denom = phases - 1.0
    denom[m] = 1.0  # k = 0 placeholder; the mean is gauged to zero below
    if shift_arg:
        out = rhs.coeffs * phases / denom
    else:
        out = -rhs.coeffs / denom
    out[m] = 0.0
    solution = FourierSeries(out, width)
    if not decay_certificate_ok(solution, width * _WIDTH_NUDGE, grid=4096):
        raise ResolutionError(
            f"{stage or 'homological solve'}: decay certificate failed at "
            f"width {width:.6g}"
        )
    return solution


def _sup_abs(series: FourierSeries, grid: int) -> float:
    th = np.arange(grid) / grid
    return float(np.max(np.abs(series.evaluate(th))))


@dataclass(frozen=True)
class Conjugation:
    """The transformation C and its bookkeeping.

    strip_budget is (h, h - beta, h - 2 beta) for the input width h;
    norm_report is the Frobenius sup of C just inside the narrowest strip.
    residuals holds relative forward residuals of the two homological
    stages and the absolute sup-norm defect of the conjugation identity.
    """

    params: ModelParams
    g: FourierSeries
    h_series: FourierSeries
    k_series: FourierSeries
    k_hat: float
    beta_used: float
    strip_budget: tuple[float, float, float]
    norm_report: float
    residuals: dict[str, float]

    def a0(self) -> SL2Matrix:
        return SL2Matrix(1.0, self.k_hat, 0.0, 1.0)

    def _factors(self, theta, imag_shift: float = 0.0):
        """(e^{-K g(theta-w)}, e^{K g(theta-w)}, e^{K g(theta)}, h(theta))."""
        th = np.asarray(theta, dtype=float)
        k_coupling = self.params.K
        omega = self.params.omega_value
        g_prev = self.g.evaluate((th - omega) % 1.0, imag_shift)
        g_here = self.g.evaluate(th, imag_shift)
        h_here = self.h_series.evaluate(th, imag_shift)
        if imag_shift == 0.0:
            g_prev, g_here, h_here = g_prev.real, g_here.real, h_here.real
        return (np.exp(-k_coupling * g_prev), np.exp(k_coupling * g_prev),
                np.exp(k_coupling * g_here), h_here)

    def C_grid(self, theta, imag_shift: float = 0.0) -> np.ndarray:
        """C at theta (+ i imag_shift), vectorized: shape theta.shape + (2, 2).

        Assembled from the factored form, so det C = e^{Kg} e^{-Kg} = 1 up to
        one rounding step regardless of K.
        """
        e_minus, e_plus, e_here, h_val = self._factors(theta, imag_shift)
        out = np.empty(np.shape(h_val) + (2, 2),
                       dtype=complex if imag_shift != 0.0 else float)
        out[..., 0, 0] = -h_val * e_plus
        out[..., 0, 1] = e_minus + h_val * e_here
        out[..., 1, 0] = -e_plus
        out[..., 1, 1] = e_here
        return out

    def C_at(self, theta: float) -> SL2Matrix:
        return SL2Matrix.from_array(self.C_grid(float(theta)))

    def F_grid(self, theta, imag_shift: float = 0.0) -> np.ndarray:
        """F(theta) = C(theta+w) [[-1,0],[0,0]] C(theta)^{-1}, vectorized."""
        omega = self.params.omega_value
        th = np.asarray(theta, dtype=float)
        c_next = self.C_grid((th + omega) % 1.0, imag_shift)
        c_here = self.C_grid(th, imag_shift)
        c_inv = np.empty_like(c_here)
        c_inv[..., 0, 0] = c_here[..., 1, 1]
        c_inv[..., 0, 1] = -c_here[..., 0, 1]
        c_inv[..., 1, 0] = -c_here[..., 1, 0]
        c_inv[..., 1, 1] = c_here[..., 0, 0]
        out = np.empty_like(c_here)
        # C_next @ diag(-1, 0) zeroes the second column before the inverse.
        out[..., 0, 0] = -c_next[..., 0, 0] * c_inv[..., 0, 0]
        out[..., 0, 1] = -c_next[..., 0, 0] * c_inv[..., 0, 1]
        out[..., 1, 0] = -c_next[..., 1, 0] * c_inv[..., 0, 0]
        out[..., 1, 1] = -c_next[..., 1, 0] * c_inv[..., 0, 1]
        return out

    def F_at(self, theta: float) -> np.ndarray:
        return self.F_grid(float(theta))

    def matrix_strip_norm(self, which: str = "C", grid: int = 2048) -> float:
        """sup Frobenius norm of C (or F) on the narrowest strip's boundary."""
        w = self.strip_budget[2] * _WIDTH_NUDGE
        builder = self.C_grid if which == "C" else self.F_grid
        worst = 0.0
        for s in (w, -w) if w > 0.0 else (0.0,):
            mats = builder(np.arange(grid) / grid, s)
            fro = np.sqrt((np.abs(mats) ** 2).sum(axis=(-2, -1)))
            worst = max(worst, float(np.max(fro)))
        return worst

    def report(self) -> dict:
        """JSON-ready summary: {k_hat, strip_budget, norms, residuals}."""
        return {
            "k_hat": self.k_hat,
            "strip_budget": list(self.strip_budget),
            "norms": {"C": self.norm_report, "F": self.matrix_strip_norm("F")},
            "residuals": dict(self.residuals),
        }


def build_conjugation(params: ModelParams,
                      divisor_floor: float = DIVISOR_FLOOR) -> Conjugation:
    """Run the two homological stages and assemble C with its diagnostics."""
    f = params.f
    omega = params.omega
    beta_used = _beta_budget(omega)
    g = solve_homological(f, omega, shift_arg=True, divisor_floor=divisor_floor,
                          stage="first homological stage (g)")
    ks = np.arange(-g.order, g.order + 1)
    g_shift = g.shifted_by_phases(np.conj(omega.mode_phases(ks)))  # g(theta - w)
    exponent = g_shift + g
    try:
        k_series = -exp_of_series(exponent, scale=-params.K)
    except ResolutionError as err:
        raise ResolutionError(f"k-series exponential stage: {err}") from err
    k_hat = k_series.mean
    h_series = solve_homological(k_series.minus_mean(), omega, shift_arg=False,
                                 divisor_floor=divisor_floor,
                                 stage="second homological stage (h)")
    budget = (f.strip_h, f.strip_h - beta_used, f.strip_h - 2.0 * beta_used)
    if budget[2] <= 0.0:
        raise DomainError(
            f"strip budget exhausted: h = {budget[0]} does not exceed twice "
            f"the beta proxy {beta_used:.6g}"
        )
    conj = Conjugation(params, g, h_series, k_series, k_hat, beta_used,
                       budget, 0.0, {})
    residuals = _residuals(conj)
    norm_c = conj.matrix_strip_norm("C")
    return Conjugation(params, g, h_series, k_series, k_hat, beta_used,
                       budget, norm_c, residuals)


def _residuals(conj: Conjugation) -> dict[str, float]:
    params = conj.params
    omega = params.omega_value
    th = np.arange(_RESIDUAL_GRID) / _RESIDUAL_GRID
    th_next = (th + omega) % 1.0

    r1 = conj.g.evaluate_real(th_next) - conj.g.evaluate_real(th) \
        - params.f.evaluate_real(th_next)
    hom1 = float(np.max(np.abs(r1))) / max(_sup_abs(conj.g, _RESIDUAL_GRID), 1e-300)

    r2 = conj.h_series.evaluate_real(th_next) - conj.h_series.evaluate_real(th) \
        - (conj.k_hat - conj.k_series.evaluate_real(th))
    h_sup = _sup_abs(conj.h_series, _RESIDUAL_GRID)
    hom2 = float(np.max(np.abs(r2))) / max(h_sup, 1e-300) if h_sup > 0.0 \
        else float(np.max(np.abs(r2)))

    c_next = conj.C_grid(th_next)
    c_here = conj.C_grid(th)
    v = params.potential(th)
    a = np.zeros(th.shape + (2, 2))
    a[..., 0, 0] = v
    a[..., 0, 1] = -1.0
    a[..., 1, 0] = 1.0
    c_inv = np.empty_like(c_here)
    c_inv[..., 0, 0] = c_here[..., 1, 1]
    c_inv[..., 0, 1] = -c_here[..., 0, 1]
    c_inv[..., 1, 0] = -c_here[..., 1, 0]
    c_inv[..., 1, 1] = c_here[..., 0, 0]
    conjugated = c_next @ a @ c_inv
    a0 = np.array([[1.0, conj.k_hat], [0.0, 1.0]])
    defect = np.sqrt(((conjugated - a0) ** 2).sum(axis=(-2, -1)))
    return {"hom1": hom1, "hom2": hom2, "conj": float(np.max(defect))}


def perturbed_cocycle(conj: Conjugation, params: ModelParams, E: float,
                      theta: float) -> SL2Matrix:
    """A_0 + E F(theta); equals C(theta+w) A(theta, E) C(theta)^{-1}."""
    mat = np.array([[1.0, conj.k_hat], [0.0, 1.0]]) + E * conj.F_at(theta)
    return SL2Matrix.from_array(mat)


@dataclass(frozen=True)
class PerturbationReport:
    """Norm data for A_0 + E F and an explicitly heuristic smallness scale.

    threshold is 0.1 / (||A_0|| ||F||): a desk-scale proxy for where the
    perturbation stops being small relative to the constant part.  The true
    almost-reducibility threshold is non-constructive here.
    """

    f_norm: float
    a0_norm: float
    threshold: float
    e_max: float
    within_threshold: bool
    beta_used: float


def perturbation_report(conj: Conjugation, E_max: float) -> PerturbationReport:
    f_norm = conj.matrix_strip_norm("F")
    a0_norm = math.sqrt(2.0 + conj.k_hat ** 2)
    threshold = 0.1 / (a0_norm * max(f_norm, 1e-300))
    return PerturbationReport(f_norm, a0_norm, threshold, E_max,
                              E_max <= threshold, conj.beta_used)


@dataclass(frozen=True)
class SubcriticalRow:
    energy: float
    lyapunov: float
    stderr: float
    rotation: float
    flagged: bool  # lyapunov estimate above the 0.05 zero-exponent budget


def subcritical_probe(params: ModelParams, E_grid, n: int = 20_000,
                      phase_grid_size: int = 32) -> list[SubcriticalRow]:
    """Lyapunov and rotation-number scan over small positive energies.

    Numerical evidence gathering only: near-zero Lyapunov estimates and a
    continuously varying rotation number are consistent with (never proof
    of) absolutely continuous spectrum on the probed window.
    """
    E = np.asarray(E_grid, dtype=float).ravel()
    if E.size == 0 or np.any(E <= 0.0):
        raise DomainError("probe energies must be positive")
    estimates = lyapunov_scan(params, E, n, phase_grid_size)
    rotations = _rotation_scan(params, E, n)
    return [
        SubcriticalRow(est.energy, est.value, est.stderr, float(rot),
                       est.value > 0.05)
        for est, rot in zip(estimates, rotations)
    ]
