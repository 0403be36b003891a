"""Transfer-matrix cocycle: renormalized products, Lyapunov exponents,
rotation numbers, and growth diagnostics.

The one-step matrix is

    A(theta, E) = [[V(theta) - E, -1], [1, 0]],

so that (u_{n+1}, u_n) = A(theta + n w, E) (u_n, u_{n-1}) reproduces the
difference equation -u_{n+1} - u_{n-1} + V u_n = E u_n.  The n-step product
is taken in DESCENDING index order,

    A^n(theta, E) = A(theta + (n-1) w) ... A(theta + w) A(theta),

which is normative here: the ascending product has the same norms but a
different projective action, so rotation numbers would disagree.

Norms reach e^{c K n}, far beyond float range, so every product is carried
as (unit-Frobenius representative, log_scale) with the true matrix equal to
e^{log_scale} times the representative.  The representative's determinant
then equals e^{-2 log_scale}, which underflows on long hyperbolic products;
determinant drift is checked and corrected in true scale while that is
representable and monitored as an absolute residual afterwards.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError
from .fourier import ModelParams

_GOLDEN_FRAC = (math.sqrt(5.0) - 1.0) / 2.0  # irrational offset for phase grids
_DET_FIX_EVERY = 256
_BLOCK = 2048


@dataclass
class SL2Matrix:
    """2x2 real matrix; unimodular (det = 1) unless constructed as a scaled
    representative (unimodular_check=False), whose true determinant lives in
    log scale with the accompanying log_scale."""

    a: float
    b: float
    c: float
    d: float
    unimodular_check: InitVar[bool] = True

    def __post_init__(self, unimodular_check):
        if unimodular_check:
            det = self.det()
            scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d), 1.0)
            if abs(det - 1.0) > 1e-10 * scale * scale:
                raise DomainError(f"matrix is not unimodular: det = {det!r}")

    @classmethod
    def from_array(cls, m, unimodular_check: bool = True) -> "SL2Matrix":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], unimodular_check)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def fro_norm(self) -> float:
        return math.sqrt(self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2)


class CocycleProduct(NamedTuple):
    """Renormalized product: true matrix = e^{log_scale} * matrix."""

    matrix: SL2Matrix
    log_scale: float

    @property
    def log_norm(self) -> float:
        """log of the true Frobenius norm."""
        return self.log_scale + math.log(self.matrix.fro_norm())

    def det_residual(self) -> float:
        """|det(representative) - e^{-2 log_scale}|, meaningful at any scale."""
        expected = math.exp(-2.0 * self.log_scale) if self.log_scale < 350.0 else 0.0
        return abs(self.matrix.det() - expected)

    def true_det(self) -> float | None:
        """Determinant in true scale (None once e^{2 log_scale} overflows)."""
        if abs(self.log_scale) > 350.0:
            return None
        return self.matrix.det() * math.exp(2.0 * self.log_scale)


def step_matrix(params: ModelParams, theta: float, E: float) -> SL2Matrix:
    """A(theta, E) = [[V(theta) - E, -1], [1, 0]]."""
    v = float(params.potential(theta))
    return SL2Matrix(v - E, -1.0, 1.0, 0.0)


def product(params: ModelParams, theta: float, E: float, n: int) -> CocycleProduct:
    """Descending product A(theta+(n-1)w)...A(theta), unit-Frobenius per step.

    Overflow-free for any n; determinant drift is re-absorbed into log_scale
    every few hundred steps while the true determinant is representable.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    omega = params.omega_value
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    log_scale = 0.0
    k = 0
    for k0 in range(0, n, _BLOCK):
        blk = min(_BLOCK, n - k0)
        v = params.potential((theta + (k0 + np.arange(blk)) * omega) % 1.0)
        for w in (v - E).tolist():
            a, b, c, d = w * a - c, w * b - d, a, b
            s = math.sqrt(a * a + b * b + c * c + d * d)
            a /= s
            b /= s
            c /= s
            d /= s
            log_scale += math.log(s)
            k += 1
            if k % _DET_FIX_EVERY == 0 and 2.0 * log_scale < 700.0:
                dtrue = (a * d - b * c) * math.exp(2.0 * log_scale)
                if 0.5 < dtrue < 2.0:
                    log_scale -= 0.5 * math.log(dtrue)
    rep = SL2Matrix(a, b, c, d, unimodular_check=False)
    return CocycleProduct(rep, log_scale)


@dataclass(frozen=True)
class LyapunovEstimate:
    """Finite-scale Lyapunov value, phase-averaged; never a claimed limit."""

    energy: float
    value: float
    n_steps: int
    n_phases: int
    stderr: float

    def __post_init__(self):
        if self.value < 0.0:
            raise DomainError(f"Lyapunov estimate must be >= 0, got {self.value}")


def phase_grid(n_phases: int) -> np.ndarray:
    """Equispaced phases shifted by a fixed irrational fraction of a cell."""
    if n_phases < 1:
        raise DomainError("phase grid needs at least one point")
    return (np.arange(n_phases) + _GOLDEN_FRAC) / n_phases


def _norm_log_scan(params: ModelParams, energies: np.ndarray, thetas: np.ndarray,
                   n: int, checkpoints: Sequence[int] | None = None) -> dict[int, np.ndarray]:
    """log ||A^k(theta_j, E_i)|| at each checkpoint k, shape (nE, nTheta).

    Batched over energies and phases: the potential is evaluated once per
    step for all phases and broadcast across the energy axis; products are
    renormalized to unit Frobenius norm every step.
    """
    E = np.asarray(energies, dtype=float).ravel()
    thetas = np.asarray(thetas, dtype=float).ravel()
    n_e, n_t = E.size, thetas.size
    chk = sorted(set(int(c) for c in (checkpoints if checkpoints is not None else [n])))
    if not chk or chk[0] < 1 or chk[-1] != n:
        raise DomainError("checkpoints must sit in [1, n] and include n")
    chk_set = set(chk)
    omega = params.omega_value
    ecol = E[:, None, None]
    r0 = np.zeros((n_e, n_t, 2))
    r1 = np.zeros((n_e, n_t, 2))
    r0[..., 0] = 1.0
    r1[..., 1] = 1.0
    log_scale = np.zeros((n_e, n_t))
    out: dict[int, np.ndarray] = {}
    for k0 in range(0, n, _BLOCK):
        b = min(_BLOCK, n - k0)
        ks = k0 + np.arange(b)
        v_block = params.potential((thetas[None, :] + (ks[:, None] * omega) % 1.0) % 1.0)
        for i in range(b):
            a = v_block[i][None, :, None] - ecol
            t0 = a * r0 - r1
            r1 = r0
            r0 = t0
            ss = (r0 * r0).sum(-1)
            ss += (r1 * r1).sum(-1)
            s = np.sqrt(ss)
            r0 /= s[..., None]
            r1 /= s[..., None]
            log_scale += np.log(s)
            k = k0 + i + 1
            if k in chk_set:
                out[k] = log_scale.copy()
    return out


def _estimates_from_logs(E: np.ndarray, logs: np.ndarray, n: int) -> list[LyapunovEstimate]:
    n_phases = logs.shape[1]
    values = np.maximum(logs.mean(axis=1) / n, 0.0)
    if n_phases > 1:
        err = logs.std(axis=1, ddof=1) / (n * math.sqrt(n_phases))
    else:
        err = np.zeros(logs.shape[0])
    return [LyapunovEstimate(float(e), float(v), n, n_phases, float(se))
            for e, v, se in zip(E, values, err)]


def finite_lyapunov(params: ModelParams, E: float, n: int = 100_000,
                    phase_grid_size: int = 64) -> LyapunovEstimate:
    """Phase-averaged (1/n) log ||A^n|| at a single energy."""
    if n < 1:
        raise DomainError("n must be >= 1")
    logs = _norm_log_scan(params, np.array([E]), phase_grid(phase_grid_size), n)[n]
    return _estimates_from_logs(np.array([E]), logs, n)[0]


def lyapunov_scan(params: ModelParams, energies, n: int = 100_000,
                  phase_grid_size: int = 64) -> list[LyapunovEstimate]:
    """finite_lyapunov over an energy grid in one batched propagation."""
    if n < 1:
        raise DomainError("n must be >= 1")
    E = np.asarray(energies, dtype=float).ravel()
    if E.size == 0:
        return []
    logs = _norm_log_scan(params, E, phase_grid(phase_grid_size), n)[n]
    return _estimates_from_logs(E, logs, n)


def lyapunov_profile(params: ModelParams, E: float, ns: Sequence[int],
                     phase_grid_size: int = 64) -> list[LyapunovEstimate]:
    """Estimates at several scales n from a single propagation (the limsup
    structure is surfaced as (n, value, stderr) triples, never iterated to
    a tolerance silently)."""
    ns = sorted(set(int(m) for m in ns))
    if not ns or ns[0] < 1:
        raise DomainError("scales must be positive")
    snaps = _norm_log_scan(params, np.array([E]), phase_grid(phase_grid_size),
                           ns[-1], checkpoints=ns)
    return [_estimates_from_logs(np.array([E]), snaps[m], m)[0] for m in ns]


def finite_lyapunov_general(matrix_fn: Callable[[np.ndarray], np.ndarray],
                            omega: float, n: int, phase_grid_size: int = 16) -> LyapunovEstimate:
    """Lyapunov estimate for an arbitrary cocycle theta -> M(theta) over w.

    matrix_fn maps an array of phases (m,) to matrices (m, 2, 2).  Descending
    products, per-step Frobenius renormalization, as for the Schrodinger case.
    The returned estimate has energy = nan (no energy parameter here).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    thetas = phase_grid(phase_grid_size)
    u = np.broadcast_to(np.eye(2), (phase_grid_size, 2, 2)).copy()
    log_scale = np.zeros(phase_grid_size)
    for k0 in range(0, n, _BLOCK):
        b = min(_BLOCK, n - k0)
        ks = k0 + np.arange(b)
        th = (thetas[None, :] + (ks[:, None] * omega) % 1.0) % 1.0
        m_block = matrix_fn(th.ravel()).reshape(b, phase_grid_size, 2, 2)
        for i in range(b):
            u = m_block[i] @ u
            s = np.sqrt((u * u).sum(axis=(1, 2)))
            u /= s[:, None, None]
            log_scale += np.log(s)
    value = max(float(log_scale.mean()) / n, 0.0)
    err = float(log_scale.std(ddof=1)) / (n * math.sqrt(phase_grid_size)) \
        if phase_grid_size > 1 else 0.0
    return LyapunovEstimate(math.nan, value, n, phase_grid_size, err)


@dataclass(frozen=True)
class GrowthBoundReport:
    """Max finite-scale exponent over a sample set against its envelope.

    The envelope is max(10K + 1, 1 + log(2 + max|V - E|)): the first term is
    the a-priori bound for the exponential regime (with slack for log-scale
    effects), the second covers small K where 10K alone is vacuously tight —
    at K = 0 the one-step norm already exceeds e^{10K} = 1.
    """

    max_ratio: float
    threshold: float
    passed: bool
    worst_energy: float
    worst_theta: float
    worst_n: int


def growth_bound_check(params: ModelParams, E_samples, theta_samples,
                       n_samples) -> GrowthBoundReport:
    """Scan (1/n) log ||A^n(theta, E)|| over the sample grid."""
    E = np.asarray(E_samples, dtype=float).ravel()
    thetas = np.asarray(theta_samples, dtype=float).ravel()
    ns = sorted(set(int(m) for m in np.asarray(n_samples).ravel()))
    if E.size == 0 or thetas.size == 0 or not ns:
        raise DomainError("growth_bound_check needs nonempty samples")
    if ns[0] < 1:
        raise DomainError("n samples must be positive")
    snaps = _norm_log_scan(params, E, thetas, ns[-1], checkpoints=ns)
    max_ratio = -math.inf
    worst = (E[0], thetas[0], ns[0])
    for m in ns:
        ratios = snaps[m] / m
        idx = np.unravel_index(np.argmax(ratios), ratios.shape)
        if ratios[idx] > max_ratio:
            max_ratio = float(ratios[idx])
            worst = (float(E[idx[0]]), float(thetas[idx[1]]), m)
    grid = np.arange(4096) / 4096.0
    v = params.potential(grid)
    max_dev = max(float(np.max(np.abs(v - e))) for e in E)
    threshold = max(10.0 * params.K + 1.0, 1.0 + math.log(2.0 + max_dev))
    return GrowthBoundReport(max_ratio, threshold, max_ratio <= threshold, *worst)


def rotation_number(params: ModelParams, E: float, n: int = 100_000,
                    theta: float = 0.0) -> float:
    """Fibered rotation number in [0, 1/2] via continuous vector winding.

    Tracks the angle swept by v_k = A^k (1, 0) step by step (atan2 of
    cross/dot, so the lift is continuous), divides by 2 pi n, and folds the
    sign.  For K = 0 and E in [0, 4] this converges to arccos((2-E)/2)/2pi.
    """
    return float(_rotation_scan(params, np.array([E]), n, theta)[0])


def _rotation_scan(params: ModelParams, energies, n: int, theta: float = 0.0) -> np.ndarray:
    if n < 1:
        raise DomainError("n must be >= 1")
    E = np.asarray(energies, dtype=float).ravel()
    omega = params.omega_value
    v0 = np.ones_like(E)
    v1 = np.zeros_like(E)
    winding = np.zeros_like(E)
    for k0 in range(0, n, _BLOCK):
        b = min(_BLOCK, n - k0)
        ks = k0 + np.arange(b)
        vpot = params.potential((theta + ks * omega) % 1.0)
        for i in range(b):
            a = vpot[i] - E
            w0 = a * v0 - v1
            w1 = v0
            winding += np.arctan2(v0 * w1 - v1 * w0, v0 * w0 + v1 * w1)
            s = np.hypot(w0, w1)
            v0 = w0 / s
            v1 = w1 / s
    rho = np.abs(winding) / (2.0 * math.pi * n)
    return np.clip(rho, 0.0, 0.5)


def lyapunov_free(E: float) -> float:
    """Closed form at K=0 (constant potential V=2): log of the larger
    eigenvalue modulus of [[2-E, -1], [1, 0]]."""
    t = abs(2.0 - E)
    if t <= 2.0:
        return 0.0
    return math.log((t + math.sqrt(t * t - 4.0)) / 2.0)


def rotation_free(E: float) -> float:
    """Closed-form rotation number at K=0 for E in [0, 4]."""
    if not (0.0 <= E <= 4.0):
        raise DomainError("closed form requires E in [0, 4]")
    return math.acos(max(-1.0, min(1.0, (2.0 - E) / 2.0))) / (2.0 * math.pi)
