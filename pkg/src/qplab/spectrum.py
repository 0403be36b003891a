"""Finite-volume spectral analysis of the discrete operator.

The operator acts on l^2({0, ..., N-1}) with Dirichlet truncation
(u_{-1} = u_N = 0):

    (H u)_n = -u_{n+1} - u_{n-1} + V(theta + n w) u_n,

a symmetric tridiagonal matrix with constant off-diagonal -1.  Eigenvalues
come from Sturm-sequence counting plus bisection — counts inside windows of
huge spectral extent are needed without full diagonalization, so a dense
eigensolver appears only as a small test oracle.  Eigenvectors come from
inverse iteration; localization is probed by least-squares decay fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import ConvergenceError, DomainError
from .fourier import ModelParams

_PIVMIN = 1e-300
_NOISE_FLOOR = 1e-12  # relative floor for decay fits
_DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class FiniteOperator:
    """Dirichlet truncation of the operator to N sites starting at theta.

    Off-diagonal entries are the constant -1; the diagonal carries the
    potential samples, which are strictly positive for this model (a sum of
    two exponentials).  provenance (params, theta) is kept for re-sampling.
    """

    size: int
    diagonal: np.ndarray
    params: ModelParams | None = None
    theta: float | None = None

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=float)
        object.__setattr__(self, "diagonal", diag)
        if self.size != diag.size or self.size < 2:
            raise DomainError("operator needs size >= 2 matching its diagonal")
        if not np.all(np.isfinite(diag)):
            raise DomainError("diagonal entries must be finite")
        if np.min(diag) <= 0.0:
            raise DomainError("diagonal entries must be strictly positive")

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diagonal * v
        out[:-1] -= v[1:]
        out[1:] -= v[:-1]
        return out

    def gershgorin(self) -> tuple[float, float]:
        return float(self.diagonal.min()) - 2.0, float(self.diagonal.max()) + 2.0


def build_finite(params: ModelParams, theta: float, N: int) -> FiniteOperator:
    """Sample the potential along the orbit theta + n w, n = 0..N-1."""
    if N < 2:
        raise DomainError("N must be >= 2")
    ks = np.arange(N)
    diag = params.potential((theta + ks * params.omega_value) % 1.0)
    return FiniteOperator(N, diag, params, theta)


def _count_below_many(op: FiniteOperator, energies: np.ndarray) -> np.ndarray:
    """Sturm counts #{eigenvalues < E} for a batch of energies."""
    E = np.asarray(energies, dtype=float).ravel()
    dme = op.diagonal[:, None] - E[None, :]
    q = dme[0].copy()
    q[np.abs(q) < _PIVMIN] = -_PIVMIN
    count = (q < 0.0).astype(np.int64)
    for i in range(1, op.size):
        q = dme[i] - 1.0 / q
        q[np.abs(q) < _PIVMIN] = -_PIVMIN
        count += q < 0.0
    return count


def eigenvalue_count_below(op: FiniteOperator, E: float) -> int:
    """Number of eigenvalues < E, exact up to float pivot safeguards."""
    return int(_count_below_many(op, np.array([E]))[0])


def eigenvalues_in(op: FiniteOperator, interval: Sequence[float], tol: float = 1e-10) -> np.ndarray:
    """All eigenvalues in [a, b], located by bisection to width tol.

    A cluster tighter than tol comes out as one value with multiplicity.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (a < b):
        raise DomainError("interval must satisfy a < b")
    if not (tol > 0.0):
        raise DomainError("tol must be positive")
    los = np.array([a])
    his = np.array([b])
    clos = _count_below_many(op, los)
    chis = _count_below_many(op, his)
    found: list[tuple[float, int]] = []
    while los.size:
        mids = 0.5 * (los + his)
        cmids = _count_below_many(op, mids)
        nlo = np.concatenate([los, mids])
        nhi = np.concatenate([mids, his])
        ncl = np.concatenate([clos, cmids])
        nch = np.concatenate([cmids, chis])
        mult = nch - ncl
        keep = mult > 0
        nlo, nhi, ncl, nch = nlo[keep], nhi[keep], ncl[keep], nch[keep]
        done = (nhi - nlo) < tol
        for lo, hi, m in zip(nlo[done], nhi[done], (nch - ncl)[done]):
            found.append((0.5 * (lo + hi), int(m)))
        los, his, clos, chis = nlo[~done], nhi[~done], ncl[~done], nch[~done]
    values = np.array([v for v, m in sorted(found) for _ in range(m)])
    return values


def _kth_many(op: FiniteOperator, ks: Sequence[int], tol: float) -> np.ndarray:
    """k-th smallest eigenvalues (1-indexed), batched bisection."""
    ks = np.asarray(ks, dtype=np.int64)
    if np.any(ks < 1) or np.any(ks > op.size):
        raise DomainError("eigenvalue index out of range")
    g_lo, g_hi = op.gershgorin()
    los = np.full(ks.shape, g_lo - tol)
    his = np.full(ks.shape, g_hi + tol)
    while np.max(his - los) > tol:
        mids = 0.5 * (los + his)
        cm = _count_below_many(op, mids)
        above = cm >= ks  # mid is above the k-th eigenvalue
        his = np.where(above, mids, his)
        los = np.where(above, los, mids)
    return 0.5 * (los + his)


def kth_eigenvalue(op: FiniteOperator, k: int, tol: float = 1e-9) -> float:
    return float(_kth_many(op, [k], tol)[0])


@dataclass(frozen=True)
class EigenvectorResult:
    vector: np.ndarray
    residual: float
    near_degenerate: bool


def eigenvector(op: FiniteOperator, E: float, max_iter: int = 10) -> EigenvectorResult:
    """Unit eigenvector by inverse iteration with fixed shift E.

    E must already sit within bisection tolerance of a true eigenvalue; the
    residual ||Hv - Ev|| is reported and gated.  If two eigenvalues fall
    within 1e-8 the vector is an essentially arbitrary element of their span
    and the result is flagged near-degenerate.
    """
    n = op.size
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[1] = op.diagonal - E
    ab[2, :-1] = -1.0
    rng = np.random.default_rng(1234)
    b = rng.standard_normal(n)
    b /= np.linalg.norm(b)
    scale = 1.0 + abs(E)
    x = b
    residual = math.inf
    for _ in range(max_iter):
        try:
            x = solve_banded((1, 1), ab, b)
        except LinAlgError:  # exactly singular shift: nudge off the eigenvalue
            ab[1] += 1e-12 * scale
            continue
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or nrm == 0.0:
            ab[1] += 1e-12 * scale
            continue
        x = x / nrm
        residual = float(np.linalg.norm(op.apply(x) - E * x))
        if residual < 1e-10 * scale:
            break
        b = x
    if residual > 1e-6 * scale:
        raise ConvergenceError(
            f"inverse iteration stalled at residual {residual:.3e} for shift {E!r}"
        )
    i = int(np.argmax(np.abs(x)))
    if x[i] < 0:
        x = -x
    nearby = int(np.ptp(_count_below_many(
        op, np.array([E - _DEGENERACY_GAP, E + _DEGENERACY_GAP]))))
    return EigenvectorResult(x, residual, nearby >= 2)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    fit_quality: float
    n_points: int


def decay_rate(vector: np.ndarray) -> DecayFit:
    """Exponential decay rate of |v| away from its peak.

    Least-squares fit of log|v_n| against |n - argmax| over entries above
    the relative noise floor 1e-12, excluding a 10% buffer at each end
    (boundary contamination).  fit_quality is the R^2 of the fit; a
    delocalized profile shows up as a small rate with low quality, not as
    an error.
    """
    v = np.abs(np.asarray(vector, dtype=float))
    n = v.size
    if n < 50:
        raise DomainError("decay fit needs at least 50 entries")
    peak = float(v.max())
    if peak == 0.0:
        return DecayFit(0.0, 0.0, 0)
    center = int(np.argmax(v))
    buffer = int(0.1 * n)
    idx = np.arange(n)
    usable = (idx >= buffer) & (idx < n - buffer) & (v > _NOISE_FLOOR * peak)
    x = np.abs(idx[usable] - center).astype(float)
    y = np.log(v[usable])
    if x.size < 3 or np.ptp(x) == 0.0:
        return DecayFit(0.0, 0.0, int(x.size))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    quality = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return DecayFit(float(-slope), quality, int(x.size))


def edge_slack(N: int) -> float:
    """Finite-size allowance for the lowest eigenvalue's distance to 0.

    Calibrated on the constant-potential case where the bottom sits at
    2 - 2cos(pi/(N+1)) = O(N^-2) exactly; a factor 10 covers the potentials
    here.  For K > 0 the true approach rate is unknown, so this is a
    reporting aid, not an asserted bound.
    """
    return 10.0 * (2.0 - 2.0 * math.cos(math.pi / (N + 1)))


def spectral_edges(params: ModelParams, theta_samples, N: int,
                   tol: float = 1e-9) -> tuple[float, float]:
    """(lowest, highest) finite-volume eigenvalue over the theta samples."""
    if N < 100:
        raise DomainError("edge estimates need N >= 100")
    thetas = np.asarray(theta_samples, dtype=float).ravel()
    if thetas.size == 0:
        raise DomainError("need at least one theta sample")
    lo = math.inf
    hi = -math.inf
    for theta in thetas:
        op = build_finite(params, float(theta), N)
        both = _kth_many(op, [1, N], tol)
        lo = min(lo, float(both[0]))
        hi = max(hi, float(both[1]))
    return lo, hi


def gap_profile(params: ModelParams, theta: float, N: int,
                interval: Sequence[float], resolution: float,
                n_theta: int = 8) -> list[tuple[float, float]]:
    """Maximal eigenvalue-free subintervals of [a, b] at the given resolution.

    The count grid is unioned over a small phase family around theta (the
    base point plus equispaced shifts), so a gap means no finite-volume
    eigenvalue for any sampled phase.  Diagnostic only: resolution-limited,
    and says nothing about Cantor structure.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (a < b):
        raise DomainError("interval must satisfy a < b")
    if not (resolution > 0.0):
        raise DomainError("resolution must be positive")
    edges = np.arange(a, b + resolution, resolution)
    edges[-1] = max(edges[-1], b)
    occupied = np.zeros(edges.size - 1, dtype=bool)
    for j in range(max(1, n_theta)):
        op = build_finite(params, (theta + j / max(1, n_theta)) % 1.0, N)
        counts = _count_below_many(op, edges)
        occupied |= np.diff(counts) > 0
    gaps: list[tuple[float, float]] = []
    run_start = None
    for i, occ in enumerate(occupied):
        if not occ and run_start is None:
            run_start = edges[i]
        if occ and run_start is not None:
            gaps.append((0.5 * (run_start + edges[i]), float(edges[i] - run_start)))
            run_start = None
    if run_start is not None:
        gaps.append((0.5 * (run_start + edges[-1]), float(edges[-1] - run_start)))
    return gaps


def thouless_estimate(op: FiniteOperator, E: float, tol: float = 1e-6) -> float:
    """(1/N) sum_j log|E - E_j| from the finite eigenvalue counting measure.

    For E outside the spectrum this approximates the Lyapunov exponent
    (Thouless formula with the coupling normalized to off-diagonal 1).
    """
    g_lo, g_hi = op.gershgorin()
    eigs = eigenvalues_in(op, (g_lo - tol, g_hi + tol), tol)
    if eigs.size != op.size:
        raise ConvergenceError(
            f"expected {op.size} eigenvalues, located {eigs.size}"
        )
    dist = np.abs(E - eigs)
    if np.any(dist == 0.0):
        return -math.inf
    return float(np.mean(np.log(dist)))


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues in a window with per-pair residuals and decay fits."""

    theta: float
    size: int
    eigenvalues: np.ndarray
    residuals: np.ndarray
    decay_rates: np.ndarray
    fit_qualities: np.ndarray
    near_degenerate: np.ndarray = field(default_factory=lambda: np.array([], dtype=bool))

    def __post_init__(self):
        eigs = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(eigs) < 0.0):
            raise DomainError("eigenvalues must be sorted")
        dedup = np.diff(eigs) > 1e-12 * (1.0 + np.abs(eigs[1:]))
        if eigs.size > 1 and not np.all(eigs[1:][~dedup] - eigs[:-1][~dedup] >= 0.0):
            raise DomainError("eigenvalue ordering broke during deduplication")
        bound = 1e-8 * (1.0 + np.abs(eigs))
        if np.any(np.asarray(self.residuals) >= bound):
            worst = int(np.argmax(np.asarray(self.residuals) / bound))
            raise DomainError(
                f"residual {self.residuals[worst]:.3e} at E={eigs[worst]!r} "
                "exceeds the 1e-8 (1+|E|) contract"
            )


def analyze_window(params: ModelParams, theta: float, N: int,
                   interval: Sequence[float], tol: float = 1e-10) -> SpectrumResult:
    """Locate eigenvalues in a window and attach vectors, residuals, fits."""
    op = build_finite(params, theta, N)
    eigs = eigenvalues_in(op, interval, tol)
    residuals = []
    rates = []
    qualities = []
    flags = []
    for e in eigs:
        res = eigenvector(op, float(e))
        fit = decay_rate(res.vector) if N >= 50 else DecayFit(0.0, 0.0, 0)
        residuals.append(res.residual)
        rates.append(fit.rate)
        qualities.append(fit.fit_quality)
        flags.append(res.near_degenerate)
    return SpectrumResult(theta, N, eigs, np.array(residuals), np.array(rates),
                          np.array(qualities), np.array(flags, dtype=bool))
