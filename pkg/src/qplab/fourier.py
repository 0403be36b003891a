"""Truncated Fourier series on the torus and the model potential.

Conventions
-----------
A series is stored as coefficients ``c_k`` for ``|k| <= M`` and represents

    f(theta) = sum_k c_k exp(2 pi i k theta),    theta in R/Z.

Real-valued functions are kept Hermitian (``c_{-k} = conj(c_k)``); the
constructor projects onto that symmetry and refuses inputs that are far
from it.  ``strip_h`` declares the half-width of the complex strip
``|Im z| < strip_h`` on which the series is trusted as an approximation of
an underlying analytic function; evaluation outside the declared strip is
a domain error even though a trigonometric polynomial is entire.

``declared_norm``, when present, is an upper bound B used for the decay
certificate ``|c_k| <= B exp(-strip_h |k|)``.

The model potential is

    V(theta) = exp(K f(theta + w)) + exp(-K f(theta))

for a zero-mean profile ``f`` normalized to unit C^1 norm
(``sup|f| + sup|f'| = 1``), coupling ``K >= 0`` and frequency ``w``.
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, ResolutionError
from .frequencies import Frequency

TWO_PI = 2.0 * math.pi

# Relative spectral-tail tolerance used by series-producing operations.
TAIL_RTOL = 1e-12
# Grid-doubling aliasing tolerance (relative to the largest coefficient).
ALIAS_RTOL = 1e-11
# Largest FFT grid exp_of_series will escalate to before giving up.
MAX_EXP_GRID = 1 << 16


def _as_complex_array(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=complex)
    if arr.ndim != 1 or arr.size % 2 != 1:
        raise DomainError("coefficient array must be 1-d with odd length 2M+1")
    return arr


@dataclass(frozen=True)
class FourierSeries:
    """Finitely truncated Fourier series with a declared analyticity strip.

    Parameters
    ----------
    coeffs : array_like, complex, length 2M+1
        Coefficients ordered k = -M..M (index i holds mode i - M).
    strip_h : float
        Declared strip half-width, > 0.
    declared_norm : float or None
        Optional bound for the coefficient decay certificate.
    """

    coeffs: np.ndarray
    strip_h: float
    declared_norm: float | None = None

    def __post_init__(self):
        arr = _as_complex_array(self.coeffs).copy()
        if not (self.strip_h > 0.0) or not math.isfinite(self.strip_h):
            raise DomainError(f"strip_h must be positive and finite, got {self.strip_h}")
        scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0)
        # Hermitian projection: average c_k with conj(c_{-k}).
        sym = 0.5 * (arr + np.conj(arr[::-1]))
        if float(np.max(np.abs(arr - sym))) > 1e-9 * scale:
            raise DomainError("coefficients are not Hermitian within tolerance")
        m = arr.size // 2
        if abs(sym[m].imag) > 1e-12 * scale:
            raise DomainError(
                f"mean coefficient has imaginary part {sym[m].imag:.3e} above tolerance"
            )
        sym[m] = sym[m].real
        sym.setflags(write=False)
        object.__setattr__(self, "coeffs", sym)
        if self.declared_norm is not None:
            bound = 1.0000001 * self.declared_norm * np.exp(
                -self.strip_h * np.abs(np.arange(-m, m + 1))
            )
            if np.any(np.abs(sym) > bound):
                raise DomainError("coefficients violate declared_norm decay bound")

    # -- basic queries ----------------------------------------------------

    @property
    def order(self) -> int:
        """Truncation order M."""
        return self.coeffs.size // 2

    def coefficient(self, k: int) -> complex:
        m = self.order
        if abs(k) > m:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + m])

    @property
    def mean(self) -> float:
        """The k = 0 coefficient (real by construction)."""
        return float(self.coeffs[self.order].real)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, theta, imag_shift: float = 0.0):
        """Evaluate at ``theta + i*imag_shift`` (theta scalar or array).

        Raises DomainError when ``|imag_shift| >= strip_h``: the truncation
        is only certified inside the declared strip.
        """
        if abs(imag_shift) >= self.strip_h:
            raise DomainError(
                f"evaluation shift {imag_shift} outside declared strip |Im z| < {self.strip_h}"
            )
        th = np.asarray(theta, dtype=float)
        scalar = th.ndim == 0
        z = np.exp(TWO_PI * (1j * th - imag_shift))  # e^{2 pi i (theta + i s)}
        zi = np.exp(TWO_PI * (-1j * th + imag_shift))
        m = self.order
        acc = np.full(th.shape, self.coeffs[m], dtype=complex)
        wp = np.ones_like(z)
        wn = np.ones_like(zi)
        for k in range(1, m + 1):
            wp = wp * z
            wn = wn * zi
            acc = acc + self.coeffs[m + k] * wp + self.coeffs[m - k] * wn
        return complex(acc[()]) if scalar else acc

    def evaluate_real(self, theta):
        """Real part of evaluate() on the real line (vectorized)."""
        return np.real(self.evaluate(theta))

    # -- coefficient-level operations ------------------------------------

    def derivative(self) -> "FourierSeries":
        m = self.order
        ks = np.arange(-m, m + 1)
        return FourierSeries(self.coeffs * (TWO_PI * 1j * ks), self.strip_h)

    def shifted(self, delta: float) -> "FourierSeries":
        """Series of theta -> f(theta + delta); exact phase multiplication."""
        m = self.order
        ks = np.arange(-m, m + 1)
        return FourierSeries(self.coeffs * np.exp(TWO_PI * 1j * ks * delta),
                             self.strip_h, self.declared_norm)

    def shifted_by_phases(self, phases: np.ndarray) -> "FourierSeries":
        """Like shifted(), with caller-supplied unit phases e^{2 pi i k d}.

        ``phases`` must cover k = -M..M in coefficient order.  Used when the
        shift is a frequency whose mode phases were reduced exactly.
        """
        if phases.shape != self.coeffs.shape:
            raise DomainError("phase array shape mismatch")
        return FourierSeries(self.coeffs * phases, self.strip_h, self.declared_norm)

    def _binary(self, other: "FourierSeries", sign: float) -> "FourierSeries":
        if not isinstance(other, FourierSeries):
            return NotImplemented
        m = max(self.order, other.order)
        out = np.zeros(2 * m + 1, dtype=complex)
        a, b = self.order, other.order
        out[m - a:m + a + 1] += self.coeffs
        out[m - b:m + b + 1] += sign * other.coeffs
        return FourierSeries(out, min(self.strip_h, other.strip_h))

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float)):
            return NotImplemented
        return FourierSeries(self.coeffs * float(scalar), self.strip_h)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def minus_mean(self) -> "FourierSeries":
        out = self.coeffs.copy()
        out[self.order] = 0.0
        return FourierSeries(out, self.strip_h)

    # -- norms ------------------------------------------------------------

    def sup_real(self, grid: int = 100_000, refine: bool = True) -> float:
        """sup |f| on the real torus: dense grid plus parabolic refinement."""
        th = np.arange(grid) / grid
        vals = np.abs(self.evaluate(th))
        i = int(np.argmax(vals))
        best = float(vals[i])
        if refine and grid >= 8:
            # one parabolic step through the three points around the max
            ym, y0, yp = vals[(i - 1) % grid], vals[i], vals[(i + 1) % grid]
            denom = ym - 2.0 * y0 + yp
            if denom < 0.0:
                dt = 0.5 * (ym - yp) / denom
                if abs(dt) <= 1.0:
                    best = max(best, float(abs(self.evaluate((i + dt) / grid))))
        return best

    def c1_norm(self, grid: int = 100_000) -> float:
        """sup|f| + sup|f'| on the torus."""
        return self.sup_real(grid) + self.derivative().sup_real(grid)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        m = self.order
        entries = [[int(k), float(self.coeffs[k + m].real), float(self.coeffs[k + m].imag)]
                   for k in range(-m, m + 1)]
        payload = {"h": self.strip_h, "coeffs": entries}
        if self.declared_norm is not None:
            payload["declared_norm"] = self.declared_norm
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FourierSeries":
        payload = json.loads(text)
        entries = sorted(payload["coeffs"], key=lambda e: e[0])
        if not entries:
            raise DomainError("empty coefficient list")
        m = max(abs(int(e[0])) for e in entries)
        out = np.zeros(2 * m + 1, dtype=complex)
        for k, re, im in entries:
            out[int(k) + m] = re + 1j * im
        return cls(out, float(payload["h"]), payload.get("declared_norm"))

    @classmethod
    def from_modes(cls, modes: dict[int, complex], strip_h: float,
                   declared_norm: float | None = None) -> "FourierSeries":
        """Build from a sparse {k: c_k} dict; conjugate modes filled in."""
        if not modes:
            raise DomainError("empty mode dict")
        m = max(abs(k) for k in modes)
        out = np.zeros(2 * m + 1, dtype=complex)
        for k, c in modes.items():
            out[k + m] += 0.5 * complex(c)
            out[-k + m] += 0.5 * np.conj(complex(c))
        return cls(out, strip_h, declared_norm)


def zero_series(strip_h: float = 1.0) -> FourierSeries:
    return FourierSeries(np.zeros(1, dtype=complex), strip_h)


def strip_norm(series: FourierSeries, at_width: float, grid: int = 8192) -> float:
    """sup of |series| on the lines Im z = +/- at_width (dense grid).

    Precondition: 0 <= at_width < series.strip_h.
    """
    if not (0.0 <= at_width < series.strip_h):
        raise DomainError(
            f"at_width {at_width} outside [0, strip_h={series.strip_h})"
        )
    th = np.arange(grid) / grid
    hi = float(np.max(np.abs(series.evaluate(th, at_width)))) if at_width > 0 else 0.0
    lo = float(np.max(np.abs(series.evaluate(th, -at_width)))) if at_width > 0 else \
        float(np.max(np.abs(series.evaluate(th))))
    return max(hi, lo)


def decay_certificate_ok(series: FourierSeries, at_width: float,
                         grid: int = 8192, slack: float = 1.01) -> bool:
    """Empirical decay certificate |c_k| <= slack * ||f||_w * e^{-w|k|}."""
    bound = slack * strip_norm(series, at_width, grid)
    m = series.order
    ks = np.abs(np.arange(-m, m + 1))
    return bool(np.all(np.abs(series.coeffs) <= bound * np.exp(-at_width * ks) + 1e-300))


def empirical_width(series: FourierSeries, candidates: Iterable[float],
                    grid: int = 4096) -> float:
    """Largest candidate width at which the decay certificate holds."""
    best = 0.0
    for w in sorted(candidates):
        if 0.0 <= w < series.strip_h and decay_certificate_ok(series, w, grid):
            best = w
    return best


def _grid_coefficients(values: np.ndarray) -> np.ndarray:
    """FFT coefficients (k = 0..G-1, negative modes wrapped) of grid samples."""
    return np.fft.fft(values) / values.size


def exp_of_series(series: FourierSeries, scale: float = 1.0,
                  grid_size: int | None = None) -> FourierSeries:
    """Fourier coefficients of theta -> exp(scale * series(theta)).

    Sampling happens on a power-of-two grid with at least 4x oversampling
    relative to the input truncation order; the output is truncated where
    the spectral tail drops below TAIL_RTOL relative to the largest
    coefficient.  Aliasing is monitored by recomputing on the doubled grid;
    disagreement or a non-decayed tail raises ResolutionError.  When
    grid_size is omitted the grid escalates automatically up to
    MAX_EXP_GRID before giving up.
    """
    m_in = series.order
    min_grid = max(32, 4 * max(1, m_in))

    def pow2_at_least(n: int) -> int:
        g = 1
        while g < n:
            g <<= 1
        return g

    if grid_size is not None:
        if grid_size & (grid_size - 1) != 0:
            raise DomainError(f"grid_size {grid_size} is not a power of two")
        if grid_size < 4 * max(1, m_in):
            raise DomainError(
                f"grid_size {grid_size} below 4x input order {m_in}"
            )
        grids = [grid_size]
    else:
        g = pow2_at_least(min_grid)
        grids = []
        while g <= MAX_EXP_GRID:
            grids.append(g)
            g <<= 1

    last_error: ResolutionError | None = None
    for g in grids:
        try:
            return _exp_on_grid(series, scale, g)
        except ResolutionError as err:
            last_error = err
            continue
    assert last_error is not None
    raise last_error


def _exp_on_grid(series: FourierSeries, scale: float, grid: int) -> FourierSeries:
    def coeffs_at(g: int) -> np.ndarray:
        th = np.arange(g) / g
        vals = np.exp(scale * series.evaluate_real(th))
        if not np.all(np.isfinite(vals)):
            raise DomainError("exp overflow while sampling exp_of_series")
        return _grid_coefficients(vals)

    c = coeffs_at(grid)
    half = grid // 2
    mags = np.abs(c)
    top = float(np.max(mags))
    if top == 0.0:
        raise DomainError("degenerate zero samples in exp_of_series")
    tol = TAIL_RTOL * top

    def pair_mag(k: int) -> float:
        return max(mags[k], mags[grid - k]) if k > 0 else mags[0]

    m_out = 0
    for k in range(half - 1, 0, -1):
        if pair_mag(k) >= tol:
            m_out = k
            break
    guard = max(2, grid // 16)
    if m_out > half - 1 - guard:
        raise ResolutionError(
            f"spectral tail of exp_of_series not below {TAIL_RTOL:g} within "
            f"alias-safe band (order {m_out} of {half - 1} on grid {grid})"
        )

    # Aliasing check: the doubled grid must reproduce the retained band.
    c2 = coeffs_at(2 * grid)
    out = np.zeros(2 * m_out + 1, dtype=complex)
    worst = 0.0
    for k in range(-m_out, m_out + 1):
        a = c[k % grid]
        b = c2[k % (2 * grid)]
        worst = max(worst, abs(a - b))
        out[k + m_out] = b
    if worst > ALIAS_RTOL * top:
        raise ResolutionError(
            f"aliasing check failed in exp_of_series: doubled-grid coefficient "
            f"shift {worst:.3e} exceeds {ALIAS_RTOL:g} x max"
        )
    return FourierSeries(out, series.strip_h)


# ---------------------------------------------------------------------------
# model parameters and the potential
# ---------------------------------------------------------------------------


def cosine_profile(strip_h: float = 1.0) -> FourierSeries:
    """cos(2 pi theta) / (1 + 2 pi): zero mean, unit C^1 norm."""
    amp = 1.0 / (1.0 + TWO_PI)
    coeffs = np.array([0.5 * amp, 0.0, 0.5 * amp], dtype=complex)
    return FourierSeries(coeffs, strip_h, declared_norm=amp * math.cosh(TWO_PI * strip_h))


def normalize_c1(series: FourierSeries, grid: int = 100_000) -> FourierSeries:
    """Rescale a series to unit C^1 norm (declared_norm rescaled alongside)."""
    norm = series.c1_norm(grid)
    if norm <= 0.0:
        raise DomainError("cannot C1-normalize the zero series")
    declared = None if series.declared_norm is None else series.declared_norm / norm
    return FourierSeries(series.coeffs / norm, series.strip_h, declared)


@dataclass(frozen=True)
class ModelParams:
    """Model data: profile f, coupling K and frequency w.

    The constructor validates the contract (zero mean within 1e-14,
    non-constant, C^1 norm equal to 1 within 1e-10); desk checks against
    closed forms sometimes need a raw un-normalized profile, which is what
    ``validate=False`` is for.
    """

    f: FourierSeries
    K: float
    omega: Frequency
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool):
        if self.K < 0.0 or not math.isfinite(self.K):
            raise DomainError(f"coupling K must be finite and >= 0, got {self.K}")
        if validate:
            scale = max(1.0, float(np.max(np.abs(self.f.coeffs))))
            if abs(self.f.mean) > 1e-14 * scale:
                raise DomainError("profile f must have zero mean")
            if self.f.order == 0:
                raise DomainError("profile f must be non-constant")
            c1 = self.f.c1_norm()
            if abs(c1 - 1.0) > 1e-10:
                raise DomainError(
                    f"profile f must have unit C1 norm (got {c1!r}); "
                    "use normalize_c1() or validate=False"
                )

    @property
    def omega_value(self) -> float:
        return self.omega.value

    def f_sup(self) -> float:
        """sup |f| on the torus (used for spectral-edge scales)."""
        return self.f.sup_real()

    def potential(self, theta):
        """V(theta) = exp(K f(theta + w)) + exp(-K f(theta)), vectorized."""
        th = np.asarray(theta, dtype=float)
        fw = self.f.evaluate_real(np.mod(th + self.omega_value, 1.0))
        f0 = self.f.evaluate_real(th)
        out = np.exp(self.K * fw) + np.exp(-self.K * f0)
        return float(out[()]) if th.ndim == 0 else out


def default_model(K: float, omega: Frequency, strip_h: float = 1.0) -> ModelParams:
    """The standard model: normalized cosine profile at the given width."""
    return ModelParams(cosine_profile(strip_h), K, omega)


def potential(params: ModelParams, theta):
    """Module-level alias for ModelParams.potential."""
    return params.potential(theta)
