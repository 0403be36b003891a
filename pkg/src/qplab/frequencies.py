"""Continued-fraction frequencies and their approximation arithmetic.

A Frequency is an irrational in (0, 1) represented by a finite prefix of
its continued-fraction coefficients [a_1, a_2, ...] (all integers >= 1,
arbitrary precision).  Convergents p_n/q_n follow

    p_n = a_n p_{n-1} + p_{n-2},   q_n = a_n q_{n-1} + q_{n-2},
    p_0 = 0, q_0 = 1, p_{-1} = 1, q_{-1} = 0,

so q_1 = a_1 and |w - p_n/q_n| < 1/(q_n q_{n+1}).

A finite prefix only pins w down to its cylinder: the interval between
p_m/q_m and (p_m + p_{m-1})/(q_m + q_{m-1}), of width 1/(q_m (q_m+q_{m-1})).
The Diophantine checks below are therefore interval checks: a verdict is
reported only when it holds for every number in the cylinder, and the few
scales the prefix cannot resolve are flagged as indeterminate rather than
guessed.  Checks are finite-range with explicit witnesses; they are never
membership proofs.

The approximation exponent beta(w) = limsup_n log(q_{n+1}) / q_n is
estimated by the finite-stage lower proxy

    max over 1 <= n < n_max of log(a_{n+1}) / q_n,

which has the same limsup as log(q_{n+1})/q_n (the two stage values differ
by log(q_n + q_{n-1}/a_{n+1})/q_n -> 0) but is not polluted by the
log(q_n)/q_n start-up term that dominates small denominators: on the
golden mean every stage is exactly 0, matching beta = 0, where the raw
ratio would report log 2 from the q_1 = 1 stage.  The raw per-stage ratios
and the tail value log(q_{n_max})/q_{n_max-1} are reported alongside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError, InsufficientDataError, ResourceError

LN10 = math.log(10.0)


def _int_round_exp(x: float) -> int:
    """round(e^x) as an arbitrary-precision integer (x may exceed 700)."""
    if x < 0:
        raise DomainError("negative exponent in _int_round_exp")
    if x <= 700.0:
        return round(math.exp(x))
    d = x / LN10
    di = int(d)
    mant = round(10.0 ** (d - di) * 10 ** 15)
    return mant * 10 ** (di - 15)


def _log_of_int(n: int) -> float:
    """Natural log of a (possibly huge) positive integer."""
    if n <= 0:
        raise DomainError("log of non-positive integer")
    try:
        return math.log(n)
    except OverflowError:
        mant, exp = _mantissa_exp(n)
        return math.log(mant) + exp * LN10


def _mantissa_exp(n: int) -> tuple[float, int]:
    s = str(n)
    digits = len(s)
    lead = float(s[:17]) / 10.0 ** (min(17, digits) - 1)
    return lead, digits - 1


def _ratio(num_log: float, q: int) -> float:
    """num_log / q with graceful underflow for astronomically large q."""
    try:
        return num_log / float(q)
    except OverflowError:
        return 0.0


class Frequency:
    """An irrational frequency given by continued-fraction coefficients.

    ``exact=True`` marks a rational represented by its full (finite)
    expansion rather than a prefix of an infinite one; beta is undefined
    there and the cylinder degenerates to a point.
    """

    __slots__ = ("cf", "note", "exact", "_pq", "_value")

    def __init__(self, cf: Sequence[int], note: str = "", exact: bool = False):
        coeffs = tuple(int(a) for a in cf)
        if not coeffs:
            raise DomainError("continued fraction needs at least one coefficient")
        if any(a < 1 for a in coeffs):
            raise DomainError("continued-fraction coefficients must be >= 1")
        self.cf = coeffs
        self.note = note
        self.exact = exact
        self._pq: list[tuple[int, int]] = []
        self._value: float | None = None

    # -- construction helpers ---------------------------------------------

    @classmethod
    def golden(cls, terms: int = 40) -> "Frequency":
        return cls((1,) * terms, note="golden")

    @classmethod
    def from_cf(cls, cf: Sequence[int], note: str = "") -> "Frequency":
        return cls(cf, note=note)

    @classmethod
    def from_fraction(cls, fr: Fraction, note: str = "") -> "Frequency":
        """Exact rational in (0, 1] via the Euclidean algorithm.

        The right endpoint is admitted because convergent approximants can
        land there (p_1/q_1 = 1/1 for any [0; 1, ...] expansion); on the
        torus it acts like frequency zero.
        """
        if not (0 < fr <= 1):
            raise DomainError(f"fraction must lie in (0, 1], got {fr}")
        u, v = fr.denominator, fr.numerator
        cf: list[int] = []
        while v:
            a, r = divmod(u, v)
            cf.append(a)
            u, v = v, r
        if len(cf) > 1 and cf[-1] == 1:  # canonical form without trailing 1
            cf.pop()
            cf[-1] += 1
        return cls(cf, note=note or f"rational {fr}", exact=True)

    # -- pickling (drop caches) --------------------------------------------

    def __getstate__(self):
        return {"cf": self.cf, "note": self.note, "exact": self.exact}

    def __setstate__(self, state):
        self.__init__(state["cf"], state["note"], state["exact"])

    # -- convergents and values ---------------------------------------------

    def convergents(self, n_max: int) -> list[tuple[int, int]]:
        """[(p_1, q_1), ..., (p_{n_max}, q_{n_max})], exact integers."""
        if n_max < 1:
            raise DomainError("n_max must be >= 1")
        if n_max > len(self.cf):
            raise InsufficientDataError(
                f"{n_max} convergents requested but only {len(self.cf)} "
                "continued-fraction coefficients stored"
            )
        while len(self._pq) < n_max:
            n = len(self._pq)
            a = self.cf[n]
            p1, q1 = self._pq[n - 1] if n >= 1 else (0, 1)
            if n >= 2:
                p0, q0 = self._pq[n - 2]
            else:
                p0, q0 = (0, 1) if n == 1 else (1, 0)
            self._pq.append((a * p1 + p0, a * q1 + q0))
        return self._pq[:n_max]

    def fraction(self, depth: int | None = None) -> Fraction:
        depth = len(self.cf) if depth is None else depth
        p, q = self.convergents(depth)[-1]
        return Fraction(p, q)

    @property
    def value(self) -> float:
        """Float value of the deepest stored convergent."""
        if self._value is None:
            p, q = self.convergents(len(self.cf))[-1]
            self._value = p / q if q.bit_length() <= 500 else float(Fraction(p, q))
        return self._value

    def cylinder_width(self, depth: int | None = None) -> Fraction:
        """Width of the set of reals whose expansion starts with this prefix."""
        depth = len(self.cf) if depth is None else depth
        cv = self.convergents(depth)
        q1 = cv[-1][1]
        q0 = cv[-2][1] if depth >= 2 else 1
        if self.exact and depth == len(self.cf):
            return Fraction(0)
        return Fraction(1, q1 * (q1 + q0))

    # -- exact mode arithmetic ----------------------------------------------

    def _endpoints(self) -> list[tuple[int, int]]:
        cv = self.convergents(len(self.cf))
        p1, q1 = cv[-1]
        if self.exact:
            return [(p1, q1)]
        p0, q0 = cv[-2] if len(cv) >= 2 else (1, 0)
        return [(p1, q1), (p1 + p0, q1 + q0)]

    def mode_fraction(self, k: int) -> Fraction:
        """k * w mod 1 as an exact fraction of the deepest convergent."""
        p, q = self.convergents(len(self.cf))[-1]
        return Fraction((k * p) % q, q)

    def mode_distance(self, k: int) -> float:
        """Distance of k * w to the nearest integer (deepest convergent)."""
        p, q = self.convergents(len(self.cf))[-1]
        r = (k * p) % q
        return min(r, q - r) / q

    def mode_phases(self, ks) -> "np.ndarray":
        """exp(2 pi i k w) for each k, phases reduced mod 1 exactly first."""
        import numpy as np

        p, q = self.convergents(len(self.cf))[-1]
        fracs = np.array([((int(k) * p) % q) / q for k in ks], dtype=float)
        return np.exp(2j * math.pi * fracs)

    def nearest_convergent_q(self, k: int) -> int:
        """Convergent denominator closest to |k| (diagnostics for divisors)."""
        k = abs(int(k))
        qs = [q for _, q in self.convergents(len(self.cf))]
        return min(qs, key=lambda q: abs(q - k))

    # -- beta proxy -----------------------------------------------------------

    def beta(self, n_max: int = 30) -> "BetaEstimate":
        return beta(self, n_max)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> str:
        payload: dict = {"cf": list(self.cf), "note": self.note}
        if self.exact:
            payload["exact"] = True
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Frequency":
        payload = json.loads(text)
        return cls([int(a) for a in payload["cf"]], payload.get("note", ""),
                   payload.get("exact", False))

    def __repr__(self):
        shown = [str(a) if a < 10 ** 12 else f"~1e{len(str(a)) - 1}" for a in self.cf[:8]]
        if len(self.cf) > 8:
            shown.append("...")
        tag = " exact" if self.exact else ""
        label = f" {self.note!r}" if self.note else ""
        return f"Frequency([{', '.join(shown)}]{tag}{label})"


@dataclass(frozen=True)
class BetaStage:
    n: int
    q_n: int
    a_next: int
    growth: float   # log(a_{n+1}) / q_n  (the headline, limsup-equivalent)
    full: float     # log(q_{n+1}) / q_n  (raw ratio, inflated at small q_n)


@dataclass(frozen=True)
class BetaEstimate:
    """Finite-stage lower proxy for beta(w) with convergence diagnostics."""

    value: float
    tail: float
    n_max: int
    stages: tuple[BetaStage, ...]


def convergents(omega: Frequency, n_max: int) -> list[tuple[int, int]]:
    return omega.convergents(n_max)


def log_approximation_error(omega: Frequency, n: int) -> float:
    """log |w - p_n/q_n| with w the deepest stored convergent, exact integers.

    -inf when the requested convergent is the deepest one (or the expansion
    is an exact rational equal to it): the representable error is zero.
    """
    p_big, q_big = omega.convergents(len(omega.cf))[-1]
    p, q = omega.convergents(n)[-1]
    num = abs(p_big * q - p * q_big)
    if num == 0:
        return -math.inf
    return _log_of_int(num) - _log_of_int(q_big) - _log_of_int(q)


def beta(omega: Frequency, n_max: int = 30) -> BetaEstimate:
    """Running max of log(a_{n+1})/q_n over 1 <= n < n_max, plus tail.

    Monotone nondecreasing in n_max.  Degenerate (rational) frequencies are
    rejected since the limsup is undefined there.
    """
    if n_max < 3:
        raise DomainError("beta proxy needs n_max >= 3")
    if omega.exact:
        raise DomainError("beta is undefined for exact rationals")
    cv = omega.convergents(n_max)
    qs = [1] + [q for _, q in cv]          # q_0, q_1, ..., q_{n_max}
    stages = []
    for n in range(1, n_max):
        a_next = omega.cf[n]               # a_{n+1}
        growth = _ratio(_log_of_int(a_next), qs[n])
        full = _ratio(_log_of_int(qs[n + 1]), qs[n])
        stages.append(BetaStage(n, qs[n], a_next, growth, full))
    tail = _ratio(_log_of_int(qs[n_max]), qs[n_max - 1])
    return BetaEstimate(max(s.growth for s in stages), tail, n_max, tuple(stages))


# ---------------------------------------------------------------------------
# Diophantine finite-range checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiophantineParams:
    """kappa / |n|^tau modulus; kappa in (0, 1/2] (larger is vacuous)."""

    kappa: float
    tau: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.kappa <= 0.5):
            raise DomainError(f"kappa must lie in (0, 1/2], got {self.kappa}")
        if not (self.tau > 0.0):
            raise DomainError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class Witness:
    n: int
    distance: float
    threshold: float

    @property
    def margin(self) -> float:
        return math.inf if self.threshold == 0.0 else self.distance / self.threshold


@dataclass(frozen=True)
class DiophantineCheck:
    """Finite-range verdict.  Never a membership proof.

    ``passed`` means the bound held for every n in range, for every number
    in the prefix cylinder.  ``witness`` is the worst scale encountered.
    ``indeterminate`` lists scales the stored prefix cannot resolve.
    """

    kind: str
    passed: bool
    n_range: int
    witness: Witness | None
    margin: float
    indeterminate: tuple[int, ...]


def _distance_interval(endpoints: list[tuple[int, int]], n: int):
    """Range of ||n x|| as x sweeps the cylinder: (d_lo, d_hi) exact-ish."""
    vals = []
    floors = []
    half_floors = []
    for p, q in endpoints:
        r = (n * p) % q
        vals.append(min(r, q - r) / q)
        floors.append((n * p) // q)
        half_floors.append((2 * n * p) // q)
    d_lo, d_hi = min(vals), max(vals)
    if len(endpoints) == 2:
        if floors[0] != floors[1] or any((n * p) % q == 0 for p, q in endpoints):
            d_lo = 0.0
        if half_floors[0] != half_floors[1] and floors[0] == floors[1]:
            d_hi = 0.5
    return d_lo, d_hi


def _range_check(omega: Frequency, n_range: int, threshold_fn, kind: str) -> DiophantineCheck:
    if n_range < 0:
        raise DomainError("n_range must be >= 0")
    if n_range == 0:
        return DiophantineCheck(kind, True, 0, None, math.inf, ())
    endpoints = omega._endpoints()
    width = float(omega.cylinder_width())
    failed = False
    worst: Witness | None = None
    worst_ratio = math.inf
    indeterminate: list[int] = []
    for n in range(1, n_range + 1):
        t = threshold_fn(n)
        if n * width >= 0.5 and not omega.exact:
            indeterminate.append(n)
            continue
        d_lo, d_hi = _distance_interval(endpoints, n)
        if d_hi < t:
            failed = True
            d_report = d_hi
        elif d_lo >= t:
            d_report = d_lo
        else:
            indeterminate.append(n)
            continue
        ratio = math.inf if t == 0.0 else d_report / t
        if ratio < worst_ratio:
            worst_ratio = ratio
            worst = Witness(n, d_report, t)
    passed = (not failed) and not indeterminate
    return DiophantineCheck(kind, passed, n_range, worst, worst_ratio, tuple(indeterminate))


def check_dc(omega: Frequency, params: DiophantineParams, n_range: int) -> DiophantineCheck:
    """||n w|| >= kappa / n^tau for 1 <= n <= n_range (both signs by symmetry)."""
    return _range_check(omega, n_range, lambda n: params.kappa / float(n) ** params.tau, "dc")


def check_sdc(omega: Frequency, kappa: float, n_range: int) -> DiophantineCheck:
    """||n w|| >= kappa / (n log^2(n+1)) for 1 <= n <= n_range."""
    if kappa < 0.0:
        raise DomainError("kappa must be >= 0")
    return _range_check(
        omega, n_range,
        lambda n: kappa / (n * math.log(n + 1.0) ** 2), "sdc",
    )


# ---------------------------------------------------------------------------
# Liouville constructions
# ---------------------------------------------------------------------------


def _grow_coefficients(coeffs: list[int], target_beta: float, n_terms: int,
                       max_digits: int) -> tuple[list[int], int | None]:
    """Append stages a_{n+1} ~ e^{beta q_n} / q_n until n_terms coefficients.

    Once the next coefficient would exceed the digit budget the expansion
    continues with 1s (the running-max proxy keeps the realized peak); the
    saturation stage index is returned for the caller's note.  If no growth
    stage fits at all the target is unrealizable within the budget.
    """
    grew = False
    saturated_at: int | None = None
    p1, q1 = 0, 1
    p0, q0 = 1, 0
    for a in coeffs:
        p1, q1, p0, q0 = a * p1 + p0, a * q1 + q0, p1, q1
    while len(coeffs) < n_terms:
        q_n = q1
        if saturated_at is None and q_n > int(max_digits * LN10 / target_beta) + 1:
            if not grew:
                raise ResourceError(
                    f"target beta {target_beta} needs a coefficient with more than "
                    f"{max_digits} digits at the first growth stage"
                )
            saturated_at = len(coeffs)
        if saturated_at is not None:
            a = 1
        else:
            x = target_beta * q_n
            if x <= 700.0:
                ex = math.exp(x)
                a = max(1, min(round(ex / q_n), math.floor(ex)))
            else:
                a = max(1, _int_round_exp(x - _log_of_int(q_n)))
            grew = grew or a > 1
        coeffs.append(a)
        p1, q1, p0, q0 = a * p1 + p0, a * q1 + q0, p1, q1
    return coeffs, saturated_at


def make_liouville(target_beta: float, n_terms: int, *,
                   max_digits: int = 10_000) -> Frequency:
    """Frequency whose beta proxy approaches target_beta.

    Stages follow a_{n+1} = max(1, round(e^{target_beta q_n} / q_n)) clamped
    to floor(e^{target_beta q_n}) so no stage overshoots the target; the
    realized proxy undershoots by about log(q_n)/q_n at the growth stages
    (under 5% of a target ~3 once q_n >= 20).  Double-exponential growth
    saturates the digit budget after a couple of stages, after which the
    expansion continues with 1s and the note records the saturation.
    """
    if not (target_beta > 0.0) or not math.isfinite(target_beta):
        raise DomainError("target_beta must be positive and finite")
    if n_terms < 2:
        raise DomainError("n_terms must be >= 2")
    coeffs, saturated_at = _grow_coefficients([1], target_beta, n_terms, max_digits)
    note = f"liouville target_beta={target_beta:g}"
    if saturated_at is not None:
        note += f" (1s after stage {saturated_at}: digit budget {max_digits})"
    return Frequency(coeffs, note=note)


def make_liouville_near(omega0: Frequency, delta: float, target_beta: float,
                        n_terms: int, *, max_digits: int = 10_000) -> Frequency:
    """Liouville-type frequency within delta of omega0.

    Prefixes omega0's expansion until the cylinder diameter drops below
    delta (every continuation then stays within delta of omega0), then
    appends growth stages as in make_liouville.
    """
    if not (delta > 0.0):
        raise DomainError("delta must be positive")
    prefix: list[int] | None = None
    for depth in range(1, len(omega0.cf) + 1):
        if omega0.cylinder_width(depth) < delta:
            prefix = list(omega0.cf[:depth])
            break
    if prefix is None:
        raise InsufficientDataError(
            f"omega0 stores too few coefficients to pin a cylinder below {delta:g}"
        )
    if n_terms <= len(prefix):
        raise DomainError(
            f"n_terms={n_terms} leaves no room beyond the {len(prefix)}-term prefix"
        )
    coeffs, saturated_at = _grow_coefficients(prefix, target_beta, n_terms, max_digits)
    note = f"liouville target_beta={target_beta:g} near {omega0.note or 'omega0'} (delta={delta:g})"
    if saturated_at is not None:
        note += f" (1s after stage {saturated_at})"
    return Frequency(coeffs, note=note)
