"""Gordon-criterion probes: rational approximants and period-block algebra.

The obstruction to point spectrum rests on two computable pieces:

* the arithmetic test beta(w) > 40 K (with the caveat that only a
  finite-stage lower proxy of beta is available), and
* the period-block algebra at a convergent q = q_n: for B = A^q(theta, E)
  the Cayley-Hamilton identity B^2 - tr(B) B + I = 0 forces

      max(||B v||, ||B^2 v||, ||B^{-1} v||) >= ||v|| / 2

  for every unit v, so a solution that matches the periodic approximant
  over three blocks cannot decay.  The probe compares the true cocycle
  against its approximant A_{p_n/q_n} at the same (theta, E) and evaluates
  the three-block bound.

Everything is desk-scale: genuinely Liouville frequencies put the relevant
q_n far beyond any product budget, so the machinery is exercised at the
accessible stages and the scale limits are reported, never extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cocycle import product
from .errors import DomainError, ResourceError
from .fourier import ModelParams
from .frequencies import Frequency, beta, log_approximation_error

MAX_PRODUCT_STEPS = 1_000_000
_BETA_STAGES = 30


def _beta_proxy(omega: Frequency):
    if omega.exact:
        raise DomainError("Gordon probes need an irrational frequency "
                          "(beta is undefined for exact rationals)")
    if len(omega.cf) < 3:
        raise DomainError("frequency stores too few coefficients for a beta proxy")
    return beta(omega, min(_BETA_STAGES, len(omega.cf)))


@dataclass(frozen=True)
class CriterionResult:
    """beta proxy versus 40K.

    The proxy is a lower bound for the limsup, so met=True is trustworthy
    at the stored stages while met=False may flip with more coefficients.
    degenerate marks K = 0, where the comparison (meant for sizeable
    coupling) collapses to beta > 0.
    """

    met: bool
    margin: float
    beta_proxy: float
    beta_tail: float
    threshold: float
    degenerate: bool


def criterion(params: ModelParams) -> CriterionResult:
    est = _beta_proxy(params.omega)
    threshold = 40.0 * params.K
    margin = est.value - threshold
    return CriterionResult(margin > 0.0, margin, est.value, est.tail,
                           threshold, params.K == 0.0)


def _stage_fraction(omega: Frequency, n_stage: int) -> tuple[int, int]:
    if n_stage < 1:
        raise DomainError("n_stage must be >= 1")
    p, q = omega.convergents(n_stage)[-1]
    return p, q


def _rational_model(params: ModelParams, p: int, q: int) -> ModelParams:
    approx = Frequency.from_fraction(Fraction(p, q), note=f"approximant {p}/{q}")
    return ModelParams(params.f, params.K, approx, validate=False)


def _gap_pieces(params: ModelParams, E: float, theta: float, n_stage: int,
                max_q: int = MAX_PRODUCT_STEPS):
    p, q = _stage_fraction(params.omega, n_stage)
    if q > max_q:
        raise ResourceError(
            f"convergent denominator q_{n_stage} = {q} exceeds the product "
            f"budget {max_q}"
        )
    true_prod = product(params, theta, E, q)
    rat_prod = product(_rational_model(params, p, q), theta, E, q)
    s = max(true_prod.log_scale, rat_prod.log_scale)
    delta = (math.exp(true_prod.log_scale - s) * true_prod.matrix.as_array()
             - math.exp(rat_prod.log_scale - s) * rat_prod.matrix.as_array())
    gap_rel = float(np.sqrt((delta * delta).sum()))
    return gap_rel, s, p, q


def approximant_gap(params: ModelParams, E: float, theta: float, n_stage: int,
                    max_q: int = MAX_PRODUCT_STEPS) -> float:
    """log of ||A_w^{q_n} - A_{p_n/q_n}^{q_n}|| relative to the product scale.

    -inf means the two products agree to the last bit (K = 0, or w already
    rational and equal to its approximant).
    """
    gap_rel, _, _, _ = _gap_pieces(params, E, theta, n_stage, max_q)
    return math.log(gap_rel) if gap_rel > 0.0 else -math.inf


@dataclass(frozen=True)
class GapDetail:
    q: int
    gap_rel: float        # ||difference|| / e^{log product scale}
    log_gap_abs: float    # log of the un-renormalized gap
    log_envelope: float   # log of q e^{10 K q} |w - p/q|
    within_envelope: bool


def approximant_gap_detail(params: ModelParams, E: float, theta: float,
                           n_stage: int, max_q: int = MAX_PRODUCT_STEPS) -> GapDetail:
    """Gap plus the telescoping envelope q_n e^{10 K q_n} |w - p_n/q_n|."""
    gap_rel, s, _, q = _gap_pieces(params, E, theta, n_stage, max_q)
    log_gap = (s + math.log(gap_rel)) if gap_rel > 0.0 else -math.inf
    log_env = (math.log(q) + 10.0 * params.K * q
               + log_approximation_error(params.omega, n_stage))
    within = log_gap <= log_env + 1e-9 or log_gap == -math.inf
    return GapDetail(q, gap_rel, log_gap, log_env, within)


def ch_residual(matrix: np.ndarray) -> float:
    """Scaled Cayley-Hamilton defect ||B^2 - tr(B) B + det(B) I|| / max(1, ||B||^2).

    Zero for every 2x2 matrix in exact arithmetic; float rounding leaves
    a residual at the 1e-16 level, so anything above 1e-10 flags a broken
    product pipeline.
    """
    b = np.asarray(matrix, dtype=float)
    x = b @ b - np.trace(b) * b + (b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]) * np.eye(2)
    scale = max(1.0, float((b * b).sum()))
    return float(np.sqrt((x * x).sum())) / scale


@dataclass(frozen=True)
class CayleyHamiltonProbe:
    """Period-block data at one convergent scale.

    solution_bound is min over the two coordinate initial conditions of
    max(||B v||, ||B^2 v||, ||B^{-1} v||) with B = A^{q}(theta, E) in true
    scale; the Gordon inequality puts it at >= 1/2 whenever the approximant
    error is negligible over three blocks.  log_solution_bound carries the
    value safely when the blocks grow beyond float range.
    """

    q: int
    residual: float
    solution_bound: float
    log_solution_bound: float


def cayley_hamilton_quantity(params: ModelParams, E: float, theta: float,
                             n_stage: int,
                             max_q: int = MAX_PRODUCT_STEPS) -> CayleyHamiltonProbe:
    _, q = _stage_fraction(params.omega, n_stage)
    if q > max_q:
        raise ResourceError(
            f"convergent denominator q_{n_stage} = {q} exceeds the product "
            f"budget {max_q}"
        )
    block = product(params, theta, E, q)
    double = product(params, theta, E, 2 * q)
    m = block.matrix.as_array()
    residual = ch_residual(m)
    adj = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    m2 = double.matrix.as_array()
    bound_log = math.inf
    for v in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        candidates = [
            block.log_scale + _log_norm(m @ v),
            double.log_scale + _log_norm(m2 @ v),
            block.log_scale + _log_norm(adj @ v),
        ]
        bound_log = min(bound_log, max(candidates))
    bound = math.exp(bound_log) if bound_log < 700.0 else math.inf
    return CayleyHamiltonProbe(q, residual, bound, bound_log)


def _log_norm(v: np.ndarray) -> float:
    n = float(np.hypot(v[0], v[1]))
    return math.log(n) if n > 0.0 else -math.inf


@dataclass(frozen=True)
class ScaleProbe:
    q: int
    approximant_error: float  # relative gap, >= 0
    ch_quantity: float        # three-block solution bound (min over v)


@dataclass(frozen=True)
class GordonReport:
    K: float
    beta_proxy: float
    beta_tail: float
    criterion_met: bool
    degenerate: bool
    per_scale: tuple[ScaleProbe, ...]

    def to_dict(self) -> dict:
        def safe(x: float):
            return x if math.isfinite(x) else repr(x)

        return {
            "K": self.K,
            "beta_proxy": safe(self.beta_proxy),
            "beta_tail": safe(self.beta_tail),
            "criterion_met": self.criterion_met,
            "degenerate": self.degenerate,
            "per_scale": [
                {"q": s.q, "approximant_error": safe(s.approximant_error),
                 "ch_quantity": safe(s.ch_quantity)}
                for s in self.per_scale
            ],
        }


REPORT_Q_DEFAULT = 50_000


def gordon_report(params: ModelParams, E: float, theta: float,
                  stages=None, max_q: int = REPORT_Q_DEFAULT) -> GordonReport:
    """Criterion verdict plus per-convergent gap and block bounds.

    stages defaults to every stored stage except the deepest (whose
    approximant coincides with the working value of w) with q_n within the
    budget; entries come out ordered by increasing q_n.  The default budget
    is deliberately tighter than the per-probe MAX_PRODUCT_STEPS: a report
    touches five products of length q at every stage, so 50k keeps it
    interactive; raise max_q for a deep scan.
    """
    crit = criterion(params)
    if stages is None:
        stages = []
        for n in range(1, len(params.omega.cf)):
            q = params.omega.convergents(n)[-1][1]
            if q > max_q:
                break
            stages.append(n)
    rows = []
    for n in sorted(set(int(n) for n in stages)):
        gap_rel, _, _, q = _gap_pieces(params, E, theta, n, max_q)
        probe = cayley_hamilton_quantity(params, E, theta, n, max_q)
        rows.append(ScaleProbe(q, gap_rel, probe.solution_bound))
    return GordonReport(params.K, crit.beta_proxy, crit.beta_tail, crit.met,
                        crit.degenerate, tuple(rows))
