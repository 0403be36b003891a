"""Acceptance gate: the ten headline checks, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines;
each check also asserts, so a plain pytest run fails loudly too.
"""

import json
import math
import time

import numpy as np
import pytest

from qplab import (
    FourierSeries,
    Frequency,
    approximant_gap,
    approximant_gap_detail,
    beta,
    build_conjugation,
    build_finite,
    ch_residual,
    criterion,
    default_model,
    eigenvalues_in,
    finite_lyapunov,
    lyapunov_free,
    lyapunov_scan,
    make_liouville,
    perturbed_cocycle,
    solve_homological,
    spectral_edges,
)
from qplab.cli import main as cli_main
from qplab.errors import SmallDivisorError

GOLDEN = Frequency.golden()
NEAR_RESONANT_CF = [1, 1, 1, 20, 72004899337, 1]
RNG = np.random.default_rng(123456)


def _verdict(name: str, passed: bool, detail: str) -> None:
    print(f"{name}: {'PASS' if passed else 'FAIL'} ({detail})", flush=True)
    assert passed, f"{name} failed: {detail}"


def test_c1_free_scan_matches_closed_form():
    t0 = time.monotonic()
    energies = [-1.0, 0.0, 1.0, 2.5, 4.0, 6.0]
    estimates = lyapunov_scan(default_model(0.0, GOLDEN), energies,
                              n=100_000, phase_grid_size=64)
    worst = max(abs(est.value - lyapunov_free(est.energy)) for est in estimates)
    elapsed = time.monotonic() - t0
    _verdict("C1 closed-form Lyapunov scan at K=0",
             worst <= 5e-3 and elapsed < 30.0,
             f"max deviation {worst:.2e} (tol 5e-3), {elapsed:.1f}s of 30s")


def test_c2_conjugation_residuals():
    worst = 0.0
    for K in (0.0, 0.5, 1.0, 2.0):
        conj = build_conjugation(default_model(K, GOLDEN))
        worst = max(worst, conj.residuals["conj"])
    free = build_conjugation(default_model(0.0, GOLDEN))
    exact_ok = (free.k_hat == -1.0 and np.allclose(
        free.C_at(0.0).as_array(), [[0.0, 1.0], [-1.0, 1.0]], atol=1e-14))
    _verdict("C2 conjugation identity for K in {0, 0.5, 1, 2}",
             worst < 1e-8 and exact_ok,
             f"worst residual {worst:.2e} (tol 1e-8), K=0 exact form {exact_ok}")


def test_c3_homological_solver():
    worst = 0.0
    grid = np.arange(4096) / 4096
    for i in range(20):
        modes = {k: complex(RNG.uniform(-1, 1), RNG.uniform(-1, 1)) / k
                 for k in range(1, 7)}
        rhs = FourierSeries.from_modes(modes, strip_h=1.0)
        shift_arg = bool(i % 2)
        y = solve_homological(rhs, GOLDEN, shift_arg=shift_arg)
        lhs = y.evaluate_real((grid + GOLDEN.value) % 1.0) - y.evaluate_real(grid)
        target = rhs.evaluate_real((grid + GOLDEN.value) % 1.0) if shift_arg \
            else -rhs.evaluate_real(grid)
        scale = max(1.0, float(np.max(np.abs(target))))
        worst = max(worst, float(np.max(np.abs(lhs - target))) / scale)
    raised = False
    try:
        solve_homological(FourierSeries.from_modes({62: 1.0}, strip_h=1.5),
                          Frequency.from_cf(NEAR_RESONANT_CF), shift_arg=True)
    except SmallDivisorError:
        raised = True
    _verdict("C3 homological solver on 20 random inputs",
             worst < 1e-9 and raised,
             f"worst relative residual {worst:.2e} (tol 1e-9), "
             f"small divisor raised {raised}")


def test_c4_strong_coupling_lyapunov():
    t0 = time.monotonic()
    ok = True
    details = []
    for K in (3.0, 4.0, 5.0):
        params = default_model(K, GOLDEN)
        high = finite_lyapunov(params, math.exp(K) / 2.0, n=100_000)
        low = finite_lyapunov(params, 0.01, n=100_000)
        ok = ok and high.value > 0.2 * K and low.value < 0.05
        details.append(f"K={K:g}: L(e^K/2)={high.value:.3f}, L(0.01)={low.value:.4f}")
    elapsed = time.monotonic() - t0
    _verdict("C4 hyperbolic vs near-zero energies at K in {3, 4, 5}",
             ok and elapsed < 300.0,
             "; ".join(details) + f"; {elapsed:.1f}s of 300s")


def test_c5_spectral_edges_strong_coupling():
    t0 = time.monotonic()
    params = default_model(3.0, GOLDEN)
    thetas = np.linspace(0.0, 1.0, 16, endpoint=False)
    lo, hi = spectral_edges(params, thetas, 4000)
    ratio = hi / math.exp(3.0 * params.f_sup())
    elapsed = time.monotonic() - t0
    _verdict("C5 spectral edges at K=3, N=4000, 16 phases",
             -1e-8 <= lo <= 0.01 and 0.25 <= ratio <= 4.0 and elapsed < 120.0,
             f"lowest {lo:.3e} in [-1e-8, 0.01], top/e^(3 sup f) = {ratio:.2f} "
             f"in [1/4, 4], {elapsed:.1f}s of 120s")


def test_c6_sturm_bisection_against_dense():
    worst = 0.0
    for _ in range(10):
        K = float(RNG.uniform(0.0, 3.0))
        theta = float(RNG.uniform(0.0, 1.0))
        op = build_finite(default_model(K, GOLDEN), theta, 12)
        dense = np.diag(op.diagonal) - np.diag(np.ones(11), 1) - np.diag(np.ones(11), -1)
        reference = np.linalg.eigvalsh(dense)
        lo, hi = op.gershgorin()
        got = eigenvalues_in(op, (lo - 1.0, hi + 1.0), tol=1e-12)
        worst = max(worst, float(np.max(np.abs(got - reference))))
    op = build_finite(default_model(2.0, GOLDEN), 0.1, 500)
    from qplab import FiniteOperator
    sub = FiniteOperator(499, op.diagonal[:499])
    lo, hi = op.gershgorin()
    big = eigenvalues_in(op, (lo - 1.0, hi + 1.0), tol=1e-12)
    small = eigenvalues_in(sub, (lo - 1.0, hi + 1.0), tol=1e-12)
    interlace = max(
        max(small[k] - big[k + 1] for k in range(499)),
        max(big[k] - small[k] for k in range(499)),
    )
    _verdict("C6 bisection vs dense eigenvalues and interlacing",
             worst <= 1e-9 and interlace <= 1e-10,
             f"dense deviation {worst:.2e} (tol 1e-9), interlacing violation "
             f"{interlace:.2e} (tol 1e-10)")


def test_c7_frequency_classification():
    golden_beta = beta(GOLDEN, 30).value
    liou3 = beta(make_liouville(3.0, 6), 6).value
    crit = criterion(default_model(1.0, make_liouville(45.0, 4)))
    ok = (golden_beta < 0.05
          and abs(liou3 - 3.0) / 3.0 < 0.05
          and crit.met)
    _verdict("C7 beta proxy targets and the coupling criterion",
             ok,
             f"golden beta {golden_beta:.3f} < 0.05, liouville target "
             f"{liou3:.4f} within 5% of 3, criterion met {crit.met} "
             f"(margin {crit.margin:.2f})")


def test_c8_cayley_hamilton_and_gaps():
    worst = 0.0
    for _ in range(1000):
        a, b, c = RNG.uniform(-3.0, 3.0, 3)
        while abs(a) < 0.1:
            a = float(RNG.uniform(-3.0, 3.0))
        m = np.array([[a, b], [c, (1.0 + b * c) / a]])
        worst = max(worst, ch_residual(m))
    free_gaps = [approximant_gap(default_model(0.0, GOLDEN), 0.5, 0.1, s)
                 for s in (1, 2, 3)]
    free_ok = all(g == -math.inf for g in free_gaps)
    envelope_ok = all(
        approximant_gap_detail(default_model(2.0, GOLDEN), 0.5, 0.1, s).within_envelope
        for s in (1, 2, 3))
    _verdict("C8 Cayley-Hamilton residuals and approximant gaps",
             worst < 1e-10 and free_ok and envelope_ok,
             f"worst residual {worst:.2e} (tol 1e-10) over 1000 matrices, "
             f"K=0 gaps exactly zero {free_ok}, K=2 envelope {envelope_ok}")


def test_c9_perturbed_cocycle_identity():
    params = default_model(1.0, GOLDEN)
    conj = build_conjugation(params)
    omega = GOLDEN.value
    worst_defect = 0.0
    worst_trace = 0.0
    for _ in range(100):
        E = float(RNG.uniform(-0.01, 0.01))
        theta = float(RNG.uniform(0.0, 1.0))
        v = params.potential(theta)
        a = np.array([[v - E, -1.0], [1.0, 0.0]])
        c1 = conj.C_at(float((theta + omega) % 1.0)).as_array()
        c0 = conj.C_at(theta).as_array()
        b = perturbed_cocycle(conj, params, E, theta).as_array()
        worst_defect = max(worst_defect, float(np.max(np.abs(
            c1 @ a @ np.linalg.inv(c0) - b))))
        tr = float(np.trace(np.linalg.inv(c1) @ b @ c0))
        worst_trace = max(worst_trace, abs(tr - (v - E)))
    _verdict("C9 perturbed-cocycle identity over 100 random (E, theta)",
             worst_defect < 1e-8 and worst_trace < 1e-8,
             f"worst defect {worst_defect:.2e}, worst trace mismatch "
             f"{worst_trace:.2e} (tol 1e-8)")


def test_c10_deterministic_artifacts(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "model": {"K": 1.0},
        "scan": {"E": {"min": -1.0, "max": 6.0, "step": 0.5},
                 "n": 20_000, "phases": 16},
    }), encoding="utf-8")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    code1 = cli_main(["scan-lyapunov", "--config", str(cfg), "--out", str(out1)])
    code2 = cli_main(["scan-lyapunov", "--config", str(cfg), "--out", str(out2)])
    same = ((out1 / "lyapunov.csv").read_bytes()
            == (out2 / "lyapunov.csv").read_bytes())
    _verdict("C10 repeated runs produce byte-identical CSV",
             code1 == 0 and code2 == 0 and same,
             f"exit codes {code1}/{code2}, identical bytes {same}")
