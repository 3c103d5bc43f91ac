"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even
without ``-s``).  Criterion 8 summarizes the property tests run earlier in the
same session, or runs them in a subprocess when this file is run alone.
"""
from __future__ import annotations

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from hcm.coupling import huygens_diffusive, sine_diffusive
from hcm.dynamics import SimState, SystemConfig, simulate, step, step_truncated, sync_stability_probe
from hcm.fluctuations import in_Q, star_fluctuation_bound, survival_experiment
from hcm.netgen import degree_profile, make_erdos_renyi, make_layered, make_ring, make_star, symmetrized
from hcm.reduced import EXPANDING, PERIODIC, classify, lyapunov_estimate, make_reduced, shadow_check, tent_family
from hcm.spectral import (
    coupling_alpha_interval,
    eig_extremes,
    er_concentration,
    laplacian,
    ring_eigs,
    sparse_extremes,
)
from hcm.torus import circle_dist, sample_uniform

# desk-scale layered network shared by criteria 2, 6 and 7
DESK_LAYERS = [(1.0, 10), (0.5, 10), (0.25, 10)]
DESK_N, DESK_DELTA, DESK_D = 20_000, 400, 20
DESK_LOW = DESK_N - sum(c for _, c in DESK_LAYERS)


def desk_graph(seed: int):
    return make_layered(DESK_D, DESK_DELTA, DESK_LAYERS, DESK_LOW, seed)


def report(capsys, n: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")


def test_criterion_1_table_regimes(capsys):
    t0 = time.perf_counter()
    reps = [classify(tent_family(b)) for b in (0.15, 0.3, 0.6)]
    dt = time.perf_counter() - t0
    fixed = reps[1]
    checks = [
        reps[0].regime == EXPANDING,
        fixed.regime == PERIODIC and fixed.period == 1 and circle_dist(fixed.orbit[0], 0.0) < 1e-9,
        reps[2].regime == PERIODIC and reps[2].period == 2,
        dt < 1.0,
    ]
    ok = all(checks)
    labels = [f"{r.regime}/p{r.period}" for r in reps]
    report(capsys, 1, ok, f"beta 0.15,0.3,0.6 -> {labels}, runtime {dt:.3f}s")
    assert ok


def _desk_seed(seed: int, T: int = 10_000, transient: int = 1_000, xi: float = 0.05):
    g = desk_graph(seed)
    h = sine_diffusive()
    cfg = SystemConfig(2, 0.6, g, h)
    L = g.n_low
    kappas = degree_profile(g).kappas
    tr = simulate(cfg, SimState.uniform(g.n_nodes, seed), T, record=range(L, g.n_nodes))
    orbit2 = classify(tent_family(0.6))
    out = {"k1": [], "k2": [], "k4": []}
    for j, kap in enumerate(kappas):
        v = tr.trace(L + j)
        if kap == 1.0:
            out["k1"].append(shadow_check(v, orbit2, xi, transient).sup_dist)
        elif kap == 0.5:
            out["k2"].append(float(np.max(circle_dist(v[transient:], 0.0))))
        else:
            gmap = make_reduced(2, 0.6, kap, h)
            w = v[transient:]
            out["k4"].append(lyapunov_estimate(gmap, len(w), trace=w))
    ok = (max(out["k1"]) <= xi) and (max(out["k2"]) <= xi) and (min(out["k4"]) > 0.1)
    return ok, out


def test_criterion_2_desk_figure(capsys):
    n_seeds, need = 20, 18
    t0 = time.perf_counter()
    passed, failed, rows = 0, 0, []
    for seed in range(n_seeds):
        ok, out = _desk_seed(seed)
        passed += ok
        failed += not ok
        rows.append(
            f"seed{seed}:{'ok' if ok else 'fail'}"
            f"(k1 sup {max(out['k1']):.3f}, k1/2 dist {max(out['k2']):.3f}, k1/4 lyap {min(out['k4']):.2f})"
        )
        if failed > n_seeds - need:  # outcome decided: the pass count can no longer reach `need`
            break
    dt = time.perf_counter() - t0
    ran = passed + failed
    ok = passed >= need and dt < 300
    report(
        capsys, 2, ok,
        f"{passed}/{ran} seeds pass (need {need}/{n_seeds}, xi=0.05); {dt:.0f}s for {ran} seeds; " + "; ".join(rows[:3]),
    )
    assert ok


def _label(rep):
    if rep.regime == EXPANDING:
        return "E"
    if rep.regime == PERIODIC:
        return f"P{rep.period}"
    return "U"


def test_criterion_3_bifurcation_thresholds(capsys):
    betas = np.round(np.arange(0, 0.65 + 1e-9, 0.005), 10)
    labels = [_label(classify(tent_family(float(b)))) for b in betas]
    changes = [(float(betas[i]), float(betas[i + 1]), labels[i], labels[i + 1])
               for i in range(len(betas) - 1) if labels[i] != labels[i + 1]]
    first = next((0.5 * (a + b) for a, b, x, y in changes if x == "E"), math.nan)
    second = next((0.5 * (a + b) for a, b, x, y in changes if x == "P1" and y == "P2"), math.nan)
    t1, t2 = 1 / (2 * math.pi), 3 / (2 * math.pi)
    ok = abs(first - t1) <= 0.01 and abs(second - t2) <= 0.01
    report(
        capsys, 3, ok,
        f"boundaries {first:.4f} (vs {t1:.5f}) and {second:.4f} (vs {t2:.5f}); transitions {[(a, x, y) for a, _, x, y in changes]}",
    )
    assert ok


def test_criterion_4_star_concentration(capsys):
    L, alpha, eps, trials, T = 5000, 0.6, 0.05, 200, 1000
    t0 = time.perf_counter()
    cfg = SystemConfig(2, alpha, make_star(L), sine_diffusive())
    res = survival_experiment(cfg, eps, T, trials, seed=2024)
    dt = time.perf_counter() - t0
    bound = star_fluctuation_bound(L, eps, alpha)
    exceed = float(np.mean(np.abs(res.xi0[:, 0]) > eps))
    slack = 3 * math.sqrt(bound * (1 - bound) / trials)
    surv_floor = float(np.clip(1 - (T + 1) * bound, 0, 1))
    ok = exceed <= bound + slack and res.fraction >= surv_floor and dt < 120
    report(
        capsys, 4, ok,
        f"initial exceedance {exceed:.4f} <= {bound:.3g}+{slack:.3g}; survival {res.fraction:.3f} >= {surv_floor:.6f}; {dt:.0f}s",
    )
    assert ok


def test_criterion_5_truncation_coincidence(capsys):
    g = make_layered(DESK_D, DESK_DELTA, DESK_LAYERS, 4000, seed=5)
    h = sine_diffusive()
    cfg = SystemConfig(2, 0.6, g, h)
    eps, n = 0.1, 10_000
    L = g.n_low
    in_q = mismatches = 0
    for s in range(n):
        z = sample_uniform(g.n_nodes, s, 0xC5)
        if not in_Q(z[:L], eps, g, h):
            continue
        in_q += 1
        a = step(SimState(z), cfg).z
        b = step_truncated(SimState(z), cfg, eps).z
        mismatches += not np.array_equal(a, b)
    z = sample_uniform(g.n_nodes, 1, 0xC6)
    z[:L] = 0.25
    adv_in_q = in_Q(z[:L], eps, g, h)
    adv_differs = not np.array_equal(step(SimState(z), cfg).z, step_truncated(SimState(z), cfg, eps).z)
    ok = mismatches == 0 and in_q > 0 and not adv_in_q and adv_differs
    report(
        capsys, 5, ok,
        f"{in_q}/{n} states in Q, {mismatches} bitwise mismatches; adversarial in_Q={adv_in_q}, outputs differ={adv_differs}",
    )
    assert ok


def test_criterion_6_spectral_dichotomy(capsys):
    n, p = 1000, 0.3
    lo, hi = er_concentration(n, p, 0.1)
    good = 0
    for seed in range(100):
        sp = eig_extremes(laplacian(make_erdos_renyi(n, p, seed)))
        good += (sp.lambdaN / sp.lambda2 < 3) and (sp.lambda2 > lo) and (sp.lambdaN < hi)
    sx = sparse_extremes(symmetrized(desk_graph(1)))
    ring_ok = all(
        np.allclose(np.sort(ring_eigs(m, k)), eig_extremes(laplacian(make_ring(m, k))).values, atol=1e-8)
        for m in range(4, 65)
        for k in range(0, m)
        if 2 * k < m
    )
    ok = good >= 95 and sx.ratio_lower > 3 and ring_ok
    report(
        capsys, 6, ok,
        f"ER(1000,0.3): {good}/100 seeds with ratio<3 inside ({lo:.1f}, {hi:.1f}); "
        f"layered ratio >= {sx.ratio_lower:.2f} (certified lower bound); ring closed form matches: {ring_ok}",
    )
    assert ok


def test_criterion_7_sync_probe(capsys):
    h = huygens_diffusive()
    g = make_erdos_renyi(500, 0.3, 0)
    sp = eig_extremes(laplacian(g))
    iv = coupling_alpha_interval(sp, 2, h, degree_profile(g).delta_max)
    if iv is None:
        report(capsys, 7, False, "empty alpha interval for ER(500, 0.3)")
        pytest.fail("empty alpha interval")
    mid = 0.5 * (iv[0] + iv[1])
    er = sync_stability_probe(SystemConfig(2, mid, g, h), 1e-3, 200, 0)
    er_ok = er.verdict == "attracting" and er.spread[-1] < 1e-8
    lay = symmetrized(desk_graph(1))
    verdicts = []
    for a in np.linspace(iv[0], iv[1], 5):
        pr = sync_stability_probe(SystemConfig(2, float(a), lay, h), 1e-3, 200, 0)
        verdicts.append(pr.verdict == "repelling" and pr.spread[-1] > 0.1)
    ok = er_ok and all(verdicts)
    report(
        capsys, 7, ok,
        f"ER alpha interval ({iv[0]:.4f}, {iv[1]:.4f}), midpoint {er.verdict} in {er.steps} steps; "
        f"layered repelling at {sum(verdicts)}/5 grid alphas",
    )
    assert ok


def test_criterion_8_invariant_suites(capsys, invariant_record):
    collected = invariant_record["collected"]
    outcomes = invariant_record["outcomes"]
    here = [c for c in collected if "test_acceptance" not in c]
    if here and all(c in outcomes for c in here):
        passed = sum(outcomes[c] == "passed" for c in here)
        total = len(here)
        failed = [c for c in here if outcomes[c] != "passed"]
        source = "this session"
    else:
        root = Path(__file__).resolve().parent
        res = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-m", "invariant", "-p", "no:cacheprovider", str(root)],
            capture_output=True, text=True,
        )
        tail = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else res.stderr[-200:]
        total = passed = -1
        failed = [] if res.returncode == 0 else [tail]
        source = f"subprocess ({tail})"
    ok = not failed and (total == -1 or passed == total)
    detail = f"{passed}/{total} property tests pass, 1000 cases each" if total >= 0 else "property tests"
    report(capsys, 8, ok, f"{detail} [{source}]" + (f"; failed: {failed}" if failed else ""))
    assert ok
