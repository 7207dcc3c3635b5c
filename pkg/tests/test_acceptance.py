"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``[PASS]`` or ``[FAIL]`` line through
``record_criterion``; the lines are repeated in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from clihelp import EDGE, rerun_identical
from conftest import record_criterion
from drsubmax.double_greedy import run_double_greedy
from drsubmax.frank_wolfe import approx_local_max
from drsubmax.functions import (HadamardRestriction, PsumRestriction, TableFunction, multilinear_exact,
                                multilinear_sampled, random_coverage, random_cut, random_quadratic)
from drsubmax.fwmcg import build_guess_set, fwmcg_run
from drsubmax.oracles import (brute_force_ratio_corpus, brute_force_set_opt, grid_opt, non_dr_fixture,
                              random_dr_function, run_bound_suite, smoothness_oracle)
from drsubmax.polytope import cardinality, diameter_bound, hypercube, knapsack, membership, partition_matroid
from drsubmax.solver import SolveParams, solve, verify_constants

FAMILIES = ("quadratic", "cut", "coverage")


def random_constraint(rng, n, k):
    kind = k % 4
    if kind == 0:
        return hypercube(n)
    if kind == 1:
        return cardinality(n, int(rng.integers(1, n + 1)))
    if kind == 2:
        w = rng.uniform(0.2, 1.0, size=n)
        return knapsack(w, 0.5 * w.sum())
    cut = int(rng.integers(1, n)) if n > 1 else 1
    return partition_matroid([list(range(cut)), list(range(cut, n))], [1, 1], n)


def test_criterion_1_constants():
    t = time.perf_counter()
    rep = verify_constants()
    elapsed = time.perf_counter() - t
    ok = (0.401 <= rep["coef_opt"] <= 0.4013 and rep["coef_hprod"] >= -1e-4
          and rep["coef_psum"] >= -1e-4 and elapsed < 1.0)
    record_criterion(1, ok, f"F(o) coefficient {rep['coef_opt']:.6f}, drop terms "
                            f"{rep['coef_hprod']:.2e} / {rep['coef_psum']:.2e}, {elapsed:.3f}s")
    assert ok


def test_criterion_2_bound_suite():
    t = time.perf_counter()
    rows = run_bound_suite(10 ** 4, seed=0)
    bad = [r for r in rows if not r.holds]
    neg = [r for r in run_bound_suite(10 ** 3, seed=0, F=non_dr_fixture()) if not r.holds]
    elapsed = time.perf_counter() - t
    assert {r.kind for r in rows} == {"basic", "general"}
    assert max(r.n for r in rows) <= 6 and max(r.r for r in rows) <= 6 and max(r.h for r in rows) <= 3
    ok = not bad and len(neg) >= 1 and elapsed < 120
    record_criterion(2, ok, f"{len(rows)} checks on 10^4 DR trials, {len(bad)} violations; "
                            f"non-DR fixture {len(neg)} violations; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_3_end_to_end_ratio():
    t = time.perf_counter()
    worst, failures = math.inf, []
    corpus = brute_force_ratio_corpus(50, seed=0)
    for name, F, f, P in corpus:
        rep = solve(F, P, SolveParams())
        _, opt = brute_force_set_opt(f if f is not None else F, P)
        value = F.value(rep.best_x)
        assert membership(P, [], rep.best_x)
        ratio = value / opt if opt > 0 else math.inf
        worst = min(worst, ratio)
        if value < 0.401 * opt:
            failures.append(name)
    elapsed = time.perf_counter() - t
    ok = not failures and elapsed < 600
    record_criterion(3, ok, f"{len(corpus)} instances, worst ratio {worst:.4f}, "
                            f"failures {failures or 'none'}, {elapsed:.0f}s")
    assert ok


def test_criterion_4_double_greedy():
    rng = np.random.default_rng(4)
    eps = 0.02
    worst, gain_bad, eval_bad, count = math.inf, 0, 0, 0
    for n in range(1, 5):
        for k in range(12):
            F = random_dr_function(FAMILIES[k % 3], n, rng)
            res = run_double_greedy(F, eps)
            _, box_opt = grid_opt(F, hypercube(n), 20)
            if box_opt > 0:
                worst = min(worst, res.value / box_opt)
            gain_bad += sum(not s.gains_hold(1e-9) for s in res.steps)
            eval_bad += res.evaluations > 40 * n * math.log2(n / eps)
            count += 1
    ok = worst >= 0.5 - 0.05 and gain_bad == 0 and eval_bad == 0
    record_criterion(4, ok, f"{count} instances n<=4, worst value/box-opt {worst:.4f}, "
                            f"gain violations {gain_bad}, eval-count violations {eval_bad}")
    assert ok


def test_criterion_5_frank_wolfe_certificate():
    rng = np.random.default_rng(5)
    delta = 0.1
    worst_slack, bad = math.inf, 0
    for k in range(100):
        n = 2 + k % 3
        F = random_dr_function(FAMILIES[k % 3], n, rng)
        P = random_constraint(rng, n, k // 3)
        r = approx_local_max(F, P, (), delta)
        _, opt = grid_opt(F, P, 10)
        bound = delta * (opt + diameter_bound(P) ** 2 * F.smoothness / 2) + 1e-7
        worst_slack = min(worst_slack, bound - r.certificate)
        bad += r.certificate > bound or not membership(P, [], r.x_star, 1e-7)
    ok = bad == 0
    record_criterion(5, ok, f"100 instances at delta=0.1, {bad} violations, smallest margin {worst_slack:.3e}")
    assert ok


def test_criterion_6_fwmcg_structure():
    rng = np.random.default_rng(6)
    worst, member_bad = 0.0, 0
    for k in range(50):
        n = 2 + k % 3
        F = random_dr_function(FAMILIES[k % 3], n, rng)
        P = random_constraint(rng, n, k // 3)
        z = approx_local_max(F, P, (), 0.25).x_star * rng.random(n)
        G = build_guess_set(max(F.value(z), 1e-3), 1 / math.e - 0.02, 0.1)
        out = fwmcg_run(F, P, z, 0.3682, 0.1, 0.05, G[int(rng.integers(len(G)))])
        for i in range(out.ys.shape[0]):
            worst = max(worst, float(np.max(np.abs(out.closed_form(i, z) - out.ys[i]))))
        member_bad += not membership(P, [], out.y_final)
    ok = worst <= 1e-12 and member_bad == 0
    record_criterion(6, ok, f"50 runs, max closed-form deviation {worst:.2e}, membership failures {member_bad}")
    assert ok


def _builtins(rng):
    n = 4
    out = [random_quadratic(n, rng), multilinear_exact(random_cut(n, rng)),
           multilinear_exact(random_cut(n, rng, directed=False)), multilinear_exact(random_coverage(n, rng)),
           multilinear_exact(TableFunction(n, random_coverage(n, rng).table()))]
    y = rng.random(n)
    out += [HadamardRestriction(out[1], y), PsumRestriction(out[3], y)]
    return out


def test_criterion_7_sampling_and_smoothness():
    rng = np.random.default_rng(7)
    worst_v = worst_g = 0.0
    for k in range(100):
        f = random_cut(4, rng) if k % 2 else random_coverage(4, rng)
        exact = multilinear_exact(f)
        sampled = multilinear_sampled(f, 10 ** 5, seed=k)
        x = rng.random(4)
        worst_v = max(worst_v, abs(sampled.value(x) - exact.value(x)))
        worst_g = max(worst_g, float(np.max(np.abs(sampled.gradient(x) - exact.gradient(x)))))
    smooth_bad = []
    for F in _builtins(rng):
        emp = smoothness_oracle(F, 400, seed=1)
        if emp > F.smoothness * (1 + 1e-9):
            smooth_bad.append(type(F).__name__)
    ok = worst_v <= 0.01 and worst_g <= 0.01 and not smooth_bad
    record_criterion(7, ok, f"100 points, max |F| error {worst_v:.4f}, max |grad| error {worst_g:.4f}; "
                            f"smoothness violations {smooth_bad or 'none'}")
    assert ok


COMMANDS = {
    "solve": ["solve", "--instance", EDGE, "--constraint", "hypercube", "--oracle", "--seed", "3"],
    "verify-constants": ["verify", "constants"],
    "verify-bounds": ["verify", "bounds", "--trials", "300", "--seed", "3"],
    "verify-properties": ["verify", "properties", "--trials", "300", "--seed", "3"],
    "bench": ["bench", "--family", "cut", "--count", "3", "--n", "3", "--constraint", "cardinality:2",
              "--epsilon", "0.25", "--delta", "0.25", "--seed", "3"],
}


def test_criterion_8_cli_determinism(tmp_path):
    differ = []
    for tag, argv in COMMANDS.items():
        codes, _, same = rerun_identical(argv, tmp_path, tag)
        if codes != (0, 0) or not same:
            differ.append(tag)
    ok = not differ
    record_criterion(8, ok, f"{len(COMMANDS)} commands rerun, differing outputs: {differ or 'none'}")
    assert ok
