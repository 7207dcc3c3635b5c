import json
import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from drsubmax.functions import CutFunction, make_quadratic, multilinear_exact, random_cut
from drsubmax.fwmcg import build_guess_set
from drsubmax.oracles import brute_force_set_opt, heir_chain_audit
from drsubmax.polytope import cardinality, hypercube, membership
from drsubmax.solver import SolveParams, main_recursive, measured_greedy, solve, verify_constants

FAST = dict(epsilon=0.25, delta=0.25)


def edge():
    return multilinear_exact(CutFunction(2, [(0, 1, 1.0)]))


def test_measured_greedy_modular():
    F = make_quadratic(np.zeros((3, 3)), [1.0, 2.0, 3.0])
    y = measured_greedy(F, hypercube(3), 0.25)
    assert np.allclose(y, 1 - 0.75 ** 4)
    assert y[0] == pytest.approx(0.68359375)


def test_measured_greedy_cut_ratio(rng):
    for _ in range(10):
        f = random_cut(4, rng)
        F = multilinear_exact(f)
        P = cardinality(4, 2)
        opt = brute_force_set_opt(f, P)[1]
        assert F.value(measured_greedy(F, P, 0.05)) >= (1 / math.e - 0.05) * opt - 1e-12


def test_constant_function():
    F = make_quadratic(np.zeros((2, 2)), np.zeros(2), 3.0)
    r = solve(F, cardinality(2, 1), SolveParams(**FAST))
    assert r.best_value == 3.0


def test_zero_function_has_no_guesses():
    F = make_quadratic(np.zeros((2, 2)), np.zeros(2), 0.0)
    r = solve(F, hypercube(2), SolveParams(**FAST))
    assert r.best_value == 0.0 and r.guess_set_size == 0


def test_single_edge_cut():
    r = solve(edge(), hypercube(2))
    assert r.best_value >= 0.401
    assert membership(hypercube(2), [], r.best_x)


def test_modular_cardinality_within_five_percent():
    w = np.array([3.0, 1.0, 2.0, 0.5])
    F = make_quadratic(np.zeros((4, 4)), w)
    r = solve(F, cardinality(4, 2), SolveParams(**FAST))
    assert r.best_value >= 0.95 * 5.0


def test_best_is_max_of_log(rng):
    F = multilinear_exact(random_cut(3, rng))
    r = solve(F, cardinality(3, 1.5), SolveParams(**FAST))
    assert r.best_value == max(c.value for c in r.candidates)
    z0 = next(c for c in r.candidates if c.origin == "z0")
    assert r.best_value >= z0.value
    assert F.value(r.best_x) == r.best_value


def test_depth_monotone_and_node_bound(rng):
    F = multilinear_exact(random_cut(3, rng))
    P = cardinality(3, 1)
    one = solve(F, P, SolveParams(depth=1, **FAST))
    two = solve(F, P, SolveParams(depth=2, **FAST))
    assert one.node_count == 1
    assert two.best_value >= one.best_value
    steps = one.params["steps"]
    assert two.node_count <= sum((one.guess_set_size * steps) ** k for k in range(2))
    assert two.node_count <= 1 + 4


def test_depth_one_returns_box_or_run(rng):
    F = multilinear_exact(random_cut(3, rng))
    P = cardinality(3, 2)
    z = np.array([0.5, 0.5, 0.5])
    G = build_guess_set(0.5, 0.3, 0.25)[:5]
    x = main_recursive(F, P, 0.3682, z, 0.25, 0.25, depth=1, triples=G)
    assert membership(P, [], x)


def test_determinism(rng):
    F = multilinear_exact(random_cut(3, rng))
    P = cardinality(3, 2)
    a = solve(F, P, SolveParams(**FAST))
    b = solve(F, P, SolveParams(**FAST))
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert "wall_time" not in a.to_dict() and "wall_time" in a.to_dict(include_time=True)


def test_oracle_mode(rng):
    f = random_cut(3, rng)
    F = multilinear_exact(f)
    opt = brute_force_set_opt(f, hypercube(3))[1]
    r = solve(F, hypercube(3), SolveParams(guess_mode="oracle", oracle_value=opt, **FAST))
    assert r.v_lower == opt and r.best_value >= 0.401 * opt


def test_params_normalization():
    cfg = SolveParams(epsilon=0.3, delta=0.2).normalized()
    assert cfg["epsilon"] == pytest.approx(1 / 8)
    assert cfg["delta"] == pytest.approx(1 / 8)
    assert cfg["i_s"] == 3 and cfg["steps"] == 8
    paper = SolveParams(epsilon=0.25, depth="paper").normalized()
    assert paper["depth"] == 9 and paper["children_per_node"] is None
    for bad in (dict(t_s=1.0), dict(epsilon=0.5), dict(delta=0.0), dict(depth=0),
                dict(guess_mode="oracle"), dict(guess_mode="magic")):
        with pytest.raises(ValueError):
            SolveParams(**bad).normalized()


def test_heir_chain_audit(rng):
    f = random_cut(3, rng)
    F = multilinear_exact(f)
    P = cardinality(3, 2)
    S, _ = brute_force_set_opt(f, P)
    o = np.zeros(3)
    o[list(S)] = 1.0
    audit = heir_chain_audit(F, P, o, SolveParams(**FAST))
    assert audit.ok
    assert audit.edges


def test_constants():
    rep = verify_constants()
    assert 0.401 <= rep["coef_opt"] <= 0.4013
    assert rep["coef_opt"] == pytest.approx(0.40101, abs=5e-5)
    assert rep["coef_hprod"] >= -1e-4 and rep["coef_psum"] >= -1e-4
    # independent evaluation in decimal arithmetic
    getcontext().prec = 40
    a, t = Decimal("0.1974"), Decimal("0.3682")
    coef = (1 - a) * ((2 - t) * t.exp() - 1) / Decimal(1).exp()
    assert abs(float(coef) - rep["coef_opt"]) <= 1e-10
