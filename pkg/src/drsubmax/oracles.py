"""Brute-force oracles used to check the solvers and the analytic bounds.

Everything here is exhaustive or sampled and meant for small ``n``:
optimal values over corners and grids, the discrete random-subset bounds,
empirical smoothness, and sampled audits of the DR properties.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .functions import (DrFunction, QuadraticFunction, SetFunction, all_corners, multilinear_exact,
                        random_coverage, random_cut, random_quadratic)
from .polytope import MEMBERSHIP_TOL, PackingPolytope, cardinality, hypercube, knapsack, partition_matroid
from .solver import SolveParams, solve
from .vectors import hprod, psum

SLACK_TOL = 1e-9
MAX_BRUTE_N = 20
MAX_GRID_POINTS = 10 ** 7
MAX_BOUND_R = 12
SHRINK_STEPS = 100


# -- optimal values -----------------------------------------------------------


def _feasible_rows(P: PackingPolytope, X: np.ndarray) -> np.ndarray:
    if P.m == 0:
        return np.ones(X.shape[0], dtype=bool)
    return np.all(X @ P.A.T <= P.b + MEMBERSHIP_TOL, axis=1)


def brute_force_set_opt(f, P: PackingPolytope):
    """``(S*, value)``: exhaustive maximum over sets whose indicator lies in ``P``.

    ``f`` is a :class:`SetFunction` or a :class:`DrFunction` (evaluated at
    corners). Ties go to the smallest bitmask.
    """
    if f.n > MAX_BRUTE_N:
        raise ValueError(f"brute force limited to n <= {MAX_BRUTE_N}")
    if f.n != P.n:
        raise ValueError("dimension mismatch between function and polytope")
    corners = all_corners(f.n)
    ok = np.flatnonzero(_feasible_rows(P, corners))
    if isinstance(f, SetFunction):
        vals = f.evaluate(corners[ok].astype(bool))
    else:
        vals = f.values(corners[ok])
    k = int(np.argmax(vals))
    mask = int(ok[k])
    S = tuple(u for u in range(f.n) if mask >> u & 1)
    return S, float(vals[k])


def corner_opt(F: DrFunction, P: PackingPolytope):
    """``(x*, value)`` over the feasible integral points."""
    S, value = brute_force_set_opt(F, P)
    x = np.zeros(F.n)
    x[list(S)] = 1.0
    return x, value


def grid_opt(F: DrFunction, P: PackingPolytope, resolution: int, chunk: int = 1 << 16):
    """``(x*, value)`` over ``{0, 1/m, ..., 1}^n`` intersected with ``P``.

    Ties go to the first grid point in lexicographic index order.
    """
    m = int(resolution)
    if m < 1:
        raise ValueError("resolution must be a positive integer")
    total = (m + 1) ** F.n
    if total > MAX_GRID_POINTS:
        raise ValueError(f"grid of {total} points exceeds the limit of {MAX_GRID_POINTS}")
    shape = (m + 1,) * F.n
    best_x, best_v = None, -np.inf
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        X = np.stack(np.unravel_index(idx, shape), axis=1).astype(float) / m
        X = X[_feasible_rows(P, X)]
        if not X.shape[0]:
            continue
        vals = F.values(X)
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_v, best_x = float(vals[k]), X[k].copy()
    return best_x, best_v


@dataclass
class OracleBundle:
    corner_x: np.ndarray
    corner_value: float
    grid_x: np.ndarray
    grid_value: float
    resolution: int
    z: np.ndarray | None = None
    psum_value: float | None = None
    hprod_value: float | None = None
    # the grid contains every corner, so the grid optimum can only be larger
    grid_gap_bound: float = 0.0

    def to_dict(self) -> dict:
        d = {"corner_x": self.corner_x.tolist(), "corner_value": self.corner_value,
             "grid_x": self.grid_x.tolist(), "grid_value": self.grid_value,
             "resolution": self.resolution, "grid_gap_bound": self.grid_gap_bound}
        if self.z is not None:
            d.update(z=self.z.tolist(), psum_value=self.psum_value, hprod_value=self.hprod_value)
        return d


def oracle_bundle(F: DrFunction, P: PackingPolytope, resolution: int = 4, z=None) -> OracleBundle:
    """Corner and grid optima, plus ``F(z psum o)`` and ``F(z hprod o)`` at the grid optimum."""
    cx, cv = corner_opt(F, P)
    gx, gv = grid_opt(F, P, resolution)
    out = OracleBundle(cx, cv, gx, gv, int(resolution))
    if z is not None:
        z = np.asarray(z, dtype=float)
        out.z = z
        out.psum_value = F.value(psum(z, gx))
        out.hprod_value = F.value(hprod(z, gx))
    return out


# -- discrete random-subset bounds -----------------------------------------


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _subset_weights(p: np.ndarray):
    """Rows of the subset indicator matrix and their product weights."""
    r = p.shape[0]
    S = all_corners(r)
    w = np.prod(np.where(S > 0, p, 1.0 - p), axis=1)
    return S, w


def _psum_rows(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    # row k: psum of the X[j] with S[k, j] = 1, i.e. 1 - prod_j (1 - S[k,j] X[j])
    keep = 1.0 - S[:, :, None] * X[None, :, :]
    return 1.0 - np.prod(keep, axis=1)


def _check_probs(p, r):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != r:
        raise ValueError(f"need {r} probabilities, got {p.shape[0]}")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def verify_basic_bound(F: DrFunction, xs, ps) -> BoundCheck:
    """Both sides of ``F(psum_i p_i x(i)) >= sum_S w_S F(psum_{i in S} x(i))``.

    ``w_S`` is the probability that a set containing each ``i`` independently
    with probability ``p_i`` equals ``S``.
    """
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    r = X.shape[0]
    if r > MAX_BOUND_R:
        raise ValueError(f"bound enumeration limited to r <= {MAX_BOUND_R}")
    if X.shape[1] != F.n:
        raise ValueError("vector dimension does not match the function")
    p = _check_probs(ps, r)
    lhs = F.value(1.0 - np.prod(1.0 - p[:, None] * X, axis=0))
    S, w = _subset_weights(p)
    rhs = float(w @ F.values(_psum_rows(S, X)))
    return BoundCheck(lhs, rhs, lhs >= rhs - SLACK_TOL)


def verify_general_bound(F: DrFunction, blocks, xs, ps) -> BoundCheck:
    """Block version of :func:`verify_basic_bound`.

    ``blocks`` is ``(h, n)`` with rows summing to the all-ones vector and
    ``xs`` is ``(h, r, n)``: vector ``j`` of block ``i``. The left side is
    ``F(sum_i b(i) * psum_{j <= r} p_j x(i)(j))``.
    """
    B = np.atleast_2d(np.asarray(blocks, dtype=float))
    X = np.asarray(xs, dtype=float)
    if X.ndim == 2:
        X = X[None]
    h, r, n = X.shape
    if B.shape != (h, n) or n != F.n:
        raise ValueError(f"blocks must have shape {(h, F.n)} and vectors {(h, r, F.n)}")
    if np.max(np.abs(B.sum(axis=0) - 1.0)) > 1e-12:
        raise ValueError("block vectors must sum to the all-ones vector")
    if np.any(B < 0):
        raise ValueError("block vectors must be non-negative")
    if r > MAX_BOUND_R:
        raise ValueError(f"bound enumeration limited to r <= {MAX_BOUND_R}")
    p = _check_probs(ps, r)
    inner = 1.0 - np.prod(1.0 - p[None, :, None] * X, axis=1)
    lhs = F.value(np.sum(B * inner, axis=0))
    S, w = _subset_weights(p)
    rows = np.zeros((S.shape[0], n))
    for i in range(h):
        rows += B[i] * _psum_rows(S, X[i])
    rhs = float(w @ F.values(rows))
    return BoundCheck(lhs, rhs, lhs >= rhs - SLACK_TOL)


@dataclass
class Counterexample:
    ps: np.ndarray
    lhs: float
    rhs: float
    steps: int

    @property
    def active(self) -> list:
        """Indices whose probability is non-zero; the others drop out of both sides."""
        return [j for j in range(self.ps.shape[0]) if self.ps[j] > 0.0]


def shrink_counterexample(check, ps, budget: int = SHRINK_STEPS) -> Counterexample | None:
    """Move violating probabilities toward 0 or 1 while the bound stays violated.

    ``check(ps)`` returns a :class:`BoundCheck` for the fixed vectors. Each
    probability is snapped to its nearest end, then the other end, and
    failing both is moved halfway to the nearest end provided that keeps
    at least half of the starting violation. At most ``budget`` checks are made. Returns
    ``None`` when the starting point satisfies the bound.
    """
    p = np.array(ps, dtype=float)
    res = check(p)
    if res.holds:
        return None
    gap = res.rhs - res.lhs
    steps = 1
    changed = True
    while changed and steps < budget:
        changed = False
        for j in range(p.shape[0]):
            if p[j] in (0.0, 1.0):
                continue
            end = float(round(p[j]))
            for cand, snap in ((end, True), (1.0 - end, True), (0.5 * (p[j] + end), False)):
                if steps >= budget:
                    break
                q = p.copy()
                q[j] = cand
                trial = check(q)
                steps += 1
                # a halfway move must keep half of the starting violation
                if not trial.holds and (snap or trial.rhs - trial.lhs >= 0.5 * gap):
                    p, res, changed = q, trial, True
                    break
    return Counterexample(p, res.lhs, res.rhs, steps)


# -- smoothness -----------------------------------------------------------------


def smoothness_oracle(F: DrFunction, trials: int = 200, seed: int = 0) -> float:
    """Largest sampled ``|grad F(x) - grad F(y)| / |x - y|``.

    Half of the pairs are independent uniform points; the rest are short
    perturbations, which approach the local curvature.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for k in range(trials):
        x = rng.random(F.n)
        if k % 2:
            y = np.clip(x + 1e-3 * rng.standard_normal(F.n), 0.0, 1.0)
        else:
            y = rng.random(F.n)
        d = float(np.linalg.norm(x - y))
        if d == 0.0:
            continue
        best = max(best, float(np.linalg.norm(F.gradient(x) - F.gradient(y))) / d)
    return best


def marginal_bound_check(f: SetFunction, tol: float = 1e-12) -> bool:
    """Whether ``f(S) <= M`` on every subset (exhaustive, ``n <= 12``)."""
    if f.n > 12:
        raise ValueError("exhaustive check limited to n <= 12")
    return bool(np.all(f.table() <= f.M + tol))


# -- DR audits -----------------------------------------------------------------


@dataclass
class PropertyAudit:
    trials: int
    violations: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_rows(self):
        return [{"property": k, "trials": self.trials, "violations": v}
                for k, v in sorted(self.violations.items())]


def audit_properties(F: DrFunction, trials: int = 200, seed: int = 0, tol: float = SLACK_TOL) -> PropertyAudit:
    """Sampled checks of non-negativity, antitone gradient, the lattice
    inequality ``F(x v y) + F(x ^ y) >= F(x psum y) + F(x hprod y)`` and the
    gradient upper bound ``<grad F(x), y> >= F(x + y) - F(x)``.
    """
    rng = np.random.default_rng(seed)
    bad = {"nonnegative": 0, "antitone_gradient": 0, "lattice": 0, "gradient_bound": 0}
    for _ in range(trials):
        x = rng.random(F.n)
        if F.value(x) < -tol:
            bad["nonnegative"] += 1
        y = np.minimum(1.0, x + rng.random(F.n) * (1.0 - x))
        if np.any(F.gradient(x) < F.gradient(y) - tol):
            bad["antitone_gradient"] += 1
        a, b = rng.random(F.n), rng.random(F.n)
        lhs = F.value(np.maximum(a, b)) + F.value(np.minimum(a, b))
        rhs = F.value(psum(a, b)) + F.value(hprod(a, b))
        if lhs < rhs - tol:
            bad["lattice"] += 1
        step = rng.random(F.n) * (1.0 - x)
        if F.gradient(x) @ step < F.value(x + step) - F.value(x) - tol:
            bad["gradient_bound"] += 1
    return PropertyAudit(trials, bad)


# -- randomized bound suite ----------------------------------------------------

FAMILIES = ("quadratic", "cut", "coverage")


def random_dr_function(family: str, n: int, rng: np.random.Generator) -> DrFunction:
    if family == "quadratic":
        return random_quadratic(n, rng)
    if family == "cut":
        return multilinear_exact(random_cut(n, rng))
    if family == "coverage":
        return multilinear_exact(random_coverage(n, rng))
    raise ValueError(f"unknown family {family!r}")


def non_dr_fixture(n: int = 3) -> QuadraticFunction:
    """A quadratic with a single positive Hessian pair, non-negative on the cube."""
    H = -0.1 * (np.ones((n, n)) - np.eye(n))
    H[0, 1] = H[1, 0] = 2.0
    return QuadraticFunction(H, np.full(n, 0.05), 0.5)


def _random_vectors(rng, count, n):
    X = rng.random((count, n))
    # some vectors are corners or zero to reach boundary cases
    kind = rng.integers(0, 4, size=count)
    X[kind == 1] = np.round(X[kind == 1])
    X[kind == 2] = 0.0
    return X


def _random_probs(rng, r):
    p = rng.random(r)
    kind = rng.integers(0, 6, size=r)
    p[kind == 1] = 0.0
    p[kind == 2] = 1.0
    return p


def _random_blocks(rng, h, n):
    B = rng.random((h, n)) * (rng.random((h, n)) < 0.8)
    B[rng.integers(0, h, size=n), np.arange(n)] += 1e-3
    B /= B.sum(axis=0)
    B[-1] = 1.0 - B[:-1].sum(axis=0)
    return np.clip(B, 0.0, 1.0)


@dataclass
class BoundRow:
    trial: int
    family: str
    kind: str
    n: int
    r: int
    h: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.slack >= -SLACK_TOL

    def to_dict(self) -> dict:
        return {"instance": f"{self.family}-{self.trial}", "kind": self.kind, "n": self.n, "r": self.r,
                "h": self.h, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}


@dataclass
class TrialInputs:
    F: DrFunction
    family: str
    xs: np.ndarray
    ps: np.ndarray
    blocks: np.ndarray
    block_xs: np.ndarray

    def basic(self, ps=None) -> BoundCheck:
        return verify_basic_bound(self.F, self.xs, self.ps if ps is None else ps)

    def general(self, ps=None) -> BoundCheck:
        return verify_general_bound(self.F, self.blocks, self.block_xs, self.ps if ps is None else ps)


def trial_inputs(trial: int, seed: int, F: DrFunction | None = None, family: str | None = None,
                 max_n: int = 6, max_r: int = 6, max_h: int = 3) -> TrialInputs:
    """Random inputs of one bound trial.

    The generator is keyed on ``(seed, trial)`` so any trial can be replayed
    alone. A fixed ``F`` skips the random objective.
    """
    rng = np.random.default_rng([seed, trial])
    if F is None:
        family = family or FAMILIES[trial % len(FAMILIES)]
        F = random_dr_function(family, int(rng.integers(1, max_n + 1)), rng)
    else:
        family = family or "fixed"
    n = F.n
    r = int(rng.integers(1, max_r + 1))
    h = int(rng.integers(1, max_h + 1))
    X = _random_vectors(rng, r, n)
    p = _random_probs(rng, r)
    B = _random_blocks(rng, h, n)
    XX = np.stack([_random_vectors(rng, r, n) for _ in range(h)])
    return TrialInputs(F, family, X, p, B, XX)


def bound_trial(trial: int, seed: int, F: DrFunction | None = None, family: str | None = None):
    """Basic and block bound rows for one trial."""
    t = trial_inputs(trial, seed, F, family)
    n, (h, r, _) = t.F.n, t.block_xs.shape
    basic, gen = t.basic(), t.general()
    return (BoundRow(trial, t.family, "basic", n, r, 1, basic.lhs, basic.rhs),
            BoundRow(trial, t.family, "general", n, r, h, gen.lhs, gen.rhs))


def run_bound_suite(trials: int, seed: int = 0, F: DrFunction | None = None):
    rows = []
    for t in range(trials):
        rows.extend(bound_trial(t, seed, F=F))
    return rows


def brute_force_ratio_corpus(size: int = 50, seed: int = 0, max_n: int = 6):
    """Deterministic list of ``(name, F, set_function, P)`` covering every
    objective family and constraint family, ``n <= max_n``.
    """
    rng = np.random.default_rng(seed)
    out = []
    constraints = ("hypercube", "cardinality", "knapsack", "partition_matroid")
    for k in range(size):
        family = FAMILIES[k % 3]
        cname = constraints[(k // 3) % 4]
        n = 2 + k % (max_n - 1)
        if family == "quadratic":
            f, F = None, random_quadratic(n, rng)
        elif family == "cut":
            f = random_cut(n, rng)
            F = multilinear_exact(f)
        else:
            f = random_coverage(n, rng)
            F = multilinear_exact(f)
        if cname == "hypercube":
            P = hypercube(n)
        elif cname == "cardinality":
            P = cardinality(n, int(rng.integers(1, n)))
        elif cname == "knapsack":
            w = np.round(rng.uniform(0.2, 1.0, size=n), 3)
            P = knapsack(w, float(np.round(0.5 * w.sum(), 3)))
        else:
            cut = int(rng.integers(1, n))
            P = partition_matroid([list(range(cut)), list(range(cut, n))], [1, max(1, (n - cut) // 2)], n)
        out.append((f"{family}-{cname}-n{n}-{k}", F, f, P))
    return out


# -- guided-greedy dichotomy and heir chains ----------------------------------


@dataclass
class DichotomyAudit:
    first: bool
    second: bool
    y_value: float
    first_target: float
    heir_steps: list

    @property
    def holds(self) -> bool:
        return self.first or self.second


def first_bullet_target(F_o: float, F_hprod: float, F_psum: float, t_s: float, eps: float,
                        slack: float, c_eps: float) -> float:
    """Right side of the value bound for the output ``y``, with ``O(eps)``
    taken as ``c_eps * eps`` and the smoothness error passed in ``slack``.
    """
    e_t = np.exp(t_s)
    return (((2.0 - t_s) * e_t - 1.0 - c_eps * eps) * F_o - (e_t - 1.0) * F_hprod
            - ((2.0 - t_s) * e_t + t_s - (t_s * t_s + 5.0) / 2.0) * F_psum) / np.e - slack


def dichotomy_audit(F: DrFunction, z, o, out, t_s: float, eps: float, *, c_eps: float = 1.0,
                    c_smooth: float = 1.0) -> DichotomyAudit:
    """Which of the two guarantees holds for one guided-greedy run.

    ``o`` stands in for the optimum. The first guarantee bounds ``F(y)``;
    the second asks for a direction ``x(i)`` with
    ``F(x(i) psum o) <= F(z psum o) - eps F(o)`` that is also an approximate
    local maximum with respect to ``o``. Constants hidden in ``O(.)`` are
    ``c_eps`` and ``c_smooth`` (the latter multiplies ``delta D^2 L``).
    """
    z = np.asarray(z, dtype=float)
    o = np.asarray(o, dtype=float)
    F_o = F.value(o)
    F_zp = F.value(psum(z, o))
    F_zh = F.value(hprod(z, o))
    smooth = c_smooth * out.delta * F.n * F.smoothness
    target = first_bullet_target(F_o, F_zh, F_zp, t_s, eps, smooth, c_eps)
    y_val = F.value(out.y_final)
    heirs = []
    for i, x in enumerate(out.directions, start=1):
        if F.value(psum(x, o)) > F_zp - eps * F_o:
            continue
        local = 0.5 * (F.value(np.maximum(x, o)) + F.value(np.minimum(x, o)))
        if F.value(x) >= local - c_eps * eps * F_o - smooth:
            heirs.append(i)
    return DichotomyAudit(y_val >= target - SLACK_TOL, bool(heirs), y_val, target, heirs)


@dataclass
class HeirEdge:
    parent: str
    child: str
    parent_psum: float
    child_psum: float
    heir: bool


@dataclass
class HeirAudit:
    F_o: float
    epsilon: float
    edges: list
    bound_violations: list
    longest_chain: int

    @property
    def ok(self) -> bool:
        limit = int(np.ceil(2.0 / self.epsilon)) + 1
        drops = all(e.child_psum <= e.parent_psum - self.epsilon * self.F_o + 1e-6
                    for e in self.edges if e.heir)
        return drops and not self.bound_violations and self.longest_chain <= limit


def heir_chain_audit(F: DrFunction, P: PackingPolytope, o, params=None) -> HeirAudit:
    """Solve while recording ``F(z psum o)`` at every tree node.

    An edge is an heir edge when the child direction already lowers
    ``F(. psum o)`` by ``eps F(o)``. Along heir edges the value drops by that
    much, and every node obeys ``F(z psum o) <= F(z) + F(o)``, so heir
    chains are at most ``2/eps`` long.
    """
    params = params or SolveParams()
    o = np.asarray(o, dtype=float)
    F_o = F.value(o)
    eps = params.normalized()["epsilon"]
    nodes = {}
    edges = []
    bad = []

    def observer(path, level, z, zp, runs, children):
        val = F.value(psum(z, o))
        nodes[path] = val
        if val > F.value(z) + F_o + SLACK_TOL:
            bad.append(path)
        for t_idx, i, x in children:
            child = f"{path}/g{t_idx}x{i}"
            cval = F.value(psum(x, o))
            edges.append(HeirEdge(path, child, val, cval, cval <= val - eps * F_o))

    solve(F, P, params, observer=observer)
    chain = {"root": 0}
    for e in edges:  # parents are recorded before their children
        chain[e.child] = chain.get(e.parent, 0) + 1 if e.heir else 0
    return HeirAudit(F_o, eps, edges, bad, max(chain.values()))
