"""Recursive solver for DR-submodular maximization over packing polytopes.

``solve`` takes a Frank-Wolfe local maximum ``z0`` of ``F`` over ``P`` and
expands a tree of nodes. A node with input ``z`` box-maximizes below ``z``,
runs the guided continuous greedy of :mod:`drsubmax.fwmcg` for every guess
triple and, above the depth limit, recurses on selected direction vectors.
The best vector seen anywhere in the tree is returned.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from decimal import Decimal, getcontext

import numpy as np

from . import _kernel
from .double_greedy import box_maximize, normalize_epsilon
from .frank_wolfe import approx_local_max
from .functions import DrFunction
from .fwmcg import build_guess_set, fwmcg_batch, normalize_step
from .polytope import LPBreakdown, PackingPolytope, membership

ALPHA = 0.1974
R = 2.22
T_S = 0.3682
BASELINE_C = 1.0 / math.e - 0.02
DEDUPE_RESOLUTION = 1e-9


@dataclass
class SolveParams:
    t_s: float = T_S
    epsilon: float = 0.1
    delta: float = 0.05
    depth: int | str = 2
    children_per_node: int | None = 4
    guess_mode: str = "baseline"
    oracle_value: float | None = None
    c: float = BASELINE_C
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.t_s < 1.0:
            raise ValueError(f"t_s must lie in (0, 1), got {self.t_s}")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.depth != "paper" and (not isinstance(self.depth, int) or self.depth < 1):
            raise ValueError(f"depth must be a positive integer or 'paper', got {self.depth!r}")
        if self.guess_mode not in ("baseline", "oracle"):
            raise ValueError(f"guess_mode must be 'baseline' or 'oracle', got {self.guess_mode!r}")
        if self.guess_mode == "oracle" and (self.oracle_value is None or self.oracle_value < 0):
            raise ValueError("oracle guess mode needs a non-negative oracle_value")
        if self.children_per_node is not None and self.children_per_node < 0:
            raise ValueError("children_per_node must be non-negative")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")

    def normalized(self) -> dict:
        """Parameters after every rounding applied at solve entry."""
        self.validate()
        eps = normalize_epsilon(self.epsilon)
        delta = normalize_step(self.delta, eps)
        paper = self.depth == "paper"
        return {
            "t_s": self.t_s,
            "epsilon": eps,
            "delta": delta,
            "depth": 1 + math.ceil(2.0 / eps - 1e-12) if paper else int(self.depth),
            "children_per_node": None if paper else self.children_per_node,
            "guess_mode": self.guess_mode,
            "oracle_value": self.oracle_value,
            "c": self.c,
            "seed": self.seed,
            "i_s": math.ceil(self.t_s / delta - 1e-12),
            "steps": round(1.0 / delta),
        }


@dataclass
class Candidate:
    origin: str
    path: str
    value: float
    x: np.ndarray

    def to_dict(self) -> dict:
        return {"origin": self.origin, "path": self.path, "value": self.value,
                "x": [float(v) for v in self.x]}


@dataclass
class SolveReport:
    best_x: np.ndarray
    best_value: float
    best_origin: str
    best_path: str
    candidates: list
    node_count: int
    guess_set_size: int
    v_lower: float
    params: dict
    evaluations: dict
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self, include_time: bool = False) -> dict:
        out = {
            "best_x": [float(v) for v in self.best_x],
            "best_value": self.best_value,
            "best_origin": self.best_origin,
            "best_path": self.best_path,
            "node_count": self.node_count,
            "guess_set_size": self.guess_set_size,
            "v_lower": self.v_lower,
            "params": self.params,
            "evaluations": self.evaluations,
            "candidates": [c.to_dict() for c in self.candidates],
        }
        if include_time:
            out["wall_time"] = self.wall_time
        return out


class _Log:
    """Deduplicated candidate log; the first arrival of a point wins."""

    def __init__(self, F):
        self.F = F
        self.items: list[Candidate] = []
        self.seen = set()

    def add(self, origin, path, x, value=None):
        x = np.asarray(x, dtype=float)
        key = tuple(np.round(x / DEDUPE_RESOLUTION).astype(np.int64).tolist())
        if key in self.seen:
            return
        self.seen.add(key)
        if value is None:
            value = self.F.value(x)
        self.items.append(Candidate(origin, path, float(value), x.copy()))

    def best(self) -> Candidate:
        # ties go to the earliest candidate, i.e. depth-first path order
        best = self.items[0]
        for c in self.items[1:]:
            if c.value > best.value:
                best = c
        return best


def measured_greedy(F: DrFunction, P: PackingPolytope, delta: float) -> np.ndarray:
    """Measured continuous greedy with ``1/delta`` steps."""
    delta = 1.0 / math.ceil(1.0 / delta - 1e-12)
    m = round(1.0 / delta)
    region = P.region()
    if region.status != _kernel.OPTIMAL:
        raise LPBreakdown("feasibility phase failed on a packing polytope")
    y = np.zeros(P.n)
    for _ in range(m):
        room = 1.0 - y
        status, x = region.maximize(room * F.gradient(y))
        if status != _kernel.OPTIMAL:
            raise LPBreakdown("simplex breakdown in measured greedy")
        y = y + delta * room * x
    return y


def _select_children(runs, z, cap):
    """Direction vectors to recurse on, most suspicious first.

    Directions from runs that met an empty cut come first, then everything
    else; within a group, smaller recorded slack of the cut comes first.
    """
    pool = []
    for t_idx, out in enumerate(runs):
        empty = out.q_empty
        damaged = bool(empty.any())
        for i in range(out.directions.shape[0]):
            x = out.directions[i]
            if empty[i] or not np.any(x):
                continue
            pool.append((0 if damaged else 1, float(out.slack[i]), t_idx, i + 1, x))
    pool.sort(key=lambda e: e[:4])
    chosen, seen = [], {tuple(np.round(np.asarray(z) / DEDUPE_RESOLUTION).astype(np.int64).tolist())}
    for _, _, t_idx, i, x in pool:
        key = tuple(np.round(x / DEDUPE_RESOLUTION).astype(np.int64).tolist())
        if key in seen:
            continue
        seen.add(key)
        chosen.append((t_idx, i, x))
        if cap is not None and len(chosen) >= cap:
            break
    return chosen


class _Tree:
    def __init__(self, F, P, cfg, triples, log, observer=None):
        self.F = F
        self.P = P
        self.cfg = cfg
        self.triples = triples
        self.log = log
        self.observer = observer
        self.nodes = 0

    def run(self, z, level, path):
        cfg = self.cfg
        self.nodes += 1
        zp = box_maximize(self.F, z, cfg["epsilon"])
        self.log.add("z'", path, zp)
        runs = fwmcg_batch(self.F, self.P, z, cfg["t_s"], cfg["epsilon"], cfg["delta"], self.triples)
        for k, out in enumerate(runs):
            self.log.add("y", f"{path}|g{k}", out.y_final)
        children = _select_children(runs, z, cfg["children_per_node"]) if level < cfg["depth"] else []
        if self.observer is not None:
            self.observer(path, level, z, zp, runs, children)
        for t_idx, i, x in children:
            self.run(x, level + 1, f"{path}/g{t_idx}x{i}")


def main_recursive(F: DrFunction, P: PackingPolytope, t_s: float, z, epsilon: float, delta: float,
                   level: int = 1, *, depth: int = 2, children_per_node: int | None = 4,
                   triples=None, v_lower: float | None = None, c: float = BASELINE_C) -> np.ndarray:
    """Best vector of the subtree rooted at ``z``.

    Guess triples come from ``triples`` or, failing that, from ``v_lower``.
    """
    eps = normalize_epsilon(epsilon)
    cfg = {"t_s": t_s, "epsilon": eps, "delta": normalize_step(delta, eps), "depth": depth,
           "children_per_node": children_per_node}
    if triples is None:
        triples = build_guess_set(v_lower, c, eps) if v_lower and v_lower > 0 else []
    log = _Log(F)
    _Tree(F, P, cfg, triples, log).run(np.asarray(z, dtype=float), level, "root")
    return log.best().x


def solve(F: DrFunction, P: PackingPolytope, params: SolveParams | None = None, *,
          observer=None) -> SolveReport:
    """Run the recursive solver.

    ``observer(path, level, z, z_box, runs, children)``, when given, is
    called once per tree node after its guided-greedy runs; ``children``
    lists the ``(triple index, step, x)`` directions it will recurse on.
    """
    params = params or SolveParams()
    cfg = params.normalized()
    if F.n != P.n:
        raise ValueError(f"function has dimension {F.n} but the polytope has {P.n}")
    start = time.perf_counter()
    F.counter.reset()
    log = _Log(F)

    z0 = approx_local_max(F, P, (), min(cfg["epsilon"], cfg["delta"])).x_star
    log.add("z0", "root", z0)

    if params.guess_mode == "oracle":
        v_lower = float(params.oracle_value)
    else:
        base = measured_greedy(F, P, cfg["delta"])
        log.add("baseline", "mcg", base)
        log.add("baseline", "mcg|box", box_maximize(F, base, cfg["epsilon"]))
        log.add("baseline", "z0|box", box_maximize(F, z0, cfg["epsilon"]))
        v_lower = max(c.value for c in log.items)
    # a non-positive lower bound leaves nothing to guess (F(o) = 0 when the baseline is exact)
    triples = build_guess_set(v_lower, cfg["c"], cfg["epsilon"]) if v_lower > 0 else []

    tree = _Tree(F, P, cfg, triples, log, observer)
    tree.run(z0, 1, "root")

    best = log.best()
    if not membership(P, [], best.x):
        raise LPBreakdown("best candidate left the feasible region")
    return SolveReport(
        best_x=best.x,
        best_value=best.value,
        best_origin=best.origin,
        best_path=best.path,
        candidates=log.items,
        node_count=tree.nodes,
        guess_set_size=len(triples),
        v_lower=v_lower,
        params=cfg,
        evaluations={"values": F.counter.values, "gradients": F.counter.gradients},
        wall_time=time.perf_counter() - start,
    )


# -- constants --------------------------------------------------------------


def _coefficients(alpha, r, t_s, exp, e):
    one = type(alpha)(1)
    two = type(alpha)(2)
    f_o = (one - alpha) * ((two - t_s) * exp(t_s) - one) / e
    f_h = alpha * (4 * r + r * r) / (two * (r + one) ** 2) - (one - alpha) * (exp(t_s) - one) / e
    f_p = alpha * r * r / (two * (r + one) ** 2) - (one - alpha) * (
        (two - t_s) * exp(t_s) + t_s - (t_s * t_s + 5) / two) / e
    return f_o, f_h, f_p


def verify_constants(alpha: float = ALPHA, r: float = R, t_s: float = T_S) -> dict:
    """Coefficients of ``F(o)``, ``F(z hprod o)`` and ``F(z psum o)`` in the final bound.

    Evaluated in double precision and again with 40-digit decimals.
    """
    f_o, f_h, f_p = _coefficients(alpha, r, t_s, math.exp, math.e)
    getcontext().prec = 40
    D = Decimal
    hp = _coefficients(D(repr(alpha)), D(repr(r)), D(repr(t_s)), lambda v: v.exp(), D(1).exp())
    hp = [float(v) for v in hp]
    ok = 0.401 <= f_o <= 0.4013 and f_h >= -1e-4 and f_p >= -1e-4
    agree = max(abs(a - b) for a, b in zip((f_o, f_h, f_p), hp))
    return {
        "alpha": alpha, "r": r, "t_s": t_s,
        "coef_opt": f_o, "coef_hprod": f_h, "coef_psum": f_p,
        "coef_opt_decimal": hp[0], "coef_hprod_decimal": hp[1], "coef_psum_decimal": hp[2],
        "max_disagreement": agree,
        "ok": bool(ok and agree <= 1e-10),
    }
