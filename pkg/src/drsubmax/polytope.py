"""Down-closed packing polytopes and linear optimization over them.

A :class:`PackingPolytope` is ``{x in [0,1]^n : Ax <= b}`` with ``A, b >= 0``.
Extra constraints enter as :class:`Halfspace` cuts ``<w, x> >= t``. Linear
maximization over the intersection uses the dense simplex in the kernel.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernel
from .vectors import DimensionError

MEMBERSHIP_TOL = 1e-9
MAX_VERTEX_N = 12


class LPBreakdown(RuntimeError):
    """The simplex hit its pivot limit or an unbounded ray (should not happen in a box)."""


class InfeasibleRegion(ValueError):
    pass


@dataclass(frozen=True)
class Halfspace:
    """The constraint ``<w, x> >= t``."""

    w: np.ndarray
    t: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)) or not math.isfinite(self.t):
            raise ValueError("halfspace has non-finite entries")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "t", float(self.t))


class PackingPolytope:
    def __init__(self, A, b, n: int | None = None, name: str = "packing"):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.size == 0:
            if n is None:
                raise ValueError("an empty constraint matrix needs n")
            A = np.zeros((0, n))
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise DimensionError(f"A has shape {A.shape} but b has length {b.shape[0]}")
        if n is not None and A.shape[1] != n:
            raise DimensionError(f"A has {A.shape[1]} columns, expected {n}")
        if np.any(A < 0) or np.any(b < 0):
            raise ValueError("packing constraints need A >= 0 and b >= 0")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("packing constraints must be finite")
        self.A = A
        self.b = b
        self.n = A.shape[1]
        self.name = name

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return membership(self, [], x, tol)

    def singletons_feasible(self) -> bool:
        """Whether every unit vector lies in the polytope."""
        return all(self.contains(np.eye(self.n)[u]) for u in range(self.n))

    def region(self, cuts: Sequence[Halfspace] = ()):
        """Kernel LP object for ``P`` intersected with ``cuts`` (warm-startable)."""
        W, t = _cut_arrays(cuts, self.n)
        return _kernel.impl.LinearRegion(self.A, self.b, W, t, self.n)

    def to_dict(self) -> dict:
        return {"family": "packing", "n": self.n, "A": self.A.tolist(), "b": self.b.tolist()}

    def __repr__(self) -> str:
        return f"PackingPolytope(name={self.name!r}, n={self.n}, m={self.m})"


def _cut_arrays(cuts: Sequence[Halfspace], n: int):
    for h in cuts:
        if h.w.shape != (n,):
            raise DimensionError(f"cut normal has shape {h.w.shape}, expected ({n},)")
    W = np.array([h.w for h in cuts], dtype=float).reshape(len(cuts), n)
    t = np.array([h.t for h in cuts], dtype=float)
    return W, t


@dataclass
class LPResult:
    status: str
    x: np.ndarray
    value: float
    pivots: int


def lp_maximize(P: PackingPolytope, cuts: Sequence[Halfspace], c) -> LPResult:
    """Maximize ``<c, x>`` over ``P`` and the cuts.

    Infeasibility is a status; a numeric breakdown raises :class:`LPBreakdown`.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape != (P.n,):
        raise DimensionError(f"objective has length {c.shape[0]}, expected {P.n}")
    W, t = _cut_arrays(cuts, P.n)
    status, x, pivots = _kernel.impl.lp_solve(P.A, P.b, W, t, c)
    if status == _kernel.BREAKDOWN:
        raise LPBreakdown(f"simplex breakdown after {pivots} pivots")
    if status == _kernel.INFEASIBLE:
        return LPResult("infeasible", np.zeros(P.n), float("nan"), pivots)
    x = np.asarray(x, dtype=float)
    return LPResult("optimal", x, float(c @ x), pivots)


def membership(P: PackingPolytope, cuts: Sequence[Halfspace], x, tol: float = MEMBERSHIP_TOL) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (P.n,):
        raise DimensionError(f"point has length {x.shape[0]}, expected {P.n}")
    if np.any(x < -tol) or np.any(x > 1.0 + tol):
        return False
    if P.m and np.any(P.A @ x > P.b + tol):
        return False
    return all(h.w @ x >= h.t - tol for h in cuts)


def diameter_bound(P: PackingPolytope) -> float:
    return math.sqrt(P.n)


# -- builders ----------------------------------------------------------------


def hypercube(n: int) -> PackingPolytope:
    return PackingPolytope(np.zeros((0, n)), np.zeros(0), n=n, name="hypercube")


def cardinality(n: int, k: float) -> PackingPolytope:
    if k < 0:
        raise ValueError("cardinality bound must be non-negative")
    return PackingPolytope(np.ones((1, n)), [k], name="cardinality")


def knapsack(weights, budget: float) -> PackingPolytope:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or budget < 0:
        raise ValueError("knapsack weights and budget must be non-negative")
    return PackingPolytope(weights[None, :], [budget], name="knapsack")


def partition_matroid(groups: Sequence[Sequence[int]], capacities: Sequence[float], n: int | None = None) -> PackingPolytope:
    """One row per group; elements are 0-based and ``n`` defaults to the largest index + 1."""
    if len(groups) != len(capacities):
        raise ValueError("need one capacity per group")
    if any(c < 0 for c in capacities):
        raise ValueError("capacities must be non-negative")
    members = [u for g in groups for u in g]
    if len(set(members)) != len(members):
        raise ValueError("partition groups overlap")
    if n is None:
        n = max(members, default=-1) + 1
    A = np.zeros((len(groups), n))
    for r, g in enumerate(groups):
        A[r, list(g)] = 1.0
    return PackingPolytope(A, capacities, n=n, name="partition_matroid")


# -- vertex enumeration (debugging and test oracle) ----------------------------


def vertices(P: PackingPolytope, cuts: Sequence[Halfspace] = (), tol: float = 1e-9) -> np.ndarray:
    """All vertices of ``P`` and the cuts by brute force over active sets.

    Every vertex fixes some coordinates at 0 or 1 and solves the remaining
    ones from a square set of tight rows. Exponential, so ``n <= 12``.
    """
    n = P.n
    if n > MAX_VERTEX_N:
        raise ValueError(f"vertex enumeration limited to n <= {MAX_VERTEX_N}")
    W, t = _cut_arrays(cuts, n)
    rows = np.vstack([P.A, W]) if len(cuts) else P.A
    rhs = np.concatenate([P.b, t]) if len(cuts) else P.b
    found = []
    for fixed in itertools.product((0.0, 1.0, None), repeat=n):
        free = [j for j in range(n) if fixed[j] is None]
        base = np.array([0.0 if v is None else v for v in fixed])
        k = len(free)
        if k == 0:
            cand = [base]
        else:
            if k > rows.shape[0]:
                continue
            cand = []
            resid = rhs - rows @ base
            for active in itertools.combinations(range(rows.shape[0]), k):
                M = rows[np.ix_(active, free)]
                if abs(np.linalg.det(M)) < 1e-12:
                    continue
                x = base.copy()
                x[free] = np.linalg.solve(M, resid[list(active)])
                cand.append(x)
        for x in cand:
            if membership(P, cuts, x, tol):
                found.append(np.clip(x, 0.0, 1.0))
    if not found:
        return np.zeros((0, n))
    found = np.unique(np.round(np.array(found), 12), axis=0)
    return found


def export_vertices_csv(P: PackingPolytope, path, cuts: Sequence[Halfspace] = ()) -> int:
    V = vertices(P, cuts)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(P.n)])
        for row in V:
            writer.writerow([repr(float(v)) for v in row])
    return V.shape[0]
