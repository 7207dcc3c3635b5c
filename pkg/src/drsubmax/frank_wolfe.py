"""Frank-Wolfe local search with a first-order certificate.

With step ``delta`` normalized to ``1/K`` (K integral), the loop runs ``K^2``
iterations of ``x <- x + delta (z - x)`` where ``z`` maximizes the linear
model ``<., grad F(x)>`` over the region. The gap ``<z - x, grad F(x)>`` of
every iteration is recorded; the point preceding the smallest gap is
returned together with that gap as its certificate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import _kernel
from .functions import DrFunction
from .polytope import (MEMBERSHIP_TOL, Halfspace, InfeasibleRegion, LPBreakdown,
                       PackingPolytope, _cut_arrays, membership)


def normalize_delta(delta: float) -> float:
    """Round ``delta`` down to the nearest reciprocal of an integer."""
    if not 0.0 < delta < 1.0 + 1e-12:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return 1.0 / math.ceil(1.0 / delta - 1e-12)


@dataclass
class LocalMaxResult:
    x_star: np.ndarray
    certificate: float
    iterations_run: int
    i_star: int
    delta: float
    gaps: np.ndarray = field(repr=False)
    trajectory: np.ndarray = field(repr=False)
    steps_computed: int = 0

    def prefix_minima(self) -> np.ndarray:
        return np.minimum.accumulate(self.gaps)


def _start_point(P, cuts, x0, region):
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if not membership(P, cuts, x0, MEMBERSHIP_TOL):
            raise InfeasibleRegion("starting point is outside the region")
        return np.clip(x0, 0.0, 1.0)
    zero = np.zeros(P.n)
    if membership(P, cuts, zero, 0.0):
        return zero
    return region.point()


def approx_local_max(F: DrFunction, P: PackingPolytope, cuts: Sequence[Halfspace] = (),
                     delta: float = 0.1, x0=None, trace: IO[str] | None = None) -> LocalMaxResult:
    """Approximate local maximum of ``F`` over ``P`` intersected with ``cuts``.

    Raises :class:`InfeasibleRegion` for an empty region and
    :class:`LPBreakdown` when the simplex gives up.
    """
    if F.n != P.n:
        raise ValueError(f"function has dimension {F.n} but the polytope has {P.n}")
    delta = normalize_delta(delta)
    K = round(1.0 / delta)
    iters = K * K
    region = P.region(cuts)
    if region.status == _kernel.INFEASIBLE:
        raise InfeasibleRegion("region is empty")
    if region.status == _kernel.BREAKDOWN:
        raise LPBreakdown("simplex breakdown in the feasibility phase")
    x = _start_point(P, cuts, x0, region)

    W, t = _cut_arrays(cuts, P.n)
    status, traj, gaps, computed = _iterate(F, P, W, t, region, x, delta, iters)
    if status == _kernel.BREAKDOWN:
        raise LPBreakdown("simplex breakdown inside the Frank-Wolfe loop")
    if status == _kernel.INFEASIBLE:
        raise InfeasibleRegion("region is empty")

    i_star = int(np.argmin(gaps)) + 1
    result = LocalMaxResult(
        x_star=traj[i_star - 1].copy(),
        certificate=float(gaps[i_star - 1]),
        iterations_run=iters,
        i_star=i_star,
        delta=delta,
        gaps=gaps,
        trajectory=traj,
        steps_computed=int(computed),
    )
    if trace is not None:
        _write_trace(F, result, trace)
    return result


def _iterate(F, P, W, t, region, x0, delta, iters):
    """Run the loop in the kernel when ``F`` has a kernel form, else in Python.

    ``x0=None`` starts from the feasibility-phase point of the region.
    """
    spec = F.kernel_spec()
    if spec is not None:
        kind, H, h, table = spec
        status, traj, gaps, computed, grads = _kernel.impl.fw_run(
            kind, H, h, table, P.A, P.b, W, t, x0, delta, iters)
        F.counter.gradients += grads
        return status, traj, gaps, computed
    if region is None:
        region = _kernel.impl.LinearRegion(P.A, P.b, W, t, P.n)
        if region.status != _kernel.OPTIMAL:
            return region.status, None, None, 0
    if x0 is None:
        x0 = region.point()
    return _python_loop(F, region, x0, delta, iters)


def local_max_point(F: DrFunction, P: PackingPolytope, W, t, delta: float, x0=None):
    """Lean form of :func:`approx_local_max` for callers that loop over many cuts.

    ``delta`` must already be normalized and the start point (or ``None``)
    already chosen. Returns ``(status, x_star, certificate)``.
    """
    K = round(1.0 / delta)
    status, traj, gaps, _ = _iterate(F, P, W, t, None, x0, delta, K * K)
    if status != _kernel.OPTIMAL:
        return status, None, float("nan")
    k = int(np.argmin(gaps))
    return status, traj[k].copy(), float(gaps[k])


def _python_loop(F, region, x, delta, iters):
    n = x.shape[0]
    traj = np.zeros((iters + 1, n))
    gaps = np.zeros(iters)
    traj[0] = x
    computed = 0
    for it in range(iters):
        g = F.gradient(x)
        status, z = region.maximize(g)
        if status != _kernel.OPTIMAL:
            return status, traj, gaps, computed
        gap = float((z - x) @ g)
        gaps[it] = gap
        computed += 1
        if np.array_equal(z, x):
            gaps[it:] = gap
            traj[it + 1:] = x
            break
        x = x + delta * (z - x)
        traj[it + 1] = x
    return _kernel.OPTIMAL, traj, gaps, computed


def _write_trace(F, result, fh):
    values = F.values(result.trajectory[:-1])
    best = np.minimum.accumulate(result.gaps)
    for i in range(result.iterations_run):
        fh.write(json.dumps({"iteration": i + 1, "objective": float(values[i]),
                             "gap": float(result.gaps[i]), "certificate": float(best[i])}) + "\n")
