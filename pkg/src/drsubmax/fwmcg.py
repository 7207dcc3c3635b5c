"""Measured continuous greedy aided by Frank-Wolfe local maxima.

One run follows ``m = 1/delta`` steps. Step ``i`` forms the weight vector
``w = (1 - y - z(i-1)) * grad F(y)``, restricts ``P`` by the cut
``<w, x> >= V(i-1) - F(y)``, takes an approximate local maximum ``x(i)`` of
``F`` over that region (``0`` when the region is empty) and moves
``y <- y + delta (1 - y - z(i-1)) * x(i)``. The target values ``V`` and the
helper vector ``z(i)`` follow fixed schedules driven by a guess
``(g, g_hprod, g_psum)`` of ``F(o)``, ``F(z hprod o)`` and ``F(z psum o)``.

When the local maximum of ``F`` over ``P`` itself satisfies the cut it is
taken as ``x(i)``: its first-order certificate over ``P`` bounds the one
over the smaller region, so no separate search is needed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from . import _kernel
from .frank_wolfe import local_max_point
from .functions import DrFunction
from .polytope import LPBreakdown, PackingPolytope
from .vectors import psum_many

# A cut whose threshold exceeds the maximum of <w, x> over P by more than
# this is empty without running the feasibility phase.
EMPTY_MARGIN = 1e-9


@dataclass(frozen=True)
class GuessTriple:
    g: float
    g_hprod: float
    g_psum: float

    def as_tuple(self):
        return (self.g, self.g_hprod, self.g_psum)


def guess_counts(c: float, epsilon: float) -> tuple[int, int, int]:
    """Sizes of the three factors of the guess set."""
    n_o = math.ceil(math.log(c) / math.log(1.0 - epsilon) - 1e-12) + 1
    n_h = math.floor(1.0 / (epsilon * (1.0 - epsilon)) + 1.0 + 1e-12) + 1
    n_p = math.floor(2.0 / (epsilon * (1.0 - epsilon)) + 1.0 + 1e-12) + 1
    return n_o, n_h, n_p


def build_guess_set(v_lower: float, c: float, epsilon: float) -> list[GuessTriple]:
    """Guess triples for a lower bound ``v_lower`` with ``c F(o) <= v_lower <= F(o)``.

    ``g`` runs over ``(1-eps)^i v/c`` for ``i = 1 .. ceil(log_{1-eps} c) + 1``;
    ``g_hprod`` and ``g_psum`` over multiples ``eps * i * g`` up to
    ``1/(eps(1-eps)) + 1`` and ``2/(eps(1-eps)) + 1`` respectively.
    """
    if not v_lower > 0.0:
        raise ValueError(f"v_lower must be positive, got {v_lower}")
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    n_o, n_h, n_p = guess_counts(c, epsilon)
    out = []
    for i in range(1, n_o + 1):
        g = (1.0 - epsilon) ** i * v_lower / c
        for a in range(n_h):
            for b in range(n_p):
                out.append(GuessTriple(g, epsilon * a * g, epsilon * b * g))
    return out


def normalize_step(delta: float, epsilon: float) -> float:
    """``1 / ceil(1 / min(delta, eps))``."""
    return 1.0 / math.ceil(1.0 / min(delta, epsilon) - 1e-12)


def switch_index(t_s: float, delta: float) -> int:
    return math.ceil(t_s / delta - 1e-12)


def schedule_V(i: int, i_s: int, delta: float, epsilon: float, triple: GuessTriple) -> float:
    m = round(1.0 / delta)
    if not 0 <= i <= m - 1:
        raise IndexError(f"schedule index {i} outside 0..{m - 1}")
    g, gh, gp = triple.as_tuple()
    q = 1.0 - delta
    if i < i_s:
        return (1.0 - 2.0 * epsilon) * g - gh - (1.0 - q ** i) * gp
    inv = q ** (-i_s)
    return q ** i * ((inv - 4.0 * epsilon) * g - (inv - 1.0 - delta * (i - i_s)) * gp)


def schedule_z(i: int, i_s: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return z.copy() if i < i_s else np.zeros_like(z)


MODES = ("covered", "binding", "empty")


@dataclass
class StepRecord:
    i: int
    V: float
    F_y: float
    threshold: float
    q_empty: bool
    cut: str
    certificate: float
    slack: float

    def to_dict(self) -> dict:
        return {"i": self.i, "V": self.V, "F_y": self.F_y, "threshold": self.threshold,
                "q_empty": self.q_empty, "cut": self.cut, "certificate": self.certificate,
                "slack": self.slack}


@dataclass
class FwmcgOutput:
    """Result of one run.

    Row ``i - 1`` of the per-step arrays describes step ``i``: the target
    ``V(i-1)``, ``F(y(i-1))``, the cut threshold, the cut status (index into
    ``MODES``), the local-search certificate (NaN for an empty cut) and the
    slack ``<w(i), x(i)> - threshold``.
    """

    y_final: np.ndarray
    directions: np.ndarray
    ys: np.ndarray = field(repr=False)
    triple: GuessTriple
    delta: float
    i_s: int
    V: np.ndarray = field(repr=False)
    F_y: np.ndarray = field(repr=False)
    threshold: np.ndarray = field(repr=False)
    mode: np.ndarray = field(repr=False)
    certificate: np.ndarray = field(repr=False)
    slack: np.ndarray = field(repr=False)

    @property
    def q_empty(self) -> np.ndarray:
        return self.mode == 2

    @property
    def records(self) -> list:
        return [StepRecord(i + 1, float(self.V[i]), float(self.F_y[i]), float(self.threshold[i]),
                           bool(self.mode[i] == 2), MODES[self.mode[i]], float(self.certificate[i]),
                           float(self.slack[i]))
                for i in range(self.V.shape[0])]

    def closed_form(self, i: int, z) -> np.ndarray:
        """``y(i)`` rebuilt from the recorded directions."""
        z = np.asarray(z, dtype=float)
        n = z.shape[0]
        steps = [self.delta * self.directions[j] for j in range(i)]
        head = (1.0 - z) * psum_many(steps, n)
        if i <= self.i_s:
            return head
        return head + z * psum_many(steps[self.i_s:], n)


class StepCache:
    """Memo of per-step work shared by runs over different guess triples.

    Runs that reach the same step with the same ``y`` see the same weight
    vector. Local maxima depend only on the region: the one over ``P`` is
    computed once and binding cuts are keyed by normal and threshold. A
    cache is tied to one ``(F, P, z, t_s, eps, delta)`` context.
    """

    def __init__(self):
        self.context = None
        self.states = {}
        self.local = {}
        self.base = None
        self.hits = 0
        self.misses = 0

    def bind(self, context) -> None:
        if self.context is None:
            self.context = context
        elif self.context != context:
            raise ValueError("step cache reused with a different function, region or schedule")


def schedule_table(triples, i_s: int, delta: float, epsilon: float) -> np.ndarray:
    """``V(i)`` for every triple (rows) and ``0 <= i < 1/delta`` (columns).

    Same operation order as :func:`schedule_V`, so entries agree bit for bit.
    """
    m = round(1.0 / delta)
    T = np.array([t.as_tuple() for t in triples], dtype=float).reshape(-1, 3)
    g, gh, gp = T[:, 0], T[:, 1], T[:, 2]
    q = 1.0 - delta
    inv = q ** (-i_s)
    out = np.empty((T.shape[0], m))
    for i in range(m):
        if i < i_s:
            out[:, i] = (1.0 - 2.0 * epsilon) * g - gh - (1.0 - q ** i) * gp
        else:
            out[:, i] = q ** i * ((inv - 4.0 * epsilon) * g - (inv - 1.0 - delta * (i - i_s)) * gp)
    return out


def _max_over(P, w) -> float:
    """Maximum of ``<w, x>`` over ``P``."""
    if P.m == 0:
        return float(np.maximum(w, 0.0).sum())
    status, x, _ = _kernel.impl.lp_solve(P.A, P.b, np.zeros((0, P.n)), np.zeros(0), w)
    if status != _kernel.OPTIMAL:
        raise LPBreakdown("simplex breakdown while bounding a cut")
    return float(w @ x)


def _local(F, P, w, thr, delta):
    n = P.n
    if w is None:  # P alone
        W, t, x0 = np.zeros((0, n)), np.zeros(0), np.zeros(n)
    else:
        W, t = w.reshape(1, n), np.array([thr])
        x0 = np.zeros(n) if thr <= 0.0 else None
    status, x, cert = local_max_point(F, P, W, t, delta, x0)
    if status == _kernel.BREAKDOWN:
        raise LPBreakdown("simplex breakdown inside a local search")
    if status == _kernel.INFEASIBLE:
        return None, float("nan")
    return x, cert


def fwmcg_batch(F: DrFunction, P: PackingPolytope, z, t_s: float, epsilon: float, delta: float,
                triples, *, cache: StepCache | None = None) -> list[FwmcgOutput]:
    """Runs for several guess triples, stepped together.

    Triples whose runs have reached the same ``y`` share the gradient, the
    LP bound and any local search, so this returns exactly what separate
    :func:`fwmcg_run` calls would. Raises :class:`LPBreakdown` on simplex
    failure.
    """
    if not 0.0 < t_s < 1.0:
        raise ValueError(f"t_s must lie in (0, 1), got {t_s}")
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    z = np.asarray(z, dtype=float)
    n = P.n
    if z.shape != (n,) or F.n != n:
        raise ValueError("dimension mismatch between F, P and z")
    delta = normalize_step(delta, epsilon)
    m = round(1.0 / delta)
    i_s = switch_index(t_s, delta)
    cache = cache if cache is not None else StepCache()
    cache.bind((id(F), id(P), z.tobytes(), t_s, epsilon, delta))
    if cache.base is None:
        cache.base = _local(F, P, None, 0.0, delta)
    base_x, base_cert = cache.base

    k = len(triples)
    Vtab = schedule_table(triples, i_s, delta, epsilon)
    Vl = Vtab.tolist()
    zero = np.zeros(n)
    # per triple: list of (direction, y after the step) and scalar rows
    path = [[] for _ in range(k)]
    rows = [[] for _ in range(k)]
    nan = float("nan")
    groups = {zero.tobytes(): (zero, list(range(k)))}
    for i in range(1, m + 1):
        zi = z if i - 1 < i_s else zero
        nxt = {}
        for ykey, (y, idx) in groups.items():
            key = (i, ykey)
            state = cache.states.get(key)
            if state is None:
                cache.misses += 1
                room = 1.0 - y - zi
                w = room * F.gradient(y)
                state = [F.value(y), room, w, float(w @ base_x), None, None]
                cache.states[key] = state
            else:
                cache.hits += 1
            fy, room, w, base_level, hi, y_cov = state
            cov = []
            for t_idx in idx:
                t = Vl[t_idx][i - 1] - fy
                if base_level >= t:
                    # the local maximum over P lies in the cut region and certifies it too
                    cov.append(t_idx)
                    rows[t_idx].append((fy, t, 0, base_cert, base_level - t))
                    continue
                if hi is None:
                    hi = state[4] = _max_over(P, w)
                x = None
                if t <= hi + EMPTY_MARGIN:
                    lkey = (w.tobytes(), t)
                    hit = cache.local.get(lkey)
                    if hit is None:
                        cache.misses += 1
                        hit = cache.local[lkey] = _local(F, P, w, t, delta)
                    else:
                        cache.hits += 1
                    x, cert = hit
                if x is None:
                    x = zero
                    rows[t_idx].append((fy, t, 2, nan, -t))
                else:
                    rows[t_idx].append((fy, t, 1, cert, float(w @ x) - t))
                y_new = y + delta * room * x
                path[t_idx].append((x, y_new))
                _join(nxt, y_new, [t_idx])
            if cov:
                if y_cov is None:
                    y_cov = state[5] = y + delta * room * base_x
                for t_idx in cov:
                    path[t_idx].append((base_x, y_cov))
                _join(nxt, y_cov, cov)
        groups = nxt
    out = []
    for j in range(k):
        xs = np.array([p[0] for p in path[j]]).reshape(m, n)
        ys = np.vstack([zero] + [p[1] for p in path[j]])
        r = np.array(rows[j]).reshape(m, 5)
        out.append(FwmcgOutput(y_final=ys[m].copy(), directions=xs, ys=ys, triple=triples[j],
                               delta=delta, i_s=i_s, V=Vtab[j], F_y=r[:, 0], threshold=r[:, 1],
                               mode=r[:, 2].astype(np.int8), certificate=r[:, 3], slack=r[:, 4]))
    return out


def _join(groups, y, idx):
    key = y.tobytes()
    if key in groups:
        groups[key][1].extend(idx)
    else:
        groups[key] = (y, list(idx))


def fwmcg_run(F: DrFunction, P: PackingPolytope, z, t_s: float, epsilon: float, delta: float,
              triple: GuessTriple, *, cache: StepCache | None = None,
              trace: IO[str] | None = None) -> FwmcgOutput:
    """One run for a fixed guess triple.

    ``delta`` is normalized to ``1/ceil(1/min(delta, eps))``; the inner local
    search uses the same step. Raises :class:`LPBreakdown` on simplex failure.
    """
    out = fwmcg_batch(F, P, z, t_s, epsilon, delta, [triple], cache=cache)[0]
    if trace is not None:
        for r in out.records:
            trace.write(json.dumps({"i": r.i, "V": r.V, "F_y": r.F_y,
                                    "q_status": "empty" if r.q_empty else "nonempty",
                                    "certificate": None if r.q_empty else r.certificate}) + "\n")
    return out
