"""Non-negative DR-submodular objectives.

Every objective is a :class:`DrFunction`: value, gradient and a declared
smoothness bound ``L`` (Lipschitz constant of the gradient in the 2-norm).
DR-submodularity here means an antitone gradient, so twice-differentiable
members have entrywise non-positive Hessians.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .vectors import DimensionError

MAX_EXACT_N = 20
MAX_CORNER_N = 20


class NotDRSubmodular(ValueError):
    pass


class NegativeValue(ValueError):
    pass


@dataclass
class EvalCounter:
    values: int = 0
    gradients: int = 0

    def reset(self) -> None:
        self.values = 0
        self.gradients = 0


class DrFunction:
    """Base class; subclasses implement ``_value`` and ``_gradient``."""

    family = "generic"

    def __init__(self, n: int, smoothness: float, mode: str = "exact"):
        self.n = int(n)
        self.smoothness = float(smoothness)
        self.mode = mode
        self.counter = EvalCounter()

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"expected a vector of dimension {self.n}, got shape {x.shape}")
        return x

    def value(self, x) -> float:
        self.counter.values += 1
        return float(self._value(self._check(x)))

    def gradient(self, x) -> np.ndarray:
        self.counter.gradients += 1
        return self._gradient(self._check(x))

    __call__ = value

    def values(self, X) -> np.ndarray:
        """Evaluate on every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise DimensionError(f"expected rows of dimension {self.n}, got {X.shape[1]}")
        self.counter.values += X.shape[0]
        return self._values(X)

    def _values(self, X) -> np.ndarray:
        return np.array([self._value(row) for row in X])

    def kernel_spec(self):
        """``(kind, H, h, table)`` when the compiled Frank-Wolfe loop applies."""
        return None

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError


class QuadraticFunction(DrFunction):
    """``F(x) = x'Hx/2 + h'x + c`` with symmetric ``H``."""

    family = "quadratic"

    def __init__(self, H, h, c=0.0, *, smoothness=None, nonneg_verified=False):
        H = np.array(H, dtype=float)
        h = np.array(h, dtype=float).reshape(-1)
        n = h.shape[0]
        if H.shape != (n, n):
            raise DimensionError(f"H has shape {H.shape}, expected {(n, n)}")
        self.H = 0.5 * (H + H.T)
        self.h = h
        self.c = float(c)
        if smoothness is None:
            smoothness = float(np.linalg.norm(self.H, 2)) if n else 0.0
        super().__init__(n, smoothness)
        self.nonneg_verified = nonneg_verified

    def _value(self, x):
        return 0.5 * x @ self.H @ x + self.h @ x + self.c

    def _values(self, X):
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.H, X) + X @ self.h + self.c

    def _gradient(self, x):
        return self.H @ x + self.h

    def kernel_spec(self):
        return _kernel.KIND_QUADRATIC, self.H, self.h, None

    def is_dr(self) -> bool:
        return bool(np.all(self.H <= 0.0))


def corner_minimum(F: DrFunction) -> float:
    """Minimum of ``F`` over the 2^n corners of the cube."""
    if F.n > MAX_CORNER_N:
        raise ValueError(f"corner enumeration limited to n <= {MAX_CORNER_N}")
    return float(F.values(all_corners(F.n)).min())


def all_corners(n: int) -> np.ndarray:
    """Row ``k`` is the indicator of the bitmask ``k`` (bit u <=> element u)."""
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def make_quadratic(H, h, c=0.0, *, tol=1e-12) -> QuadraticFunction:
    """Build a non-negative DR-submodular quadratic.

    ``H`` must be entrywise non-positive. For ``n <= 20`` non-negativity is
    checked on every corner, which suffices because each coordinate section
    is concave. Larger instances record the offset as an unverified
    assumption (``nonneg_verified=False``).
    """
    H = np.array(H, dtype=float)
    if np.any(H > 0.0):
        raise NotDRSubmodular("quadratic has a positive Hessian entry")
    F = QuadraticFunction(H, h, c)
    if F.n <= MAX_CORNER_N:
        low = corner_minimum(F)
        F.counter.reset()
        if low < -tol:
            raise NegativeValue(f"quadratic takes the negative value {low:.3g} at a corner")
        F.nonneg_verified = True
    return F


def random_quadratic(n: int, rng: np.random.Generator, *, density: float = 1.0) -> QuadraticFunction:
    """Random DR quadratic shifted to be non-negative with minimum zero-ish."""
    H = -rng.random((n, n)) * (rng.random((n, n)) < density)
    H = 0.5 * (H + H.T)
    h = rng.random(n) * (0.5 + 0.5 * np.abs(H).sum(axis=1))
    F = QuadraticFunction(H, h, 0.0)
    low = corner_minimum(F) if n <= MAX_CORNER_N else 0.0
    return make_quadratic(F.H, h, max(0.0, -low))


# -- set functions ---------------------------------------------------------


class SetFunction:
    """Non-negative set function on ``range(n)``.

    ``evaluate`` takes a boolean matrix whose rows are membership masks.
    """

    family = "explicit-table"

    def __init__(self, n: int):
        self.n = int(n)

    def evaluate(self, masks) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, subset) -> float:
        mask = np.zeros((1, self.n), dtype=bool)
        mask[0, list(subset)] = True
        return float(self.evaluate(mask)[0])

    def quadratic_form(self):
        """``(H, h, c)`` when the multilinear extension is a quadratic, else ``None``."""
        return None

    def table(self) -> np.ndarray:
        """Values on all subsets, indexed by bitmask."""
        if self.n > MAX_EXACT_N:
            raise ValueError(f"tabulation limited to n <= {MAX_EXACT_N}")
        return self.evaluate(all_corners(self.n).astype(bool))

    @property
    def M(self) -> float:
        """``max{f(empty), n * max_u f({u})}``, an upper bound on f."""
        masks = np.zeros((self.n + 1, self.n), dtype=bool)
        masks[np.arange(1, self.n + 1), np.arange(self.n)] = True
        vals = self.evaluate(masks)
        singles = vals[1:].max() if self.n else 0.0
        return float(max(vals[0], self.n * singles))

    def is_submodular(self, tol: float = 1e-9) -> bool:
        """Exhaustive check of decreasing marginals (n <= 12)."""
        if self.n > 12:
            raise ValueError("exhaustive submodularity check limited to n <= 12")
        t = self.table()
        idx = np.arange(1 << self.n)
        for u in range(self.n):
            for v in range(self.n):
                if u == v:
                    continue
                bu, bv = 1 << u, 1 << v
                S = idx[(idx & (bu | bv)) == 0]
                lhs = t[S | bu] - t[S]
                rhs = t[S | bu | bv] - t[S | bv]
                if np.any(lhs < rhs - tol):
                    return False
        return True


class CutFunction(SetFunction):
    """Weighted cut: sum of ``w`` over edges ``(u, v)`` with u in S, v not in S.

    Undirected graphs count both orientations.
    """

    family = "cut"

    def __init__(self, n: int, edges, directed: bool = True):
        super().__init__(n)
        edges = [(int(u), int(v), float(w)) for u, v, w in edges]
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside the ground set")
            if w < 0:
                raise ValueError("cut weights must be non-negative")
        self.edges = edges
        self.directed = directed
        arcs = list(edges) if directed else [a for u, v, w in edges for a in ((u, v, w), (v, u, w))]
        self._src = np.array([a[0] for a in arcs], dtype=int)
        self._dst = np.array([a[1] for a in arcs], dtype=int)
        self._w = np.array([a[2] for a in arcs], dtype=float)

    def evaluate(self, masks):
        masks = np.atleast_2d(np.asarray(masks, dtype=bool))
        if not self._w.size:
            return np.zeros(masks.shape[0])
        cut = masks[:, self._src] & ~masks[:, self._dst]
        return cut.astype(float) @ self._w

    def quadratic_form(self):
        # each arc contributes w x_u (1 - x_v)
        H = np.zeros((self.n, self.n))
        h = np.zeros(self.n)
        for u, v, w in zip(self._src.tolist(), self._dst.tolist(), self._w.tolist()):
            if u == v:
                continue  # a loop is never cut
            h[u] += w
            H[u, v] -= w
            H[v, u] -= w
        return H, h, 0.0


class CoverageFunction(SetFunction):
    """Weighted coverage; ground element ``u`` covers the items ``sets[u]``."""

    family = "coverage"

    def __init__(self, n: int, sets, weights):
        super().__init__(n)
        if len(sets) != n:
            raise ValueError("coverage needs one item list per ground element")
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise ValueError("coverage weights must be non-negative")
        self.sets = [sorted(int(e) for e in s) for s in sets]
        self.weights = weights
        inc = np.zeros((n, weights.shape[0]), dtype=float)
        for u, items in enumerate(self.sets):
            inc[u, items] = 1.0
        self._inc = inc

    def evaluate(self, masks):
        masks = np.atleast_2d(np.asarray(masks, dtype=float))
        covered = (masks @ self._inc) > 0.0
        return covered.astype(float) @ self.weights


class TableFunction(SetFunction):
    """Explicit table of 2^n values indexed by bitmask."""

    family = "explicit-table"

    def __init__(self, n: int, values):
        super().__init__(n)
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.shape[0] != 1 << n:
            raise ValueError(f"table needs {1 << n} values, got {values.shape[0]}")
        if np.any(values < 0):
            raise NegativeValue("set function tables must be non-negative")
        self.values = values
        self._weights = 1 << np.arange(n)

    def evaluate(self, masks):
        masks = np.atleast_2d(np.asarray(masks, dtype=bool))
        return self.values[masks.astype(np.int64) @ self._weights]

    def table(self):
        return self.values.copy()


def random_cut(n: int, rng: np.random.Generator, p: float = 0.6, directed: bool = True) -> CutFunction:
    edges = [(u, v, float(rng.uniform(0.2, 1.0)))
             for u, v in itertools.permutations(range(n), 2) if rng.random() < p]
    if not directed:
        edges = [(u, v, w) for u, v, w in edges if u < v]
    if not edges and n >= 2:
        edges = [(0, 1, 1.0)]
    return CutFunction(n, edges, directed=directed)


def random_coverage(n: int, rng: np.random.Generator, items: int | None = None) -> CoverageFunction:
    items = items or 2 * n
    sets = [sorted(set(rng.choice(items, size=min(items, int(rng.integers(1, 4))), replace=False).tolist()))
            for _ in range(n)]
    return CoverageFunction(n, sets, rng.uniform(0.1, 1.0, size=items))


# -- multilinear extensions -----------------------------------------------


def _contract_rows(table: np.ndarray, X: np.ndarray) -> np.ndarray:
    n = X.shape[1]
    arr = np.broadcast_to(table, (X.shape[0], table.shape[0])).copy()
    size = table.shape[0]
    for v in range(n - 1, -1, -1):
        half = size >> 1
        xv = X[:, v:v + 1]
        arr = (1.0 - xv) * arr[:, :half] + xv * arr[:, half:size]
        size = half
    return arr[:, 0]


class MultilinearExtension(DrFunction):
    """Exact multilinear extension.

    Families whose extension is a quadratic (cuts) are evaluated through
    that closed form; everything else contracts the full table of ``f``.
    """

    family = "multilinear"

    def __init__(self, f: SetFunction):
        if f.n > MAX_EXACT_N:
            raise ValueError(f"exact multilinear mode limited to n <= {MAX_EXACT_N}")
        self.set_function = f
        self.table = np.ascontiguousarray(f.table(), dtype=float)
        self.quadratic = f.quadratic_form()
        super().__init__(f.n, 2 * f.n * f.M)

    def _value(self, x):
        if self.quadratic is not None:
            H, h, c = self.quadratic
            return 0.5 * x @ H @ x + h @ x + c
        return _kernel.impl.table_value(self.table, self.n, x)

    def _gradient(self, x):
        if self.quadratic is not None:
            H, h, _ = self.quadratic
            return H @ x + h
        return np.asarray(_kernel.impl.table_gradient(self.table, self.n, x))

    def _values(self, X):
        if self.quadratic is not None:
            H, h, c = self.quadratic
            return 0.5 * np.einsum("ij,jk,ik->i", X, H, X) + X @ h + c
        out = np.empty(X.shape[0])
        chunk = max(1, (1 << 22) >> self.n)
        for s in range(0, X.shape[0], chunk):
            out[s:s + chunk] = _contract_rows(self.table, X[s:s + chunk])
        return out

    def kernel_spec(self):
        if self.quadratic is not None:
            H, h, _ = self.quadratic
            return _kernel.KIND_QUADRATIC, H, h, None
        return _kernel.KIND_TABLE, None, None, self.table


def multilinear_exact(f: SetFunction) -> MultilinearExtension:
    return MultilinearExtension(f)


class SampledMultilinear(DrFunction):
    """Monte-Carlo multilinear extension.

    Each query draws ``sample_count`` stratified uniform vectors from a generator keyed
    on ``(seed, x)``, so repeated queries at the same point agree exactly.
    The value and every partial derivative share those draws.
    """

    family = "multilinear"

    def __init__(self, f: SetFunction, sample_count: int, seed: int = 0):
        if sample_count < 1:
            raise ValueError("sample_count must be positive")
        self.set_function = f
        self.sample_count = int(sample_count)
        self.seed = int(seed)
        super().__init__(f.n, 2 * f.n * f.M, mode="sampled")

    def _draws(self, x):
        digest = hashlib.blake2b(np.ascontiguousarray(x).tobytes(), digest_size=16).digest()
        words = np.frombuffer(digest, dtype=np.uint32).tolist()
        rng = np.random.default_rng([self.seed, *words])
        # Latin hypercube: each column puts one uniform in every stratum [k/N, (k+1)/N),
        # so the additive part of f is integrated almost exactly
        N = self.sample_count
        strata = rng.permuted(np.tile(np.arange(N), (self.n, 1)), axis=1).T
        return (strata + rng.random((N, self.n))) / N < x

    def _value(self, x):
        return float(self.set_function.evaluate(self._draws(x)).mean())

    def _gradient(self, x):
        R = self._draws(x)
        g = np.empty(self.n)
        for u in range(self.n):
            up = R.copy()
            up[:, u] = True
            down = R.copy()
            down[:, u] = False
            g[u] = (self.set_function.evaluate(up) - self.set_function.evaluate(down)).mean()
        return g


def multilinear_sampled(f: SetFunction, sample_count: int, seed: int = 0) -> SampledMultilinear:
    return SampledMultilinear(f, sample_count, seed)


# -- closures under fixed vectors ------------------------------------------


class HadamardRestriction(DrFunction):
    """``G(a) = F(y * a)`` for a fixed vector ``y``."""

    def __init__(self, F: DrFunction, y):
        self.base = F
        self.y = np.asarray(y, dtype=float)
        super().__init__(F.n, F.smoothness * float(np.max(self.y, initial=0.0)) ** 2, F.mode)

    def _value(self, x):
        return self.base.value(self.y * x)

    def _values(self, X):
        return self.base.values(X * self.y)

    def _gradient(self, x):
        return self.y * self.base.gradient(self.y * x)


class PsumRestriction(DrFunction):
    """``G(a) = F(a psum y)`` for a fixed vector ``y``."""

    def __init__(self, F: DrFunction, y):
        self.base = F
        self.y = np.asarray(y, dtype=float)
        super().__init__(F.n, F.smoothness * float(np.max(1.0 - self.y, initial=0.0)) ** 2, F.mode)

    def _map(self, x):
        return 1.0 - (1.0 - x) * (1.0 - self.y)

    def _value(self, x):
        return self.base.value(self._map(x))

    def _values(self, X):
        return self.base.values(1.0 - (1.0 - X) * (1.0 - self.y))

    def _gradient(self, x):
        return (1.0 - self.y) * self.base.gradient(self._map(x))
