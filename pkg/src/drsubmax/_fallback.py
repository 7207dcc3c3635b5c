"""Pure-Python kernels.

Operation-for-operation mirror of ``_core.pyx``: same pivot rules, same
summation order, so both backends produce identical floats on the same
input. Keep the two files in lockstep.
"""
import numpy as np

INF = float("inf")
PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9
OPT_TOL = 1e-9
TIE_TOL = 1e-12

OPTIMAL = 0
INFEASIBLE = 1
BREAKDOWN = 2

KIND_QUADRATIC = 0
KIND_TABLE = 1


class _Simplex:
    """Dense bounded-variable primal simplex over {Ax <= b, Wx >= t, 0 <= x <= 1}.

    Columns: n structural, one slack per row, one artificial per cut with a
    positive threshold. The tableau survives between ``maximize`` calls so
    a sequence of objectives over one region warm-starts from the last basis.
    """

    def __init__(self, A, b, W, t, n):
        m = len(b)
        k = len(t)
        rows = m + k
        nart = 0
        for r in range(k):
            if t[r] > 0.0:
                nart += 1
        N = n + rows + nart
        self.n = n
        self.rows = rows
        self.N = N
        self.art0 = n + rows
        self.T = [[0.0] * N for _ in range(rows)]
        self.beta = [0.0] * rows
        self.basis = [0] * rows
        self.up = [INF] * N
        self.at_up = [False] * N
        self.is_basic = [False] * N
        self.pivots = 0
        for j in range(n):
            self.up[j] = 1.0
        for i in range(m):
            row = self.T[i]
            for j in range(n):
                row[j] = A[i][j]
            row[n + i] = 1.0
            self.beta[i] = b[i]
            self.basis[i] = n + i
        a = self.art0
        for r in range(k):
            i = m + r
            row = self.T[i]
            if t[r] > 0.0:
                for j in range(n):
                    row[j] = W[r][j]
                row[n + i] = -1.0
                row[a] = 1.0
                self.beta[i] = t[r]
                self.basis[i] = a
                a += 1
            else:
                for j in range(n):
                    row[j] = -W[r][j]
                row[n + i] = 1.0
                self.beta[i] = -t[r]
                self.basis[i] = n + i
        for i in range(rows):
            self.is_basic[self.basis[i]] = True
        self.max_pivots = 50 * (N + rows) + 100
        self.bland_after = 10 * (n + rows)

    def _optimize(self, cost):
        T = self.T
        beta = self.beta
        basis = self.basis
        up = self.up
        at_up = self.at_up
        is_basic = self.is_basic
        rows = self.rows
        N = self.N
        d = [0.0] * N
        for j in range(N):
            if is_basic[j]:
                continue
            acc = cost[j]
            for i in range(rows):
                acc -= cost[basis[i]] * T[i][j]
            d[j] = acc
        degenerate = 0
        local_pivots = 0
        bland = False
        while True:
            q = -1
            best = 0.0
            for j in range(N):
                if is_basic[j] or up[j] <= 0.0:
                    continue
                dj = d[j]
                if at_up[j]:
                    if dj < -OPT_TOL:
                        if bland:
                            q = j
                            break
                        if -dj > best:
                            best = -dj
                            q = j
                else:
                    if dj > OPT_TOL:
                        if bland:
                            q = j
                            break
                        if dj > best:
                            best = dj
                            q = j
            if q < 0:
                return OPTIMAL
            # the pivot budget applies per objective; warm starts share the tableau only
            if local_pivots >= self.max_pivots:
                return BREAKDOWN
            local_pivots += 1
            self.pivots += 1
            s = -1.0 if at_up[q] else 1.0
            theta = up[q]
            leave = -1
            for i in range(rows):
                a = s * T[i][q]
                if a > PIVOT_TOL:
                    ratio = beta[i] / a
                elif a < -PIVOT_TOL and up[basis[i]] < INF:
                    ratio = (up[basis[i]] - beta[i]) / (-a)
                else:
                    continue
                if ratio < 0.0:
                    ratio = 0.0
                if ratio < theta - TIE_TOL:
                    theta = ratio
                    leave = i
                elif leave >= 0 and ratio <= theta + TIE_TOL and basis[i] < basis[leave]:
                    theta = ratio
                    leave = i
            if theta == INF:
                return BREAKDOWN
            if theta <= TIE_TOL:
                degenerate += 1
                if degenerate > self.bland_after:
                    bland = True
            for i in range(rows):
                beta[i] -= s * T[i][q] * theta
            if leave < 0:
                at_up[q] = not at_up[q]
                continue
            r = leave
            lv = basis[r]
            alpha_r = s * T[r][q]
            entering_value = (up[q] if at_up[q] else 0.0) + s * theta
            at_up[lv] = alpha_r < 0.0
            is_basic[lv] = False
            at_up[q] = False
            is_basic[q] = True
            basis[r] = q
            beta[r] = entering_value
            prow = T[r]
            piv = prow[q]
            for j in range(N):
                prow[j] = prow[j] / piv
            prow[q] = 1.0
            for i in range(rows):
                if i == r:
                    continue
                row = T[i]
                f = row[q]
                if f != 0.0:
                    for j in range(N):
                        row[j] -= f * prow[j]
                    row[q] = 0.0
            f = d[q]
            for j in range(N):
                d[j] -= f * prow[j]
            d[q] = 0.0

    def phase1(self):
        cost = [0.0] * self.N
        for j in range(self.art0, self.N):
            cost[j] = -1.0
        status = self._optimize(cost)
        if status != OPTIMAL:
            return status
        infeas = 0.0
        for i in range(self.rows):
            if self.basis[i] >= self.art0:
                infeas += self.beta[i]
        if infeas > FEAS_TOL:
            return INFEASIBLE
        for j in range(self.art0, self.N):
            self.up[j] = 0.0
        return OPTIMAL

    def maximize(self, c):
        cost = [0.0] * self.N
        for j in range(self.n):
            cost[j] = c[j]
        return self._optimize(cost)

    def point(self):
        n = self.n
        x = [0.0] * n
        for j in range(n):
            if self.at_up[j]:
                x[j] = 1.0
        for i in range(self.rows):
            j = self.basis[i]
            if j < n:
                v = self.beta[i]
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                x[j] = v
        return x


def _rows(M):
    return [list(r) for r in np.asarray(M, dtype=float).tolist()]


def lp_solve(A, b, W, t, c):
    """Maximize ``c.x`` over the region; returns ``(status, x, pivots)``."""
    n = len(c)
    lp = _Simplex(_rows(A), list(map(float, b)), _rows(W), list(map(float, t)), n)
    status = lp.phase1()
    if status == OPTIMAL:
        status = lp.maximize([float(v) for v in c])
    x = np.array(lp.point()) if status == OPTIMAL else np.zeros(n)
    return status, x, lp.pivots


def _table_contract(table, n, x, u):
    # u < 0: value; otherwise partial derivative along coordinate u.
    arr = list(table)
    size = len(arr)
    for v in range(n - 1, -1, -1):
        half = size >> 1
        if v == u:
            for k in range(half):
                arr[k] = arr[k + half] - arr[k]
        else:
            xv = x[v]
            cv = 1.0 - xv
            for k in range(half):
                arr[k] = cv * arr[k] + xv * arr[k + half]
        size = half
    return arr[0]


def _table_partials(table, n, x):
    # Levels from contracting coordinates n-1 .. u+1 are shared by the partials.
    level = list(table)
    g = [0.0] * n
    for u in range(n - 1, -1, -1):
        half = len(level) >> 1
        arr = [level[k + half] - level[k] for k in range(half)]
        size = half
        for v in range(u - 1, -1, -1):
            xv = x[v]
            cv = 1.0 - xv
            size >>= 1
            arr = [cv * arr[k] + xv * arr[k + size] for k in range(size)]
        g[u] = arr[0]
        xv = x[u]
        cv = 1.0 - xv
        level = [cv * level[k] + xv * level[k + half] for k in range(half)]
    return g


def table_value(table, n, x):
    return _table_contract(list(map(float, table)), n, list(map(float, x)), -1)


def table_gradient(table, n, x):
    tab = list(map(float, table))
    xs = list(map(float, x))
    return np.array(_table_partials(tab, n, xs))


def _gradient(kind, H, h, table, n, x, g):
    if kind == KIND_QUADRATIC:
        for j in range(n):
            acc = h[j]
            Hj = H[j]
            for k in range(n):
                acc += Hj[k] * x[k]
            g[j] = acc
    else:
        g[:] = _table_partials(table, n, x)


def fw_run(kind, H, h, table, A, b, W, t, x0, delta, iters):
    """Frank-Wolfe iterations ``x <- x + delta (z - x)`` with LP directions.

    Returns ``(status, trajectory, gaps, evaluated, gradient_calls)``. The
    trajectory has ``iters + 1`` rows. Once an iterate is its own LP
    direction the remaining iterations are exact repeats and are filled in
    without recomputation. ``x0=None`` starts from the basic point found by
    the feasibility phase.
    """
    n = np.asarray(A).shape[1] if x0 is None else len(x0)
    Hl = _rows(H) if kind == KIND_QUADRATIC else None
    hl = list(map(float, h)) if kind == KIND_QUADRATIC else None
    tab = list(map(float, table)) if kind == KIND_TABLE else None
    lp = _Simplex(_rows(A), list(map(float, b)), _rows(W), list(map(float, t)), n)
    status = lp.phase1()
    traj = np.zeros((iters + 1, n))
    gaps = np.zeros(iters)
    if status != OPTIMAL:
        return status, traj, gaps, 0, 0
    x = lp.point() if x0 is None else [float(v) for v in x0]
    traj[0] = x
    g = [0.0] * n
    evaluated = 0
    grads = 0
    for it in range(iters):
        _gradient(kind, Hl, hl, tab, n, x, g)
        grads += 1
        status = lp.maximize(g)
        if status != OPTIMAL:
            return status, traj, gaps, evaluated, grads
        z = lp.point()
        gap = 0.0
        for j in range(n):
            gap += (z[j] - x[j]) * g[j]
        gaps[it] = gap
        evaluated += 1
        if z == x:
            gaps[it:] = gap
            traj[it + 1:] = x
            break
        for j in range(n):
            x[j] = x[j] + delta * (z[j] - x[j])
        traj[it + 1] = x
    return OPTIMAL, traj, gaps, evaluated, grads


class LinearRegion:
    """A region whose LP basis persists between objectives (warm start)."""

    def __init__(self, A, b, W, t, n):
        self._lp = _Simplex(_rows(A), list(map(float, b)), _rows(W), list(map(float, t)), n)
        self.status = self._lp.phase1()

    @property
    def pivots(self):
        return self._lp.pivots

    def point(self):
        return np.array(self._lp.point())

    def maximize(self, c):
        if self.status != OPTIMAL:
            return self.status, np.zeros(self._lp.n)
        status = self._lp.maximize([float(v) for v in c])
        return status, np.array(self._lp.point())
