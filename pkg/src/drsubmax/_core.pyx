# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: bounded-variable simplex, Frank-Wolfe loop, table contraction.

Mirrors ``_fallback.py`` operation for operation; keep the two in lockstep.
"""
import numpy as np

from libc.stdlib cimport malloc, calloc, free
from libc.math cimport INFINITY

cdef double PIVOT_TOL = 1e-11
cdef double FEAS_TOL = 1e-9
cdef double OPT_TOL = 1e-9
cdef double TIE_TOL = 1e-12

cdef enum:
    OPTIMAL = 0
    INFEASIBLE = 1
    BREAKDOWN = 2

KIND_QUADRATIC = 0
KIND_TABLE = 1


cdef struct Simplex:
    int n
    int rows
    int N
    int art0
    double* T
    double* beta
    int* basis
    double* up
    char* at_up
    char* is_basic
    double* d
    double* cost
    long pivots
    long max_pivots
    long bland_after


cdef int lp_init(Simplex* lp, const double[:, ::1] A, const double[::1] b,
                 const double[:, ::1] W, const double[::1] t, int n) noexcept nogil:
    cdef int m = b.shape[0]
    cdef int k = t.shape[0]
    cdef int rows = m + k
    cdef int nart = 0
    cdef int r, i, j, a, N
    for r in range(k):
        if t[r] > 0.0:
            nart += 1
    N = n + rows + nart
    lp.n = n
    lp.rows = rows
    lp.N = N
    lp.art0 = n + rows
    lp.T = <double*> calloc(rows * N + 1, sizeof(double))
    lp.beta = <double*> calloc(rows + 1, sizeof(double))
    lp.basis = <int*> calloc(rows + 1, sizeof(int))
    lp.up = <double*> malloc((N + 1) * sizeof(double))
    lp.at_up = <char*> calloc(N + 1, sizeof(char))
    lp.is_basic = <char*> calloc(N + 1, sizeof(char))
    lp.d = <double*> calloc(N + 1, sizeof(double))
    lp.cost = <double*> calloc(N + 1, sizeof(double))
    if (lp.T == NULL or lp.beta == NULL or lp.basis == NULL or lp.up == NULL
            or lp.at_up == NULL or lp.is_basic == NULL or lp.d == NULL or lp.cost == NULL):
        return -1
    lp.pivots = 0
    for j in range(N):
        lp.up[j] = INFINITY
    for j in range(n):
        lp.up[j] = 1.0
    for i in range(m):
        for j in range(n):
            lp.T[i * N + j] = A[i, j]
        lp.T[i * N + n + i] = 1.0
        lp.beta[i] = b[i]
        lp.basis[i] = n + i
    a = lp.art0
    for r in range(k):
        i = m + r
        if t[r] > 0.0:
            for j in range(n):
                lp.T[i * N + j] = W[r, j]
            lp.T[i * N + n + i] = -1.0
            lp.T[i * N + a] = 1.0
            lp.beta[i] = t[r]
            lp.basis[i] = a
            a += 1
        else:
            for j in range(n):
                lp.T[i * N + j] = -W[r, j]
            lp.T[i * N + n + i] = 1.0
            lp.beta[i] = -t[r]
            lp.basis[i] = n + i
    for i in range(rows):
        lp.is_basic[lp.basis[i]] = 1
    lp.max_pivots = 50 * (N + rows) + 100
    lp.bland_after = 10 * (n + rows)
    return 0


cdef void lp_free(Simplex* lp) noexcept nogil:
    free(lp.T)
    free(lp.beta)
    free(lp.basis)
    free(lp.up)
    free(lp.at_up)
    free(lp.is_basic)
    free(lp.d)
    free(lp.cost)


cdef int lp_optimize(Simplex* lp) noexcept nogil:
    cdef double* T = lp.T
    cdef double* beta = lp.beta
    cdef int* basis = lp.basis
    cdef double* up = lp.up
    cdef char* at_up = lp.at_up
    cdef char* is_basic = lp.is_basic
    cdef double* d = lp.d
    cdef double* cost = lp.cost
    cdef int rows = lp.rows
    cdef int N = lp.N
    cdef int i, j, q, leave, r, lv
    cdef double acc, best, dj, s, theta, a, ratio, alpha_r, entering_value, piv, f
    cdef long degenerate = 0
    cdef long local_pivots = 0
    cdef bint bland = False
    cdef double* prow
    cdef double* row
    for j in range(N):
        d[j] = 0.0
        if is_basic[j]:
            continue
        acc = cost[j]
        for i in range(rows):
            acc -= cost[basis[i]] * T[i * N + j]
        d[j] = acc
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
        if local_pivots >= lp.max_pivots:
            return BREAKDOWN
        local_pivots += 1
        lp.pivots += 1
        s = -1.0 if at_up[q] else 1.0
        theta = up[q]
        leave = -1
        for i in range(rows):
            a = s * T[i * N + q]
            if a > PIVOT_TOL:
                ratio = beta[i] / a
            elif a < -PIVOT_TOL and up[basis[i]] < INFINITY:
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
        if theta == INFINITY:
            return BREAKDOWN
        if theta <= TIE_TOL:
            degenerate += 1
            if degenerate > lp.bland_after:
                bland = True
        for i in range(rows):
            beta[i] -= s * T[i * N + q] * theta
        if leave < 0:
            at_up[q] = not at_up[q]
            continue
        r = leave
        lv = basis[r]
        alpha_r = s * T[r * N + q]
        entering_value = (up[q] if at_up[q] else 0.0) + s * theta
        at_up[lv] = alpha_r < 0.0
        is_basic[lv] = 0
        at_up[q] = 0
        is_basic[q] = 1
        basis[r] = q
        beta[r] = entering_value
        prow = T + r * N
        piv = prow[q]
        for j in range(N):
            prow[j] = prow[j] / piv
        prow[q] = 1.0
        for i in range(rows):
            if i == r:
                continue
            row = T + i * N
            f = row[q]
            if f != 0.0:
                for j in range(N):
                    row[j] -= f * prow[j]
                row[q] = 0.0
        f = d[q]
        for j in range(N):
            d[j] -= f * prow[j]
        d[q] = 0.0


cdef int lp_phase1(Simplex* lp) noexcept nogil:
    cdef int j, i, status
    cdef double infeas = 0.0
    for j in range(lp.N):
        lp.cost[j] = -1.0 if j >= lp.art0 else 0.0
    status = lp_optimize(lp)
    if status != OPTIMAL:
        return status
    for i in range(lp.rows):
        if lp.basis[i] >= lp.art0:
            infeas += lp.beta[i]
    if infeas > FEAS_TOL:
        return INFEASIBLE
    for j in range(lp.art0, lp.N):
        lp.up[j] = 0.0
    return OPTIMAL


cdef int lp_maximize(Simplex* lp, const double* c) noexcept nogil:
    cdef int j
    for j in range(lp.N):
        lp.cost[j] = c[j] if j < lp.n else 0.0
    return lp_optimize(lp)


cdef void lp_point(Simplex* lp, double* x) noexcept nogil:
    cdef int i, j
    cdef double v
    for j in range(lp.n):
        x[j] = 1.0 if lp.at_up[j] else 0.0
    for i in range(lp.rows):
        j = lp.basis[i]
        if j < lp.n:
            v = lp.beta[i]
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            x[j] = v


def _mat(M, int cols):
    arr = np.ascontiguousarray(M, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, cols))
    return arr.reshape(-1, cols)


def lp_solve(A, b, W, t, c):
    """Maximize ``c.x`` over the region; returns ``(status, x, pivots)``."""
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef int n = cv.shape[0]
    cdef double[:, ::1] Av = _mat(A, n)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    cdef double[:, ::1] Wv = _mat(W, n)
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64).reshape(-1)
    x = np.zeros(n)
    cdef double[::1] xv = x
    cdef Simplex lp
    cdef int status
    cdef long pivots
    with nogil:
        if lp_init(&lp, Av, bv, Wv, tv, n) != 0:
            status = -1
        else:
            status = lp_phase1(&lp)
            if status == OPTIMAL:
                status = lp_maximize(&lp, &cv[0])
            if status == OPTIMAL:
                lp_point(&lp, &xv[0])
        pivots = lp.pivots
        lp_free(&lp)
    if status < 0:
        raise MemoryError()
    return status, x, pivots


cdef double table_contract(const double* table, double* arr, int n,
                           const double* x, int u) noexcept nogil:
    cdef long size = 1 << n
    cdef long half, k
    cdef int v
    cdef double xv, cv
    for k in range(size):
        arr[k] = table[k]
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


cdef void table_partials(const double* table, double* work, int n,
                         const double* x, double* g) noexcept nogil:
    # Contracting coordinates n-1 .. u+1 is shared by every partial below u,
    # so those levels are kept; each partial then costs O(2^u).
    cdef long size = 1 << n
    cdef long half, k, off, prev
    cdef int u, v
    cdef double xv, cv
    cdef double* scratch = work + 2 * size
    for k in range(size):
        work[k] = table[k]
    off = 0
    for u in range(n - 1, -1, -1):
        half = size >> 1
        # level holding coordinates 0..u lives at work[off : off + size]
        for k in range(half):
            scratch[k] = work[off + k + half] - work[off + k]
        prev = half
        for v in range(u - 1, -1, -1):
            xv = x[v]
            cv = 1.0 - xv
            prev >>= 1
            for k in range(prev):
                scratch[k] = cv * scratch[k] + xv * scratch[k + prev]
        g[u] = scratch[0]
        if u > 0:
            xv = x[u]
            cv = 1.0 - xv
            for k in range(half):
                work[off + size + k] = cv * work[off + k] + xv * work[off + k + half]
            off += size
        size = half


def table_value(table, int n, x):
    cdef double[::1] tv = np.ascontiguousarray(table, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double* arr = <double*> malloc(((1 << n) + 1) * sizeof(double))
    cdef double val
    if arr == NULL:
        raise MemoryError()
    with nogil:
        val = table_contract(&tv[0], arr, n, &xv[0], -1)
    free(arr)
    return val


def table_gradient(table, int n, x):
    cdef double[::1] tv = np.ascontiguousarray(table, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    g = np.zeros(n)
    cdef double[::1] gv = g
    cdef double* arr = <double*> malloc((3 * (1 << n) + 1) * sizeof(double))
    if arr == NULL:
        raise MemoryError()
    with nogil:
        table_partials(&tv[0], arr, n, &xv[0], &gv[0])
    free(arr)
    return g


cdef void gradient(int kind, const double[:, ::1] H, const double[::1] h,
                   const double* table, double* work, int n,
                   const double* x, double* g) noexcept nogil:
    cdef int j, k, u
    cdef double acc
    if kind == 0:
        for j in range(n):
            acc = h[j]
            for k in range(n):
                acc += H[j, k] * x[k]
            g[j] = acc
    else:
        table_partials(table, work, n, x, g)


def fw_run(int kind, H, h, table, A, b, W, t, x0, double delta, long iters):
    """Frank-Wolfe iterations ``x <- x + delta (z - x)`` with LP directions.

    Returns ``(status, trajectory, gaps, evaluated, gradient_calls)``.
    ``x0=None`` starts from the basic point found by the feasibility phase.
    """
    cdef bint from_lp = x0 is None
    cdef int n = np.asarray(A).shape[1] if from_lp else len(x0)
    cdef double[::1] x0v = np.zeros(n) if from_lp else np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[:, ::1] Hv = _mat(H, n) if kind == 0 else np.zeros((1, 1))
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64) if kind == 0 else np.zeros(1)
    cdef double[::1] tabv = np.ascontiguousarray(table, dtype=np.float64) if kind == 1 else np.zeros(1)
    cdef double[:, ::1] Av = _mat(A, n)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    cdef double[:, ::1] Wv = _mat(W, n)
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64).reshape(-1)
    traj = np.zeros((iters + 1, n))
    gaps = np.zeros(iters)
    cdef double[:, ::1] trv = traj
    cdef double[::1] gpv = gaps
    cdef Simplex lp
    cdef int status, j
    cdef long it, rest
    cdef long evaluated = 0
    cdef long grads = 0
    cdef double gap
    cdef bint fixed
    cdef double* x = <double*> malloc((n + 1) * sizeof(double))
    cdef double* z = <double*> malloc((n + 1) * sizeof(double))
    cdef double* g = <double*> malloc((n + 1) * sizeof(double))
    cdef double* work = <double*> malloc((3 * (1 << n) + 1 if kind == 1 else 1) * sizeof(double))
    if x == NULL or z == NULL or g == NULL or work == NULL:
        free(x); free(z); free(g); free(work)
        raise MemoryError()
    with nogil:
        if lp_init(&lp, Av, bv, Wv, tv, n) != 0:
            status = -1
        else:
            status = lp_phase1(&lp)
        if status == OPTIMAL:
            if from_lp:
                lp_point(&lp, x)
            else:
                for j in range(n):
                    x[j] = x0v[j]
            for j in range(n):
                trv[0, j] = x[j]
            for it in range(iters):
                gradient(kind, Hv, hv, &tabv[0], work, n, x, g)
                grads += 1
                status = lp_maximize(&lp, g)
                if status != OPTIMAL:
                    break
                lp_point(&lp, z)
                gap = 0.0
                fixed = True
                for j in range(n):
                    gap += (z[j] - x[j]) * g[j]
                    if z[j] != x[j]:
                        fixed = False
                gpv[it] = gap
                evaluated += 1
                if fixed:
                    for rest in range(it, iters):
                        gpv[rest] = gap
                        for j in range(n):
                            trv[rest + 1, j] = x[j]
                    break
                for j in range(n):
                    x[j] = x[j] + delta * (z[j] - x[j])
                    trv[it + 1, j] = x[j]
        lp_free(&lp)
    free(x); free(z); free(g); free(work)
    if status < 0:
        raise MemoryError()
    return status, traj, gaps, evaluated, grads


cdef class LinearRegion:
    """A region whose LP basis persists between objectives (warm start)."""

    cdef Simplex lp
    cdef bint ready
    cdef public int status

    def __cinit__(self, A, b, W, t, int n):
        self.ready = False
        cdef double[:, ::1] Av = _mat(A, n)
        cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
        cdef double[:, ::1] Wv = _mat(W, n)
        cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64).reshape(-1)
        if lp_init(&self.lp, Av, bv, Wv, tv, n) != 0:
            lp_free(&self.lp)
            raise MemoryError()
        self.ready = True
        self.status = lp_phase1(&self.lp)

    def __dealloc__(self):
        if self.ready:
            lp_free(&self.lp)

    @property
    def pivots(self):
        return self.lp.pivots

    def point(self):
        x = np.zeros(self.lp.n)
        cdef double[::1] xv = x
        if self.lp.n:
            lp_point(&self.lp, &xv[0])
        return x

    def maximize(self, c):
        cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
        cdef int status
        if self.status != OPTIMAL:
            return self.status, np.zeros(self.lp.n)
        status = lp_maximize(&self.lp, &cv[0])
        return status, self.point()
