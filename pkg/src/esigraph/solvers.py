"""l1- and row-group-l21-regularized least squares with KKT certificates.

Both solvers use the squared-residual convention without a 1/2 factor,
so the scalar soft-threshold level for min |Ax-y|^2 + gamma*|x|_1 is
gamma/2 per unit diagonal.  Every solve returns a SolverReport whose
kkt_residual is the max-norm violation of the subgradient optimality
conditions, recomputed from a fresh gradient (never the incrementally
maintained one).
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np
from numba import njit

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
STANDALONE_MAX_ITER = 50_000


@dataclass
class L1QuadProblem:
    """min_x |A x - y|^2 + gamma * |x|_1 with gamma > 0."""

    A: np.ndarray
    y: np.ndarray
    gamma: float

    def __post_init__(self):
        self.A = np.ascontiguousarray(self.A, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.A.ndim != 2 or self.y.ndim != 1 or self.A.shape[0] != self.y.shape[0]:
            raise ValueError("A must be (m, n) and y length m")


@dataclass
class SolverReport:
    iterations: int
    kkt_residual: float
    objective: float
    converged: bool


# Optional instrumentation: when enabled, every l1 solve appends its
# report here so a test session can audit all certificates at once.
certificate_log: list[SolverReport] = []
_cert_enabled = [False]


def enable_certificate_log() -> None:
    certificate_log.clear()
    _cert_enabled[0] = True


def disable_certificate_log() -> None:
    _cert_enabled[0] = False


@contextlib.contextmanager
def certificate_log_paused():
    """Suppress logging inside deliberately under-converged test solves."""
    prev = _cert_enabled[0]
    _cert_enabled[0] = False
    try:
        yield
    finally:
        _cert_enabled[0] = prev


def _record(report: SolverReport) -> None:
    if _cert_enabled[0]:
        certificate_log.append(report)


_STALL_WINDOW = 10  # sweeps; sparse iterates hand over to refinement
_HARD_STALL_WINDOW = 50  # sweeps; dense iterates restart refinement from zero
_REFRESH_EVERY = 50  # sweeps between full gradient recomputations


@njit(cache=True)
def _kkt_residual(x, g, gamma):
    kkt = 0.0
    for j in range(x.shape[0]):
        if x[j] == 0.0:
            v = 2.0 * abs(g[j]) - gamma
        elif x[j] > 0.0:
            v = abs(2.0 * g[j] + gamma)
        else:
            v = abs(2.0 * g[j] - gamma)
        if v > kkt:
            kkt = v
    return kkt


@njit(cache=True)
def _cd_sweeps(Q, c, x, gamma, tol, budget, g_out):
    """Cyclic coordinate descent sweeps; returns (sweeps, kkt_residual).

    The gradient is maintained incrementally and refreshed periodically;
    convergence is only declared from a freshly recomputed gradient.
    Exits early when the KKT residual stops shrinking (correlated
    columns make CD crawl; the caller then switches to the exact
    active-set phase).
    """
    n = x.shape[0]
    g = np.dot(Q, x) - c
    half = 0.5 * gamma
    kkt = _kkt_residual(x, g, gamma)
    soft_hist = np.full(_STALL_WINDOW, np.inf)
    hard_hist = np.full(_HARD_STALL_WINDOW, np.inf)
    sweeps = 0
    since_refresh = 0
    while sweeps < budget and kkt > tol:
        sweeps += 1
        changed = False
        nnz = 0
        for j in range(n):
            qjj = Q[j, j]
            if qjj <= 0.0:
                continue
            u = qjj * x[j] - g[j]
            if u > half:
                xn = (u - half) / qjj
            elif u < -half:
                xn = (u + half) / qjj
            else:
                xn = 0.0
            d = xn - x[j]
            if d != 0.0:
                changed = True
                x[j] = xn
                for i in range(n):
                    g[i] += Q[j, i] * d
            if x[j] != 0.0:
                nnz += 1
        since_refresh += 1
        if since_refresh >= _REFRESH_EVERY:
            g = np.dot(Q, x) - c
            since_refresh = 0
        kkt = _kkt_residual(x, g, gamma)
        if kkt <= tol and since_refresh > 0:
            g = np.dot(Q, x) - c
            since_refresh = 0
            kkt = _kkt_residual(x, g, gamma)
        if not changed:
            break  # coordinatewise stationary; sweeps cannot move further
        soft_prior = soft_hist[sweeps % _STALL_WINDOW]
        hard_prior = hard_hist[sweeps % _HARD_STALL_WINDOW]
        soft_hist[sweeps % _STALL_WINDOW] = kkt
        hard_hist[sweeps % _HARD_STALL_WINDOW] = kkt
        if kkt > tol:
            # sparse iterates hand over quickly (refinement is cheap for
            # them); dense ones only after a long hard plateau, since a
            # noisy dip in steady linear convergence must not eject CD
            if 4 * nnz <= n and kkt >= 0.7 * soft_prior:
                break
            if kkt >= 0.95 * hard_prior:
                break
    if since_refresh > 0:
        g = np.dot(Q, x) - c
        kkt = _kkt_residual(x, g, gamma)
    g_out[:] = g
    return sweeps, kkt


@njit(cache=True)
def _restricted_newton(Q, c, act, a, theta, half):
    """Solve the sign-restricted quadratic on the active set.

    A relative 1e-12 ridge keeps the reduced system positive definite
    when active columns are (nearly) collinear; the perturbation it
    introduces is far below the certificate tolerance.
    """
    Qa = np.empty((a, a))
    rhs = np.empty(a)
    tr = 0.0
    for p in range(a):
        jp = act[p]
        rhs[p] = c[jp] - half * theta[p]
        tr += Q[jp, jp]
        for q in range(a):
            Qa[p, q] = Q[jp, act[q]]
    eps = 1e-12 * tr / a
    for p in range(a):
        Qa[p, p] += eps
    return np.linalg.solve(Qa, rhs), Qa


@njit(cache=True)
def _restricted_objective(Qa, ca, z, gamma):
    a = z.shape[0]
    val = 0.0
    for p in range(a):
        qz = 0.0
        for q in range(a):
            qz += Qa[p, q] * z[q]
        val += z[p] * qz - 2.0 * ca[p] * z[p] + gamma * abs(z[p])
    return val


@njit(cache=True)
def _feature_sign_refine(Q, c, x, gamma, tol, max_steps, g_out):
    """Active-set refinement: exact restricted solves + zero-crossing search.

    Activates the most violating zero coordinate, solves the quadratic
    restricted to the active signs, and line-searches to the first sign
    flips when the solution leaves its orthant.  Terminates with a
    machine-precision KKT residual on nondegenerate problems.
    """
    n = x.shape[0]
    half = 0.5 * gamma
    act = np.empty(n, np.int64)
    theta = np.empty(n)
    a = 0
    for j in range(n):
        if x[j] != 0.0:
            act[a] = j
            theta[a] = 1.0 if x[j] > 0.0 else -1.0
            a += 1
    steps = 0
    kkt = np.inf
    while steps < max_steps:
        steps += 1
        g = np.dot(Q, x) - c
        kkt = _kkt_residual(x, g, gamma)
        if kkt <= tol:
            g_out[:] = g
            return steps, kkt
        # only activate a new coordinate once the current active set is
        # internally optimal; otherwise first re-optimize over it (this
        # ordering is what guarantees strict descent of every step)
        act_viol = 0.0
        for p in range(a):
            v = abs(2.0 * g[act[p]] + gamma * theta[p])
            if v > act_viol:
                act_viol = v
        if act_viol <= tol:
            worst = -1
            worstv = tol
            for j in range(n):
                if x[j] == 0.0:
                    v = 2.0 * abs(g[j]) - gamma
                    if v > worstv:
                        worstv = v
                        worst = j
            if worst < 0:
                g_out[:] = g
                return steps, kkt  # nothing to activate, nothing to refine
            act[a] = worst
            theta[a] = -1.0 if g[worst] > 0.0 else 1.0
            a += 1
        elif a == 0:
            g_out[:] = g
            return steps, kkt
        progressed = False
        for _ in range(n + 1):
            sol, Qa = _restricted_newton(Q, c, act, a, theta, half)
            ca = np.empty(a)
            xa = np.empty(a)
            for p in range(a):
                ca[p] = c[act[p]]
                xa[p] = x[act[p]]
            consistent = True
            for p in range(a):
                if sol[p] * theta[p] <= 0.0:
                    consistent = False
                    break
            if consistent:
                for p in range(a):
                    x[act[p]] = sol[p]
                progressed = True
                break
            # objective along xa -> sol is quadratic + piecewise-linear;
            # candidates are the first zero crossings and the endpoint
            f_old = _restricted_objective(Qa, ca, xa, gamma)
            best_f = _restricted_objective(Qa, ca, sol, gamma)
            best_t = 1.0
            best_p = -1
            for p in range(a):
                if sol[p] * theta[p] <= 0.0 and xa[p] != sol[p]:
                    t = xa[p] / (xa[p] - sol[p])
                    if 0.0 < t < 1.0:
                        z = xa + t * (sol - xa)
                        z[p] = 0.0
                        f = _restricted_objective(Qa, ca, z, gamma)
                        if f < best_f:
                            best_f = f
                            best_t = t
                            best_p = p
            if best_f >= f_old:
                break  # no descent available; bail out with current x
            z = xa + best_t * (sol - xa)
            if best_p >= 0:
                z[best_p] = 0.0
            keep = 0
            for p in range(a):
                if z[p] == 0.0:
                    x[act[p]] = 0.0
                else:
                    x[act[p]] = z[p]
                    act[keep] = act[p]
                    theta[keep] = 1.0 if z[p] > 0.0 else -1.0
                    keep += 1
            a = keep
            progressed = True
            if a == 0:
                break
        if not progressed:
            break
    g = np.dot(Q, x) - c
    g_out[:] = g
    return steps, _kkt_residual(x, g, gamma)


@njit(cache=True)
def _cd_l1_column(Q, c, x, gamma, tol, max_iter, g_out):
    """Hybrid l1-quadratic solve: CD sweeps, then exact refinement.

    Coordinate descent handles well-conditioned problems (where the
    solution is typically dense) in tens of sweeps; on highly
    correlated columns it stalls, and the sparse solution is instead
    finished by the feature-sign phase to certificate precision.  A
    stalled dense CD iterate is discarded (refinement restarts from
    zero) because its active set is mostly transient noise.
    Returns (iterations, kkt_residual); x is updated in place.
    """
    n = x.shape[0]
    sweeps, kkt = _cd_sweeps(Q, c, x, gamma, tol, max_iter, g_out)
    if kkt <= tol or sweeps >= max_iter:
        return sweeps, kkt
    nnz = 0
    for j in range(n):
        if x[j] != 0.0:
            nnz += 1
    if 4 * nnz > n:
        for j in range(n):
            x[j] = 0.0
    steps, kkt = _feature_sign_refine(Q, c, x, gamma, tol, max_iter - sweeps, g_out)
    return sweeps + steps, kkt


@njit(cache=True)
def _cd_l1_batch(Q, C, X, G, gamma, tol, max_iter, iters, kkts):
    n, m = X.shape
    g = np.empty(n)
    for t in range(m):
        x = X[:, t].copy()
        it, kkt = _cd_l1_column(Q, C[:, t].copy(), x, gamma, tol, max_iter, g)
        X[:, t] = x
        G[:, t] = g
        iters[t] = it
        kkts[t] = kkt


_gram_cache: dict[int, tuple] = {}


def _gram_of(A: np.ndarray) -> np.ndarray:
    """A'A, symmetrized; cached on the identity of A for repeated solves."""
    key = id(A)
    hit = _gram_cache.get(key)
    if hit is not None and hit[0] is A:
        return hit[1]
    Q = A.T @ A
    Q = np.ascontiguousarray((Q + Q.T) * 0.5)  # enforce exact symmetry
    if len(_gram_cache) >= 4:  # alternating block solvers reuse a few matrices
        _gram_cache.clear()
    _gram_cache[key] = (A, Q)
    return Q


def solve_l1_quad_gram(
    Q: np.ndarray,
    Crhs: np.ndarray,
    ynorm2: np.ndarray,
    gamma: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    X0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Gram form of solve_l1_quad_batch.

    Column t solves min x'Qx - 2 Crhs_t'x + ynorm2_t + gamma|x|_1,
    which equals |A x - y_t|^2 + gamma|x|_1 when Q = A'A,
    Crhs_t = A'y_t and ynorm2_t = |y_t|^2.  The objective in the report
    is recovered from the final gradient, so no residual matrix is
    formed.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    Q = np.ascontiguousarray(Q, dtype=float)
    Crhs = np.ascontiguousarray(Crhs, dtype=float)
    n, m = Crhs.shape
    if Q.shape != (n, n):
        raise ValueError("Q and Crhs shapes are inconsistent")
    if X0 is None:
        X = np.zeros((n, m))
    else:
        X = np.array(X0, dtype=float, copy=True)
        if X.shape != (n, m):
            raise ValueError("X0 shape mismatch")
    G = np.empty((n, m))
    iters = np.zeros(m, dtype=np.int64)
    kkts = np.zeros(m)
    _cd_l1_batch(Q, Crhs, X, G, float(gamma), float(tol), int(max_iter), iters, kkts)
    # x'Qx - 2c'x = x'(g - c) for g = Qx - c
    smooth = np.einsum("ij,ij->", X, G - Crhs) + float(np.sum(ynorm2))
    objective = float(smooth + gamma * np.sum(np.abs(X)))
    report = SolverReport(
        iterations=int(iters.max(initial=0)),
        kkt_residual=float(kkts.max(initial=0.0)),
        objective=objective,
        converged=bool(np.all(kkts <= tol)),
    )
    _record(report)
    return X, report


def solve_l1_quad_batch(
    A: np.ndarray,
    Y: np.ndarray,
    gamma: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    X0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Solve min |A x_t - y_t|^2 + gamma|x_t|_1 for every column of Y.

    All columns share A, so the Gram matrix is formed once; X0 warm
    starts each column.  The report aggregates over columns: max
    iterations, max KKT residual, summed objective, converged iff
    every column converged.
    """
    A = np.ascontiguousarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if A.shape[0] != Y.shape[0]:
        raise ValueError("A and Y row counts differ")
    if X0 is not None and np.asarray(X0).ndim == 1:
        X0 = np.asarray(X0)[:, None]
    Q = _gram_of(A)
    Crhs = A.T @ Y
    ynorm2 = np.einsum("ij,ij->j", Y, Y)
    X, report = solve_l1_quad_gram(
        Q, Crhs, ynorm2, gamma, tol=tol, max_iter=max_iter, X0=X0
    )
    return (X[:, 0] if squeeze else X), report


def solve_l1_quad(
    problem: L1QuadProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Single right-hand-side form of solve_l1_quad_batch."""
    return solve_l1_quad_batch(
        problem.A, problem.y, problem.gamma, tol=tol, max_iter=max_iter, X0=x0
    )


def solve_group_l21(
    L: np.ndarray,
    X: np.ndarray,
    mu: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = STANDALONE_MAX_ITER,
    S0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """min_S |X - L S|_F^2 + mu * sum_j |S_(j,:)|_2.

    Proximal gradient with fixed step 1/(2|L|_2^2) and row-wise block
    soft thresholding.  The group KKT residual is the largest row-wise
    violation of the block subgradient conditions.
    """
    if mu <= 0 or tol <= 0:
        raise ValueError("mu and tol must be positive")
    L = np.asarray(L, dtype=float)
    X = np.asarray(X, dtype=float)
    if L.shape[0] != X.shape[0]:
        raise ValueError("L and X row counts differ")
    n_s, n_t = L.shape[1], X.shape[1]
    snorm2 = np.linalg.norm(L, 2) ** 2
    if snorm2 == 0:
        return np.zeros((n_s, n_t)), SolverReport(0, 0.0, float(np.sum(X * X)), True)
    step = 1.0 / (2.0 * snorm2)
    S = np.zeros((n_s, n_t)) if S0 is None else np.array(S0, dtype=float, copy=True)
    kkt = np.inf
    it = 0
    for it in range(max_iter + 1):
        G = 2.0 * (L.T @ (L @ S - X))
        gnorm = np.linalg.norm(G, axis=1)
        snorm = np.linalg.norm(S, axis=1)
        zero = snorm == 0
        viol = np.empty(n_s)
        viol[zero] = np.maximum(0.0, gnorm[zero] - mu)
        nz = ~zero
        if np.any(nz):
            viol[nz] = np.linalg.norm(
                G[nz] + mu * S[nz] / snorm[nz, None], axis=1
            )
        kkt = float(viol.max(initial=0.0))
        if kkt <= tol or it == max_iter:
            break
        V = S - step * G
        vn = np.linalg.norm(V, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(vn > 0, np.maximum(0.0, 1.0 - step * mu / vn), 0.0)
        S = V * scale[:, None]
    resid = X - L @ S
    objective = float(np.sum(resid * resid) + mu * np.linalg.norm(S, axis=1).sum())
    return S, SolverReport(it, kkt, objective, kkt <= tol)
