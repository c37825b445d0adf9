"""Landmark/spanning-tree source model and its alternating solver.

The estimate is the quadruple (S, C, G, R): the source time courses S,
a set of K landmark columns C acting as denoised micro-states, a
spanning tree G over the landmarks expressing which micro-states are
neighbors, and soft assignments R of each time point to the landmarks.
fit() minimizes

    |X - L S|_F^2
      + (beta/2) * sum_{k,k'} g_{k,k'} |c_k - c_k'|^2
      + lambda * sum_{i,k} [ r_ik |s_i - c_k|^2 + alpha * r_ik log r_ik ]
      + gamma1 * |S|_1 + gamma2 * |C|_1      subject to G a tree, R row-stochastic

by cycling exact/certified block updates: an l1-regularized quadratic
in S, another in C, a minimum spanning tree in G, and a closed form in
R.  Each block update starts from the previous iterate, so the
objective trace is non-increasing by construction.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numba import njit

from .forward import LeadField, load_matrix, save_matrix
from .mesh import SpatialBasis, apply_basis
from .solvers import DEFAULT_MAX_ITER, DEFAULT_TOL, solve_l1_quad_batch, solve_l1_quad_gram

ASSIGNMENT_FLOOR = 1e-300


@dataclass
class Hyperparams:
    """Weights and solver settings for the landmark/tree model.

    alpha equals twice the squared kernel bandwidth of the underlying
    density estimate; K is the landmark count and must not exceed the
    number of time points.
    """

    lam: float = 3.0
    beta: float = 3.0
    alpha: float = 0.01
    gamma1: float = 0.01
    gamma2: float = 0.01
    K: int = 20
    max_outer_iter: int = 100
    outer_tol: float = 1e-6
    inner_tol: float = DEFAULT_TOL
    inner_max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0

    def __post_init__(self):
        for name in ("lam", "beta", "alpha", "gamma1", "gamma2", "outer_tol", "inner_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.max_outer_iter < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class TreeGraph:
    """Spanning tree over K landmark vertices: K-1 edges, connected, acyclic."""

    n_vertices: int
    edges: np.ndarray  # (K-1, 2), each row a < b

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        k = self.n_vertices
        if k < 1:
            raise ValueError("tree needs at least one vertex")
        if self.edges.shape[0] != max(0, k - 1):
            raise ValueError(f"a tree on {k} vertices must have {k - 1} edges")
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= k:
                raise ValueError("edge references an invalid vertex")
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise ValueError("tree contains a self-loop")
            parent = list(range(k))

            def find(a):
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            for a, b in self.edges:
                ra, rb = find(int(a)), find(int(b))
                if ra == rb:
                    raise ValueError("edges contain a cycle")
                parent[ra] = rb

    def adjacency(self) -> np.ndarray:
        G = np.zeros((self.n_vertices, self.n_vertices))
        for a, b in self.edges:
            G[a, b] = G[b, a] = 1.0
        return G

    def laplacian(self) -> np.ndarray:
        G = self.adjacency()
        return np.diag(G.sum(axis=1)) - G


@dataclass
class ModelState:
    """Output of fit(): the estimate plus the recorded objective trace."""

    S: np.ndarray
    C: np.ndarray
    G: TreeGraph
    R: np.ndarray
    objective_trace: list[float]
    converged: bool = False
    n_iter: int = 0
    max_inner_kkt: float = 0.0
    solver_warnings: list[str] = field(default_factory=list)
    composed_with_basis: bool | None = None


def _sqdist_columns(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared distances between columns of A and columns of B."""
    aa = np.einsum("ij,ij->j", A, A)
    bb = np.einsum("ij,ij->j", B, B)
    return np.maximum(aa[:, None] + bb[None, :] - 2.0 * (A.T @ B), 0.0)


def validate_assignment(R: np.ndarray, atol: float = 1e-9) -> None:
    R = np.asarray(R)
    if np.any(R <= 0):
        raise ValueError("assignment entries must be strictly positive")
    if np.any(np.abs(R.sum(axis=1) - 1.0) > atol):
        raise ValueError("assignment rows must sum to 1")


def update_assignments(S: np.ndarray, C: np.ndarray, alpha: float) -> np.ndarray:
    """Row-stochastic soft assignments r_ik = softmax_k(-|s_i - c_k|^2 / alpha).

    Evaluated with a per-row max shift; underflowed entries are floored
    at a tiny positive value before renormalization so downstream
    weighted factorizations stay positive definite.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    d2 = _sqdist_columns(S, C)
    w = np.exp(-(d2 - d2.min(axis=1, keepdims=True)) / alpha)
    w = np.maximum(w, ASSIGNMENT_FLOOR)
    return w / w.sum(axis=1, keepdims=True)


def kde_objective(S: np.ndarray, C: np.ndarray, alpha: float) -> float:
    """-alpha * sum_i log sum_k exp(-|s_i - c_k|^2 / alpha), stabilized."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    d2 = _sqdist_columns(S, C)
    m = d2.min(axis=1)
    lse = np.log(np.exp(-(d2 - m[:, None]) / alpha).sum(axis=1))
    return float(np.sum(m - alpha * lse))


def assignment_energy(S: np.ndarray, C: np.ndarray, R: np.ndarray, alpha: float) -> float:
    """sum_{i,k} [ r_ik |s_i - c_k|^2 + alpha r_ik log r_ik ]."""
    d2 = _sqdist_columns(S, C)
    return float(np.sum(R * d2) + alpha * np.sum(R * np.log(R)))


def objective_value(state: ModelState, X: np.ndarray, L, hp: Hyperparams) -> float:
    """Full objective h at the given state."""
    Lm = L.matrix if isinstance(L, LeadField) else np.asarray(L, dtype=float)
    return _objective(state.S, state.C, state.G, state.R, X, Lm, hp)


def _objective(S, C, G: TreeGraph, R, X, L, hp: Hyperparams) -> float:
    if S.shape != (L.shape[1], X.shape[1]) or C.shape[0] != S.shape[0]:
        raise ValueError("state dimensions inconsistent with X and L")
    validate_assignment(R)
    resid = X - L @ S
    value = float(np.sum(resid * resid))
    if G.edges.size:
        diff = C[:, G.edges[:, 0]] - C[:, G.edges[:, 1]]
        value += hp.beta * float(np.sum(diff * diff))  # (beta/2) * both orderings
    value += hp.lam * assignment_energy(S, C, R, hp.alpha)
    value += hp.gamma1 * float(np.abs(S).sum()) + hp.gamma2 * float(np.abs(C).sum())
    return value


class SourceFactors:
    """Per-(L, lambda) factorizations reused across outer iterations.

    U is the upper Cholesky factor of Q = L'L + lambda I.  When L is
    wide, the explicit inverse of the small-side matrix lambda I + L L'
    additionally enables Woodbury solves with Q^-1 at O(N_c N_s) cost
    per column (used only to produce warm starts, so the mild loss of
    accuracy from the explicit inverse is immaterial).
    """

    def __init__(self, L: np.ndarray, lam: float):
        self.L = np.ascontiguousarray(L, dtype=float)
        self.LT = np.ascontiguousarray(self.L.T)
        self.lam = float(lam)
        n_s = L.shape[1]
        self.Q = self.L.T @ self.L + lam * np.eye(n_s)
        self.Q = np.ascontiguousarray((self.Q + self.Q.T) * 0.5)
        self.U = np.linalg.cholesky(self.Q).T
        self.wide = L.shape[0] < n_s
        if self.wide:
            self.small_inv = np.ascontiguousarray(
                np.linalg.inv(lam * np.eye(L.shape[0]) + self.L @ self.L.T)
            )
        else:
            self.small_inv = np.zeros((0, 0))
        # lazily filled columns of Q^-1, shared by all polish calls
        self._qinv_cols = np.zeros((n_s, n_s))
        self._qinv_have = np.zeros(n_s, dtype=np.bool_)

    def gram_solve(self, V: np.ndarray) -> np.ndarray:
        """Q^-1 V, columnwise (Woodbury when L is wide)."""
        if self.wide:
            return (V - self.LT @ (self.small_inv @ (self.L @ V))) / self.lam
        Z = scipy.linalg.solve_triangular(self.U, V, trans="T", lower=False, check_finite=False)
        return scipy.linalg.solve_triangular(self.U, Z, lower=False, check_finite=False)


@njit(cache=True)
def _qinv_column(L, LT, Minv, lam, j, qinv_cols, qinv_have):
    if not qinv_have[j]:
        w = Minv @ np.ascontiguousarray(L[:, j])
        col = -(LT @ w) / lam
        col[j] += 1.0 / lam
        qinv_cols[:, j] = col
        qinv_have[j] = True
    return qinv_cols[:, j]


@njit(cache=True)
def _pinned_newton_batch(L, LT, Minv, lam, Q, B, X, gamma, max_passes,
                         qinv_cols, qinv_have):
    """Batched active-set Newton warm start for the l1-quadratic batch.

    Per column, coordinates are either pinned to zero or active with a
    frozen sign; the smooth system restricted to that pattern is solved
    exactly (Woodbury full solve plus a small pinned-block correction,
    or a direct solve on the free set when that side is smaller).
    Signs refresh from the solution, coordinates that keep flipping get
    pinned, and pinned coordinates whose gradient violates the
    threshold are released.  Columns whose pattern stabilizes satisfy
    the optimality conditions to solve precision, so the certified
    solver typically confirms them in a single sweep.
    """
    n, T = X.shape
    half = 0.5 * gamma
    for t in range(T):
        x = X[:, t].copy()
        b = B[:, t].copy()
        theta = np.sign(x)
        pinned = theta == 0.0
        flips = np.zeros(n, np.int8)
        for _ in range(max_passes):
            v = b - half * theta  # theta is 0 on pinned coordinates
            n_pin = 0
            for j in range(n):
                if pinned[j]:
                    n_pin += 1
            n_free = n - n_pin
            if n_pin <= n_free:
                w = Minv @ (L @ v)
                x = (v - LT @ w) / lam
                if n_pin > 0:
                    Z = np.empty(n_pin, np.int64)
                    p = 0
                    for j in range(n):
                        if pinned[j]:
                            Z[p] = j
                            p += 1
                    Wzz = np.empty((n_pin, n_pin))
                    for q in range(n_pin):
                        col = _qinv_column(L, LT, Minv, lam, Z[q], qinv_cols, qinv_have)
                        for pp in range(n_pin):
                            Wzz[pp, q] = col[Z[pp]]
                    mu = np.linalg.solve(Wzz, x[Z].copy())
                    for q in range(n_pin):
                        col = qinv_cols[:, Z[q]]
                        m = mu[q]
                        for i in range(n):
                            x[i] -= col[i] * m
                    for q in range(n_pin):
                        x[Z[q]] = 0.0
            else:
                xn = np.zeros(n)
                if n_free > 0:
                    F = np.empty(n_free, np.int64)
                    p = 0
                    for j in range(n):
                        if not pinned[j]:
                            F[p] = j
                            p += 1
                    Qff = np.empty((n_free, n_free))
                    vf = np.empty(n_free)
                    for pp in range(n_free):
                        vf[pp] = v[F[pp]]
                        for q in range(n_free):
                            Qff[pp, q] = Q[F[pp], F[q]]
                    sol = np.linalg.solve(Qff, vf)
                    for pp in range(n_free):
                        xn[F[pp]] = sol[pp]
                x = xn
            g = lam * x + LT @ (L @ x) - b
            changed = False
            for j in range(n):
                if pinned[j]:
                    if 2.0 * abs(g[j]) > gamma:
                        pinned[j] = False
                        theta[j] = -1.0 if g[j] > 0.0 else 1.0
                        flips[j] = 0
                        changed = True
                else:
                    s = 1.0 if x[j] > 0.0 else (-1.0 if x[j] < 0.0 else 0.0)
                    if s != theta[j]:
                        flips[j] += 1
                        theta[j] = s
                        changed = True
                    if flips[j] >= 3:
                        pinned[j] = True
                        theta[j] = 0.0
                        flips[j] = 0
                        changed = True
            if not changed:
                break
        for j in range(n):
            if pinned[j]:
                x[j] = 0.0
        X[:, t] = x


def _active_set_polish(factors: SourceFactors, B: np.ndarray, S_prev: np.ndarray,
                       gamma: float, max_passes: int = 24) -> np.ndarray:
    """Exact-pattern warm starts for update_sources; see _pinned_newton_batch."""
    if not factors.wide:
        return S_prev
    S = np.array(S_prev, dtype=float, copy=True)
    _pinned_newton_batch(
        factors.L, factors.LT, factors.small_inv, factors.lam, factors.Q,
        np.ascontiguousarray(B), S, float(gamma), int(max_passes),
        factors._qinv_cols, factors._qinv_have,
    )
    return S


def update_sources(X, L, C, R, hp: Hyperparams, S0=None, factors: SourceFactors | None = None):
    """Block minimization in S via N_t certified l1-quadratic solves.

    Factors L'L + lambda I = U'U once; column i of the transformed
    target is U^-T (L' x_i + lambda * sum_k r_ik c_k).  The subproblem
    is strictly convex, so the returned block minimum does not depend
    on the warm start; S0 only accelerates it.
    """
    if factors is None or factors.L is not L or factors.lam != hp.lam:
        factors = SourceFactors(np.ascontiguousarray(L, dtype=float), hp.lam)
    B = L.T @ X + hp.lam * (C @ R.T)
    warm = S0
    if S0 is not None:
        warm = _active_set_polish(factors, B, S0, hp.gamma1)
    # the transformed target U^-T b never needs materializing: the solver
    # works on the Gram form, and |U^-T b|^2 = b' Q^-1 b
    ynorm2 = np.einsum("ij,ij->j", B, factors.gram_solve(B))
    S, report = solve_l1_quad_gram(
        factors.Q, B, ynorm2, hp.gamma1, tol=hp.inner_tol,
        max_iter=hp.inner_max_iter, X0=warm,
    )
    if not report.converged and S0 is not None:
        # rare: redo from the previous block value, which always keeps
        # the outer objective monotone even without full convergence
        S, report = solve_l1_quad_gram(
            factors.Q, B, ynorm2, hp.gamma1, tol=hp.inner_tol,
            max_iter=hp.inner_max_iter, X0=S0,
        )
    return S, report


def update_landmarks(S, R, G: TreeGraph, hp: Hyperparams, C0=None):
    """Block minimization in C via N_s certified l1-quadratic solves.

    Factors beta*P + lambda*Lambda = V V' (P the tree Laplacian, Lambda
    the diagonal of assignment column sums); each source row of C is an
    independent K-dimensional problem sharing the factor.
    """
    colsum = R.sum(axis=0)
    M = hp.beta * G.laplacian() + hp.lam * np.diag(colsum)
    try:
        V = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "beta*P + lambda*Lambda is not positive definite; "
            "assignment column sums must be strictly positive"
        ) from exc
    # Gram form of the V'-transformed problem: V V' = M and the
    # per-row target is lambda V^-1 (R'S'), whose squared norms come
    # from one triangular solve against the factor
    rhs = hp.lam * np.ascontiguousarray(R.T @ S.T)
    W = scipy.linalg.cho_solve((V, True), rhs, check_finite=False)
    ynorm2 = np.einsum("ij,ij->j", rhs, W)
    Ct, report = solve_l1_quad_gram(
        np.ascontiguousarray((M + M.T) * 0.5), rhs, ynorm2, hp.gamma2,
        tol=hp.inner_tol, max_iter=hp.inner_max_iter,
        X0=None if C0 is None else np.ascontiguousarray(C0.T),
    )
    return Ct.T, report


def update_tree(C: np.ndarray) -> TreeGraph:
    """Minimum spanning tree over landmarks with edge cost |c_k - c_k'|^2.

    Kruskal with union-find; cost ties are broken by lexicographic
    (k, k') order, so the result is deterministic.
    """
    K = C.shape[1]
    if K == 1:
        return TreeGraph(1, np.zeros((0, 2), dtype=np.int64))
    d2 = _sqdist_columns(C, C)
    candidates = sorted(
        (float(d2[a, b]), a, b) for a in range(K) for b in range(a + 1, K)
    )
    parent = list(range(K))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    chosen = []
    for _, a, b in candidates:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.append((a, b))
            if len(chosen) == K - 1:
                break
    return TreeGraph(K, np.array(sorted(chosen), dtype=np.int64))


def tree_cost(C: np.ndarray, tree: TreeGraph) -> float:
    """Sum of squared landmark distances over the tree's edges."""
    if not tree.edges.size:
        return 0.0
    diff = C[:, tree.edges[:, 0]] - C[:, tree.edges[:, 1]]
    return float(np.sum(diff * diff))


def kmeans_init(S: np.ndarray, K: int, seed: int) -> np.ndarray:
    """Lloyd's algorithm on the columns of S with farthest-point seeding.

    The first center is a seeded random column; each further center is
    the column farthest from the already-chosen set.  Empty clusters
    are re-seeded to the point farthest from its current center.
    Runs at most 50 iterations.  Returns an N_s x K landmark matrix.
    """
    n_t = S.shape[1]
    if not 1 <= K <= n_t:
        raise ValueError("K must be in [1, N_t]")
    pts = S.T
    rng = np.random.default_rng(seed)
    centers = np.empty((K, S.shape[0]))
    centers[0] = pts[int(rng.integers(n_t))]
    if K > 1:
        mind = _sqdist_columns(S, centers[0:1].T)[:, 0]
        for k in range(1, K):
            centers[k] = pts[int(np.argmax(mind))]
            mind = np.minimum(mind, _sqdist_columns(S, centers[k:k + 1].T)[:, 0])
    assign = None
    for _ in range(50):
        d2 = _sqdist_columns(S, centers.T)
        new_assign = np.argmin(d2, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in range(K):
            members = assign == k
            if np.any(members):
                centers[k] = pts[members].mean(axis=0)
            else:
                own = d2[np.arange(n_t), assign]
                far = int(np.argmax(own))
                centers[k] = pts[far]
                assign[far] = k
    return centers.T


def denoised_signal(R: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Assignment-weighted landmark averages, one column per time point."""
    validate_assignment(R)
    return C @ R.T


def fit(X: np.ndarray, L, hp: Hyperparams) -> ModelState:
    """Alternating convex search for the landmark/tree model.

    Initializes S by a plain l1 inverse solve, C by k-means on the
    initial columns, then G and R by their block updates; cycles
    S -> C -> G -> R until the objective change falls below
    outer_tol * (1 + |h|) or max_outer_iter cycles.  Inner solver
    non-convergence is recorded as a warning, never raised.
    """
    composed = None
    if isinstance(L, LeadField):
        composed = L.composed_with_basis
        L = L.matrix
    L = np.ascontiguousarray(L, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or L.ndim != 2 or X.shape[0] != L.shape[0]:
        raise ValueError("X must be N_c x N_t and L N_c x N_s")
    if hp.K > X.shape[1]:
        raise ValueError("K must not exceed the number of time points")

    warnings: list[str] = []
    max_kkt = 0.0

    def note(tag, report):
        nonlocal max_kkt
        max_kkt = max(max_kkt, report.kkt_residual)
        if not report.converged:
            warnings.append(
                f"{tag}: inner solver stopped at KKT residual "
                f"{report.kkt_residual:.3e} after {report.iterations} sweeps"
            )

    S, rep = solve_l1_quad_batch(
        L, X, hp.gamma1, tol=hp.inner_tol, max_iter=hp.inner_max_iter
    )
    note("init", rep)
    C = kmeans_init(S, hp.K, hp.seed)
    G = update_tree(C)
    R = update_assignments(S, C, hp.alpha)
    trace = [_objective(S, C, G, R, X, L, hp)]

    factors = SourceFactors(L, hp.lam)
    converged = False
    n_iter = 0
    for n_iter in range(1, hp.max_outer_iter + 1):
        S, rep = update_sources(X, L, C, R, hp, S0=S, factors=factors)
        note(f"update_sources[{n_iter}]", rep)
        C, rep = update_landmarks(S, R, G, hp, C0=C)
        note(f"update_landmarks[{n_iter}]", rep)
        G = update_tree(C)
        R = update_assignments(S, C, hp.alpha)
        h = _objective(S, C, G, R, X, L, hp)
        prev = trace[-1]
        trace.append(h)
        if abs(prev - h) <= hp.outer_tol * (1.0 + abs(prev)):
            converged = True
            break

    return ModelState(
        S=S, C=C, G=G, R=R, objective_trace=trace, converged=converged,
        n_iter=n_iter, max_inner_kkt=max_kkt, solver_warnings=warnings,
        composed_with_basis=composed,
    )


def to_source_space(state: ModelState, basis: SpatialBasis) -> np.ndarray:
    """Map the basis-space estimate back: returns psi @ S."""
    if state.composed_with_basis is False:
        raise ValueError("fit ran on an uncomposed lead field; S is already in source space")
    return apply_basis(basis, state.S)


def project_tree_pca(C: np.ndarray, G: TreeGraph, dims: int = 3):
    """Project landmarks onto their top principal components for plotting.

    Centers the landmark columns, eigendecomposes their K x K Gram
    matrix, and returns (K x dims coordinates, tree edge array).  Signs
    are fixed so each component's largest-magnitude loading is
    positive; components beyond the landmark rank are zero.
    """
    K = C.shape[1]
    if K < 2:
        raise ValueError("need at least two landmarks")
    Cc = C - C.mean(axis=1, keepdims=True)
    gram = Cc.T @ Cc
    vals, vecs = np.linalg.eigh((gram + gram.T) * 0.5)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    coords = np.zeros((K, dims))
    cutoff = max(vals[0], 0.0) * 1e-12
    for j in range(min(dims, K)):
        if vals[j] <= cutoff:
            break
        col = vecs[:, j] * np.sqrt(vals[j])
        lead = int(np.argmax(np.abs(col)))
        coords[:, j] = col if col[lead] >= 0 else -col
    return coords, np.array(G.edges, dtype=np.int64)


def save_state(dirpath, state: ModelState, comment: str | None = None) -> None:
    """Write S, C, R (matrix format), the tree edge list, and the trace CSV."""
    os.makedirs(dirpath, exist_ok=True)
    save_matrix(os.path.join(dirpath, "S.txt"), state.S, comment)
    save_matrix(os.path.join(dirpath, "C.txt"), state.C, comment)
    save_matrix(os.path.join(dirpath, "R.txt"), state.R, comment)
    with open(os.path.join(dirpath, "tree.txt"), "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"K {state.G.n_vertices}\n")
        for a, b in state.G.edges:
            fh.write(f"{a} {b}\n")
    with open(os.path.join(dirpath, "trace.csv"), "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["iteration", "h"])
        for i, h in enumerate(state.objective_trace):
            writer.writerow([i, repr(float(h))])


def load_tree(path) -> TreeGraph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("K "):
        raise ValueError(f"{path}: expected 'K <count>' header")
    k = int(lines[0].split()[1])
    edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    return TreeGraph(k, np.array(edges, dtype=np.int64).reshape(-1, 2))


def load_state(dirpath) -> ModelState:
    """Reload a state written by save_state (flags are not persisted)."""
    S = load_matrix(os.path.join(dirpath, "S.txt"))
    C = load_matrix(os.path.join(dirpath, "C.txt"))
    R = load_matrix(os.path.join(dirpath, "R.txt"))
    G = load_tree(os.path.join(dirpath, "tree.txt"))
    trace = []
    with open(os.path.join(dirpath, "trace.csv")) as fh:
        rows = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    for row in csv.reader(rows[1:]):
        trace.append(float(row[1]))
    return ModelState(S=S, C=C, G=G, R=R, objective_trace=trace)
