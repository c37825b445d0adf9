"""Independent oracle implementations used by the test suite.

These deliberately use different algorithms than the library code:
Floyd-Warshall instead of Dijkstra, exhaustive sign-pattern
enumeration instead of coordinate descent, Pruefer-sequence tree
enumeration instead of Kruskal, and projected gradient descent on the
simplex instead of the closed-form softmax.
"""

import itertools

import numpy as np


def floyd_warshall(mesh):
    """All-pairs shortest paths over the mesh edges; inf when disconnected.

    Note: Floyd-Warshall nests its floating-point sums differently from
    a source-rooted traversal, so its values can differ from Dijkstra's
    by a few ulps; compare with a sub-nanometer tolerance.
    """
    n = mesh.n_vertices
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    for (a, b), w in zip(mesh.edges, mesh.edge_lengths):
        D[a, b] = min(D[a, b], w)
        D[b, a] = min(D[b, a], w)
    for k in range(n):
        D = np.minimum(D, D[:, k, None] + D[None, k, :])
    return D


def relaxation_apsp(mesh):
    """All-pairs shortest paths as the fixpoint of edge relaxation.

    Repeatedly applies d[v] <- min(d[v], fl(d[u] + w)) until nothing
    improves.  Because float addition is monotone, this fixpoint is the
    exact minimum of left-nested float sums over all paths, which is
    bitwise what source-rooted Dijkstra computes; equality checks
    against it need no tolerance.
    """
    n = mesh.n_vertices
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    changed = True
    while changed:
        changed = False
        for (a, b), w in zip(mesh.edges, mesh.edge_lengths):
            nd = D[:, a] + w
            mask = nd < D[:, b]
            if mask.any():
                D[mask, b] = nd[mask]
                changed = True
            nd = D[:, b] + w
            mask = nd < D[:, a]
            if mask.any():
                D[mask, a] = nd[mask]
                changed = True
    return D


def lasso_sign_enumeration(A, y, gamma):
    """Exact l1-quadratic optimum by trying every sign pattern.

    For each pattern in {-1, 0, +1}^n, solves the restricted smooth
    problem and keeps the best sign-feasible candidate.  Exponential in
    n; only for tiny instances.
    """
    n = A.shape[1]
    best_obj = np.inf
    best_x = np.zeros(n)
    for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=n):
        sigma = np.array(pattern)
        active = sigma != 0
        x = np.zeros(n)
        if np.any(active):
            Aa = A[:, active]
            rhs = Aa.T @ y - 0.5 * gamma * sigma[active]
            try:
                xa = np.linalg.solve(Aa.T @ Aa, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(xa * sigma[active] < 0):
                continue
            x[active] = xa
        obj = float(np.sum((A @ x - y) ** 2) + gamma * np.abs(x).sum())
        if obj < best_obj:
            best_obj = obj
            best_x = x
    return best_x, best_obj


def simplex_project(v):
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplex_entropy_pgd(d2_row, alpha, iters=20000, floor=1e-15):
    """Projected gradient descent for min_r sum r*d2 + alpha*r*log(r), r in simplex."""
    k = d2_row.shape[0]
    r = np.full(k, 1.0 / k)
    step = 0.5 / (alpha / floor ** 0 + np.max(d2_row) + alpha * 10)  # conservative
    step = 1.0 / (np.max(d2_row) + 10 * alpha + 10)
    for _ in range(iters):
        grad = d2_row + alpha * (1.0 + np.log(np.maximum(r, floor)))
        r = simplex_project(r - step * grad)
        r = np.maximum(r, 0.0)
    return r / r.sum()


def kde_assignment_energy(S, C, R, alpha):
    """Loop-based evaluation of sum_ik r_ik |s_i - c_k|^2 + alpha r log r."""
    total = 0.0
    for i in range(S.shape[1]):
        for k in range(C.shape[1]):
            d2 = float(np.sum((S[:, i] - C[:, k]) ** 2))
            r = R[i, k]
            total += r * d2 + alpha * r * np.log(r)
    return total


def pruefer_trees(k):
    """Yield the edge set of every labeled tree on k vertices (k >= 2)."""
    if k == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(k), repeat=k - 2):
        degree = [1] * k
        for v in seq:
            degree[v] += 1
        edges = []
        seq_list = list(seq)
        leaves = sorted(v for v in range(k) if degree[v] == 1)
        for v in seq_list:
            leaf = leaves.pop(0)
            edges.append((min(leaf, v), max(leaf, v)))
            degree[v] -= 1
            if degree[v] == 1:
                # insert keeping the leaf pool sorted
                import bisect

                bisect.insort(leaves, v)
        edges.append((leaves[0], leaves[1]))
        yield edges


def tree_cost(C, edges):
    """Canonical tree cost: squared landmark distances summed in sorted edge order."""
    total = 0.0
    for a, b in sorted(edges):
        diff = C[:, a] - C[:, b]
        total += float(diff @ diff)
    return total


def min_spanning_tree_bruteforce(C):
    """Minimum-cost spanning tree by enumerating all Pruefer trees."""
    k = C.shape[1]
    best = None
    best_cost = np.inf
    for edges in pruefer_trees(k):
        cost = tree_cost(C, edges)
        if cost < best_cost:
            best_cost = cost
            best = sorted(edges)
    return best, best_cost
